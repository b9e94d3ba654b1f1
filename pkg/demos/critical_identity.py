# The critical exponent p = -n
# ============================
#
# At p = -n no existence theorem is available, but smooth bodies satisfy an
# exact integral identity: the moment matrix of u_i h^p d_j f_p equals
# -(n+p) V(K) times the identity, which degenerates to the zero matrix at
# p = -n. Ellipsoids give every quantity in closed form, so the identity
# doubles as a quadrature benchmark.

import numpy as np

from lpmink.identities import ellipsoid_model, fp_identity_matrix
from lpmink.sphere import build_grid

grid = build_grid(2, 720)
ellipse = ellipsoid_model([1.5, 1.0])
print("ellipse (1.5, 1.0): volume %.6f" % ellipse.volume)

for p in (0.5, -1.0, -2.0):
    M, target, dev = fp_identity_matrix(ellipse, p, grid)
    print("p=%+.1f: diag (%.6f, %.6f), target %.6f, max deviation %.1e"
          % (p, M[0, 0], M[1, 1], target[0, 0], np.abs(dev).max()))

# p = -n is the critical case: -(n+p) vanishes and the matrix is zero.
M, target, dev = fp_identity_matrix(ellipse, -2.0, grid)
print("critical case p=-2: ||M|| = %.2e (exactly zero in the limit)"
      % np.abs(M).max())

# The identity is translation invariant as long as the origin stays
# interior; what does break it is inconsistent data, e.g. recomputing the
# curvature function from a shifted support. fp_identity_matrix evaluates
# whatever evaluators the model provides, so it serves as that regression
# check.
shifted = ellipsoid_model([1.5, 1.0], center=[0.45, 0.0])
M, target, dev = fp_identity_matrix(shifted, -1.0, grid)
print("shifted ellipse, consistent data: max deviation %.1e (still exact)"
      % np.abs(dev).max())
