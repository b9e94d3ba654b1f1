# Ball recovery
# =============
#
# The simplest well-posed instance: a constant density c on the sphere is
# the Lp surface area measure of the ball of radius c^(1/(n-p)), because
# S_{rB,p} scales as r^(n-p) times the uniform measure. The solver should
# therefore return a body whose support values all sit at that radius.

import numpy as np

from lpmink.measures import density_measure
from lpmink.solver import solve
from lpmink.sphere import build_grid

for n, resolution in ((2, 256), (3, 500)):
    for p in (0.5, -1.0):
        c = 2.0 ** (n - p)  # chosen so the answer is the ball of radius 2
        grid = build_grid(n, resolution)
        mu = density_measure(lambda U: np.full(len(U), c), grid)

        M, report = solve(mu, p)

        target = c ** (1.0 / (n - p))
        dev = np.max(np.abs(M.support_values - target)) / target
        print("n=%d p=%+.1f: radius target %.3f, max support deviation %.2e, "
              "lambda=%.4f, stages=%d, residual_l1=%.2e"
              % (n, p, target, dev, report.lam, len(report.stages),
                 report.residual_l1))

# The multiplier route matters: the minimizer itself is volume-normalized,
# and only the rescale by (lambda0/|p|)^(1/(n-p)) restores the scale of the
# prescribed measure.
