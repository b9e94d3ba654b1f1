"""Computational convex geometry for halfspace-intersection bodies.

Bodies are built as Wulff shapes (intersections of halfspaces <x,u_i> <= h_i)
in dimension 2 or 3. Vertex enumeration goes through polarity: translate by
the Chebyshev center, dualize, take the convex hull of the dual points, and
read the primal vertices off the dual facets. Facet areas, volume, centroid
and support values are derived from the enumerated vertices.
"""

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError, cKDTree

from lpmink.sphere import unit_ball_volume


class GeometryError(ValueError):
    """Invalid body data or violated geometric invariant."""


class WulffError(GeometryError):
    """Unbounded, empty, or numerically degenerate halfspace intersection."""


#: relative tolerance for merging duplicate vertices from coplanar dual facets
VERTEX_MERGE_TOL = 1e-9


def chebyshev_center(normals, offsets):
    """Largest inscribed ball center of {x : <x, u_i> <= h_i}.

    Returns (center, radius). Raises WulffError when the feasible set is
    empty, has empty interior, or is detectably unbounded.
    """
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    m, n = normals.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([normals, np.ones((m, 1))])
    bounds = [(None, None)] * n + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=offsets, bounds=bounds, method="highs")
    if res.status == 2:
        raise WulffError("empty halfspace intersection")
    if res.status == 3:
        raise WulffError("unbounded halfspace intersection")
    if not res.success:
        raise WulffError("Chebyshev LP failed: %s" % res.message)
    center, radius = res.x[:n], res.x[n]
    scale = max(1.0, float(np.max(np.abs(offsets))))
    if radius <= 1e-12 * scale:
        raise WulffError("halfspace intersection has empty interior")
    return center, float(radius)


def _dedup_points(points, tol):
    """Merge points closer than tol, keeping first occurrences."""
    tree = cKDTree(points)
    keep = np.ones(len(points), dtype=bool)
    for i, j in tree.query_pairs(r=tol):
        keep[max(i, j)] = False
    return points[keep]


def _polygon_properties(vertices):
    """Area, centroid and CCW-ordered vertices of a planar convex polygon."""
    center = vertices.mean(axis=0)
    order = np.argsort(np.arctan2(vertices[:, 1] - center[1], vertices[:, 0] - center[0]))
    v = vertices[order]
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area <= 0:
        raise WulffError("degenerate polygon (nonpositive area)")
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cy]), v


def _match_facets_2d(vertices_ccw, normals):
    """Accumulate polygon edge lengths onto the input normals.

    Hull facets match their input normal to machine precision for planar
    facets; a facet whose constraints were merged as coplanar goes to the
    first (lowest-index) nearest normal, which `argmax` provides.
    """
    edges = np.roll(vertices_ccw, -1, axis=0) - vertices_ccw
    lengths = np.linalg.norm(edges, axis=1)
    ok = lengths > 0
    outward = np.column_stack([edges[ok, 1], -edges[ok, 0]]) / lengths[ok, None]
    match = np.argmax(outward @ normals.T, axis=1)
    areas = np.zeros(len(normals))
    np.add.at(areas, match, lengths[ok])
    return areas


def _match_facets_3d(vertices, normals):
    """Hull the primal vertices; accumulate triangle areas onto input normals.

    Returns (facet_areas, volume, centroid, hull).
    """
    hull = ConvexHull(vertices)
    tri = vertices[hull.simplices]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    cross = np.cross(b - a, c - a)
    tri_areas = 0.5 * np.linalg.norm(cross, axis=1)
    tri_normals = hull.equations[:, :3]
    match = np.argmax(tri_normals @ normals.T, axis=1)
    areas = np.zeros(len(normals))
    np.add.at(areas, match[tri_areas > 0], tri_areas[tri_areas > 0])
    # centroid from tetra fan with apex at the vertex mean, each tetra signed
    # consistently with the outward facet normal
    ref = vertices.mean(axis=0)
    sign = np.where(np.einsum("ij,ij->i", cross, tri_normals) >= 0, 1.0, -1.0)
    tets = sign * np.einsum("ij,ij->i", a - ref, np.cross(b - ref, c - ref)) / 6.0
    cent = ((a + b + c + ref) / 4.0 * tets[:, None]).sum(axis=0)
    vol = hull.volume
    return areas, vol, cent / vol, hull


class Body:
    """Full-dimensional convex body as a halfspace intersection.

    Attributes
    ----------
    dim : int
    normals : ndarray, shape (m, dim)
        Unit outer normals of the proposed halfspaces.
    offsets : ndarray, shape (m,)
        Proposed support values h_i (the body satisfies <x,u_i> <= h_i).
    vertices : ndarray, shape (k, dim)
    facet_areas : ndarray, shape (m,)
        (dim-1)-measure of the facet with outer normal u_i; zero when the
        i-th constraint is inactive.
    volume : float
    centroid : ndarray, shape (dim,)
    support_values : ndarray, shape (m,)
        True support h(u_i) of the intersection; always <= offsets.
    """

    def __init__(self, dim, normals, offsets, vertices, facet_areas, volume,
                 centroid, support_values, validate=True):
        self.dim = dim
        self.normals = normals
        self.offsets = offsets
        self.vertices = vertices
        self.facet_areas = facet_areas
        self.volume = volume
        self.centroid = centroid
        self.support_values = support_values
        if validate:
            self._check_invariants()

    def _check_invariants(self):
        if not self.volume > 0:
            raise GeometryError("body volume must be positive")
        scale = max(1.0, float(np.max(np.abs(self.support_values))))
        if np.any(self.support_values > self.offsets + 1e-10 * scale):
            raise GeometryError("support values exceed offsets")
        total_area = self.facet_areas.sum()
        closure = np.linalg.norm(self.facet_areas @ self.normals)
        if closure > 1e-8 * total_area:
            raise GeometryError("surface area measure barycenter is not zero")
        vol_id = abs(self.volume - (self.support_values @ self.facet_areas) / self.dim)
        if vol_id > 1e-8 * self.volume:
            raise GeometryError("volume identity V = (1/n) sum h S violated")
        self._check_centroid_reflection()

    def _check_centroid_reflection(self, samples=64, tol=1e-9):
        # x in K implies (-1/n)(x - centroid) + centroid in K
        pts = self.vertices
        if len(pts) > samples:
            idx = np.linspace(0, len(pts) - 1, samples).astype(int)
            pts = pts[idx]
        reflected = (-1.0 / self.dim) * (pts - self.centroid) + self.centroid
        slack = self.support_values[None, :] - reflected @ self.normals.T
        scale = max(1.0, float(np.max(np.abs(self.support_values))))
        if slack.min() < -tol * scale:
            raise GeometryError("centroid reflection point escapes the body")

    def support(self, u):
        """Support function h(u) = max over vertices of <x, u>."""
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            return float(np.max(self.vertices @ u))
        return np.max(self.vertices @ u.T, axis=0)

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        scale = max(1.0, float(np.max(np.abs(self.support_values))))
        return bool(np.all(self.normals @ x <= self.support_values + tol * scale))

    def interior_gap(self, x):
        """min_i (h(u_i) - <u_i, x>); positive iff x lies in the interior."""
        return float(np.min(self.support_values - self.normals @ np.asarray(x)))

    def scaled(self, lam):
        """The body lam * K for lam > 0 (all cached fields rescale exactly)."""
        if lam <= 0:
            raise GeometryError("scale factor must be positive")
        return Body(self.dim, self.normals, self.offsets * lam,
                    self.vertices * lam, self.facet_areas * lam ** (self.dim - 1),
                    self.volume * lam ** self.dim, self.centroid * lam,
                    self.support_values * lam, validate=False)

    def translated(self, t):
        """The body K + t."""
        t = np.asarray(t, dtype=float)
        shift = self.normals @ t
        return Body(self.dim, self.normals, self.offsets + shift,
                    self.vertices + t, self.facet_areas,
                    self.volume, self.centroid + t,
                    self.support_values + shift, validate=False)

    def to_dict(self):
        return {
            "dim": self.dim,
            "normals": self.normals.tolist(),
            "offsets": self.offsets.tolist(),
            "vertices": self.vertices.tolist(),
            "facet_areas": self.facet_areas.tolist(),
            "volume": self.volume,
            "centroid": self.centroid.tolist(),
            "support_values": self.support_values.tolist(),
        }


def wulff_shape(dim, normals, offsets, validate=True, interior_hint=None):
    """Intersect the halfspaces {<x, u_i> <= h_i} and enumerate the result.

    The normals must be unit vectors that positively span R^dim with offsets
    admitting a bounded, full-dimensional intersection. Inactive constraints
    are kept in the output with zero facet area. ``validate=False`` skips
    the construction-time invariant checks (used by solver inner loops;
    every body handed back to callers is validated). ``interior_hint``
    short-circuits the Chebyshev LP when it is comfortably feasible.
    """
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    if normals.ndim != 2 or normals.shape[1] != dim:
        raise GeometryError("normals must be an (m, %d) array" % dim)
    if dim not in (2, 3):
        raise GeometryError("only dimensions 2 and 3 are supported")
    norms = np.linalg.norm(normals, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise GeometryError("normals must be unit vectors")
    if len(offsets) != len(normals):
        raise GeometryError("offsets must align with normals")

    center = None
    if interior_hint is not None:
        hint = np.asarray(interior_hint, dtype=float)
        gap = float(np.min(offsets - normals @ hint))
        if gap > 1e-6 * max(1.0, float(np.max(np.abs(offsets)))):
            center = hint
    if center is None:
        center, radius = chebyshev_center(normals, offsets)
    shifted = offsets - normals @ center  # all >= radius > 0
    dual_points = normals / shifted[:, None]
    try:
        dual_hull = ConvexHull(dual_points)
    except QhullError as exc:
        raise WulffError("degenerate dual hull: %s" % exc) from exc

    # origin must be interior to the dual hull, else the primal is unbounded
    dual_offsets = dual_hull.equations[:, -1]
    if np.max(dual_offsets) > -1e-12:
        raise WulffError("unbounded halfspace intersection (dual origin escapes)")

    # each dual facet {<a,y> = -b} is a primal vertex a / (-b)
    raw_vertices = dual_hull.equations[:, :-1] / (-dual_offsets[:, None])
    scale = max(1.0, float(np.max(np.abs(raw_vertices))))
    vertices = _dedup_points(raw_vertices, VERTEX_MERGE_TOL * scale) + center

    if dim == 2:
        if len(vertices) < 3:
            raise WulffError("degenerate intersection (fewer than 3 vertices)")
        volume, centroid, ccw = _polygon_properties(vertices)
        facet_areas = _match_facets_2d(ccw, normals)
    else:
        if len(vertices) < 4:
            raise WulffError("degenerate intersection (fewer than 4 vertices)")
        try:
            facet_areas, volume, centroid, _ = _match_facets_3d(vertices, normals)
        except QhullError as exc:
            raise WulffError("degenerate primal hull: %s" % exc) from exc

    support_values = np.max(vertices @ normals.T, axis=0)
    return Body(dim, normals, offsets.copy(), vertices, facet_areas,
                float(volume), centroid, support_values, validate=validate)


def support(body, u):
    """Support function of the body in direction u."""
    return body.support(u)


def surface_area_measure(body):
    """Per-normal facet (n-1)-areas, zero entries retained."""
    return [(body.normals[i].copy(), float(body.facet_areas[i]))
            for i in range(len(body.normals))]


def lp_surface_area_measure(body, p):
    """Masses h(u_i)^(1-p) * S_i of the Lp surface area measure.

    Requires p < 1 and the origin inside the closed body; a facet with zero
    support carries zero mass (the exponent 1-p is positive).
    """
    if p >= 1:
        raise GeometryError("lp_surface_area_measure requires p < 1")
    h = body.support_values
    if np.min(h) < -1e-10 * max(1.0, float(np.max(np.abs(h)))):
        raise GeometryError("origin lies strictly outside the body")
    hc = np.maximum(h, 0.0)
    masses = np.where(body.facet_areas > 0.0,
                      hc ** (1.0 - p) * body.facet_areas, 0.0)
    return [(body.normals[i].copy(), float(masses[i]))
            for i in range(len(body.normals))]


def lp_masses(body, p):
    """Array view of lp_surface_area_measure, aligned with body.normals."""
    return np.array([m for _, m in lp_surface_area_measure(body, p)])


def body_stats(body):
    """(volume, centroid, inradius, circumradius), radii about the centroid.

    Asserts the volume bound V <= (n+1) kappa_{n-1} rho R^{n-1}.
    """
    sigma = body.centroid
    rho = float(np.min(body.support_values - body.normals @ sigma))
    R = float(np.max(np.linalg.norm(body.vertices - sigma, axis=1)))
    n = body.dim
    bound = (n + 1) * unit_ball_volume(n - 1) * rho * R ** (n - 1)
    if body.volume > bound * (1 + 1e-9):
        raise GeometryError("volume bound V <= (n+1) kappa_{n-1} rho R^{n-1} violated")
    return body.volume, sigma, rho, R


def santalo_quadrature(body, grid):
    """Grid quadrature of (1/n) (h(u) - <centroid, u>)^(-n).

    For an exactly centered body this is the polar volume, bounded above by
    kappa_n^2 / V(K).
    """
    h = body.support(grid.nodes) - grid.nodes @ body.centroid
    if np.min(h) <= 0:
        raise GeometryError("centroid must be interior for the polar quadrature")
    return float(np.sum(h ** (-body.dim) * grid.weights) / body.dim)


def body_to_off(body):
    """OFF mesh text for a 3-dimensional body (triangulated facets)."""
    if body.dim != 3:
        raise GeometryError("OFF export is only available for n = 3")
    hull = ConvexHull(body.vertices)
    lines = ["OFF", "%d %d 0" % (len(body.vertices), len(hull.simplices))]
    for v in body.vertices:
        lines.append("%.17g %.17g %.17g" % tuple(v))
    for k, tri in enumerate(hull.simplices):
        a, b, c = body.vertices[tri]
        # orient triangles outward
        if np.dot(np.cross(b - a, c - a), hull.equations[k, :3]) < 0:
            tri = tri[::-1]
        lines.append("3 %d %d %d" % tuple(tri))
    return "\n".join(lines) + "\n"
