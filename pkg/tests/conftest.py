import numpy as np
import pytest

from lpmink.geometry import WulffError, wulff_shape


def random_polygon(rng, k=12, spread=(0.6, 1.4), origin_interior=True):
    """Seeded random convex polygon as a Wulff shape with k proposed facets."""
    while True:
        ang = np.sort(rng.uniform(0.0, 2.0 * np.pi, k))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2.0 * np.pi]]))
        if gaps.max() > np.pi - 0.2:
            continue
        normals = np.column_stack([np.cos(ang), np.sin(ang)])
        offsets = rng.uniform(spread[0], spread[1], k)
        try:
            body = wulff_shape(2, normals, offsets)
        except WulffError:
            continue
        if not origin_interior or body.support_values.min() > 0.05:
            return body


def random_polytope(rng, k=40, spread=(0.8, 1.3), origin_interior=True):
    """Seeded random 3-dimensional convex body from k random halfspaces."""
    while True:
        normals = rng.normal(size=(k, 3))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = rng.uniform(spread[0], spread[1], k)
        try:
            body = wulff_shape(3, normals, offsets)
        except WulffError:
            continue
        if not origin_interior or body.support_values.min() > 0.05:
            return body


def dihedral_group(order=4):
    """The symmetry group of the square (order 2*order) as matrices."""
    mats = []
    for k in range(order):
        c, s = np.cos(2 * np.pi * k / order), np.sin(2 * np.pi * k / order)
        R = np.array([[c, -s], [s, c]])
        F = np.array([[1.0, 0.0], [0.0, -1.0]])
        mats.extend([R, R @ F])
    return mats


@pytest.fixture(scope="session")
def grid2():
    from lpmink.sphere import build_grid
    return build_grid(2, 256)


@pytest.fixture(scope="session")
def grid3():
    from lpmink.sphere import build_grid
    return build_grid(3, 500)
