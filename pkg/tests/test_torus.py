import numpy as np
from hypothesis import given, settings, strategies as st

from vortexlab.torus import displacement, distance, grid_mesh, grid_points, wrap

coords = st.floats(-10, 10, allow_nan=False)


@given(st.tuples(coords, coords))
@settings(max_examples=50, deadline=None)
def test_wrap_range_and_idempotence(xy):
    x = np.array(xy)
    w = wrap(x)
    assert np.all(w >= -0.5) and np.all(w < 0.5)
    assert np.allclose(wrap(w), w)


@given(st.tuples(coords, coords), st.integers(-3, 3), st.integers(-3, 3))
@settings(max_examples=50, deadline=None)
def test_wrap_periodic(xy, k1, k2):
    x = np.array(xy)
    assert np.allclose(wrap(x + np.array([k1, k2], dtype=float)), wrap(x), atol=1e-9)


@given(st.tuples(coords, coords), st.tuples(coords, coords))
@settings(max_examples=50, deadline=None)
def test_distance_symmetry_and_bound(a, b):
    x, y = np.array(a), np.array(b)
    d = distance(x, y)
    assert d == distance(y, x)
    assert d <= np.sqrt(0.5) + 1e-12  # half-diagonal of the unit cell


def test_displacement_antisymmetric():
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.5, 0.5, (20, 2))
    y = rng.uniform(-0.5, 0.5, (20, 2))
    assert np.allclose(displacement(x, y), -displacement(y, x))


def test_grid_points_layout():
    g = grid_points(8)
    assert g[0] == -0.5
    assert np.allclose(np.diff(g), 1 / 8)
    x1, x2 = grid_mesh(4)
    assert x1.shape == (4, 4)
    # ij indexing: first axis varies x1
    assert np.allclose(x1[:, 0], grid_points(4))
    assert np.allclose(x2[0, :], grid_points(4))
