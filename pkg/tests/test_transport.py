import numpy as np
import pytest

from vortexlab.errors import ConfigError
from vortexlab.meanfield import initial_density
from vortexlab.transport import (
    EXACT_LIMIT,
    quantize_grid,
    torus_cost_matrix,
    wasserstein2_torus,
)


def _cloud(n, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5, 0.5, size=(n, 2))


def test_cost_matrix_uses_torus_metric():
    x = np.array([[0.45, 0.0]])
    y = np.array([[-0.45, 0.0]])
    assert torus_cost_matrix(x, y)[0, 0] == pytest.approx(0.01)


def test_identity_and_symmetry():
    x = _cloud(60, 0)
    y = _cloud(60, 1)
    assert wasserstein2_torus(x, x, method="exact") == 0.0
    assert wasserstein2_torus(x, y, method="exact") == pytest.approx(
        wasserstein2_torus(y, x, method="exact")
    )


def test_triangle_inequality():
    x, y, z = _cloud(80, 2), _cloud(80, 3), _cloud(80, 4)
    dxy = wasserstein2_torus(x, y, method="exact")
    dyz = wasserstein2_torus(y, z, method="exact")
    dxz = wasserstein2_torus(x, z, method="exact")
    assert dxz <= dxy + dyz + 1e-12


def test_translation_oracle():
    # translating a cloud by a small shift moves W2 by exactly that shift
    x = _cloud(400, 5)
    shift = np.array([0.02, -0.015])
    y = x + shift
    y -= np.rint(y)  # wrap
    d = wasserstein2_torus(x, y, method="exact")
    assert d == pytest.approx(np.hypot(*shift), rel=1e-10)


def test_lp_matches_assignment_on_equal_weights():
    x, y = _cloud(50, 6), _cloud(50, 7)
    w = np.full(50, 1 / 50)
    da = wasserstein2_torus(x, y, method="exact")
    dl = wasserstein2_torus(x, y, w, w, method="exact")
    assert dl == pytest.approx(da, abs=1e-9)


def test_entropic_close_to_exact():
    x, y = _cloud(300, 8), _cloud(300, 9)
    de = wasserstein2_torus(x, y, method="exact")
    ds = wasserstein2_torus(x, y, method="entropic")
    assert abs(ds - de) / de < 0.35  # known bias of the regularized divergence


def test_exact_limit_enforced():
    x = _cloud(EXACT_LIMIT + 1, 10)
    with pytest.raises(ConfigError):
        wasserstein2_torus(x, x, method="exact")
    # auto silently switches method instead
    assert wasserstein2_torus(x, x, method="auto") == pytest.approx(0.0, abs=1e-6)


def test_weight_validation():
    x = _cloud(20, 11)
    bad = np.full(20, 0.1)
    with pytest.raises(ConfigError):
        wasserstein2_torus(x, x, bad, np.full(20, 1 / 20), method="exact")


def test_quantize_grid_weights_and_support():
    rho = initial_density("default").on_grid(128)
    pts, w = quantize_grid(rho, 32)
    assert pts.shape == (1024, 2) and w.shape == (1024,)
    assert w.sum() == pytest.approx(1.0)
    assert np.all(w >= 0)
    # weights track the density: heaviest cell sits where cos cos peaks
    imax = np.argmax(w)
    peak = np.cos(2 * np.pi * pts[imax, 0]) * np.cos(2 * np.pi * pts[imax, 1])
    assert peak > 0.9


def test_quantize_grid_non_divisor():
    rho = initial_density("default").on_grid(64)
    pts, w = quantize_grid(rho, 40)
    assert pts.shape == (1600, 2)
    assert w.sum() == pytest.approx(1.0)


def test_sample_to_density_distance_shrinks_with_n():
    from vortexlab.particles import sample_initial

    rho = initial_density("default").on_grid(128)
    pts, w = quantize_grid(rho, 30)
    ds = []
    for n in (100, 1600):
        x = sample_initial(initial_density("default"), n, 2024 + n).positions
        ds.append(wasserstein2_torus(x, pts, np.full(n, 1 / n), w, method="exact"))
    assert ds[1] < ds[0]
