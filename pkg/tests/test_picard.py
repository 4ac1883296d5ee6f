import numpy as np
import pytest

from vortexlab.errors import NonContractionError
from vortexlab.meanfield import initial_density, solve_meanfield
from vortexlab.picard import heat_kernel_fourier, heat_kernel_torus, solve_picard


def test_heat_kernel_poisson_summation():
    pts = np.array([[0.0, 0.0], [0.3, 0.1], [-0.5, 0.25]])
    for t in (0.01, 0.1, 1.0):
        a = heat_kernel_torus(t, pts)
        b = heat_kernel_fourier(t, pts)
        assert np.abs(a - b).max() < 1e-12


def test_heat_kernel_mass_one():
    n = 128
    from vortexlab.torus import grid_mesh

    x1, x2 = grid_mesh(n)
    pts = np.stack([x1.ravel(), x2.ravel()], axis=-1)
    for t in (0.05, 0.5):
        mass = heat_kernel_torus(t, pts).sum() / n ** 2
        assert abs(mass - 1.0) < 1e-12


def test_heat_kernel_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        heat_kernel_torus(0.0, np.zeros(2))


def test_zeroth_iterate_is_heat_flow():
    # one Picard sweep starting from zero velocity reproduces the heat
    # semigroup; the stationary-shape initial data makes this exact in form
    rho0 = initial_density("default").on_grid(64)
    final, dists = solve_picard(rho0, 0.1, 1, dt=5e-3, check_contraction=False)
    from vortexlab.torus import grid_mesh

    x1, x2 = grid_mesh(64)
    exact = 1 + 0.5 * np.exp(-8 * np.pi ** 2 * 0.1) * np.cos(2 * np.pi * x1) * np.cos(
        2 * np.pi * x2
    )
    assert np.abs(final.values - exact).max() < 1e-6


def test_picard_matches_pseudospectral():
    rho0 = initial_density("mixed").on_grid(64)
    final, dists = solve_picard(rho0, 0.2, 10, dt=5e-3)
    ref = solve_meanfield(initial_density("mixed"), 0.2, 5e-4, 64, [0.2])[0][0]
    assert np.abs(final.values - ref.values).max() < 1e-3
    ratios = [b / a for a, b in zip(dists, dists[1:]) if a > 1e-15]
    assert all(r <= 0.9 for r in ratios[1:])


def test_non_contraction_refused():
    rho0 = initial_density("mixed").on_grid(64)
    with pytest.raises(NonContractionError):
        # an absurdly tight contraction bound must trip the guard
        solve_picard(rho0, 0.2, 10, dt=5e-3, contraction_bound=1e-9)
