import numpy as np
import pytest

from vortexlab.errors import SolverInstabilityError, StepRejectedError
from vortexlab.meanfield import (
    GridField,
    derivative_norms,
    energy_identity_residual,
    initial_density,
    norm_report,
    solve_meanfield,
    step_imex,
    velocity_field,
)
from vortexlab.torus import grid_mesh


def test_initial_density_bounds():
    rho = initial_density("default")
    assert rho.lambda_bound == 2.0
    f = rho.on_grid(64)
    assert np.isclose(f.mean(), 1.0)
    lo, hi = f.minmax()
    assert lo >= 1 / rho.lambda_bound - 1e-12 and hi <= rho.lambda_bound + 1e-12


def test_velocity_is_divergence_free():
    rho = initial_density("mixed").on_grid(64)
    u1, u2 = velocity_field(rho)
    k1h = np.fft.fft2(u1)
    k2h = np.fft.fft2(u2)
    from vortexlab.kernels import wavevectors

    k1, k2 = wavevectors(64)
    div = np.real(np.fft.ifft2(2j * np.pi * (k1 * k1h + k2 * k2h)))
    assert np.abs(div).max() < 1e-10
    assert abs(u1.mean()) < 1e-14 and abs(u2.mean()) < 1e-14


def test_closed_form_decay_oracle():
    # the default cosine product is a stationary-shape solution: the
    # transport term vanishes identically, leaving pure heat decay
    rho = initial_density("default").on_grid(64)
    for _ in range(100):
        rho = step_imex(rho, 1e-3)
    x1, x2 = grid_mesh(64)
    exact = 1 + 0.5 * np.exp(-8 * np.pi ** 2 * 0.1) * np.cos(2 * np.pi * x1) * np.cos(
        2 * np.pi * x2
    )
    assert np.abs(rho.values - exact).max() < 1e-12


def test_step_second_order_in_time():
    def run(dt, nsteps):
        r = initial_density("mixed").on_grid(64)
        for _ in range(nsteps):
            r = step_imex(r, dt)
        return r.values

    ref = run(2.5e-4, 400)
    e1 = np.abs(run(2e-3, 50) - ref).max()
    e2 = np.abs(run(1e-3, 100) - ref).max()
    assert 3.0 < e1 / e2 < 5.5


def test_mass_conserved_exactly():
    rho = initial_density("mixed").on_grid(64)
    for _ in range(200):
        rho = step_imex(rho, 2e-3)
        assert abs(rho.mean() - 1.0) <= 1e-13


def test_cfl_rejection():
    rho = GridField(initial_density("mixed").on_grid(64).values * 1.0)
    with pytest.raises(StepRejectedError) as e:
        step_imex(rho, 1.0)
    assert e.value.suggested_dt > 0


def test_zero_dt_identity():
    rho = initial_density("mixed").on_grid(64)
    out = step_imex(rho, 0.0)
    assert np.array_equal(out.values, rho.values)


def test_energy_identity_residual_small():
    rho = initial_density("default").on_grid(64)
    assert energy_identity_residual(rho) < 1e-12
    rho = initial_density("mixed").on_grid(128)
    assert energy_identity_residual(rho) < 1e-10


def test_derivative_norms_on_single_mode():
    n = 64
    x1, x2 = grid_mesh(n)
    rho = GridField(1.0 + 0.1 * np.cos(2 * np.pi * x1))
    d = derivative_norms(rho, 3)
    w = 2 * np.pi
    assert np.isclose(d[1], 0.1 * w, rtol=1e-10)
    assert np.isclose(d[2], 0.1 * w ** 2, rtol=1e-10)
    assert np.isclose(d[3], 0.1 * w ** 3, rtol=1e-10)
    with pytest.raises(ValueError):
        derivative_norms(rho, 5)


def test_solve_reports_and_l2_monotone():
    out = solve_meanfield(initial_density("mixed"), 0.5, 2e-3, 64, [0, 0.1, 0.3, 0.5])
    l2 = [rep.l2_norm for _, rep in out]
    assert all(b <= a + 1e-12 for a, b in zip(l2, l2[1:]))
    # running integral of the squared sup gradient is nondecreasing
    ints = [rep.int_derivative_sup[1] for _, rep in out]
    assert all(b >= a for a, b in zip(ints, ints[1:]))
    assert out[-1][0].time == 0.5


def test_positivity_band_enforced():
    # an unresolved run must raise rather than return a negative density
    bad = initial_density("default", amplitude=0.5)
    bad.lambda_bound = 1.01  # deliberately wrong band
    with pytest.raises(SolverInstabilityError):
        solve_meanfield(bad, 0.1, 2e-3, 64, [0.0, 0.1])
