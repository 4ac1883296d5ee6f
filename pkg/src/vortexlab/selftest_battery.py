"""Deterministic self-test battery: fast oracle checks across every module.

Each check returns (name, passed, measured, tolerance); the harness
serializes the list, so a seeded rerun produces an identical summary.
"""

import numpy as np

from . import kernels, picard, rates, torus, transport
from .entropy import dv_entropy_lower_bound, lsi_constant
from .inequalities import change_of_measure_check
from .meanfield import GridField, energy_identity_residual, initial_density, step_imex
from .particles import gaussian_increments, make_sim_kernel, sample_initial, step_em


def _check(name, measured, tol):
    return {"name": name, "passed": bool(measured <= tol), "measured": float(measured), "tol": tol}


def run_all():
    checks = []

    # kernels: oddness, periodicity, Cauchy tail, spectral agreement
    x = np.array([0.13, -0.29])
    odd = np.abs(kernels.eval_free_kernel(x) + kernels.eval_free_kernel(-x)).max()
    checks.append(_check("free_kernel_odd", odd, 0.0))
    a = kernels.eval_periodized_kernel(x, 40)
    b = kernels.eval_periodized_kernel(x, 80)
    checks.append(_check("lattice_sum_cauchy", float(np.abs(a - b).max()), 1e-6))
    p = kernels.eval_periodized_kernel(x, 60, gauge="periodic")
    q = kernels.eval_periodized_kernel(x + np.array([1.0, 0.0]), 60, gauge="periodic")
    checks.append(_check("periodic_gauge_shift", float(np.abs(p - q).max()), 1e-12))
    v = kernels.eval_V_free(x)
    checks.append(_check("v_entry_bound", float(np.abs(v).max()) - kernels.V_FREE_SUP, 0.0))

    # divergence of V equals the free kernel, by central differences
    h = 1e-6
    va = kernels.eval_V_free
    d1 = (va(x + [h, 0])[0, 0] - va(x - [h, 0])[0, 0]) / (2 * h) + (
        va(x + [0, h])[0, 1] - va(x - [0, h])[0, 1]
    ) / (2 * h)
    d2 = (va(x + [h, 0])[1, 0] - va(x - [h, 0])[1, 0]) / (2 * h) + (
        va(x + [0, h])[1, 1] - va(x - [0, h])[1, 1]
    ) / (2 * h)
    kfree = kernels.eval_free_kernel(x)
    checks.append(_check("div_v_equals_kernel", float(max(abs(d1 - kfree[0]), abs(d2 - kfree[1]))), 1e-6))

    # meanfield: closed-form decay oracle and conservation
    rho = initial_density("default").on_grid(64)
    for _ in range(50):
        rho = step_imex(rho, 1e-3)
    x1, x2 = torus.grid_mesh(64)
    exact = 1 + 0.5 * np.exp(-8 * np.pi ** 2 * 0.05) * np.cos(2 * np.pi * x1) * np.cos(2 * np.pi * x2)
    checks.append(_check("pde_closed_form_decay", float(np.abs(rho.values - exact).max()), 1e-10))
    checks.append(_check("pde_mass_drift", abs(rho.mean() - 1.0), 1e-12))
    mixed = initial_density("mixed").on_grid(64)
    checks.append(_check("pde_energy_identity", energy_identity_residual(mixed), 1e-6))

    # heat kernel: Poisson summation cross-check
    pts = np.array([[0.0, 0.0], [0.3, 0.1]])
    hk = np.abs(picard.heat_kernel_torus(0.05, pts) - picard.heat_kernel_fourier(0.05, pts)).max()
    checks.append(_check("heat_kernel_poisson", float(hk), 1e-10))

    # particles: noise determinism and dt = 0 identity
    g1 = gaussian_increments(11, 5, 64)
    g2 = gaussian_increments(11, 5, 64)
    checks.append(_check("noise_deterministic", float(np.abs(g1 - g2).max()), 0.0))
    kern = make_sim_kernel("zero")
    st = sample_initial(initial_density("default"), 32, 3)
    st2 = step_em(st, 0.0, kern)
    checks.append(_check("em_zero_dt_identity", float(np.abs(st2.positions - st.positions).max()), 0.0))

    # transport: translation oracle and symmetry
    rng = np.random.Generator(np.random.Philox(key=np.array([5, 0], dtype=np.uint64)))
    cloud = rng.uniform(-0.5, 0.5, (200, 2))
    shifted = torus.wrap(cloud + np.array([0.02, 0.0]))
    tr = transport.wasserstein2_torus(cloud, shifted)
    checks.append(_check("w2_translation_oracle", abs(tr - 0.02), 1e-9))
    sym = abs(
        transport.wasserstein2_torus(cloud[:50], cloud[50:100])
        - transport.wasserstein2_torus(cloud[50:100], cloud[:50])
    )
    checks.append(_check("w2_symmetry", sym, 0.0))

    # entropy: DV at g = 0 and the LSI constant values
    z = GridField(np.zeros((64, 64)))
    ref = initial_density("default").on_grid(64)
    dv0 = abs(dv_entropy_lower_bound(z, cloud, ref))
    checks.append(_check("dv_zero_function", dv0, 1e-12))
    checks.append(_check("lsi_lambda1", abs(lsi_constant(1.0) - 1.0 / (8 * np.pi ** 2)), 1e-15))
    checks.append(_check("lsi_lambda2", abs(lsi_constant(2.0) - 4.0 / (8 * np.pi ** 2)), 1e-15))

    # inequalities: equality case of the change of measure
    ver = change_of_measure_check(
        np.array([0.3, 0.7]), np.array([0.3, 0.7]), np.array([1.5, 1.5]), 2.0, 10
    )
    checks.append(_check("change_of_measure_equality", abs(ver.rhs - ver.lhs), 1e-12))

    # rates: exact log-linear recovery
    ns = [64, 128, 256, 512]
    fit = rates.rate_fit([(n, 3.0 * n ** -0.5) for n in ns], "pure_power")
    checks.append(_check("rate_fit_exact_power", abs(fit.exponent + 0.5), 1e-12))
    fit2 = rates.rate_fit(
        [(n, 3.0 * n ** -0.5 * np.log1p(n)) for n in ns], "power_with_log"
    )
    checks.append(_check("rate_fit_exact_power_log", abs(fit2.exponent + 0.5), 1e-12))

    passed = all(c["passed"] for c in checks)
    return {"passed": passed, "n_checks": len(checks), "checks": checks}
