"""Relaxation of the mean-field vorticity density toward uniform.

The default initial profile 1 + 0.5 cos(2 pi x1) cos(2 pi x2) has a
remarkable property: its self-induced transport vanishes identically, so
the nonlinear equation reduces to the heat flow and the solution is
known in closed form.  This demo marches the full nonlinear solver and
prints the error against that closed form, plus the conserved mass and
the monotone L2 norm, at a few times.
"""

import numpy as np

from vortexlab.meanfield import initial_density, solve_meanfield

T, DT, GRID = 1.0, 2e-3, 128
times = [0.05, 0.1, 0.25, 0.5, 1.0]

rho0 = initial_density("default")
out = solve_meanfield(rho0, T, DT, GRID, times)

g = np.linspace(-0.5, 0.5, GRID, endpoint=False)
x1, x2 = np.meshgrid(g, g, indexing="ij")

print(f"{'t':>6} {'sup error vs closed form':>26} {'mass - 1':>12} {'L2 norm':>10}")
for rho, rep in out:
    exact = 1.0 + 0.5 * np.exp(-8 * np.pi ** 2 * rho.time) * \
        np.cos(2 * np.pi * x1) * np.cos(2 * np.pi * x2)
    err = np.abs(rho.values - exact).max()
    print(f"{rho.time:6.2f} {err:26.3e} {rho.mean() - 1.0:12.2e} {rep.l2_norm:10.6f}")

print()
print("The amplitude decays like exp(-8 pi^2 t): it is below 1e-3 by t ~ 0.8,")
print("so the density is effectively uniform well before t = 1.")
