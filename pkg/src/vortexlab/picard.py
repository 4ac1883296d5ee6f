"""Picard iteration for the mean-field equation in mild (Duhamel) form.

Each iterate solves the linear advection-diffusion equation driven by the
velocity of the previous iterate, written as the integral equation

    rho_k(t) = e^{t Lap} rho_0 - int_0^t e^{(t-s) Lap} div(rho_k(s) u_{k-1}(s)) ds

and discretized by marching the composite trapezoid rule in time, with one
predictor-corrector pass for the implicit endpoint.  The heat semigroup is
applied exactly on the Fourier side, so no quadrature of the kernel
singularity ever appears.
"""

import numpy as np

from .errors import NonContractionError
from .meanfield import GridField, SpectralOperators

TWO_PI = 2.0 * np.pi


def heat_kernel_torus(t, x, lattice_radius=None):
    """Periodic heat kernel p_t(x) by the image (lattice Gaussian) sum.

    x: (..., 2) torus points.  The image radius defaults to enough
    standard deviations that the tail is below double roundoff.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if lattice_radius is None:
        lattice_radius = int(np.ceil(0.5 + 7.0 * np.sqrt(2.0 * t))) + 1
    x = np.asarray(x, dtype=float)
    r = np.arange(-lattice_radius, lattice_radius + 1)
    k1, k2 = np.meshgrid(r, r, indexing="ij")
    shifts = np.stack([k1.ravel(), k2.ravel()], axis=-1)
    d = x[..., None, :] + shifts
    return np.sum(np.exp(-np.sum(d * d, axis=-1) / (4.0 * t)), axis=-1) / (4.0 * np.pi * t)


def heat_kernel_fourier(t, x, kmax=40):
    """Same kernel from the Fourier series; Poisson-summation cross-check."""
    x = np.asarray(x, dtype=float)
    r = np.arange(-kmax, kmax + 1)
    k1, k2 = np.meshgrid(r, r, indexing="ij")
    k1 = k1.ravel()
    k2 = k2.ravel()
    phase = np.exp(TWO_PI * 1j * (x[..., :1] * k1 + x[..., 1:2] * k2))
    amp = np.exp(-4.0 * np.pi ** 2 * (k1 ** 2 + k2 ** 2) * t)
    return np.real(np.sum(amp * phase, axis=-1))


def _forcing_hat(ops, rho_hat, u1, u2):
    """Spectral divergence of (rho u), dealiased; the Duhamel integrand."""
    rho = np.real(np.fft.ifft2(rho_hat))
    f = ops.ik1 * np.fft.fft2(rho * u1) + ops.ik2 * np.fft.fft2(rho * u2)
    return f * ops.dealias


def _advect_diffuse(ops, rho0_hat, u_slices, dt):
    """March the mild-form linear equation through the time slices.

    u_slices: list of (u1, u2) frozen velocity fields at times m*dt.
    Returns the list of solution ffts at the same times.
    """
    M = len(u_slices) - 1
    hats = [rho0_hat.copy()]
    forcings = [_forcing_hat(ops, rho0_hat, *u_slices[0])]
    heat = np.exp(ops.lap * dt)
    for m in range(1, M + 1):
        # known part of the trapezoid sum, propagated one extra step
        acc = np.zeros_like(rho0_hat)
        for l in range(m):
            w = 0.5 * dt if l == 0 else dt
            acc = acc + np.exp(ops.lap * (dt * (m - l))) * (w * forcings[l])
        base = np.exp(ops.lap * (dt * m)) * rho0_hat - acc
        # endpoint is implicit: predict with the propagated previous state,
        # then correct the endpoint forcing once
        pred = heat * hats[-1]
        for _ in range(2):
            f_m = _forcing_hat(ops, pred, *u_slices[m])
            pred = base - 0.5 * dt * f_m
        hats.append(pred)
        forcings.append(_forcing_hat(ops, pred, *u_slices[m]))
    return hats


def solve_picard(
    rho0: GridField,
    T: float,
    iterations: int,
    dt: float = 5e-3,
    contraction_bound: float = 0.9,
    check_contraction: bool = True,
):
    """Run the Picard iteration from the heat flow; returns (final, distances).

    The zeroth iterate is the pure heat solution (velocity frozen at zero).
    distances[k] is the sup-in-space-and-time gap between iterates k and
    k+1; successive ratios above contraction_bound (after the first two
    iterates, which reflect the initial guess) raise NonContractionError.
    """
    n = rho0.n
    ops = SpectralOperators(n)
    M = int(round(T / dt))
    if abs(M * dt - T) > 1e-12:
        raise ValueError("T must be a multiple of dt")
    rho0_hat = rho0.fft()
    zero = np.zeros((n, n))
    u_slices = [(zero, zero)] * (M + 1)
    hats = _advect_diffuse(ops, rho0_hat, u_slices, dt)
    distances = []
    for k in range(1, iterations + 1):
        u_slices = []
        for h in hats:
            u1h, u2h = ops.velocity_hat(h)
            u_slices.append((np.real(np.fft.ifft2(u1h)), np.real(np.fft.ifft2(u2h))))
        new_hats = _advect_diffuse(ops, rho0_hat, u_slices, dt)
        gap = max(
            float(np.abs(np.fft.ifft2(a - b)).max()) for a, b in zip(new_hats, hats)
        )
        distances.append(gap)
        if check_contraction and len(distances) >= 3:
            prev = distances[-2]
            if prev > 0 and distances[-1] > contraction_bound * prev:
                raise NonContractionError(
                    f"iterate gap ratio {distances[-1] / prev:.3f} exceeds "
                    f"{contraction_bound}; shorten the horizon"
                )
        hats = new_hats
        if gap < 1e-14:
            break
    final = GridField(np.real(np.fft.ifft2(hats[-1])), T)
    return final, distances
