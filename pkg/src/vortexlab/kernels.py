"""Interaction kernels: free-space and periodized Biot-Savart, the associated
bounded matrix field, mollified grid tables, and the Fourier-side multiplier.

All kernels map torus points to 2-vectors and are odd.  The periodized kernel
is the lattice sum of the free one, summed by shells of |k|^2; the mollified
variants are tabulated on a uniform grid and looked up by bilinear
interpolation.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ResolutionError, SingularInputError, DomainError, SupportError
from .torus import grid_mesh, wrap

TWO_PI = 2.0 * np.pi

# sup-norm of the entries of the explicit free-space matrix field:
# |arctan| < pi/2, divided by 2*pi.
V_FREE_SUP = 0.25


def eval_free_kernel(x):
    """Free-space Biot-Savart kernel (1/2pi) x_perp / |x|^2, x_perp = (-x2, x1).

    `x` is a point or array of points with the coordinate on the last axis.
    Raises SingularInputError at x = 0.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    r2 = np.sum(pts * pts, axis=-1)
    if np.any(r2 == 0.0):
        raise SingularInputError("free-space kernel is singular at x = 0")
    out = np.empty_like(pts)
    out[..., 0] = -pts[..., 1] / (TWO_PI * r2)
    out[..., 1] = pts[..., 0] / (TWO_PI * r2)
    return out[0] if single else out


@lru_cache(maxsize=8)
def _lattice_by_shells(radius):
    """Nonzero lattice vectors with |k| <= radius, sorted by |k|^2.

    Returns (vectors, norms2) with vectors shaped (L, 2).
    """
    r = int(radius)
    ks = np.arange(-r, r + 1)
    k1, k2 = np.meshgrid(ks, ks, indexing="ij")
    vec = np.stack([k1.ravel(), k2.ravel()], axis=-1)
    n2 = np.sum(vec * vec, axis=-1)
    keep = (n2 > 0) & (n2 <= r * r)
    vec, n2 = vec[keep], n2[keep]
    order = np.argsort(n2, kind="stable")
    return vec[order].astype(float), n2[order]


def gauge_term(x):
    """Linear field (x2/2, -x1/2) separating the two lattice-sum conventions.

    The ball-ordered image sum of the free kernel converges, but to a
    quasi-periodic field; adding this term on the fundamental domain yields
    the genuinely periodic kernel whose torus convolution matches the
    Fourier-side operator (see spectral_symbol).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    out[..., 0] = 0.5 * x[..., 1]
    out[..., 1] = -0.5 * x[..., 0]
    return out


def eval_periodized_kernel(x, lattice_radius, gauge="ball"):
    """Periodized Biot-Savart kernel: free term plus the lattice image sum.

    The image sum runs over 0 < |k| <= lattice_radius, accumulated shell by
    shell of |k|^2 (the conditionally convergent sum is defined along that
    ordering).  lattice_radius = 0 reduces to the free-space kernel.

    gauge="ball" returns the literal shell-ordered limit, which is
    quasi-periodic only; gauge="periodic" adds the linear gauge_term on the
    wrapped point, giving the periodic kernel that matches the Fourier-side
    convolution operator.
    """
    if lattice_radius < 0:
        raise ValueError("lattice_radius must be >= 0")
    if gauge not in ("ball", "periodic"):
        raise ValueError(f"unknown gauge {gauge!r}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if gauge == "periodic":
        pts = wrap(pts)
    total = np.array(np.atleast_2d(eval_free_kernel(pts)), dtype=float, copy=True)
    if lattice_radius >= 1:
        vecs, n2 = _lattice_by_shells(int(lattice_radius))
        # shells share |k|^2; summation order within a shell is immaterial
        start = 0
        while start < len(vecs):
            stop = start + np.searchsorted(n2[start:], n2[start], side="right")
            for k in vecs[start:stop]:
                total += eval_free_kernel(pts - k)
            start = stop
    if gauge == "periodic":
        total += gauge_term(wrap(pts))
    return total[0] if single else total


def eval_V_free(x):
    """Explicit bounded matrix field whose divergence is the free-space kernel.

    V(x) = (1/2pi) diag(-arctan(x1/x2), arctan(x2/x1)); defined off the
    coordinate axes, every entry bounded by 1/4 in magnitude.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if np.any(pts[..., 0] == 0.0) or np.any(pts[..., 1] == 0.0):
        raise DomainError("matrix field undefined on the coordinate axes")
    out = np.zeros(pts.shape[:-1] + (2, 2))
    out[..., 0, 0] = -np.arctan(pts[..., 0] / pts[..., 1]) / TWO_PI
    out[..., 1, 1] = np.arctan(pts[..., 1] / pts[..., 0]) / TWO_PI
    return out[0] if single else out


def wavevectors(n):
    """Integer wavevector meshes (k1, k2) matching numpy's fft2 layout."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    return np.meshgrid(k, k, indexing="ij")


def spectral_symbol(k1, k2):
    """Fourier multiplier m(k) with u_hat = m(k) rho_hat for u = K * rho.

    m(k) = i (k2, -k1) / (2 pi |k|^2), m(0) = 0.  Orthogonal to k, so the
    resulting velocity is divergence-free; the sign is pinned by the
    direct-quadrature cross-check in the test suite.
    """
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    n2 = k1 * k1 + k2 * k2
    with np.errstate(divide="ignore", invalid="ignore"):
        m1 = 1j * k2 / (TWO_PI * n2)
        m2 = -1j * k1 / (TWO_PI * n2)
    m1 = np.where(n2 == 0, 0.0 + 0.0j, m1)
    m2 = np.where(n2 == 0, 0.0 + 0.0j, m2)
    return m1, m2


def bump_mollifier(n, epsilon):
    """Standard smooth bump zeta_eps sampled on the n x n grid, unit grid mass.

    zeta_eps(x) = c exp(-1 / (1 - |x/eps|^2)) on |x| < eps, 0 outside.
    """
    if not 0.0 < epsilon < 0.25:
        raise SupportError("mollifier requires 0 < epsilon < 1/4")
    if 2.0 * epsilon * n < 8.0:
        raise ResolutionError(
            f"grid n={n} too coarse for epsilon={epsilon}: fewer than 8 cells across the bump"
        )
    x1, x2 = grid_mesh(n)
    s2 = (x1 * x1 + x2 * x2) / (epsilon * epsilon)
    z = np.zeros((n, n))
    inside = s2 < 1.0
    z[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
    z /= z.sum() / (n * n)  # quadrature-normalized: mean * area = 1
    return z


def bilinear_lookup(table, points):
    """Periodic bilinear interpolation of an (n, n) table at torus points.

    The table is sampled at x = -1/2 + j/n with axis order [i, j] = (x1, x2).
    """
    n = table.shape[0]
    p = wrap(np.asarray(points, dtype=float))
    u = (p[..., 0] + 0.5) * n
    v = (p[..., 1] + 0.5) * n
    i0 = np.floor(u).astype(np.int64)
    j0 = np.floor(v).astype(np.int64)
    fu = u - i0
    fv = v - j0
    i0 %= n
    j0 %= n
    i1 = (i0 + 1) % n
    j1 = (j0 + 1) % n
    return (
        table[i0, j0] * (1 - fu) * (1 - fv)
        + table[i1, j0] * fu * (1 - fv)
        + table[i0, j1] * (1 - fu) * fv
        + table[i1, j1] * fu * fv
    )


@dataclass
class KernelSpec:
    """A concrete, evaluable interaction kernel.

    variant is one of "free", "periodized", "mollified", "spectral", "zero".
    Tabulated variants carry (n, n) component tables and evaluate anywhere by
    bilinear interpolation; "free"/"periodized" evaluate the closed forms.
    """

    variant: str
    lattice_radius: int = 0
    epsilon: float = 0.0
    grid_n: int = 0
    tables: tuple = field(default=None, repr=False)

    def evaluate(self, x):
        if self.variant == "zero":
            x = np.asarray(x, dtype=float)
            return np.zeros_like(x)
        if self.variant == "free":
            return eval_free_kernel(x)
        if self.variant == "periodized":
            return eval_periodized_kernel(x, self.lattice_radius)
        if self.variant in ("mollified", "spectral"):
            t1, t2 = self.tables
            out = np.empty(np.shape(np.atleast_2d(x))[:-1] + (2,))
            out[..., 0] = bilinear_lookup(t1, np.atleast_2d(x))
            out[..., 1] = bilinear_lookup(t2, np.atleast_2d(x))
            return out[0] if np.asarray(x).ndim == 1 else out
        raise ValueError(f"unknown kernel variant {self.variant!r}")

    @property
    def bounded_at_zero(self):
        return self.variant in ("mollified", "spectral", "zero")


def _check_grid_n(n, minimum=64):
    n = int(n)
    if n < minimum or (n & (n - 1)) != 0:
        raise ValueError(f"grid_n must be a power of two >= {minimum}, got {n}")
    return n


def spectral_kernel_table(grid_n):
    """Band-limited periodized kernel on the grid, synthesized from the symbol.

    This is the kernel whose convolution with any grid density reproduces the
    Fourier-side velocity exactly; it is bounded (no singular point on the
    band-limited representation) and exactly mean-zero.
    """
    n = _check_grid_n(grid_n)
    k1, k2 = wavevectors(n)
    m1, m2 = spectral_symbol(k1, k2)
    # delta at the grid origin x = -1/2: unit-mass grid delta has fft == phase
    phase = np.exp(-2j * np.pi * (k1 * -0.5 + k2 * -0.5))
    t1 = np.real(np.fft.ifft2(m1 * phase * n * n))
    t2 = np.real(np.fft.ifft2(m2 * phase * n * n))
    # re-center so the tables are indexed from x = -1/2 like every grid field
    return t1, t2


def mollify_kernel(base: KernelSpec, epsilon: float, grid_n: int) -> KernelSpec:
    """Convolve the (periodized) base kernel with the standard bump mollifier.

    Built in Fourier space: the mollified table is ifft(m(k) zeta_hat(k)),
    which is bounded, exactly divergence-free on the grid, and defined at 0.
    The base must be Biot-Savart derived ("free" or "periodized"); its
    spectral representation on the torus is the multiplier m(k) either way.
    """
    if base.variant not in ("free", "periodized"):
        raise ValueError("mollification is defined for the Biot-Savart kernels")
    n = _check_grid_n(grid_n)
    z = bump_mollifier(n, epsilon)  # raises SupportError / ResolutionError
    zhat = np.fft.fft2(z) / (n * n)  # Fourier coefficients; zhat[0,0] == 1
    k1, k2 = wavevectors(n)
    m1, m2 = spectral_symbol(k1, k2)
    # grid-offset sign factors from sampling zeta at x = -1/2 + j/n cancel
    # against the synthesis offset, so no re-centering shift is needed
    t1 = np.real(np.fft.ifft2(m1 * zhat * n * n))
    t2 = np.real(np.fft.ifft2(m2 * zhat * n * n))
    return KernelSpec(
        variant="mollified", epsilon=epsilon, grid_n=n,
        lattice_radius=base.lattice_radius, tables=(t1, t2),
    )


def raw_kernel_tables(grid_n, lattice_radius=60):
    """Image-sum correction K0 = K_periodic - K_free tabulated on the grid.

    K0 is smooth near the origin, so the pair (free closed form, K0 table)
    evaluates the raw periodic kernel accurately everywhere off 0.  The
    tables carry the periodic gauge so that pair sums realize the same
    convolution operator as the Fourier-side route.
    """
    n = _check_grid_n(grid_n, minimum=32)
    x1, x2 = grid_mesh(n)
    pts = np.stack([x1.ravel(), x2.ravel()], axis=-1)
    t = gauge_term(pts).copy()
    vecs, _ = _lattice_by_shells(int(lattice_radius))
    for k in vecs:
        t += eval_free_kernel(pts - k)
    return t[:, 0].reshape(n, n), t[:, 1].reshape(n, n)
