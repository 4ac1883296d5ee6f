"""Interacting vortex particle system with Euler-Maruyama time stepping.

Noise is drawn from a counter-based generator keyed on (seed, step), so a
trajectory is reproducible bit for bit regardless of how work is divided
across replicas or processes.  Pair interactions are O(N^2) with numba,
reading the interaction kernel from a bilinear lookup table; the raw
singular kernel adds its closed-form free part analytically and sets the
self-interaction to zero.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .errors import ConfigError, DomainError
from .kernels import KernelSpec, mollify_kernel, raw_kernel_tables, spectral_kernel_table
from .meanfield import GridField, SpectralOperators
from .torus import wrap

INV_TWO_PI = 1.0 / (2.0 * np.pi)

# distinct Philox stream tags so initial sampling never collides with steps
_INIT_STREAM = np.uint64(0x9E3779B97F4A7C15)


def _philox(seed, counter):
    key = np.array([np.uint64(seed), np.uint64(counter)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gaussian_increments(seed, step, n):
    """The (n, 2) standard normal block for one Euler-Maruyama step."""
    return _philox(seed, step).standard_normal((n, 2))


@dataclass
class ParticleState:
    positions: np.ndarray  # (N, 2) in [-1/2, 1/2)
    time: float = 0.0
    seed: int = 0
    step: int = 0

    @property
    def n(self):
        return self.positions.shape[0]


# ---------------------------------------------------------------------------
# interaction kernels for the particle drift


@dataclass
class SimKernel:
    """Interaction kernel as used by the pair sum.

    kind 'zero' (pure diffusion control), 'mollified' (band-limited
    periodic kernel convolved with a compact bump, the production
    default), 'spectral' (band-limited periodic kernel, no bump), 'raw'
    (closed-form free part plus tabulated periodic correction, with the
    self-term set to zero), and 'flipped' (mollified with reversed sign,
    a falsification control).
    """

    kind: str
    table1: np.ndarray | None = None
    table2: np.ndarray | None = None
    epsilon: float | None = None
    sign: float = 1.0

    @property
    def grid_n(self):
        return None if self.table1 is None else self.table1.shape[0]


def make_sim_kernel(name, epsilon=0.01, grid_n=512):
    """Factory: 'zero', 'mollified', 'spectral', 'raw', 'flipped'."""
    if name == "zero":
        return SimKernel("zero")
    if name in ("mollified", "flipped"):
        spec = mollify_kernel(KernelSpec("periodized", lattice_radius=60), epsilon, grid_n)
        sign = -1.0 if name == "flipped" else 1.0
        return SimKernel("mollified", *spec.tables, epsilon, sign)
    if name == "spectral":
        t1, t2 = spectral_kernel_table(grid_n)
        return SimKernel("spectral", t1, t2)
    if name == "raw":
        t1, t2 = raw_kernel_tables(grid_n)
        return SimKernel("raw", t1, t2)
    raise ConfigError(f"unknown interaction kernel {name!r}")


@njit(cache=True, fastmath=False)
def _pair_sum_table(pos, t1, t2, out):
    ntab = t1.shape[0]
    N = pos.shape[0]
    for i in range(N):
        fx = 0.0
        fy = 0.0
        xi = pos[i, 0]
        yi = pos[i, 1]
        for j in range(N):
            dx = xi - pos[j, 0]
            dy = yi - pos[j, 1]
            dx -= np.floor(dx + 0.5)
            dy -= np.floor(dy + 0.5)
            u = (dx + 0.5) * ntab
            v = (dy + 0.5) * ntab
            i0 = int(np.floor(u))
            j0 = int(np.floor(v))
            fu = u - i0
            fv = v - j0
            i0 = i0 % ntab
            j0 = j0 % ntab
            i1 = (i0 + 1) % ntab
            j1 = (j0 + 1) % ntab
            w00 = (1.0 - fu) * (1.0 - fv)
            w10 = fu * (1.0 - fv)
            w01 = (1.0 - fu) * fv
            w11 = fu * fv
            fx += t1[i0, j0] * w00 + t1[i1, j0] * w10 + t1[i0, j1] * w01 + t1[i1, j1] * w11
            fy += t2[i0, j0] * w00 + t2[i1, j0] * w10 + t2[i0, j1] * w01 + t2[i1, j1] * w11
        out[i, 0] = fx / N
        out[i, 1] = fy / N


@njit(cache=True, fastmath=False)
def _pair_sum_raw(pos, t1, t2, out):
    """Free closed form plus tabulated periodic correction; self-term 0."""
    ntab = t1.shape[0]
    N = pos.shape[0]
    inv2pi = 1.0 / (2.0 * np.pi)
    for i in range(N):
        fx = 0.0
        fy = 0.0
        xi = pos[i, 0]
        yi = pos[i, 1]
        for j in range(N):
            if j == i:
                continue
            dx = xi - pos[j, 0]
            dy = yi - pos[j, 1]
            dx -= np.floor(dx + 0.5)
            dy -= np.floor(dy + 0.5)
            r2 = dx * dx + dy * dy
            if r2 > 0.0:
                fx += -inv2pi * dy / r2
                fy += inv2pi * dx / r2
            u = (dx + 0.5) * ntab
            v = (dy + 0.5) * ntab
            i0 = int(np.floor(u))
            j0 = int(np.floor(v))
            fu = u - i0
            fv = v - j0
            i0 = i0 % ntab
            j0 = j0 % ntab
            i1 = (i0 + 1) % ntab
            j1 = (j0 + 1) % ntab
            w00 = (1.0 - fu) * (1.0 - fv)
            w10 = fu * (1.0 - fv)
            w01 = (1.0 - fu) * fv
            w11 = fu * fv
            fx += t1[i0, j0] * w00 + t1[i1, j0] * w10 + t1[i0, j1] * w01 + t1[i1, j1] * w11
            fy += t2[i0, j0] * w00 + t2[i1, j0] * w10 + t2[i0, j1] * w01 + t2[i1, j1] * w11
        out[i, 0] = fx / N
        out[i, 1] = fy / N


def drift(state: ParticleState, kernel: SimKernel):
    """Empirical-measure drift (1/N) sum_j K(x_i - x_j); (N, 2) array."""
    out = np.zeros_like(state.positions)
    if kernel.kind == "zero":
        return out
    pos = np.ascontiguousarray(state.positions)
    if kernel.kind == "raw":
        _pair_sum_raw(pos, kernel.table1, kernel.table2, out)
    else:
        _pair_sum_table(pos, kernel.table1, kernel.table2, out)
        if kernel.sign != 1.0:
            out *= kernel.sign
    return out


# ---------------------------------------------------------------------------
# initial sampling and time stepping


def sample_initial(rho0, N, seed):
    """Rejection-sample N points from a bounded density on the torus.

    rho0 needs .evaluate(x1, x2) and .lambda_bound (envelope constant).
    """
    lam = rho0.lambda_bound
    rng = _philox(seed, _INIT_STREAM)
    out = np.empty((N, 2))
    got = 0
    while got < N:
        m = max(4 * (N - got), 64)
        cand = rng.uniform(-0.5, 0.5, size=(m, 2))
        acc = rng.uniform(0.0, lam, size=m) < rho0.evaluate(cand[:, 0], cand[:, 1])
        take = cand[acc][: N - got]
        out[got : got + take.shape[0]] = take
        got += take.shape[0]
    return ParticleState(out, 0.0, seed, 0)


def step_em(state: ParticleState, dt: float, kernel: SimKernel) -> ParticleState:
    """One Euler-Maruyama step with additive sqrt(2 dt) noise."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    b = drift(state, kernel)
    xi = gaussian_increments(state.seed, state.step, state.n)
    new = state.positions + dt * b + np.sqrt(2.0 * dt) * xi if dt > 0 else state.positions
    return ParticleState(wrap(new), state.time + dt, state.seed, state.step + 1)


def simulate(rho0, N, T, dt, kernel, seed, snapshot_times):
    """Run one replica, returning positions at each snapshot time.

    Snapshot times must be (near) multiples of dt.  Returns an array of
    shape (len(snapshot_times), N, 2).
    """
    snapshot_times = sorted(float(t) for t in snapshot_times)
    steps = [int(round(t / dt)) for t in snapshot_times]
    for t, s in zip(snapshot_times, steps):
        if abs(s * dt - t) > 1e-9:
            raise ConfigError(f"snapshot time {t} is not a multiple of dt={dt}")
    state = sample_initial(rho0, N, seed)
    out = np.empty((len(snapshot_times), N, 2))
    idx = 0
    step_no = 0
    while idx < len(steps):
        while step_no < steps[idx]:
            state = step_em(state, dt, kernel)
            step_no += 1
        out[idx] = state.positions
        idx += 1
    return out


# ---------------------------------------------------------------------------
# decoupled sampler driven by a stored mean-field flow


@dataclass
class VelocityTrajectory:
    """Velocity fields of the mean-field flow on a time grid."""

    times: np.ndarray          # (M,)
    u1: np.ndarray             # (M, n, n)
    u2: np.ndarray             # (M, n, n)

    @classmethod
    def from_fields(cls, fields):
        """Build from a list of GridField densities (times must be sorted)."""
        times = np.array([f.time for f in fields])
        ops = SpectralOperators(fields[0].n)
        u1 = []
        u2 = []
        for f in fields:
            a, b = ops.velocity_hat(f.fft())
            u1.append(np.real(np.fft.ifft2(a)))
            u2.append(np.real(np.fft.ifft2(b)))
        return cls(times, np.array(u1), np.array(u2))


@njit(cache=True, fastmath=False)
def _sample_field(pos, tab, out_col, out, col):
    n = tab.shape[0]
    for i in range(pos.shape[0]):
        u = (pos[i, 0] + 0.5) * n
        v = (pos[i, 1] + 0.5) * n
        i0 = int(np.floor(u))
        j0 = int(np.floor(v))
        fu = u - i0
        fv = v - j0
        i0 = i0 % n
        j0 = j0 % n
        i1 = (i0 + 1) % n
        j1 = (j0 + 1) % n
        out[i, col] += out_col * (
            tab[i0, j0] * (1 - fu) * (1 - fv)
            + tab[i1, j0] * fu * (1 - fv)
            + tab[i0, j1] * (1 - fu) * fv
            + tab[i1, j1] * fu * fv
        )


def simulate_nonlinear(traj: VelocityTrajectory, rho0, N, T, dt, seed):
    """Independent samples of the decoupled diffusion driven by the flow.

    Each particle feels the stored mean-field velocity (bilinear in space,
    linear in time) instead of the empirical one, so the particles are
    i.i.d. draws from the limit law.  The trajectory must resolve time to
    within 2*dt or interpolation error dominates.
    """
    gaps = np.diff(traj.times)
    if gaps.size and gaps.max() > 2.0 * dt + 1e-12:
        raise DomainError(
            f"stored flow gap {gaps.max():.4g} exceeds 2*dt={2 * dt:.4g}"
        )
    steps = int(round(T / dt))
    if abs(steps * dt - T) > 1e-9:
        raise ConfigError("T must be a multiple of dt")
    state = sample_initial(rho0, N, seed)
    for s in range(steps):
        t = s * dt
        j = int(np.searchsorted(traj.times, t, side="right")) - 1
        j = min(max(j, 0), len(traj.times) - 2)
        t0, t1 = traj.times[j], traj.times[j + 1]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        b = np.zeros_like(state.positions)
        pos = np.ascontiguousarray(state.positions)
        _sample_field(pos, traj.u1[j], 1.0 - w, b, 0)
        _sample_field(pos, traj.u1[j + 1], w, b, 0)
        _sample_field(pos, traj.u2[j], 1.0 - w, b, 1)
        _sample_field(pos, traj.u2[j + 1], w, b, 1)
        xi = gaussian_increments(state.seed, state.step, state.n)
        new = wrap(state.positions + dt * b + np.sqrt(2.0 * dt) * xi)
        state = ParticleState(new, t + dt, state.seed, state.step + 1)
    return state
