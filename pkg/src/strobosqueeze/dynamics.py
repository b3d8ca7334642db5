"""Time-domain integration of the stroboscopic input-output equations.

Two engines over the same rotating-frame model:

* :func:`simulate_trajectory` / :func:`ensemble_variance` integrate the
  stochastic equations by Euler-Maruyama (the equations are linear with
  additive noise, so strong order 1 is achieved).  The vacuum input
  quadratures and the Langevin forces are independent white noises with
  two-time correlation ``delta(t-t')/2``, discretized as one Gaussian
  draw per step per channel with variance ``1/(2 dt)``.  The output light
  is sampled from the input-output relations with the *same* noise draws;
  the atom-light correlations that carry the squeezing live in exactly
  that reuse.

* :func:`propagate_moments` integrates the exact mean/covariance ODEs
  implied by the linear equations (drift ``-(gamma_s phi^2(t) +
  gamma_ex)``, diffusion from the squared noise couplings) with a
  fixed-step RK4 on the piecewise-smooth segments between pulse edges.

Reproducibility: trajectory ``k`` of an ensemble seeded with ``s`` uses
the 64-bit seed ``SeedSequence((s, k)).generate_state(1)`` keying a
counter-based Philox generator, so any single trajectory can be replayed
bit-exactly regardless of chunking, worker count, or execution order.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .params import DerivedCouplings
from .strobe import StroboConfig

__all__ = [
    "GridError",
    "TimeGrid",
    "make_grid",
    "validate_grid",
    "window_mask",
    "GaussianSpinState",
    "TrajectoryRecord",
    "MomentSeries",
    "derive_seeds",
    "simulate_trajectory",
    "ensemble_finals",
    "ensemble_variance",
    "propagate_moments",
    "save_ensemble",
    "load_ensemble",
]

# grid resolution floors: >= 200 samples per Larmor period and >= 20 per
# pulse window keep the O(dt) strong error and edge aliasing negligible
MIN_SAMPLES_PER_LARMOR = 200
MIN_SAMPLES_PER_WINDOW = 20

_ALIGN_RTOL = 1e-6  # fractional misalignment tolerated between edges and grid

DEFAULT_CHUNK = 256


class GridError(ValueError):
    """Time grid violates the resolution or pulse-edge alignment rules."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform integration grid; ``total_time`` is the realized ``n_steps * dt``."""

    dt: float
    total_time: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0.0 or self.n_steps < 1:
            raise GridError(f"need dt > 0 and n_steps >= 1, got {self.dt}, {self.n_steps}")
        if self.n_steps != int(round(self.total_time / self.dt)):
            raise GridError(
                f"n_steps = {self.n_steps} is not round(total_time/dt) = "
                f"{self.total_time / self.dt:.6f}"
            )

    @property
    def times(self):
        """Sampling instants ``t_k = k dt`` for ``k = 0 .. n_steps - 1``."""
        return np.arange(self.n_steps) * self.dt


def make_grid(
    strobo: StroboConfig,
    total_time,
    samples_per_window=MIN_SAMPLES_PER_WINDOW,
    min_samples_per_larmor=MIN_SAMPLES_PER_LARMOR,
    snap_to_period=True,
):
    """Build a :class:`TimeGrid` aligned to the pulse train.

    The number of steps per stroboscopic period is chosen so that the
    window width is an even integer number of samples (so both the
    start-aligned and centered phase conventions put edges on grid
    points), with at least ``samples_per_window`` in the window and
    ``min_samples_per_larmor`` per Larmor period.  With
    ``snap_to_period`` the duration is rounded to a whole number of
    stroboscopic periods, which keeps time averages of ``phi^2`` exactly
    equal to the duty cycle.
    """
    if total_time <= 0.0:
        raise GridError(f"total_time must be positive, got {total_time}")
    q = Fraction(strobo.duty).limit_denominator(1_000_000).denominator
    m0 = max(
        int(math.ceil(min_samples_per_larmor / 2)),
        int(math.ceil(samples_per_window / strobo.duty)),
    )
    m = q * int(math.ceil(m0 / q))
    while True:
        w = strobo.duty * m
        if abs(w - round(w)) < 1e-9 and round(w) >= samples_per_window and round(w) % 2 == 0:
            break
        m += q
        if m > 100_000_000:
            raise GridError(f"no aligned grid found for duty {strobo.duty}")
    dt = strobo.period / m
    if snap_to_period:
        n_steps = max(1, int(round(total_time / strobo.period))) * m
    else:
        n_steps = max(1, int(round(total_time / dt)))
    return TimeGrid(dt=dt, total_time=n_steps * dt, n_steps=n_steps)


def validate_grid(grid: TimeGrid, strobo: StroboConfig):
    """Raise :class:`GridError` unless ``grid`` resolves the drive properly.

    Checks: at least ``MIN_SAMPLES_PER_LARMOR`` samples per Larmor period
    (i.e. ``dt * Omega <= 2 pi / 200``), a pulse window of at least
    ``MIN_SAMPLES_PER_WINDOW`` samples, and window width, period, and
    window start all commensurate with ``dt``.
    """
    omega = strobo.larmor
    limit = 2.0 * math.pi / MIN_SAMPLES_PER_LARMOR
    if grid.dt * omega > limit * (1.0 + _ALIGN_RTOL):
        raise GridError(
            f"dt*Omega = {grid.dt * omega:.4e} exceeds 2*pi/{MIN_SAMPLES_PER_LARMOR} = "
            f"{limit:.4e}; use at least {MIN_SAMPLES_PER_LARMOR} samples per Larmor period"
        )
    window_samples = strobo.window / grid.dt
    if abs(window_samples - round(window_samples)) > _ALIGN_RTOL * max(window_samples, 1.0):
        raise GridError(
            f"pulse window is {window_samples:.6f} samples; dt must divide the window"
        )
    if round(window_samples) < MIN_SAMPLES_PER_WINDOW:
        raise GridError(
            f"pulse window has {int(round(window_samples))} samples, need >= "
            f"{MIN_SAMPLES_PER_WINDOW}"
        )
    period_samples = strobo.period / grid.dt
    if abs(period_samples - round(period_samples)) > _ALIGN_RTOL * period_samples:
        raise GridError(
            f"stroboscopic period is {period_samples:.6f} samples; dt must divide it"
        )
    start = (strobo.phase / strobo.omega_m) % strobo.period
    offset = (start / grid.dt) % 1.0
    if min(offset, 1.0 - offset) > _ALIGN_RTOL * period_samples:
        raise GridError("pulse edges do not fall on grid points; adjust phase or dt")


@dataclass(frozen=True)
class GaussianSpinState:
    """Mean and 2x2 covariance of the collective-spin quadratures (x, p)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(2)
        cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        eigs = np.linalg.eigvalsh(cov)
        if eigs[0] < -1e-12:
            raise ValueError(f"covariance must be positive semidefinite, eigs {eigs}")
        if float(np.linalg.det(cov)) < 0.25 - 1e-9:
            raise ValueError(
                f"det(cov) = {float(np.linalg.det(cov)):.6g} violates the "
                "uncertainty bound 1/4"
            )

    @classmethod
    def coherent(cls, noise_scale=1.0):
        """Coherent spin state: zero mean, cov = noise_scale * I/2.

        ``noise_scale`` models imperfect initial polarization (for example
        1.06 for 6% excess transverse noise).
        """
        return cls(mean=np.zeros(2), cov=0.5 * noise_scale * np.eye(2))


@dataclass(frozen=True)
class TrajectoryRecord:
    """One stochastic trajectory.

    ``atom[k]`` is the atomic state at ``times[k]`` (before the step-k
    update); ``light_out[k]`` holds the sampled output quadratures
    ``(x_out, p_out)`` over step k, which contain the white input noise
    and therefore have per-sample variance of order ``1/(2 dt)``.
    ``final_atom`` is the state at ``n_steps * dt``.
    """

    times: np.ndarray
    atom: np.ndarray
    light_out: np.ndarray
    seed: int
    final_atom: np.ndarray


@dataclass(frozen=True)
class MomentSeries:
    """Mean and covariance trajectory from :func:`propagate_moments`.

    Arrays are sampled at ``t_k = k dt`` for ``k = 0 .. n_steps``
    (both endpoints included).
    """

    times: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def variance(self, quad_angle=0.0):
        """Variance of ``p cos(angle/2) + x sin(angle/2)`` at each time."""
        w = np.array([math.sin(quad_angle / 2.0), math.cos(quad_angle / 2.0)])
        return np.einsum("i,tij,j->t", w, self.covs, w)

    def tail_average_variance(self, window, quad_angle=0.0):
        """Variance averaged over the final ``window`` of the evolution.

        Averaging over one full Larmor period removes the sawtooth the
        pulsed diffusion imprints within each period.
        """
        var = self.variance(quad_angle)
        mask = self.times >= self.times[-1] - window * (1.0 + 1e-12)
        return float(var[mask].mean())


def derive_seeds(base_seed, n_traj):
    """Per-trajectory 64-bit seeds: ``SeedSequence((base_seed, k)).generate_state(1)``.

    The splitting is counter-based in the trajectory index, so seed ``k``
    never depends on how many trajectories run or in what order.
    """
    return np.array(
        [
            np.random.SeedSequence((int(base_seed), int(k))).generate_state(1, np.uint64)[0]
            for k in range(n_traj)
        ],
        dtype=np.uint64,
    )


def _rng_for(seed):
    return np.random.Generator(np.random.Philox(key=int(seed)))


def window_mask(strobo: StroboConfig, grid: TimeGrid):
    """Pulse-train indicator at the grid points, by integer sample counting.

    Equivalent to ``profile(grid.times, strobo)`` but immune to the
    edge-sample rounding jitter of evaluating the float profile at large
    ``k * dt``; the integrators and the spectral estimator share this mask
    so windowed sums like ``sum(phi^2) dt`` are exactly ``duty * T`` over
    whole periods.
    """
    validate_grid(grid, strobo)
    m = int(round(strobo.period / grid.dt))
    w = int(round(strobo.window / grid.dt))
    start = int(round(((strobo.phase / strobo.omega_m) % strobo.period) / grid.dt)) % m
    k = np.arange(grid.n_steps)
    return np.where(((k - start) % m) < w, 1.0, 0.0)


class _StepTables:
    """Per-step coefficient arrays shared by every trajectory of a run."""

    def __init__(self, couplings: DerivedCouplings, strobo: StroboConfig, grid: TimeGrid):
        validate_grid(grid, strobo)
        t = grid.times
        phi = window_mask(strobo, grid)
        omega = strobo.larmor
        cos = np.cos(omega * t)
        sin = np.sin(omega * t)
        kap = couplings.kappa
        z2 = couplings.zeta2
        gs = couplings.gamma_s
        gex = couplings.gamma_ex
        dt = grid.dt
        self.sigma = math.sqrt(1.0 / (2.0 * dt))  # white-noise sample std
        self.decay = 1.0 - (gs * phi * phi + gex) * dt
        self.cxp = dt * kap * phi * cos * self.sigma  # xi_pin -> x
        self.cxx = dt * z2 * kap * phi * sin * self.sigma  # xi_xin -> x
        self.cpp = dt * kap * phi * sin * self.sigma  # xi_pin -> p
        self.cpx = -dt * z2 * kap * phi * cos * self.sigma  # xi_xin -> p
        self.cf = dt * math.sqrt(2.0 * gex) * self.sigma  # Langevin forces
        # output relations evaluated at the pre-update state
        self.oxx = -kap * phi * sin
        self.oxp = kap * phi * cos
        self.opx = -z2 * kap * phi * cos
        self.opp = -z2 * kap * phi * sin
        self.phi = phi
        self.grid = grid
        self.n_steps = grid.n_steps


def _draw_chunk_noise(seeds, n_steps, init_mean, init_chol, suppress_noise):
    """Initial states (m, 2) and noise normals (4, n_steps, m) for a chunk.

    Per trajectory the generator emits 2 normals for the initial state and
    then ``n_steps * 4`` normals in step-major order (x_in, p_in, f_x,
    f_p); this order is part of the reproducibility contract.
    """
    m = len(seeds)
    init = np.empty((m, 2))
    noise = np.zeros((4, n_steps, m))
    for i, seed in enumerate(seeds):
        if suppress_noise:
            init[i] = init_mean
            continue
        rng = _rng_for(seed)
        init[i] = init_mean + init_chol @ rng.standard_normal(2)
        noise[:, :, i] = rng.standard_normal((n_steps, 4)).T
    return init, noise


def _integrate_chunk(
    tables: _StepTables,
    seeds,
    initial: GaussianSpinState,
    suppress_noise=False,
    keep_atoms=False,
    keep_light=False,
    keep_strobe_output=False,
):
    """Euler-Maruyama integration of one chunk of trajectories.

    Returns ``(finals, atoms, light, strobe_y)``; the optional outputs are
    ``None`` unless requested.  ``strobe_y`` is ``phi(t) * p_out(t)``, the
    windowed homodyne record the spectral estimator consumes.
    """
    n = tables.n_steps
    m = len(seeds)
    chol = np.linalg.cholesky(initial.cov) if not suppress_noise else np.zeros((2, 2))
    init, noise = _draw_chunk_noise(seeds, n, initial.mean, chol, suppress_noise)
    x = init[:, 0].copy()
    p = init[:, 1].copy()
    atoms = np.empty((m, n, 2)) if keep_atoms else None
    light = np.empty((m, n, 2)) if keep_light else None
    strobe_y = np.empty((m, n)) if keep_strobe_output else None
    tb = tables
    sig = tb.sigma
    for j in range(n):
        xi_x = noise[0, j]
        xi_p = noise[1, j]
        if keep_atoms:
            atoms[:, j, 0] = x
            atoms[:, j, 1] = p
        if keep_light or keep_strobe_output:
            p_out = sig * xi_p + tb.opx[j] * x + tb.opp[j] * p
            if keep_light:
                light[:, j, 0] = sig * xi_x + tb.oxx[j] * x + tb.oxp[j] * p
                light[:, j, 1] = p_out
            if keep_strobe_output:
                strobe_y[:, j] = tb.phi[j] * p_out
        x_new = tb.decay[j] * x + tb.cxp[j] * xi_p + tb.cxx[j] * xi_x + tb.cf * noise[2, j]
        p_new = tb.decay[j] * p + tb.cpp[j] * xi_p + tb.cpx[j] * xi_x + tb.cf * noise[3, j]
        x = x_new
        p = p_new
    finals = np.stack([x, p], axis=1)
    return finals, atoms, light, strobe_y


def simulate_trajectory(
    couplings: DerivedCouplings,
    strobo: StroboConfig,
    grid: TimeGrid,
    seed,
    initial: GaussianSpinState | None = None,
    suppress_noise=False,
) -> TrajectoryRecord:
    """Integrate one stochastic trajectory and record everything.

    ``seed`` keys the Philox stream directly (use :func:`derive_seeds` to
    reproduce a member of an ensemble).  ``initial`` defaults to the
    coherent spin state; the initial quadratures are drawn from it.  With
    ``suppress_noise`` every noise draw (including the initial
    fluctuation) is zero, which isolates the deterministic decay: both
    mean quadratures then damp at the identical instantaneous rate, so
    the mean direction ``atan2(p, x)`` is conserved.
    """
    tables = _StepTables(couplings, strobo, grid)
    finals, atoms, light, _ = _integrate_chunk(
        tables,
        [int(seed)],
        initial or GaussianSpinState.coherent(),
        suppress_noise=suppress_noise,
        keep_atoms=True,
        keep_light=True,
    )
    return TrajectoryRecord(
        times=grid.times,
        atom=atoms[0],
        light_out=light[0],
        seed=int(seed),
        final_atom=finals[0],
    )


def _run_chunks(seeds, workers, chunk_size, worker_fn):
    """Apply ``worker_fn(chunk_index, chunk_seeds)`` over fixed-size chunks.

    Chunk boundaries depend only on ``chunk_size``, never on ``workers``,
    and results are consumed in chunk order, so outputs are bitwise
    independent of the worker count.
    """
    chunks = [
        (idx, seeds[start : start + chunk_size])
        for idx, start in enumerate(range(0, len(seeds), chunk_size))
    ]
    if workers <= 1:
        return [worker_fn(idx, chunk) for idx, chunk in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker_fn, idx, chunk) for idx, chunk in chunks]
        return [f.result() for f in futures]


def ensemble_finals(
    couplings: DerivedCouplings,
    strobo: StroboConfig,
    grid: TimeGrid,
    n_traj,
    base_seed,
    initial: GaussianSpinState | None = None,
    workers=1,
    chunk_size=DEFAULT_CHUNK,
):
    """Final-time atomic quadratures ``(n_traj, 2)`` of an ensemble."""
    tables = _StepTables(couplings, strobo, grid)
    seeds = derive_seeds(base_seed, n_traj)
    init = initial or GaussianSpinState.coherent()
    out = np.empty((n_traj, 2))

    def work(idx, chunk_seeds):
        finals, _, _, _ = _integrate_chunk(tables, chunk_seeds, init)
        return idx, finals

    for idx, finals in _run_chunks(seeds, workers, chunk_size, work):
        start = idx * chunk_size
        out[start : start + len(finals)] = finals
    return out


def ensemble_variance(
    couplings: DerivedCouplings,
    strobo: StroboConfig,
    grid: TimeGrid,
    n_traj,
    base_seed,
    quad_angle=0.0,
    initial: GaussianSpinState | None = None,
    workers=1,
    chunk_size=DEFAULT_CHUNK,
):
    """Sample variance of the rotated quadrature at the final time.

    Returns ``(variance, std_error)`` where the error is the delete-one
    jackknife standard error of the sample variance.  The measured
    quadrature is ``p cos(angle/2) + x sin(angle/2)``.  Requires
    ``n_traj >= 100``.
    """
    if n_traj < 100:
        raise ValueError(f"n_traj must be >= 100, got {n_traj}")
    finals = ensemble_finals(
        couplings, strobo, grid, n_traj, base_seed, initial, workers, chunk_size
    )
    q = finals[:, 1] * math.cos(quad_angle / 2.0) + finals[:, 0] * math.sin(quad_angle / 2.0)
    return _variance_with_jackknife(q)


def _variance_with_jackknife(q):
    n = len(q)
    s1 = float(np.sum(q))
    s2 = float(np.sum(q * q))
    var = (s2 - s1 * s1 / n) / (n - 1)
    mean_i = (s1 - q) / (n - 1)
    ss_i = s2 - q * q
    var_i = (ss_i - (n - 1) * mean_i * mean_i) / (n - 2)
    se = math.sqrt((n - 1) / n * float(np.sum((var_i - var_i.mean()) ** 2)))
    return var, se


def propagate_moments(
    couplings: DerivedCouplings,
    strobo: StroboConfig,
    grid: TimeGrid,
    initial: GaussianSpinState | None = None,
) -> MomentSeries:
    """Deterministic propagation of the mean and covariance.

    The linear stochastic equations close at second order: the mean obeys
    ``m' = -(gamma_s phi^2 + gamma_ex) m`` and the covariance
    ``C' = 2 a(t) C + D(t)`` with the diffusion

    ``D_xx = [kappa^2 phi^2 cos^2 + zeta^4 kappa^2 phi^2 sin^2]/2 + gamma_ex``
    ``D_pp = [kappa^2 phi^2 sin^2 + zeta^4 kappa^2 phi^2 cos^2]/2 + gamma_ex``
    ``D_xp = kappa^2 phi^2 (1 - zeta^4) sin cos / 2``

    (each entry is the squared noise coupling times the ``delta/2`` noise
    strength).  Integration is RK4 per step; ``phi`` is constant within a
    step because pulse edges sit on grid points.
    """
    validate_grid(grid, strobo)
    init = initial or GaussianSpinState.coherent()
    n = grid.n_steps
    dt = grid.dt
    omega = strobo.larmor
    phi = window_mask(strobo, grid)
    kap2 = couplings.kappa**2
    z4 = couplings.zeta2**2
    gs = couplings.gamma_s
    gex = couplings.gamma_ex

    times = np.arange(n + 1) * dt
    means = np.empty((n + 1, 2))
    covs = np.empty((n + 1, 2, 2))
    means[0] = init.mean
    covs[0] = init.cov

    mx, mp = float(init.mean[0]), float(init.mean[1])
    vxx = float(init.cov[0, 0])
    vpp = float(init.cov[1, 1])
    vxp = float(init.cov[0, 1])

    def deriv(tt, ph, state):
        mx_, mp_, vxx_, vpp_, vxp_ = state
        a = -(gs * ph * ph + gex)
        cc = math.cos(omega * tt)
        ss = math.sin(omega * tt)
        k2 = kap2 * ph * ph
        dxx = 0.5 * k2 * (cc * cc + z4 * ss * ss) + gex
        dpp = 0.5 * k2 * (ss * ss + z4 * cc * cc) + gex
        dxp = 0.5 * k2 * (1.0 - z4) * ss * cc
        return (
            a * mx_,
            a * mp_,
            2.0 * a * vxx_ + dxx,
            2.0 * a * vpp_ + dpp,
            2.0 * a * vxp_ + dxp,
        )

    state = (mx, mp, vxx, vpp, vxp)
    for j in range(n):
        t0 = j * dt
        ph = phi[j]
        k1 = deriv(t0, ph, state)
        s2 = tuple(s + 0.5 * dt * k for s, k in zip(state, k1))
        k2 = deriv(t0 + 0.5 * dt, ph, s2)
        s3 = tuple(s + 0.5 * dt * k for s, k in zip(state, k2))
        k3 = deriv(t0 + 0.5 * dt, ph, s3)
        s4 = tuple(s + dt * k for s, k in zip(state, k3))
        k4 = deriv(t0 + dt, ph, s4)
        state = tuple(
            s + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)
        )
        means[j + 1] = (state[0], state[1])
        covs[j + 1] = ((state[2], state[4]), (state[4], state[3]))
    return MomentSeries(times=times, means=means, covs=covs)


# ---------------------------------------------------------------------------
# ensemble checkpoint files
#
# Little-endian layout, version 1:
#   magic   8 bytes  b"SSQZCKP1"
#   u64     n_records
#   u64     n_steps
#   f64     dt
#   f64     duty, omega_m, phase        (stroboscopic settings)
#   then per record:
#   u64     seed
#   f64[2]  final_atom (x, p)
#   f64[n_steps] x_atom, p_atom, x_out, p_out
# ---------------------------------------------------------------------------

_CKPT_MAGIC = b"SSQZCKP1"
_CKPT_HEAD = struct.Struct("<QQdddd")


def save_ensemble(path, records, strobo: StroboConfig, grid: TimeGrid):
    """Write trajectory records to the documented binary checkpoint layout."""
    records = list(records)
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(
            _CKPT_HEAD.pack(
                len(records), grid.n_steps, grid.dt, strobo.duty, strobo.omega_m, strobo.phase
            )
        )
        for rec in records:
            if rec.atom.shape != (grid.n_steps, 2) or rec.light_out.shape != (grid.n_steps, 2):
                raise GridError("record arrays do not match the grid being saved")
            fh.write(struct.pack("<Q", rec.seed % (1 << 64)))
            fh.write(np.asarray(rec.final_atom, dtype="<f8").tobytes())
            for column in (rec.atom[:, 0], rec.atom[:, 1], rec.light_out[:, 0], rec.light_out[:, 1]):
                fh.write(np.ascontiguousarray(column, dtype="<f8").tobytes())


def load_ensemble(path):
    """Read a checkpoint; returns ``(records, strobo, grid)``.

    The stroboscopic config is reconstructed with its stored phase and the
    default harmonic cutoff.
    """
    with open(path, "rb") as fh:
        magic = fh.read(len(_CKPT_MAGIC))
        if magic != _CKPT_MAGIC:
            raise ValueError(f"{path}: not a trajectory checkpoint (bad magic {magic!r})")
        n_records, n_steps, dt, duty, omega_m, phase = _CKPT_HEAD.unpack(
            fh.read(_CKPT_HEAD.size)
        )
        grid = TimeGrid(dt=dt, total_time=n_steps * dt, n_steps=n_steps)
        strobo = StroboConfig(duty=duty, omega_m=omega_m, phase=phase)
        times = grid.times
        records = []
        row = np.dtype("<f8").itemsize * n_steps
        for _ in range(n_records):
            (seed,) = struct.unpack("<Q", fh.read(8))
            final = np.frombuffer(fh.read(16), dtype="<f8").copy()
            cols = [np.frombuffer(fh.read(row), dtype="<f8").copy() for _ in range(4)]
            records.append(
                TrajectoryRecord(
                    times=times,
                    atom=np.stack(cols[:2], axis=1),
                    light_out=np.stack(cols[2:], axis=1),
                    seed=int(seed),
                    final_atom=final,
                )
            )
    return records, strobo, grid
