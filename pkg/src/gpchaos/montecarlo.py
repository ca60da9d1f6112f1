"""Joint path sampling of (X, dX) and Monte Carlo oracles.

Paths are drawn by circulant embedding in the spectral domain: the
covariance row is periodized, its FFT gives the embedding eigenvalues, and
multiplying each spectral amplitude by i*lambda produces the derivative
channel, so (X, dX) carry their exact joint law on the grid (up to reported
eigenvalue clipping).  Every path is a deterministic function of
(seed, path_index) no matter how work is scheduled.
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chaos import Functional
from .errors import DomainError, EmbeddingFailure
from .kernels import Kernel
from .specfun import hermite

__all__ = [
    "EmbeddingPlan",
    "build_embedding_plan",
    "PathSample",
    "sample_paths",
    "count_crossings",
    "CrossingStats",
    "crossing_statistics",
    "crossing_refinement",
    "rice_crossing_mean",
    "MCMoments",
    "mc_integrated_functional",
    "mc_integrated_functionals",
    "ms_derivative_residual",
    "MSDerivativeCheck",
    "ms_derivative_check",
    "write_paths_binary",
    "read_paths_binary",
]

# Periodization wraps of the covariance row on each side.
PERIODIZATION_WRAPS = 8

# Relative negativity of embedding eigenvalues tolerated before failure,
# and the floor below which eigenvalues are zeroed.
EMBEDDING_FAILURE_TOL = 1e-8
EIGENVALUE_FLOOR = 1e-12

# Doublings of the embedding size allowed while chasing covariance tails.
GROWTH_CAP = 6

_BINARY_MAGIC = b"GPRG"
_BINARY_VERSION = 1


def _worker_count(workers=None) -> int:
    if workers is not None:
        count = int(workers)
    else:
        env = os.environ.get("GPCHAOS_WORKERS", "")
        try:
            count = int(env) if env else 1
        except ValueError:
            raise DomainError(f"GPCHAOS_WORKERS={env!r} is not an integer") from None
    if count < 1:
        raise DomainError(f"worker count {count} must be at least 1")
    return count


# ---------------------------------------------------------------------------
# embedding plan


@dataclass(frozen=True)
class EmbeddingPlan:
    """Spectral data for sampling (X, dX) on a fixed grid.

    ``eigenvalues`` is the FFT of the periodized covariance row after
    flooring; ``clipped`` counts negative eigenvalues that were zeroed and
    ``min_eigenvalue`` records the worst value before clipping.
    """

    kernel: str
    grid_points: int
    grid_step: float
    embedding_size: int
    sigma: float
    eigenvalues: np.ndarray
    angular_frequencies: np.ndarray
    clipped: int
    min_eigenvalue: float
    notes: tuple


def build_embedding_plan(kernel: Kernel, grid_points: int) -> EmbeddingPlan:
    """Periodize r, double the embedding until the wrap-around tail of
    (r, r', r'') is negligible, and check the eigenvalues are usable."""
    if int(grid_points) != grid_points or grid_points < 2:
        raise DomainError(f"grid_points={grid_points} must be an integer >= 2")
    n = int(grid_points)
    dt = 1.0 / (n - 1)
    r2 = kernel.r2_zero()  # the joint law needs the derivative channel
    sigma = math.sqrt(-r2)
    tail_tol = 1e-9 * max(1.0, abs(r2))

    def tail(size):
        period = size * dt
        total = 0.0
        for j in (1, 2):
            s = j * period
            total += abs(kernel.r(s)) + abs(kernel.r_prime(s)) + abs(kernel.r_second(s))
        return total

    m = 1 << max(3, math.ceil(math.log2(4 * (n - 1))))
    notes = []
    doublings = 0
    while tail(m) > tail_tol and doublings < GROWTH_CAP:
        m *= 2
        doublings += 1
    if tail(m) > tail_tol:
        notes.append(
            f"covariance tail {tail(m):.3e} above tolerance {tail_tol:.3e} "
            f"at the size cap; periodization bias is not controlled"
        )

    period = m * dt
    t_row = np.arange(m) * dt
    row = np.zeros(m)
    for j in range(-PERIODIZATION_WRAPS, PERIODIZATION_WRAPS + 1):
        row += kernel.r(np.abs(t_row + j * period))
    eig = np.fft.fft(row).real
    eig_max = float(eig.max())
    eig_min = float(eig.min())
    if eig_max <= 0.0:
        raise EmbeddingFailure(f"embedding of {kernel.spec_string()} has no positive eigenvalues")
    if eig_min < -EMBEDDING_FAILURE_TOL * eig_max:
        raise EmbeddingFailure(
            f"embedding of {kernel.spec_string()} at {m} points has eigenvalue "
            f"{eig_min:.3e} below -{EMBEDDING_FAILURE_TOL:g} * max ({eig_max:.3e})"
        )
    clipped = int(np.count_nonzero(eig < 0.0))
    if clipped:
        notes.append(
            f"clipped {clipped} negative eigenvalues (worst {eig_min:.3e} "
            f"against max {eig_max:.3e})"
        )
    eig = np.where(eig < EIGENVALUE_FLOOR * eig_max, 0.0, eig)
    lam = 2.0 * math.pi * np.fft.fftfreq(m, d=dt)
    return EmbeddingPlan(
        kernel=kernel.spec_string(),
        grid_points=n,
        grid_step=dt,
        embedding_size=m,
        sigma=sigma,
        eigenvalues=eig,
        angular_frequencies=lam,
        clipped=clipped,
        min_eigenvalue=eig_min,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# path generation


@dataclass(frozen=True)
class PathSample:
    grid_step: float
    length: int
    x: np.ndarray
    xdot: np.ndarray
    seed: int
    path_index: int


def _check_run_args(n_paths, seed):
    if int(n_paths) != n_paths or n_paths < 1:
        raise DomainError(f"n_paths={n_paths} must be a positive integer")
    if int(seed) != seed or seed < 0:
        raise DomainError(f"seed={seed} must be a nonnegative integer")
    return int(n_paths), int(seed)


def _pair_chunk(embedding_size: int) -> int:
    # fixed by the plan alone so chunk boundaries (and hence array
    # stacking) never depend on the worker count
    return max(1, (1 << 21) // embedding_size)


def _pair_block(plan: EmbeddingPlan, seed: int, pair_start: int, pair_stop: int):
    """Paths [2*pair_start, 2*pair_stop): one complex field per pair, the
    real part feeding the even path and the imaginary part the odd one."""
    m = plan.embedding_size
    count = pair_stop - pair_start
    amp = np.sqrt(plan.eigenvalues * m)
    z = np.empty((count, m), dtype=complex)
    for i, pair in enumerate(range(pair_start, pair_stop)):
        draws = np.random.Generator(
            np.random.Philox(key=[seed, pair])
        ).standard_normal(2 * m)
        z[i] = draws[:m] + 1j * draws[m:]
    spectral = amp * z
    n = plan.grid_points
    field_x = np.fft.ifft(spectral, axis=1)[:, :n]
    field_d = np.fft.ifft(1j * plan.angular_frequencies * spectral, axis=1)[:, :n]
    x = np.empty((2 * count, n))
    xdot = np.empty((2 * count, n))
    x[0::2] = field_x.real
    x[1::2] = field_x.imag
    xdot[0::2] = field_d.real
    xdot[1::2] = field_d.imag
    return x, xdot


def _per_path_values(plan, seed, n_paths, statistic, workers=None) -> np.ndarray:
    """Evaluate a per-path statistic for paths 0..n_paths-1, in order.

    ``statistic(x_block, xdot_block)`` maps path blocks to a 1-D array.
    Chunks are fixed by the plan, and results are reassembled by path
    index, so the output is bit-identical at any worker count.
    """
    chunk = _pair_chunk(plan.embedding_size)
    n_pairs = (n_paths + 1) // 2
    spans = [(s, min(s + chunk, n_pairs)) for s in range(0, n_pairs, chunk)]

    def run(span):
        lo, hi = span
        x, xdot = _pair_block(plan, seed, lo, hi)
        keep = min(2 * hi, n_paths) - 2 * lo
        return np.asarray(statistic(x[:keep], xdot[:keep]), dtype=float)

    workers = _worker_count(workers)
    if workers == 1 or len(spans) == 1:
        parts = [run(span) for span in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, spans))
    return np.concatenate(parts) if parts else np.empty(0)


def sample_paths(kernel: Kernel, grid_points: int, n_paths: int, seed: int, plan=None):
    """Yield PathSample objects for path_index = 0..n_paths-1."""
    n_paths, seed = _check_run_args(n_paths, seed)
    if plan is None:
        plan = build_embedding_plan(kernel, grid_points)
    chunk = _pair_chunk(plan.embedding_size)
    n_pairs = (n_paths + 1) // 2
    for lo in range(0, n_pairs, chunk):
        hi = min(lo + chunk, n_pairs)
        x, xdot = _pair_block(plan, seed, lo, hi)
        for i in range(min(2 * hi, n_paths) - 2 * lo):
            yield PathSample(
                grid_step=plan.grid_step,
                length=plan.grid_points,
                x=x[i].copy(),
                xdot=xdot[i].copy(),
                seed=seed,
                path_index=2 * lo + i,
            )


# ---------------------------------------------------------------------------
# crossings


def count_crossings(path, level: float = 0.0) -> int:
    """Sign changes of x - level across adjacent grid points.

    Tie rule: a grid value exactly at the level inherits the sign of the
    previous excursion (a touch is not a crossing); a path that starts on
    the level takes the opposite of its first excursion, so leaving the
    level counts as one crossing.  Ties have probability zero for the
    sampled laws; the rule only pins down determinism.
    """
    x = path.x if isinstance(path, PathSample) else np.asarray(path, dtype=float)
    s = np.sign(x - level)
    nonzero = np.flatnonzero(s)
    if nonzero.size == 0:
        return 0
    first = nonzero[0]
    if first > 0:
        s[:first] = -s[first]
    # forward-fill interior ties with the previous nonzero sign
    idx = np.arange(s.size)
    idx[s == 0.0] = 0
    idx = np.maximum.accumulate(idx)
    filled = s[idx]
    return int(np.count_nonzero(filled[1:] != filled[:-1]))


def _crossing_counts(x_block, level):
    s = np.sign(x_block - level)
    out = np.empty(s.shape[0])
    for i in range(s.shape[0]):
        row = s[i]
        nonzero = np.flatnonzero(row)
        if nonzero.size == 0:
            out[i] = 0.0
            continue
        first = nonzero[0]
        if first > 0:
            row[:first] = -row[first]
        idx = np.arange(row.size)
        idx[row == 0.0] = 0
        idx = np.maximum.accumulate(idx)
        filled = row[idx]
        out[i] = np.count_nonzero(filled[1:] != filled[:-1])
    return out


@dataclass(frozen=True)
class CrossingStats:
    kernel: str
    level: float
    n_paths: int
    grid_points: int
    seed: int
    mean: float
    variance: float
    std_error: float
    second_moment: float


def _moment_stats(values: np.ndarray):
    n = values.size
    mean = math.fsum(values) / n
    second = math.fsum(v * v for v in values) / n
    if n > 1:
        variance = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    else:
        variance = 0.0
    return mean, second, variance


def crossing_statistics(
    kernel: Kernel, level: float, n_paths: int, grid_points: int, seed: int, workers=None
) -> CrossingStats:
    n_paths, seed = _check_run_args(n_paths, seed)
    plan = build_embedding_plan(kernel, grid_points)
    counts = _per_path_values(
        plan, seed, n_paths, lambda x, xd: _crossing_counts(x, level), workers
    )
    mean, second, variance = _moment_stats(counts)
    return CrossingStats(
        kernel=plan.kernel,
        level=float(level),
        n_paths=n_paths,
        grid_points=plan.grid_points,
        seed=seed,
        mean=mean,
        variance=variance,
        std_error=math.sqrt(variance / n_paths),
        second_moment=second,
    )


def crossing_refinement(
    kernel: Kernel, level: float, n_paths: int, grids, seed: int, workers=None
):
    """Crossing statistics across a grid-refinement sequence.

    Discrete counting can only miss crossings of a continuous path, so the
    reported means should be nondecreasing as the grid doubles.
    """
    return tuple(
        crossing_statistics(kernel, level, n_paths, g, seed, workers) for g in grids
    )


def rice_crossing_mean(kernel: Kernel, level: float = 0.0) -> float:
    """Expected level crossings on [0,1] of a unit-variance stationary
    Gaussian path: (1/pi) sqrt(-r''(0)) exp(-level^2/2)."""
    r2 = kernel.r2_zero()
    return math.sqrt(-r2) / math.pi * math.exp(-0.5 * level * level)


# ---------------------------------------------------------------------------
# integrated functionals


def _evaluate_functional(func: Functional, x, xdot_normalized):
    if func.kind == "H2":
        return hermite(func.a, x) * hermite(func.b, xdot_normalized)
    v = xdot_normalized if func.axis == "xdot" else x
    if func.kind == "H":
        return hermite(func.m, v)
    if func.kind == "sign":
        return np.sign(v)
    if func.kind == "abs":
        return np.abs(v)
    return (v > func.level).astype(float)  # ind


@dataclass(frozen=True)
class MCMoments:
    functional: str
    kernel: str
    n_paths: int
    grid_points: int
    seed: int
    mean: float
    second_moment: float
    std_error: float
    mean_std_error: float


def mc_integrated_functionals(
    functionals, kernel: Kernel, n_paths: int, grid_points: int, seed: int, workers=None
):
    """Monte Carlo moments of int_0^1 Lambda(X_t, dX_t/sigma) dt for each
    functional, sharing one set of paths.

    ``std_error`` is the standard error of the second moment, the quantity
    the chaos pipeline predicts; ``mean_std_error`` goes with the mean.
    """
    functionals = list(functionals)
    n_paths, seed = _check_run_args(n_paths, seed)
    plan = build_embedding_plan(kernel, grid_points)

    def statistic(x, xd):
        xn = xd / plan.sigma
        rows = [
            np.trapezoid(_evaluate_functional(f, x, xn), dx=plan.grid_step, axis=1)
            for f in functionals
        ]
        return np.concatenate(rows)  # len(functionals) blocks per chunk

    stacked = _per_path_values(
        plan,
        seed,
        n_paths,
        lambda x, xd: statistic(x, xd).reshape(len(functionals), -1).T.ravel(),
        workers,
    )
    per_func = stacked.reshape(-1, len(functionals)).T
    out = []
    for f, values in zip(functionals, per_func):
        mean, second, variance = _moment_stats(values)
        squares = values * values
        _, _, var_sq = _moment_stats(squares)
        out.append(
            MCMoments(
                functional=f.spec_string(),
                kernel=plan.kernel,
                n_paths=n_paths,
                grid_points=plan.grid_points,
                seed=seed,
                mean=mean,
                second_moment=second,
                std_error=math.sqrt(var_sq / n_paths),
                mean_std_error=math.sqrt(variance / n_paths),
            )
        )
    return out


def mc_integrated_functional(
    functional: Functional, kernel: Kernel, n_paths: int, grid_points: int, seed: int,
    workers=None,
) -> MCMoments:
    return mc_integrated_functionals(
        [functional], kernel, n_paths, grid_points, seed, workers
    )[0]


# ---------------------------------------------------------------------------
# mean-square derivative


def ms_derivative_residual(kernel: Kernel, h: float) -> float:
    """Analytic residual E[((X_{t+h}-X_t)/h - dX_t)^2] for lag h > 0:
    (2 - 2 r(h))/h^2 + 2 r'(h)/h - r''(0)."""
    if not h > 0.0:
        raise DomainError(f"h={h} must be positive")
    r2 = kernel.r2_zero()
    return (2.0 - 2.0 * kernel.r(h)) / (h * h) + 2.0 * kernel.r_prime(h) / h - r2


@dataclass(frozen=True)
class MSDerivativeCheck:
    kernel: str
    h_requested: float
    h: float
    n_paths: int
    grid_points: int
    seed: int
    analytic: float
    mc_estimate: float
    std_error: float


def ms_derivative_check(
    kernel: Kernel, h: float, n_paths: int, grid_points: int, seed: int, workers=None
) -> MSDerivativeCheck:
    """Compare the analytic residual with sampled difference quotients.

    h is snapped to the nearest positive grid lag; both the analytic value
    (at the snapped h) and the Monte Carlo estimate refer to that lag.
    """
    if not h > 0.0:
        raise DomainError(f"h={h} must be positive")
    n_paths, seed = _check_run_args(n_paths, seed)
    plan = build_embedding_plan(kernel, grid_points)
    lag = max(1, int(round(h / plan.grid_step)))
    if lag >= plan.grid_points:
        raise DomainError(f"h={h} exceeds the grid span")
    h_eff = lag * plan.grid_step

    def statistic(x, xd):
        quotient = (x[:, lag] - x[:, 0]) / h_eff
        return (quotient - xd[:, 0]) ** 2

    values = _per_path_values(plan, seed, n_paths, statistic, workers)
    mean, _, variance = _moment_stats(values)
    return MSDerivativeCheck(
        kernel=plan.kernel,
        h_requested=float(h),
        h=h_eff,
        n_paths=n_paths,
        grid_points=plan.grid_points,
        seed=seed,
        analytic=ms_derivative_residual(kernel, h_eff),
        mc_estimate=mean,
        std_error=math.sqrt(variance / n_paths),
    )


# ---------------------------------------------------------------------------
# binary path dumps


def write_paths_binary(paths, file) -> int:
    """Dump paths (header GPRG, version, grid step, counts; then row-major
    float64 x then xdot per path).  Returns the number of paths written."""
    samples = list(paths)
    if not samples:
        raise DomainError("no paths to write")
    length = samples[0].length
    step = samples[0].grid_step
    for s in samples:
        if s.length != length or s.grid_step != step:
            raise DomainError("paths in one dump must share grid step and length")

    def emit(handle):
        handle.write(_BINARY_MAGIC)
        handle.write(struct.pack("<IdQQ", _BINARY_VERSION, step, len(samples), length))
        for s in samples:
            handle.write(np.ascontiguousarray(s.x, dtype="<f8").tobytes())
            handle.write(np.ascontiguousarray(s.xdot, dtype="<f8").tobytes())

    if hasattr(file, "write"):
        emit(file)
    else:
        with open(file, "wb") as handle:
            emit(handle)
    return len(samples)


def read_paths_binary(file):
    """Inverse of write_paths_binary: (grid_step, x, xdot) with arrays of
    shape (n_paths, length)."""

    def consume(handle):
        magic = handle.read(4)
        if magic != _BINARY_MAGIC:
            raise DomainError(f"bad magic {magic!r}; expected {_BINARY_MAGIC!r}")
        version, step, n_paths, length = struct.unpack("<IdQQ", handle.read(28))
        if version != _BINARY_VERSION:
            raise DomainError(f"unsupported dump version {version}")
        data = np.frombuffer(handle.read(16 * n_paths * length), dtype="<f8")
        if data.size != 2 * n_paths * length:
            raise DomainError("truncated path dump")
        data = data.reshape(n_paths, 2, length)
        return step, data[:, 0, :].copy(), data[:, 1, :].copy()

    if hasattr(file, "read"):
        return consume(file)
    with open(file, "rb") as handle:
        return consume(handle)
