"""
Unitary evolution, position observables and transition probabilities.

Evolution is diagonal in the energy basis, c_k(t) = exp(-i E_k t / hbar) c_k,
so every observable is evaluated from the coefficients directly.

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.signal import find_peaks
from scipy.stats import linregress

from chronos.basis import EnergyBasis, SpatialGrid, WaveFunction, require_same_basis, synthesize
from chronos.errors import InputError
from chronos.operators import EigenSystem

_LOG = logging.getLogger(__name__)

NORM_INPUT_TOLERANCE = 1e-9
IMAGINARY_RESIDUE_TOLERANCE = 1e-12
SAMPLING_FACTOR = 0.1
SIGNIFICANT_COEFFICIENT = 1e-8
FLAT_TOLERANCE = 1e-14
MIN_PEAK_SAMPLES = 64
DEFAULT_PEAK_SAMPLES = 512
PEAK_WINDOW_FACTOR = 4.0
PEAK_XTOL = 1e-7
MAXIMA_PROMINENCE = 0.05

# complex entries per evaluation block
_CHUNK_ENTRIES = 1 << 21
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _require_normalized(wf: WaveFunction) -> None:
    if abs(wf.norm - 1.0) > NORM_INPUT_TOLERANCE:
        raise InputError(f"state must be normalized, norm is {wf.norm:.12g}")


def _phases(wf: WaveFunction, times: np.ndarray) -> np.ndarray:
    """exp(-i E_k t / hbar) for every (t, k)."""
    hbar = wf.basis.config.hbar
    return np.exp(-1j * np.outer(times, wf.basis.energies) / hbar)


def _time_chunks(times: np.ndarray, width: int) -> Iterator[np.ndarray]:
    step = max(1, _CHUNK_ENTRIES // max(width, 1))
    for start in range(0, times.size, step):
        yield times[start : start + step]


def evolve(wf: WaveFunction, t: float) -> WaveFunction:
    """U_t psi; negative t evolves backward."""
    return wf.with_coefficients(_phases(wf, np.array([t]))[0] * wf.coefficients)


def _real_part(value: complex, what: str) -> float:
    if abs(value.imag) > IMAGINARY_RESIDUE_TOLERANCE * max(1.0, abs(value.real)):
        _LOG.debug("Discarding imaginary residue %.3g of %s", value.imag, what)
    return float(value.real)


def expectation_q(wf: WaveFunction) -> float:
    """<q> from the closed-form position matrix elements."""
    _require_normalized(wf)
    c = wf.coefficients
    return _real_part(complex(np.vdot(c, wf.basis.position_matrix @ c)), "<q>")


def variance_q(wf: WaveFunction) -> float:
    """<q^2> - <q>^2, clamped at zero."""
    _require_normalized(wf)
    c = wf.coefficients
    mean = expectation_q(wf)
    mean_sq = _real_part(complex(np.vdot(c, wf.basis.position_sq_matrix @ c)), "<q^2>")
    return max(0.0, mean_sq - mean**2)


def sampling_limit(wf: WaveFunction) -> float:
    """Largest time step 0.1 hbar / E_max over the energies the state carries."""
    carried = np.abs(wf.coefficients) > SIGNIFICANT_COEFFICIENT
    if not np.any(carried):
        return math.inf
    e_max = float(wf.basis.energies[carried].max())
    return SAMPLING_FACTOR * wf.basis.config.hbar / e_max


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Position mean and variance of an evolving state."""

    times: np.ndarray
    mean_q: np.ndarray
    var_q: np.ndarray
    norm: np.ndarray
    max_step: float = 0.0
    step_limit: float = math.inf
    warnings: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return self.times.size

    @property
    def norm_drift(self) -> float:
        return float(np.abs(self.norm - 1.0).max()) if self.norm.size else 0.0


def _validate_times(times: Sequence[float] | np.ndarray) -> np.ndarray:
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size == 0:
        raise InputError("time grid is empty")
    if not np.all(np.isfinite(t)):
        raise InputError("time grid holds non-finite values")
    if t.size > 1 and np.any(np.diff(t) <= 0.0):
        raise InputError("time grid must be strictly increasing")
    return t


def trajectory(wf: WaveFunction, times: Sequence[float] | np.ndarray) -> Trajectory:
    """Evolve wf over an ordered time grid and record <q>, Var q and the norm."""
    _require_normalized(wf)
    t = _validate_times(times)
    q_mat = wf.basis.position_matrix
    q2_mat = wf.basis.position_sq_matrix
    c = wf.coefficients

    means, variances, norms = [], [], []
    for block in _time_chunks(t, wf.basis.dim):
        states = _phases(wf, block) * c[None, :]
        norm_sq = np.einsum("tk,tk->t", states.conj(), states).real
        mean = np.einsum("tk,tk->t", states.conj(), states @ q_mat.T).real
        mean_sq = np.einsum("tk,tk->t", states.conj(), states @ q2_mat.T).real
        means.append(mean)
        variances.append(np.maximum(mean_sq - mean**2, 0.0))
        norms.append(np.sqrt(norm_sq))

    max_step = float(np.diff(t).max()) if t.size > 1 else 0.0
    limit = sampling_limit(wf)
    warnings: list[str] = []
    if max_step > limit:
        message = f"time step {max_step:.6g} exceeds sampling limit 0.1*hbar/E_max = {limit:.6g}"
        _LOG.warning("Trajectory: %s", message)
        warnings.append(message)

    return Trajectory(
        times=t,
        mean_q=np.concatenate(means),
        var_q=np.concatenate(variances),
        norm=np.concatenate(norms),
        max_step=max_step,
        step_limit=limit,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class VarianceMinimum:
    t_min: float
    var_min: float
    index: int
    at_edge: bool = False
    no_minimum: bool = False


def variance_minimum_time(traj: Trajectory) -> VarianceMinimum:
    """
    Global variance minimum refined by a parabola through the three samples around it.

    A minimum on the first or last sample is returned unrefined with at_edge set;
    a flat trajectory sets no_minimum.
    """
    if len(traj) < 3:
        raise InputError(f"need at least 3 samples, got {len(traj)}")
    var = traj.var_q
    i = int(np.argmin(var))
    t_i, v_i = float(traj.times[i]), float(var[i])
    if float(var.max() - var.min()) < FLAT_TOLERANCE:
        return VarianceMinimum(t_min=t_i, var_min=v_i, index=i, no_minimum=True)
    if i == 0 or i == len(traj) - 1:
        _LOG.warning("Variance minimum at window edge t=%.6g", t_i)
        return VarianceMinimum(t_min=t_i, var_min=v_i, index=i, at_edge=True)

    ts = traj.times[i - 1 : i + 2]
    vs = var[i - 1 : i + 2]
    # centre on t_i for conditioning
    a, b, c = np.polyfit(ts - t_i, vs, 2)
    if a <= 0.0:
        return VarianceMinimum(t_min=t_i, var_min=v_i, index=i)
    offset = float(np.clip(-b / (2.0 * a), ts[0] - t_i, ts[2] - t_i))
    return VarianceMinimum(t_min=t_i + offset, var_min=float(c + offset * (b + a * offset)), index=i)


def transition_probability(wf_a: WaveFunction, wf_b: WaveFunction, t: float) -> float:
    """|<b| U_t |a>|^2."""
    return float(transition_curve(wf_a, wf_b, np.array([t]))[0])


def transition_curve(wf_a: WaveFunction, wf_b: WaveFunction, times: Sequence[float] | np.ndarray) -> np.ndarray:
    """P(t) = |sum_k conj(b_k) exp(-i E_k t / hbar) a_k|^2 for every t."""
    require_same_basis(wf_a, wf_b)
    _require_normalized(wf_a)
    _require_normalized(wf_b)
    t = np.asarray(times, dtype=float).reshape(-1)
    weights = wf_b.coefficients.conj() * wf_a.coefficients
    overlaps = np.concatenate([_phases(wf_a, block) @ weights for block in _time_chunks(t, wf_a.basis.dim)])
    return np.clip(np.abs(overlaps) ** 2, 0.0, 1.0)


def golden_section_max(fun, lo: float, hi: float, xtol: float, maxiter: int = 200) -> tuple[float, float]:
    """Maximize a unimodal fun on [lo, hi] to a bracket narrower than xtol."""
    x = [lo, hi - _INV_PHI * (hi - lo), lo + _INV_PHI * (hi - lo), hi]
    y = [fun(x[1]), fun(x[2])]
    for _ in range(maxiter):
        if x[3] - x[0] <= xtol:
            break
        if y[0] > y[1]:  # keep left interval
            x[3] = x[2]
            x[2] = x[1]
            x[1] = x[3] - _INV_PHI * (x[3] - x[0])
            y[1] = y[0]
            y[0] = fun(x[1])
        else:  # keep right interval
            x[0] = x[1]
            x[1] = x[2]
            x[2] = x[0] + _INV_PHI * (x[3] - x[0])
            y[0] = y[1]
            y[1] = fun(x[2])
    if y[0] >= y[1]:
        return x[1], y[0]
    return x[2], y[1]


@dataclass(frozen=True)
class TransitionPeak:
    t_max: float
    p_max: float
    boundary_flag: bool
    window: tuple[float, float]


def transition_peak(
    wf_a: WaveFunction,
    wf_b: WaveFunction,
    window: tuple[float, float],
    samples: int = DEFAULT_PEAK_SAMPLES,
    direction: int = 1,
) -> TransitionPeak:
    """
    Time of the largest transition probability inside a window.

    A coarse scan picks the best sample; golden-section search refines it
    inside the neighbouring samples. A peak on the window edge widens the
    window once and rescans. direction -1 evaluates P at -t; t_max is always
    the elapsed time.
    """
    t_lo, t_hi = float(window[0]), float(window[1])
    if not t_lo < t_hi:
        raise InputError(f"window must satisfy t_lo < t_hi, got ({t_lo}, {t_hi})")
    if samples < MIN_PEAK_SAMPLES:
        raise InputError(f"need at least {MIN_PEAK_SAMPLES} samples, got {samples}")
    if direction not in (1, -1):
        raise InputError(f"direction must be +1 or -1, got {direction!r}")

    def scan(lo: float, hi: float) -> tuple[np.ndarray, np.ndarray, int]:
        ts = np.linspace(lo, hi, samples)
        ps = transition_curve(wf_a, wf_b, direction * ts)
        return ts, ps, int(np.argmax(ps))

    ts, ps, best = scan(t_lo, t_hi)
    on_edge = best in (0, samples - 1)
    if on_edge:
        width = t_hi - t_lo
        widened = (t_lo, t_hi + width) if best == samples - 1 else (max(0.0, t_lo - width), t_hi)
        if widened != (t_lo, t_hi):
            _LOG.debug("Transition peak on window edge, widening to [%.6g, %.6g]", *widened)
            t_lo, t_hi = widened
            ts, ps, best = scan(t_lo, t_hi)
            on_edge = best in (0, samples - 1)

    lo = ts[max(best - 1, 0)]
    hi = ts[min(best + 1, samples - 1)]

    def probability(t: float) -> float:
        return float(transition_curve(wf_a, wf_b, np.array([direction * t]))[0])

    t_max, p_max = golden_section_max(probability, lo, hi, PEAK_XTOL * (t_hi - t_lo))
    if ps[best] > p_max:
        t_max, p_max = float(ts[best]), float(ps[best])
    if on_edge:
        _LOG.warning("Transition peak stays on the window edge at t=%.6g", t_max)
    return TransitionPeak(t_max=float(t_max), p_max=float(p_max), boundary_flag=on_edge, window=(t_lo, t_hi))


@dataclass(frozen=True)
class TransitionRow:
    n: int
    n_prime: int
    delta_tau: float
    t_max: float
    p_max: float
    boundary_flag: bool


@dataclass(frozen=True)
class TransitionScan:
    """Peak transition times for a list of eigenvector pairs."""

    rows: tuple[TransitionRow, ...]
    direction: int = 1
    negative: bool = False

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def delta_tau(self) -> np.ndarray:
        return np.array([row.delta_tau for row in self.rows])

    @property
    def t_max(self) -> np.ndarray:
        return np.array([row.t_max for row in self.rows])

    @property
    def p_max(self) -> np.ndarray:
        return np.array([row.p_max for row in self.rows])

    @property
    def any_boundary(self) -> bool:
        return any(row.boundary_flag for row in self.rows)


def transition_scan(
    system: EigenSystem,
    basis: EnergyBasis,
    pairs: Sequence[tuple[int, int]],
    direction: int = 1,
    negative: bool = False,
    samples: int = DEFAULT_PEAK_SAMPLES,
    window_factor: float = PEAK_WINDOW_FACTOR,
) -> TransitionScan:
    """
    Scan eigenvector pairs (n, n') of a spectrum.

    Labels follow tau_1 > tau_2 > ... > 0; with negative set they address
    -tau_n instead. Each window is [0, window_factor * |tau_n' - tau_n|].
    """
    index = system.negative_index if negative else system.positive_index
    rows = []
    for n, n_prime in pairs:
        i, j = index(n), index(n_prime)
        delta_tau = float(system.eigenvalues[j] - system.eigenvalues[i])
        if delta_tau == 0.0:
            raise InputError(f"pair ({n}, {n_prime}) has equal eigenvalues")
        peak = transition_peak(
            system.state(i, basis),
            system.state(j, basis),
            (0.0, window_factor * abs(delta_tau)),
            samples=samples,
            direction=direction,
        )
        _LOG.debug(
            "Pair (%d, %d): dtau=%.6g t_max=%.6g p_max=%.4f%s",
            n, n_prime, delta_tau, peak.t_max, peak.p_max, " [edge]" if peak.boundary_flag else "",
        )
        rows.append(TransitionRow(n, n_prime, delta_tau, peak.t_max, peak.p_max, peak.boundary_flag))
    return TransitionScan(rows=tuple(rows), direction=direction, negative=negative)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float = 0.0
    intercept_stderr: float = 0.0


def slope_fit(points: Sequence[tuple[float, float]]) -> SlopeFit:
    """
    Ordinary least squares y = slope * x + intercept.

    Raises:
        InputError: fewer than two points or all x equal.
    """
    data = np.asarray(points, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != 2:
        raise InputError("slope fit needs at least two (x, y) points")
    x, y = data[:, 0], data[:, 1]
    if np.all(x == x[0]):
        raise InputError("slope fit is degenerate: all x values are equal")
    fit = linregress(x, y)
    residual = float(np.sum((y - (fit.slope * x + fit.intercept)) ** 2))
    total = float(np.sum((y - y.mean()) ** 2))
    if total == 0.0:
        r_squared = 1.0 if residual <= FLAT_TOLERANCE else 0.0
    else:
        r_squared = float(fit.rvalue**2)
    return SlopeFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=r_squared,
        slope_stderr=float(fit.stderr),
        intercept_stderr=float(fit.intercept_stderr),
    )


@dataclass(frozen=True, eq=False)
class DensityFrames:
    """|psi(q, t)|^2 with rows per time and columns per grid point."""

    times: np.ndarray
    points: np.ndarray
    density: np.ndarray

    def slice_at(self, index: int) -> np.ndarray:
        return self.density[index]


def density_frames(wf: WaveFunction, times: Sequence[float] | np.ndarray, grid: SpatialGrid) -> DensityFrames:
    t = _validate_times(times)
    functions = wf.basis.functions(grid.points)
    blocks = [
        np.abs((_phases(wf, block) * wf.coefficients[None, :]) @ functions.T) ** 2
        for block in _time_chunks(t, max(wf.basis.dim, grid.M))
    ]
    return DensityFrames(times=t, points=grid.points, density=np.vstack(blocks))


def count_density_maxima(density: np.ndarray, prominence: float = MAXIMA_PROMINENCE) -> int:
    """Interior local maxima with prominence above a fraction of the slice peak."""
    values = np.asarray(density, dtype=float)
    peak = float(values.max()) if values.size else 0.0
    if peak <= 0.0:
        return 0
    found, _ = find_peaks(values, prominence=prominence * peak)
    return int(found.size)


def position_moments_on_grid(wf: WaveFunction, grid: SpatialGrid) -> tuple[float, float]:
    """(<q>, Var q) by Simpson integration of the synthesized density."""
    q = grid.points
    density = np.abs(synthesize(wf, grid)) ** 2
    norm = simpson(density, x=q)
    mean = simpson(q * density, x=q) / norm
    mean_sq = simpson(q**2 * density, x=q) / norm
    return float(mean), float(max(mean_sq - mean**2, 0.0))
