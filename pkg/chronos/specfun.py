"""
Fractional-order Bessel functions and the CTOA eigenvalue equation.

The CTOA eigenvalues are tau_n = +-mu l^2 / (4 hbar r_n), where r_n are the
positive roots of

    F(x) = J_{-3/4}(x) J_{-1/4}(x) - cot^2(gamma) J_{3/4}(x) J_{1/4}(x).

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv, jvp

from chronos.config import SystemConfig
from chronos.errors import DomainError, InsufficientRangeError, NumericalError

_LOG = logging.getLogger(__name__)

ROOT_SCAN_STEP = min(0.05, math.pi / 8)
ROOT_RTOL = 1e-15
# residual bound: ROOT_ULP_SLACK * ulp(x) * |F'(x)| / scale + ROOT_NOISE_FLOOR
ROOT_ULP_SLACK = 16.0
ROOT_NOISE_FLOOR = 1e-13
# log-spaced lead-in below the first scan step; the first root sits near (sqrt(3)/2) tan(gamma)
LEAD_IN_START = 1e-9
LEAD_IN_POINTS = 96


def bessel_j(nu: float, x: float | np.ndarray) -> float | np.ndarray:
    """
    Bessel function of the first kind J_nu(x) for real order and x > 0.

    Raises:
        DomainError: any x <= 0.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr > 0.0)):
        raise DomainError("Bessel argument must be strictly positive")
    values = jv(nu, x_arr)
    return float(values) if values.ndim == 0 else values


def bessel_j_derivative(nu: float, x: float | np.ndarray) -> float | np.ndarray:
    """J_nu'(x) = (J_{nu-1}(x) - J_{nu+1}(x)) / 2."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr > 0.0)):
        raise DomainError("Bessel argument must be strictly positive")
    values = jvp(nu, x_arr)
    return float(values) if values.ndim == 0 else values


def _cot_sq(gamma: float) -> float:
    if not 0.0 < gamma < math.pi / 2:
        raise DomainError(f"gamma must lie strictly inside (0, pi/2), got {gamma!r}")
    return (math.cos(gamma) / math.sin(gamma)) ** 2


def ctoa_characteristic(x: float | np.ndarray, gamma: float) -> float | np.ndarray:
    """F(x) for the CTOA eigenvalue equation."""
    cot_sq = _cot_sq(gamma)
    return bessel_j(-0.75, x) * bessel_j(-0.25, x) - cot_sq * bessel_j(0.75, x) * bessel_j(0.25, x)


def characteristic_scale(x: float | np.ndarray, gamma: float) -> float | np.ndarray:
    """Magnitude of the two terms of F; residuals are measured against it."""
    cot_sq = _cot_sq(gamma)
    return np.abs(bessel_j(-0.75, x) * bessel_j(-0.25, x)) + cot_sq * np.abs(bessel_j(0.75, x) * bessel_j(0.25, x))


def ctoa_characteristic_derivative(x: float | np.ndarray, gamma: float) -> float | np.ndarray:
    """F'(x) by the product rule."""
    cot_sq = _cot_sq(gamma)
    j = {nu: bessel_j(nu, x) for nu in (-0.75, -0.25, 0.25, 0.75)}
    dj = {nu: bessel_j_derivative(nu, x) for nu in (-0.75, -0.25, 0.25, 0.75)}
    return dj[-0.75] * j[-0.25] + j[-0.75] * dj[-0.25] - cot_sq * (dj[0.75] * j[0.25] + j[0.75] * dj[0.25])


def residual_bound(x: float | np.ndarray, gamma: float) -> float | np.ndarray:
    """
    Attainable relative residual of F at a double-precision root x.

    One ulp of x moves F by about ulp(x) |F'(x)|, so no root can do better.
    """
    x_arr = np.asarray(x, dtype=float)
    scale = characteristic_scale(x_arr, gamma)
    slope = np.abs(ctoa_characteristic_derivative(x_arr, gamma))
    bound = ROOT_ULP_SLACK * np.spacing(x_arr) * slope / scale + ROOT_NOISE_FLOOR
    return float(bound) if np.ndim(bound) == 0 else bound


@dataclass(frozen=True)
class RootTable:
    """
    Ordered positive roots of F with their relative residuals.

    When `bounds` is given every residual must lie within its bound.
    """

    gamma: float
    roots: tuple[float, ...]
    residuals: tuple[float, ...]
    bounds: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.roots) != len(self.residuals):
            raise NumericalError("root table has mismatched roots and residuals")
        if any(r <= 0.0 for r in self.roots):
            raise NumericalError("root table holds a non-positive root", {"roots": list(self.roots)})
        if any(b <= a for a, b in zip(self.roots, self.roots[1:])):
            raise NumericalError("root table is not strictly increasing", {"roots": list(self.roots)})
        if self.bounds is not None:
            if len(self.bounds) != len(self.roots):
                raise NumericalError("root table has mismatched roots and bounds")
            over = [i for i, (res, bound) in enumerate(zip(self.residuals, self.bounds)) if not res <= bound]
            if over:
                worst = max(over, key=lambda i: self.residuals[i] / self.bounds[i])
                raise NumericalError(
                    f"{len(over)} roots miss their residual bound",
                    {
                        "gamma": self.gamma,
                        "index": worst + 1,
                        "root": self.roots[worst],
                        "residual": self.residuals[worst],
                        "bound": self.bounds[worst],
                    },
                )

    def __len__(self) -> int:
        return len(self.roots)

    def root(self, n: int) -> float:
        """r_n with 1-based n."""
        if not 1 <= n <= len(self.roots):
            raise LookupError(f"root index {n} not in table of {len(self.roots)} roots")
        return self.roots[n - 1]

    def taus(self, cfg: SystemConfig) -> np.ndarray:
        """Positive eigenvalues mu l^2 / (4 hbar r_n), descending."""
        return cfg.mu * cfg.l**2 / (4.0 * cfg.hbar * np.asarray(self.roots))

    def to_csv(self, path: Path, cfg: SystemConfig) -> Path:
        """Write columns n,r_n,tau_n,residual,residual_bound (nan when unbounded)."""
        taus = self.taus(cfg)
        bounds = self.bounds if self.bounds is not None else (math.nan,) * len(self.roots)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["n", "r_n", "tau_n", "residual", "residual_bound"])
            rows = zip(self.roots, taus, self.residuals, bounds)
            for n, (root, tau, residual, bound) in enumerate(rows, start=1):
                writer.writerow([n, f"{root:.17g}", f"{tau:.17g}", f"{residual:.17g}", f"{bound:.17g}"])
        return path


def scan_points(x_max: float, step: float = ROOT_SCAN_STEP) -> np.ndarray:
    """Sampling abscissae for bracketing: log lead-in, then uniform steps."""
    lead_in = np.geomspace(LEAD_IN_START, step, LEAD_IN_POINTS, endpoint=False)
    lead_in = lead_in[lead_in < x_max]
    uniform = np.arange(1, math.floor(x_max / step) + 1) * step
    if uniform.size == 0 or uniform[-1] < x_max:
        uniform = np.append(uniform, x_max)
    return np.concatenate([lead_in, uniform])


def find_ctoa_roots(gamma: float, count: int, x_max: float | None = None, step: float = ROOT_SCAN_STEP) -> RootTable:
    """
    First `count` positive roots of F by scan-and-bracket plus Brent refinement.

    Args:
        gamma: boundary phase in (0, pi/2).
        count: number of roots wanted (>= 1).
        x_max: scan limit; defaults to a range that always holds `count` roots.
        step: uniform scan step.

    Raises:
        InsufficientRangeError: fewer than `count` sign changes below x_max.
        NumericalError: a refined root misses its residual bound.
    """
    if count < 1:
        raise DomainError(f"root count must be >= 1, got {count}")
    # F has two roots per pi asymptotically
    x_max = x_max if x_max is not None else (count + 2) * math.pi
    table = ctoa_roots_below(gamma, x_max, step)
    if len(table) < count:
        raise InsufficientRangeError(
            f"only {len(table)} roots below x_max={x_max:g}, {count} requested",
            {"gamma": gamma, "x_max": x_max, "found": len(table), "count": count},
        )
    table = RootTable(
        gamma=gamma, roots=table.roots[:count], residuals=table.residuals[:count], bounds=table.bounds[:count]
    )
    _LOG.info(
        "Found %d CTOA roots for gamma=%g (r_1=%.6g, r_%d=%.6g)", count, gamma, table.roots[0], count, table.roots[-1]
    )
    return table


def ctoa_roots_below(gamma: float, x_max: float, step: float = ROOT_SCAN_STEP) -> RootTable:
    """Every root of F on (0, x_max] that the scan brackets."""
    if not x_max > 0.0:
        raise DomainError(f"scan limit must be positive, got {x_max!r}")
    xs = scan_points(x_max, step)
    values = ctoa_characteristic(xs, gamma)
    brackets = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    exact = np.flatnonzero(values == 0.0)
    if exact.size:
        _LOG.debug("Scan hit %d exact zeros of F at gamma=%g", exact.size, gamma)

    def f(x: float) -> float:
        return float(ctoa_characteristic(x, gamma))

    roots: list[float] = [float(xs[i]) for i in exact]
    for i in brackets:
        lo, hi = float(xs[i]), float(xs[i + 1])
        roots.append(brentq(f, lo, hi, xtol=np.finfo(float).tiny, rtol=ROOT_RTOL, maxiter=400))
    roots = sorted(roots)
    residuals = [abs(f(r)) / float(characteristic_scale(r, gamma)) for r in roots]
    bounds = [float(residual_bound(r, gamma)) for r in roots]
    _LOG.debug(
        "Bracketed %d roots of F below %g (max residual %.3g)", len(roots), x_max, max(residuals, default=0.0)
    )
    return RootTable(gamma=gamma, roots=tuple(roots), residuals=tuple(residuals), bounds=tuple(bounds))


def count_sign_changes(gamma: float, x_max: float, step: float = 1e-3) -> int:
    """Brute-force count of sign changes of F on (0, x_max] at a fixed step."""
    xs = np.arange(1, math.floor(x_max / step) + 1) * step
    values = ctoa_characteristic(xs, gamma)
    return int(np.count_nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0))
