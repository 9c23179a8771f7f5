"""
Scenario runner: builds spectra, evolves states and writes result artifacts.

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import logging
import math
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np

from chronos.basis import EnergyBasis, SpatialGrid, WaveFunction
from chronos.cache import EigenCache
from chronos.config import OutputFormat, Scenario, ScenarioConfig
from chronos.dynamics import (
    DensityFrames,
    Trajectory,
    TransitionScan,
    count_density_maxima,
    density_frames,
    evolve,
    expectation_q,
    slope_fit,
    trajectory,
    transition_curve,
    transition_scan,
    variance_minimum_time,
)
from chronos.errors import ConfigError, NumericalError
from chronos.operators import (
    EigenSystem,
    OperatorKind,
    canonical_domain_category,
    canonical_domain_sample,
    ccr_defect,
    converge_truncation,
    cto_matrix,
    ctoa_eigenvalue_from_root,
    ctoa_matrix,
    eig_hermitian,
    hilbert_schmidt_sum,
    negated,
)
from chronos.plots import PlotKind, emit_svg
from chronos.results import RESOLVED_NAME, SUMMARY_NAME, RunOutput
from chronos.specfun import ctoa_roots_below, find_ctoa_roots

_LOG = logging.getLogger(__name__)

ARRIVAL_TARGET = 0.02765
EVOLUTION_TARGET = 0.03521
CTO_PAIR_RANGE = (300, 320)
CTOA_PAIR_RANGE = (1, 10)
DEFAULT_ROOT_COUNT = 20
CCR_SAMPLES = 100
SPECTRUM_COMPARED = 20
MAX_TRUNCATION = 2048
TRACKING_DEVIATION = 0.2
T_MAX_DRIFT_WARNING = 0.01


def _reversed_trajectory(traj: Trajectory) -> Trajectory:
    """Trajectory sampled on increasing -t, relabelled by elapsed time."""
    return Trajectory(
        times=-traj.times[::-1],
        mean_q=traj.mean_q[::-1],
        var_q=traj.var_q[::-1],
        norm=traj.norm[::-1],
        max_step=traj.max_step,
        step_limit=traj.step_limit,
        warnings=traj.warnings,
    )


def _variance_drop(initial: float, minimum: float) -> float:
    """Relative depth of a variance minimum below the starting variance."""
    return float((initial - minimum) / initial) if initial > 0 else 0.0


def backward_trajectory(wf: WaveFunction, times: np.ndarray) -> Trajectory:
    return _reversed_trajectory(trajectory(wf, -np.asarray(times, dtype=float)[::-1]))


def backward_density(wf: WaveFunction, times: np.ndarray, grid: SpatialGrid) -> DensityFrames:
    frames = density_frames(wf, -np.asarray(times, dtype=float)[::-1], grid)
    return DensityFrames(times=-frames.times[::-1], points=frames.points, density=frames.density[::-1])


class Experiment:
    """One scenario run bound to its output directory and eigen cache."""

    def __init__(self, cfg: ScenarioConfig):
        self._cfg = cfg
        self._system = cfg.system
        self._cache = EigenCache(cfg.cache)
        self._out = RunOutput(cfg.out)
        self._notices: list[str] = list(cfg.notices)
        self._warnings: list[str] = []
        self._summary: dict[str, Any] = {}
        self._bases: dict[int, EnergyBasis] = {}

    @property
    def config(self) -> ScenarioConfig:
        return self._cfg

    @property
    def log_id(self) -> str:
        return f"{self._cfg.scenario} g={self._cfg.gamma:g} K={self._cfg.K}"

    @property
    def summary(self) -> dict[str, Any]:
        return self._summary

    @property
    def with_svg(self) -> bool:
        return self._cfg.fmt == OutputFormat.CSV_SVG

    def notice(self, message: str) -> None:
        _LOG.info("[%s] %s", self.log_id, message)
        self._notices.append(message)

    def warn(self, message: str) -> None:
        _LOG.warning("[%s] %s", self.log_id, message)
        self._warnings.append(message)

    def basis(self, K: int) -> EnergyBasis:
        if K not in self._bases:
            self._bases[K] = EnergyBasis(self._system, K)
        return self._bases[K]

    def eigensystem(self, kind: OperatorKind, K: int) -> EigenSystem:
        build = ctoa_matrix if kind is OperatorKind.CTOA_TAT else cto_matrix
        return self._cache.eigensystem(kind, self.basis(K), build)

    def flipped_eigensystem(self, kind: OperatorKind, K: int) -> EigenSystem:
        """Decomposition of -T, the sign-flipped operator. Not cached."""
        build = ctoa_matrix if kind is OperatorKind.CTOA_TAT else cto_matrix
        _LOG.debug("[%s] Diagonalizing sign-flipped %s at K=%d", self.log_id, kind.label, K)
        return eig_hermitian(negated(build(self.basis(K))))

    def run(self) -> Path:
        """Execute the scenario and return the manifest path."""
        scenario = self._cfg.scenario
        _LOG.info("[%s] Starting scenario, output in %s", self.log_id, self._out.directory)
        # rewritten with the final notices once the scenario completes
        self._write_resolved()

        if scenario == Scenario.CTOA_ARRIVAL:
            self.run_ctoa_arrival()
        elif scenario == Scenario.CTO_EVOLUTION:
            self.run_cto_evolution()
        elif scenario == Scenario.CTO_TRANSITIONS:
            self.run_cto_transitions()
        elif scenario == Scenario.CTOA_TRANSITIONS:
            self.run_ctoa_transitions()
        elif scenario == Scenario.SPECTRUM:
            self.run_spectrum()
        elif scenario == Scenario.ROOTS:
            self.run_roots()
        elif scenario == Scenario.CCR_CHECK:
            self.run_ccr_check()
        else:
            raise ConfigError(f"unknown scenario {scenario!r}", field="scenario")

        self._notices.extend(self._cache.notices)
        self._summary.update(
            {
                "scenario": str(scenario),
                "gamma": self._cfg.gamma,
                "notices": self._notices,
                "warnings": self._warnings,
                "cache": {"hits": self._cache.hits, "misses": self._cache.misses},
            }
        )
        self._out.json(SUMMARY_NAME, self._summary)
        self._write_resolved()
        manifest = self._out.finalize()
        _LOG.info("[%s] Scenario finished, %d files", self.log_id, len(self._out.files))
        return manifest

    def _write_resolved(self) -> Path:
        resolved = self._cfg.to_dict()
        resolved["notices"] = self._notices
        return self._out.json(RESOLVED_NAME, resolved)

    # selection

    def _target(self, default: float) -> float | None:
        """Target eigenvalue, or None when an index range was given."""
        if self._cfg.n_lo is not None:
            return None
        if self._cfg.target_tau is None:
            self.notice(f"target eigenvalue defaulted to {default}")
            return default
        return self._cfg.target_tau

    def _select(self, system: EigenSystem, default: float) -> int:
        target = self._target(default)
        if target is None:
            return system.positive_index(self._cfg.n_lo)
        return system.nearest(target, self._cfg.tau_tolerance)

    def _time_grid(self, tau: float, samples: int) -> np.ndarray:
        t_max = self._cfg.t_max if self._cfg.t_max is not None else 2.0 * abs(tau)
        return np.linspace(0.0, t_max, samples)

    def _record_trajectory(self, name: str, traj: Trajectory) -> Path:
        for message in traj.warnings:
            self.warn(f"{name}: {message}")
        path = self._out.columns(
            name, {"t": traj.times, "mean_q": traj.mean_q, "var_q": traj.var_q, "norm": traj.norm}
        )
        if self.with_svg:
            self._out.adopt(emit_svg(path, PlotKind.TRAJECTORY))
        return path

    def _record_density(self, name: str, frames: DensityFrames) -> Path:
        times = np.repeat(frames.times, frames.points.size)
        points = np.tile(frames.points, frames.times.size)
        path = self._out.columns(name, {"t": times, "q": points, "density": frames.density.ravel()})
        if self.with_svg:
            self._out.adopt(emit_svg(path, PlotKind.DENSITY))
        return path

    def _record_scan(self, name: str, scan: TransitionScan) -> Path:
        path = self._out.csv(
            name,
            ["n", "n_prime", "delta_tau", "t_max", "p_max", "boundary_flag"],
            [(r.n, r.n_prime, r.delta_tau, r.t_max, r.p_max, r.boundary_flag) for r in scan.rows],
        )
        if scan.any_boundary:
            self.warn(f"{name}: {sum(r.boundary_flag for r in scan.rows)} peaks on the window edge")
        if self.with_svg and len(scan) >= 2:
            self._out.adopt(emit_svg(path, PlotKind.TRANSITIONS))
        return path

    def _record_curves(self, name: str, system: EigenSystem, basis: EnergyBasis, scan: TransitionScan) -> Path:
        rows = []
        chosen = [scan.rows[0], scan.rows[-1]] if len(scan) > 1 else list(scan.rows)
        index = system.negative_index if scan.negative else system.positive_index
        for row in chosen:
            times = np.linspace(0.0, 4.0 * abs(row.delta_tau), self._cfg.t_samples)
            probability = transition_curve(
                system.state(index(row.n), basis), system.state(index(row.n_prime), basis), scan.direction * times
            )
            rows.extend((row.n, row.n_prime, t, p) for t, p in zip(times, probability))
        return self._out.csv(name, ["n", "n_prime", "t", "probability"], rows)

    @staticmethod
    def _scan_summary(scan: TransitionScan) -> dict[str, Any]:
        summary: dict[str, Any] = {
            "pairs": len(scan),
            "p_max_min": float(scan.p_max.min()),
            "p_max_max": float(scan.p_max.max()),
            "boundary_flags": int(sum(r.boundary_flag for r in scan.rows)),
        }
        if len(scan) >= 2:
            fit = slope_fit(list(zip(np.abs(scan.delta_tau), scan.t_max)))
            summary.update(
                slope=fit.slope, intercept=fit.intercept, r_squared=fit.r_squared, slope_stderr=fit.slope_stderr
            )
        return summary

    # scenarios

    def run_ctoa_arrival(self):
        """Forward evolution of a CTOA eigenfunction: variance focus and arrival at the origin."""
        K = self._cfg.K
        basis = self.basis(K)
        system = self.eigensystem(OperatorKind.CTOA_TAT, K)
        index = self._select(system, ARRIVAL_TARGET)
        tau = float(system.eigenvalues[index])
        wf = system.state(index, basis)
        _LOG.info("[%s] Selected CTOA eigenvalue %.10g (column %d)", self.log_id, tau, index)

        times = self._time_grid(tau, self._cfg.t_samples)
        traj = trajectory(wf, times)
        self._record_trajectory("trajectory.csv", traj)
        minimum = variance_minimum_time(traj)
        mean_at_min = expectation_q(evolve(wf, minimum.t_min))

        grid = SpatialGrid(self._cfg.grid, self._system.l)
        frames = density_frames(wf, self._time_grid(tau, self._cfg.density_slices), grid)
        self._record_density("density.csv", frames)

        x_target = self._system.mu * self._system.l**2 / (4.0 * self._system.hbar * tau)
        roots = ctoa_roots_below(self._cfg.gamma, x_target + 1.0)
        root_taus = roots.taus(self._system)
        self._summary.update(
            {
                "tau": tau,
                "tau_from_roots": float(root_taus[np.argmin(np.abs(root_taus - tau))]),
                "t_min": minimum.t_min,
                "var_min": minimum.var_min,
                "relative_deviation": abs(minimum.t_min - tau) / tau,
                "variance_drop": _variance_drop(traj.var_q[0], minimum.var_min),
                "mean_q_at_t_min": mean_at_min,
                "at_edge": minimum.at_edge,
                "no_minimum": minimum.no_minimum,
                "norm_drift": traj.norm_drift,
            }
        )

    def run_cto_evolution(self):
        """Forward and backward evolution of a CTO eigenfunction."""
        K = self._cfg.K
        basis = self.basis(K)
        system = self.eigensystem(OperatorKind.CTO_PTT, K)
        index = self._select(system, EVOLUTION_TARGET)
        tau = float(system.eigenvalues[index])
        wf = system.state(index, basis)
        _LOG.info("[%s] Selected CTO eigenvalue %.10g (column %d)", self.log_id, tau, index)

        times = self._time_grid(tau, self._cfg.t_samples)
        forward = trajectory(wf, times)
        backward = backward_trajectory(wf, times)
        self._record_trajectory("trajectory_forward.csv", forward)
        self._record_trajectory("trajectory_backward.csv", backward)

        flipped = self.flipped_eigensystem(OperatorKind.CTO_PTT, K)
        mirror = flipped.nearest(tau, 1e-8 * abs(tau) + flipped.zero_threshold)
        flipped_forward = trajectory(flipped.state(mirror, basis), times)
        self._record_trajectory("trajectory_flipped.csv", flipped_forward)
        var_scale = float(np.abs(backward.var_q).max()) or 1.0

        grid = SpatialGrid(self._cfg.grid, self._system.l)
        slices = self._time_grid(tau, self._cfg.density_slices)
        frames = {"forward": density_frames(wf, slices, grid), "backward": backward_density(wf, slices, grid)}
        maxima_rows = []
        for direction, frame in frames.items():
            self._record_density(f"density_{direction}.csv", frame)
            maxima_rows.extend(
                (direction, t, count_density_maxima(frame.slice_at(i))) for i, t in enumerate(frame.times)
            )
        self._out.csv("maxima.csv", ["direction", "t", "maxima"], maxima_rows)

        near = int(np.argmin(np.abs(slices - abs(tau))))
        minimum = variance_minimum_time(backward)
        self._summary.update(
            {
                "tau": tau,
                "gamma_defaulted": any(note.startswith("gamma defaulted") for note in self._notices),
                "maxima_near_tau_backward": count_density_maxima(frames["backward"].slice_at(near)),
                "maxima_near_tau_forward": count_density_maxima(frames["forward"].slice_at(near)),
                "t_near_tau": float(slices[near]),
                "backward_t_min": minimum.t_min,
                "backward_var_min": minimum.var_min,
                "backward_variance_drop": _variance_drop(backward.var_q[0], minimum.var_min),
                "backward_minimum_within_25pct": bool(abs(minimum.t_min - abs(tau)) <= 0.25 * abs(tau)),
                "at_edge": minimum.at_edge,
                "flipped_tau": float(flipped.eigenvalues[mirror]),
                "flipped_var_deviation": float(np.abs(flipped_forward.var_q - backward.var_q).max() / var_scale),
                "flipped_mean_mirror": float(np.abs(flipped_forward.mean_q + backward.mean_q).max()),
            }
        )

    def _pair_range(self, default: tuple[int, int]) -> tuple[int, int]:
        if self._cfg.n_lo is None:
            self.notice(f"pair range defaulted to n in [{default[0]}, {default[1]}]")
            return default
        return self._cfg.n_lo, self._cfg.n_hi

    def run_cto_transitions(self):
        """Peak times of P_t[n, n-1] for CTO eigenvectors against the eigenvalue gaps."""
        n_lo, n_hi = self._pair_range(CTO_PAIR_RANGE)
        if n_lo < 2:
            self.notice("pairs (n, n-1) need n >= 2; starting at n = 2")
            n_lo = 2
        if n_hi < n_lo:
            raise ConfigError(f"no CTO pairs in [{n_lo}, {n_hi}]", field="n_hi")

        K0 = max(self._cfg.K, 2 ** math.ceil(math.log2(n_hi + 1)))
        if K0 != self._cfg.K:
            self.notice(f"truncation raised to K={K0} to hold n={n_hi}")

        def solve(K: int) -> EigenSystem:
            return self.eigensystem(OperatorKind.CTO_PTT, K)

        K, system, history = converge_truncation(solve, n_hi, K0, rtol=self._cfg.tau_tolerance, max_K=MAX_TRUNCATION)
        _LOG.info("[%s] Converged truncation K=%d for tau_%d", self.log_id, K, n_hi)
        basis = self.basis(K)
        pairs = [(n, n - 1) for n in range(n_lo, n_hi + 1)]

        forward = transition_scan(system, basis, pairs, direction=1)
        backward = transition_scan(system, basis, pairs, direction=-1, negative=True)
        self._record_scan("transitions.csv", forward)
        self._record_scan("transitions_backward.csv", backward)
        self._record_curves("curves.csv", system, basis, forward)

        coarse = transition_scan(solve(K // 2), self.basis(K // 2), pairs[-1:], direction=1)
        drift = abs(coarse.t_max[0] - forward.t_max[-1]) / forward.t_max[-1]
        if drift > T_MAX_DRIFT_WARNING:
            self.warn(f"t_max of pair {pairs[-1]} moves {drift:.2%} between K={K // 2} and K={K}")

        self._summary.update(
            {
                "K": K,
                "truncation_history": [[k, tau] for k, tau in history],
                "forward": self._scan_summary(forward),
                "backward": self._scan_summary(backward),
                "duality_p_max": float(np.abs(forward.p_max - backward.p_max).max()),
                "duality_t_max": float(np.abs(forward.t_max - backward.t_max).max()),
                "t_max_drift_last_pair": drift,
            }
        )

    def run_ctoa_transitions(self):
        """Peak times of P_t[n, n+1] for CTOA eigenvectors in both time directions."""
        n_lo, n_hi = self._pair_range(CTOA_PAIR_RANGE)
        K = self._cfg.K
        basis = self.basis(K)
        system = self.eigensystem(OperatorKind.CTOA_TAT, K)
        available = min(system.positive_count, int(np.count_nonzero(system.eigenvalues < -system.zero_threshold)))
        if n_hi + 1 > available:
            raise ConfigError(f"pair ({n_hi}, {n_hi + 1}) exceeds {available} eigenvalue pairs", field="n_hi")
        pairs = [(n, n + 1) for n in range(n_lo, n_hi + 1)]

        forward = transition_scan(system, basis, pairs, direction=1)
        backward = transition_scan(system, basis, pairs, direction=-1)
        negative = transition_scan(system, basis, pairs, direction=1, negative=True)
        negative_backward = transition_scan(system, basis, pairs, direction=-1, negative=True)
        flipped = transition_scan(self.flipped_eigensystem(OperatorKind.CTOA_TAT, K), basis, pairs, direction=1)
        self._record_scan("transitions_forward.csv", forward)
        self._record_scan("transitions_backward.csv", backward)
        self._record_scan("transitions_negative.csv", negative)
        self._record_scan("transitions_flipped.csv", flipped)
        self._record_curves("curves.csv", system, basis, forward)

        def deviating(scan: TransitionScan) -> int:
            gaps = np.abs(scan.delta_tau)
            return int(np.count_nonzero(np.abs(scan.t_max - gaps) > TRACKING_DEVIATION * gaps))

        self._summary.update(
            {
                "K": K,
                "forward": self._scan_summary(forward),
                "backward": self._scan_summary(backward),
                "negative": self._scan_summary(negative),
                "flipped": self._scan_summary(flipped),
                "p_max_overall": float(max(forward.p_max.max(), backward.p_max.max())),
                "deviating_forward": deviating(forward),
                "deviating_backward": deviating(backward),
                "duality_p_max": float(np.abs(backward.p_max - negative.p_max).max()),
                "duality_p_max_forward": float(np.abs(forward.p_max - negative_backward.p_max).max()),
                "flip_equivalence_p_max": float(np.abs(flipped.p_max - negative.p_max).max()),
                "flip_equivalence_t_max": float(np.abs(flipped.t_max - negative.t_max).max()),
            }
        )

    def run_spectrum(self):
        """Both spectra, with the CTOA eigenvalues checked against the Bessel roots."""
        K = self._cfg.K
        basis = self.basis(K)
        spectra = {kind: self.eigensystem(kind, K) for kind in OperatorKind}
        for kind, system in spectra.items():
            self._out.columns(
                f"spectrum_{kind.label.lower()}.csv",
                {"index": np.arange(system.dim), "eigenvalue": system.eigenvalues},
            )

        ctoa = spectra[OperatorKind.CTOA_TAT]
        count = min(SPECTRUM_COMPARED, ctoa.positive_count)
        roots = find_ctoa_roots(self._cfg.gamma, count)
        rows = []
        for n in range(1, count + 1):
            # matched by value, not by position in the spectrum
            from_root = ctoa_eigenvalue_from_root(roots.root(n), self._system)
            positive = float(ctoa.eigenvalues[np.argmin(np.abs(ctoa.eigenvalues - from_root))])
            negative = float(ctoa.eigenvalues[np.argmin(np.abs(ctoa.eigenvalues + from_root))])
            rows.append((n, roots.root(n), from_root, positive, negative, abs(positive - from_root) / from_root))
        self._out.csv("compare.csv", ["n", "r_n", "tau_root", "tau_matrix", "tau_matrix_negative", "rel_diff"], rows)

        cto = spectra[OperatorKind.CTO_PTT]
        norm = cto.matrix_norm
        pairing = float(np.abs(cto.eigenvalues + cto.eigenvalues[::-1]).max())
        self._summary.update(
            {
                "K": K,
                "dim": basis.dim,
                "max_rel_diff": float(max(row[-1] for row in rows)),
                "cto_pairing_defect": pairing / norm,
                "cto_near_zero": int(np.count_nonzero(np.abs(cto.eigenvalues) <= 1e-10 * norm)),
                "cto_frobenius_norm": norm,
                "hilbert_schmidt_sum": hilbert_schmidt_sum(basis),
                "residual_bound": {kind.label: system.residual_bound for kind, system in spectra.items()},
            }
        )

    def run_roots(self):
        """Table of the first roots of the CTOA eigenvalue equation."""
        count = self._cfg.n_hi if self._cfg.n_hi is not None else DEFAULT_ROOT_COUNT
        roots = find_ctoa_roots(self._cfg.gamma, count)
        self._out.adopt(roots.to_csv(self._out.path("roots.csv"), self._system))
        self._summary.update(
            {
                "count": len(roots),
                "max_residual": float(max(roots.residuals)),
                "max_residual_bound": float(max(roots.bounds)),
                "taus": roots.taus(self._system),
            }
        )

    def run_ccr_check(self):
        """Commutator defect on seeded canonical-domain samples."""
        K = self._cfg.K
        rows = []
        stats: dict[str, Any] = {}
        plan: list[tuple[OperatorKind, int]] = [(OperatorKind.CTO_PTT, K), (OperatorKind.CTOA_TAT, K)]
        plan.append((OperatorKind.CTOA_TAT, 2 * K))
        builders: dict[OperatorKind, Callable] = {OperatorKind.CTO_PTT: cto_matrix, OperatorKind.CTOA_TAT: ctoa_matrix}
        for kind, k in plan:
            basis = self.basis(k)
            matrix = builders[kind](basis)
            defects = []
            for sample in range(CCR_SAMPLES):
                wf = canonical_domain_sample(kind, basis, self._cfg.seed + sample)
                defects.append(ccr_defect(matrix, basis, wf, kind))
                rows.append((kind.label, k, sample, defects[-1]))
            stats[f"{kind.label}_K{k}"] = {
                "category": canonical_domain_category(kind),
                "max": float(np.max(defects)),
                "mean": float(np.mean(defects)),
            }
            _LOG.info("[%s] %s K=%d: max CCR defect %.3g", self.log_id, kind.label, k, max(defects))
        self._out.csv("ccr.csv", ["operator", "K", "sample", "defect"], rows)
        self._summary.update({"K": K, "samples": CCR_SAMPLES, "defects": stats})


def run_scenario(cfg: ScenarioConfig) -> Path:
    """
    Run one scenario and return the path of its manifest.

    Raises:
        ConfigError: selection not resolvable.
        NumericalError: a numerical contract failed.
    """
    try:
        return Experiment(cfg).run()
    except NumericalError as err:
        _LOG.error("Scenario %s failed: %s", cfg.scenario, err)
        raise
