"""
Time operators conjugate to the confined-particle Hamiltonian.

Two operators are built in the energy representation:

- CTOA: confined time-of-arrival operator, an integral operator with kernel
  -mu (q + q') [e^{i gamma} H(q - q') + e^{-i gamma} H(q' - q)] / (4 hbar sin gamma);
  time-of-arrival type, [T, H] = -i hbar on its (closed) canonical domain.
- CTO: characteristic time operator, T_kl = i hbar / (E_k - E_l), T_kk = 0;
  passage-time type, [T, H] = +i hbar on its (dense) canonical domain.

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.special import gamma as gamma_fn
from scipy.special import jv

from chronos.basis import (
    EnergyBasis,
    QuadratureRule,
    WaveFunction,
    composite_gauss_legendre,
    panels_for_frequency,
    project_function,
)
from chronos.config import SystemConfig
from chronos.errors import DomainError, InputError, NumericalError, SelectionError
from chronos.specfun import RootTable, bessel_j

_LOG = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-10
ORTHONORMALITY_TOLERANCE = 1e-10
NEAREST_LISTED = 5


class OperatorKind(Enum):
    """Operator tag with its TE-CCR sign: [T, H] = ccr_sign * i hbar on the canonical domain."""

    CTOA_TAT = ("CTOA", -1, "closed")
    CTO_PTT = ("CTO", 1, "dense")

    def __init__(self, label: str, ccr_sign: int, category: str):
        self.label = label
        self.ccr_sign = ccr_sign
        self.category = category

    @classmethod
    def from_label(cls, label: str) -> "OperatorKind":
        for kind in cls:
            if kind.label == label:
                return kind
        raise InputError(f"unknown operator label {label!r}")


def canonical_domain_category(kind: OperatorKind) -> str:
    """'dense' for the CTO, 'closed' for the CTOA."""
    return kind.category


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Truncated operator; the lower triangle is rebuilt from the upper one."""

    entries: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.entries, dtype=complex)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1] or raw.shape[0] < 1:
            raise InputError(f"expected a non-empty square matrix, got shape {raw.shape}")
        upper = np.triu(raw, 1)
        entries = upper + upper.conj().T + np.diag(np.diag(raw).real)
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.entries @ vector


def negated(matrix: HermitianMatrix) -> HermitianMatrix:
    """-T: flips TAT <-> PTT formally."""
    return HermitianMatrix(-matrix.entries)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Ascending eigenvalues with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_bound: float
    orthonormality_error: float = 0.0
    matrix_norm: float = field(default=0.0, compare=False)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def zero_threshold(self) -> float:
        return RESIDUAL_TOLERANCE * self.matrix_norm

    @cached_property
    def positive_count(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > self.zero_threshold))

    def positive_index(self, n: int) -> int:
        """Column of the n-th largest positive eigenvalue (tau_1 > tau_2 > ... > 0)."""
        if not 1 <= n <= self.positive_count:
            raise SelectionError(f"positive eigenvalue n={n} outside [1, {self.positive_count}]", field="n")
        return self.dim - n

    def negative_index(self, n: int) -> int:
        """Column of -tau_n."""
        negatives = int(np.count_nonzero(self.eigenvalues < -self.zero_threshold))
        if not 1 <= n <= negatives:
            raise SelectionError(f"negative eigenvalue n={n} outside [1, {negatives}]", field="n")
        return n - 1

    def tau(self, n: int) -> float:
        return float(self.eigenvalues[self.positive_index(n)])

    def positive_eigenvalues(self) -> np.ndarray:
        """tau_1 > tau_2 > ... > 0."""
        return self.eigenvalues[::-1][: self.positive_count].copy()

    def nearest(self, value: float, tolerance: float) -> int:
        """
        Column whose eigenvalue is closest to value.

        Raises:
            SelectionError: nothing within tolerance; lists the nearest eigenvalues.
        """
        distance = np.abs(self.eigenvalues - value)
        order = np.argsort(distance, kind="stable")
        best = int(order[0])
        if distance[best] > tolerance:
            raise SelectionError(
                f"no eigenvalue within {tolerance:g} of {value:g}",
                nearest=[float(self.eigenvalues[i]) for i in order[:NEAREST_LISTED]],
                field="target_tau",
            )
        return best

    def state(self, index: int, basis: EnergyBasis) -> WaveFunction:
        return WaveFunction(basis, self.eigenvectors[:, index])


def eig_hermitian(matrix: HermitianMatrix) -> EigenSystem:
    """
    Full spectral decomposition with deterministic ordering and phases.

    Eigenvalues ascend (ties keep solver order); each eigenvector's largest
    component is made real and positive.

    Raises:
        NumericalError: solver failure, or residual / orthonormality above tolerance.
    """
    a = matrix.entries
    try:
        values, vectors = scipy.linalg.eigh(a)
    except (scipy.linalg.LinAlgError, ValueError) as err:
        _LOG.error("Hermitian eigensolver failed on N=%d: %s", matrix.dim, err)
        raise NumericalError(f"eigensolver did not converge: {err}", {"dim": matrix.dim}) from err

    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]

    pivots = np.argmax(np.abs(vectors), axis=0)
    pivot_values = vectors[pivots, np.arange(vectors.shape[1])]
    vectors = vectors * (np.abs(pivot_values) / pivot_values)[None, :]
    vectors[pivots, np.arange(vectors.shape[1])] = np.abs(pivot_values)

    norm = matrix.frobenius_norm
    residuals = np.linalg.norm(a @ vectors - vectors * values[None, :], axis=0)
    residual_bound = float(residuals.max())
    gram_error = float(np.abs(vectors.conj().T @ vectors - np.eye(matrix.dim)).max())

    if residual_bound > RESIDUAL_TOLERANCE * norm:
        worst = int(np.argmax(residuals))
        _LOG.error("Eigen residual %.3g exceeds tolerance at column %d (N=%d)", residual_bound, worst, matrix.dim)
        raise NumericalError(
            f"eigen residual {residual_bound:.3g} exceeds {RESIDUAL_TOLERANCE:g} * ||A||_F",
            {"dim": matrix.dim, "worst_column": worst, "worst_residual": residual_bound, "frobenius_norm": norm},
        )
    if gram_error > ORTHONORMALITY_TOLERANCE:
        raise NumericalError(
            f"eigenvectors not orthonormal (max deviation {gram_error:.3g})",
            {"dim": matrix.dim, "orthonormality_error": gram_error},
        )

    _LOG.debug("Diagonalized N=%d, residual bound %.3g", matrix.dim, residual_bound)
    return EigenSystem(
        eigenvalues=values,
        eigenvectors=vectors,
        residual_bound=residual_bound,
        orthonormality_error=gram_error,
        matrix_norm=norm,
    )


def ctoa_kernel(q: float | np.ndarray, q_prime: float | np.ndarray, cfg: SystemConfig) -> complex | np.ndarray:
    """<q|T_CTOA|q'> with H(0) = 1/2 on the diagonal."""
    q_arr = np.asarray(q, dtype=float)
    qp_arr = np.asarray(q_prime, dtype=float)
    if np.any(np.abs(q_arr) > cfg.l) or np.any(np.abs(qp_arr) > cfg.l):
        raise DomainError(f"kernel arguments outside [-{cfg.l}, {cfg.l}]")
    step = np.heaviside(q_arr - qp_arr, 0.5)
    phase = np.exp(1j * cfg.gamma) * step + np.exp(-1j * cfg.gamma) * (1.0 - step)
    values = -cfg.mu * (q_arr + qp_arr) * phase / (4.0 * cfg.hbar * math.sin(cfg.gamma))
    return complex(values) if values.ndim == 0 else values


def _moment0(c: np.ndarray, l: float) -> np.ndarray:
    """Integral of exp(i c q) over [-l, l]."""
    safe = np.where(c == 0.0, 1.0, c)
    return np.where(c == 0.0, 2.0 * l, 2.0 * np.sin(c * l) / safe)


def _moment1(c: np.ndarray, l: float) -> np.ndarray:
    """Integral of q exp(i c q) over [-l, l]."""
    safe = np.where(c == 0.0, 1.0, c)
    return np.where(c == 0.0, 0.0, -2j * l * np.cos(c * l) / safe + 2j * np.sin(c * l) / safe**2)


def ctoa_matrix(basis: EnergyBasis) -> HermitianMatrix:
    """
    CTOA matrix elements by exact integration over the two triangles q' < q and q' > q.

    With a = alpha_k and b = alpha_k' the inner integral over q' < q is elementary;
    the outer one reduces to the moments of exp(i c q) and q exp(i c q).
    """
    cfg = basis.config
    l = cfg.l
    a = basis.wavenumbers[:, None]
    b = basis.wavenumbers[None, :]
    m = basis.indices[None, :] - basis.indices[:, None]

    # b - a = m pi / l exactly; its moments are known in closed form
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    safe_m = np.where(m == 0, 1, m)
    diff_m0 = np.where(m == 0, 2.0 * l, 0.0)
    diff_m1 = np.where(m == 0, 0.0, -2j * l**2 * sign / (safe_m * math.pi))

    ib = 1j * b
    lower = (2.0 / ib) * diff_m1 + diff_m0 / b**2 - np.exp(-1j * b * l) * (
        _moment1(-a, l) / ib + (1.0 / b**2 - l / ib) * _moment0(-a, l)
    )
    full = _moment0(b, l) * _moment1(-a, l) + _moment1(b, l) * _moment0(-a, l)
    upper = full - lower

    prefactor = -cfg.mu / (4.0 * cfg.hbar * math.sin(cfg.gamma)) / (2.0 * l)
    entries = prefactor * (np.exp(1j * cfg.gamma) * lower + np.exp(-1j * cfg.gamma) * upper)
    _LOG.debug("Built CTOA matrix N=%d (gamma=%g)", basis.dim, cfg.gamma)
    return HermitianMatrix(entries)


def ctoa_matrix_quadrature(basis: EnergyBasis, panels: int | None = None) -> HermitianMatrix:
    """CTOA matrix by nested composite Gauss-Legendre quadrature on both triangles."""
    cfg = basis.config
    l = cfg.l
    omega = 2.0 * float(np.abs(basis.wavenumbers).max())
    panels = panels or panels_for_frequency(omega, 2.0 * l)
    outer = composite_gauss_legendre(-l, l, panels)
    reference = composite_gauss_legendre(-1.0, 1.0, panels)

    q = outer.nodes[:, None]
    half_lo = 0.5 * (q + l)
    half_hi = 0.5 * (l - q)
    nodes_lo = -l + half_lo * (reference.nodes[None, :] + 1.0)
    nodes_hi = q + half_hi * (reference.nodes[None, :] + 1.0)
    weights_lo = half_lo * reference.weights[None, :]
    weights_hi = half_hi * reference.weights[None, :]

    def inner(nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
        # sum over q' of w (q + q') exp(i b q') for every outer node and every column b
        integrand = (weights * (q + nodes))[:, :, None] * np.exp(1j * nodes[:, :, None] * basis.wavenumbers)
        return integrand.sum(axis=1)

    mixed = np.exp(1j * cfg.gamma) * inner(nodes_lo, weights_lo) + np.exp(-1j * cfg.gamma) * inner(nodes_hi, weights_hi)
    rows = np.exp(-1j * np.outer(outer.nodes, basis.wavenumbers)) * outer.weights[:, None]
    prefactor = -cfg.mu / (4.0 * cfg.hbar * math.sin(cfg.gamma)) / (2.0 * l)
    return HermitianMatrix(prefactor * rows.T @ mixed)


def cto_matrix(basis: EnergyBasis) -> HermitianMatrix:
    """
    CTO matrix T_kl = i hbar / (E_k - E_l), zero diagonal.

    Raises:
        DomainError: two energies coincide.
    """
    energies = basis.energies
    gaps = energies[:, None] - energies[None, :]
    off_diagonal = ~np.eye(basis.dim, dtype=bool)
    if np.any(gaps[off_diagonal] == 0.0):
        raise DomainError("degenerate energy pair, CTO undefined")
    safe = np.where(off_diagonal, gaps, 1.0)
    entries = np.where(off_diagonal, 1j * basis.config.hbar / safe, 0.0)
    return HermitianMatrix(entries)


def hilbert_schmidt_sum(basis: EnergyBasis) -> float:
    """Sum over k != k' of hbar^2 / (E_k - E_k')^2, i.e. ||CTO||_F^2 on the window."""
    gaps = basis.energies[:, None] - basis.energies[None, :]
    off_diagonal = ~np.eye(basis.dim, dtype=bool)
    return float(np.sum(basis.config.hbar**2 / gaps[off_diagonal] ** 2))


def ctoa_eigenvalue_from_root(r: float, cfg: SystemConfig) -> float:
    """tau = mu l^2 / (4 hbar r); the caller applies the sign."""
    if r <= 0:
        raise DomainError(f"root must be positive, got {r!r}")
    return cfg.mu * cfg.l**2 / (4.0 * cfg.hbar * r)


def _scaled_bessel_pair(nu: float, rho: float, x: np.ndarray, branch: int) -> np.ndarray:
    """(4x)^nu (J_{-nu}(x) + branch * i J_rho(x)); the x = 0 limit is 8^nu / Gamma(1 - nu)."""
    positive = x > 0.0
    safe = np.where(positive, x, 1.0)
    values = (4.0 * safe) ** nu * (jv(-nu, safe) + branch * 1j * jv(rho, safe))
    return np.where(positive, values, 8.0**nu / gamma_fn(1.0 - nu))


def ctoa_eigenfunction_analytic(
    n: int, sign: int, q: float | np.ndarray, cfg: SystemConfig, roots: RootTable
) -> complex | np.ndarray:
    """
    Unnormalized CTOA eigenfunction for root r_n; sign +1 gives +tau_n, -1 gives -tau_n.

    Raises:
        LookupError: r_n not in the root table.
        DomainError: q outside [-l, l] or sign not +-1.
    """
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign!r}")
    r = roots.root(n)
    q_arr = np.asarray(q, dtype=float)
    if np.any(np.abs(q_arr) > cfg.l):
        raise DomainError(f"position outside [-{cfg.l}, {cfg.l}]")

    cot = cfg.cot_gamma
    even_weight = bessel_j(-0.25, r) - cot * bessel_j(0.75, r)
    odd_weight = bessel_j(-0.75, r) - cot * bessel_j(0.25, r)
    x = r * q_arr**2 / cfg.l**2
    # sign +1 pairs with J^- (minus i), sign -1 with J^+
    branch = -sign
    values = np.exp(-sign * 1j * x) * (
        _scaled_bessel_pair(0.75, 0.25, x, branch) * even_weight
        + sign * (2.0 * q_arr * math.sqrt(r) / cfg.l) * _scaled_bessel_pair(0.25, 0.75, x, branch) * odd_weight
    )
    return complex(values) if values.ndim == 0 else values


@dataclass(frozen=True)
class AnalyticCtoaEigenfunction:
    """Normalized closed-form CTOA eigenfunction phi_n^sign."""

    n: int
    sign: int
    roots: RootTable = field(repr=False)
    config: SystemConfig

    @property
    def r_n(self) -> float:
        return self.roots.root(self.n)

    @property
    def gamma(self) -> float:
        return self.config.gamma

    @property
    def tau(self) -> float:
        return self.sign * ctoa_eigenvalue_from_root(self.r_n, self.config)

    @cached_property
    def quadrature(self) -> QuadratureRule:
        # phase exp(-i r q^2 / l^2) plus Bessel oscillation of the same rate
        omega = 4.0 * self.r_n / self.config.l + 8.0
        return composite_gauss_legendre(-self.config.l, self.config.l, panels_for_frequency(omega, 2.0 * self.config.l))

    @cached_property
    def normalization(self) -> float:
        values = ctoa_eigenfunction_analytic(self.n, self.sign, self.quadrature.nodes, self.config, self.roots)
        return 1.0 / math.sqrt(float(self.quadrature.integrate(np.abs(values) ** 2)))

    def __call__(self, q: float | np.ndarray) -> complex | np.ndarray:
        return self.normalization * ctoa_eigenfunction_analytic(self.n, self.sign, q, self.config, self.roots)

    def project(self, basis: EnergyBasis) -> WaveFunction:
        return project_function(self, basis)


def ccr_defect(matrix: HermitianMatrix, basis: EnergyBasis, wf: WaveFunction, kind: OperatorKind) -> float:
    """
    ||([T, H] - s i hbar) psi|| / ||psi|| with s = kind.ccr_sign.

    The commutator is formed entrywise, [T, H]_kl = T_kl (E_l - E_k).

    Raises:
        InputError: dimension mismatch or zero vector.
    """
    if wf.basis.dim != matrix.dim or basis.dim != matrix.dim:
        raise InputError(f"state of dimension {wf.basis.dim} does not match operator of dimension {matrix.dim}")
    norm = wf.norm
    if norm == 0.0:
        raise InputError("CCR defect is undefined for the zero vector")
    energies = basis.energies
    commutator = matrix.entries * (energies[None, :] - energies[:, None])
    psi = wf.coefficients
    defect = commutator @ psi - kind.ccr_sign * 1j * basis.config.hbar * psi
    return float(np.linalg.norm(defect) / norm)


def canonical_domain_sample(kind: OperatorKind, basis: EnergyBasis, seed: int) -> WaveFunction:
    """
    Seeded normalized vector from the operator's canonical domain.

    CTO: complex Gaussian coefficients shifted to zero sum.
    CTOA: (l^2 - q^2)^2 p(q) for a random cubic p, corrected by a multiple of
    (l^2 - q^2)^3 to zero mean, then projected.
    """
    rng = np.random.default_rng(seed)
    if kind is OperatorKind.CTO_PTT:
        coefficients = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
        coefficients -= coefficients.mean()
        return WaveFunction(basis, coefficients).normalized()

    l = basis.config.l
    poly = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    exact = composite_gauss_legendre(-l, l, 1, 8)

    def shaped(q: np.ndarray) -> np.ndarray:
        return (l**2 - q**2) ** 2 * np.polynomial.polynomial.polyval(q, poly)

    correction = -exact.integrate(shaped(exact.nodes)) / (32.0 * l**7 / 35.0)

    def sample(q: np.ndarray) -> np.ndarray:
        return shaped(q) + correction * (l**2 - q**2) ** 3

    return project_function(sample, basis).normalized()


def converge_truncation(
    solve: Callable[[int], EigenSystem],
    n: int,
    K0: int,
    rtol: float = 1e-3,
    max_K: int = 2048,
) -> tuple[int, EigenSystem, list[tuple[int, float]]]:
    """
    Double K until tau_n moves by less than rtol (relative).

    Returns the accepted K (the larger of the last pair), its eigensystem and
    the (K, tau_n) history.

    Raises:
        NumericalError: max_K reached without convergence.
    """
    K = max(K0, n)
    previous = solve(K)
    history = [(K, previous.tau(n))]
    while 2 * K <= max_K:
        K *= 2
        current = solve(K)
        history.append((K, current.tau(n)))
        change = abs(history[-1][1] - history[-2][1]) / abs(history[-1][1])
        _LOG.info("Truncation K=%d: tau_%d=%.10g (relative change %.3g)", K, n, history[-1][1], change)
        if change < rtol:
            return K, current, history
        previous = current
    raise NumericalError(
        f"tau_{n} not converged to {rtol:g} by K={max_K}",
        {"n": n, "history": [[k, tau] for k, tau in history]},
    )
