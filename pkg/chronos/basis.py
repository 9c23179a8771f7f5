"""
Confined particle model: energy eigenbasis, states and position operators.

The basis functions are phi_k(q) = (2l)^(-1/2) exp(i (gamma + k pi) q / l),
k in [-K, K], with energies E_k = p_k^2 / (2 mu) and p_k = hbar (gamma + k pi) / l.

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import roots_legendre

from chronos.config import SystemConfig
from chronos.errors import DomainError, InputError

_LOG = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 1001
GL_NODES_PER_PANEL = 32
NODES_PER_PERIOD = 8
NORMALIZED_TOLERANCE = 1e-12

# relative slack for q = +-l rounding
_EDGE_SLACK = 1e-12


def momentum_eigenvalue(k: int, cfg: SystemConfig) -> float:
    """p_k = hbar (gamma + k pi) / l."""
    return cfg.hbar * (cfg.gamma + k * math.pi) / cfg.l


def energy_eigenvalue(k: int, cfg: SystemConfig) -> float:
    """E_k = hbar^2 (gamma + k pi)^2 / (2 mu l^2)."""
    return cfg.hbar**2 * (cfg.gamma + k * math.pi) ** 2 / (2.0 * cfg.mu * cfg.l**2)


def _check_interval(q: np.ndarray, cfg: SystemConfig) -> None:
    if np.any(np.abs(q) > cfg.l * (1.0 + _EDGE_SLACK)):
        raise DomainError(f"position outside [-{cfg.l}, {cfg.l}]")


def basis_function_value(k: int, q: float | np.ndarray, cfg: SystemConfig) -> complex | np.ndarray:
    """Value of phi_k at q; q may be an array."""
    q_arr = np.asarray(q, dtype=float)
    _check_interval(q_arr, cfg)
    values = np.exp(1j * (cfg.gamma + k * math.pi) * q_arr / cfg.l) / math.sqrt(2.0 * cfg.l)
    return complex(values) if values.ndim == 0 else values


def position_matrix_element(k: int, k_prime: int, cfg: SystemConfig) -> complex:
    """<phi_k| q |phi_k'>; the gamma phases cancel."""
    m = k_prime - k
    if m == 0:
        return 0j
    return -1j * cfg.l * (-1) ** (m % 2) / (m * math.pi)


def position_sq_matrix_element(k: int, k_prime: int, cfg: SystemConfig) -> complex:
    """<phi_k| q^2 |phi_k'>."""
    m = k_prime - k
    if m == 0:
        return complex(cfg.l**2 / 3.0)
    return complex(2.0 * (-1) ** (m % 2) * cfg.l**2 / (m * math.pi) ** 2)


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre nodes and weights on an interval."""

    nodes: np.ndarray
    weights: np.ndarray
    panels: int
    nodes_per_panel: int

    def integrate(self, values: np.ndarray) -> complex | np.ndarray:
        """Weighted sum along the first axis."""
        return np.tensordot(self.weights, values, axes=(0, 0))


def composite_gauss_legendre(
    a: float, b: float, panels: int, nodes_per_panel: int = GL_NODES_PER_PANEL
) -> QuadratureRule:
    """Split [a, b] into equal panels with a Gauss-Legendre rule on each."""
    if panels < 1 or nodes_per_panel < 1:
        raise InputError("quadrature needs at least one panel and one node")
    ref_nodes, ref_weights = roots_legendre(nodes_per_panel)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return QuadratureRule(nodes=nodes, weights=weights, panels=panels, nodes_per_panel=nodes_per_panel)


def panels_for_frequency(omega: float, length: float, nodes_per_panel: int = GL_NODES_PER_PANEL) -> int:
    """Panel count giving NODES_PER_PERIOD nodes per period of exp(i omega q)."""
    periods = abs(omega) * length / (2.0 * math.pi)
    return max(1, math.ceil(NODES_PER_PERIOD * periods / nodes_per_panel))


@dataclass(frozen=True)
class SpatialGrid:
    """M uniformly spaced points covering [-l, l], endpoints included."""

    M: int = DEFAULT_GRID_POINTS
    l: float = 1.0

    def __post_init__(self):
        if self.M < 2:
            raise InputError(f"grid needs at least 2 points, got {self.M}")
        if self.l <= 0:
            raise InputError(f"grid half-width must be positive, got {self.l}")

    @cached_property
    def points(self) -> np.ndarray:
        points = np.linspace(-self.l, self.l, self.M)
        points[0], points[-1] = -self.l, self.l
        return points


@dataclass(frozen=True)
class EnergyBasis:
    """Truncated energy eigenbasis k in [-K, K]."""

    config: SystemConfig
    K: int

    def __post_init__(self):
        if isinstance(self.K, bool) or not isinstance(self.K, (int, np.integer)) or self.K < 1:
            raise InputError(f"truncation K must be an integer >= 1, got {self.K!r}")
        gaps = np.diff(np.sort(self.energies))
        if gaps.size and gaps.min() <= 0.0:
            raise DomainError(f"degenerate energies in basis (gamma={self.config.gamma})")

    @property
    def dim(self) -> int:
        return 2 * self.K + 1

    @cached_property
    def indices(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """(gamma + k pi) / l per basis index."""
        return (self.config.gamma + self.indices * math.pi) / self.config.l

    @cached_property
    def momenta(self) -> np.ndarray:
        return self.config.hbar * self.wavenumbers

    @cached_property
    def energies(self) -> np.ndarray:
        return self.momenta**2 / (2.0 * self.config.mu)

    @cached_property
    def position_matrix(self) -> np.ndarray:
        """Dense <phi_k| q |phi_k'> over the window."""
        m = self.indices[None, :] - self.indices[:, None]
        safe = np.where(m == 0, 1, m)
        sign = np.where(m % 2 == 0, 1.0, -1.0)
        return np.where(m == 0, 0.0, -1j * self.config.l * sign / (safe * math.pi))

    @cached_property
    def position_sq_matrix(self) -> np.ndarray:
        """Dense <phi_k| q^2 |phi_k'> over the window."""
        m = self.indices[None, :] - self.indices[:, None]
        safe = np.where(m == 0, 1, m)
        sign = np.where(m % 2 == 0, 1.0, -1.0)
        l_sq = self.config.l**2
        return np.where(m == 0, l_sq / 3.0, 2.0 * sign * l_sq / (safe * math.pi) ** 2).astype(complex)

    def index_of(self, k: int) -> int:
        """Array position of basis label k."""
        if not -self.K <= k <= self.K:
            raise InputError(f"basis label {k} outside [-{self.K}, {self.K}]")
        return k + self.K

    def functions(self, q: np.ndarray) -> np.ndarray:
        """Matrix of phi_k(q_j): rows are points, columns basis labels."""
        q_arr = np.asarray(q, dtype=float)
        _check_interval(q_arr, self.config)
        return np.exp(1j * np.outer(q_arr, self.wavenumbers)) / math.sqrt(2.0 * self.config.l)

    def default_quadrature(self, oscillation_factor: float = 1.0) -> QuadratureRule:
        """Panel rule resolving the fastest basis oscillation (times a factor)."""
        omega = oscillation_factor * float(np.abs(self.wavenumbers).max())
        panels = panels_for_frequency(omega, 2.0 * self.config.l)
        return composite_gauss_legendre(-self.config.l, self.config.l, panels)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Coefficient vector over an energy basis."""

    basis: EnergyBasis
    coefficients: np.ndarray
    quadrature_error: float = field(default=0.0, compare=False)

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=complex).reshape(-1)
        if coefficients.shape != (self.basis.dim,):
            raise InputError(f"expected {self.basis.dim} coefficients, got {coefficients.size}")
        coefficients.flags.writeable = False
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def basis_state(cls, basis: EnergyBasis, k: int) -> "WaveFunction":
        coefficients = np.zeros(basis.dim, dtype=complex)
        coefficients[basis.index_of(k)] = 1.0
        return cls(basis, coefficients)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.coefficients, self.coefficients).real)

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm - 1.0) <= NORMALIZED_TOLERANCE

    def normalized(self) -> "WaveFunction":
        norm = self.norm
        if norm == 0.0:
            raise InputError("cannot normalize the zero vector")
        return WaveFunction(self.basis, self.coefficients / norm, self.quadrature_error)

    def inner(self, other: "WaveFunction") -> complex:
        """<self|other>."""
        require_same_basis(self, other)
        return complex(np.vdot(self.coefficients, other.coefficients))

    def with_coefficients(self, coefficients: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.basis, coefficients)

    def conjugated(self) -> "WaveFunction":
        return WaveFunction(self.basis, np.conj(self.coefficients))


def require_same_basis(a: WaveFunction, b: WaveFunction) -> None:
    if a.basis != b.basis:
        raise InputError(f"states live on different bases (K={a.basis.K} vs K={b.basis.K})")


def project_function(
    f: Callable[[np.ndarray], np.ndarray],
    basis: EnergyBasis,
    quad: QuadratureRule | None = None,
) -> WaveFunction:
    """
    Expand f over the basis: c_k = integral of conj(phi_k) f dq.

    The quadrature error is estimated by repeating the projection with twice
    the panels and is stored on the returned state.

    Raises:
        InputError: f produced non-finite values.
    """
    quad = quad or basis.default_quadrature(oscillation_factor=2.0)
    coefficients = _project(f, basis, quad)
    finer = composite_gauss_legendre(-basis.config.l, basis.config.l, 2 * quad.panels, quad.nodes_per_panel)
    error = float(np.abs(_project(f, basis, finer) - coefficients).max())
    _LOG.debug("Projected onto K=%d basis with %d panels, error estimate %.3g", basis.K, quad.panels, error)
    return WaveFunction(basis, coefficients, quadrature_error=error)


def _project(f: Callable[[np.ndarray], np.ndarray], basis: EnergyBasis, quad: QuadratureRule) -> np.ndarray:
    values = np.broadcast_to(np.asarray(f(quad.nodes), dtype=complex), quad.nodes.shape)
    if not np.all(np.isfinite(values)):
        raise InputError("function returned non-finite values on quadrature nodes")
    return basis.functions(quad.nodes).conj().T @ (quad.weights * values)


def synthesize(wf: WaveFunction, grid: SpatialGrid) -> np.ndarray:
    """psi(q_j) = sum_k c_k phi_k(q_j) on every grid point."""
    return wf.basis.functions(grid.points) @ wf.coefficients
