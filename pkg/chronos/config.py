"""
Chronos configuration: physical system and scenario settings.

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import math
from dataclasses import asdict, dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Any

from chronos.errors import ConfigError, DomainError

DEFAULT_GAMMA = 0.01
DEFAULT_K = 256
DEFAULT_CACHE_DIR = Path.home() / ".cache" / "chronos"


@dataclass(frozen=True)
class SystemConfig:
    """Confined particle on [-l, l] with boundary phase gamma (a.u. by default)."""

    l: float = 1.0
    mu: float = 1.0
    hbar: float = 1.0
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        for name in ("l", "mu", "hbar"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be a positive finite number, got {value!r}")
        # gamma in {0, pi/2} makes the spectrum degenerate
        if not 0.0 < self.gamma < math.pi / 2:
            raise DomainError(f"gamma must lie strictly inside (0, pi/2), got {self.gamma!r}")

    @property
    def cot_gamma(self) -> float:
        return math.cos(self.gamma) / math.sin(self.gamma)

    @property
    def gamma_key(self) -> str:
        """Gamma rounded to 12 decimals, used to key cached results."""
        return f"{self.gamma:.12f}"


class Scenario(StrEnum):
    """Experiments the command line can run."""

    CTOA_ARRIVAL = "ctoa-arrival"
    CTO_EVOLUTION = "cto-evolution"
    CTO_TRANSITIONS = "cto-transitions"
    CTOA_TRANSITIONS = "ctoa-transitions"
    SPECTRUM = "spectrum"
    ROOTS = "roots"
    CCR_CHECK = "ccr-check"


class OutputFormat(StrEnum):
    """Artifact formats written per run."""

    CSV = "csv"
    CSV_SVG = "csv+svg"


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved settings of one scenario run."""

    scenario: Scenario
    gamma: float = DEFAULT_GAMMA
    K: int = DEFAULT_K
    n_lo: int | None = None
    n_hi: int | None = None
    target_tau: float | None = None
    tau_tolerance: float = 1e-3
    t_max: float | None = None
    t_samples: int = 401
    grid: int = 1001
    density_slices: int = 41
    out: Path = Path("out")
    cache: Path = DEFAULT_CACHE_DIR
    fmt: OutputFormat = OutputFormat.CSV
    seed: int = 0
    l: float = 1.0
    mu: float = 1.0
    hbar: float = 1.0
    notices: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("K", "t_samples", "density_slices"):
            if getattr(self, name) < 1:
                raise ConfigError(f"must be a positive integer, got {getattr(self, name)!r}", field=name)
        if self.grid < 2:
            raise ConfigError(f"needs at least 2 points, got {self.grid!r}", field="grid")
        if self.seed < 0:
            raise ConfigError(f"must be non-negative, got {self.seed!r}", field="seed")
        for name in ("tau_tolerance", "l", "mu", "hbar"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"must be positive, got {getattr(self, name)!r}", field=name)
        if self.t_max is not None and self.t_max <= 0:
            raise ConfigError(f"must be positive, got {self.t_max!r}", field="t_max")
        if self.target_tau is not None:
            if self.n_lo is not None or self.n_hi is not None:
                raise ConfigError("give either an index range or a target eigenvalue, not both", field="target_tau")
            if self.target_tau <= 0:
                raise ConfigError(f"must be positive, got {self.target_tau!r}", field="target_tau")
        if (self.n_lo is None) != (self.n_hi is None):
            raise ConfigError("n_lo and n_hi must be given together", field="n_lo" if self.n_lo is None else "n_hi")
        if self.n_lo is not None and not 1 <= self.n_lo <= self.n_hi:
            raise ConfigError(f"need 1 <= n_lo <= n_hi, got [{self.n_lo}, {self.n_hi}]", field="n_lo")
        try:
            self.system
        except DomainError as err:
            raise ConfigError(str(err), field="gamma") from err

    @property
    def system(self) -> SystemConfig:
        return SystemConfig(l=self.l, mu=self.mu, hbar=self.hbar, gamma=self.gamma)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready view, echoed into the output directory."""
        data = asdict(self)
        data["scenario"] = str(self.scenario)
        data["fmt"] = str(self.fmt)
        data["out"] = str(self.out)
        data["cache"] = str(self.cache)
        data["notices"] = list(self.notices)
        return data
