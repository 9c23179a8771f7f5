"""
Command-line and config-file ingestion.

Resolution order per field: built-in default < --config JSON file <
CHRONOS_CACHE environment variable < command-line flags.

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import argparse
import json
import logging
import os
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

from chronos.config import DEFAULT_CACHE_DIR, DEFAULT_GAMMA, OutputFormat, Scenario, ScenarioConfig
from chronos.errors import ConfigError

_LOG = logging.getLogger(__name__)

CACHE_ENV = "CHRONOS_CACHE"

# config key -> expected type
FIELD_TYPES: dict[str, type] = {
    "scenario": str,
    "gamma": float,
    "K": int,
    "n_lo": int,
    "n_hi": int,
    "target_tau": float,
    "tau_tolerance": float,
    "t_max": float,
    "t_samples": int,
    "grid": int,
    "density_slices": int,
    "out": str,
    "cache": str,
    "fmt": str,
    "seed": int,
    "l": float,
    "mu": float,
    "hbar": float,
}
_ALIASES = {"format": "fmt", "k": "K"}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting."""

    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chronos", description="Quantum time operator experiments on a confined particle.")
    suppress = argparse.SUPPRESS
    scenarios = [str(s) for s in Scenario]
    parser.add_argument("scenario_pos", nargs="?", metavar="scenario", default=None, help=", ".join(scenarios))
    parser.add_argument("--scenario", choices=scenarios, default=suppress)
    parser.add_argument("--gamma", type=float, default=suppress, help="boundary phase in (0, pi/2)")
    parser.add_argument("--K", type=int, default=suppress, help="basis truncation, k in [-K, K]")
    parser.add_argument("--n-lo", dest="n_lo", type=int, default=suppress)
    parser.add_argument("--n-hi", dest="n_hi", type=int, default=suppress)
    parser.add_argument("--target-tau", dest="target_tau", type=float, default=suppress)
    parser.add_argument("--tau-tolerance", dest="tau_tolerance", type=float, default=suppress)
    parser.add_argument("--t-max", dest="t_max", type=float, default=suppress)
    parser.add_argument("--t-samples", dest="t_samples", type=int, default=suppress)
    parser.add_argument("--grid", type=int, default=suppress, help="spatial grid points M")
    parser.add_argument("--density-slices", dest="density_slices", type=int, default=suppress)
    parser.add_argument("--out", type=str, default=suppress)
    parser.add_argument("--cache", type=str, default=suppress)
    parser.add_argument("--format", dest="fmt", choices=[str(f) for f in OutputFormat], default=suppress)
    parser.add_argument("--seed", type=int, default=suppress)
    parser.add_argument("--l", type=float, default=suppress)
    parser.add_argument("--mu", type=float, default=suppress)
    parser.add_argument("--hbar", type=float, default=suppress)
    parser.add_argument("--config", type=Path, default=None, help="JSON file with config values")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def _normalize_key(key: str) -> str:
    key = key.replace("-", "_")
    return _ALIASES.get(key, key)


def _check_type(key: str, value: Any) -> Any:
    expected = FIELD_TYPES[key]
    if value is None and key in ("n_lo", "n_hi", "target_tau", "t_max"):
        return None
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", field=key)
    elif expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", field=key)
        value = float(value)
    elif not isinstance(value, str):
        raise ConfigError(f"expected a string, got {value!r}", field=key)
    return value


def load_config_file(path: Path) -> dict[str, Any]:
    """
    Read a JSON object of config values; keys may use '-' or '_'.

    Raises:
        ConfigError: unreadable file, malformed JSON or unknown keys.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}", field="config") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed JSON in {path}: {err}", field="config") from err
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object", field="config")

    values = {}
    for raw_key, value in data.items():
        key = _normalize_key(str(raw_key))
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown key {raw_key!r}", field=str(raw_key))
        values[key] = _check_type(key, value)
    return values


def _to_config(values: dict[str, Any], notices: list[str]) -> ScenarioConfig:
    try:
        scenario = Scenario(values.pop("scenario"))
    except KeyError as err:
        raise ConfigError("no scenario given", field="scenario") from err
    except ValueError as err:
        raise ConfigError(f"unknown scenario {err}", field="scenario") from err
    if "fmt" in values:
        try:
            values["fmt"] = OutputFormat(values["fmt"])
        except ValueError as err:
            raise ConfigError(f"unknown format {values['fmt']!r}", field="fmt") from err
    values["out"] = Path(values["out"]) if "out" in values else Path("out") / str(scenario)
    values["cache"] = Path(values.get("cache", DEFAULT_CACHE_DIR)).expanduser()
    return ScenarioConfig(scenario=scenario, notices=tuple(notices), **values)


def parse_command_line(
    argv: Sequence[str] | None = None, environ: Mapping[str, str] | None = None
) -> tuple[ScenarioConfig, bool]:
    """Resolved ScenarioConfig and the verbose flag."""
    environ = os.environ if environ is None else environ
    args = vars(build_parser().parse_args(argv))
    verbose = args.pop("verbose")
    config_path = args.pop("config")

    positional = args.pop("scenario_pos", None)
    if positional and args.get("scenario", positional) != positional:
        raise ConfigError(f"scenario given twice ({positional} and {args['scenario']})", field="scenario")
    if positional:
        args["scenario"] = positional

    values: dict[str, Any] = load_config_file(config_path) if config_path else {}
    if environ.get(CACHE_ENV):
        values["cache"] = environ[CACHE_ENV]
    values.update(args)

    notices = []
    if "gamma" not in values:
        notices.append(f"gamma defaulted to {DEFAULT_GAMMA}")
    cfg = _to_config(values, notices)
    _LOG.debug("Resolved config: %s", cfg)
    return cfg, verbose


def parse_config(argv: Sequence[str] | None = None, environ: Mapping[str, str] | None = None) -> ScenarioConfig:
    """
    Resolve a ScenarioConfig from flags, an optional config file and the environment.

    Raises:
        ConfigError: malformed input, unknown key or scenario, invalid or conflicting values.
    """
    return parse_command_line(argv, environ)[0]
