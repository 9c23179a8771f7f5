"""
Chronos: time operators of a confined quantum particle.

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import json
import logging
from collections.abc import Sequence
from pathlib import Path

# Version lives in release.json (single source of truth)
try:
    release_path = Path(__file__).parent.parent / "release.json"
    with open(release_path, "r", encoding="utf-8") as f:
        release_info = json.load(f)
        __version__ = release_info.get("version", "0.0.0")
except (FileNotFoundError, json.JSONDecodeError, KeyError):
    __version__ = "0.0.0"

__all__ = ["__version__", "main"]

_LOG = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)-20s | %(message)s"


def main(argv: Sequence[str] | None = None) -> Path:
    """Parse the command line, configure logging and run the scenario."""
    from chronos.cli import parse_command_line
    from chronos.scenarios import run_scenario

    cfg, verbose = parse_command_line(argv)
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)
    # matplotlib font discovery is noisy at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    _LOG.info("Starting Chronos v%s: %s", __version__, cfg.scenario)
    for notice in cfg.notices:
        _LOG.info("Notice: %s", notice)
    manifest = run_scenario(cfg)
    _LOG.info("Manifest written to %s", manifest)
    return manifest
