"""
Entry point for running as module: python -m chronos

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import logging
import sys
from collections.abc import Sequence

from chronos import LOG_FORMAT, main
from chronos.errors import ConfigError, NumericalError
from chronos.results import DIAGNOSTIC_NAME, write_json

_LOG = logging.getLogger(__name__)


def _write_diagnostic(err: NumericalError, argv: Sequence[str] | None) -> None:
    from chronos.cli import parse_config

    try:
        out = parse_config(argv).out
        out.mkdir(parents=True, exist_ok=True)
        path = write_json(out / DIAGNOSTIC_NAME, {"error": str(err), "type": type(err).__name__, **err.diagnostics})
        _LOG.error("Diagnostics written to %s", path)
    except (ConfigError, OSError) as write_err:
        _LOG.error("Could not write diagnostics: %s", write_err)


def run(argv: Sequence[str] | None = None) -> int:
    """Console entry: 0 success, 2 config error, 3 numerical failure."""
    try:
        main(argv)
    except ConfigError as err:
        if not logging.getLogger().handlers:
            logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
        _LOG.error("Configuration error: %s", err)
        return err.exit_code
    except NumericalError as err:
        _LOG.error("Numerical failure: %s", err)
        _write_diagnostic(err, argv)
        return err.exit_code
    except KeyboardInterrupt:
        _LOG.info("Stopped by user")
        return 130
    except Exception as err:
        _LOG.critical("Fatal error: %s", err, exc_info=True)
        raise
    return 0


if __name__ == "__main__":
    sys.exit(run())
