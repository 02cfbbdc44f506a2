#!/usr/bin/env python3
"""Unified entrypoint that dispatches `stsae` subcommands.

Errors raised by a subcommand are printed as `error: <message>` on standard
error and mapped to the process exit code (1 usage, 2 data, 3 numerical).
"""
from __future__ import print_function

import sys

from . import __version__
from . import checkpoint as checkpoint_mod
from . import cli_fit
from . import cli_report
from . import cli_simulate
from . import logs
from .errors import EXIT_USAGE, StsaeError, exit_code_for

USAGE = """stsae <command> [options]

Commands:
  fit           Fit the full (or --sub-model) model and write summaries
  direct        Design-based direct estimates per area-year
  trend         Per-area trend summary from saved draws
  summarize     Rewrite posterior summaries from saved draws
  waic-compare  Compare saved fits by WAIC
  simulate      Model vs. direct estimation simulation study
  checkpoint    Inspect chain checkpoints (checkpoint show <file>)
  version       Print the package version
"""

COMMANDS = {
    'fit': cli_fit.main,
    'direct': cli_report.main_direct,
    'trend': cli_report.main_trend,
    'summarize': cli_report.main_summarize,
    'waic-compare': cli_report.main_waic_compare,
    'simulate': cli_simulate.main,
    'checkpoint': checkpoint_mod.main,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if (not argv) or (argv[0] in ('-h', '--help')):
        print(USAGE)
        return 0
    cmd = argv.pop(0)
    if cmd == 'version':
        print(__version__)
        return 0
    handler = COMMANDS.get(cmd)
    if handler is None:
        print('Unknown command: %s' % cmd, file=sys.stderr)
        return EXIT_USAGE
    try:
        return handler(argv)
    except SystemExit as exc:  # argparse -h
        return 0 if exc.code in (0, None) else EXIT_USAGE
    except (StsaeError, OSError) as exc:
        code = exit_code_for(exc)
        logs.log_json(level='ERROR', event='command_failed', command=cmd,
                      error=type(exc).__name__, exit_code=code)
        print('error: %s' % exc, file=sys.stderr)
        return code


cli_main = main


if __name__ == '__main__':  # pragma: no cover
    raise SystemExit(main())
