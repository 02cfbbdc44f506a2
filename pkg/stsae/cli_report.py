#!/usr/bin/env python3
"""Reporting subcommands that work from inputs or saved fits.

  stsae direct --plots p.csv --cov c.csv --out dir/
      direct (design-based) estimates -> dir/direct_estimates.csv
  stsae trend --draws run/ [--level 0.95] [--out dir/]
      per-area trend summary from saved draws -> trend_summary.csv
  stsae summarize --draws run/ [--level 0.95] [--out dir/]
      rewrite mu/trend/params summaries from saved draws (no refit)
  stsae waic-compare full/ sub/ [--names full,sub] [--json]
      Table-style comparison: elpd_waic, p_waic, waic, elpd_diff (se)

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""
from __future__ import print_function

import json
import os

from . import logs
from .config import DEFAULT_LEVEL, ArgParser, parse_level
from .errors import UsageError
from .estimators import compare_waic, direct_estimates, significant_trends, trend_draws
from .loaders import load_dataset
from .storage import atomic_write_csv, ensure_dir
from .summaries import (DIRECT_FILE, TREND_FILE, format_waic_table, load_draws, load_waic,
                        quantile_labels, write_direct_estimates, write_summaries)


def build_direct_parser():
    ap = ArgParser(prog='stsae direct', description='Design-based direct estimates')
    ap.add_argument('--plots', required=True)
    ap.add_argument('--cov', dest='covariates', required=True)
    ap.add_argument('--out', required=True)
    return ap


def main_direct(argv=None):
    args = build_direct_parser().parse_args(argv)
    ensure_dir(args.out)
    dataset = load_dataset(args.plots, args.covariates)
    estimates = direct_estimates(dataset)
    path = os.path.join(args.out, DIRECT_FILE)
    write_direct_estimates(path, estimates, dataset.area_ids, dataset.years)
    reasons = {}
    for reason in estimates.missing_reason.ravel():
        if reason:
            reasons[reason] = reasons.get(reason, 0) + 1
    print(json.dumps({'status': 'ok', 'file': path, 'cells': dataset.J * dataset.T,
                      'missing': reasons}, sort_keys=True))
    return 0


def build_trend_parser():
    ap = ArgParser(prog='stsae trend', description='Trend summary from saved draws')
    ap.add_argument('--draws', required=True, help='Run directory or draws.npz')
    ap.add_argument('--level', type=parse_level, default=DEFAULT_LEVEL)
    ap.add_argument('--out', help='Output directory (default: the run directory)')
    return ap


def main_trend(argv=None):
    args = build_trend_parser().parse_args(argv)
    draws, area_ids, _ = load_draws(args.draws)
    theta = draws.theta if draws.theta is not None else trend_draws(draws.mu)
    trends = significant_trends(theta, args.level)
    out_dir = args.out or (args.draws if os.path.isdir(args.draws) else os.path.dirname(args.draws))
    ensure_dir(out_dir)
    lo, _, hi = quantile_labels(args.level)
    rows = [(area, trends['mean'][j], trends['lower'][j], trends['upper'][j], bool(trends['significant'][j]))
            for j, area in enumerate(area_ids)]
    path = os.path.join(out_dir, TREND_FILE)
    atomic_write_csv(path, ['area_id', 'mean', lo, hi, 'significant'], rows)
    print(json.dumps({'status': 'ok', 'file': path, 'areas': len(rows),
                      'significant': int(sum(1 for r in rows if r[4]))}, sort_keys=True))
    return 0


def build_summarize_parser():
    ap = ArgParser(prog='stsae summarize', description='Rewrite summaries from saved draws')
    ap.add_argument('--draws', required=True, help='Run directory or draws.npz')
    ap.add_argument('--level', type=parse_level, default=DEFAULT_LEVEL)
    ap.add_argument('--out', help='Output directory (default: the run directory)')
    return ap


def main_summarize(argv=None):
    args = build_summarize_parser().parse_args(argv)
    draws, area_ids, years = load_draws(args.draws)
    out_dir = args.out or (args.draws if os.path.isdir(args.draws) else os.path.dirname(args.draws))
    written = write_summaries(draws, None, out_dir, area_ids, years, level=args.level)
    print(json.dumps({'status': 'ok', 'files': [os.path.basename(p) for p in written], 'S': draws.S},
                     sort_keys=True))
    return 0


def build_waic_parser():
    ap = ArgParser(prog='stsae waic-compare', description='Compare saved fits by WAIC')
    ap.add_argument('runs', nargs='+', help='Run directories (or waic.json files)')
    ap.add_argument('--names', help='Comma separated model names (default: directory names)')
    ap.add_argument('--json', action='store_true', help='Emit JSON instead of a text table')
    ap.add_argument('--digits', type=int, default=1)
    return ap


def main_waic_compare(argv=None):
    args = build_waic_parser().parse_args(argv)
    if len(args.runs) < 2:
        raise UsageError('waic-compare needs at least two runs')
    if args.names:
        names = [n.strip() for n in args.names.split(',')]
        if len(names) != len(args.runs):
            raise UsageError('--names lists %d names for %d runs' % (len(names), len(args.runs)))
    else:
        names = [os.path.basename(os.path.normpath(r)) or r for r in args.runs]
    if len(set(names)) != len(names):
        raise UsageError('model names must be distinct: %s' % ', '.join(names))
    reports = dict((name, load_waic(run)) for name, run in zip(names, args.runs))
    items = compare_waic(reports)
    logs.log_json(level='DEBUG', event='waic_compare', models=[n for n, _ in items])
    if args.json:
        print(json.dumps(dict((name, r.as_dict()) for name, r in items), sort_keys=True))
    else:
        print(format_waic_table(items, digits=args.digits))
    return 0
