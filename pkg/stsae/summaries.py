#!/usr/bin/env python3
"""Posterior summary tables, draw archives, WAIC files and run manifests.

Output files (in the run directory):
  mu_summary.csv        area_id,year,mean,sd,q2.5,q50,q97.5
  trend_summary.csv     area_id,mean,q2.5,q97.5,significant        (T >= 2)
  direct_estimates.csv  area_id,year,n,mean,variance,lower,upper,missing_reason
  params_summary.csv    parameter,mean,sd,q2.5,q50,q97.5,rhat,ess
  waic.csv / waic.json  elpd_waic, p_waic, waic (+ standard errors)
  draws.npz             retained draws, reloadable by `trend`/`summarize`
  run_manifest.json     seed, canonical config + hash, input digests, versions

Floats are written with repr (full precision, locale independent); the
quantile columns are named after the requested level. Missing numbers are
empty cells.
"""
from __future__ import print_function

import json
import os
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import List

import arviz as az
import numpy as np
import scipy

from . import __version__
from .config import config_digest
from .errors import DataError, MisalignedDraws
from .estimators import (DEFAULT_LEVEL, WaicReport, direct_intervals, effective_sample_size,
                         significant_trends, split_rhat, summarize_draws)
from .model import PosteriorDraws
from .storage import atomic_write_csv, atomic_write_json, ensure_dir, sha256_file

__all__ = ['SummaryTable', 'build_summary_table', 'write_summaries', 'write_direct_estimates',
           'save_draws', 'load_draws', 'write_waic', 'load_waic', 'format_waic_table',
           'build_manifest', 'quantile_labels', 'MU_FILE', 'TREND_FILE', 'DIRECT_FILE',
           'PARAMS_FILE', 'DRAWS_FILE', 'MANIFEST_FILE', 'WAIC_JSON', 'WAIC_CSV']

MU_FILE = 'mu_summary.csv'
TREND_FILE = 'trend_summary.csv'
DIRECT_FILE = 'direct_estimates.csv'
PARAMS_FILE = 'params_summary.csv'
DRAWS_FILE = 'draws.npz'
MANIFEST_FILE = 'run_manifest.json'
WAIC_JSON = 'waic.json'
WAIC_CSV = 'waic.csv'


def utc_now():  # isolated for tests
    return datetime.now(timezone.utc)


def quantile_labels(level):
    lo = (1.0 - level) / 2.0
    return ('q%g' % (100.0 * lo), 'q50', 'q%g' % (100.0 * (1.0 - lo)))


@dataclass(eq=False)
class SummaryTable:
    level: float
    mu_rows: List[tuple] = field(default_factory=list)
    trend_rows: List[tuple] = field(default_factory=list)
    param_rows: List[tuple] = field(default_factory=list)


def _split_chains(values, chain_sizes):
    """[S, ...] -> [C, n, ...] truncated to the shortest chain."""
    n = min(chain_sizes)
    out = []
    start = 0
    for size in chain_sizes:
        out.append(values[start:start + n])
        start += size
    return np.stack(out)


def _index_label(shape, flat_index):
    if not shape:
        return ''
    return '[%s]' % ','.join(str(i) for i in np.unravel_index(flat_index, shape))


def _param_rows(draws, level):
    traces = dict(draws.traces)
    traces['sigma_sq'] = draws.sigma_sq
    rows = []
    for name in sorted(traces):
        values = np.asarray(traces[name], dtype=np.float64)
        if values.ndim == 0 or values.shape[0] != draws.S or values[0].size == 0:
            continue
        shape = values.shape[1:]
        flat = values.reshape(values.shape[0], -1)
        summary = summarize_draws(flat, level)
        split = _split_chains(flat, draws.chain_sizes)
        for i in range(flat.shape[1]):
            rows.append((name + _index_label(shape, i), summary['mean'][i], summary['sd'][i],
                         summary['lower'][i], summary['median'][i], summary['upper'][i],
                         split_rhat(split[:, :, i]), effective_sample_size(split[:, :, i])))
    return rows


def build_summary_table(draws, area_ids, years, level=DEFAULT_LEVEL):
    if draws.S < 1:
        raise DataError('no posterior draws to summarize')
    if draws.mu.shape[1:] != (len(area_ids), len(years)):
        raise MisalignedDraws('draws shaped %s do not match %d areas x %d years'
                              % (draws.mu.shape, len(area_ids), len(years)))
    table = SummaryTable(level=level)
    mu = summarize_draws(draws.mu, level)
    for j, area in enumerate(area_ids):
        for c, year in enumerate(years):
            table.mu_rows.append((area, year, mu['mean'][j, c], mu['sd'][j, c], mu['lower'][j, c],
                                  mu['median'][j, c], mu['upper'][j, c]))
    if draws.theta is not None and draws.S >= 2:
        trends = significant_trends(draws.theta, level)
        for j, area in enumerate(area_ids):
            table.trend_rows.append((area, trends['mean'][j], trends['lower'][j], trends['upper'][j],
                                     bool(trends['significant'][j])))
    table.param_rows = _param_rows(draws, level)
    return table


def write_direct_estimates(path, estimates, area_ids, years):
    lower, upper = direct_intervals(estimates)
    rows = []
    for j, area in enumerate(area_ids):
        for c, year in enumerate(years):
            rows.append((area, year, int(estimates.n[j, c]), _opt(estimates.mean[j, c]),
                         _opt(estimates.variance[j, c]), _opt(lower[j, c]), _opt(upper[j, c]),
                         estimates.missing_reason[j, c] or ''))
    atomic_write_csv(path, ['area_id', 'year', 'n', 'mean', 'variance', 'lower', 'upper',
                            'missing_reason'], rows)


def _opt(value):
    value = float(value)
    return None if np.isnan(value) else value


def write_summaries(draws, estimates, out_dir, area_ids, years, level=DEFAULT_LEVEL):
    """Write the summary CSVs; returns the list of paths written."""
    ensure_dir(out_dir)
    table = build_summary_table(draws, area_ids, years, level)
    lo, mid, hi = quantile_labels(level)
    written = []
    path = os.path.join(out_dir, MU_FILE)
    atomic_write_csv(path, ['area_id', 'year', 'mean', 'sd', lo, mid, hi], table.mu_rows)
    written.append(path)
    if table.trend_rows:
        path = os.path.join(out_dir, TREND_FILE)
        atomic_write_csv(path, ['area_id', 'mean', lo, hi, 'significant'], table.trend_rows)
        written.append(path)
    if estimates is not None:
        path = os.path.join(out_dir, DIRECT_FILE)
        write_direct_estimates(path, estimates, area_ids, years)
        written.append(path)
    path = os.path.join(out_dir, PARAMS_FILE)
    atomic_write_csv(path, ['parameter', 'mean', 'sd', lo, mid, hi, 'rhat', 'ess'], table.param_rows)
    written.append(path)
    return written


def save_draws(path, draws, area_ids, years):
    arrays = {'mu': draws.mu, 'sigma_sq': draws.sigma_sq,
              'chain_sizes': np.asarray(draws.chain_sizes, dtype=np.int64),
              'burn_in': np.int64(draws.burn_in), 'thin': np.int64(draws.thin),
              'area_ids': np.asarray(area_ids, dtype=str), 'years': np.asarray(years, dtype=str)}
    if draws.theta is not None:
        arrays['theta'] = draws.theta
    for name, values in draws.traces.items():
        arrays['trace_' + name] = values
    tmp = path + '.partial.npz'
    np.savez_compressed(tmp, **arrays)
    os.replace(tmp, path)


def load_draws(path):
    """Returns (PosteriorDraws, area_ids, years); ``path`` may be a run directory."""
    if os.path.isdir(path):
        path = os.path.join(path, DRAWS_FILE)
    if not os.path.isfile(path):
        raise DataError('no saved draws at %s' % path)
    with np.load(path, allow_pickle=False) as data:
        traces = dict((k[len('trace_'):], data[k]) for k in data.files if k.startswith('trace_'))
        draws = PosteriorDraws(
            mu=data['mu'], sigma_sq=data['sigma_sq'],
            theta=data['theta'] if 'theta' in data.files else None,
            traces=traces, burn_in=int(data['burn_in']), thin=int(data['thin']),
            chain_sizes=[int(v) for v in data['chain_sizes']],
        )
        area_ids = tuple(str(v) for v in data['area_ids'])
        years = tuple(str(v) for v in data['years'])
    return draws, area_ids, years


def write_waic(out_dir, report):
    atomic_write_json(os.path.join(out_dir, WAIC_JSON), report.as_dict(pointwise=True))
    rows = [('elpd_waic', report.elpd_waic, report.se_elpd_waic),
            ('p_waic', report.p_waic, report.se_p_waic),
            ('waic', report.waic, report.se_waic)]
    atomic_write_csv(os.path.join(out_dir, WAIC_CSV), ['quantity', 'estimate', 'se'], rows)


def load_waic(run_dir):
    path = os.path.join(run_dir, WAIC_JSON) if os.path.isdir(run_dir) else run_dir
    if not os.path.isfile(path):
        raise DataError('no WAIC report at %s' % path)
    with open(path, 'r') as f:
        return WaicReport.from_dict(json.load(f))


def _fmt(value, se, digits=1):
    if value is None:
        return ''
    return '%.*f (%.*f)' % (digits, value, digits, se or 0.0)


def format_waic_table(items, digits=1):
    """Text table: one column per model (best first), rows elpd / p / waic / elpd_diff."""
    names = [name for name, _ in items]
    rows = [
        ('elpd_waic', [_fmt(r.elpd_waic, r.se_elpd_waic, digits) for _, r in items]),
        ('p_waic', [_fmt(r.p_waic, r.se_p_waic, digits) for _, r in items]),
        ('waic', [_fmt(r.waic, r.se_waic, digits) for _, r in items]),
        ('elpd_diff', [_fmt(r.elpd_diff, r.se_elpd_diff, digits) for _, r in items]),
    ]
    widths = [max(len(names[i]), max(len(row[1][i]) for row in rows)) for i in range(len(names))]
    label_w = max(len(row[0]) for row in rows)
    lines = ['%-*s  %s' % (label_w, '', '  '.join(n.rjust(w) for n, w in zip(names, widths)))]
    for label, cells in rows:
        lines.append('%-*s  %s' % (label_w, label, '  '.join(c.rjust(w) for c, w in zip(cells, widths))))
    return '\n'.join(lines)


def build_manifest(config_values, seed, inputs, dataset=None, draws=None, stats=None, extra=None):
    config_values = dict(sorted(config_values.items()))
    manifest = {
        'asof': utc_now().strftime('%Y-%m-%dT%H:%M:%SZ'),
        'versions': {'stsae': __version__, 'python': platform.python_version(),
                     'numpy': np.__version__, 'scipy': scipy.__version__, 'arviz': az.__version__},
        'seed': seed,
        'config': config_values,
        'config_sha256': config_digest(config_values),
        'inputs': dict((name, {'path': path, 'sha256': sha256_file(path)})
                       for name, path in sorted(inputs.items()) if path),
    }
    if dataset is not None:
        manifest['data'] = {'J': dataset.J, 'T': dataset.T, 'P': dataset.P, 'Q': dataset.Q,
                            'N': dataset.N, 'empty_cells': int(np.sum(dataset.n == 0)),
                            'svc_columns': list(dataset.svc_columns)}
    if draws is not None:
        manifest['draws'] = {'S': draws.S, 'chain_sizes': list(draws.chain_sizes),
                             'burn_in': draws.burn_in, 'thin': draws.thin}
    if stats is not None:
        manifest['metropolis'] = [s.summary() for s in stats]
    if extra:
        manifest.update(extra)
    return manifest
