#!/usr/bin/env python3
"""`stsae fit` - fit the full model (or the sub-model) and write summaries.

Usage:
  stsae fit --plots plots.csv --cov covariates.csv --adj adjacency.txt --out run/ \\
            [--svc 1] [--seed 7] [--iterations 7500] [--burn-in 5000] [--thin 1] \\
            [--chains 1] [--workers 1] [--sub-model] [--config run.cfg] \\
            [--checkpoint-every N] [--resume run/checkpoint.bin] [--traces params]

Flags override values from --config; see stsae.config for the file format.
Writes mu/trend/direct/params summaries, waic.csv/json, draws.npz,
year_index.csv, checkpoint.bin and run_manifest.json into --out, then
prints a one-line JSON summary on standard output.

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""
from __future__ import print_function

import json
import os
import sys

from . import logs
from .config import ArgParser, load_run_config, parse_level
from .estimators import direct_estimates, waic
from .loaders import load_dataset, load_graph
from .model import Hyperparameters
from .sampler import run_chains
from .storage import atomic_write_json, ensure_dir
from .summaries import DRAWS_FILE, MANIFEST_FILE, build_manifest, save_draws, write_summaries, write_waic

CHECKPOINT_FILE = 'checkpoint.bin'
YEAR_INDEX_FILE = 'year_index.csv'


def add_common_flags(ap):
    ap.add_argument('--config', help='Key-value config file')
    ap.add_argument('--seed', type=int)
    ap.add_argument('--verbose', action='store_const', const='DEBUG', dest='verbosity')
    ap.add_argument('--quiet', action='store_const', const='WARNING', dest='verbosity')


def build_arg_parser():
    ap = ArgParser(prog='stsae fit', description='Fit the spatio-temporal model')
    ap.add_argument('--plots', help='Plot CSV (area_id,year,value)')
    ap.add_argument('--cov', dest='covariates', help='Covariate CSV (area_id,year,cov_1..cov_P)')
    ap.add_argument('--adj', dest='adjacency', help='Adjacency edge list')
    ap.add_argument('--out', help='Output directory')
    ap.add_argument('--svc', help='Comma separated 1-based covariate indices with space-varying coefficients')
    ap.add_argument('--iterations', type=int)
    ap.add_argument('--burn-in', type=int, dest='burn_in')
    ap.add_argument('--thin', type=int)
    ap.add_argument('--chains', type=int)
    ap.add_argument('--workers', type=int, help='Parallel chain processes (default 1)')
    ap.add_argument('--sub-model', action='store_const', const=True, dest='sub_model',
                    help='Drop the space-varying coefficient term')
    ap.add_argument('--checkpoint-every', type=int, dest='checkpoint_every')
    ap.add_argument('--resume', help='Checkpoint file to continue from')
    ap.add_argument('--traces', choices=['params', 'all', 'none'])
    ap.add_argument('--level', type=parse_level, help='Credible level for summaries (default 0.95)')
    add_common_flags(ap)
    return ap


OVERRIDE_KEYS = ('plots', 'covariates', 'adjacency', 'out', 'svc', 'seed', 'iterations', 'burn_in',
                 'thin', 'chains', 'workers', 'sub_model', 'checkpoint_every', 'traces', 'level',
                 'verbosity')


def fit(run_config, resume=None):
    """Run the whole fit pipeline; returns the stats dict printed by main."""
    run_config.require_paths('plots', 'covariates', 'adjacency', 'out')
    out_dir = run_config.out
    ensure_dir(out_dir)
    dataset = load_dataset(run_config.plots, run_config.covariates, run_config.svc_tuple(),
                           sidecar_path=os.path.join(out_dir, YEAR_INDEX_FILE))
    logs.log_json(event='data_loaded', J=dataset.J, T=dataset.T, P=dataset.P, Q=dataset.Q,
                  N=dataset.N, empty_cells=int((dataset.n == 0).sum()))
    graph = load_graph(run_config.adjacency, dataset)
    hyper = Hyperparameters.defaults(dataset.P, dataset.Q, dataset.T, **run_config.hyper_overrides())
    config = run_config.mcmc_config(checkpoint_path=os.path.join(out_dir, CHECKPOINT_FILE))
    draws, stats = run_chains(dataset, graph, hyper, config, n_chains=run_config.chains,
                              workers=run_config.workers, resume_path=resume)
    estimates = direct_estimates(dataset)
    written = write_summaries(draws, estimates, out_dir, dataset.area_ids, dataset.years,
                              level=run_config.level)
    report = waic(dataset, draws.mu, draws.sigma_sq)
    write_waic(out_dir, report)
    save_draws(os.path.join(out_dir, DRAWS_FILE), draws, dataset.area_ids, dataset.years)
    inputs = {'plots': run_config.plots, 'covariates': run_config.covariates,
              'adjacency': run_config.adjacency, 'resume': resume}
    manifest = build_manifest(run_config.canonical(), run_config.seed, inputs, dataset=dataset, draws=draws, stats=stats,
                              extra={'model': 'sub' if run_config.sub_model else 'full',
                                     'hyperparameters': hyper.as_dict()})
    atomic_write_json(os.path.join(out_dir, MANIFEST_FILE), manifest)
    return {'status': 'ok', 'out': out_dir, 'S': draws.S, 'files': [os.path.basename(p) for p in written],
            'elpd_waic': report.elpd_waic, 'waic': report.waic, 'model': manifest['model']}


def main(argv=None):
    args = build_arg_parser().parse_args(argv)
    overrides = dict((k, getattr(args, k, None)) for k in OVERRIDE_KEYS)
    run_config = load_run_config(args.config, overrides)
    logs.set_level(run_config.verbosity)
    stats = fit(run_config, resume=args.resume)
    print(json.dumps(stats, sort_keys=True))
    return 0


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main())
