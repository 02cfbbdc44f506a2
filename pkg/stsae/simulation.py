#!/usr/bin/env python3
"""Synthetic-population simulation bench: model vs. direct estimates.

Population (rows x cols lattice of areas, rook adjacency, T years,
units_per_area units per area-year):

  cov_jt   = covariate_mean + covariate_sd * G1_j + covariate_time_sd * e_jt
  value    = intercept + slope * cov_jt + field_sd * G2_j + drift_jt + noise_sd * e_ijt
  drift_jt = drift_phi * drift_j,t-1 + drift_sd * e_jt        (drift_j0 = 0)

G1, G2 are Gaussian random fields over cell centroids with exponential
covariance exp(-distance / range). Unit values are clamped at 0 and then
set to 0 with probability zero_inflation. true_mu is the mean of the
area-year units.

Metrics per (area, year, estimator) over R replicates:
  bias  = mean(est - true)           rmse  = sqrt(mean((est - true)^2))
  cover = mean(lower <= true <= upper)   width = mean(upper - lower)
Missing estimates are excluded from that estimator's averages and counted.
A cell an estimator never estimated keeps NaN metrics and is reported under
unscored_*_cells (summary "scoring": "unscored_cells_as_nan"); with
strict=True score_estimators raises NoValidReplicates instead.

Randomness: master seed -> stream 0 population, stream 1 intensities,
stream 2 + r sampling of replicate r and its chain seed.

Study spec file: key = value lines, see PopulationSpec fields; e.g.
  rows = 4
  cols = 5
  intensity = uniform:0:5      # or constant:3, or a CSV path (area_id,year,count)
"""
from __future__ import print_function

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Tuple

import numpy as np
import scipy.linalg
import scipy.spatial.distance

from .errors import (IntensityExceedsPopulation, InvalidSpec, NoValidReplicates, ParseError,
                     UnknownArea)
from .estimators import direct_estimates, direct_intervals, model_intervals
from .graph import lattice_graph
from .logs import log_json
from .model import Dataset, Hyperparameters
from .sampler import McmcConfig, make_rng, run_chains

__all__ = ['PopulationSpec', 'SyntheticPopulation', 'SimulationReport', 'generate_population',
           'intensity_matrix', 'draw_replicate', 'score_estimators', 'run_study',
           'MODEL', 'DIRECT', 'replicate_seed']

MODEL = 'model'
DIRECT = 'direct'
FIELD_JITTER = 1e-10
SMALL_N = 2


@dataclass(eq=False)
class PopulationSpec:
    rows: int = 4
    cols: int = 5
    years: int = 5
    units_per_area: int = 200
    intercept: float = 20.0
    slope: float = 0.8
    covariate_mean: float = 40.0
    covariate_sd: float = 15.0
    covariate_time_sd: float = 2.0
    covariate_range: float = 2.0
    field_sd: float = 5.0
    field_range: float = 2.0
    drift_phi: float = 0.7
    drift_sd: float = 1.5
    noise_sd: float = 15.0
    zero_inflation: float = 0.1
    replicates: int = 30
    intensity: str = 'uniform:0:5'
    seed: int = 1

    @classmethod
    def from_mapping(cls, mapping):
        known = set(f.name for f in fields(cls))
        kwargs = {}
        for key, raw in mapping.items():
            if key not in known:
                raise InvalidSpec('unknown study spec key %r' % key)
            default = getattr(cls, key)
            try:
                if isinstance(default, int):
                    kwargs[key] = int(raw)
                elif isinstance(default, float):
                    kwargs[key] = float(raw)
                else:
                    kwargs[key] = str(raw)
            except ValueError:
                raise InvalidSpec('study spec key %s: cannot parse %r' % (key, raw))
        spec = cls(**kwargs)
        spec.validate()
        return spec

    @property
    def num_areas(self):
        return self.rows * self.cols

    def validate(self):
        if self.rows < 1 or self.cols < 1 or self.num_areas < 2:
            raise InvalidSpec('grid must hold at least two areas, got %dx%d' % (self.rows, self.cols))
        if self.years < 1:
            raise InvalidSpec('years must be >= 1')
        if self.units_per_area < 1:
            raise InvalidSpec('units_per_area must be >= 1')
        for name in ('covariate_sd', 'covariate_time_sd', 'field_sd', 'drift_sd', 'noise_sd'):
            if getattr(self, name) < 0:
                raise InvalidSpec('%s must be non-negative' % name)
        if self.covariate_range <= 0 or self.field_range <= 0:
            raise InvalidSpec('field ranges must be positive')
        if not (-1.0 < self.drift_phi < 1.0):
            raise InvalidSpec('drift_phi must lie in (-1, 1)')
        if not (0.0 <= self.zero_inflation < 1.0):
            raise InvalidSpec('zero_inflation must lie in [0, 1)')
        if self.replicates < 1:
            raise InvalidSpec('replicates must be >= 1')


@dataclass(eq=False)
class SyntheticPopulation:
    units: np.ndarray
    true_mu: np.ndarray
    covariate: np.ndarray
    spec: PopulationSpec
    area_ids: Tuple[str, ...]
    years: Tuple[str, ...]

    @property
    def J(self):
        return self.units.shape[0]

    @property
    def T(self):
        return self.units.shape[1]

    def graph(self):
        return lattice_graph(self.spec.rows, self.spec.cols)

    def covariate_arrays(self):
        ones = np.ones_like(self.covariate)
        return np.stack([ones, self.covariate], axis=2), self.covariate[:, :, None].copy()


def _gaussian_field(spec, range_, rng):
    rr, cc = np.divmod(np.arange(spec.num_areas), spec.cols)
    centroids = np.column_stack([rr, cc]).astype(np.float64)
    dist = scipy.spatial.distance.squareform(scipy.spatial.distance.pdist(centroids))
    cov = np.exp(-dist / range_) + FIELD_JITTER * np.eye(spec.num_areas)
    chol = scipy.linalg.cholesky(cov, lower=True)
    return chol @ rng.standard_normal(spec.num_areas)


def generate_population(spec, rng):
    spec.validate()
    J, T, N = spec.num_areas, spec.years, spec.units_per_area
    covariate = (spec.covariate_mean
                 + spec.covariate_sd * _gaussian_field(spec, spec.covariate_range, rng)[:, None]
                 + spec.covariate_time_sd * rng.standard_normal((J, T)))
    field = spec.field_sd * _gaussian_field(spec, spec.field_range, rng)
    drift = np.zeros((J, T))
    previous = np.zeros(J)
    for c in range(T):
        previous = spec.drift_phi * previous + spec.drift_sd * rng.standard_normal(J)
        drift[:, c] = previous
    surface = spec.intercept + spec.slope * covariate + field[:, None] + drift
    units = surface[:, :, None] + spec.noise_sd * rng.standard_normal((J, T, N))
    units = np.maximum(units, 0.0)
    zeros = rng.uniform(size=(J, T, N)) < spec.zero_inflation
    units[zeros] = 0.0
    area_ids = tuple('r%02dc%02d' % divmod(j, spec.cols) for j in range(J))
    years = tuple(str(t + 1) for t in range(T))
    return SyntheticPopulation(units=units, true_mu=units.mean(axis=2), covariate=covariate,
                               spec=spec, area_ids=area_ids, years=years)


def _read_intensity_csv(path, area_ids, years):
    index = dict((a, j) for j, a in enumerate(area_ids))
    year_index = dict((y, c) for c, y in enumerate(years))
    counts = np.zeros((len(area_ids), len(years)), dtype=np.int64)
    with open(path, 'r', newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ['area_id', 'year', 'count']:
            raise ParseError('%s: header must be area_id,year,count' % path)
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError('%s:%d: expected 3 columns' % (path, lineno))
            area, year, count = (v.strip() for v in row)
            if area not in index:
                raise UnknownArea('%s:%d: unknown area %r' % (path, lineno, area))
            if year not in year_index:
                raise ParseError('%s:%d: unknown year %r' % (path, lineno, year))
            try:
                counts[index[area], year_index[year]] = int(count)
            except ValueError:
                raise ParseError('%s:%d: count %r is not an integer' % (path, lineno, count))
    return counts


def intensity_matrix(spec, rng, area_ids, years):
    source = str(spec.intensity).strip()
    shape = (len(area_ids), len(years))
    if source.startswith('constant:') or source.isdigit():
        try:
            value = int(source.split(':', 1)[-1])
        except ValueError:
            raise InvalidSpec('intensity %r: expected constant:<n>' % source)
        counts = np.full(shape, value, dtype=np.int64)
    elif source.startswith('uniform:'):
        try:
            _, lo, hi = source.split(':')
            counts = rng.integers(int(lo), int(hi) + 1, size=shape)
        except ValueError:
            raise InvalidSpec('intensity %r: expected uniform:<lo>:<hi>' % source)
    elif os.path.exists(source):
        counts = _read_intensity_csv(source, area_ids, years)
    else:
        raise InvalidSpec('intensity %r is neither constant:<n>, uniform:<lo>:<hi> nor a file' % source)
    if np.any(counts < 0):
        raise InvalidSpec('intensity counts must be non-negative')
    return counts


def draw_replicate(pop, intensity, rng):
    """Simple random sample without replacement per (area, year) cell."""
    intensity = np.asarray(intensity, dtype=np.int64)
    J, T, N = pop.units.shape
    if intensity.shape != (J, T):
        raise InvalidSpec('intensity shaped %s, population is %dx%d' % (intensity.shape, J, T))
    areas, times, values = [], [], []
    for j in range(J):
        for c in range(T):
            k = int(intensity[j, c])
            if k > N:
                raise IntensityExceedsPopulation('cell (%s, %s) asks for %d of %d units'
                                                 % (pop.area_ids[j], pop.years[c], k, N))
            if k == 0:
                continue
            picked = rng.choice(N, size=k, replace=False)
            areas.extend([j] * k)
            times.extend([c] * k)
            values.extend(pop.units[j, c, picked])
    x, xt = pop.covariate_arrays()
    return Dataset(x=x, xt=xt, obs_area=np.array(areas, dtype=np.int64),
                   obs_time=np.array(times, dtype=np.int64), obs_value=np.array(values, dtype=np.float64),
                   area_ids=pop.area_ids, years=pop.years, svc_columns=(1,))


@dataclass(eq=False)
class SimulationReport:
    metrics: Dict[str, Dict[str, np.ndarray]]
    replicates: int
    mean_n: np.ndarray
    area_ids: Tuple[str, ...]
    years: Tuple[str, ...]
    strict: bool = False
    direct_missing: Dict[str, int] = field(default_factory=dict)

    METRICS = ('bias', 'rmse', 'coverage', 'width')

    @property
    def estimators(self):
        return sorted(self.metrics)

    def rows(self):
        for j, area in enumerate(self.area_ids):
            for c, year in enumerate(self.years):
                for name in self.estimators:
                    m = self.metrics[name]
                    yield (area, year, name, float(self.mean_n[j, c]),
                           float(m['bias'][j, c]), float(m['rmse'][j, c]),
                           float(m['coverage'][j, c]), float(m['width'][j, c]),
                           int(m['n_point'][j, c]), int(m['n_interval'][j, c]))

    def summary(self, small_n=SMALL_N):
        out = {'replicates': self.replicates, 'cells': int(self.mean_n.size), 'estimators': {},
               'scoring': 'strict' if self.strict else 'unscored_cells_as_nan',
               'direct_missing': dict(self.direct_missing)}
        small = self.mean_n <= small_n
        for name in self.estimators:
            m = self.metrics[name]
            entry = {'cells_with_estimate': float(np.mean(m['n_point'] > 0)),
                     'cells_with_interval': float(np.mean(m['n_interval'] > 0)),
                     'unscored_point_cells': int(np.sum(m['n_point'] == 0)),
                     'unscored_interval_cells': int(np.sum(m['n_interval'] == 0)),
                     'excluded_point': int(np.sum(self.replicates - m['n_point'])),
                     'excluded_interval': int(np.sum(self.replicates - m['n_interval']))}
            for metric in self.METRICS:
                values = m[metric]
                entry[metric] = _nanmean(values)
                entry[metric + '_small_n'] = _nanmean(values[small])
            out['estimators'][name] = entry
        return out


def _nanmean(values):
    values = np.asarray(values, dtype=np.float64)
    ok = ~np.isnan(values)
    if not ok.any():
        return None
    return float(np.mean(values[ok]))


def score_estimators(pop, replicates, sample_sizes=None, strict=False):
    """Score per-estimator replicate results against the population truth.

    ``replicates`` maps estimator name -> list of (point, lower, upper)
    [J][T] arrays, NaN where the estimator produced nothing.
    """
    truth = pop.true_mu
    metrics = {}
    R = None
    for name in sorted(replicates):
        results = replicates[name]
        if R is None:
            R = len(results)
        if not results:
            raise NoValidReplicates('estimator %s has no replicates' % name)
        point = np.stack([np.asarray(r[0], dtype=np.float64) for r in results])
        lower = np.stack([np.asarray(r[1], dtype=np.float64) for r in results])
        upper = np.stack([np.asarray(r[2], dtype=np.float64) for r in results])
        ok_point = ~np.isnan(point)
        ok_int = ok_point & ~np.isnan(lower) & ~np.isnan(upper)
        n_point = ok_point.sum(axis=0)
        n_int = ok_int.sum(axis=0)
        if strict and (np.any(n_point == 0) or np.any(n_int == 0)):
            j, c = np.argwhere((n_point == 0) | (n_int == 0))[0]
            raise NoValidReplicates('estimator %s has no valid replicate at cell (%s, %s)'
                                    % (name, pop.area_ids[j], pop.years[c]))
        err = np.where(ok_point, point - truth[None], 0.0)
        covered = ok_int & (np.where(ok_int, lower, 0.0) <= truth[None]) & (truth[None] <= np.where(ok_int, upper, 0.0))
        width = np.where(ok_int, upper - lower, 0.0)
        with np.errstate(invalid='ignore', divide='ignore'):
            metrics[name] = {
                'bias': np.where(n_point > 0, err.sum(axis=0) / n_point, np.nan),
                'rmse': np.where(n_point > 0, np.sqrt((err * err).sum(axis=0) / n_point), np.nan),
                'coverage': np.where(n_int > 0, covered.sum(axis=0) / n_int, np.nan),
                'width': np.where(n_int > 0, width.sum(axis=0) / n_int, np.nan),
                'n_point': n_point,
                'n_interval': n_int,
            }
    if sample_sizes:
        mean_n = np.mean(np.stack([np.asarray(n, dtype=np.float64) for n in sample_sizes]), axis=0)
    else:
        mean_n = np.full(truth.shape, np.nan)
    return SimulationReport(metrics=metrics, replicates=int(R or 0), mean_n=mean_n,
                            area_ids=pop.area_ids, years=pop.years, strict=bool(strict))


def replicate_seed(master_seed, r):
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(2 + int(r), 1))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _run_replicate(args):
    pop, intensity, r, config, chains, level = args
    rng = make_rng(pop.spec.seed, 2 + r)
    dataset = draw_replicate(pop, intensity, rng)
    direct = direct_estimates(dataset)
    d_lower, d_upper = direct_intervals(direct)
    hyper = Hyperparameters.defaults(dataset.P, dataset.Q, dataset.T)
    run_config = McmcConfig(**dict(config.as_dict(), seed=replicate_seed(pop.spec.seed, r),
                                   checkpoint_path=None, traces='none'))
    draws, _ = run_chains(dataset, pop.graph(), hyper, run_config, n_chains=chains)
    m_point, m_lower, m_upper = model_intervals(draws.mu, level)
    missing = {}
    for reason in direct.missing_reason.ravel():
        if reason:
            missing[reason] = missing.get(reason, 0) + 1
    log_json(event='replicate_done', replicate=r, plots=dataset.N, direct_missing=missing)
    return (r, np.array(dataset.n), (m_point, m_lower, m_upper), (direct.mean, d_lower, d_upper), missing)


def run_study(spec, R=None, config=None, chains=1, workers=1, level=0.95):
    """generate -> draw -> fit model + direct -> score; returns (report, population, intensity)."""
    spec.validate()
    R = spec.replicates if R is None else int(R)
    if R < 1:
        raise InvalidSpec('replicates must be >= 1')
    config = config or McmcConfig()
    pop = generate_population(spec, make_rng(spec.seed, 0))
    intensity = intensity_matrix(spec, make_rng(spec.seed, 1), pop.area_ids, pop.years)
    log_json(event='study_start', replicates=R, areas=pop.J, years=pop.T,
             iterations=config.total_iterations, workers=workers)
    jobs = [(pop, intensity, r, config, chains, level) for r in range(R)]
    if workers > 1 and R > 1:
        with ProcessPoolExecutor(max_workers=min(workers, R)) as pool:
            results = list(pool.map(_run_replicate, jobs))
    else:
        results = [_run_replicate(job) for job in jobs]
    results.sort(key=lambda item: item[0])
    report = score_estimators(
        pop,
        {MODEL: [res[2] for res in results], DIRECT: [res[3] for res in results]},
        sample_sizes=[res[1] for res in results],
    )
    for res in results:
        for reason, count in res[4].items():
            report.direct_missing[reason] = report.direct_missing.get(reason, 0) + count
    return report, pop, intensity


def spec_as_dict(spec):
    return asdict(spec)
