#!/usr/bin/env python3
"""Plot / covariate CSV ingestion -> Dataset.

Input formats:
  plots CSV       header `area_id,year,value`; one row per plot measurement
                  (repeated rows are distinct plots)
  covariates CSV  header `area_id,year,cov_1,...,cov_P`; exactly one row for
                  every (area, year) combination, including years without plots

Areas are indexed by sorted identifier; years are mapped to t = 1..T by
sorted distinct value (numeric order when every year is an integer).
Calendar gaps become adjacent steps, so trends are per step, not per
calendar year; the mapping is written to a `year_index.csv` sidecar.

Errors name the file, line and column:
  ParseError    malformed header / row
  NonNumeric    a value or covariate that is not a finite number
  CovariateGap  an (area, year) with plots or in the area x year grid but no covariate row
"""
from __future__ import print_function

import csv
import math

import numpy as np

from .errors import CovariateGap, InvalidConfig, NonNumeric, ParseError
from .graph import load_adjacency, read_edge_list
from .model import Dataset
from .storage import atomic_write_csv

__all__ = ['read_plots', 'read_covariates', 'load_dataset', 'load_graph', 'year_sort_key',
           'write_year_index', 'PLOT_HEADER']

PLOT_HEADER = ['area_id', 'year', 'value']


def _number(text, path, lineno, column):
    try:
        value = float(text)
    except ValueError:
        raise NonNumeric('%s:%d: column %s: %r is not a number' % (path, lineno, column, text))
    if not math.isfinite(value):
        raise NonNumeric('%s:%d: column %s: %r is not finite' % (path, lineno, column, text))
    return value


def _rows(path):
    with open(path, 'r', newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise ParseError('%s: empty file' % path)
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError('%s:%d: expected %d columns, got %d'
                                 % (path, lineno, len(header), len(row)))
            rows.append((lineno, [c.strip() for c in row]))
    return header, rows


def read_plots(path):
    header, rows = _rows(path)
    if header != PLOT_HEADER:
        raise ParseError('%s: header must be %s, got %s' % (path, ','.join(PLOT_HEADER), ','.join(header)))
    out = []
    for lineno, (area, year, value) in rows:
        if not area or not year:
            raise ParseError('%s:%d: empty area_id or year' % (path, lineno))
        out.append((area, year, _number(value, path, lineno, 'value'), lineno))
    return out


def read_covariates(path):
    """Returns (covariate names, {(area, year): [floats]})."""
    header, rows = _rows(path)
    if len(header) < 2 or header[:2] != ['area_id', 'year']:
        raise ParseError('%s: header must start with area_id,year' % path)
    names = header[2:]
    table = {}
    for lineno, row in rows:
        key = (row[0], row[1])
        if key in table:
            raise ParseError('%s:%d: duplicate covariate row for area %s, year %s'
                             % (path, lineno, row[0], row[1]))
        table[key] = [_number(v, path, lineno, names[i]) for i, v in enumerate(row[2:])]
    return names, table


def year_sort_key(years):
    years = list(years)
    try:
        return sorted(years, key=lambda y: (int(y), y))
    except ValueError:
        return sorted(years)


def _svc_indices(svc_selection, names):
    selected = []
    for item in svc_selection or ():
        if isinstance(item, str) and not item.strip().isdigit():
            if item not in names:
                raise InvalidConfig('space-varying covariate %r is not a covariate column' % item)
            idx = names.index(item) + 1
        else:
            idx = int(item)
        if not (1 <= idx <= len(names)):
            raise InvalidConfig('space-varying covariate index %d outside 1..%d' % (idx, len(names)))
        if idx in selected:
            raise InvalidConfig('space-varying covariate %d selected twice' % idx)
        selected.append(idx)
    return tuple(selected)


def load_dataset(plots_path, covariates_path, svc_selection=(), sidecar_path=None):
    names, table = read_covariates(covariates_path)
    plots = read_plots(plots_path)
    area_ids = tuple(sorted(set(a for a, _ in table)))
    years = tuple(year_sort_key(set(y for _, y in table)))
    area_index = dict((a, j) for j, a in enumerate(area_ids))
    year_index = dict((y, c) for c, y in enumerate(years))
    J, T, P = len(area_ids), len(years), len(names)
    svc = _svc_indices(svc_selection, names)
    x = np.ones((J, T, P + 1))
    for j, area in enumerate(area_ids):
        for c, year in enumerate(years):
            row = table.get((area, year))
            if row is None:
                raise CovariateGap('%s: no covariate row for area %s, year %s'
                                   % (covariates_path, area, year))
            x[j, c, 1:] = row
    xt = x[:, :, list(svc)] if svc else np.zeros((J, T, 0))
    obs_area = np.empty(len(plots), dtype=np.int64)
    obs_time = np.empty(len(plots), dtype=np.int64)
    obs_value = np.empty(len(plots))
    for i, (area, year, value, lineno) in enumerate(plots):
        if area not in area_index or year not in year_index:
            raise CovariateGap('%s:%d: plot in area %s, year %s has no covariate row'
                               % (plots_path, lineno, area, year))
        obs_area[i] = area_index[area]
        obs_time[i] = year_index[year]
        obs_value[i] = value
    dataset = Dataset(x=x, xt=xt, obs_area=obs_area, obs_time=obs_time, obs_value=obs_value,
                      area_ids=area_ids, years=years, svc_columns=svc)
    if sidecar_path:
        write_year_index(sidecar_path, years)
    return dataset


def write_year_index(path, years):
    atomic_write_csv(path, ['year', 't'], [(y, c + 1) for c, y in enumerate(years)])


def load_graph(adjacency_path, dataset):
    index = dict((a, j) for j, a in enumerate(dataset.area_ids))
    return load_adjacency(read_edge_list(adjacency_path), index)
