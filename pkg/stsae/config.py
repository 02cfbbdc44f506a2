#!/usr/bin/env python3
"""Run configuration: key-value files, defaults and CLI overrides.

Config file format (plain text):
  # comment
  iterations = 7500
  burn_in: 5000
  svc = 1,2
  b_omega = 100, 100, 50     # per-year list or a single scalar

Precedence: DEFAULT_* constants < config file < command-line flags.
Environment variables are never consulted, so the run manifest records
everything that shaped a run.
"""
from __future__ import print_function

import argparse
import hashlib
import json
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Optional

from .errors import DataError, InvalidConfig, UsageError
from .sampler import DEFAULT_BURN_IN, DEFAULT_ITERATIONS, DEFAULT_PROPOSAL_SD, DEFAULT_THIN, McmcConfig

__all__ = ['ArgParser', 'RunConfig', 'read_key_values', 'parse_bool', 'parse_float_list',
           'parse_int_list', 'parse_level', 'HYPER_KEYS', 'DEFAULT_LEVEL', 'DEFAULT_CHAINS', 'DEFAULT_WORKERS']

DEFAULT_SEED = 0
DEFAULT_CHAINS = 1
DEFAULT_WORKERS = 1
DEFAULT_LEVEL = 0.95
DEFAULT_VERBOSITY = 'INFO'

HYPER_KEYS = ('a_sigma', 'b_sigma', 'a_eta', 'b_eta', 'a_omega', 'b_omega',
              'nu_xi', 'h_xi', 'mu0', 'sigma0')
_HYPER_NAMES = {'h_xi': 'H_xi', 'sigma0': 'Sigma0'}


class ArgParser(argparse.ArgumentParser):
    """argparse parser that raises UsageError (exit 1) instead of exiting with 2."""

    def error(self, message):
        raise UsageError('%s: %s' % (self.prog, message))


def read_key_values(path):
    values = OrderedDict()
    with open(path, 'r') as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            sep = '=' if '=' in line else (':' if ':' in line else None)
            if sep is None:
                raise InvalidConfig('%s:%d: expected "key = value", got %r' % (path, lineno, raw.strip()))
            key, value = (part.strip() for part in line.split(sep, 1))
            key = key.replace('-', '_').lower()
            if not key:
                raise InvalidConfig('%s:%d: empty key' % (path, lineno))
            if key in values:
                raise InvalidConfig('%s:%d: duplicate key %r' % (path, lineno, key))
            values[key] = value
    return values


def parse_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
        return True
    if text in ('0', 'false', 'no', 'off'):
        return False
    raise InvalidConfig('expected a boolean, got %r' % (value,))


def parse_float_list(value):
    """'3' -> 3.0, '1, 2' -> [1.0, 2.0]."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    parts = [p.strip() for p in str(value).split(',') if p.strip()]
    try:
        numbers = [float(p) for p in parts]
    except ValueError:
        raise InvalidConfig('expected number(s), got %r' % (value,))
    if not numbers:
        raise InvalidConfig('expected number(s), got an empty value')
    return numbers[0] if len(numbers) == 1 else numbers


def parse_level(value):
    """argparse type for credible levels: a number strictly between 0 and 1."""
    try:
        level = float(value)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError('expected a number, got %r' % (value,))
    if not (0.0 < level < 1.0):
        raise argparse.ArgumentTypeError('level must lie in (0, 1), got %r' % (value,))
    return level


def parse_int_list(value):
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    parts = [p.strip() for p in str(value).split(',') if p.strip()]
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise InvalidConfig('expected comma separated integers, got %r' % (value,))


def _int(value):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise InvalidConfig('expected an integer, got %r' % (value,))


def _float(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InvalidConfig('expected a number, got %r' % (value,))


def _opt_str(value):
    return None if value in (None, '') else str(value)


# key -> (parser, default)
FIELDS = OrderedDict([
    ('plots', (_opt_str, None)),
    ('covariates', (_opt_str, None)),
    ('adjacency', (_opt_str, None)),
    ('out', (_opt_str, None)),
    ('svc', (parse_int_list, ())),
    ('seed', (_int, DEFAULT_SEED)),
    ('iterations', (_int, DEFAULT_ITERATIONS)),
    ('burn_in', (_int, DEFAULT_BURN_IN)),
    ('thin', (_int, DEFAULT_THIN)),
    ('chains', (_int, DEFAULT_CHAINS)),
    ('workers', (_int, DEFAULT_WORKERS)),
    ('sub_model', (parse_bool, False)),
    ('proposal_sd_rho_eta', (parse_float_list, DEFAULT_PROPOSAL_SD)),
    ('proposal_sd_rho_omega', (_float, DEFAULT_PROPOSAL_SD)),
    ('adapt', (parse_bool, True)),
    ('checkpoint_every', (_int, 0)),
    ('traces', (str, 'params')),
    ('level', (_float, DEFAULT_LEVEL)),
    ('verbosity', (lambda v: str(v).upper(), DEFAULT_VERBOSITY)),
] + [(key, (parse_float_list, None)) for key in HYPER_KEYS])


@dataclass(eq=False)
class RunConfig:
    values: Dict[str, object] = field(default_factory=dict)
    source: Optional[str] = None

    @classmethod
    def build(cls, file_values=None, overrides=None, source=None):
        """Merge defaults, config-file values and non-None CLI overrides."""
        values = OrderedDict((k, default) for k, (_, default) in FIELDS.items())
        for origin, mapping in (('config', file_values or {}), ('flag', overrides or {})):
            for key, raw in mapping.items():
                if raw is None:
                    continue
                if key not in FIELDS:
                    raise InvalidConfig('unknown %s key %r' % (origin, key))
                parser = FIELDS[key][0]
                try:
                    values[key] = parser(raw)
                except InvalidConfig as e:
                    raise InvalidConfig('%s: %s' % (key, e))
        cfg = cls(values=values, source=source)
        cfg.validate()
        return cfg

    def __getattr__(self, name):
        values = self.__dict__.get('values', {})
        if name in values:
            return values[name]
        raise AttributeError(name)

    def validate(self):
        if self.chains < 1 or self.workers < 1:
            raise InvalidConfig('chains and workers must be >= 1')
        if not (0.0 < self.level < 1.0):
            raise InvalidConfig('level must lie in (0, 1)')
        if self.verbosity not in ('DEBUG', 'INFO', 'WARNING', 'ERROR'):
            raise InvalidConfig('verbosity must be DEBUG, INFO, WARNING or ERROR')

    def require_paths(self, *keys):
        for key in keys:
            path = self.values.get(key)
            if not path:
                raise UsageError('missing required setting %r' % key)
            if key != 'out' and not os.path.isfile(path):
                raise DataError('%s file not found: %s' % (key, path))

    def mcmc_config(self, checkpoint_path=None):
        return McmcConfig(
            total_iterations=self.iterations, burn_in=self.burn_in, thin=self.thin,
            proposal_sd_rho_eta=self.proposal_sd_rho_eta,
            proposal_sd_rho_omega=self.proposal_sd_rho_omega,
            adapt_during_burnin=self.adapt, seed=self.seed, sub_model=self.sub_model,
            traces=self.traces, checkpoint_every=self.checkpoint_every,
            checkpoint_path=checkpoint_path,
        )

    def hyper_overrides(self):
        out = {}
        for key in HYPER_KEYS:
            value = self.values.get(key)
            if value is not None:
                out[_HYPER_NAMES.get(key, key)] = value
        return out

    def canonical(self):
        return OrderedDict((k, (list(v) if isinstance(v, tuple) else v))
                           for k, v in sorted(self.values.items()))

    def config_hash(self):
        return config_digest(self.canonical())

    def svc_tuple(self):
        return tuple(self.svc) if self.svc else ()


def config_digest(values):
    """SHA-256 of the canonical (sorted, compact) JSON form of a config mapping."""
    blob = json.dumps(values, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(blob.encode('utf-8')).hexdigest()


def load_run_config(config_path=None, overrides=None):
    file_values = read_key_values(config_path) if config_path else None
    return RunConfig.build(file_values, overrides, source=config_path)


def read_study_spec(path):
    """Raw key-value mapping of a study spec file (validated by PopulationSpec)."""
    return read_key_values(path)


