#!/usr/bin/env python3
"""Structured JSON-line logging.

Every record is a single line ``json.dumps(record, sort_keys=True)`` on
standard error with ``ts`` (UTC, ISO-8601 ``Z``) and ``level`` filled in
when absent. Standard output is reserved for command results.

Usage:
  log_json(event='chain_done', chain=0, accept_rho_omega=0.41)
  set_level('DEBUG')
"""
from __future__ import print_function

import json
import sys
from datetime import datetime, timezone

LEVELS = {'DEBUG': 10, 'INFO': 20, 'WARNING': 30, 'ERROR': 40}
DEFAULT_LEVEL = 'INFO'

_threshold = LEVELS[DEFAULT_LEVEL]


def _ts():
    return datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')


def set_level(name):
    global _threshold
    key = str(name).upper()
    if key not in LEVELS:
        raise ValueError('unknown log level: %s' % name)
    _threshold = LEVELS[key]


def get_level():
    for name, value in LEVELS.items():
        if value == _threshold:
            return name
    return DEFAULT_LEVEL


def log_json(**kwargs):
    line = kwargs
    if 'level' not in line:
        line['level'] = 'INFO'
    if LEVELS.get(str(line['level']).upper(), LEVELS['INFO']) < _threshold:
        return
    if 'ts' not in line:
        line['ts'] = _ts()
    try:
        print(json.dumps(line, sort_keys=True, default=str), file=sys.stderr)
    except Exception:  # noqa: BLE001
        pass
