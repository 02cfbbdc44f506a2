#!/usr/bin/env python3
"""Versioned chain checkpoint file.

File format:
  First line: JSON header + '\\n'
    {"format": "stsae-checkpoint", "version": 2, "iteration": <sweeps done>,
     "shapes": {field: [dims]}, "values": <float count>,
     "rng": <numpy bit_generator.state>, "stats": <MetropolisStats.as_dict()>,
     "retained": {"sweeps": [m, ...], "arrays": [[name, [dims]], ...]}}
  Remainder: packed ModelState as raw little-endian float64 (see
  ModelState.FIELDS for the order), then each retained-draw array in the
  order listed under "retained" (first axis = len(sweeps)). The byte count
  is exactly 8 * values.

Floats are stored bit-exactly, so a chain restarted from a checkpoint
continues exactly as the uninterrupted chain would have and keeps the
draws it retained before the checkpoint.

CLI:
  stsae checkpoint show <file>   prints the header as JSON
"""
from __future__ import print_function

import json
import sys
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .errors import DataError, UsageError
from .logs import log_json
from .model import ModelState
from .storage import atomic_write_bytes

FORMAT_NAME = 'stsae-checkpoint'
FORMAT_VERSION = 2

__all__ = ['Checkpoint', 'save_checkpoint', 'load_checkpoint', 'read_header',
           'FORMAT_NAME', 'FORMAT_VERSION']


@dataclass(eq=False)
class Checkpoint:
    state: ModelState
    rng_state: dict
    iteration: int
    stats: dict
    sweeps: List[int] = field(default_factory=list)
    retained: Dict[str, np.ndarray] = field(default_factory=dict)


def _jsonable(obj):
    if isinstance(obj, dict):
        return dict((k, _jsonable(v)) for k, v in obj.items())
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def save_checkpoint(path, state, rng, iteration, stats, sweeps=(), retained=None):
    """``retained`` maps array name -> draws kept so far, first axis len(sweeps)."""
    retained = retained or {}
    sweeps = [int(m) for m in sweeps]
    arrays = []
    parts = [state.pack()]
    for name in sorted(retained):
        values = np.asarray(retained[name], dtype=np.float64)
        if values.shape[:1] != (len(sweeps),):
            raise ValueError('retained %s has %d draws for %d sweeps' % (name, values.shape[0], len(sweeps)))
        arrays.append([name, list(values.shape[1:])])
        parts.append(values.ravel())
    packed = np.concatenate(parts)
    header = {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'iteration': int(iteration),
        'shapes': state.shapes(),
        'values': int(packed.size),
        'rng': _jsonable(rng.bit_generator.state),
        'stats': _jsonable(stats.as_dict() if hasattr(stats, 'as_dict') else stats),
        'retained': {'sweeps': sweeps, 'arrays': arrays},
    }
    data = (json.dumps(header, sort_keys=True) + '\n').encode('utf-8') + packed.astype('<f8').tobytes()
    atomic_write_bytes(path, data)
    log_json(level='DEBUG', event='checkpoint_written', path=path, iteration=int(iteration),
             retained=len(sweeps))


def read_header(path):
    with open(path, 'rb') as f:
        first = f.readline()
    if not first:
        raise DataError('empty checkpoint file: %s' % path)
    try:
        header = json.loads(first.decode('utf-8'))
    except ValueError as e:
        raise DataError('corrupt checkpoint header in %s: %s' % (path, e))
    if header.get('format') != FORMAT_NAME:
        raise DataError('%s is not a checkpoint file' % path)
    if header.get('version') != FORMAT_VERSION:
        raise DataError('unsupported checkpoint version %r (expected %d)'
                        % (header.get('version'), FORMAT_VERSION))
    return header


def _size(shape):
    return int(np.prod(shape)) if shape else 1


def load_checkpoint(path):
    header = read_header(path)
    with open(path, 'rb') as f:
        f.readline()
        payload = f.read()
    expected = 8 * int(header['values'])
    if len(payload) != expected:
        raise DataError('checkpoint payload length mismatch (expected %d bytes, got %d)'
                        % (expected, len(payload)))
    flat = np.frombuffer(payload, dtype='<f8').astype(np.float64)
    offset = sum(_size(header['shapes'][name]) for name in ModelState.FIELDS)
    state = ModelState.unpack(flat[:offset], header['shapes'])
    sweeps = [int(m) for m in header['retained']['sweeps']]
    retained = {}
    for name, dims in header['retained']['arrays']:
        shape = (len(sweeps),) + tuple(dims)
        size = _size(shape)
        if offset + size > flat.size:
            raise DataError('checkpoint %s: retained %s is truncated' % (path, name))
        retained[name] = flat[offset:offset + size].reshape(shape).copy()
        offset += size
    if offset != flat.size:
        raise DataError('checkpoint %s has %d unexplained values' % (path, flat.size - offset))
    return Checkpoint(state=state, rng_state=header['rng'], iteration=int(header['iteration']),
                      stats=header['stats'], sweeps=sweeps, retained=retained)


def build_arg_parser():
    from .config import ArgParser  # config imports the sampler, which imports this module
    ap = ArgParser(prog='stsae checkpoint', description='Inspect chain checkpoints')
    sub = ap.add_subparsers(dest='cmd')
    show = sub.add_parser('show', help='Print checkpoint header')
    show.add_argument('path')
    return ap


def main(argv=None):
    args = build_arg_parser().parse_args(argv)
    if args.cmd != 'show':
        raise UsageError('usage: stsae checkpoint show <file>')
    header = read_header(args.path)
    print(json.dumps(header, sort_keys=True, indent=2))
    return 0


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main())
