#!/usr/bin/env python3
"""Atomic file writes and content hashing.

All output files are written to a temporary sibling created with
``tempfile.mkstemp`` and moved into place with ``os.replace`` so readers
never observe a half-written file. Floats in text outputs go through
``format_float`` (``repr``: shortest round-trip form, locale free; NaN
and None become empty cells).
"""
from __future__ import print_function

import csv
import hashlib
import io
import json
import math
import os
import tempfile

__all__ = ['atomic_write_bytes', 'atomic_write_text', 'atomic_write_json',
           'atomic_write_csv', 'format_float', 'sha256_file', 'ensure_dir']


def ensure_dir(path):
    if path and not os.path.isdir(path):
        os.makedirs(path, exist_ok=True)


def atomic_write_bytes(path, data):
    directory = os.path.dirname(path) or '.'
    fd, tmp_path = tempfile.mkstemp(prefix='.tmp.', dir=directory)
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp_path, path)
    finally:
        if os.path.exists(tmp_path):
            try:
                os.remove(tmp_path)
            except Exception:  # noqa: BLE001
                pass


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode('utf-8'))


def atomic_write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=1) + '\n')


def format_float(value):
    if value is None:
        return ''
    value = float(value)
    if math.isnan(value):
        return ''
    return repr(value)


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return format_float(value)
    if hasattr(value, 'dtype') and getattr(value.dtype, 'kind', '') == 'f':
        return format_float(value)
    return str(value)


def atomic_write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def sha256_file(path, chunk=1 << 20):
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        while True:
            block = f.read(chunk)
            if not block:
                break
            digest.update(block)
    return digest.hexdigest()
