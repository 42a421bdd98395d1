"""Matrix files: the binary ``fmx`` format and delimited text.

``fmx`` layout: a 16-byte header holding magic ``b"FMX1"``, ``u32`` rows,
``u32`` cols and four reserved zero bytes (little-endian), then ``rows * cols``
little-endian float64 values in row-major order. The padding keeps the
payload 8-byte aligned.
"""
import re
import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError

MAGIC = b"FMX1"
_HEADER = struct.Struct("<4sII4x")


def write_fmx(path, a):
    a = np.asarray(a, dtype="<f8")
    if a.ndim == 1:
        a = a[:, None]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, a.shape[0], a.shape[1]))
        fh.write(np.ascontiguousarray(a).tobytes())


def read_fmx(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValidationError(f"{path}: truncated fmx header")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValidationError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise ValidationError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    return data.astype(np.float64)


_SPLIT = re.compile(r"[,\s]+")


def read_text(path, skip_header=False):
    """Parse comma- or whitespace-delimited numbers; errors carry the line number."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if skip_header and lineno == 1:
                continue
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c for c in _SPLIT.split(line) if c]
            try:
                values = [float(c) for c in cells]
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ValidationError(
                    f"{path}:{lineno}: ragged row with {len(values)} cells, expected {width}"
                )
            rows.append(values)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def write_text(path, a, delimiter=","):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    np.savetxt(path, a, delimiter=delimiter, fmt="%.17g")


def read_matrix(path):
    """Dispatch on suffix: ``.fmx`` is binary, anything else is text."""
    if str(path).endswith(".fmx"):
        return read_fmx(path)
    return read_text(path)
