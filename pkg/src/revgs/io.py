"""Binary field snapshots and CSV diagnostics.

Snapshot layout (all little-endian)::

    offset  size  field
    0       8     magic b"REGSSNAP"
    8       4     format version (uint32)
    12      4     dim (uint32)
    16      24    n per axis (3 x uint64, unused axes 0)
    40      24    length per axis (3 x float64, unused axes 0)
    64      8     time (float64)
    72      8     cumulative clamp events (uint64)
    80      4     species order b"uvpq"
    84      4     reserved (zero)
    88      ...   payload: u, v, p, q, each n[0]*...*n[dim-1] float64, C order
"""
from __future__ import annotations

import csv
import math
import os
import struct
from collections import deque
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from .core import Equilibrium, Parameters, State
from .diagnostics import COLUMNS, DiagnosticsRecord
from .functionals import inequality_monitor
from .grid import GridSpec

MAGIC = b"REGSSNAP"
VERSION = 1
SPECIES_TAG = b"uvpq"
_HEADER = struct.Struct("<8sII3Q3ddQ4s4x")
HEADER_SIZE = _HEADER.size


class SnapshotError(OSError):
    """Malformed or unreadable snapshot file."""


@dataclass(frozen=True)
class SnapshotHeader:
    version: int
    grid: GridSpec
    time: float
    clamp_events: int

    @property
    def payload_bytes(self) -> int:
        return 4 * self.grid.npoints * 8


def write_snapshot(state: State, grid: GridSpec, path, clamp_events: int = 0) -> None:
    if state.fields.shape != (4,) + grid.shape:
        raise ValueError(f"state shape {state.fields.shape} does not match grid {grid.shape}")
    n = list(grid.n) + [0] * (3 - grid.dim)
    L = list(grid.length) + [0.0] * (3 - grid.dim)
    header = _HEADER.pack(MAGIC, VERSION, grid.dim, *n, *L, float(state.time), int(clamp_events), SPECIES_TAG)
    payload = np.ascontiguousarray(state.fields, dtype="<f8").tobytes()
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    os.replace(tmp, path)


def _parse_header(raw: bytes, path) -> SnapshotHeader:
    if len(raw) < HEADER_SIZE:
        raise SnapshotError(f"{path}: truncated header: {len(raw)} of {HEADER_SIZE} bytes at offset {len(raw)}")
    magic, version, dim, n0, n1, n2, l0, l1, l2, time, clamps, species = _HEADER.unpack(raw[:HEADER_SIZE])
    if magic != MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported format version {version} (expected {VERSION})")
    if species != SPECIES_TAG:
        raise SnapshotError(f"{path}: unexpected species order {species!r}")
    if dim not in (1, 2, 3):
        raise SnapshotError(f"{path}: invalid dim {dim}")
    try:
        grid = GridSpec(dim, (n0, n1, n2)[:dim], (l0, l1, l2)[:dim])
    except ValueError as exc:
        raise SnapshotError(f"{path}: invalid grid in header: {exc}") from exc
    return SnapshotHeader(version, grid, time, clamps)


def read_snapshot_header(path) -> SnapshotHeader:
    """Metadata only; the payload is not read."""
    with open(path, "rb") as fh:
        return _parse_header(fh.read(HEADER_SIZE), path)


def load_snapshot(path) -> tuple[SnapshotHeader, State]:
    with open(path, "rb") as fh:
        header = _parse_header(fh.read(HEADER_SIZE), path)
        payload = fh.read(header.payload_bytes + 1)
    expected = header.payload_bytes
    if len(payload) < expected:
        raise SnapshotError(
            f"{path}: truncated payload at byte offset {HEADER_SIZE + len(payload)} "
            f"(expected {HEADER_SIZE + expected} bytes)"
        )
    if len(payload) > expected:
        raise SnapshotError(f"{path}: trailing data after byte offset {HEADER_SIZE + expected}")
    fields = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape((4,) + header.grid.shape)
    return header, State(header.time, fields)


def read_snapshot(path) -> State:
    return load_snapshot(path)[1]


def format_value(x) -> str:
    """CSV cell: empty for ``None``, integers verbatim, floats to 17 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


class CsvDiagnosticsSink:
    """Append-only CSV writer with the fixed diagnostics column order.

    A header row is written when the file is new or empty.  Rows are flushed
    as they are written so a killed run leaves a readable file.
    """

    def __init__(self, path, append: bool = False):
        self.path = path
        fresh = not (append and os.path.exists(path) and os.path.getsize(path) > 0)
        self._fh: TextIO = open(path, "a" if append else "w", newline="")
        self._writer = csv.writer(self._fh)
        if fresh:
            self._writer.writerow(COLUMNS)
            self._fh.flush()
        self.rows = 0

    def append(self, record: DiagnosticsRecord) -> None:
        self._writer.writerow([format_value(v) for v in record.as_row()])
        self._fh.flush()
        self.rows += 1

    __call__ = append

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def append_diagnostics(record: DiagnosticsRecord, sink) -> None:
    sink.append(record)


def read_diagnostics(path) -> list[DiagnosticsRecord]:
    """Parse a diagnostics CSV back into records (empty cells become ``None``)."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"{path}: unexpected columns {header}")
        for row in reader:
            vals = {}
            for name, cell in zip(COLUMNS, row):
                if cell == "":
                    vals[name] = None
                elif name == "clamp_events":
                    vals[name] = int(cell)
                else:
                    vals[name] = float(cell)
            out.append(DiagnosticsRecord(**vals))
    return out


class MonitoredSink:
    """Fill the monitor columns before forwarding records to ``inner``.

    The monitor needs a centered time derivative, so each record is held
    back until its successor arrives.  The Global inequality is used when an
    equilibrium is given, the Local one otherwise.  The first and last
    records leave the monitor cells empty.
    """

    def __init__(self, inner: Callable[[DiagnosticsRecord], None], params: Parameters, eq: Equilibrium | None = None):
        self.inner = inner
        self.params = params
        self.eq = eq
        self.mode = "Global" if eq is not None else "Local"
        self._window: deque[DiagnosticsRecord] = deque(maxlen=3)

    def __call__(self, record: DiagnosticsRecord) -> None:
        self._window.append(record)
        if len(self._window) == 1:
            return
        if len(self._window) == 3:
            mid = self._window[1]
            try:
                rep = inequality_monitor(list(self._window), self.mode, self.params, self.eq)
                mid.monitor_lhs, mid.monitor_rhs = float(rep.lhs[0]), float(rep.rhs[0])
            except ValueError:
                pass
        self.inner(self._window[-2])

    append = __call__

    def close(self) -> None:
        if self._window:
            self.inner(self._window[-1])
            self._window.clear()
