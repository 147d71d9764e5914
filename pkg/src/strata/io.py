"""Field snapshot files.

Layout: one ASCII header line ``STRATA1 nx ny nz parity time tau`` followed by
``nx*ny*nz`` little-endian float64 values in C order of the ``(nx, ny, nz)``
array (z varies fastest, x slowest). ``tau`` is 0 when not applicable.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import StrataError
from .spectral import PARITIES, Field, Grid

MAGIC = "STRATA1"


class SnapshotError(StrataError, ValueError):
    pass


def write_snapshot(path, field: Field, time: float = 0.0, tau: float = 0.0) -> Path:
    if field.horizontal:
        raise SnapshotError("snapshots hold 3D fields only")
    g = field.grid
    header = f"{MAGIC} {g.nx} {g.ny} {g.nz} {field.parity} {time!r} {tau!r}\n"
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    return path


def read_snapshot(path) -> tuple[Field, float, float]:
    """Return ``(field, time, tau)``; validates the header and the value count."""
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise SnapshotError(f"{path}: missing header line")
    parts = data[:nl].decode("ascii", errors="replace").split()
    if len(parts) != 7 or parts[0] != MAGIC:
        raise SnapshotError(f"{path}: bad header {data[:nl]!r}")
    try:
        nx, ny, nz = (int(p) for p in parts[1:4])
        time, tau = float(parts[5]), float(parts[6])
    except ValueError as exc:
        raise SnapshotError(f"{path}: bad header field ({exc})") from None
    parity = parts[4]
    if parity not in PARITIES:
        raise SnapshotError(f"{path}: unknown parity {parity!r}")
    payload = data[nl + 1 :]
    expected = nx * ny * nz * 8
    if len(payload) != expected:
        raise SnapshotError(f"{path}: expected {expected} bytes of data, found {len(payload)}")
    values = np.frombuffer(payload, dtype="<f8").reshape(nx, ny, nz).astype(float)
    return Field(Grid(nx, ny, nz), values, parity), time, tau
