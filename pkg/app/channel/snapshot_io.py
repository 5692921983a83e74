"""NFSN v1 snapshot files.

Little-endian layout::

    b"NFSN" | u32 version=1 | u32 M | u32 T | f64 lambda | u8 kind (0=ULA, 1=UPA)
    ULA: u32 m | f64 spacing       UPA: u32 mx | u32 my | f64 spacing
    u8 has_truth [| u32 count | count x (f64 phi, f64 psi or NaN, f64 range)]
    M*T complex values as (f64 re, f64 im), t outer, m inner
"""

import math
import struct
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from app.array.geometry import ArrayGeometry
from app.channel.models import SnapshotMatrix
from app.exceptions import SnapshotFormatError
from app.schema import SourceLocation


MAGIC = b"NFSN"
VERSION = 1
_KIND_CODES = {False: 0, True: 1}

PathLike = Union[str, Path]


class _Reader:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    def take(self, fmt: str) -> Tuple:
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.payload):
            raise SnapshotFormatError(
                f"Truncated snapshot payload at byte {self.offset} (need {size} more)"
            )
        values = struct.unpack_from(fmt, self.payload, self.offset)
        self.offset += size
        return values

    def take_bytes(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise SnapshotFormatError(
                f"Truncated snapshot data: expected {size} bytes, "
                f"{len(self.payload) - self.offset} available"
            )
        chunk = self.payload[self.offset : self.offset + size]
        self.offset += size
        return chunk


def encode_snapshots(snapshots: SnapshotMatrix) -> bytes:
    geometry = snapshots.geometry
    m, t = snapshots.data.shape
    parts = [
        MAGIC,
        struct.pack(
            "<IIIdB", VERSION, m, t, snapshots.wavelength, _KIND_CODES[geometry.is_planar]
        ),
    ]
    if geometry.is_planar:
        parts.append(struct.pack("<IId", geometry.mx, geometry.my, geometry.spacing))
    else:
        parts.append(struct.pack("<Id", geometry.mx, geometry.spacing))

    truth = snapshots.truth
    if truth is None:
        parts.append(struct.pack("<B", 0))
    else:
        parts.append(struct.pack("<BI", 1, len(truth)))
        for loc in truth:
            psi = math.nan if loc.psi is None else loc.psi
            parts.append(struct.pack("<ddd", loc.phi, psi, loc.range))

    parts.append(np.ascontiguousarray(snapshots.data.T).astype("<c16").tobytes())
    return b"".join(parts)


def decode_snapshots(payload: bytes) -> SnapshotMatrix:
    reader = _Reader(payload)
    if reader.take_bytes(4) != MAGIC:
        raise SnapshotFormatError("Not an NFSN snapshot file (bad magic)")
    version, m, t, wavelength, kind = reader.take("<IIIdB")
    if version != VERSION:
        raise SnapshotFormatError(f"Unsupported NFSN version {version}")
    if kind == 0:
        mx, spacing = reader.take("<Id")
        geometry = ArrayGeometry.ula(mx, spacing)
    elif kind == 1:
        mx, my, spacing = reader.take("<IId")
        geometry = ArrayGeometry.upa(mx, my, spacing)
    else:
        raise SnapshotFormatError(f"Unknown geometry kind code {kind}")
    if geometry.num_elements != m:
        raise SnapshotFormatError(
            f"Header M={m} disagrees with {geometry.describe()}"
        )

    truth: Optional[List[SourceLocation]] = None
    (has_truth,) = reader.take("<B")
    if has_truth:
        (count,) = reader.take("<I")
        truth = []
        for _ in range(count):
            phi, psi, range_m = reader.take("<ddd")
            truth.append(
                SourceLocation(phi=phi, psi=None if math.isnan(psi) else psi, range=range_m)
            )

    raw = reader.take_bytes(16 * m * t)
    if reader.offset != len(payload):
        raise SnapshotFormatError(
            f"{len(payload) - reader.offset} trailing bytes after snapshot data"
        )
    data = np.frombuffer(raw, dtype="<c16").reshape(t, m).T.astype(np.complex128)
    return SnapshotMatrix(data=data, geometry=geometry, wavelength=wavelength, truth=truth)


def write_snapshots(path: PathLike, snapshots: SnapshotMatrix) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_snapshots(snapshots))
    except OSError as e:
        raise SnapshotFormatError(f"Failed to write {path}: {e}") from None
    return path


def read_snapshots(path: PathLike) -> SnapshotMatrix:
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise SnapshotFormatError(f"Failed to read {path}: {e}") from None
    return decode_snapshots(payload)
