"""Binary array files (``PATD``) with a one-line text sidecar.

Layout: magic ``b"PATD"``, ``u8`` rank, ``rank`` little-endian ``u64`` dims,
then the values as little-endian float64 in row-major order.  The sidecar is
written next to the array as ``<name>.hdr`` and holds ``role=<role>`` followed
by the GridSpec fields.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import CartesianImage, GridSpec, PolarImage, Sinogram

MAGIC = b"PATD"
_ROLES = {"cartesian": CartesianImage, "polar": PolarImage, "sinogram": Sinogram}


class ArrayFormatError(ValueError):
    pass


def encode_array(arr) -> bytes:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    if arr.ndim > 255:
        raise ArrayFormatError("rank does not fit in u8")
    head = MAGIC + struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return head + arr.tobytes(order="C")


def decode_array(buf: bytes) -> np.ndarray:
    if buf[:4] != MAGIC:
        raise ArrayFormatError("missing PATD magic")
    rank = buf[4]
    off = 5 + 8 * rank
    if len(buf) < off:
        raise ArrayFormatError("truncated header")
    dims = struct.unpack(f"<{rank}Q", buf[5:off])
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    if len(buf) != off + 8 * count:
        raise ArrayFormatError(f"expected {8 * count} payload bytes, got {len(buf) - off}")
    return np.frombuffer(buf, dtype="<f8", offset=off).reshape(dims).astype(np.float64)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".hdr")


def save_array(path, arr, role: str | None = None, spec: GridSpec | None = None) -> Path:
    path = Path(path)
    path.write_bytes(encode_array(arr))
    if role is not None or spec is not None:
        line = f"role={role or 'array'}"
        if spec is not None:
            line += " " + spec.header()
        sidecar_path(path).write_text(line + "\n")
    return path


def load_array(path) -> np.ndarray:
    return decode_array(Path(path).read_bytes())


def read_sidecar(path) -> tuple[str | None, GridSpec | None]:
    side = sidecar_path(path)
    if not side.exists():
        return None, None
    text = side.read_text().strip()
    toks = dict(t.split("=", 1) for t in text.split() if "=" in t)
    spec = GridSpec.from_header(text) if "M" in toks else None
    return toks.get("role"), spec


def save_grid_array(path, obj) -> Path:
    """Write a CartesianImage, PolarImage or Sinogram with its sidecar."""
    return save_array(path, obj.values, role=obj.role, spec=obj.spec)


def load_grid_array(path, spec: GridSpec | None = None):
    """Inverse of :func:`save_grid_array`. ``spec`` overrides the sidecar."""
    values = load_array(path)
    role, side_spec = read_sidecar(path)
    spec = spec or side_spec
    if role not in _ROLES or spec is None:
        raise ArrayFormatError(f"{path}: sidecar must name a grid role and GridSpec")
    return _ROLES[role](values, spec)
