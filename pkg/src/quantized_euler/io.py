"""Binary and text file formats (all little-endian).

* ``ZSW1`` matrix file, used for checkpoints and frames:
  magic, u32 N, u64 step, f64 h, then N*N complex128 row-major.
* ``ZSR1`` raster file: magic, u32 n_phi, u32 n_theta, f64 t, then
  n_theta*n_phi float64 (theta-major).
"""

from __future__ import annotations

import csv
import hashlib
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "save_matrix",
    "load_matrix",
    "save_raster",
    "load_raster",
    "save_pgm",
    "fmt",
    "write_csv",
    "read_csv",
    "sha256",
]

_W_MAGIC = b"ZSW1"
_W_HEAD = struct.Struct("<4sIQd")
_R_MAGIC = b"ZSR1"
_R_HEAD = struct.Struct("<4sIId")


def fmt(x) -> str:
    """Round-trip-exact decimal text for a float (17 significant digits)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def save_matrix(path, W: np.ndarray, step: int, h: float) -> None:
    W = np.ascontiguousarray(W, dtype="<c16")
    N = W.shape[0]
    if W.shape != (N, N):
        raise ValueError(f"expected a square matrix, got {W.shape}")
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_W_HEAD.pack(_W_MAGIC, N, int(step), float(h)))
        fh.write(W.tobytes())
    tmp.replace(path)


def load_matrix(path) -> tuple[np.ndarray, int, float]:
    """Return ``(W, step, h)`` from a ZSW1 file."""
    raw = Path(path).read_bytes()
    if len(raw) < _W_HEAD.size:
        raise ValueError(f"{path}: truncated header")
    magic, N, step, h = _W_HEAD.unpack_from(raw)
    if magic != _W_MAGIC:
        raise ValueError(f"{path}: not a ZSW1 file")
    if len(raw) != _W_HEAD.size + 16 * N * N:
        raise ValueError(f"{path}: size does not match N = {N}")
    W = np.frombuffer(raw, dtype="<c16", offset=_W_HEAD.size).reshape(N, N)
    return W.astype(np.complex128), int(step), float(h)


def save_raster(path, values: np.ndarray, t: float) -> None:
    values = np.ascontiguousarray(values, dtype="<f8")
    n_theta, n_phi = values.shape
    with open(path, "wb") as fh:
        fh.write(_R_HEAD.pack(_R_MAGIC, n_phi, n_theta, float(t)))
        fh.write(values.tobytes())


def load_raster(path) -> tuple[np.ndarray, float]:
    raw = Path(path).read_bytes()
    magic, n_phi, n_theta, t = _R_HEAD.unpack_from(raw)
    if magic != _R_MAGIC:
        raise ValueError(f"{path}: not a ZSR1 file")
    if len(raw) != _R_HEAD.size + 8 * n_phi * n_theta:
        raise ValueError(f"{path}: size does not match {n_theta}x{n_phi}")
    values = np.frombuffer(raw, dtype="<f8", offset=_R_HEAD.size).reshape(n_theta, n_phi)
    return values.astype(float), float(t)


def save_pgm(path, values: np.ndarray) -> None:
    """8-bit grayscale image, symmetric scale so that zero maps to mid-gray."""
    v = np.asarray(values, dtype=float)
    amp = np.max(np.abs(v))
    img = np.full(v.shape, 128, dtype=np.uint8)
    if amp > 0:
        img = np.clip(np.rint(127.5 + 127.5 * v / amp), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{v.shape[1]} {v.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def write_csv(path, header, rows, mode="w") -> None:
    with open(path, mode, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) if isinstance(x, (float, int, np.floating, np.integer)) else x for x in r])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and float data of a numeric CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    return rows[0], data.reshape(len(rows) - 1, len(rows[0]))


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
