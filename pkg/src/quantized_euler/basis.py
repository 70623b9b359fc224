"""Quantized spherical-harmonic basis and coefficient <-> matrix maps.

Matrix row/column ``i`` carries the weight ``M = s - i`` with ``s = (N-1)/2``.
With that ordering ``T_lm`` lives on the ``m``-th superdiagonal for ``m >= 0``
and on the ``|m|``-th subdiagonal for ``m < 0``. Spherical harmonics map to
skew-Hermitian matrices by ``Y_lm -> i T_lm``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .wigner import three_j_column

__all__ = [
    "SpectralCoeffs",
    "QuantBasis",
    "build_basis",
    "coeffs_to_matrix",
    "matrix_to_coeffs",
    "diagonal_indices",
    "save_basis",
    "load_basis",
]


def diagonal_indices(N: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column indices of the diagonal with offset ``m`` (col - row)."""
    k = np.arange(N - abs(m))
    if m >= 0:
        return k, k + m
    return k - m, k


@dataclass
class SpectralCoeffs:
    """Complex amplitudes ``w[l, m]`` for ``0 <= l <= l_max``, ``|m| <= l``.

    Stored densely as ``data[l, m + l_max]``; entries with ``|m| > l`` and the
    ``l = 0`` row are kept at zero.
    """

    l_max: int
    data: np.ndarray = field(repr=False)

    @classmethod
    def zeros(cls, l_max: int) -> "SpectralCoeffs":
        return cls(l_max, np.zeros((l_max + 1, 2 * l_max + 1), dtype=complex))

    @classmethod
    def from_dict(cls, l_max: int, values: dict) -> "SpectralCoeffs":
        c = cls.zeros(l_max)
        for (l, m), v in values.items():
            c[l, m] = v
        return c

    def __getitem__(self, lm):
        l, m = lm
        return self.data[l, m + self.l_max]

    def __setitem__(self, lm, value):
        l, m = lm
        if not (1 <= l <= self.l_max and abs(m) <= l):
            raise IndexError(f"(l, m) = {lm} outside 1 <= l <= {self.l_max}, |m| <= l")
        self.data[l, m + self.l_max] = value

    def copy(self) -> "SpectralCoeffs":
        return SpectralCoeffs(self.l_max, self.data.copy())

    def resized(self, l_max: int) -> "SpectralCoeffs":
        """Truncate or zero-pad to a new ``l_max``."""
        out = SpectralCoeffs.zeros(l_max)
        k = min(l_max, self.l_max)
        out.data[: k + 1, l_max - k : l_max + k + 1] = self.data[
            : k + 1, self.l_max - k : self.l_max + k + 1
        ]
        return out

    def items(self):
        for l in range(1, self.l_max + 1):
            for m in range(-l, l + 1):
                yield (l, m), self.data[l, m + self.l_max]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.data) ** 2)))

    def reality_defect(self) -> float:
        """max |conj(w[l, m]) - (-1)^m w[l, -m]|."""
        L = self.l_max
        m = np.arange(-L, L + 1)
        sign = np.where(m % 2 == 0, 1.0, -1.0)
        return float(np.max(np.abs(np.conj(self.data) - sign * self.data[:, ::-1]), initial=0.0))

    def __mul__(self, k):
        return SpectralCoeffs(self.l_max, self.data * k)

    __rmul__ = __mul__

    def __add__(self, other: "SpectralCoeffs") -> "SpectralCoeffs":
        L = max(self.l_max, other.l_max)
        return SpectralCoeffs(L, self.resized(L).data + other.resized(L).data)


class QuantBasis:
    """Nonzero diagonals of the matrices ``T^N_lm`` for ``1 <= l <= N-1``.

    ``blocks[m]`` is an orthogonal ``(N-|m|) x (N-|m|)`` array whose column
    ``l - |m|`` holds the diagonal of ``T_lm`` (column ``0`` with ``m = 0`` is
    the normalized identity, the ``l = 0`` element). Instances are treated
    as immutable.
    """

    def __init__(self, N: int, blocks: dict[int, np.ndarray]):
        self.N = N
        self.s = (N - 1) / 2
        self.blocks = blocks
        for b in blocks.values():
            b.flags.writeable = False

    @property
    def l_max(self) -> int:
        return self.N - 1

    def diagonal(self, l: int, m: int) -> np.ndarray:
        if not (0 <= abs(m) <= l <= self.N - 1):
            raise IndexError(f"no basis element (l, m) = ({l}, {m}) for N = {self.N}")
        return self.blocks[m][:, l - abs(m)]

    def matrix(self, l: int, m: int) -> np.ndarray:
        """Dense ``T_lm`` (real). Only meant for checks and small N."""
        out = np.zeros((self.N, self.N))
        out[diagonal_indices(self.N, m)] = self.diagonal(l, m)
        return out

    def __repr__(self):
        return f"QuantBasis(N={self.N})"


def build_basis(N: int) -> QuantBasis:
    """Compute every ``T^N_lm`` from Wigner 3j symbols.

    ``(T_lm)_{m1 m2} = (-1)^(s - m1) sqrt(2l+1) (s l s; -m1 m m2)``, evaluated
    one matrix diagonal at a time through :func:`three_j_column`.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    s = (N - 1) / 2
    blocks = {}
    for m in range(-(N - 1), N):
        rows, _ = diagonal_indices(N, m)
        m1 = s - rows
        # (s l s; -m1 m m2) equals (l s s; m m2 -m1) by a cyclic column shift
        f = three_j_column(s, m, m1)
        lvals = np.arange(abs(m), N)
        sign = np.where(rows % 2 == 0, 1.0, -1.0)
        blocks[m] = sign[:, None] * np.sqrt(2 * lvals + 1.0)[None, :] * f
    blocks[0][:, 0] = _identity_column(N)
    return QuantBasis(N, blocks)


def _identity_column(N: int) -> np.ndarray:
    """Diagonal of ``T_00 = I / sqrt(N)``."""
    return np.full(N, 1.0 / np.sqrt(N))


def coeffs_to_matrix(c: SpectralCoeffs, basis: QuantBasis) -> np.ndarray:
    """``W = sum_lm w[l, m] * i T_lm`` (skew-Hermitian when ``c`` is real)."""
    N = basis.N
    if c.l_max > N - 1:
        raise ValueError(f"l_max = {c.l_max} exceeds N - 1 = {N - 1}")
    W = np.zeros((N, N), dtype=complex)
    L = c.l_max
    for m in range(-L, L + 1):
        vec = c.data[abs(m) : L + 1, m + L].copy()
        if abs(m) == 0:
            vec[0] = 0.0
        block = basis.blocks[m][:, : vec.shape[0]]
        W[diagonal_indices(N, m)] = 1j * (block @ vec)
    return W


def matrix_to_coeffs(W: np.ndarray, basis: QuantBasis, l_max: int | None = None) -> SpectralCoeffs:
    """Project onto the basis: ``w[l, m] = <i T_lm, W>_F``."""
    N = basis.N
    if l_max is None:
        l_max = N - 1
    if l_max > N - 1:
        raise ValueError(f"l_max = {l_max} exceeds N - 1 = {N - 1}")
    if W.shape != (N, N):
        raise ValueError(f"expected a {N}x{N} matrix, got {W.shape}")
    c = SpectralCoeffs.zeros(l_max)
    for m in range(-l_max, l_max + 1):
        block = basis.blocks[m][:, : l_max - abs(m) + 1]
        c.data[abs(m) :, m + l_max] = -1j * (block.T @ np.diagonal(W, offset=m))
    c.data[0, :] = 0.0
    return c


_MAGIC = b"ZSB1"


def save_basis(basis: QuantBasis, path) -> None:
    """Write the basis cache file (little-endian, see README)."""
    N = basis.N
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", N))
        for l in range(1, N):
            for m in range(-l, l + 1):
                fh.write(basis.diagonal(l, m).astype("<c16").tobytes())


def load_basis(path) -> QuantBasis:
    """Read a file written by :func:`save_basis`."""
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a basis cache file")
    (N,) = struct.unpack_from("<I", raw, 4)
    blocks = {m: np.zeros((N - abs(m), N - abs(m))) for m in range(-(N - 1), N)}
    blocks[0][:, 0] = _identity_column(N)
    pos = 8
    for l in range(1, N):
        for m in range(-l, l + 1):
            n = N - abs(m)
            vals = np.frombuffer(raw, dtype="<c16", count=n, offset=pos)
            blocks[m][:, l - abs(m)] = vals.real
            pos += 16 * n
    if pos != len(raw):
        raise ValueError(f"{path}: size does not match N = {N}")
    return QuantBasis(N, blocks)
