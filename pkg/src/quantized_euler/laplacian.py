"""Quantized Laplace-Beltrami operator.

In components (weights ``M`` in ``{-s..s}``) the operator couples the entry
``(M1, M2)`` only to ``(M1 + 1, M2 + 1)`` and ``(M1 - 1, M2 - 1)``, so it acts
independently on every matrix diagonal as a symmetric tridiagonal operator.
Each block is factorized once (bidiagonal LU without pivoting) and both the
forward map and the inverse cost O(N^2).

The main-diagonal block is singular (the identity spans its kernel); it is
regularized so that ``lap(I) = I``.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .basis import diagonal_indices

__all__ = ["LaplacianOperator", "build_laplacian", "apply_laplacian", "solve_poisson"]

PIVOT_FLOOR = 1e-14


@numba.njit(cache=True)
def _assemble(N, diag, off):
    """Coefficients in matrix layout: ``diag[i, j]`` scales entry (i, j) and
    ``off[i, j]`` couples (i, j) with (i+1, j+1) (both weights lowered by one).
    """
    s = (N - 1) / 2.0
    ss = s * (s + 1.0)
    for i in range(N):
        M1 = s - i
        for j in range(N):
            M2 = s - j
            diag[i, j] = -2.0 * (ss - M1 * M2)
            if i + 1 < N and j + 1 < N:
                off[i, j] = math.sqrt(ss - M1 * (M1 - 1.0)) * math.sqrt(ss - M2 * (M2 - 1.0))


@numba.njit(cache=True)
def _factor(N, diag, off, low, piv):
    """Bidiagonal LU of every diagonal block, stored in matrix layout.

    ``low[i, j]`` multiplies entry (i-1, j-1) in the forward sweep and
    ``piv[i, j]`` is the pivot of entry (i, j).
    """
    for i in range(N):
        for j in range(N):
            if i == 0 or j == 0:
                piv[i, j] = diag[i, j]
            else:
                low[i, j] = off[i - 1, j - 1] / piv[i - 1, j - 1]
                piv[i, j] = diag[i, j] - low[i, j] * off[i - 1, j - 1]


@numba.njit(cache=True)
def _apply(N, diag, off, W, out):
    mean = 0.0j
    for k in range(N):
        mean += W[k, k]
    mean /= N
    for i in range(N):
        for j in range(N):
            acc = diag[i, j] * W[i, j]
            if i > 0 and j > 0:
                acc += off[i - 1, j - 1] * W[i - 1, j - 1]
            if i + 1 < N and j + 1 < N:
                acc += off[i, j] * W[i + 1, j + 1]
            out[i, j] = acc
    # lap(I) = I
    for k in range(N):
        out[k, k] += mean


@numba.njit(cache=True)
def _solve(N, off, low, piv, W, out):
    # rows are swept in order so every block is eliminated simultaneously
    # with contiguous memory access
    mean = 0.0j
    for k in range(N):
        mean += W[k, k]
    mean /= N
    for i in range(N):
        for j in range(N):
            v = W[i, j]
            if i == j:
                v -= mean
            if i > 0 and j > 0:
                v -= low[i, j] * out[i - 1, j - 1]
            out[i, j] = v
    for i in range(N - 1, -1, -1):
        for j in range(N - 1, -1, -1):
            if i == N - 1 or j == N - 1:
                if i == j:
                    # singular pivot of the main-diagonal block
                    out[i, j] = 0.0
                else:
                    out[i, j] = out[i, j] / piv[i, j]
            else:
                out[i, j] = (out[i, j] - off[i, j] * out[i + 1, j + 1]) / piv[i, j]
    shift = 0.0j
    for k in range(N):
        shift += out[k, k]
    shift = shift / N - mean
    for k in range(N):
        out[k, k] -= shift


class LaplacianOperator:
    """Per-diagonal tridiagonal representation of the discrete Laplacian.

    Coefficients and LU factors are stored in matrix layout (entry ``(i, j)``
    of each array belongs to matrix entry ``(i, j)``), which keeps the sweeps
    cache friendly. The factorization is computed once in the constructor.
    """

    def __init__(self, N: int):
        if N < 2:
            raise ValueError(f"N must be >= 2, got {N}")
        self.N = N
        self.diag = np.zeros((N, N))
        self.off = np.zeros((N, N))
        _assemble(N, self.diag, self.off)
        self.low = np.zeros_like(self.diag)
        self.piv = np.zeros_like(self.diag)
        _factor(N, self.diag, self.off, self.low, self.piv)
        self._check_pivots()
        for a in (self.diag, self.off, self.low, self.piv):
            a.flags.writeable = False

    def _check_pivots(self):
        p = np.abs(self.piv).copy()
        p[-1, -1] = np.inf  # known-singular direction, handled by the regularization
        if p.min() < PIVOT_FLOOR:
            i, j = np.unravel_index(np.argmin(p), p.shape)
            raise ArithmeticError(f"vanishing pivot in Laplacian block d={j - i}")

    def block(self, d: int) -> np.ndarray:
        """Dense (unregularized) tridiagonal block for diagonal offset ``d``."""
        rows, cols = diagonal_indices(self.N, d)
        off = self.off[rows[:-1], cols[:-1]]
        return np.diag(self.diag[rows, cols]) + np.diag(off, 1) + np.diag(off, -1)

    def apply(self, W: np.ndarray) -> np.ndarray:
        W = self._check(W)
        out = np.empty_like(W)
        _apply(self.N, self.diag, self.off, W, out)
        return out

    def solve(self, W: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        W = self._check(W)
        if out is None:
            out = np.empty_like(W)
        _solve(self.N, self.off, self.low, self.piv, W, out)
        return out

    def _check(self, W):
        W = np.asarray(W)
        if W.shape != (self.N, self.N):
            raise ValueError(f"expected a {self.N}x{self.N} matrix, got {W.shape}")
        return np.ascontiguousarray(W, dtype=np.complex128)

    def __repr__(self):
        return f"LaplacianOperator(N={self.N})"


def build_laplacian(N: int) -> LaplacianOperator:
    return LaplacianOperator(N)


def apply_laplacian(L: LaplacianOperator, W) -> np.ndarray:
    """``lap(W)`` in O(N^2)."""
    return L.apply(W)


def solve_poisson(L: LaplacianOperator, W) -> np.ndarray:
    """``P`` with ``lap(P) = W``; the identity component maps to itself."""
    return L.solve(W)
