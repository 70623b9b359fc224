"""Time stepping of ``dW/dt = [P, W]`` with ``P = lap^-1 (W - F)``, plus diagnostics.

All matrices are complex ``N x N`` arrays in su(N). The bracket is the plain
commutator; the ``N^(3/2)`` scaling is absorbed into the reported physical
time through :func:`time_scale`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import QuantBasis, matrix_to_coeffs
from .harmonics import angular_momentum
from .laplacian import LaplacianOperator

__all__ = [
    "NonConvergence",
    "SimState",
    "Diagnostics",
    "project_su",
    "isomp_step",
    "heun_step",
    "time_scale",
    "diagnostics",
    "predicted_regime",
    "GAMMA_THRESHOLDS",
]

GAMMA_THRESHOLDS = (0.15, 0.4)


class NonConvergence(RuntimeError):
    """The implicit stage did not reach its tolerance."""


@dataclass(frozen=True)
class SimState:
    W: np.ndarray
    step: int
    h: float
    F: np.ndarray | None = None
    seconds_per_step: float = 0.0

    @property
    def t(self) -> float:
        return self.step * self.seconds_per_step

    def shifted(self) -> np.ndarray:
        return self.W if self.F is None else self.W - self.F


def project_su(W: np.ndarray) -> np.ndarray:
    """Nearest traceless skew-Hermitian matrix."""
    W = 0.5 * (W - W.conj().T)
    W[np.diag_indices_from(W)] -= np.trace(W) / W.shape[0]
    return W


def isomp_step(state: SimState, lap: LaplacianOperator, tol: float = 1e-13, max_iters: int = 50) -> SimState:
    """Isospectral midpoint rule.

    The stage matrix ``X`` solves ``W_n = (I - A) X (I + A)`` with
    ``A = h/2 lap^-1(X - F)``, found by fixed-point iteration from ``X = W_n``
    and stopped once the update is below ``tol * max(1, |W_n|_F)``. The new
    state ``(I + A) X (I - A)`` is evaluated in the equivalent form
    ``Q W_n Q^H`` with the Cayley transform ``Q = (I + A)(I - A)^-1``, which
    is unitary, so the spectrum is preserved to rounding even when the stage
    is only solved to ``tol``.
    """
    W, F, h = state.W, state.F, state.h
    N = W.shape[0]
    half = 0.5 * h
    quarter = 0.25 * h * h
    thresh = tol * max(1.0, np.linalg.norm(W))
    X = W.copy()
    for _ in range(max_iters):
        P = lap.solve(X if F is None else X - F)
        PX = P @ X
        X_new = W + half * (PX - X @ P) + quarter * (PX @ P)
        delta = np.linalg.norm(X_new - X)
        X = X_new
        if delta <= thresh:
            break
    else:
        raise NonConvergence(
            f"implicit stage did not converge in {max_iters} iterations (last update {delta:.3e})"
        )
    A = half * lap.solve(X if F is None else X - F)
    I = np.eye(N)
    Q = np.linalg.solve((I - A).T, (I + A).T).T
    W_new = project_su(Q @ W @ Q.conj().T)
    return replace(state, W=W_new, step=state.step + 1)


def _skew_traceless(K: np.ndarray) -> np.ndarray:
    S = K - K.conj().T
    S[np.diag_indices_from(S)] -= np.trace(S) / S.shape[0]
    return S


def heun_step(state: SimState, lap: LaplacianOperator) -> SimState:
    """Explicit Heun step using two Poisson solves and two matrix products."""
    W, F, h = state.W, state.F, state.h
    K1 = lap.solve(W if F is None else W - F) @ W
    Wt = W + h * _skew_traceless(K1)
    K2 = K1 + lap.solve(Wt if F is None else Wt - F) @ Wt
    W_new = project_su(W + 0.5 * h * _skew_traceless(K2))
    return replace(state, W=W_new, step=state.step + 1)


def time_scale(N: int, h: float, norm: float) -> float:
    """Physical seconds per step, ``h sqrt(16 pi) / (N^1.5 norm)``.

    ``norm`` is the factor by which the initial matrix was divided before
    integration (its Frobenius norm when the state is normalized to 1).
    """
    if not norm > 0:
        raise ValueError(f"norm must be positive, got {norm}")
    return h * math.sqrt(16.0 * math.pi) / (N**1.5 * norm)


@dataclass
class Diagnostics:
    t: float
    H: float
    C: dict
    L: np.ndarray
    gamma: float
    spectrum: np.ndarray | None = None

    def row(self, step: int) -> list:
        return [step, self.t, self.H, self.C[2], self.C[3], self.C[4], *self.L, self.gamma]


def diagnostics(
    W: np.ndarray,
    lap: LaplacianOperator,
    basis: QuantBasis,
    F: np.ndarray | None = None,
    K: int = 4,
    t: float = 0.0,
    spectrum: bool = False,
) -> Diagnostics:
    """Energy, Casimirs, angular momentum and gamma of ``W``.

    ``C_k = Re tr((-iW)^k)`` so that ``C_2`` is the enstrophy ``|W|_F^2``
    (``-iW`` is Hermitian with the eigenvalues of the vorticity).
    ``H = 1/2 Re tr(lap^-1(W - F) (W - F)^H)``.
    """
    X = W if F is None else W - F
    H = 0.5 * float(np.real(np.vdot(X, lap.solve(X))))
    Hm = -1j * W
    C = {}
    power = Hm
    for k in range(2, max(K, 4) + 1):
        power = power @ Hm
        C[k] = float(np.real(np.trace(power)))
    L = angular_momentum(matrix_to_coeffs(W, basis, l_max=1))
    C2 = C[2]
    gamma = float(np.linalg.norm(L) / math.sqrt(C2)) if C2 > 0 else 0.0
    spec = np.linalg.eigvalsh(0.5 * (Hm + Hm.conj().T)) if spectrum else None
    return Diagnostics(t=t, H=H, C=C, L=L, gamma=gamma, spectrum=spec)


def predicted_regime(gamma: float) -> int:
    """Expected number of persistent blobs for a given gamma."""
    lo, hi = GAMMA_THRESHOLDS
    if gamma < lo:
        return 4
    if gamma < hi:
        return 3
    return 2
