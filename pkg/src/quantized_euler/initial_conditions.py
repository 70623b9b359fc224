"""Initial vorticity fields.

Random fields and blob fields come back as :class:`SpectralCoeffs`;
Rossby-Haurwitz waves are returned directly as matrices because their time
evolution is a conjugation in matrix space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import QuantBasis, SpectralCoeffs, coeffs_to_matrix, diagonal_indices
from .harmonics import analyze, gauss_grid, unit_vectors

__all__ = [
    "RandomFieldParams",
    "BlobSpec",
    "RHWaveSpec",
    "sample_l2_random",
    "zero_momentum_projection",
    "gaussian_blobs",
    "coriolis_matrix",
    "rh_wave",
    "FOUR_BLOBS",
]


@dataclass(frozen=True)
class RandomFieldParams:
    seed: int
    l_max: int
    eps: float = 0.01

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")


def sample_l2_random(p: RandomFieldParams, normalize: bool = True) -> SpectralCoeffs:
    """Isotropic Gaussian random field with ``|w_lm| l^(1+eps)`` of unit variance.

    For ``m > 0`` the coefficient is ``(a + ib) / (sqrt(2) l^(1+eps))`` with
    ``a, b ~ N(0, 1)``; ``m = 0`` is real and ``m < 0`` follows from the
    reality condition. With ``normalize`` the result has unit 2-norm, which
    equals the Frobenius norm of the quantized matrix.
    """
    rng = np.random.default_rng(p.seed)
    c = SpectralCoeffs.zeros(p.l_max)
    L = p.l_max
    for l in range(1, L + 1):
        z = rng.standard_normal(2 * l + 1)
        decay = float(l) ** (1.0 + p.eps)
        c.data[l, L] = z[0] / decay
        m = np.arange(1, l + 1)
        pos = (z[1 : l + 1] + 1j * z[l + 1 :]) / (np.sqrt(2.0) * decay)
        c.data[l, L + m] = pos
        c.data[l, L - m] = np.where(m % 2 == 0, 1.0, -1.0) * np.conj(pos)
    if normalize:
        c = c * (1.0 / c.norm())
    return c


def zero_momentum_projection(c: SpectralCoeffs) -> SpectralCoeffs:
    """Remove the ``l = 1`` modes, which carry all of the angular momentum."""
    out = c.copy()
    if out.l_max >= 1:
        out.data[1, :] = 0.0
    return out


@dataclass
class BlobSpec:
    """Gaussian vortex blobs ``G_i exp(-width |x - x_i|^2)`` (chordal distance)."""

    centers: np.ndarray
    strengths: np.ndarray
    width: float = 20.0

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.strengths = np.atleast_1d(np.asarray(self.strengths, dtype=float))
        if self.centers.shape != (self.strengths.size, 3):
            raise ValueError("need one 3-vector center per strength")
        if not np.allclose(np.linalg.norm(self.centers, axis=1), 1.0, atol=1e-12):
            raise ValueError("blob centers must be unit vectors")

    @classmethod
    def from_angles(cls, phi, theta, strengths, width: float = 20.0) -> "BlobSpec":
        """Centers given by azimuth ``phi`` and inclination ``theta``."""
        phi, theta = np.asarray(phi, float), np.asarray(theta, float)
        centers = np.stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=1
        )
        return cls(centers, strengths, width)


# four-blob configuration with vanishing total momentum used in the
# point-vortex comparison (azimuth, inclination, relative strength)
FOUR_BLOBS = {
    "phi": (2.3218, -0.9638, -2.5283, 0.8511),
    "theta": (1.3017, 1.8837, 1.577, 1.5896),
    "gamma": (1.0, 0.9002, -0.5436, -0.4178),
}


def gaussian_blobs(spec: BlobSpec, N: int) -> SpectralCoeffs:
    """Project the blob field onto harmonics ``1 <= l <= N-1``.

    The correction ``C(x)`` (a constant plus a degree-one harmonic) that makes
    the field mean-free and momentum-free is exactly the removal of the
    ``l = 0`` and ``l = 1`` components.
    """
    theta, phi, w = gauss_grid(2 * (N + 1), 4 * (N + 1))
    x = unit_vectors(theta, phi)
    field = np.zeros(w.shape)
    for center, gamma in zip(spec.centers, spec.strengths):
        d2 = np.sum((x - center) ** 2, axis=-1)
        field += gamma * np.exp(-spec.width * d2)
    c = analyze(field, theta, phi, w, N - 1)
    return zero_momentum_projection(c)


def coriolis_matrix(omega: float, basis: QuantBasis) -> np.ndarray:
    """``F = 2 omega i T_10``, the quantized Coriolis parameter in su(N)."""
    F = np.zeros((basis.N, basis.N), dtype=complex)
    F[np.diag_indices(basis.N)] = 2.0j * omega * basis.diagonal(1, 0)
    return F


@dataclass
class RHWaveSpec:
    """Rossby-Haurwitz wave of degree ``l`` on a sphere rotating at ``omega``.

    ``amplitudes`` maps ``m`` to the coefficient of ``i T_lm``; it should
    satisfy the reality condition for a real wave.
    """

    C: float
    l: int
    amplitudes: dict = field(default_factory=dict)
    omega: float = 1.0

    @property
    def alpha(self) -> float:
        ll = self.l * (self.l + 1)
        return 0.5 * (2.0 * self.C / ll - self.C + 1.0)

    @staticmethod
    def stationary_C(l: int) -> float:
        ll = l * (l + 1)
        return ll / (ll - 2.0)


def rh_wave(spec: RHWaveSpec, basis: QuantBasis, t: float, bracket_scale: float = 1.0) -> np.ndarray:
    """Exact solution ``W(t) = C F + exp(a F t) V exp(-a F t)`` with ``a = alpha * bracket_scale``.

    ``bracket_scale`` multiplies the commutator of the flow being solved (1 for
    the plain commutator used by the integrators, ``N^1.5`` for the rescaled
    one). ``F`` is diagonal, so the conjugation multiplies entry ``(i, j)``
    by ``exp(a t (F_ii - F_jj))`` instead of forming matrix exponentials.
    """
    N = basis.N
    if not 1 <= spec.l <= N - 1:
        raise ValueError(f"wave degree {spec.l} outside 1..{N - 1}")
    c = SpectralCoeffs.zeros(spec.l)
    for m, v in spec.amplitudes.items():
        c[spec.l, m] = v
    V = coeffs_to_matrix(c, basis)
    F = coriolis_matrix(spec.omega, basis)
    f = np.diag(F)
    a = spec.alpha * bracket_scale
    for m in range(-spec.l, spec.l + 1):
        i, j = diagonal_indices(N, m)
        V[i, j] *= np.exp(a * t * (f[i] - f[j]))
    return spec.C * F + V
