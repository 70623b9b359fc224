"""Spherical harmonics on the unit sphere: evaluation, synthesis, analysis.

Convention: ``Y_lm(phi, theta) = P_lm(cos theta) exp(i m phi)`` with fully
normalized associated Legendre functions including the Condon-Shortley
phase, ``phi`` the azimuth and ``theta`` the inclination.
"""

from __future__ import annotations

import numpy as np

from .basis import SpectralCoeffs

__all__ = [
    "legendre_table",
    "gauss_grid",
    "equiangular_grid",
    "synthesize",
    "analyze",
    "angular_momentum",
    "unit_vectors",
]


def legendre_table(l_max: int, x) -> np.ndarray:
    """Normalized ``P_lm(x)`` for ``0 <= m <= l <= l_max``.

    Returns an array of shape ``(l_max + 1, l_max + 1, len(x))`` indexed
    ``[l, m]``. Sectoral terms are seeded by the product recurrence and
    columns are filled by the increasing-l three-term recurrence; the
    sectoral seed only underflows where the true value is below 1e-300.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    sin = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    P = np.zeros((l_max + 1, l_max + 1, x.size))
    P[0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, l_max + 1):
        P[m, m] = -np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * sin * P[m - 1, m - 1]
    for m in range(0, l_max):
        P[m + 1, m] = np.sqrt(2.0 * m + 3.0) * x * P[m, m]
        for l in range(m + 2, l_max + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[l, m] = a * (x * P[l - 1, m] - b * P[l - 2, m])
    return P


def gauss_grid(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes in ``cos theta`` times a uniform azimuth grid.

    Returns ``(theta, phi, weights)`` where ``weights`` has shape
    ``(n_theta, n_phi)`` and integrates functions over the sphere exactly up
    to degree ``2 n_theta - 1`` in ``cos theta`` and ``n_phi - 1`` in ``phi``.
    """
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x[::-1])
    w = w[::-1]
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    return theta, phi, np.outer(w, np.full(n_phi, 2.0 * np.pi / n_phi))


def equiangular_grid(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cell-centred equiangular grid with area weights ``sin(theta) dtheta dphi``."""
    theta = np.pi * (np.arange(n_theta) + 0.5) / n_theta
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    dphi = 2.0 * np.pi / n_phi
    # exact area of each latitude band, split evenly in azimuth
    edges = np.pi * np.arange(n_theta + 1) / n_theta
    band = np.cos(edges[:-1]) - np.cos(edges[1:])
    return theta, phi, np.outer(band, np.full(n_phi, dphi))


def unit_vectors(theta, phi) -> np.ndarray:
    """Cartesian unit vectors for a (theta, phi) grid, shape ``(nt, np, 3)``."""
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    return np.stack(
        [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1
    )


def synthesize(c: SpectralCoeffs, theta, phi) -> np.ndarray:
    """Evaluate ``sum_lm w[l, m] Y_lm`` on the tensor grid ``theta x phi``.

    The result is complex; it is real up to rounding when ``c`` satisfies the
    reality condition.
    """
    L = c.l_max
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    P = legendre_table(L, np.cos(theta))
    m = np.arange(-L, L + 1)
    # G[theta, m] = sum_l w[l, m] P_l|m|; P_{l,-m} = (-1)^m P_lm
    G = np.zeros((theta.size, 2 * L + 1), dtype=complex)
    for k, mm in enumerate(m):
        am = abs(mm)
        sign = -1.0 if (mm < 0 and am % 2) else 1.0
        G[:, k] = sign * (c.data[am:, k] @ P[am:, am, :])
    return G @ np.exp(1j * np.outer(m, phi))


def analyze(values, theta, phi, weights, l_max: int) -> SpectralCoeffs:
    """Quadrature projection ``w[l, m] = int f conj(Y_lm)``.

    ``values`` and ``weights`` are ``(len(theta), len(phi))`` arrays. Exact
    for band-limited ``f`` on a :func:`gauss_grid` with enough nodes. The
    ``l = 0`` (mean) component is discarded.
    """
    values = np.asarray(values)
    P = legendre_table(l_max, np.cos(theta))
    m = np.arange(-l_max, l_max + 1)
    F = (values * weights) @ np.exp(-1j * np.outer(phi, m))  # (nt, 2L+1)
    c = SpectralCoeffs.zeros(l_max)
    for k, mm in enumerate(m):
        am = abs(mm)
        sign = -1.0 if (mm < 0 and am % 2) else 1.0
        c.data[am:, k] = sign * (P[am:, am, :] @ F[:, k])
    c.data[0, :] = 0.0
    return c


def angular_momentum(c: SpectralCoeffs) -> np.ndarray:
    """``L = int w n dA`` from the ``l = 1`` coefficients."""
    if c.l_max < 1:
        return np.zeros(3)
    w10, w11 = c[1, 0], c[1, 1]
    k = np.sqrt(2.0 * np.pi / 3.0)
    return np.array([-2.0 * k * w11.real, 2.0 * k * w11.imag, np.sqrt(4.0 * np.pi / 3.0) * w10.real])
