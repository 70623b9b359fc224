"""Wigner 3j symbols.

Two independent routes are provided:

* :func:`wigner3j` evaluates a single symbol from the Racah sum in exact
  integer arithmetic. It is slow for large arguments but correct to the last
  bit, which makes it the reference for everything else.
* :func:`three_j_column` evaluates a whole run of symbols
  ``(l, s, s; m, m2, m3)`` for ``l = |m| .. 2s`` by a two-sided three-term
  recurrence in ``l``. This is what the quantized basis is built from.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numba
import numpy as np

__all__ = ["wigner3j", "three_j_column"]


def _twice(x) -> int:
    t = 2 * Fraction(x).limit_denominator(2)
    if t.denominator != 1 or 2 * Fraction(x) != t:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(t)


def wigner3j(l1, l2, l3, m1, m2, m3) -> float:
    """Return the Wigner 3j symbol ``(l1 l2 l3; m1 m2 m3)``.

    Arguments may be integers or half-integers (floats such as ``0.5`` or
    :class:`fractions.Fraction`). Symbols violating a selection rule are 0.
    """
    j1, j2, j3 = _twice(l1), _twice(l2), _twice(l3)
    n1, n2, n3 = _twice(m1), _twice(m2), _twice(m3)
    if (j1 + n1) % 2 or (j2 + n2) % 2 or (j3 + n3) % 2:
        raise ValueError("each l_i + m_i must be an integer")
    if n1 + n2 + n3 != 0:
        return 0.0
    if abs(n1) > j1 or abs(n2) > j2 or abs(n3) > j3:
        return 0.0
    if j3 < abs(j1 - j2) or j3 > j1 + j2 or (j1 + j2 + j3) % 2:
        return 0.0

    # everything below is in plain integers (halved doubled values)
    a = (j1 + j2 - j3) // 2
    b = (j1 - j2 + j3) // 2
    c = (-j1 + j2 + j3) // 2
    big = (j1 + j2 + j3) // 2 + 1
    p1, q1 = (j1 + n1) // 2, (j1 - n1) // 2
    p2, q2 = (j2 + n2) // 2, (j2 - n2) // 2
    p3, q3 = (j3 + n3) // 2, (j3 - n3) // 2

    f = math.factorial
    kmin = max(0, (j2 - j3 - n1) // 2, (j1 - j3 + n2) // 2)
    kmax = min(a, q1, p2)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            f(k)
            * f((j3 - j2 + n1) // 2 + k)
            * f((j3 - j1 - n2) // 2 + k)
            * f(a - k)
            * f(q1 - k)
            * f(p2 - k)
        )
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0

    square = Fraction(f(a) * f(b) * f(c), f(big))
    square *= f(p1) * f(q1) * f(p2) * f(q2) * f(p3) * f(q3)
    square *= total * total
    phase = (j1 - j2 - n3) // 2
    sign = (-1) ** (phase % 2) * (1 if total > 0 else -1)
    return sign * math.sqrt(square)


@numba.njit(cache=True)
def _column_block(s, m, m1_rows, out):
    """Fill ``out[k, i] = (l, s, s; m, m1_rows[k] - m, -m1_rows[k])`` for
    ``l = |m| + i``.

    Recurrence (Schulten-Gordon, specialised to j2 = j3 = s, divided by
    l(l+1)):  a(l+1) f(l+1) + c(l) f(l) + a(l) f(l-1) = 0 with
    a(l)^2 = ((2s+1)^2 - l^2)(l^2 - m^2) and c(l) = (2l+1)(m3 - m2).

    Forward iteration is stable from |m| up into the oscillatory region,
    backward iteration from 2s down into it; the two runs are matched in the
    middle of that region.
    """
    lmin = abs(m)
    n = out.shape[1]
    two_s1 = (2.0 * s + 1.0) ** 2
    a = np.zeros(n + 1)
    for i in range(1, n):
        l = lmin + i
        a[i] = math.sqrt((two_s1 - l * l) * (l * l - m * m))
    fwd = np.zeros(n)
    bwd = np.zeros(n)
    for k in range(m1_rows.shape[0]):
        m1 = m1_rows[k]
        m2 = m1 - m
        m3 = -m1
        dm = m3 - m2
        if n == 1:
            out[k, 0] = 1.0 / math.sqrt(2.0 * lmin + 1.0)
            if m % 2 != 0:
                out[k, 0] = -out[k, 0]
            continue

        # match point: centre of the oscillatory region |c| < 2a
        lo = -1
        hi = -1
        best = 0
        best_gap = 1e300
        for i in range(n):
            cval = abs((2.0 * (lmin + i) + 1.0) * dm)
            gap = cval - 2.0 * a[i]
            if gap < 0.0:
                if lo < 0:
                    lo = i
                hi = i
            if gap < best_gap:
                best_gap = gap
                best = i
        if lo >= 0:
            p = (lo + hi) // 2
        else:
            p = best
        top = min(n - 1, p + 2)
        bot = max(0, p - 2)

        fwd[0] = 1.0
        for i in range(0, top):
            c = (2.0 * (lmin + i) + 1.0) * dm
            prev = fwd[i - 1] if i > 0 else 0.0
            fwd[i + 1] = -(c * fwd[i] + a[i] * prev) / a[i + 1]
            if abs(fwd[i + 1]) > 1e150:
                for j in range(i + 2):
                    fwd[j] *= 1e-150

        bwd[n - 1] = 1.0
        for i in range(n - 1, bot, -1):
            c = (2.0 * (lmin + i) + 1.0) * dm
            nxt = bwd[i + 1] if i < n - 1 else 0.0
            bwd[i - 1] = -(c * bwd[i] + a[i + 1] * nxt) / a[i]
            if abs(bwd[i - 1]) > 1e150:
                for j in range(i - 1, n):
                    bwd[j] *= 1e-150

        num = 0.0
        den = 0.0
        for i in range(bot, top + 1):
            num += fwd[i] * bwd[i]
            den += bwd[i] * bwd[i]
        ratio = num / den
        # bring both halves to the backward scale, where f(2s) = 1
        norm = 0.0
        for i in range(n):
            if i <= p:
                v = fwd[i] / ratio
            else:
                v = bwd[i]
            out[k, i] = v
        big = 0.0
        for i in range(n):
            big = max(big, abs(out[k, i]))
        for i in range(n):
            out[k, i] /= big
            norm += (2.0 * (lmin + i) + 1.0) * out[k, i] ** 2
        scale = 1.0 / math.sqrt(norm)
        # sign convention: sgn f(2s) = (-1)^(j2 - j3 - m1) = (-1)^m
        if (m % 2 != 0) != (out[k, n - 1] < 0.0):
            scale = -scale
        for i in range(n):
            out[k, i] *= scale


def three_j_column(s: float, m: int, m1_values) -> np.ndarray:
    """Symbols ``(l, s, s; m, m1 - m, -m1)`` for ``l = |m| .. 2s``.

    Returns an array of shape ``(len(m1_values), 2s - |m| + 1)``; row ``k``
    belongs to ``m1_values[k]``. Every ``m1`` must satisfy ``|m1| <= s`` and
    ``|m1 - m| <= s``.
    """
    m1 = np.asarray(m1_values, dtype=np.float64)
    n = int(round(2 * s)) - abs(int(m)) + 1
    if n < 1:
        raise ValueError("|m| exceeds 2s")
    out = np.empty((m1.shape[0], n))
    _column_block(float(s), int(m), m1, out)
    return out
