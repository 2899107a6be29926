"""The cosine integral ``CI(s) = -int_{|s|}^inf cos t / t dt``.

The ascending series is used for ``|s| <= 4`` and the continued fraction of
``E1(i x)`` beyond.
"""
from __future__ import annotations

import numpy as np

from .errors import PoleError

EULER_GAMMA = np.euler_gamma


def _cin_series(x: np.ndarray) -> np.ndarray:
    """``Cin(x) = int_0^x (1 - cos t)/t dt`` by its (entire) power series."""
    x2 = x * x
    fact_term = x2 / 2.0  # (-1)^(k+1) x^(2k) / (2k)!
    total = fact_term / 2.0
    for k in range(2, 60):
        fact_term = -fact_term * x2 / ((2 * k - 1) * (2 * k))
        add = fact_term / (2 * k)
        total += add
        if np.all(np.abs(add) <= 1e-17 * np.abs(total) + 1e-300):
            break
    return total


def _ci_continued_fraction(x: np.ndarray) -> np.ndarray:
    """``Ci(x) = -Re E1(i x)`` via the modified Lentz continued fraction (x > 2)."""
    tiny = 1e-300
    b = 1.0 + 1j * x
    c = np.full(x.shape, 1.0 / tiny, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 200):
        a = -float(i * i)
        b = b + 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    h = h * (np.cos(x) - 1j * np.sin(x))
    return -h.real


def cosine_integral(s) -> np.ndarray:
    """``CI(s) = -int_{|s|}^inf cos t / t dt``; even in ``s`` with a log pole at 0."""
    s = np.asarray(s, dtype=float)
    scalar = s.ndim == 0
    x = np.abs(np.atleast_1d(s))
    if np.any(x < 1e-300):
        raise PoleError("cosine integral has a logarithmic pole at 0")
    out = np.empty_like(x)
    small = x <= 4.0
    if np.any(small):
        xs = x[small]
        out[small] = EULER_GAMMA + np.log(xs) - _cin_series(xs)
    if np.any(~small):
        out[~small] = _ci_continued_fraction(x[~small])
    return out[0] if scalar else out


def cin(s) -> np.ndarray:
    """Entire part ``Cin(|s|) = gamma + log|s| - CI(s)``, with ``Cin(0) = 0``."""
    s = np.asarray(s, dtype=float)
    scalar = s.ndim == 0
    x = np.abs(np.atleast_1d(s))
    out = np.empty_like(x)
    small = x <= 4.0
    if np.any(small):
        out[small] = _cin_series(x[small])
    if np.any(~small):
        xl = x[~small]
        out[~small] = EULER_GAMMA + np.log(xl) - _ci_continued_fraction(xl)
    return out[0] if scalar else out
