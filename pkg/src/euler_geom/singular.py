"""Mollified products of the singular terms produced by the kernel expansion.

Every pairing is evaluated in the form

    iint Phi_eps(s, s') T(s) T'(s') ds ds' = int g(t) (phi_eps * T)(t) (phi'_eps * T')(t) dt,

with ``Phi_eps(s, s') = int g(t) phi_eps(t - s) phi'_eps(t - s') dt``.  The
canonical mollifiers are the polynomial bump ``p(y) = 630 y^4 (1 - y)^4`` on
``[0, 1]`` and its mirror image, so the mollified Dirac, Heaviside, principal
value and logarithm have closed forms; only the entire part of the cosine
integral and the sampled regular payloads are integrated numerically.  The
``t``-integral uses composite Gauss-Legendre panels graded towards the atom
locations.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss

from .errors import NoConvergence, UnsupportedPair, VacuumState
from .fraccalc import SingularTerm, TermKind, kernel_expansion
from .kernels import GasLaw, chi, sigma
from .special import EULER_GAMMA, cin

__all__ = [
    "SingularTerm",
    "TermKind",
    "MollifierPair",
    "CANONICAL",
    "DEFAULT_LADDER",
    "phi_eps_pairing",
    "weighted_pairing",
    "eps_extrapolate",
    "eps_fit",
    "EpsFit",
    "reduction_drive",
    "ladder",
]

DEFAULT_LADDER = tuple(2.0**-k for k in range(3, 10))

_ATOMS = (TermKind.DIRAC, TermKind.PV)
_GL_T = leggauss(16)
_GL_Y = leggauss(32)


# --------------------------------------------------------------------------
# mollifiers


@dataclass(frozen=True)
class MollifierPair:
    """``phi`` on ``[0, 1]`` and ``phi_prime(x) = phi(-x)`` on ``[-1, 0]``.

    ``Z = iint H(t - s) (phi(t) phi'(s) - phi(s) phi'(t)) ds dt``; with
    disjoint supports only the first product survives, so ``Z = 1``.
    """

    p: Polynomial

    def phi(self, x):
        x = np.asarray(x, float)
        return np.where((x >= 0) & (x <= 1), self.p(np.clip(x, 0, 1)), 0.0)

    def phi_prime(self, x):
        return self.phi(-np.asarray(x, float))

    def integrals(self) -> tuple[float, float]:
        P = self.p.integ()
        return float(P(1) - P(0)), float(P(1) - P(0))

    @property
    def Z(self) -> float:
        # int phi(t) F'(t) dt - int phi'(t) F(t) dt with F, F' the two CDFs,
        # by Gauss-Legendre on each unit interval (exact for the polynomials)
        x, w = leggauss(24)
        pos, neg = 0.5 * (x + 1), 0.5 * (x - 1)
        P = self.p.integ()

        def cdf(t):
            return np.where(t <= 0, 0.0, np.where(t >= 1, 1.0, P(np.clip(t, 0, 1)) / P(1)))

        def cdf_prime(t):
            return 1.0 - cdf(-t)

        first = 0.5 * w @ (self.phi(pos) * cdf_prime(pos)) + 0.5 * w @ (self.phi(neg) * cdf_prime(neg))
        second = 0.5 * w @ (self.phi_prime(pos) * cdf(pos)) + 0.5 * w @ (self.phi_prime(neg) * cdf(neg))
        return float(first - second)


# 630 y^4 (1 - y)^4 == (1 - (2y - 1)^2)^4 normalised to unit mass
CANONICAL = MollifierPair(630.0 * Polynomial([0, 1]) ** 4 * Polynomial([1, -1]) ** 4)


# --------------------------------------------------------------------------
# closed-form moments of the bump against 1/(w - y) and log|w - y|


def _difference_quotient(c: np.ndarray) -> Polynomial:
    """``Q(w) = int_0^1 (p(y) - p(w)) / (y - w) dy`` as a polynomial in ``w``."""
    n = len(c) - 1
    q = np.zeros(max(n, 1))
    for m in range(n):
        k = np.arange(m + 1, n + 1)
        q[m] = np.sum(c[k] / (k - m))
    return Polynomial(q)


def _near(w):
    return (w >= -1.0) & (w <= 2.0)


def _far_quadrature(func, w):
    y, wt = _GL_Y
    y = 0.5 * (y + 1)
    return 0.5 * func(y[None, :], w[:, None]) @ wt


def _cauchy(p: Polynomial, w: np.ndarray) -> np.ndarray:
    """``PV int_0^1 p(y) / (w - y) dy``."""
    out = np.empty_like(w)
    near = _near(w)
    if np.any(near):
        wn = w[near]
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.log(np.abs(wn)) - np.log(np.abs(wn - 1))
        pw = p(wn)
        lg = np.where(pw == 0, 0.0, lg)
        out[near] = pw * lg - _difference_quotient(p.coef)(wn)
    if np.any(~near):
        out[~near] = _far_quadrature(lambda y, x: p(y) / (x - y), w[~near])
    return out


def _log_moment(p: Polynomial, w: np.ndarray) -> np.ndarray:
    """``int_0^1 p(y) log|w - y| dy``."""
    out = np.empty_like(w)
    near = _near(w)
    if np.any(near):
        wn = w[near]
        P = p.integ()
        with np.errstate(divide="ignore", invalid="ignore"):
            right = np.where(wn == 1, 0.0, (P(1) - P(wn)) * np.log(np.abs(1 - wn)))
            left = np.where(wn == 0, 0.0, (P(0) - P(wn)) * np.log(np.abs(wn)))
        out[near] = right - left - _difference_quotient(P.coef)(wn)
    if np.any(~near):
        out[~near] = _far_quadrature(lambda y, x: p(y) * np.log(np.abs(x - y)), w[~near])
    return out


def _mollify(term: SingularTerm, t: np.ndarray, eps: float, side: int, p: Polynomial) -> np.ndarray:
    """``int_0^1 p(y) T(t - side eps y) dy`` for one singular term."""
    c, kind = term.coefficient, term.kind
    w = side * (t - term.location) / eps
    if kind is TermKind.DIRAC:
        return c * np.where((w >= 0) & (w <= 1), p(np.clip(w, 0, 1)), 0.0) / eps
    if kind is TermKind.HEAVISIDE:
        P = p.integ()
        F = P(np.clip(w, 0, 1))
        return c * (F if side > 0 else P(1) - F)
    if kind is TermKind.PV:
        return c * side * _cauchy(p, w) / eps
    y, wt = _GL_Y
    y = 0.5 * (y + 1)
    if kind is TermKind.COSINE_INTEGRAL:
        mass = float(p.integ()(1))
        entire = 0.5 * (p(y)[None, :] * cin(eps * (w[:, None] - y[None, :]))) @ wt
        return c * ((EULER_GAMMA + math.log(eps)) * mass + _log_moment(p, w) - entire)
    if kind is TermKind.REGULAR:
        s = t[:, None] - side * eps * y[None, :]
        vals = term(s.ravel()).reshape(s.shape)
        return 0.5 * (vals * p(y)[None, :]) @ wt
    raise UnsupportedPair(f"no mollified form for {kind!r}")


# a weighted term (alpha + beta s) T; lists of these are linear combinations
Weighted = tuple[SingularTerm, float, float]
Operand = Union[SingularTerm, Sequence[SingularTerm], Sequence[Weighted]]


def _as_weighted(T: Operand) -> list[Weighted]:
    if isinstance(T, SingularTerm):
        return [(T, 1.0, 0.0)]
    out = []
    for item in T:
        out.append((item, 1.0, 0.0) if isinstance(item, SingularTerm) else tuple(item))
    return out


def _times_s(T: list[Weighted]) -> list[Weighted]:
    out = []
    for term, a, b in T:
        if b != 0.0:
            raise UnsupportedPair("only affine weights (alpha + beta s) are supported")
        out.append((term, 0.0, a))
    return out


def mollified(T: Operand, t, eps: float, side: int = 1, mollifiers: MollifierPair = CANONICAL) -> np.ndarray:
    """``(phi_eps * T)(t)`` for ``side=1`` or ``(phi'_eps * T)(t)`` for ``side=-1``."""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, float))
    p, yp = mollifiers.p, mollifiers.p * Polynomial([0, 1])
    out = np.zeros_like(t)
    for term, a, b in _as_weighted(T):
        if a != 0.0:
            out += a * _mollify(term, t, eps, side, p)
        if b != 0.0:
            # s T = t T - (t - s) T, and t - s = side eps y under the bump
            out += b * (t * _mollify(term, t, eps, side, p) - side * eps * _mollify(term, t, eps, side, yp))
    return out[0] if scalar else out


# --------------------------------------------------------------------------
# t quadrature


def _breakpoints(support: tuple[float, float], locations: Iterable[float], eps: float) -> np.ndarray:
    lo, hi = support
    pts = [lo, hi]
    for a in locations:
        pts.extend(a + eps * np.arange(-8, 9) / 8.0)
        j = 1
        while eps * 2.0**j < (hi - lo):
            pts.extend((a - eps * 2.0**j, a + eps * 2.0**j))
            j += 1
    pts = np.unique(np.clip(pts, lo, hi))
    return pts[np.concatenate([[True], np.diff(pts) > 1e-14 * max(1.0, hi - lo)])]


def _t_rule(support, locations, eps):
    br = _breakpoints(support, locations, eps)
    x, w = _GL_T
    a, b = br[:-1, None], br[1:, None]
    nodes = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w[None, :]).ravel()
    return nodes, weights


def _locations(*operands: list[Weighted]) -> set[float]:
    locs = set()
    for op in operands:
        for term, _, _ in op:
            if term.kind is not TermKind.REGULAR:
                locs.add(term.location)
    return locs


def _product_integral(g: Callable, support, X: list[Weighted], Y: list[Weighted], eps: float,
                      extra: Iterable[float] = (), mollifiers: MollifierPair = CANONICAL) -> float:
    """``int g(t) (phi_eps * X)(t) (phi'_eps * Y)(t) dt``."""
    t, w = _t_rule(support, _locations(X, Y) | set(extra), eps)
    gt = np.asarray(g(t), float)
    live = gt != 0
    if not np.any(live):
        return 0.0
    t, w, gt = t[live], w[live], gt[live]
    return float(w @ (gt * mollified(X, t, eps, 1, mollifiers) * mollified(Y, t, eps, -1, mollifiers)))


def _check_table(X: list[Weighted], Y: list[Weighted]):
    ax = {(t.kind, t.location) for t, *_ in X if t.kind in _ATOMS}
    ay = {(t.kind, t.location) for t, *_ in Y if t.kind in _ATOMS}
    if ax and ay and ax != ay:
        raise UnsupportedPair("antisymmetric products of two different atoms are not bounded as eps -> 0")


def phi_eps_pairing(T: Operand, Tp: Operand, g: Callable, eps: float, support: tuple[float, float],
                    mollifiers: MollifierPair = CANONICAL) -> float:
    """``iint Phi_eps(s, s') [T(s) T'(s') - T'(s) T(s')] ds ds'``.

    ``g`` is the (Hölder, compactly supported) weight inside ``Phi_eps`` and
    ``support`` an interval containing its support.  Pairs of two different
    atoms (Dirac or principal value) raise :class:`UnsupportedPair`.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    X, Y = _as_weighted(T), _as_weighted(Tp)
    _check_table(X, Y)
    return (_product_integral(g, support, X, Y, eps, mollifiers=mollifiers)
            - _product_integral(g, support, Y, X, eps, mollifiers=mollifiers))


def weighted_pairing(T: Operand, Tp: Operand, g: Callable, eps: float, support: tuple[float, float],
                     mollifiers: MollifierPair = CANONICAL) -> float:
    """``iint (s - s') Phi_eps(s, s') T(s) T'(s') ds ds'``.

    The factor ``s - s'`` is absorbed into the operands, so ``s PV(s) = 1``
    is used exactly rather than through quadrature.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    X, Y = _as_weighted(T), _as_weighted(Tp)
    return (_product_integral(g, support, _times_s(X), Y, eps, mollifiers=mollifiers)
            - _product_integral(g, support, X, _times_s(Y), eps, mollifiers=mollifiers))


# --------------------------------------------------------------------------
# extrapolation


@dataclass(frozen=True)
class EpsFit:
    """Fit ``v(eps) = limit + c eps^beta`` of an eps ladder."""

    limit: float
    uncertainty: float
    c: float = 0.0
    beta: float = 0.0


def eps_fit(values: Sequence[tuple[float, float]], atol: float = 1e-12) -> EpsFit:
    """Fit ``L + c eps^beta`` to a geometric ladder.

    ``beta`` comes from the decay of successive differences, then ``L`` and
    ``c`` from linear least squares.  The uncertainty is the largest fit
    residual plus the last difference summed over the geometric tail the
    ladder does not reach.  Differences below ``atol`` (plus 1e-12 relative)
    count as converged.
    """
    pts = sorted(((float(e), float(v)) for e, v in values), reverse=True)
    if len(pts) < 4:
        raise ValueError("need at least four ladder points")
    eps = np.array([e for e, _ in pts])
    v = np.array([x for _, x in pts])
    d = np.abs(np.diff(v))
    floor = atol + 1e-12 * np.max(np.abs(v))
    if np.all(d <= floor):
        return EpsFit(float(v[-1]), float(np.max(d)))
    ratio = eps[:-1] / eps[1:]
    if not np.allclose(ratio, ratio[0], rtol=1e-6):
        raise ValueError("the eps ladder must be geometric")
    live = d > floor
    le = np.log(eps[:-1][live])
    beta = np.polyfit(le, np.log(d[live]), 1)[0] if live.sum() >= 2 else 1.0
    if beta <= 0.05:
        raise NoConvergence(f"ladder differences do not shrink (fitted order {beta:.3g})")
    X = np.column_stack([np.ones_like(eps), eps**beta])
    (L, c), *_ = np.linalg.lstsq(X, v, rcond=None)
    resid = np.max(np.abs(v - X @ np.array([L, c])))
    q = ratio[0] ** -beta
    tail = d[-1] * q / (1 - q)
    return EpsFit(float(L), float(resid + tail), float(c), float(beta))


def eps_extrapolate(values: Sequence[tuple[float, float]], atol: float = 1e-12) -> tuple[float, float]:
    """``(limit, uncertainty)`` of an eps ladder; see :func:`eps_fit`."""
    fit = eps_fit(values, atol)
    return fit.limit, fit.uncertainty


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("EULER_GEOM_THREADS", "1")))
    except ValueError:
        return 1


def ladder(func: Callable[[float], float], eps_values: Sequence[float] = DEFAULT_LADDER) -> list[tuple[float, float]]:
    """Evaluate ``func`` on every eps, in parallel when ``EULER_GEOM_THREADS`` > 1."""
    n = _threads()
    if n == 1:
        vals = [func(e) for e in eps_values]
    else:
        with ThreadPoolExecutor(n) as pool:
            vals = list(pool.map(func, eps_values))
    return list(zip(eps_values, vals))


# --------------------------------------------------------------------------
# reduction drive


@dataclass
class _KernelParts:
    state: object
    weight: float
    Dchi: list[Weighted]
    Dsigma: list[Weighted]


def _kernel_parts(state, weight: float, law: GasLaw) -> _KernelParts:
    ke = kernel_expansion(state, law)
    th, lam, u = law.theta, law.lam, state.u
    Dchi = [(t, 1.0, 0.0) for t in ke.D_terms]
    # sigma = (theta s + (1 - theta) u) chi and D(s f) = s D f + (lam + 1) d f
    Dsig = [(t, (1 - th) * u, th) for t in ke.D_terms] + [(t, th * (lam + 1), 0.0) for t in ke.d_terms]
    return _KernelParts(state, weight, Dchi, Dsig)


def reduction_drive(measure, zeta: Callable, eps: float, law: GasLaw,
                    support: Optional[tuple[float, float]] = None) -> tuple[float, tuple[float, float]]:
    """Left side and the two right-side integrals of the reduction identity at one ``eps``.

    ``lhs = int zeta <chi> <D chi_eps D sigma'_eps - D sigma_eps D chi'_eps> dt`` and

    ``I1 = int zeta <chi D sigma'_eps - sigma D chi'_eps> <D chi_eps> dt``,
    ``I2 = int zeta <chi D sigma_eps - sigma D chi_eps> <D chi'_eps> dt``.

    ``measure`` needs ``atoms`` as ``(state, weight)`` pairs; vacuum mass
    contributes nothing.  ``support`` defaults to the hull of the kernel
    supports padded by one.
    """
    atoms = [(s, w) for s, w in measure.atoms if s.rho > 0 and w > 0]
    if not atoms:
        return 0.0, (0.0, 0.0)
    parts = []
    for s, w in atoms:
        try:
            parts.append(_kernel_parts(s, w, law))
        except VacuumState:
            continue
    ends = []
    for P in parts:
        r = P.state.rho**law.theta
        ends.extend((P.state.u - r, P.state.u + r))
    if support is None:
        support = (min(ends) - 1.0, max(ends) + 1.0)

    def mean_chi(t):
        return sum(P.weight * chi(t, P.state, law) for P in parts)

    def zchi(t):
        return zeta(t) * mean_chi(t)

    lhs = 0.0
    for P in parts:
        lhs += P.weight * (_product_integral(zchi, support, P.Dchi, P.Dsigma, eps, ends)
                           - _product_integral(zchi, support, P.Dsigma, P.Dchi, eps, ends))
    I1 = I2 = 0.0
    for P in parts:
        def zc(t, P=P):
            return zeta(t) * chi(t, P.state, law)

        def zs(t, P=P):
            return zeta(t) * sigma(t, P.state, law)

        for Q in parts:
            w = P.weight * Q.weight
            I1 += w * (_product_integral(zc, support, Q.Dchi, P.Dsigma, eps, ends)
                       - _product_integral(zs, support, Q.Dchi, P.Dchi, eps, ends))
            I2 += w * (_product_integral(zc, support, P.Dsigma, Q.Dchi, eps, ends)
                       - _product_integral(zs, support, P.Dchi, Q.Dchi, eps, ends))
    return float(lhs), (float(I1), float(I2))
