"""Fractional derivatives of the kernel profile ``f(s) = (1 - s^2)_+^lambda``.

Transform convention: ``F g(xi) = (2 pi)^(-1/2) int g(s) exp(-i xi s) ds``.
The first-order operator ``d`` has multiplier ``i sign(xi) |xi|^lambda`` (so
``d = d/ds`` at ``lambda = 1``) and ``D`` is defined as ``d/ds`` composed
with ``d``, i.e. multiplier ``-|xi|^(lambda + 1)``.  With this pairing the
product rule ``D(s f) = s D f + (lambda + 1) d f`` holds exactly.

Spectral evaluation subtracts the singular behaviour before transforming.
Functions whose endpoint behaviour ``sum_k c_k t_+^(mu + k)`` is known carry
it as :class:`EndpointExpansion` records; a tempered copy of that expansion
with a closed-form transform is removed before the FFT, and the jump, log
and kink structure it produces in the output is represented by six
two-sided templates (``K0`` and ``exp(-|x|)`` families) whose transforms are
also exact.  What is left is smooth, so the FFT of the padded grid resolves
it to near round-off.
"""
from __future__ import annotations

import enum
import functools
import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .errors import AliasWarning, DomainError, FitDegenerate, PoleError, VacuumState
from .kernels import FluidState, GasLaw
from .special import cosine_integral

__all__ = [
    "EndpointExpansion",
    "SampledFunction",
    "TermKind",
    "SingularTerm",
    "Distribution",
    "SingularExpansion",
    "KernelExpansion",
    "profile_f",
    "frac_d",
    "frac_D",
    "fourier_transform",
    "fourier_profile",
    "g_explicit",
    "g_lp_norm",
    "riesz_route",
    "RIESZ_CONSTANTS",
    "expansion_coefficients",
    "fit_expansion",
    "kernel_expansion",
    "kernel_samples",
    "cosine_integral",
]

N_DEFAULT = 2**16
L_DEFAULT = 8.0
PAD_DEFAULT = 2**21
N_TEMPER = 4  # tempered endpoint terms subtracted before the FFT


# --------------------------------------------------------------------------
# sampled functions


@dataclass(frozen=True)
class EndpointExpansion:
    """``sum_k coeffs[k] * t^(exponent + k)`` for ``t = direction * (s - location) > 0``.

    The function is taken to vanish on the other side of ``location``.
    """

    location: float
    direction: int
    exponent: float
    coeffs: tuple[float, ...]

    def times_s(self) -> "EndpointExpansion":
        # s = location + direction * t
        c = np.asarray(self.coeffs, float)
        out = self.location * c
        out[1:] += self.direction * c[:-1]
        return replace(self, coeffs=tuple(out))

    def scaled(self, k: float) -> "EndpointExpansion":
        return replace(self, coeffs=tuple(k * c for c in self.coeffs))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Cell-centred samples on ``[center - L, center + L]``."""

    values: np.ndarray
    L: float = L_DEFAULT
    center: float = 0.0
    endpoints: tuple[EndpointExpansion, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise DomainError("samples must be a 1-D array with at least two points")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, func: Callable, n: int = N_DEFAULT, L: float = L_DEFAULT, center: float = 0.0):
        s = center - L + (np.arange(n) + 0.5) * (2 * L / n)
        return cls(np.asarray(func(s), float) * np.ones(n), L, center)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def s(self) -> np.ndarray:
        return self.center - self.L + (np.arange(self.n) + 0.5) * self.h

    def __call__(self, x):
        return np.interp(x, self.s, self.values, left=0.0, right=0.0)

    def _check(self, other: "SampledFunction"):
        if other.n != self.n or other.L != self.L or other.center != self.center:
            raise DomainError("sampled functions live on different grids")

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            self._check(other)
            return SampledFunction(self.values + other.values, self.L, self.center, self.endpoints + other.endpoints)
        return NotImplemented

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, k):
        k = float(k)
        return SampledFunction(k * self.values, self.L, self.center, tuple(e.scaled(k) for e in self.endpoints))

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def times_s(self) -> "SampledFunction":
        return SampledFunction(self.values * self.s, self.L, self.center, tuple(e.times_s() for e in self.endpoints))

    def integral(self, phi: Optional[Callable] = None) -> float:
        w = self.values if phi is None else self.values * phi(self.s)
        return float(np.sum(w) * self.h)

    def l2(self) -> float:
        return math.sqrt(self.integral(lambda s: self.values))


def profile_f(law: GasLaw, n: int = N_DEFAULT, L: float = L_DEFAULT) -> SampledFunction:
    """Samples of ``(1 - s^2)_+^lambda`` with its endpoint behaviour attached."""
    lam = law.lam
    proto = SampledFunction(np.zeros(n), L)
    s = proto.s
    vals = np.clip(1.0 - s * s, 0.0, None) ** lam
    # near s = -1: t^lam (2 - t)^lam = sum_k 2^lam binom(lam, k) (-1/2)^k t^(lam + k)
    c = tuple(2.0**lam * special.binom(lam, k) * (-0.5) ** k for k in range(8))
    ends = (EndpointExpansion(-1.0, 1, lam, c), EndpointExpansion(1.0, -1, lam, c))
    return SampledFunction(vals, L, 0.0, ends)


def kernel_samples(state: FluidState, law: GasLaw, n: int = N_DEFAULT, L: float = L_DEFAULT) -> SampledFunction:
    """``chi(.|state)`` on the canonical grid, with its endpoint behaviour attached."""
    if state.rho <= 0.0:
        raise VacuumState("the kernel vanishes identically at vacuum")
    lam = law.lam
    eps = state.rho**law.theta
    base = profile_f(law, n, L)
    s = base.s
    amp = law.c_norm * state.rho ** (2 * law.theta * lam)
    vals = amp * np.clip(1.0 - ((s - state.u) / eps) ** 2, 0.0, None) ** lam
    c = base.endpoints[0].coeffs
    # t is measured in s, so the k-th coefficient picks up eps^-(lam + k)
    c = tuple(amp * ck * eps ** -(lam + k) for k, ck in enumerate(c))
    ends = (EndpointExpansion(state.u - eps, 1, lam, c), EndpointExpansion(state.u + eps, -1, lam, c))
    return SampledFunction(vals, L, 0.0, ends)


# --------------------------------------------------------------------------
# distributions


class TermKind(str, enum.Enum):
    DIRAC = "dirac"
    PV = "pv"
    HEAVISIDE = "heaviside"
    COSINE_INTEGRAL = "cosine_integral"
    REGULAR = "regular"


@dataclass(frozen=True)
class SingularTerm:
    kind: TermKind
    location: float
    coefficient: float
    payload: Optional[SampledFunction] = None

    def __post_init__(self):
        if not math.isfinite(self.coefficient):
            raise DomainError("singular term coefficient must be finite")
        if self.kind is TermKind.REGULAR and self.payload is None:
            raise DomainError("a regular term needs a sampled payload")

    def __call__(self, s):
        """Pointwise value for the function-type kinds (H, CI, regular)."""
        s = np.asarray(s, float)
        x = s - self.location
        if self.kind is TermKind.HEAVISIDE:
            return self.coefficient * (x > 0).astype(float)
        if self.kind is TermKind.COSINE_INTEGRAL:
            return self.coefficient * cosine_integral(x)
        if self.kind is TermKind.REGULAR:
            return self.coefficient * self.payload(s)
        raise DomainError(f"{self.kind.value} has no pointwise values")

    def pair(self, phi: Callable, support: tuple[float, float]) -> float:
        """``<T, phi>`` for a test function supported in ``support``."""
        a, c = self.location, self.coefficient
        lo, hi = support
        if self.kind is TermKind.DIRAC:
            return c * float(phi(a))
        if self.kind is TermKind.PV:
            if not lo < a < hi:
                return c * integrate.quad(lambda s: phi(s) / (s - a), lo, hi, limit=200)[0]
            return c * integrate.quad(phi, lo, hi, weight="cauchy", wvar=a, limit=200)[0]
        if self.kind is TermKind.HEAVISIDE:
            if a >= hi:
                return 0.0
            return c * integrate.quad(phi, max(a, lo), hi, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
        if self.kind is TermKind.COSINE_INTEGRAL:
            pts = [a] if lo < a < hi else None
            return c * integrate.quad(lambda s: cosine_integral(s - a) * phi(s) if s != a else 0.0,
                                      lo, hi, points=pts, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
        return c * self.payload.integral(phi)


@dataclass(frozen=True)
class Distribution:
    """A sampled regular part plus Dirac and principal-value atoms."""

    regular: SampledFunction
    atoms: tuple[SingularTerm, ...] = ()

    def __add__(self, other: "Distribution") -> "Distribution":
        return Distribution(self.regular + other.regular, _merge(self.atoms + other.atoms))

    def __mul__(self, k):
        return Distribution(self.regular * k, tuple(replace(t, coefficient=k * t.coefficient) for t in self.atoms))

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1.0) * other

    def times_s(self) -> "Distribution":
        """Multiply by ``s``: ``s delta_a = a delta_a`` and ``s PV(s - a) = a PV(s - a) + 1``."""
        reg = self.regular.times_s()
        extra = sum(t.coefficient for t in self.atoms if t.kind is TermKind.PV)
        reg = SampledFunction(reg.values + extra, reg.L, reg.center, reg.endpoints)
        atoms = tuple(replace(t, coefficient=t.location * t.coefficient) for t in self.atoms)
        return Distribution(reg, _merge(atoms))

    def pair(self, phi: Callable, support: tuple[float, float]) -> float:
        return self.regular.integral(phi) + sum(t.pair(phi, support) for t in self.atoms)

    def atom(self, kind: TermKind, location: float) -> float:
        return sum(t.coefficient for t in self.atoms if t.kind is kind and abs(t.location - location) < 1e-12)


def _merge(terms: Sequence[SingularTerm]) -> tuple[SingularTerm, ...]:
    acc: dict[tuple[TermKind, float], float] = {}
    for t in terms:
        key = (t.kind, round(t.location, 12))
        acc[key] = acc.get(key, 0.0) + t.coefficient
    return tuple(SingularTerm(k, loc, c) for (k, loc), c in acc.items())


# --------------------------------------------------------------------------
# output templates: (physical, derivative's regular part, transform)
#
# E_nu are even, O_nu odd; their transforms behave like |xi|^(-1-nu).


def _k0(x):
    return special.k0(np.abs(x))


def _k1(x):
    return special.k1(np.abs(x))


def _safe(x):
    return np.where(x == 0.0, 1.0, x)


_TEMPLATES = {
    "E0": (
        lambda x: _k0(x),
        lambda x: -_k1(x) * np.sign(x) + 1.0 / _safe(x),  # minus the PV atom
        lambda w: math.pi / np.sqrt(1 + w * w),
    ),
    "O0": (
        lambda x: np.sign(x) * np.exp(-np.abs(x)),
        lambda x: -np.exp(-np.abs(x)),  # minus the 2 delta atom
        lambda w: -2j * w / (1 + w * w),
    ),
    "E1": (
        lambda x: np.abs(x) * np.exp(-np.abs(x)),
        lambda x: np.sign(x) * (1 - np.abs(x)) * np.exp(-np.abs(x)),
        lambda w: 2 * (1 - w * w) / (1 + w * w) ** 2,
    ),
    "O1": (
        lambda x: x * _k0(x),
        lambda x: _k0(x) - np.abs(x) * _k1(x),
        lambda w: -1j * math.pi * w / (1 + w * w) ** 1.5,
    ),
    "E2": (
        lambda x: x * x * _k0(x),
        lambda x: 2 * x * _k0(x) - x * np.abs(x) * _k1(x),
        lambda w: -math.pi * (2 * w * w - 1) / (1 + w * w) ** 2.5,
    ),
    "O2": (
        lambda x: x * np.abs(x) * np.exp(-np.abs(x)),
        lambda x: (2 * np.abs(x) - x * x) * np.exp(-np.abs(x)),
        lambda w: 1j * (4 * w**3 - 12 * w) / (1 + w * w) ** 3,
    ),
}


def _template_coefficients(beta: Sequence[float], lam: float, direction: int) -> dict[str, float]:
    """Match ``direction * sum_nu beta_nu |w|^(-1-nu) exp(-i pi (lam + nu) sign(w) / 2)``.

    ``w = direction * xi``.  Returned coefficients multiply ``T(direction (x - a))``.
    """
    b = list(beta) + [0.0] * (3 - len(beta))
    cs = [math.cos(math.pi * (lam + v) / 2) for v in range(3)]
    sn = [math.sin(math.pi * (lam + v) / 2) for v in range(3)]
    e0 = direction * b[0] * cs[0] / math.pi
    o0 = direction * b[0] * sn[0] / 2
    e1 = -direction * b[1] * cs[1] / 2
    o1 = direction * b[1] * sn[1] / math.pi
    # the nu = 0 templates carry |w|^-3 corrections of their own
    e2 = -(direction * b[2] * cs[2] + e0 * math.pi / 2) / (2 * math.pi)
    o2 = -(direction * b[2] * sn[2] + 2 * o0) / 4
    return {"E0": e0, "O0": o0, "E1": e1, "O1": o1, "E2": e2, "O2": o2}


# --------------------------------------------------------------------------
# spectral core


def _multiplier(xi: np.ndarray, lam: float, order: int) -> np.ndarray:
    m = 1j * np.sign(xi) * np.abs(xi) ** lam
    return m if order == 0 else 1j * xi * m


def _apply(f: SampledFunction, lam: float, order: int, pad: int = PAD_DEFAULT) -> Distribution:
    n, h = f.n, f.h
    pad = max(pad, 2 * n)
    x0 = f.center - (pad // 2 - 0.5) * h  # first node of the padded grid
    lo = pad // 2 - n // 2
    xp = x0 + np.arange(pad) * h
    xi = 2 * np.pi * np.fft.rfftfreq(pad, h)

    smooth = np.zeros(pad)
    smooth[lo : lo + n] = f.values
    analytic = np.zeros(xi.size, complex)
    coeffs: list[tuple[float, int, dict[str, float]]] = []
    for e in f.endpoints:
        nu0 = e.exponent - lam
        if e.exponent <= -1 or nu0 < -1e-12:
            continue
        c = np.asarray(e.coeffs[:N_TEMPER], float)
        # tempered copy sum_k b_k t^(mu_k) exp(-t) sharing the first N_TEMPER terms
        b = np.array([sum(c[j] / math.factorial(k - j) for j in range(k + 1)) for k in range(c.size)])
        t = e.direction * (xp - e.location)
        pos = t > 0
        tp = t[pos]
        temper = np.zeros(pad)
        temper[pos] = np.exp(-tp) * sum(bk * tp ** (e.exponent + k) for k, bk in enumerate(b))
        smooth -= temper
        w = e.direction * xi
        ft = sum(bk * special.gamma(e.exponent + k + 1) * (1 + 1j * w) ** (-(e.exponent + k + 1)) for k, bk in enumerate(b))
        analytic += np.exp(-1j * xi * e.location) * ft
        # leading transform behaviour beta_nu |w|^(-1-nu); only integer offsets produce templates
        shift = int(round(nu0))
        if abs(nu0 - shift) < 1e-12 and shift <= 2:
            beta = [0.0] * 3
            for k in range(3 - shift):
                if k < c.size:
                    beta[shift + k] = c[k] * special.gamma(e.exponent + k + 1)
            coeffs.append((e.location, e.direction, _template_coefficients(beta, lam, e.direction)))

    mult = _multiplier(xi, lam, 0)
    spectrum = mult * (np.fft.rfft(smooth) * h * np.exp(-1j * xi * x0) + analytic)
    del smooth, analytic
    # energy of the full output spectrum, before the templates are removed
    total = np.sum(np.abs(spectrum) ** 2 * (xi * xi if order == 1 else 1.0))
    for a, direction, cf in coeffs:
        shift = np.exp(-1j * xi * a)
        w = direction * xi
        for name, alpha in cf.items():
            if alpha != 0.0:
                spectrum -= alpha * shift * _TEMPLATES[name][2](w)
    if order == 1:
        spectrum *= 1j * xi
    tail = np.sum(np.abs(spectrum[xi > xi[-1] / 2]) ** 2)
    if total > 0 and tail > 1e-8 * total:
        warnings.warn(f"spectral tail holds {tail / total:.2e} of the energy; output is aliased", AliasWarning)
    out = np.fft.irfft(spectrum * np.exp(1j * xi * x0), pad)[lo : lo + n] / h
    del spectrum

    s = f.s
    out -= _lattice_correction(f, lam, order, 2 * np.pi / (pad * h))
    atoms: list[SingularTerm] = []
    for a, direction, cf in coeffs:
        y = s - a
        for name, alpha in cf.items():
            if alpha == 0.0:
                continue
            phys, dreg, _ = _TEMPLATES[name]
            sgn = direction if name[0] == "O" else 1
            if order == 0:
                out += sgn * alpha * phys(y)
            else:
                out += sgn * alpha * dreg(y)
        if order == 1:
            atoms.append(SingularTerm(TermKind.DIRAC, a, 2.0 * direction * cf["O0"]))
            atoms.append(SingularTerm(TermKind.PV, a, -cf["E0"]))
    return Distribution(SampledFunction(out, f.L, f.center), _merge([t for t in atoms if t.coefficient != 0.0]))


def _lattice_correction(f: SampledFunction, lam: float, order: int, dxi: float, terms: int = 6) -> np.ndarray:
    """Riemann-sum error of the inverse transform caused by the kink of the multiplier at 0.

    Near ``xi = 0`` the output spectrum is ``c |xi|^beta sign(xi)^p P(xi)``
    with ``P`` the Taylor series of the transform of ``f``.  The generalised
    Euler-Maclaurin expansion gives the lattice-sum error as
    ``c sum_j zeta(-beta-j) dxi^(beta+j+1) Q^(j)(0) (1 + (-1)^(p+j)) / j!``
    with ``Q(xi) = P(xi) exp(i xi x)``; this is the image sum of the slowly
    decaying tails under periodisation.
    """
    beta, p, c = (lam, 1, 1j) if order == 0 else (lam + 1, 0, -1.0)
    s = f.s
    moments = [complex(np.sum((-1j * s) ** i * f.values) * f.h) for i in range(terms)]
    err = np.zeros(s.size, complex)
    for j in range(terms):
        if (p + j) % 2:
            continue
        z = special.zeta(-beta - j)
        if z == 0.0:
            continue
        q = sum(special.binom(j, i) * moments[i] * (1j * s) ** (j - i) for i in range(j + 1))
        err += 2 * z * dxi ** (beta + j + 1) / math.factorial(j) * q
    return (c * err).real / (2 * np.pi)


def frac_d(f: SampledFunction, law: GasLaw, pad: int = PAD_DEFAULT) -> SampledFunction:
    """``d f`` on the grid of ``f`` (a function of jump and log type near the endpoints)."""
    return _apply(f, law.lam, 0, pad).regular


def frac_D(f: SampledFunction, law: GasLaw, pad: int = PAD_DEFAULT) -> Distribution:
    """``D f = (d f)'`` with its Dirac and principal-value atoms kept symbolic."""
    return _apply(f, law.lam, 1, pad)


# --------------------------------------------------------------------------
# transforms and the explicit route


def fourier_transform(f: SampledFunction, xi) -> np.ndarray:
    """Discrete (midpoint-rule) transform of the samples at the frequencies ``xi``."""
    xi = np.atleast_1d(np.asarray(xi, float))
    s, v = f.s, f.values
    keep = v != 0.0
    s, v = s[keep], v[keep]
    out = np.empty(xi.size, complex)
    for i in range(0, xi.size, 256):
        blk = xi[i : i + 256]
        out[i : i + 256] = np.exp(-1j * np.outer(blk, s)) @ v
    return out * f.h / math.sqrt(2 * math.pi)


def fourier_profile(xi, law: GasLaw) -> np.ndarray:
    """Closed-form transform ``2^lam Gamma(lam+1) |xi|^(-lam-1/2) J_(lam+1/2)(|xi|)``."""
    lam = law.lam
    z = np.abs(np.asarray(xi, float))
    nu = lam + 0.5
    small = z < 1e-8
    zz = np.where(small, 1.0, z)
    out = 2.0**lam * math.gamma(lam + 1) * zz ** (-nu) * special.jv(nu, zz)
    limit = math.gamma(lam + 1) / (math.sqrt(2.0) * math.gamma(lam + 1.5))
    return np.where(small, limit, out)


def g_explicit(s, law: GasLaw):
    """Explicit inverse sine transform of ``i sign(xi) J_(lam+1/2)(|xi|)``."""
    s = np.asarray(s, float)
    a = np.abs(s)
    if np.any(np.abs(a - 1.0) < 1e-12):
        raise PoleError("g has inverse square-root poles at |s| = 1")
    nu = law.lam + 0.5
    inside = a < 1
    ai = np.where(inside, a, 0.0)
    ao = np.where(inside, 2.0, a)
    g_in = np.sin(nu * np.arcsin(ai)) / np.sqrt(1 - ai * ai)
    root = np.sqrt(ao * ao - 1)
    g_out = math.cos(nu * math.pi / 2) / (root * (ao + root) ** nu)
    out = math.sqrt(2 / math.pi) * np.sign(s) * np.where(inside, g_in, g_out)
    return float(out) if out.ndim == 0 else out


def _cofactor(func, y, a, b, al, be):
    # Clenshaw-Curtis touches the endpoints; step just inside to read the finite limit
    span = 1e-10 * max(1.0, abs(a), abs(b))
    y = min(max(y, a + span), b - span)
    return func(y) / ((y - a) ** al * (b - y) ** be)


def _alg_pieces(func, nodes: Sequence[float], singular: set, far: float = 1.0):
    """Integrate ``func`` over the real line, split at ``nodes``; ``-1/2`` power singularities at ``singular``."""
    total = 0.0
    pts = sorted(nodes)
    for p, q in zip(pts[:-1], pts[1:]):
        if q - p < 1e-14:
            continue
        ap = -0.5 if p in singular else 0.0
        bq = -0.5 if q in singular else 0.0
        wfun = lambda y, p=p, q=q, ap=ap, bq=bq: _cofactor(func, y, p, q, ap, bq)
        total += integrate.quad(wfun, p, q, weight="alg", wvar=(ap, bq), limit=200, epsabs=1e-13, epsrel=1e-11)[0]
    lo, hi = pts[0], pts[-1]
    for a, b, at in ((hi, hi + far, "left"), (lo - far, lo, "right")):
        al = -0.5 if (at == "left" and hi in singular) else 0.0
        be = -0.5 if (at == "right" and lo in singular) else 0.0
        wfun = lambda y, a=a, b=b, al=al, be=be: _cofactor(func, y, a, b, al, be)
        total += integrate.quad(wfun, a, b, weight="alg", wvar=(al, be), limit=200, epsabs=1e-13, epsrel=1e-11)[0]
    total += integrate.quad(func, hi + far, np.inf, limit=200, epsabs=1e-13)[0]
    total += integrate.quad(func, -np.inf, lo - far, limit=200, epsabs=1e-13)[0]
    return total


def riesz_route(s, law: GasLaw) -> np.ndarray:
    """``(|.|^(-1/2) * g)(s)``: the convolution route to ``d f`` up to a constant."""
    s = np.atleast_1d(np.asarray(s, float))
    out = np.empty(s.size)
    with warnings.catch_warnings():
        # g vanishes identically outside [-1, 1] when cos((lam + 1/2) pi / 2) = 0
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for i, x in enumerate(s):
            out[i] = _riesz_point(float(x), law)
    return out


def _riesz_point(x: float, law: GasLaw) -> float:
    nodes = {-1.0, 1.0, x}
    integrand = lambda y: g_explicit(y, law) * abs(x - y) ** -0.5 if abs(abs(y) - 1) > 1e-12 and y != x else 0.0
    return _alg_pieces(integrand, nodes, singular=nodes)


# fitted once by least squares of frac_d(profile_f) against riesz_route at
# 244 grid points in |s| <= 3 (0.05 away from |s| = 1); they agree with
# -2^lam Gamma(lam+1)/sqrt(2 pi) to about 1e-6
RIESZ_CONSTANTS = {
    0.5: -0.50000054,
    1.0: -0.79788503,
    1.5: -1.50000000,
    2.0: -3.19153716,
}


def g_lp_norm(law: GasLaw, p: float) -> float:
    """``||g||_p`` by quadrature; finite for ``1 <= p < 2``."""
    if not 1.0 <= p < 2.0:
        raise DomainError("g is in L^p only for 1 <= p < 2")
    f = lambda y: abs(g_explicit(y, law)) ** p if abs(abs(y) - 1) > 1e-12 and y != 0 else 0.0
    # |g|^p ~ |1 - |y||^(-p/2) at the poles
    half = 0.0
    for a, b, wv in ((0.0, 1.0, (0.0, -p / 2)), (1.0, 2.0, (-p / 2, 0.0))):
        wf = lambda y, a=a, b=b, wv=wv: _cofactor(f, y, a, b, *wv)
        half += integrate.quad(wf, a, b, weight="alg", wvar=wv, limit=200)[0]
    half += integrate.quad(f, 2.0, np.inf, limit=200)[0]
    return (2 * half) ** (1 / p)


# --------------------------------------------------------------------------
# singular expansion


@dataclass
class SingularExpansion:
    """Coefficients of the jump (a1), Cosine-integral (a2) parts of ``d f`` and
    the Heaviside (a3) and Cosine-integral (a4) parts of ``D f``.

    ``remainder`` is ``d f`` minus ``a1 (H(s+1) + H(s-1)) + a2 (CI(s+1) - CI(s-1))``
    and ``remainder_D`` the regular part of ``D f`` minus the a3/a4 terms.
    """

    a1: float
    a2: float
    a3: float
    a4: float
    remainder: SampledFunction
    stderr: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    hoelder_half: float = 0.0
    remainder_D: Optional[SampledFunction] = None

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return self.a1, self.a2, self.a3, self.a4


def expansion_coefficients(lam: float) -> tuple[float, float, float, float]:
    """Closed-form ``(a1, a2, a3, a4)`` from the endpoint behaviour ``2^lam t^lam (1 - lam t / 2 + ...)``.

    The homogeneous distribution ``t_+^mu`` is mapped by ``d`` to
    ``Gamma(mu+1) [sin(pi mu/2) H(t) - cos(pi mu/2) log|t| / pi]`` plus
    smoother terms, and ``D`` acts likewise on ``t_+^(mu+1)``.
    """
    g1 = 2.0**lam * math.gamma(lam + 1)
    g3 = -(2.0 ** (lam - 1)) * lam * math.gamma(lam + 2)
    sn, cs = math.sin(math.pi * lam / 2), math.cos(math.pi * lam / 2)
    return g1 * sn, -g1 * cs / math.pi, g3 * sn, -g3 * cs / math.pi


_FIT_POINTS = 16


def _local_fit(sf: SampledFunction, a: float):
    """Least-squares fit near ``a`` of jump, log and kink structure plus a quadratic."""
    s, h = sf.s, sf.h
    i = int(np.searchsorted(s, a))
    idx = np.arange(i - _FIT_POINTS, i + _FIT_POINTS)
    tau = (s[idx] - a) / h
    H = (tau > 0).astype(float)
    lg = np.log(np.abs(tau))
    X = np.column_stack([np.ones_like(tau), H, lg, tau, tau * H, tau * lg, tau**2, tau**2 * H, tau**2 * lg])
    y = sf.values[idx]
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = max(len(y) - X.shape[1], 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.pinv(X.T @ X)
    err = np.sqrt(np.maximum(np.diag(cov), 0.0))
    # jump, log, t H(t) and t log|t| coefficients in unscaled t
    vals = np.array([coef[1], coef[2], coef[4] / h, coef[5] / h])
    errs = np.array([err[1], err[2], err[4] / h, err[5] / h])
    return vals, errs


def _hoelder_half(sf: SampledFunction) -> float:
    v, h = sf.values, sf.h
    q = 0.0
    for k in range(0, 11):
        step = 2**k
        if step >= v.size:
            break
        q = max(q, float(np.max(np.abs(v[step:] - v[:-step]))) / math.sqrt(step * h))
    return q


def fit_expansion(df: SampledFunction, law: GasLaw, Df: Optional[Distribution] = None) -> SingularExpansion:
    """Estimate ``a1..a4`` from the samples of ``d f`` near ``s = -1`` and ``s = +1``.

    ``d f`` is odd for the even profile, so the jump and ``t log|t|`` parts
    agree at the two endpoints while the log and kink parts flip sign; the
    two local fits are averaged accordingly.
    """
    left, el = _local_fit(df, -1.0)
    right, er = _local_fit(df, 1.0)
    sgn = np.array([1.0, -1.0, -1.0, 1.0])
    est = 0.5 * (left + sgn * right)
    err = 0.5 * np.hypot(el, er)
    if err[0] > abs(est[0]) and err[0] > 1e-6:
        raise FitDegenerate(f"jump estimate {est[0]:.3g} is below its standard error {err[0]:.3g}")
    a1, a2, a3, a4 = (float(v) for v in est)
    s = df.s
    sing = a1 * ((s > -1).astype(float) + (s > 1)) + a2 * (cosine_integral(s + 1) - cosine_integral(s - 1))
    rem = SampledFunction(df.values - sing, df.L, df.center)
    rem_D = None
    if Df is not None:
        reg = Df.regular
        sing_D = a3 * ((s > -1).astype(float) - (s > 1)) + a4 * (cosine_integral(s + 1) + cosine_integral(s - 1))
        rem_D = SampledFunction(reg.values - sing_D, reg.L, reg.center)
    return SingularExpansion(a1, a2, a3, a4, rem, tuple(float(e) for e in err), _hoelder_half(rem), rem_D)


@functools.lru_cache(maxsize=8)
def _profile_expansion(gamma: float) -> SingularExpansion:
    law = GasLaw(gamma)
    f = profile_f(law)
    return fit_expansion(frac_d(f, law), law, frac_D(f, law))


# --------------------------------------------------------------------------
# kernel expansion


@dataclass
class KernelExpansion:
    """Singular terms of ``d chi`` and ``D chi`` in ``s`` for one state.

    Both lists end with a ``REGULAR`` term whose payload is sampled on the
    stretched grid ``u + rho^theta * sigma``.
    """

    state: FluidState
    zunder: float
    zbar: float
    d_terms: list[SingularTerm]
    D_terms: list[SingularTerm]

    def weight(self, kind: TermKind, location: float, which: str = "D") -> float:
        terms = self.D_terms if which == "D" else self.d_terms
        return sum(t.coefficient for t in terms if t.kind is kind and abs(t.location - location) < 1e-12)


def kernel_expansion(state: FluidState, law: GasLaw, expansion: Optional[SingularExpansion] = None) -> KernelExpansion:
    """Expand ``d chi(.|state)`` and ``D chi(.|state)`` via the profile expansion.

    ``chi = c_norm rho^(2 theta lam) f((s - u) / rho^theta)``; stretching by
    ``eps = rho^theta`` scales ``d`` by ``eps^-lam`` and ``D`` by
    ``eps^(-lam-1)``, while the Cosine-integral atoms pick up ``-log eps``.
    Next to the atoms the regular part of ``D chi`` therefore equals
    ``rho^(theta (lam - 1)) (q - 2 theta a4 log rho)``.
    """
    if state.rho <= 0.0:
        raise VacuumState("the kernel vanishes identically at vacuum")
    ex = expansion if expansion is not None else _profile_expansion(law.gamma)
    lam, th = law.lam, law.theta
    eps = state.rho**th
    u = state.u
    zu, zb = u - eps, u + eps
    w1 = law.c_norm * state.rho ** (th * lam)
    w0 = law.c_norm * state.rho ** (th * (lam - 1))
    T = TermKind
    r = ex.remainder
    sig = r.s
    ci = cosine_integral
    # CI((s - z)/eps) and CI(s - z) differ by a continuous function (equal to
    # -log eps at the atom); it goes into the regular part so the terms add up
    # to d chi exactly
    shift_d = ex.a2 * (ci(sig + 1) - ci(sig - 1) - ci(eps * (sig + 1)) + ci(eps * (sig - 1)))
    r_pay = SampledFunction(w1 * (r.values + shift_d), eps * r.L, u)
    d_terms = [
        SingularTerm(T.HEAVISIDE, zu, w1 * ex.a1),
        SingularTerm(T.HEAVISIDE, zb, w1 * ex.a1),
        SingularTerm(T.COSINE_INTEGRAL, zu, w1 * ex.a2),
        SingularTerm(T.COSINE_INTEGRAL, zb, -w1 * ex.a2),
        SingularTerm(T.REGULAR, u, 1.0, r_pay),
    ]
    q = ex.remainder_D if ex.remainder_D is not None else SampledFunction(np.zeros(r.n), r.L)
    shift_D = ex.a4 * (ci(sig + 1) + ci(sig - 1) - ci(eps * (sig + 1)) - ci(eps * (sig - 1)))
    q_pay = SampledFunction(w0 * (q.values + shift_D), eps * q.L, u)
    D_terms = [
        SingularTerm(T.DIRAC, zu, w1 * ex.a1),
        SingularTerm(T.DIRAC, zb, w1 * ex.a1),
        SingularTerm(T.PV, zu, w1 * ex.a2),
        SingularTerm(T.PV, zb, -w1 * ex.a2),
        SingularTerm(T.HEAVISIDE, zu, w0 * ex.a3),
        SingularTerm(T.HEAVISIDE, zb, -w0 * ex.a3),
        SingularTerm(T.COSINE_INTEGRAL, zu, w0 * ex.a4),
        SingularTerm(T.COSINE_INTEGRAL, zb, w0 * ex.a4),
        SingularTerm(T.REGULAR, u, 1.0, q_pay),
    ]
    return KernelExpansion(state, zu, zb, d_terms, D_terms)
