"""Entropy kernels, entropy pairs and Riemann invariants for a polytropic gas.

The kernels are normalised so that their ``(1, s, s**2/2)`` moments reproduce
the conserved densities and fluxes of the isentropic Euler system exactly::

    chi(s | rho, u)   = c_norm * (rho**(2*theta) - (s - u)**2)_+ ** lam
    sigma(s | rho, u) = (theta*s + (1 - theta)*u) * chi(s | rho, u)

with ``c_norm = 1 / int_{-1}^{1} (1 - t**2)**lam dt``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import DomainError, InvalidOrdering, QuadratureFailure


@dataclass(frozen=True)
class GasLaw:
    """Polytropic pressure law ``P = kappa * rho**gamma``."""

    gamma: float

    def __post_init__(self):
        if not (1.0 < self.gamma < 3.0):
            raise DomainError(f"gamma must lie in (1, 3), got {self.gamma}")

    @property
    def theta(self) -> float:
        return 0.5 * (self.gamma - 1.0)

    @property
    def lam(self) -> float:
        return (3.0 - self.gamma) / (2.0 * (self.gamma - 1.0))

    @property
    def kappa(self) -> float:
        return self.theta**2 / self.gamma

    @cached_property
    def c_norm(self) -> float:
        # 1 / B(1/2, lam + 1)
        lam = self.lam
        return math.exp(special.gammaln(lam + 1.5) - special.gammaln(lam + 1.0)) / math.sqrt(math.pi)

    def pressure(self, rho):
        return self.kappa * np.power(rho, self.gamma)

    def internal_energy(self, rho):
        return self.kappa / (self.gamma - 1.0) * np.power(rho, self.gamma)

    def sound_speed(self, rho):
        """``theta * rho**theta``, which equals ``sqrt(P'(rho))``."""
        return self.theta * np.power(rho, self.theta)


@dataclass(frozen=True, eq=False)
class FluidState:
    """Density/velocity pair.  All vacuum states compare (and hash) equal.

    The velocity of a vacuum state is kept as given, so Riemann invariants of
    ``(0, u)`` land on the diagonal point ``(u, u)``, but it carries no
    physical meaning and every kernel ignores it.
    """

    rho: float
    u: float = 0.0

    def __post_init__(self):
        if not self.rho >= 0.0:
            raise DomainError(f"density must be non-negative, got {self.rho}")

    def _key(self):
        return (0.0, 0.0) if self.rho == 0.0 else (self.rho, self.u)

    def __eq__(self, other):
        if not isinstance(other, FluidState):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def is_vacuum(self) -> bool:
        return self.rho == 0.0


@dataclass(frozen=True)
class RiemannPair:
    zbar: float
    zunder: float

    def __post_init__(self):
        if self.zbar < self.zunder:
            raise InvalidOrdering(f"zbar={self.zbar} < zunder={self.zunder}")


# --------------------------------------------------------------------------
# pointwise kernels


def chi(s, state: FluidState, law: GasLaw):
    """Entropy kernel; vectorised over ``s``."""
    s = np.asarray(s, dtype=float)
    if state.rho == 0.0:
        return np.zeros_like(s)
    w = state.rho**law.theta
    x = (s - state.u) / w
    base = np.clip(1.0 - x * x, 0.0, None)
    return law.c_norm * state.rho ** (2 * law.theta * law.lam) * base**law.lam


def sigma(s, state: FluidState, law: GasLaw):
    s = np.asarray(s, dtype=float)
    return (law.theta * s + (1.0 - law.theta) * state.u) * chi(s, state, law)


def chi_grid(s, rho, u, law: GasLaw):
    """``chi`` broadcast over arrays of states (vacuum where ``rho == 0``)."""
    s, rho, u = np.broadcast_arrays(np.asarray(s, float), np.asarray(rho, float), np.asarray(u, float))
    out = np.zeros(s.shape)
    live = rho > 0
    w = rho[live] ** law.theta
    x = (s[live] - u[live]) / w
    out[live] = law.c_norm * w ** (2 * law.lam) * np.clip(1.0 - x * x, 0.0, None) ** law.lam
    return out


def to_riemann(state: FluidState, law: GasLaw) -> RiemannPair:
    w = state.rho**law.theta
    return RiemannPair(state.u + w, state.u - w)


def from_riemann(z: RiemannPair, law: GasLaw) -> FluidState:
    if z.zbar < z.zunder:
        raise InvalidOrdering(f"zbar={z.zbar} < zunder={z.zunder}")
    half = 0.5 * (z.zbar - z.zunder)
    rho = half ** (1.0 / law.theta) if half > 0 else 0.0
    return FluidState(rho, 0.5 * (z.zbar + z.zunder))


def weight_W(z: RiemannPair, law: GasLaw) -> float:
    rho = from_riemann(z, law).rho
    return 1.0 + rho ** (law.gamma + 1.0)


def moment_matrix(state: FluidState, law: GasLaw) -> np.ndarray:
    """Analytic ``(1, s, s^2/2) x (chi, sigma)`` moments, shape (3, 2)."""
    rho, u = state.rho, state.u
    P = float(law.pressure(rho))
    U = float(law.internal_energy(rho))
    Q = U + P
    return np.array(
        [
            [rho, rho * u],
            [rho * u, rho * u * u + P],
            [0.5 * rho * u * u + U, (0.5 * rho * u * u + Q) * u],
        ]
    )


# --------------------------------------------------------------------------
# weight functions


class WeightKind(str, enum.Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    TRUNCATED_QUADRATIC = "truncated_quadratic"
    SMOOTH_COMPACT = "smooth_compact"
    S_ABS_S = "s_abs_s"


_GROWTH = {
    WeightKind.CONSTANT: "subquadratic",
    WeightKind.LINEAR: "subquadratic",
    WeightKind.QUADRATIC: "quadratic",
    WeightKind.TRUNCATED_QUADRATIC: "quadratic",
    WeightKind.SMOOTH_COMPACT: "subquadratic",
    WeightKind.S_ABS_S: "quadratic",
}


@dataclass(frozen=True)
class EntropyWeight:
    """Weight ``psi`` generating the pair ``(eta_psi, q_psi)``.

    Parameters per kind:

    * constant: ``c`` -- ``psi = c``
    * linear: ``a, b`` -- ``psi = a + b s``
    * quadratic: ``a, b, c`` -- ``psi = a + b s + c s^2 / 2``
    * truncated_quadratic: ``R`` -- ``psi = 2 (s^2 - R^2) 1{|s| >= R}``
    * smooth_compact: ``lo, hi`` -- C^2 bump ``((s-lo)(hi-s))^3_+`` scaled to peak 1
    * s_abs_s: none -- ``psi = s|s|``
    """

    kind: WeightKind
    params: tuple[tuple[str, float], ...] = field(default=())

    @classmethod
    def constant(cls, c: float = 1.0):
        return cls(WeightKind.CONSTANT, (("c", c),))

    @classmethod
    def linear(cls, a: float = 0.0, b: float = 1.0):
        return cls(WeightKind.LINEAR, (("a", a), ("b", b)))

    @classmethod
    def quadratic(cls, a: float = 0.0, b: float = 0.0, c: float = 1.0):
        return cls(WeightKind.QUADRATIC, (("a", a), ("b", b), ("c", c)))

    @classmethod
    def energy(cls):
        """``psi(s) = s^2 / 2``; its entropy is the physical energy."""
        return cls.quadratic(0.0, 0.0, 1.0)

    @classmethod
    def truncated_quadratic(cls, R: float):
        if R < 0:
            raise DomainError("R must be non-negative")
        return cls(WeightKind.TRUNCATED_QUADRATIC, (("R", R),))

    @classmethod
    def smooth_compact(cls, lo: float, hi: float):
        if not hi > lo:
            raise DomainError("need hi > lo")
        return cls(WeightKind.SMOOTH_COMPACT, (("lo", lo), ("hi", hi)))

    @classmethod
    def s_abs_s(cls):
        return cls(WeightKind.S_ABS_S)

    @property
    def p(self) -> dict[str, float]:
        return dict(self.params)

    @property
    def growth(self) -> str:
        return _GROWTH[self.kind]

    @property
    def convex(self) -> bool:
        if self.kind in (WeightKind.S_ABS_S, WeightKind.SMOOTH_COMPACT):
            return False
        if self.kind is WeightKind.QUADRATIC:
            return self.p["c"] >= 0
        return True

    @property
    def is_polynomial(self) -> bool:
        return self.kind in (WeightKind.CONSTANT, WeightKind.LINEAR, WeightKind.QUADRATIC)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Points where ``psi`` fails to be smooth."""
        p = self.p
        if self.kind is WeightKind.TRUNCATED_QUADRATIC:
            return (-p["R"], p["R"])
        if self.kind is WeightKind.SMOOTH_COMPACT:
            return (p["lo"], p["hi"])
        if self.kind is WeightKind.S_ABS_S:
            return (0.0,)
        return ()

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        p = self.p
        k = self.kind
        if k is WeightKind.CONSTANT:
            return np.full_like(s, p["c"])
        if k is WeightKind.LINEAR:
            return p["a"] + p["b"] * s
        if k is WeightKind.QUADRATIC:
            return p["a"] + p["b"] * s + 0.5 * p["c"] * s * s
        if k is WeightKind.TRUNCATED_QUADRATIC:
            R = p["R"]
            return np.where(np.abs(s) >= R, 2.0 * (s * s - R * R), 0.0)
        if k is WeightKind.SMOOTH_COMPACT:
            lo, hi = p["lo"], p["hi"]
            peak = (0.5 * (hi - lo)) ** 6
            return np.clip((s - lo) * (hi - s), 0.0, None) ** 3 / peak
        return s * np.abs(s)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        p = self.p
        k = self.kind
        if k is WeightKind.CONSTANT:
            return np.zeros_like(s)
        if k is WeightKind.LINEAR:
            return np.full_like(s, p["b"])
        if k is WeightKind.QUADRATIC:
            return p["b"] + p["c"] * s
        if k is WeightKind.TRUNCATED_QUADRATIC:
            return np.where(np.abs(s) >= p["R"], 4.0 * s, 0.0)
        if k is WeightKind.SMOOTH_COMPACT:
            lo, hi = p["lo"], p["hi"]
            peak = (0.5 * (hi - lo)) ** 6
            base = np.clip((s - lo) * (hi - s), 0.0, None)
            return 3.0 * base**2 * (lo + hi - 2.0 * s) / peak
        return 2.0 * np.abs(s)


# --------------------------------------------------------------------------
# quadrature over the kernel support


@lru_cache(maxsize=64)
def _jacobi_rule(n: int, alpha: float, beta: float):
    """Nodes/weights on [-1, 1] for weight (1-t)^alpha (1+t)^beta."""
    if alpha == 0.0 and beta == 0.0:
        return np.polynomial.legendre.leggauss(n)
    return special.roots_jacobi(n, alpha, beta)


def _piece_integral(fun, a: float, b: float, alpha: float, beta: float, n: int) -> float:
    """``int_a^b fun(t) (b-t)^alpha (t-a)^beta dt`` by a mapped Gauss-Jacobi rule."""
    x, w = _jacobi_rule(n, alpha, beta)
    half = 0.5 * (b - a)
    t = a + half * (x + 1.0)
    return float(half ** (1.0 + alpha + beta) * np.dot(w, fun(t)))


def kernel_integral(
    func: Callable[[np.ndarray], np.ndarray],
    state: FluidState,
    law: GasLaw,
    breakpoints: tuple[float, ...] = (),
    rtol: float = 1e-10,
    atol: float = 1e-13,
    n: int = 48,
) -> float:
    """``int func(s) chi(s | state) ds`` over the kernel support.

    Uses the scaled form ``rho * c_norm * int_{-1}^{1} func(u + t rho^theta) (1-t^2)^lam dt``
    so the vacuum limit stays well conditioned.  The ``t`` interval is split at
    ``breakpoints`` (where ``func`` is not smooth); the end pieces carry the
    Jacobi endpoint weight.  The rule is doubled until two successive
    estimates agree, then QUADPACK's algebraic-weight rule is the fallback.
    """
    if state.rho == 0.0:
        return 0.0
    lam = law.lam
    w = state.rho**law.theta
    cuts = sorted({(b - state.u) / w for b in breakpoints if -1.0 < (b - state.u) / w < 1.0})
    edges = [-1.0, *cuts, 1.0]

    def g(t):
        return func(state.u + w * t)

    def estimate(m: int) -> float:
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            alpha = lam if b == 1.0 else 0.0
            beta = lam if a == -1.0 else 0.0

            def smooth(t, a=a, b=b):
                # the Jacobi weight absorbs the singular factors at -1 and 1 only
                out = g(t)
                if b != 1.0:
                    out = out * (1.0 - t) ** lam
                if a != -1.0:
                    out = out * (1.0 + t) ** lam
                return out

            # the mapped rule carries (b-t)^alpha (t-a)^beta, i.e. exactly
            # (1-t)^lam or (1+t)^lam on an end piece
            total += _piece_integral(smooth, a, b, alpha, beta, m)
        return total

    prev = estimate(n)
    for m in (2 * n, 4 * n):
        cur = estimate(m)
        if abs(cur - prev) <= max(rtol * abs(cur), atol):
            return state.rho * law.c_norm * cur
        prev = cur

    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        alpha = lam if b == 1.0 else 0.0
        beta = lam if a == -1.0 else 0.0

        def smooth(t, a=a, b=b):
            out = float(g(np.array([t]))[0])
            if b != 1.0:
                out *= (1.0 - t) ** lam
            if a != -1.0:
                out *= (1.0 + t) ** lam
            return out

        val, e = integrate.quad(smooth, a, b, weight="alg", wvar=(beta, alpha), epsabs=atol, epsrel=rtol, limit=200)
        total += val
        err += e
    if err > max(rtol * abs(total), atol) * 10:
        raise QuadratureFailure(f"kernel quadrature did not converge (error estimate {err:.2e})")
    return state.rho * law.c_norm * total


def entropy_pair(psi: EntropyWeight, state: FluidState, law: GasLaw) -> tuple[float, float]:
    """``(eta_psi, q_psi)`` for the weight ``psi``."""
    if state.rho == 0.0:
        return 0.0, 0.0
    if psi.is_polynomial:
        m = moment_matrix(state, law)
        p = psi.p
        if psi.kind is WeightKind.CONSTANT:
            coef = (p["c"], 0.0, 0.0)
        elif psi.kind is WeightKind.LINEAR:
            coef = (p["a"], p["b"], 0.0)
        else:
            coef = (p["a"], p["b"], p["c"])
        row = coef[0] * m[0] + coef[1] * m[1] + coef[2] * m[2]
        return float(row[0]), float(row[1])
    bp = psi.breakpoints
    eta = kernel_integral(psi, state, law, bp)
    # sigma = (theta s + (1-theta) u) chi
    q = kernel_integral(lambda s: psi(s) * (law.theta * s + (1.0 - law.theta) * state.u), state, law, bp)
    return eta, q


def rho_u_eta_rho(psi: EntropyWeight, state: FluidState, law: GasLaw) -> float:
    """``rho u d(eta_psi)/d(rho)`` via ``u int psi chi + theta u int psi'(s)(s-u) chi``."""
    if state.rho == 0.0 or state.u == 0.0:
        return 0.0
    bp = psi.breakpoints
    a = kernel_integral(psi, state, law, bp)
    b = kernel_integral(lambda s: psi.derivative(s) * (s - state.u), state, law, bp)
    return state.u * (a + law.theta * b)


def quadrature_moments(state: FluidState, law: GasLaw) -> np.ndarray:
    """``(1, s, s^2/2) x (chi, sigma)`` moments by quadrature; compare with ``moment_matrix``."""
    out = np.zeros((3, 2))
    if state.rho == 0.0:
        return out
    th, u = law.theta, state.u
    weights = (lambda s: np.ones_like(s), lambda s: s, lambda s: 0.5 * s * s)
    for i, w in enumerate(weights):
        out[i, 0] = kernel_integral(w, state, law)
        out[i, 1] = kernel_integral(lambda s, w=w: w(s) * (th * s + (1.0 - th) * u), state, law)
    return out


def kernel_integral_field(func, rho, u, law: GasLaw, breakpoints: tuple[float, ...] = (), n: int = 40) -> np.ndarray:
    """Vectorised ``int func(s) chi(s | rho_i, u_i) ds`` over arrays of states.

    Each kernel support is split at the ``breakpoints`` (mapped to the scaled
    variable); end pieces use the Jacobi rule for their endpoint factor and
    the remaining factor of ``(1 - t^2)^lam`` is evaluated explicitly.  With
    ``func`` piecewise polynomial and ``lam`` integer the rule is exact.
    """
    rho = np.atleast_1d(np.asarray(rho, float))
    u = np.broadcast_to(np.asarray(u, float), rho.shape)
    lam = law.lam
    w = np.power(rho, law.theta)
    live = rho > 0
    out = np.zeros(rho.shape)
    if not np.any(live):
        return out
    rl, ul, wl = rho[live], u[live], w[live]
    cuts = [np.clip((b - ul) / wl, -1.0, 1.0) for b in sorted(breakpoints)]
    edges = [np.full(rl.shape, -1.0), *cuts, np.full(rl.shape, 1.0)]
    leg_x, leg_w = _jacobi_rule(n, 0.0, 0.0)
    total = np.zeros(rl.shape)
    last = len(edges) - 2
    for k in range(last + 1):
        a, b = edges[k], edges[k + 1]
        half = 0.5 * (b - a)
        if last == 0:
            x, wt = _jacobi_rule(n, lam, lam)
            t = a[:, None] + half[:, None] * (x[None, :] + 1.0)
            vals = func(ul[:, None] + wl[:, None] * t)
            total += half ** (1.0 + 2 * lam) * (vals @ wt)
            continue
        if k == 0:
            x, wt = _jacobi_rule(n, 0.0, lam)
            t = a[:, None] + half[:, None] * (x[None, :] + 1.0)
            extra = (1.0 - t) ** lam
            scale = half ** (1.0 + lam)
        elif k == last:
            x, wt = _jacobi_rule(n, lam, 0.0)
            t = a[:, None] + half[:, None] * (x[None, :] + 1.0)
            extra = (1.0 + t) ** lam
            scale = half ** (1.0 + lam)
        else:
            x, wt = leg_x, leg_w
            t = a[:, None] + half[:, None] * (x[None, :] + 1.0)
            extra = np.clip(1.0 - t * t, 0.0, None) ** lam
            scale = half
        vals = func(ul[:, None] + wl[:, None] * t) * extra
        total += scale * (vals @ wt)
    out[live] = rl * law.c_norm * total
    return out


def entropy_pair_field(psi: EntropyWeight, rho, u, law: GasLaw) -> tuple[np.ndarray, np.ndarray]:
    """``(eta_psi, q_psi)`` over arrays of states."""
    rho = np.atleast_1d(np.asarray(rho, float))
    u = np.broadcast_to(np.asarray(u, float), rho.shape)
    bp = psi.breakpoints
    th = law.theta
    eta = kernel_integral_field(psi, rho, u, law, bp)
    ub = u
    q = kernel_integral_field(lambda s: psi(s) * th * s, rho, u, law, bp) + (1.0 - th) * ub * eta
    return eta, q


def rho_u_eta_rho_field(psi: EntropyWeight, rho, u, law: GasLaw) -> np.ndarray:
    rho = np.atleast_1d(np.asarray(rho, float))
    u = np.broadcast_to(np.asarray(u, float), rho.shape)
    bp = psi.breakpoints
    a = kernel_integral_field(psi, rho, u, law, bp)
    # int psi'(s) (s - u) chi = int psi'(s) s chi - u int psi' chi
    b = kernel_integral_field(lambda s: psi.derivative(s) * s, rho, u, law, bp)
    c = kernel_integral_field(psi.derivative, rho, u, law, bp)
    return u * (a + law.theta * (b - u * c))
