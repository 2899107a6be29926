"""Acceptance batteries: numbered end-to-end checks with explicit bounds.

Each battery returns a list of :class:`Check` rows.  ``SUITES`` groups them by
module for ``euler-geom verify``; ``CRITERIA`` lists them in order for the
acceptance test suite.
"""
from __future__ import annotations

import csv
import functools
import io
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import diagnostics as dg
from .fraccalc import fit_expansion, fourier_profile, fourier_transform, frac_D, frac_d, profile_f
from .kernels import EntropyWeight, FluidState, GasLaw, moment_matrix, quadrature_moments
from .singular import CANONICAL, SingularTerm, TermKind, eps_fit, ladder, phi_eps_pairing, weighted_pairing
from .solver import Grid, cell_state, inflow_spherical, rest, run, sod, step
from .youngmeasure import (
    DiscreteYoungMeasure,
    Verdict,
    dirac_baseline,
    reduction_check,
    residual_sup,
    support_interval,
)

__all__ = ["Check", "CRITERIA", "SUITES", "run_suite", "table"]


@dataclass(frozen=True)
class Check:
    check: str
    anchor: str
    value: float
    bound: float
    passed: bool


def _le(name, anchor, value, bound):
    value = float(value)
    return Check(name, anchor, value, float(bound), bool(value <= bound))


def _ge(name, anchor, value, bound):
    value = float(value)
    return Check(name, anchor, value, float(bound), bool(value >= bound))


def _spread(values) -> float:
    v = np.asarray(values, float)
    return float((v.max() - v.min()) / np.max(np.abs(v)))


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


# --------------------------------------------------------------------------
# kernels


def kernel_moments(seed: int = 0) -> list[Check]:
    """Quadrature moments of chi against the closed-form moment matrix."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    with _Timer() as t:
        for _ in range(200):
            law = GasLaw(rng.uniform(1.05, 3.0))
            state = FluidState(rng.uniform(0.01, 10.0), rng.uniform(-10.0, 10.0))
            exact = moment_matrix(state, law)
            quad = quadrature_moments(state, law)
            # relative per entry; entries that vanish are compared to the matrix scale
            den = np.where(exact != 0, np.abs(exact), np.max(np.abs(exact)))
            worst = max(worst, float(np.max(np.abs(quad - exact) / den)))
    return [
        _le("moment matrix, 200 random states", "kinetic moments of chi", worst, 1e-8),
        _le("moment battery runtime [s]", "kinetic moments of chi", t.elapsed, 5.0),
    ]


# --------------------------------------------------------------------------
# fractional calculus


def fraccalc_closed_form(seed: int = 0) -> list[Check]:
    """At lambda = 1 the half-derivative of the profile is -2 s on (-1, 1)."""
    with _Timer() as t:
        law = GasLaw(5 / 3)
        f = profile_f(law)
        df = frac_d(f, law)
        ex = fit_expansion(df, law, frac_D(f, law))
    s = df.s
    l2 = math.sqrt(np.sum((df.values - (-2 * s * (np.abs(s) < 1))) ** 2) * df.h)
    anchor = "expansion of d f near s = +-1"
    return [
        _le("d f = -2 s 1_{|s|<1}, L2 error", "d f at lambda = 1", l2, 1e-6),
        _le("|a1 - 2|", anchor, abs(ex.a1 - 2.0), 1e-3),
        _le("|a2|", anchor, abs(ex.a2), 1e-3),
        _le("|a3 + 2|", anchor, abs(ex.a3 + 2.0), 1e-2),
        _le("fraccalc runtime [s]", anchor, t.elapsed, 10.0),
    ]


def fourier_identity(seed: int = 0) -> list[Check]:
    """Spectral transform of (1 - s^2)^lambda_+ against the Bessel closed form."""
    xi = np.linspace(-64, 64, 1201)
    out = []
    for lam, gamma in ((0.5, 2.0), (1.0, 5 / 3), (1.5, 1.5), (2.0, 1.4)):
        law = GasLaw(gamma)
        err = np.max(np.abs(fourier_transform(profile_f(law), xi) - fourier_profile(xi, law)))
        out.append(_le(f"Fourier transform, lambda = {lam:g}", "Bessel form of the profile transform", err, 1e-6))
    return out


# --------------------------------------------------------------------------
# singular limits


def _bump(t):
    t = np.asarray(t, float)
    return np.where(np.abs(t) < 2, np.exp(1 - 1 / (1 - (t / 2.0) ** 2).clip(1e-300)), 0.0)


def _skew(t):
    # g(0) = 1 but g is not even, so no pairing vanishes by symmetry alone
    return _bump(t) * (1 + 0.4 * np.asarray(t, float))


def singular_limits(seed: int = 0) -> list[Check]:
    K = TermKind
    sup = (-2.0, 2.0)

    def fit(fn, T, Tp):
        return eps_fit(ladder(lambda e: fn(T, Tp, _skew, e, sup)))

    def term(kind):
        return SingularTerm(kind, 0.0, 1.0)

    def regular():
        return SingularTerm(K.REGULAR, 0.0, 1.0, _regular_payload())

    out = []
    anchor = "limit table for mollified products"
    with _Timer() as t:
        f = fit(phi_eps_pairing, term(K.DIRAC), term(K.HEAVISIDE))
        out.append(_le("(delta, H) -> Z g(0), rel. error", anchor, abs(f.limit / CANONICAL.Z - 1.0), 0.01))
        f = fit(phi_eps_pairing, term(K.PV), term(K.COSINE_INTEGRAL))
        out.append(_le("(PV, CI) -> Z pi^2 g(0), rel. error", anchor, abs(f.limit / (CANONICAL.Z * math.pi**2) - 1.0), 0.02))
        zero_pairs = [
            (K.HEAVISIDE, K.HEAVISIDE), (K.DIRAC, K.COSINE_INTEGRAL), (K.DIRAC, K.REGULAR),
            (K.PV, K.HEAVISIDE), (K.PV, K.REGULAR), (K.HEAVISIDE, K.COSINE_INTEGRAL),
            (K.HEAVISIDE, K.REGULAR), (K.COSINE_INTEGRAL, K.REGULAR),
        ]
        for a, b in zero_pairs:
            T = regular() if a is K.REGULAR else term(a)
            Tp = regular() if b is K.REGULAR else term(b)
            f = fit(phi_eps_pairing, T, Tp)
            out.append(_le(f"({a.value}, {b.value}) -> 0", anchor, abs(f.limit), max(10 * f.uncertainty, 1e-12)))
        wanchor = "limit table for (s - s') weighted products"
        f = fit(weighted_pairing, term(K.PV), term(K.DIRAC))
        out.append(_le("weighted (PV, delta) -> g(0), rel. error", wanchor, abs(f.limit - 1.0), 0.02))
        sym = eps_fit(ladder(lambda e: weighted_pairing(term(K.PV), term(K.DIRAC), _skew, e, sup)
                             + weighted_pairing(term(K.DIRAC), term(K.PV), _skew, e, sup)))
        out.append(_le("weighted {delta, PV} symmetrised -> 0", wanchor, abs(sym.limit), max(10 * sym.uncertainty, 1e-12)))
    out.append(_le("singular battery runtime [s]", anchor, t.elapsed, 60.0))
    return out


@functools.lru_cache(maxsize=1)
def _regular_payload():
    from .fraccalc import SampledFunction

    return SampledFunction.from_callable(lambda s: np.sqrt(np.abs(s - 0.1)) * np.exp(-s * s), n=2**14)


# --------------------------------------------------------------------------
# Young measures


def young_reduction(seed: int = 0, n: int = 101) -> list[Check]:
    """Dirac/vacuum measures pass the reduction check; overlapping mixtures fail it."""
    law = GasLaw(5 / 3)
    rng = np.random.default_rng(seed)
    anchor = "commutation relation and reduction"
    with _Timer() as t:
        worst_dirac, admissible = 0.0, 0
        for k in range(500):
            nu = DiscreteYoungMeasure.vacuum() if k % 2 == 0 else DiscreteYoungMeasure.dirac(
                FluidState(rng.uniform(0.01, 5.0), rng.uniform(-3.0, 3.0)))
            worst_dirac = max(worst_dirac, residual_sup(nu, law, n))
            admissible += reduction_check(nu, law, n) is Verdict.ADMISSIBLE_DIRAC_OR_VACUUM
        violations, min_ratio = 0, math.inf
        for _ in range(500):
            a = FluidState(rng.uniform(0.1, 3.0), rng.uniform(-1.0, 1.0))
            # the second atom sits inside the first kernel's support
            b = FluidState(rng.uniform(0.1, 3.0), a.u + rng.uniform(-0.9, 0.9) * a.rho**law.theta)
            w = rng.uniform(0.05, 0.95)
            nu = DiscreteYoungMeasure([(a, w), (b, 1 - w)])
            violations += reduction_check(nu, law, n) is Verdict.VIOLATES
            min_ratio = min(min_ratio, residual_sup(nu, law, n) / dirac_baseline(nu, law, n))
        flagged = 0
        for _ in range(50):
            r1, r2 = rng.uniform(0.1, 2.0, 2)
            u1 = rng.uniform(-2.0, 0.0)
            gap = r1**law.theta + r2**law.theta + rng.uniform(0.1, 1.0)
            nu = DiscreteYoungMeasure([(FluidState(r1, u1), 0.5), (FluidState(r2, u1 + gap), 0.5)])
            flagged += not support_interval(nu, law).connected
    return [
        _le("Dirac/vacuum: sup residual", anchor, worst_dirac, 1e-12),
        _ge("Dirac/vacuum: admissible verdicts (of 500)", anchor, admissible, 500),
        _ge("overlapping pairs: Violates verdicts (of 500)", anchor, violations, 500),
        _ge("overlapping pairs: min residual / Dirac baseline", anchor, min_ratio, 100.0),
        _ge("disjoint pairs: disconnected support (of 50)", anchor, flagged, 50),
        _le("Young-measure battery runtime [s]", anchor, t.elapsed, 60.0),
    ]


# --------------------------------------------------------------------------
# solver estimates


_LAW = GasLaw(5 / 3)


@functools.lru_cache(maxsize=None)
def _sod_run(N: int):
    data, geom, _, T = sod(_LAW)
    return tuple(run(data, geom, 1000, Grid(-1.0, 1.0, N), T, law=_LAW))


def higher_integrability_bound(seed: int = 0) -> list[Check]:
    """The bound constant with unit mass, energy and time, and the functional under refinement."""
    anchor = "space-time density integrability"
    out = []
    with _Timer() as t:
        data, geom, grid, _ = inflow_spherical(_LAW, mass=1.0, energy=1.0)
        levels = []
        for N in (400, 800, 1600):
            traj = run(data, geom, 20, Grid(grid.x_left, grid.x_right, N), 1.0, law=_LAW)
            levels.append(dg.higher_integrability(traj, T=1.0, M=1.0, E=1.0))
    out.append(_le("bound - 2 sqrt 2", anchor, abs(levels[0].bound - 2 * math.sqrt(2)), 1e-12))
    out.append(_le("functional spread over N = 400, 800, 1600", anchor, _spread([h.functional for h in levels]), 0.25))
    out.append(_le("kappa * functional at N = 1600", anchor, levels[-1].pressure_weighted, levels[-1].bound))
    out.append(_le("refinement runtime [s]", anchor, t.elapsed, 120.0))
    return out


def conservation(seed: int = 0) -> list[Check]:
    """Mass conservation, energy decay and the energy-entropy budget on two presets."""
    out = []
    with _Timer() as t:
        cases = [("sod", _sod_run(400))]
        data, geom, grid, T = inflow_spherical(_LAW)
        cases.append(("inflow-spherical", tuple(run(data, geom, 20, grid, T, law=_LAW))))
        for name, traj in cases:
            M = np.array([dg.mass(s) for s in traj])
            E = np.array([dg.energy(s) for s in traj])
            res = dg.entropy_residuals(list(traj), EntropyWeight.energy())
            out.append(_le(f"{name}: mass drift (relative)", "mass conservation", np.max(np.abs(M / M[0] - 1)), 1e-12))
            out.append(_le(f"{name}: max energy increase per step / E0", "energy dissipation", np.max(np.diff(E)) / E[0], 1e-8))
            out.append(_le(f"{name}: s^2/2 entropy production / E0", "bounded dissipation measure", res.production / E[0], 1.0))
    out.append(_le("conservation runtime [s]", "mass conservation", t.elapsed, 120.0))
    return out


def well_balanced(seed: int = 0) -> list[Check]:
    """A constant state at rest in a wavy nozzle is an exact steady state."""
    _, geom, grid, _ = rest()
    s0 = cell_state(1.0, 0.0, geom, grid, _LAW)
    s = s0
    for _ in range(1000):
        s = step(s, 0.45)
    anchor = "rest states in a nozzle"
    return [
        _le("max |rho A change| after 1000 steps", anchor, np.max(np.abs(s.m - s0.m)), 1e-14),
        _le("max |rho u A| after 1000 steps", anchor, np.max(np.abs(s.p - s0.p)), 1e-14),
    ]


def hoelder_and_flux(seed: int = 0) -> list[Check]:
    """h-potential bounds and mesh stability of the Hölder and flux estimates on Sod."""
    levels = [list(_sod_run(N)) for N in (200, 400, 800)]
    M = dg.mass(levels[0][0])
    outside, drift = 0, 0.0
    for traj in levels:
        for s in traj:
            hp = dg.h_potential(s)
            outside += not hp.within_bounds
            # the running total and the mass differ only by summation order
            drift = max(drift, abs(hp.total / M - 1.0))
    q = [dg.hoelder_quotients(traj, seed=seed) for traj in levels]
    Q = [dg.flux_bound_profile(traj).sup for traj in levels]
    return [
        _le("snapshots with h outside [0, h(x_right)]", "h-potential", outside, 0),
        _le("|h(x_right) / M - 1|", "h-potential", drift, 1e-12),
        _le("space Hölder quotient spread", "Hölder continuity of h", _spread([a for a, _ in q]), 0.25),
        _le("time Hölder quotient spread", "Hölder continuity of h", _spread([b for _, b in q]), 0.25),
        _le("sup_y Q(y) spread", "weighted flux bound", _spread(Q), 0.25),
    ]


def tail_energy_decay(seed: int = 0) -> list[Check]:
    """Tail energy beyond twice the initial wave speed never grows on a constant-A run."""
    traj = list(_sod_run(400))
    E0 = dg.energy(traj[0])
    R = 2.0 * dg.max_initial_wave_speed(traj[0])
    te = dg.tail_energy(traj, R)
    anchor = "propagation of the tail energy"
    return [
        _le("max tail increase per step / E0", anchor, np.max(np.diff(te.tail), initial=0.0) / E0, 1e-8),
        _le("max psi_R entropy increase per step / E0", anchor, np.max(np.diff(te.psi_total), initial=0.0) / E0, 1e-8),
    ]


# --------------------------------------------------------------------------

Battery = Callable[..., list[Check]]

CRITERIA: list[tuple[str, Battery]] = [
    ("kernel moment matrix", kernel_moments),
    ("higher-integrability bound", higher_integrability_bound),
    ("conservation and dissipation", conservation),
    ("well-balanced rest state", well_balanced),
    ("fractional derivative closed form", fraccalc_closed_form),
    ("Fourier identity", fourier_identity),
    ("singular limits", singular_limits),
    ("Young-measure reduction", young_reduction),
    ("Hölder and flux estimates", hoelder_and_flux),
    ("tail-energy propagation", tail_energy_decay),
]

SUITES: dict[str, list[Battery]] = {
    "kernels": [kernel_moments],
    "fraccalc": [fraccalc_closed_form, fourier_identity],
    "singular": [singular_limits],
    "youngmeasure": [young_reduction],
    "estimates": [higher_integrability_bound, conservation, well_balanced, hoelder_and_flux, tail_energy_decay],
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    """All checks of one suite; ``KeyError`` for unknown names."""
    return [c for battery in SUITES[name] for c in battery(seed=seed)]


def table(checks: list[Check]) -> str:
    """CSV with columns ``check,anchor,value,bound,pass``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "anchor", "value", "bound", "pass"])
    for c in checks:
        w.writerow([c.check, c.anchor, dg.shortest_repr(c.value), dg.shortest_repr(c.bound), str(c.passed).lower()])
    return buf.getvalue()
