import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from euler_geom.errors import NoConvergence, UnsupportedPair
from euler_geom.fraccalc import SampledFunction, expansion_coefficients
from euler_geom.kernels import FluidState, GasLaw, chi
from euler_geom.singular import (
    CANONICAL,
    DEFAULT_LADDER,
    SingularTerm,
    TermKind,
    eps_extrapolate,
    eps_fit,
    ladder,
    mollified,
    phi_eps_pairing,
    reduction_drive,
    weighted_pairing,
)
from euler_geom.singular import _cauchy, _log_moment
from euler_geom.youngmeasure import DiscreteYoungMeasure

K = TermKind
SUPPORT = (-2.0, 2.0)


def g_bump(t):
    t = np.asarray(t, float)
    return np.where(np.abs(t) < 2, np.exp(1 - 1 / (1 - (t / 2.0) ** 2).clip(1e-300)), 0.0)


def g_skew(t):
    # not even, so symmetric cancellations cannot hide errors; g(0) = 1
    return g_bump(t) * (1 + 0.4 * np.asarray(t, float))


def term(kind, loc=0.0, c=1.0):
    return SingularTerm(kind, loc, c)


def regular():
    sf = SampledFunction.from_callable(lambda s: np.sqrt(np.abs(s - 0.1)) * np.exp(-s * s), n=2**14)
    return SingularTerm(K.REGULAR, 0.0, 1.0, sf)


def run(fn, T, Tp, g=g_skew):
    return eps_fit(ladder(lambda e: fn(T, Tp, g, e, SUPPORT)))


# --------------------------------------------------------------------------
# mollifiers and closed forms


def test_canonical_pair():
    assert CANONICAL.integrals() == pytest.approx((1.0, 1.0), abs=1e-12)
    assert CANONICAL.Z == pytest.approx(1.0, abs=1e-12)
    x = np.linspace(-1.5, 1.5, 301)
    assert np.all(CANONICAL.phi(x)[x < 0] == 0) and np.all(CANONICAL.phi(x)[x > 1] == 0)
    np.testing.assert_allclose(CANONICAL.phi(x), (np.clip(1 - (2 * x - 1) ** 2, 0, None)) ** 4 * 630 / 256, atol=1e-12)
    np.testing.assert_array_equal(CANONICAL.phi_prime(x), CANONICAL.phi(-x))


@settings(max_examples=80, deadline=None)
@given(w=st.floats(-6, 6).filter(lambda w: min(abs(w), abs(w - 1)) > 1e-3))
def test_closed_form_moments_against_quadrature(w):
    p = CANONICAL.p
    if 0 < w < 1:
        ref = -integrate.quad(p, 0, 1, weight="cauchy", wvar=w)[0]
        lref = integrate.quad(lambda y: p(y) * math.log(abs(w - y)), 0, 1, points=[w], limit=200)[0]
    else:
        ref = integrate.quad(lambda y: p(y) / (w - y), 0, 1)[0]
        lref = integrate.quad(lambda y: p(y) * math.log(abs(w - y)), 0, 1, limit=200)[0]
    assert _cauchy(p, np.array([w]))[0] == pytest.approx(ref, abs=1e-9)
    assert _log_moment(p, np.array([w]))[0] == pytest.approx(lref, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(t=st.floats(-3, 3), eps=st.sampled_from(DEFAULT_LADDER), a=st.floats(-1, 1))
def test_s_times_pv_mollifies_to_one(t, eps, a):
    # s PV(s - a) = a PV(s - a) + 1
    pv = term(K.PV, a)
    for side in (1, -1):
        lhs = mollified([(pv, 0.0, 1.0)], t, eps, side)
        rhs = a * mollified(pv, t, eps, side) + 1.0
        assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(rhs)))


def test_mollified_dirac_and_heaviside():
    eps = 0.1
    t = np.linspace(-0.5, 0.5, 2001)
    dm = mollified(term(K.DIRAC, 0.2), t, eps, 1)
    assert np.trapezoid(dm, t) == pytest.approx(1.0, abs=1e-5)
    assert np.all(dm[(t < 0.2) | (t > 0.3)] == 0)
    hm = mollified(term(K.HEAVISIDE, 0.2), t, eps, -1)
    assert np.all(hm[t > 0.2] == 1.0) and np.all(hm[t < 0.1] == 0.0)


# --------------------------------------------------------------------------
# antisymmetric pairings


def test_dirac_heaviside_limit():
    fit = run(phi_eps_pairing, term(K.DIRAC), term(K.HEAVISIDE))
    assert fit.limit == pytest.approx(CANONICAL.Z * 1.0, rel=0.02)
    L, u = eps_extrapolate(ladder(lambda e: phi_eps_pairing(term(K.DIRAC), term(K.HEAVISIDE), g_bump, e, SUPPORT)))
    assert L == pytest.approx(1.0, abs=0.01) and u <= 0.01


def test_pv_cosine_integral_limit():
    fit = run(phi_eps_pairing, term(K.PV), term(K.COSINE_INTEGRAL))
    assert fit.limit == pytest.approx(CANONICAL.Z * math.pi**2, rel=0.02)


def test_limits_follow_g_at_the_atom():
    a = 0.7
    fit = run(phi_eps_pairing, term(K.DIRAC, a), term(K.HEAVISIDE, a))
    assert fit.limit == pytest.approx(float(g_skew(a)), rel=0.02)
    fit = run(phi_eps_pairing, term(K.PV, a, 2.0), term(K.COSINE_INTEGRAL, a, 0.5))
    assert fit.limit == pytest.approx(math.pi**2 * float(g_skew(a)), rel=0.02)


OTHER = [
    (K.HEAVISIDE, K.HEAVISIDE),
    (K.DIRAC, K.COSINE_INTEGRAL),
    (K.DIRAC, K.REGULAR),
    (K.PV, K.HEAVISIDE),
    (K.PV, K.REGULAR),
    (K.HEAVISIDE, K.COSINE_INTEGRAL),
    (K.HEAVISIDE, K.REGULAR),
    (K.COSINE_INTEGRAL, K.REGULAR),
]


def _make(kind, loc):
    return regular() if kind is K.REGULAR else term(kind, loc)


@pytest.mark.parametrize("kinds", OTHER, ids=lambda k: f"{k[0].value}-{k[1].value}")
def test_other_combinations_vanish(kinds):
    T, Tp = _make(kinds[0], 0.0), _make(kinds[1], 0.0)
    lad = ladder(lambda e: phi_eps_pairing(T, Tp, g_skew, e, SUPPORT))
    fit = eps_fit(lad)
    assert abs(fit.limit) <= max(10 * fit.uncertainty, 1e-12)
    # uniform boundedness along the ladder
    assert max(abs(v) for _, v in lad) <= 10 * abs(fit.limit) + abs(fit.c) + fit.uncertainty + 1e-12


def test_heaviside_pair_at_two_locations_vanishes():
    fit = run(phi_eps_pairing, term(K.HEAVISIDE, -0.3), term(K.COSINE_INTEGRAL, 0.4))
    assert abs(fit.limit) <= max(10 * fit.uncertainty, 1e-9)


def test_two_different_atoms_are_unsupported():
    with pytest.raises(UnsupportedPair):
        phi_eps_pairing(term(K.DIRAC), term(K.PV), g_skew, 0.1, SUPPORT)
    with pytest.raises(UnsupportedPair):
        phi_eps_pairing(term(K.DIRAC, 0.0), term(K.DIRAC, 0.5), g_skew, 0.1, SUPPORT)
    assert phi_eps_pairing(term(K.PV), term(K.PV), g_skew, 0.1, SUPPORT) == 0.0


# --------------------------------------------------------------------------
# pairings weighted by (s - s')


def test_weighted_pv_dirac():
    fit = run(weighted_pairing, term(K.PV), term(K.DIRAC))
    assert fit.limit == pytest.approx(1.0, rel=0.02)
    # s PV(s) = 1 makes the pairing equal int g phi'_eps, which is bounded by sup g
    for e in DEFAULT_LADDER:
        v = weighted_pairing(term(K.PV), term(K.DIRAC), g_skew, e, SUPPORT)
        assert abs(v) <= float(np.max(g_skew(np.linspace(-2, 2, 4001))))


def test_weighted_symmetrised_dirac_pv_vanishes():
    # the sum is O(eps) with slope set by g' at the atom, so only the limit vanishes
    for a in (0.0, 0.3):
        lad = ladder(lambda e: weighted_pairing(term(K.PV, a), term(K.DIRAC, a), g_skew, e, SUPPORT)
                     + weighted_pairing(term(K.DIRAC, a), term(K.PV, a), g_skew, e, SUPPORT))
        fit = eps_fit(lad)
        assert abs(fit.limit) <= max(10 * fit.uncertainty, 1e-9)
        assert all(abs(v) <= e for e, v in lad)


def test_weighted_dirac_dirac_is_zero():
    for e in DEFAULT_LADDER:
        assert weighted_pairing(term(K.DIRAC), term(K.DIRAC), g_skew, e, SUPPORT) == 0.0


WEIGHTED_ZERO = [
    (K.PV, K.PV),
    (K.HEAVISIDE, K.HEAVISIDE),
    (K.COSINE_INTEGRAL, K.COSINE_INTEGRAL),
    (K.DIRAC, K.HEAVISIDE),
    (K.DIRAC, K.COSINE_INTEGRAL),
    (K.COSINE_INTEGRAL, K.DIRAC),
    (K.PV, K.HEAVISIDE),
    (K.PV, K.COSINE_INTEGRAL),
    (K.REGULAR, K.PV),
]


@pytest.mark.parametrize("kinds", WEIGHTED_ZERO, ids=lambda k: f"{k[0].value}-{k[1].value}")
def test_weighted_other_combinations_vanish(kinds):
    T, Tp = _make(kinds[0], 0.0), _make(kinds[1], 0.0)
    lad = ladder(lambda e: weighted_pairing(T, Tp, g_skew, e, SUPPORT))
    fit = eps_fit(lad)
    assert abs(fit.limit) <= max(10 * fit.uncertainty, 1e-12)
    assert max(abs(v) for _, v in lad) <= 10 * abs(fit.limit) + abs(fit.c) + fit.uncertainty + 1e-12


# --------------------------------------------------------------------------
# extrapolation


def test_extrapolation_examples():
    assert eps_extrapolate([(2.0**-k, 0.37) for k in range(3, 10)]) == (0.37, 0.0)
    L, u = eps_extrapolate([(2.0**-k, 1 + 2.0**-k) for k in range(3, 10)])
    # exact power law: the fit residual vanishes and only the geometric tail of the last step remains
    assert L == pytest.approx(1.0, abs=1e-12) and u == pytest.approx(2.0**-9, rel=1e-9)
    with pytest.raises(NoConvergence):
        eps_extrapolate([(2.0**-k, 2.0**k) for k in range(3, 10)])
    with pytest.raises(ValueError):
        eps_extrapolate([(0.5, 1.0), (0.25, 1.0), (0.125, 1.0)])


@settings(max_examples=50, deadline=None)
@given(L=st.floats(-5, 5), c=st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), beta=st.floats(0.3, 3))
def test_extrapolation_recovers_power_laws(L, c, beta):
    fit = eps_fit([(e, L + c * e**beta) for e in DEFAULT_LADDER])
    assert fit.limit == pytest.approx(L, abs=1e-8 * (1 + abs(c)))
    assert fit.beta == pytest.approx(beta, rel=1e-6)


def test_parallel_ladder_matches_serial(monkeypatch):
    f = lambda e: phi_eps_pairing(term(K.DIRAC), term(K.HEAVISIDE), g_skew, e, SUPPORT)
    serial = ladder(f)
    monkeypatch.setenv("EULER_GEOM_THREADS", "3")
    assert ladder(f) == serial


# --------------------------------------------------------------------------
# reduction drive


def zeta(t):
    t = np.asarray(t, float)
    return np.where(np.abs(t) < 4, np.exp(1 - 1 / (1 - (t / 4.0) ** 2).clip(1e-300)), 0.0)


def _endpoint_functional(m, law):
    # sum_a w_a rho_a^(1 - theta) (<chi(zbar_a)> zeta(zbar_a) + <chi(zunder_a)> zeta(zunder_a))
    total = 0.0
    for s, w in m.atoms:
        r = s.rho**law.theta
        for z in (s.u - r, s.u + r):
            total += w * s.rho ** (1 - law.theta) * sum(w2 * chi(z, s2, law) for s2, w2 in m.atoms) * float(zeta(z))
    return total


def _B(law):
    # product of the Dirac and Heaviside (or PV and CI) weights at one atom
    a1, a2, _, _ = expansion_coefficients(law.lam)
    return law.c_norm**2 * law.theta * (law.lam + 1) * (a1**2 + math.pi**2 * a2**2) * CANONICAL.Z


def test_reduction_drive_vacuum():
    law = GasLaw(5 / 3)
    assert reduction_drive(DiscreteYoungMeasure.vacuum(), zeta, 0.1, law) == (0.0, (0.0, 0.0))


@pytest.fixture(scope="module")
def dirac_ladder():
    law = GasLaw(5 / 3)
    m = DiscreteYoungMeasure.dirac(FluidState(1.0, 0.2))
    return [(e, reduction_drive(m, zeta, e, law)) for e in DEFAULT_LADDER]


def test_reduction_drive_dirac(dirac_ladder):
    for _, (lhs, (I1, I2)) in dirac_ladder:
        # the three-term identity is exact for a single atom
        assert lhs == pytest.approx(I1 - I2, abs=1e-12)
    L, u = eps_extrapolate([(e, v[0]) for e, v in dirac_ladder])
    assert abs(L) <= 10 * u


@pytest.mark.slow
@pytest.mark.parametrize("gamma", [5 / 3, 2.0])
def test_reduction_drive_overlapping_pair(gamma):
    law = GasLaw(gamma)
    m = DiscreteYoungMeasure([(FluidState(2.0, 0.0), 0.3), (FluidState(0.5, 0.6), 0.7)])
    rows = [(e, reduction_drive(m, zeta, e, law)) for e in DEFAULT_LADDER]
    L, u = eps_extrapolate([(e, v[0]) for e, v in rows])
    assert L > 10 * u
    assert L == pytest.approx(_B(law) * _endpoint_functional(m, law), rel=0.02)
    Ld, ud = eps_extrapolate([(e, v[1][0] - v[1][1]) for e, v in rows])
    assert abs(Ld) <= 10 * ud
