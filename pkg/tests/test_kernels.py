import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from euler_geom.errors import DomainError, InvalidOrdering
from euler_geom.kernels import (
    EntropyWeight,
    FluidState,
    GasLaw,
    RiemannPair,
    chi,
    entropy_pair,
    from_riemann,
    kernel_integral,
    moment_matrix,
    quadrature_moments,
    rho_u_eta_rho,
    sigma,
    to_riemann,
    weight_W,
)

LAW = GasLaw(5 / 3)
gammas = st.sampled_from([4 / 3, 1.5, 5 / 3])


def test_law_parameters():
    assert LAW.theta == pytest.approx(1 / 3, rel=1e-14)
    assert LAW.lam == pytest.approx(1.0, rel=1e-14)
    assert LAW.kappa == pytest.approx(1 / 15, rel=1e-14)
    assert LAW.c_norm == pytest.approx(0.75, rel=1e-14)
    for g in (1.1, 1.4, 5 / 3):
        assert GasLaw(g).lam >= 1.0 - 1e-14


@pytest.mark.parametrize("g", [1.2, 4 / 3, 1.5, 5 / 3, 2.0, 2.7])
def test_c_norm_is_reciprocal_of_profile_integral(g):
    law = GasLaw(g)
    x, w = np.polynomial.legendre.leggauss(400)
    # (1-t^2)^lam is smooth enough for this check when lam >= 0.15
    assert law.c_norm * np.dot(w, (1 - x * x) ** law.lam) == pytest.approx(1.0, rel=1e-6)


def test_law_rejects_out_of_range_gamma():
    with pytest.raises(DomainError):
        GasLaw(1.0)
    with pytest.raises(DomainError):
        GasLaw(3.0)


def test_chi_examples():
    one = FluidState(1.0, 0.0)
    assert chi(0.0, one, LAW) == pytest.approx(0.75)
    assert chi(2.0, one, LAW) == 0.0
    assert chi(0.3, FluidState(0.0, 7.0), LAW) == 0.0


def test_sigma_examples():
    one = FluidState(1.0, 0.0)
    assert sigma(0.5, one, LAW) == pytest.approx(0.09375, rel=1e-14)
    st_ = FluidState(2.0, 1.3)
    assert sigma(1.3, st_, LAW) == pytest.approx(1.3 * chi(1.3, st_, LAW), rel=1e-14)
    assert sigma(0.1, FluidState(0.0), LAW) == 0.0


def test_vacuum_states_are_one_point():
    assert FluidState(0.0, 5.0) == FluidState(0.0, -2.0)
    assert hash(FluidState(0.0, 5.0)) == hash(FluidState(0.0))
    assert FluidState(1.0, 5.0) != FluidState(1.0, -2.0)
    with pytest.raises(DomainError):
        FluidState(-1.0)


def test_entropy_pair_examples():
    eta, q = entropy_pair(EntropyWeight.energy(), FluidState(1.0, 0.0), LAW)
    assert eta == pytest.approx(0.1, rel=1e-12)
    assert eta == pytest.approx(LAW.kappa / (LAW.gamma - 1), rel=1e-12)
    assert q == pytest.approx(0.0, abs=1e-14)
    law = GasLaw(4 / 3)
    state = FluidState(2.0, 3.0)
    assert entropy_pair(EntropyWeight.constant(1.0), state, law)[0] == pytest.approx(2.0, rel=1e-12)
    assert kernel_integral(lambda s: np.ones_like(s), state, law) == pytest.approx(2.0, rel=1e-12)
    assert entropy_pair(EntropyWeight.truncated_quadratic(0.5), FluidState(0.0), LAW) == (0.0, 0.0)


def test_moment_matrix_examples():
    np.testing.assert_allclose(
        moment_matrix(FluidState(1.0, 0.0), LAW), [[1, 0], [0, 1 / 15], [1 / 10, 0]], atol=1e-15
    )
    np.testing.assert_array_equal(moment_matrix(FluidState(0.0), LAW), np.zeros((3, 2)))
    np.testing.assert_allclose(
        moment_matrix(FluidState(1.0, 1.0), GasLaw(2.0)),
        [[1, 1], [1, 1 + 1 / 8], [1 / 2 + 1 / 8, (1 / 2 + 1 / 4) * 1]],
        rtol=1e-14,
    )
    # enthalpy Q = U + P = 1/8 + 1/8; the quadrature oracle agrees
    np.testing.assert_allclose(quadrature_moments(FluidState(1.0, 1.0), GasLaw(2.0))[2, 1], 0.75, rtol=1e-12)
    np.testing.assert_allclose(
        quadrature_moments(FluidState(1.0, 0.0), LAW), [[1, 0], [0, 1 / 15], [1 / 10, 0]], atol=1e-12
    )


@settings(max_examples=150, deadline=None)
@given(rho=st.floats(0.0, 10.0), u=st.floats(-10.0, 10.0), g=gammas)
def test_moment_identity(rho, u, g):
    law = GasLaw(g)
    state = FluidState(rho, u)
    exact = moment_matrix(state, law)
    quad = quadrature_moments(state, law)
    np.testing.assert_allclose(quad, exact, rtol=1e-8, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(rho=st.floats(1e-6, 10.0), u=st.floats(-5, 5), g=gammas, t=st.floats(-3, 3))
def test_support_shift_and_scaling(rho, u, g, t):
    law = GasLaw(g)
    w = rho**law.theta
    s = u + t * w
    val = chi(s, FluidState(rho, u), law)
    if abs(t) >= 1.0:
        assert val == 0.0
    shifted = chi(s - u, FluidState(rho, 0.0), law)
    assert val == pytest.approx(shifted, rel=1e-12, abs=1e-300)
    scaled = rho ** (2 * law.theta * law.lam) * law.c_norm * max(1 - t * t, 0.0) ** law.lam
    assert val == pytest.approx(scaled, rel=1e-9, abs=1e-12 * rho ** (2 * law.theta * law.lam))


def test_riemann_examples():
    assert to_riemann(FluidState(1.0, 0.0), LAW) == RiemannPair(1.0, -1.0)
    assert to_riemann(FluidState(0.0, 5.0), LAW) == RiemannPair(5.0, 5.0)
    z = to_riemann(FluidState(8.0, 1.0), LAW)
    assert (z.zbar, z.zunder) == pytest.approx((3.0, -1.0), rel=1e-14)
    st1 = from_riemann(RiemannPair(1.0, -1.0), LAW)
    assert (st1.rho, st1.u) == pytest.approx((1.0, 0.0))
    st5 = from_riemann(RiemannPair(5.0, 5.0), GasLaw(1.4))
    assert (st5.rho, st5.u) == (0.0, 5.0)
    st8 = from_riemann(RiemannPair(3.0, -1.0), LAW)
    assert (st8.rho, st8.u) == pytest.approx((8.0, 1.0), rel=1e-14)
    with pytest.raises(InvalidOrdering):
        RiemannPair(0.0, 1.0)


def test_weight_W_examples():
    assert weight_W(RiemannPair(2.0, 2.0), LAW) == 1.0
    assert weight_W(RiemannPair(1.0, -1.0), LAW) == pytest.approx(2.0)
    assert weight_W(RiemannPair(3.0, -1.0), LAW) == pytest.approx(257.0, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(rho=st.floats(1e-3, 100.0), u=st.floats(-10, 10), g=gammas)
def test_riemann_round_trip(rho, u, g):
    law = GasLaw(g)
    back = from_riemann(to_riemann(FluidState(rho, u), law), law)
    assert back.rho == pytest.approx(rho, rel=1e-12)
    assert back.u == pytest.approx(u, rel=1e-12, abs=1e-12 * (abs(u) + rho**law.theta))


def test_weight_kinds():
    assert EntropyWeight.truncated_quadratic(1.0).convex
    assert EntropyWeight.energy().growth == "quadratic"
    assert EntropyWeight.constant().growth == "subquadratic"
    assert not EntropyWeight.s_abs_s().convex
    psi = EntropyWeight.truncated_quadratic(1.0)
    np.testing.assert_allclose(psi(np.array([0.5, 1.0, 2.0])), [0.0, 0.0, 6.0])


def test_truncated_weight_pair_matches_direct_quadrature():
    from scipy import integrate

    law = GasLaw(1.4)
    state = FluidState(2.0, 0.4)
    psi = EntropyWeight.truncated_quadratic(0.8)
    eta, q = entropy_pair(psi, state, law)
    w = state.rho**law.theta
    lo, hi = state.u - w, state.u + w
    ref_eta = integrate.quad(lambda s: psi(s) * chi(s, state, law), lo, hi, points=[-0.8, 0.8], epsabs=1e-13)[0]
    ref_q = integrate.quad(lambda s: psi(s) * sigma(s, state, law), lo, hi, points=[-0.8, 0.8], epsabs=1e-13)[0]
    assert eta == pytest.approx(ref_eta, rel=1e-9)
    assert q == pytest.approx(ref_q, rel=1e-9)


def test_rho_u_eta_rho_matches_finite_difference():
    law = GasLaw(1.4)
    psi = EntropyWeight.truncated_quadratic(0.3)
    rho, u = 1.7, 0.6
    h = 1e-5
    deriv = (entropy_pair(psi, FluidState(rho + h, u), law)[0] - entropy_pair(psi, FluidState(rho - h, u), law)[0]) / (2 * h)
    assert rho_u_eta_rho(psi, FluidState(rho, u), law) == pytest.approx(rho * u * deriv, rel=1e-6)


def test_growth_bounds():
    # psi supported in [lo, hi]: |eta| <= C min(rho, rho^{2 lam theta}),
    # |q| <= (max(|lo|, |hi|) + zbar - zunder) |eta|
    law = GasLaw(1.4)
    lo, hi = -0.5, 1.0
    psi = EntropyWeight.smooth_compact(lo, hi)
    rng = np.random.default_rng(3)
    ratios = []
    for _ in range(150):
        rho = 10 ** rng.uniform(-4, 1.5)
        u = rng.uniform(-3, 3)
        state = FluidState(rho, u)
        eta, q = entropy_pair(psi, state, law)
        z = to_riemann(state, law)
        ratios.append(abs(eta) / min(rho, rho ** (2 * law.lam * law.theta)))
        assert abs(q) <= (max(abs(lo), abs(hi)) + z.zbar - z.zunder) * abs(eta) + 1e-14
    C = max(ratios)
    assert math.isfinite(C) and C < 10.0
