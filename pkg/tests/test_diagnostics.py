import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from euler_geom.diagnostics import (
    csv_text,
    cutoff,
    energy,
    energy_flux_moments,
    entropy_residuals,
    entropy_total,
    flux_bound_profile,
    h_potential,
    h_time_defect,
    higher_integrability,
    hoelder_quotients,
    mass,
    max_initial_wave_speed,
    tail_energy,
    unicon_bound,
)
from euler_geom.errors import NonConvexWeight, NotApplicable
from euler_geom.geometry import Geometry
from euler_geom.kernels import EntropyWeight, GasLaw
from euler_geom.solver import Grid, GridSolution, cell_state, rest, run, sod

LAW = GasLaw(5 / 3)
FLAT = Geometry.constant(1.0)
UNIT = Grid(0.0, 1.0, 100)


def block(u=0.0):
    return cell_state(1.0, u, FLAT, UNIT, LAW)


def static(sol, T=1.0):
    """Two snapshots of the same state, at t = 0 and t = T."""
    return [sol, sol.with_state(sol.m, sol.p, T, 1)]


@pytest.fixture(scope="module")
def sod_levels():
    data, geom, _, T = sod(LAW)
    return {N: run(data, geom, 1000, Grid(-1.0, 1.0, N), T, law=LAW) for N in (200, 400, 800)}


def spread(values):
    v = np.asarray(values, float)
    return (v.max() - v.min()) / v.max()


def test_mass_examples():
    assert mass(block()) == pytest.approx(1.0, rel=1e-14)
    assert mass(cell_state(0.0, 0.0, FLAT, UNIT, LAW)) == 0.0
    geom = Geometry.spherical(2.0, n=10)
    faces = UNIT.faces
    exact = ((faces[1:] + 0.1) ** 3 - (faces[:-1] + 0.1) ** 3) / 3 / UNIT.dx
    sol = GridSolution(0.0, exact, np.zeros_like(exact), geom, LAW, UNIT)
    assert mass(sol) == pytest.approx((1.1**3 - 0.1**3) / 3, rel=1e-13)
    assert mass(sol) == pytest.approx(0.44333, abs=1e-5)


def test_energy_examples():
    assert energy(block()) == pytest.approx(0.1, rel=1e-13)
    assert energy(cell_state(0.0, 0.0, FLAT, UNIT, LAW)) == 0.0
    assert energy(block(2.0)) == pytest.approx(2.1, rel=1e-13)


def test_entropy_total_for_energy_weight_is_energy(sod_levels):
    s = sod_levels[200][-1]
    assert entropy_total(s, EntropyWeight.energy()) == pytest.approx(energy(s), rel=1e-12)


def test_entropy_residual_vanishes_at_rest():
    data, geom, grid, _ = rest()
    s0 = cell_state(1.0, 0.0, geom, grid, LAW)
    traj = run(s0, geom, 1, grid, 0.05, cfl=0.45)
    for psi in (EntropyWeight.energy(), EntropyWeight.truncated_quadratic(0.5), EntropyWeight.constant()):
        res = entropy_residuals(traj, psi)
        assert np.max(np.abs(res.field)) <= 1e-12


def test_mass_weight_residual_integrates_to_zero(sod_levels):
    traj = sod_levels[200]
    res = entropy_residuals(traj, EntropyWeight.constant(1.0))
    dts = np.diff([s.time for s in traj])
    per_step = np.sum(res.field, axis=1) * traj[0].grid.dx * dts
    assert np.max(np.abs(per_step)) <= 1e-13 * mass(traj[0])


def test_energy_production_below_initial_energy(sod_levels):
    for traj in sod_levels.values():
        res = entropy_residuals(traj, EntropyWeight.energy())
        assert 0.0 <= res.production <= energy(traj[0])
        # the net dissipation is exactly the energy drop
        assert res.net == pytest.approx(energy(traj[0]) - energy(traj[-1]), rel=1e-9, abs=1e-15)


def test_nonconvex_weights_rejected(sod_levels):
    with pytest.raises(NonConvexWeight):
        entropy_residuals(sod_levels[200], EntropyWeight.s_abs_s())


def test_unicon_bound_constant():
    assert unicon_bound(1.0, 1.0, 1.0, 0.0) == pytest.approx(2 * math.sqrt(2), rel=1e-15)
    hi = higher_integrability(static(cell_state(0.0, 0.0, Geometry.spherical(2.0, n=10), UNIT, LAW)), M=1.0, E=1.0)
    assert hi.bound == pytest.approx(2.8284271247, rel=1e-10)


def test_higher_integrability_vacuum_and_rest():
    vac = higher_integrability(static(cell_state(0.0, 0.0, FLAT, UNIT, LAW)), M=0.0, E=0.0)
    assert vac.functional == 0.0 <= vac.bound
    hi = higher_integrability(static(block()), T=1.0, M=1.0, E=0.1)
    assert hi.functional == pytest.approx(1.0, rel=1e-13)
    assert hi.bound == pytest.approx(2 * math.sqrt(0.2), rel=1e-13)
    # the estimate controls P rho A^2 = kappa rho^(gamma+1) A^2
    assert hi.pressure_weighted == pytest.approx(1 / 15, rel=1e-13)
    assert hi.pressure_weighted <= hi.bound


def test_h_potential_examples(sod_levels):
    h = h_potential(block())
    np.testing.assert_allclose(h.h, np.clip(UNIT.faces, 0, 1), atol=1e-14)
    assert h.total == pytest.approx(1.0)
    for s in sod_levels[200]:
        hp = h_potential(s)
        assert np.all(np.diff(hp.h) >= 0)
        assert hp.within_bounds


def test_h_time_defect_is_first_order(sod_levels):
    l1 = []
    for N, traj in sod_levels.items():
        l1.append(max(h_time_defect(traj[k], traj[k + 1])[1] for k in range(len(traj) - 1)))
    # C (dx + dt) with C frozen from the coarsest mesh
    dx0 = 2.0 / 200
    C = l1[0] / dx0
    for (N, _), d in zip(sod_levels.items(), l1):
        assert d <= 1.1 * C * (2.0 / N)


def test_hoelder_quotients(sod_levels):
    vac = cell_state(0.0, 0.0, FLAT, UNIT, LAW)
    assert hoelder_quotients(static(vac)) == (0.0, 0.0)
    assert hoelder_quotients(static(block()))[1] == 0.0
    q = [hoelder_quotients(t) for t in sod_levels.values()]
    assert spread([a for a, _ in q]) < 0.25
    assert spread([b for _, b in q]) < 0.25


def test_flux_profile(sod_levels):
    vac = flux_bound_profile(static(cell_state(0.0, 0.0, FLAT, UNIT, LAW)))
    assert vac.sup == 0.0
    prof = flux_bound_profile(static(block()), T=1.0)
    np.testing.assert_allclose(prof.Q, 1.0, rtol=1e-14)
    assert spread([flux_bound_profile(t).sup for t in sod_levels.values()]) < 0.2


def test_energy_flux_moments(sod_levels):
    assert energy_flux_moments(static(cell_state(0.0, 0.0, FLAT, UNIT, LAW))) == (0.0, 0.0)
    cubic, pg = energy_flux_moments(static(block()), T=1.0)
    assert cubic == pytest.approx(0.125, rel=1e-12)
    assert pg == 0.0
    vals = [energy_flux_moments(t) for t in sod_levels.values()]
    assert spread([a for a, _ in vals]) < 0.2
    assert spread([b for _, b in vals]) < 0.2


@settings(max_examples=200, deadline=None)
@given(s=st.floats(-50, 50), R=st.floats(0.1, 10))
def test_cutoff_sandwich(s, R):
    psi = EntropyWeight.truncated_quadratic(R)
    lower = s * s * cutoff(s, R)
    upper = 2 * s * s * cutoff(s, R / 2)
    assert lower <= psi(s) + 1e-12 * s * s
    assert psi(s) <= upper + 1e-12 * s * s


def test_tail_energy(sod_levels):
    vac = tail_energy(static(cell_state(0.0, 0.0, FLAT, UNIT, LAW)), 1.0)
    assert np.all(vac.tail == 0) and np.all(vac.psi_total == 0)
    quiet = tail_energy(static(block()), 10.0)
    assert np.all(quiet.tail == 0)
    traj = sod_levels[400]
    E0 = energy(traj[0])
    R = 2 * max_initial_wave_speed(traj[0])
    te = tail_energy(traj, R)
    assert np.max(np.diff(te.psi_total)) <= 1e-8 * E0
    assert np.max(np.diff(te.tail)) <= 1e-8 * E0
    with pytest.raises(NotApplicable):
        tail_energy(static(cell_state(1.0, 0.0, Geometry.spherical(2.0, n=5), UNIT, LAW)), 1.0)


def test_tail_energy_with_active_cutoff():
    # a fast jet whose kernels reach past R: the convex psi_R total must still decay
    grid = Grid(-2.0, 2.0, 400)
    x = grid.centers
    s0 = cell_state(np.clip(1 - 4 * x**2, 0, None), 1.5 * np.sign(x), FLAT, grid, LAW)
    traj = run(s0, FLAT, 1, grid, 0.3)
    te = tail_energy(traj, 1.0)
    assert te.psi_total[0] > 0
    assert np.max(np.diff(te.psi_total)) <= 1e-8 * energy(traj[0])


def test_csv_text_round_trip():
    text = csv_text("mass", "mass constant in time", ["time", "value"], [(0.0, 0.1), (0.5, 1 / 3)])
    lines = text.splitlines()
    assert lines[0].startswith("# mass")
    assert lines[1] == "time,value"
    assert float(lines[3].split(",")[1]) == 1 / 3
