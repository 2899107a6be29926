"""Functionals and a priori estimates monitored along solver trajectories.

Space integrals use the midpoint rule on cells and time integrals the
trapezoid rule over stored snapshots, so the monitors are independent of the
stepper.  Every routine takes a list of :class:`GridSolution` snapshots (or a
single one) and returns plain numbers or arrays.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import NonConvexWeight, NotApplicable
from .geometry import Geometry, grad_negative_part_norms
from .kernels import EntropyWeight, GasLaw, entropy_pair_field, kernel_integral_field, rho_u_eta_rho_field
from .solver import GridSolution

Trajectory = Sequence[GridSolution]


def mass(sol: GridSolution) -> float:
    return float(np.sum(sol.m) * sol.grid.dx)


def energy(sol: GridSolution) -> float:
    rho, u = sol.rho, sol.u
    dens = 0.5 * rho * u * u + sol.law.internal_energy(rho)
    return float(np.sum(dens * sol.area_centers) * sol.grid.dx)


def entropy_total(sol: GridSolution, psi: EntropyWeight) -> float:
    """``int eta_psi A dx`` at one snapshot."""
    eta, _ = entropy_pair_field(psi, sol.rho, sol.u, sol.law)
    return float(np.sum(eta * sol.area_centers) * sol.grid.dx)


def _times(traj: Trajectory) -> np.ndarray:
    return np.array([s.time for s in traj])


def _upto(traj: Trajectory, T: Optional[float]) -> list[GridSolution]:
    if T is None:
        return list(traj)
    out = [s for s in traj if s.time <= T * (1 + 1e-12)]
    if not out or out[-1].time < T * (1 - 1e-9):
        raise ValueError(f"trajectory ends at t={traj[-1].time:.6g} before T={T}")
    return out


def _time_integral(traj: Trajectory, fields: list[np.ndarray]) -> np.ndarray:
    if len(traj) == 1:
        return np.zeros_like(fields[0])
    return trapezoid(np.array(fields), _times(traj), axis=0)


# --------------------------------------------------------------------------
# entropy production


@dataclass
class EntropyResiduals:
    """Discrete entropy balance ``d_t(eta A) + d_x(q A) + (rho u eta_rho - q) A_x``.

    ``field[k]`` holds the per-cell residual on ``[t_k, t_{k+1}]``; the
    dissipation is its negative, ``production`` is the space-time integral of
    the dissipation's positive part and ``net`` the integral of the
    dissipation itself (which telescopes to the drop of the entropy total
    when no entropy leaves the window).
    """

    times: np.ndarray
    field: np.ndarray
    production: float
    net: float


def entropy_residuals(traj: Trajectory, psi: EntropyWeight) -> EntropyResiduals:
    if not psi.convex:
        raise NonConvexWeight(f"weight {psi.kind.value} is not convex; use flux_bound_profile instead")
    grid = traj[0].grid
    dx = grid.dx
    A = traj[0].area_centers
    Af = np.asarray(traj[0].geom.area(grid.faces), float)
    dA = (Af[1:] - Af[:-1]) / dx
    pieces = []
    for s in traj:
        eta, q = entropy_pair_field(psi, s.rho, s.u, s.law)
        src = rho_u_eta_rho_field(psi, s.rho, s.u, s.law) - q
        pieces.append((eta * A, q * A, src))
    rows = []
    for k in range(len(traj) - 1):
        dt = traj[k + 1].time - traj[k].time
        e0, qa, src = pieces[k]
        e1 = pieces[k + 1][0]
        qpad = np.concatenate([[qa[0]], qa, [qa[-1]]])
        flux = (qpad[2:] - qpad[:-2]) / (2 * dx)
        rows.append((e1 - e0) / dt + flux + src * dA)
    field = np.array(rows) if rows else np.zeros((0, grid.n_cells))
    dts = np.diff(_times(traj))
    diss = -field
    production = float(np.sum(np.maximum(diss, 0.0) * dts[:, None]) * dx)
    net = float(np.sum(diss * dts[:, None]) * dx)
    return EntropyResiduals(_times(traj)[:-1], field, production, net)


# --------------------------------------------------------------------------
# density estimate


@dataclass
class HigherIntegrability:
    """``iint rho^(gamma+1) A^2`` and ``iint P(rho) rho A^2 = kappa * functional``.

    ``bound`` is ``2 M sqrt(2 M E) + T M E ||(A')_-||_inf``.  The estimate
    it comes from controls ``iint P rho A^2``; the plain functional is
    reported alongside for refinement studies.
    """

    functional: float
    pressure_weighted: float
    bound: float


def unicon_bound(M: float, E: float, T: float, grad_neg_inf: float) -> float:
    return 2.0 * M * math.sqrt(2.0 * M * E) + T * M * E * grad_neg_inf


def higher_integrability(
    traj: Trajectory,
    T: Optional[float] = None,
    M: Optional[float] = None,
    E: Optional[float] = None,
    window: Optional[tuple[float, float]] = None,
) -> HigherIntegrability:
    traj = _upto(traj, T)
    T = traj[-1].time if T is None else T
    s0 = traj[0]
    law = s0.law
    M = mass(s0) if M is None else M
    E = energy(s0) if E is None else E
    if window is None:
        window = (s0.grid.x_left, s0.grid.x_right)
    _, gneg = grad_negative_part_norms(s0.geom, window)
    A = s0.area_centers
    fields = [np.power(s.rho, law.gamma + 1.0) * A * A for s in traj]
    val = float(np.sum(_time_integral(traj, fields)) * s0.grid.dx)
    return HigherIntegrability(val, law.kappa * val, unicon_bound(M, E, T, gneg))


@dataclass
class HPotential:
    """``h`` at cell faces; ``h(x) = int_{x_left}^x rho A``."""

    x: np.ndarray
    h: np.ndarray
    total: float

    def __call__(self, x):
        return np.interp(x, self.x, self.h)

    @property
    def within_bounds(self) -> bool:
        return bool(np.all(self.h >= 0.0) and np.all(self.h <= self.total))


def h_potential(sol: GridSolution) -> HPotential:
    h = np.concatenate([[0.0], np.cumsum(sol.m) * sol.grid.dx])
    # the running sum can overshoot the total by rounding; clip to the exact range
    total = float(h[-1])
    return HPotential(sol.grid.faces, np.clip(h, 0.0, total), total)


def h_time_defect(a: GridSolution, b: GridSolution) -> tuple[float, float]:
    """``(max, L1)`` of ``(h(t_b) - h(t_a))/dt + rho u A`` at interior faces.

    ``rho u A`` at a face is the mean of the neighbouring cells at ``t_a``.
    """
    dt = b.time - a.time
    dh = (h_potential(b).h - h_potential(a).h) / dt
    p = a.p
    flux = np.concatenate([[p[0]], 0.5 * (p[1:] + p[:-1]), [p[-1]]])
    d = np.abs(dh + flux)[1:-1]
    return float(np.max(d)), float(np.sum(d) * a.grid.dx)


def hoelder_exponents(law: GasLaw) -> tuple[float, float]:
    g = law.gamma
    return (g - 1.0) / g, 2.0 * (g - 1.0) / (3.0 * g - 1.0)


def hoelder_quotients(traj: Trajectory, n_pairs: Optional[int] = None, seed: int = 0) -> tuple[float, float]:
    """Empirical Hölder quotients of ``h`` in space and time over random pairs.

    Pairs are drawn in physical coordinates from a seeded generator, so two
    trajectories on different meshes of the same window are probed at the
    same points; ``h`` is evaluated exactly (it is piecewise linear in x) and
    linearly in time between snapshots.
    """
    s0 = traj[0]
    a_x, a_t = hoelder_exponents(s0.law)
    N = s0.grid.n_cells
    if n_pairs is None:
        n_pairs = max(4096, int(N * math.log(N)))
    rng = np.random.default_rng(seed)
    lo, hi = s0.grid.x_left, s0.grid.x_right
    hs = [h_potential(s) for s in traj]
    times = _times(traj)

    x1 = rng.uniform(lo, hi, n_pairs)
    x2 = rng.uniform(lo, hi, n_pairs)
    k = rng.integers(0, len(traj), n_pairs)
    sep = np.abs(x2 - x1)
    ok = sep > 0
    space = 0.0
    for idx in np.unique(k):
        sel = (k == idx) & ok
        if np.any(sel):
            d = np.abs(hs[idx](x2[sel]) - hs[idx](x1[sel]))
            space = max(space, float(np.max(d / sep[sel] ** a_x)))

    time_q = 0.0
    if len(traj) >= 2 and times[-1] > times[0]:
        t1 = rng.uniform(times[0], times[-1], n_pairs)
        t2 = rng.uniform(times[0], times[-1], n_pairs)
        xs = rng.uniform(lo, hi, n_pairs)
        H = np.array([h.h for h in hs])
        faces = hs[0].x

        def h_at(t, x):
            j = np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 2)
            w = (t - times[j]) / (times[j + 1] - times[j])
            col = np.interp(x, faces, np.arange(len(faces)))
            i0 = np.clip(np.floor(col).astype(int), 0, len(faces) - 2)
            f = col - i0
            ha = H[j, i0] + f * (H[j, i0 + 1] - H[j, i0])
            hb = H[j + 1, i0] + f * (H[j + 1, i0 + 1] - H[j + 1, i0])
            return ha + w * (hb - ha)

        dt = np.abs(t2 - t1)
        ok = dt > 0
        d = np.abs(h_at(t2[ok], xs[ok]) - h_at(t1[ok], xs[ok]))
        time_q = float(np.max(d / dt[ok] ** a_t)) if np.any(ok) else 0.0
    return space, time_q


# --------------------------------------------------------------------------
# weighted flux and energy integrability


@dataclass
class FluxProfile:
    y: np.ndarray
    Q: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(self.Q)) if self.Q.size else 0.0


def flux_bound_profile(traj: Trajectory, T: Optional[float] = None) -> FluxProfile:
    """``Q(y) = A(y) int_0^T (rho |u|^3 + rho^(gamma+theta)) dt`` at cell centres."""
    traj = _upto(traj, T)
    law = traj[0].law
    e = law.gamma + law.theta
    fields = [s.rho * np.abs(s.u) ** 3 + np.power(s.rho, e) for s in traj]
    Q = traj[0].area_centers * _time_integral(traj, fields)
    return FluxProfile(traj[0].grid.centers, Q)


def gronwall_envelope(geom: Geometry, y: np.ndarray, c: float = 1.0) -> np.ndarray:
    """Shape ``exp(c int_y^inf (A')_- / A)`` on the sample points ``y`` (``c`` unknown, default 1)."""
    y = np.asarray(y, float)
    g = np.maximum(-np.asarray(geom.darea(y), float), 0.0) / np.asarray(geom.area(y), float)
    # cumulative trapezoid from the right end of the samples
    seg = 0.5 * (g[1:] + g[:-1]) * np.diff(y)
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    return np.exp(c * tail)


def energy_flux_moments(traj: Trajectory, T: Optional[float] = None) -> tuple[float, float]:
    """``(iint (int |s|^3 chi ds) A, iint rho^gamma |u| A)`` over ``[0, T]``."""
    traj = _upto(traj, T)
    law = traj[0].law
    A = traj[0].area_centers
    cubic = [kernel_integral_field(lambda s: np.abs(s) ** 3, s.rho, s.u, law, (0.0,)) * A for s in traj]
    pg = [np.power(s.rho, law.gamma) * np.abs(s.u) * A for s in traj]
    dx = traj[0].grid.dx
    return float(np.sum(_time_integral(traj, cubic)) * dx), float(np.sum(_time_integral(traj, pg)) * dx)


# --------------------------------------------------------------------------
# tail energy


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def cutoff(s, R: float):
    """``Phi_R(s) = 1 - phi(s/R)`` with ``phi = 1`` on ``[-1, 1]``, ``0`` off ``[-2, 2]``, C^2."""
    return _smoothstep(np.abs(np.asarray(s, float)) / R - 1.0)


@dataclass
class TailEnergy:
    times: np.ndarray
    tail: np.ndarray  # int int s^2 Phi_R chi ds A dx
    psi_total: np.ndarray  # int eta_{psi_R} A dx, the monitored convex entropy


def tail_energy(traj: Trajectory, R: float) -> TailEnergy:
    geom = traj[0].geom
    if not geom.is_constant:
        raise NotApplicable("tail energy propagation assumes a constant cross section")
    law = traj[0].law
    psi = EntropyWeight.truncated_quadratic(R)
    tails, totals = [], []
    for s in traj:
        t = kernel_integral_field(lambda v: v * v * cutoff(v, R), s.rho, s.u, law, (-2 * R, -R, R, 2 * R))
        tails.append(float(np.sum(t * s.area_centers) * s.grid.dx))
        totals.append(entropy_total(s, psi))
    return TailEnergy(_times(traj), np.array(tails), np.array(totals))


def max_initial_wave_speed(sol: GridSolution) -> float:
    """``max |u| + rho^theta``, the largest Riemann invariant magnitude."""
    return float(np.max(np.abs(sol.u) + np.power(sol.rho, sol.law.theta)))


# --------------------------------------------------------------------------
# export


def shortest_repr(x: float) -> str:
    return repr(float(x))


def csv_text(functional: str, anchor: str, columns: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    """One diagnostic as CSV: a ``# functional,anchor`` header, column names, then rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"# {functional}", anchor])
    w.writerow(list(columns))
    for row in rows:
        w.writerow([shortest_repr(v) for v in row])
    return buf.getvalue()
