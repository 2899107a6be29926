"""First-order finite-volume solver for isentropic flow with a cross section.

Conserved variables are ``m = rho A`` and ``p = rho u A``::

    m_t + (rho u A)_x = 0
    p_t + ((rho u^2 + P) A)_x = P A_x

Interface fluxes are HLL with wave-speed bounds ``u -+ theta rho^theta``.  The
source in cell ``i`` is ``P(rho_i) (A_{i+1/2} - A_{i-1/2}) / dx``, so states at
rest with constant density are exact steady states.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BlowUp, DomainError, EmptySupport
from .geometry import Family, Geometry
from .kernels import GasLaw

VACUUM_REL = 1e-12
_SUB = 8  # quadrature sub-cells per cell when sampling initial profiles


@dataclass(frozen=True)
class Grid:
    x_left: float
    x_right: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells <= 0 or not self.x_right > self.x_left:
            raise DomainError("grid needs n_cells > 0 and x_right > x_left")

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_left + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return self.x_left + np.arange(self.n_cells + 1) * self.dx

    def sub_points(self, k: int = _SUB) -> np.ndarray:
        """``k`` midpoint sub-samples per cell, shape ``(n_cells, k)``."""
        off = (np.arange(k) + 0.5) / k * self.dx
        return self.x_left + np.arange(self.n_cells)[:, None] * self.dx + off[None, :]


@dataclass(frozen=True)
class GridSolution:
    """Cell averages of ``rho A`` and ``rho u A`` at one time level."""

    time: float
    m: np.ndarray
    p: np.ndarray
    geom: Geometry
    law: GasLaw
    grid: Grid
    vacuum_floor: float = 0.0
    steps: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.m.setflags(write=False)
        self.p.setflags(write=False)

    @property
    def area_centers(self) -> np.ndarray:
        if "A" not in self._cache:
            self._cache["A"] = np.asarray(self.geom.area(self.grid.centers), float)
        return self._cache["A"]

    @property
    def vacuum(self) -> np.ndarray:
        return self.m <= self.vacuum_floor

    @property
    def rho(self) -> np.ndarray:
        return np.where(self.vacuum, 0.0, self.m / self.area_centers)

    @property
    def u(self) -> np.ndarray:
        vac = self.vacuum
        return np.where(vac, 0.0, self.p / np.where(vac, 1.0, self.m))

    def with_state(self, m, p, time, steps) -> "GridSolution":
        return replace(self, m=m, p=p, time=time, steps=steps, _cache=self._cache)


@dataclass
class InitialData:
    """Profiles ``rho(x), u(x)`` (vectorised callables) and the target functionals.

    ``mass`` is the value the discrete mass is rescaled to; ``energy`` is the
    reference total energy (both default to the values of the raw profiles).
    """

    rho: Callable[[np.ndarray], np.ndarray]
    u: Callable[[np.ndarray], np.ndarray]
    mass: Optional[float] = None
    energy: Optional[float] = None
    support: tuple[float, float] = (-np.inf, np.inf)
    name: str = "custom"


# --------------------------------------------------------------------------
# initial data


def _bump_weights(radius: float, h: float) -> np.ndarray:
    k = int(radius / h)
    if k < 1:
        return np.ones(1)
    y = np.arange(-k, k + 1) * h / radius
    w = np.where(np.abs(y) < 1, np.exp(-1.0 / np.clip(1.0 - y * y, 1e-300, None)), 0.0)
    return w / w.sum()


def _profile_functionals(data: InitialData, geom: Geometry, law: GasLaw, window: tuple[float, float], n_fine: int = 200001):
    x = np.linspace(window[0], window[1], n_fine)[1:-1]
    h = x[1] - x[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.nan_to_num(np.asarray(data.rho(x), float), posinf=0.0)
        u = np.asarray(data.u(x), float) * np.ones_like(x)
    A = geom.area(x)
    mass = float(np.sum(rho * A) * h)
    energy = float(np.sum((0.5 * rho * u * u + law.internal_energy(rho)) * A) * h)
    return mass, energy


def target_functionals(data: InitialData, geom: Geometry, law: GasLaw, n: int) -> tuple[float, float]:
    """``(M, E)`` of the raw profiles over the truncation window (or the given targets)."""
    lo, hi = -float(n), float(n)
    if geom.family is Family.SPHERICAL:
        lo = 0.0
    lo, hi = max(lo, data.support[0]), min(hi, data.support[1])
    if data.mass is not None and data.energy is not None:
        return data.mass, data.energy
    m, e = _profile_functionals(data, geom, law, (lo, hi))
    return (data.mass if data.mass is not None else m), (data.energy if data.energy is not None else e)


def approximate_initial_data(data: InitialData, geom: Geometry, n: int, grid: Grid, law: GasLaw) -> GridSolution:
    """Truncate, mollify, clamp and mass-normalise the profiles, returning cell averages.

    Steps: restrict to ``[-n, n]`` intersected with the domain; convolve with a
    smooth bump of width ``1/n``; clamp ``rho <= n`` and ``|u| <= n``; rescale
    the density so that the discrete mass equals the target mass.  Spherical
    geometries are regularised with index ``n`` if not already.
    """
    if n < 1:
        raise DomainError("approximation index n must be >= 1")
    if geom.family is Family.SPHERICAL:
        if grid.x_left < 0:
            raise DomainError("spherical grids must start at x >= 0")
        if geom.regularization_n is None:
            geom = geom.regularized(n)
    target_mass, _ = target_functionals(data, geom, law, n)

    xs = grid.sub_points().ravel()
    h = grid.dx / _SUB
    lo = 0.0 if geom.family is Family.SPHERICAL else -float(n)
    keep = (xs >= lo) & (xs <= n)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(keep, np.asarray(data.rho(xs), float), 0.0)
        u = np.where(keep, np.asarray(data.u(xs), float) * np.ones_like(xs), 0.0)
    rho = np.nan_to_num(rho, nan=0.0, posinf=float(n), neginf=0.0)
    if np.any(rho < 0):
        raise DomainError("initial density must be non-negative")

    w = _bump_weights(0.5 / n, h)
    rho_m = np.convolve(rho, w, mode="same")
    mom_m = np.convolve(rho * u, w, mode="same")
    with np.errstate(divide="ignore", invalid="ignore"):
        u_m = np.where(rho_m > 0, mom_m / rho_m, 0.0)
    rho_m = np.minimum(rho_m, float(n))
    u_m = np.clip(u_m, -float(n), float(n))

    A = geom.area(xs)
    m_cells = (rho_m * A).reshape(grid.n_cells, _SUB).mean(axis=1)
    total = float(np.sum(m_cells) * grid.dx)
    if not total > 0:
        raise EmptySupport("truncated initial data carries no mass")
    scale = target_mass / total
    p_cells = (rho_m * u_m * A).reshape(grid.n_cells, _SUB).mean(axis=1) * scale
    m_cells = m_cells * scale
    floor = VACUUM_REL * float(np.max(m_cells))
    p_cells = np.where(m_cells <= floor, 0.0, p_cells)
    return GridSolution(0.0, m_cells, p_cells, geom, law, grid, vacuum_floor=floor)


def cell_state(rho, u, geom: Geometry, grid: Grid, law: GasLaw) -> GridSolution:
    """Solution whose cells hold the given point values (``m = rho A(x_i)``)."""
    A = np.asarray(geom.area(grid.centers), float)
    rho = np.broadcast_to(np.asarray(rho, float), A.shape).copy()
    u = np.broadcast_to(np.asarray(u, float), A.shape)
    m = rho * A
    p = m * u
    floor = VACUUM_REL * float(np.max(m)) if np.max(m) > 0 else 0.0
    return GridSolution(0.0, m, np.where(m <= floor, 0.0, p), geom, law, grid, vacuum_floor=floor)


# --------------------------------------------------------------------------
# time stepping


def _hll(rl, ul, rr, ur, af, law: GasLaw):
    """HLL flux of ``(rho u A, (rho u^2 + P) A)`` across faces of area ``af``."""
    th = law.theta
    cl = th * np.power(rl, th)
    cr = th * np.power(rr, th)
    sl = np.minimum(ul - cl, ur - cr)
    sr = np.maximum(ul + cl, ur + cr)
    Pl = law.pressure(rl)
    Pr = law.pressure(rr)
    Ul = np.stack([rl * af, rl * ul * af])
    Ur = np.stack([rr * af, rr * ur * af])
    Fl = np.stack([rl * ul * af, (rl * ul * ul + Pl) * af])
    Fr = np.stack([rr * ur * af, (rr * ur * ur + Pr) * af])
    width = sr - sl
    safe = np.where(width > 0, width, 1.0)
    # F_L - S_L (dF - S_R dU) / (S_R - S_L): returns F_L exactly for equal states
    mid = Fl - sl * ((Fr - Fl) - sr * (Ur - Ul)) / safe
    out = np.where(sl >= 0, Fl, np.where(sr <= 0, Fr, mid))
    return np.where(width > 0, out, 0.0)


def max_wave_speed(sol: GridSolution) -> float:
    rho = sol.rho
    return float(np.max(np.abs(sol.u) + sol.law.theta * np.power(rho, sol.law.theta)))


def _has_wall(sol: GridSolution) -> bool:
    return sol.geom.family is Family.SPHERICAL and sol.grid.x_left == 0.0


def step(sol: GridSolution, cfl: float, dt: Optional[float] = None) -> GridSolution:
    """One forward-Euler HLL update; ``dt`` defaults to ``cfl dx / max(|u| + c)``."""
    if not 0.0 < cfl < 1.0:
        raise DomainError("cfl must lie in (0, 1)")
    grid, law, geom = sol.grid, sol.law, sol.geom
    dx = grid.dx
    speed = max_wave_speed(sol)
    if speed == 0.0:
        # vacuum, or a state at rest with zero pressure: nothing moves
        return sol.with_state(sol.m.copy(), sol.p.copy(), sol.time + (dt or 0.0), sol.steps + 1)
    if dt is None:
        dt = cfl * dx / speed
    rho, u = sol.rho, sol.u
    if "Af" not in sol._cache:
        sol._cache["Af"] = np.asarray(geom.area(grid.faces), float)
    af = sol._cache["Af"]

    wall = _has_wall(sol)
    # ghost cells: mirror at a wall, zero-gradient outflow elsewhere
    rl = np.concatenate([[rho[0]], rho])
    ul = np.concatenate([[-u[0] if wall else u[0]], u])
    rr = np.concatenate([rho, [rho[-1]]])
    ur = np.concatenate([u, [u[-1]]])
    F = _hll(rl, ul, rr, ur, af, law)
    if wall:
        F[0, 0] = 0.0

    P = law.pressure(rho)
    m_new = sol.m - dt / dx * (F[0, 1:] - F[0, :-1])
    p_new = sol.p - dt / dx * ((F[1, 1:] - F[1, :-1]) - (P * af[1:] - P * af[:-1]))
    if not (np.all(np.isfinite(m_new)) and np.all(np.isfinite(p_new))):
        raise BlowUp(f"non-finite state after step {sol.steps + 1} at t={sol.time:.6g}")
    m_new = np.maximum(m_new, 0.0)
    p_new = np.where(m_new <= sol.vacuum_floor, 0.0, p_new)
    return sol.with_state(m_new, p_new, sol.time + dt, sol.steps + 1)


Hook = Callable[[GridSolution], None]


def run(
    data: InitialData | GridSolution,
    geom: Geometry,
    n: int,
    grid: Grid,
    t_end: float,
    cfl: float = 0.45,
    hooks: Sequence[Hook] = (),
    law: Optional[GasLaw] = None,
    snapshot_every: int = 1,
    max_steps: int = 10_000_000,
) -> list[GridSolution]:
    """March to ``t_end``; returns snapshots every ``snapshot_every`` steps plus the last.

    ``data`` may be :class:`InitialData` (passed through
    :func:`approximate_initial_data`, which needs ``law``) or a ready
    :class:`GridSolution`.  Hooks are called on every stored snapshot.
    """
    if t_end < 0:
        raise DomainError("t_end must be non-negative")
    if isinstance(data, GridSolution):
        sol = data
    else:
        if law is None:
            raise DomainError("a gas law is required to build initial data")
        sol = approximate_initial_data(data, geom, n, grid, law)
    snaps = [sol]
    for hook in hooks:
        hook(sol)
    t0 = sol.time
    while sol.time < t0 + t_end * (1 - 1e-14):
        speed = max_wave_speed(sol)
        dt = cfl * sol.grid.dx / speed if speed > 0 else t_end
        dt = min(dt, t0 + t_end - sol.time)
        sol = step(sol, cfl, dt=dt)
        if sol.steps % snapshot_every == 0 or sol.time >= t0 + t_end * (1 - 1e-14):
            snaps.append(sol)
            for hook in hooks:
                hook(sol)
        if sol.steps > max_steps:
            raise BlowUp("step budget exhausted before t_end")
    return snaps


# --------------------------------------------------------------------------
# presets


def sod(law: Optional[GasLaw] = None) -> tuple[InitialData, Geometry, Grid, float]:
    """Compactly supported shock tube: rho = 1 on [-1/2, 0), 1/8 on [0, 1/2], u = 0."""
    data = InitialData(
        rho=lambda x: np.where((x >= -0.5) & (x < 0.0), 1.0, np.where((x >= 0.0) & (x <= 0.5), 0.125, 0.0)),
        u=lambda x: np.zeros_like(x),
        mass=0.5625,
        # U(rho) = rho^gamma / 10 at gamma = 5/3; other gammas use the profile quadrature
        energy=0.05 * (1.0 + 0.125 ** (5 / 3)) if law is None or law.gamma == 5 / 3 else None,
        support=(-0.5, 0.5),
        name="sod",
    )
    return data, Geometry.constant(1.0), Grid(-1.0, 1.0, 400), 0.2


def rest(rho0: float = 1.0) -> tuple[InitialData, Geometry, Grid, float]:
    """Constant density at rest filling a wavy nozzle ``A = 2 + cos x``."""
    geom = Geometry.nozzle(lambda x: 2.0 + np.cos(x), lambda x: -np.sin(x), label="2+cos")
    data = InitialData(rho=lambda x: np.full_like(x, rho0), u=lambda x: np.zeros_like(x), name="rest")
    return data, geom, Grid(0.0, 2 * np.pi, 200), 1.0


def inflow_spherical(law: GasLaw, mass: float = 1.0, energy: float = 1.0, alpha: float = 2.0, n: int = 20):
    """Radial inflow of a smooth shell onto the ball of radius ``1/n``.

    The shell ``rho ~ (1 - 4 (x - 1)^2)_+^2`` is scaled to total mass ``mass``;
    the constant inward speed is chosen so that the total energy equals ``energy``.
    """
    geom = Geometry.spherical(alpha, n=n)
    shape = lambda x: np.clip(1.0 - 4.0 * (x - 1.0) ** 2, 0.0, None) ** 2  # noqa: E731
    x = np.linspace(0.5, 1.5, 200001)
    h = x[1] - x[0]
    A = geom.area(x)
    c = mass / (np.sum(shape(x) * A) * h)
    internal = float(np.sum(law.internal_energy(c * shape(x)) * A) * h)
    if internal >= energy:
        raise DomainError("requested energy is below the internal energy of the shell")
    speed = np.sqrt(2.0 * (energy - internal) / mass)
    data = InitialData(
        rho=lambda x: c * shape(x),
        u=lambda x: np.full_like(x, -speed),
        mass=mass,
        energy=energy,
        support=(0.5, 1.5),
        name="inflow-spherical",
    )
    return data, geom, Grid(0.0, 2.5, 400), 0.25


PRESETS = {"sod": sod, "rest": rest, "inflow-spherical": inflow_spherical}
