"""Discrete Young measures on the (rho, u) half-plane.

A measure is a finite list of weighted non-vacuum states plus a vacuum mass.
Averages of the kernels, the commutation defect and the support of
``<chi>`` are evaluated exactly over the atoms.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DivisionDomain, DomainError
from .kernels import FluidState, GasLaw, chi, sigma, to_riemann, weight_W

__all__ = [
    "DiscreteYoungMeasure",
    "SupportReport",
    "Verdict",
    "average_chi",
    "average_sigma",
    "commutator_residual",
    "support_interval",
    "reduction_check",
    "residual_sup",
    "ratio_monotonicity_probe",
    "read_measure",
    "parse_measure",
    "hoelder_bound",
    "dirac_baseline",
    "default_grid",
]

_SUM_TOL = 1e-12
_POSITIVITY = 1e-10
_SCAN = 401


@dataclass(frozen=True)
class DiscreteYoungMeasure:
    """``sum_k w_k delta_{a_k} + vacuum_weight * delta_V``.

    Atoms at the same state are merged; atoms given with ``rho = 0`` are
    moved into the vacuum mass.
    """

    atoms: tuple[tuple[FluidState, float], ...]
    vacuum_weight: float = 0.0

    def __init__(self, atoms: Iterable[tuple[FluidState, float]] = (), vacuum_weight: float = 0.0):
        merged: dict[FluidState, float] = {}
        vac = float(vacuum_weight)
        for state, w in atoms:
            w = float(w)
            if not w > 0.0:
                raise DomainError(f"atom weights must be positive, got {w}")
            if state.is_vacuum:
                vac += w
            else:
                merged[state] = merged.get(state, 0.0) + w
        if vac < 0.0:
            raise DomainError("vacuum weight must be non-negative")
        total = vac + sum(merged.values())
        if abs(total - 1.0) > _SUM_TOL:
            raise DomainError(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "atoms", tuple(merged.items()))
        object.__setattr__(self, "vacuum_weight", vac)

    @classmethod
    def dirac(cls, state: FluidState) -> "DiscreteYoungMeasure":
        return cls([(state, 1.0)])

    @classmethod
    def vacuum(cls) -> "DiscreteYoungMeasure":
        return cls([], 1.0)

    @property
    def states(self) -> list[FluidState]:
        return [s for s, _ in self.atoms]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    @property
    def is_vacuum(self) -> bool:
        return not self.atoms

    @property
    def is_dirac(self) -> bool:
        return len(self.atoms) == 1 and self.vacuum_weight <= _SUM_TOL

    def mean_W(self, law: GasLaw) -> float:
        """``<W>``; vacuum states have ``W = 1``."""
        return self.vacuum_weight + sum(w * weight_W(to_riemann(s, law), law) for s, w in self.atoms)


def _kernels(nu: DiscreteYoungMeasure, s, law: GasLaw) -> tuple[np.ndarray, np.ndarray]:
    """``chi`` and ``sigma`` for every atom, shape ``(K,) + s.shape``."""
    s = np.asarray(s, float)
    if nu.is_vacuum:
        z = np.zeros((0,) + s.shape)
        return z, z
    c = np.stack([chi(s, a, law) for a in nu.states])
    g = np.stack([sigma(s, a, law) for a in nu.states])
    return c, g


def average_chi(nu: DiscreteYoungMeasure, s, law: GasLaw):
    """``<chi(s)> = sum_k w_k chi(s | a_k)``."""
    c, _ = _kernels(nu, s, law)
    out = np.tensordot(nu.weights, c, axes=1) if c.size else np.zeros(np.shape(s))
    return out if np.ndim(out) else float(out)


def average_sigma(nu: DiscreteYoungMeasure, s, law: GasLaw):
    _, g = _kernels(nu, s, law)
    out = np.tensordot(nu.weights, g, axes=1) if g.size else np.zeros(np.shape(s))
    return out if np.ndim(out) else float(out)


def _residual_matrix(nu: DiscreteYoungMeasure, s: np.ndarray, sp: np.ndarray, law: GasLaw) -> np.ndarray:
    """Commutation defect on the outer grid ``s x s'``."""
    if nu.is_vacuum:
        return np.zeros((s.size, sp.size))
    w = nu.weights
    c, g = _kernels(nu, s, law)
    cp, gp = _kernels(nu, sp, law)
    joint = (w[:, None] * c).T @ gp - (w[:, None] * g).T @ cp
    split = np.outer(w @ c, w @ gp) - np.outer(w @ g, w @ cp)
    return joint - split


def commutator_residual(nu: DiscreteYoungMeasure, s, sp, law: GasLaw):
    """``<chi(s) sigma(s') - sigma(s) chi(s')> - <chi(s)><sigma(s')> + <sigma(s)><chi(s')>``.

    ``s`` and ``sp`` broadcast against each other.
    """
    s, sp = np.broadcast_arrays(np.asarray(s, float), np.asarray(sp, float))
    if nu.is_vacuum:
        return np.zeros(s.shape) if s.ndim else 0.0
    w = nu.weights
    c, g = _kernels(nu, s, law)
    cp, gp = _kernels(nu, sp, law)
    joint = np.tensordot(w, c * gp - g * cp, axes=1)
    split = np.tensordot(w, c, axes=1) * np.tensordot(w, gp, axes=1) - np.tensordot(w, g, axes=1) * np.tensordot(w, cp, axes=1)
    out = joint - split
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# support of <chi>


@dataclass(frozen=True)
class SupportReport:
    """Connected components of ``S = {<chi> > 0}`` found on a sample grid.

    Falsy when ``S`` is empty.  ``hull`` is ``(zunder, zbar)``.
    """

    components: tuple[tuple[float, float], ...]
    matches_atoms: bool = True
    triangle: bool = True

    def __bool__(self):
        return bool(self.components)

    @property
    def empty(self) -> bool:
        return not self.components

    @property
    def connected(self) -> bool:
        return len(self.components) == 1

    @property
    def hull(self) -> Optional[tuple[float, float]]:
        if not self.components:
            return None
        return self.components[0][0], self.components[-1][1]


def _atom_intervals(nu: DiscreteYoungMeasure, law: GasLaw) -> list[tuple[float, float]]:
    out = []
    for a in nu.states:
        z = to_riemann(a, law)
        out.append((z.zunder, z.zbar))
    return sorted(out)


def _union(intervals: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for lo, hi in sorted(intervals):
        # open intervals: touching endpoints stay separate (<chi> vanishes there)
        if merged and lo < merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(a, b) for a, b in merged]


def _bisect_edge(f, inside: float, outside: float) -> float:
    for _ in range(200):
        mid = 0.5 * (inside + outside)
        if mid in (inside, outside):
            break
        if f(mid) > 0:
            inside = mid
        else:
            outside = mid
    return inside if f(outside) <= 0 else outside


def default_grid(nu: DiscreteYoungMeasure, law: GasLaw, n: int = _SCAN, pad: float = 1.0) -> np.ndarray:
    """``n`` samples over the hull of the atom intervals padded by ``pad``."""
    iv = _atom_intervals(nu, law)
    if not iv:
        return np.linspace(-pad, pad, n)
    return np.linspace(min(a for a, _ in iv) - pad, max(b for _, b in iv) + pad, n)


def support_interval(nu: DiscreteYoungMeasure, law: GasLaw, grid: Optional[np.ndarray] = None) -> SupportReport:
    """Components of ``{<chi> > tol}`` on ``grid`` with ``tol = 1e-10 * max <chi>``.

    Component edges are refined by bisection on ``<chi> > 0``.  The report
    also records whether the components coincide with the union of the atom
    intervals ``(zunder_k, zbar_k)`` and whether every atom interval lies
    inside the hull.
    """
    if nu.is_vacuum:
        return SupportReport(())
    s = default_grid(nu, law) if grid is None else np.sort(np.asarray(grid, float))
    vals = np.asarray(average_chi(nu, s, law))
    top = float(vals.max())
    if top <= 0.0:
        return SupportReport((), matches_atoms=False)
    inside = vals > _POSITIVITY * top
    edges = np.flatnonzero(np.diff(inside.astype(int)))

    def f(x):
        return average_chi(nu, x, law)

    comps = []
    starts = ([0] if inside[0] else []) + [i + 1 for i in edges if not inside[i]]
    stops = [i for i in edges if inside[i]] + ([len(s) - 1] if inside[-1] else [])
    for i0, i1 in zip(starts, stops):
        # walk out to a sample where <chi> is exactly zero (the tolerance may
        # cut a flat edge early), then bisect
        j0 = i0 - 1
        while j0 > 0 and vals[j0] > 0:
            j0 -= 1
        j1 = i1 + 1
        while j1 < len(s) - 1 and vals[j1] > 0:
            j1 += 1
        lo = _bisect_edge(f, s[j0 + 1], s[j0]) if i0 > 0 and vals[j0] == 0 else s[max(j0, 0)]
        hi = _bisect_edge(f, s[j1 - 1], s[j1]) if i1 < len(s) - 1 and vals[j1] == 0 else s[min(j1, len(s) - 1)]
        comps.append((float(lo), float(hi)))
    union = _union(_atom_intervals(nu, law))
    h = float(np.max(np.diff(s))) if s.size > 1 else 0.0
    matches = len(union) == len(comps) and all(
        abs(a - c) <= 1e-9 * (1 + abs(a)) and abs(b - d) <= 1e-9 * (1 + abs(b))
        for (a, b), (c, d) in zip(union, comps)
    )
    if not matches and h > 0:
        # components narrower than the grid spacing cannot be resolved
        visible = [(a, b) for a, b in union if b - a > 2 * h]
        matches = len(visible) == len(comps)
    hull = (comps[0][0], comps[-1][1]) if comps else None
    triangle = hull is not None and all(hull[0] - 1e-12 <= a and b <= hull[1] + 1e-12 for a, b in _atom_intervals(nu, law))
    return SupportReport(tuple(comps), matches, triangle)


# --------------------------------------------------------------------------
# reduction check


class Verdict(str, enum.Enum):
    ADMISSIBLE_DIRAC_OR_VACUUM = "AdmissibleDiracOrVacuum"
    VIOLATES = "Violates"


def dirac_baseline(nu: DiscreteYoungMeasure, law: GasLaw, n: int = _SCAN) -> float:
    """Largest residual of the single-atom measures on the scan grid (round-off level)."""
    s = default_grid(nu, law, n)
    base = 0.0
    for a in nu.states:
        base = max(base, float(np.max(np.abs(_residual_matrix(DiscreteYoungMeasure.dirac(a), s, s, law)))))
    scale = max((float(np.max(np.abs(chi(s, a, law))) * np.max(np.abs(sigma(s, a, law)))) for a in nu.states), default=0.0)
    return max(base, np.finfo(float).eps * scale)


def residual_sup(nu: DiscreteYoungMeasure, law: GasLaw, n: int = _SCAN) -> float:
    """Sup of the commutation defect over the ``n x n`` scan of :func:`default_grid`."""
    if nu.is_vacuum:
        return 0.0
    s = default_grid(nu, law, n)
    return float(np.max(np.abs(_residual_matrix(nu, s, s, law))))


def reduction_check(nu: DiscreteYoungMeasure, law: GasLaw, n: int = _SCAN) -> Verdict:
    """Dirac/vacuum dichotomy on an ``n x n`` scan of the commutation defect.

    The measure violates the relation when the scanned defect exceeds 100
    times the single-atom round-off baseline, or when ``<chi> > 0`` has a
    disconnected positivity set.
    """
    if nu.is_vacuum:
        return Verdict.ADMISSIBLE_DIRAC_OR_VACUUM
    if residual_sup(nu, law, n) > 100.0 * dirac_baseline(nu, law, n):
        return Verdict.VIOLATES
    if not support_interval(nu, law, default_grid(nu, law, n)).connected:
        return Verdict.VIOLATES
    return Verdict.ADMISSIBLE_DIRAC_OR_VACUUM


def ratio_monotonicity_probe(nu: DiscreteYoungMeasure, law: GasLaw, s: float, sp: float) -> float:
    """``<sigma(s')>/<chi(s')> - <sigma(s)>/<chi(s)>``.

    Raises :class:`DivisionDomain` when either average is at most ``1e-10``
    times the largest kernel peak among the atoms.
    """
    peak = max((float(chi(a.u, a, law)) for a in nu.states), default=0.0)
    tol = _POSITIVITY * peak
    cs, cp = average_chi(nu, s, law), average_chi(nu, sp, law)
    if not (cs > tol and cp > tol):
        raise DivisionDomain(f"<chi> too small for the ratio: {cs!r}, {cp!r} (tol {tol!r})")
    return average_sigma(nu, sp, law) / cp - average_sigma(nu, s, law) / cs


def hoelder_bound(nu: DiscreteYoungMeasure, law: GasLaw, profile_constant: float) -> float:
    """``c_norm <W> [f]_alpha``, the bound on the Hölder-alpha quotient of ``<chi>``."""
    return law.c_norm * nu.mean_W(law) * profile_constant


# --------------------------------------------------------------------------
# text format


def parse_measure(text: str) -> DiscreteYoungMeasure:
    """Rows ``weight rho u``; an optional row ``vacuum w``; ``#`` starts a comment."""
    atoms, vac = [], 0.0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        try:
            if parts[0].lower() == "vacuum":
                if len(parts) != 2:
                    raise ValueError
                vac += float(parts[1])
            else:
                if len(parts) != 3:
                    raise ValueError
                w, rho, u = map(float, parts)
                atoms.append((FluidState(rho, u), w))
        except (ValueError, DomainError) as exc:
            raise ConfigError(f"line {lineno}: cannot parse {raw!r}") from exc
    try:
        return DiscreteYoungMeasure(atoms, vac)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def read_measure(path: Union[str, Path]) -> DiscreteYoungMeasure:
    return parse_measure(Path(path).read_text())
