"""Cross-section profiles ``A(x)`` for nozzle and spherically symmetric flow."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from .errors import DomainError, NotApplicable

_DENSE = 20001


class Family(str, enum.Enum):
    NOZZLE = "nozzle"
    SPHERICAL = "spherical"


@dataclass(frozen=True)
class Geometry:
    """Cross section ``A`` on ``R`` (nozzle) or ``(0, inf)`` (``A = x**alpha``).

    Build instances with :meth:`nozzle`, :meth:`nozzle_table`, :meth:`constant`
    or :meth:`spherical`.  A spherical geometry with ``regularization_n = n``
    uses ``A^n(x) = (x + 1/n)**alpha``; nozzles are never regularised.
    """

    family: Family
    profile: Optional[Callable] = None
    dprofile: Optional[Callable] = None
    alpha: float = 0.0
    regularization_n: Optional[int] = None
    label: str = ""
    constant_value: Optional[float] = None

    # constructors -----------------------------------------------------------

    @classmethod
    def nozzle(cls, profile: Callable, dprofile: Optional[Callable] = None, label: str = "analytic"):
        return cls(Family.NOZZLE, profile=profile, dprofile=dprofile, label=label)

    @classmethod
    def nozzle_table(cls, x, A):
        """Clamped cubic interpolation of a sampled profile (``A'`` continuous, zero at the ends)."""
        x = np.asarray(x, float)
        A = np.asarray(A, float)
        if np.any(A <= 0):
            raise DomainError("nozzle table must be strictly positive")
        spl = CubicSpline(x, A, bc_type="clamped")
        lo, hi = x[0], x[-1]

        # constant extension outside the table keeps A in C^1
        def profile(t):
            return spl(np.clip(t, lo, hi))

        def dprofile(t):
            t = np.asarray(t, float)
            return np.where((t < lo) | (t > hi), 0.0, spl(np.clip(t, lo, hi), 1))

        return cls(Family.NOZZLE, profile=profile, dprofile=dprofile, label="table")

    @classmethod
    def constant(cls, A0: float = 1.0):
        if A0 <= 0:
            raise DomainError("cross section must be positive")
        return cls(
            Family.NOZZLE,
            profile=lambda x: np.full_like(np.asarray(x, float), A0),
            dprofile=lambda x: np.zeros_like(np.asarray(x, float)),
            label=f"constant {A0}",
            constant_value=float(A0),
        )

    @classmethod
    def spherical(cls, alpha: float, n: Optional[int] = None):
        if alpha <= 0:
            raise DomainError("alpha must be positive")
        if n is not None and n < 1:
            raise DomainError("regularization index must be a positive integer")
        return cls(Family.SPHERICAL, alpha=float(alpha), regularization_n=n, label=f"x^{alpha}")

    def regularized(self, n: int) -> "Geometry":
        if self.family is Family.NOZZLE:
            return self
        return replace(self, regularization_n=int(n))

    # evaluation -------------------------------------------------------------

    @property
    def is_constant(self) -> bool:
        return self.constant_value is not None

    @property
    def shift(self) -> float:
        n = self.regularization_n
        return 1.0 / n if (self.family is Family.SPHERICAL and n) else 0.0

    def _check_domain(self, x: np.ndarray):
        if self.family is Family.SPHERICAL:
            if self.regularization_n is None and np.any(x <= 0):
                raise DomainError("spherical cross section needs x > 0")
            if np.any(x < 0):
                raise DomainError("spherical cross section is defined for x >= 0")

    def area(self, x):
        x = np.asarray(x, dtype=float)
        self._check_domain(x)
        if self.family is Family.NOZZLE:
            out = np.asarray(self.profile(x), dtype=float)
        else:
            out = (x + self.shift) ** self.alpha
        return out[()] if out.ndim == 0 else out

    def darea(self, x):
        x = np.asarray(x, dtype=float)
        self._check_domain(x)
        if self.family is Family.SPHERICAL:
            out = self.alpha * (x + self.shift) ** (self.alpha - 1.0)
        elif self.dprofile is not None:
            out = np.asarray(self.dprofile(x), dtype=float)
        else:
            h = 1e-6 * np.maximum(1.0, np.abs(x))
            out = (np.asarray(self.profile(x + h)) - np.asarray(self.profile(x - h))) / (2.0 * h)
        return out[()] if out.ndim == 0 else out

    def bounds(self, window: tuple[float, float]) -> tuple[float, float]:
        """Sampled ``(min A, max A)`` over the window; raises if A is not positive."""
        x = np.linspace(window[0], window[1], _DENSE)
        a = self.area(x)
        if np.any(~np.isfinite(a)) or np.min(a) <= 0:
            raise DomainError("cross section must be finite and strictly positive on the window")
        return float(np.min(a)), float(np.max(a))


def area(geom: Geometry, x):
    return geom.area(x)


def grad_negative_part_norms(geom: Geometry, window: tuple[float, float], n: int = _DENSE) -> tuple[float, float]:
    """L1 and Linf norms of ``(dA/dx)_- = -min(dA/dx, 0)`` over ``window``."""
    if geom.family is Family.SPHERICAL:
        return 0.0, 0.0
    x = np.linspace(window[0], window[1], n)
    neg = np.maximum(-geom.darea(x), 0.0)
    return float(trapezoid(neg, x)), float(np.max(neg))


def regularization_error(geom: Geometry, window: tuple[float, float], n: int = _DENSE) -> float:
    """``sup |A^n - A|`` over the window (0 for nozzles, where ``A^n = A``)."""
    if geom.family is Family.NOZZLE:
        return 0.0
    if geom.regularization_n is None:
        raise NotApplicable("spherical geometry has no regularization index set")
    lo = max(window[0], 0.0)
    x = np.linspace(lo, window[1], n)
    diff = np.abs((x + geom.shift) ** geom.alpha - x**geom.alpha)
    return float(np.max(diff))


def computational_window(support: tuple[float, float], t_end: float, max_speed: float, margin: float = 0.1) -> tuple[float, float]:
    """Support hull of the data widened by ``t_end * max_speed`` plus a relative margin."""
    reach = t_end * max_speed
    width = support[1] - support[0] + 2.0 * reach
    return support[0] - reach - margin * width, support[1] + reach + margin * width
