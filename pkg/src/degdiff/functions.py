"""Test functions in ``C([0, inf])`` and the named registry used by the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, DomainError

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TestFunction:
    """A bounded continuous function on ``[0, inf)`` with a limit at infinity.

    ``eval``, ``deriv1`` and ``deriv2`` take and return numpy arrays.
    ``breakpoints`` lists abscissae where the function has features worth
    resolving (support ends, kinks of derivatives, characteristic scales).
    """

    __test__ = False  # not a pytest class

    name: str
    eval: Fn
    limit_at_infinity: float
    sup_norm: float
    deriv1: Optional[Fn] = None
    deriv2: Optional[Fn] = None
    lipschitz: Optional[float] = None
    support_bound: Optional[float] = None
    breakpoints: tuple = field(default=())
    nonnegative: bool = False

    def __call__(self, y):
        return self.eval(np.asarray(y, dtype=float))

    def value(self, y: float) -> float:
        return float(self.eval(np.array([float(y)]))[0])

    def d1(self, y: float) -> float:
        if self.deriv1 is None:
            raise ContractError(f"{self.name} has no first derivative")
        return float(self.deriv1(np.array([float(y)]))[0])

    def d2(self, y: float) -> float:
        if self.deriv2 is None:
            raise ContractError(f"{self.name} has no second derivative")
        return float(self.deriv2(np.array([float(y)]))[0])

    @property
    def smooth(self) -> bool:
        return self.deriv1 is not None and self.deriv2 is not None


def validate(f: TestFunction, *, samples: int = 4000) -> None:
    """Check the declared sup-norm, limit and support on a logarithmic grid."""
    y = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, samples)])
    v = f(y)
    if np.max(np.abs(v)) > f.sup_norm * (1 + 1e-12):
        raise ContractError(f"{f.name}: sup_norm {f.sup_norm} exceeded ({np.max(np.abs(v))})")
    tail = f(np.array([1e6]))[0]
    if abs(tail - f.limit_at_infinity) > 1e-5 * max(1.0, f.sup_norm):
        raise ContractError(f"{f.name}: value {tail} at 1e6 far from limit {f.limit_at_infinity}")
    if f.support_bound is not None:
        outside = y > f.support_bound
        if np.any(v[outside] != 0.0):
            raise ContractError(f"{f.name}: nonzero beyond support bound {f.support_bound}")


def _grid_max(fn: Fn, hi: float = 60.0) -> float:
    # dense grid followed by a local parabolic refinement is plenty for the
    # smooth registry functions below
    y = np.linspace(0.0, hi, 600_001)
    v = np.abs(fn(y))
    return float(v.max()) * (1.0 + 1e-9)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def constant(c: float) -> TestFunction:
    zero = lambda y: np.zeros_like(np.asarray(y, dtype=float))
    return TestFunction(
        name="one" if c == 1.0 else f"const({c:g})",
        eval=lambda y: np.full_like(np.asarray(y, dtype=float), c),
        limit_at_infinity=c,
        sup_norm=abs(c) if c != 0 else 1.0,
        deriv1=zero,
        deriv2=zero,
        lipschitz=0.0,
        nonnegative=c >= 0,
    )


def _exp_decay() -> TestFunction:
    return TestFunction(
        name="exp",
        eval=lambda y: np.exp(-y),
        deriv1=lambda y: -np.exp(-y),
        deriv2=lambda y: np.exp(-y),
        limit_at_infinity=0.0,
        sup_norm=1.0,
        lipschitz=1.0,
        breakpoints=(1.0, 5.0),
        nonnegative=True,
    )


def _inv_linear() -> TestFunction:
    return TestFunction(
        name="inv1p",
        eval=lambda y: 1.0 / (1.0 + y),
        deriv1=lambda y: -1.0 / (1.0 + y) ** 2,
        deriv2=lambda y: 2.0 / (1.0 + y) ** 3,
        limit_at_infinity=0.0,
        sup_norm=1.0,
        lipschitz=1.0,
        breakpoints=(1.0, 10.0),
        nonnegative=True,
    )


def _damped_sine(c: float = 0.5) -> TestFunction:
    def f(y):
        return np.sin(y) / (1.0 + y * y) + c

    def d1(y):
        q = 1.0 + y * y
        return np.cos(y) / q - 2.0 * y * np.sin(y) / q**2

    def d2(y):
        q = 1.0 + y * y
        return -np.sin(y) / q - 4.0 * y * np.cos(y) / q**2 + np.sin(y) * (8.0 * y * y / q**3 - 2.0 / q**2)

    return TestFunction(
        name="dsine",
        eval=f,
        deriv1=d1,
        deriv2=d2,
        limit_at_infinity=c,
        sup_norm=_grid_max(f),
        lipschitz=_grid_max(d1),
        breakpoints=(1.0, 3.0, 6.0, 10.0),
    )


def _bump(center: float, radius: float, name: str) -> TestFunction:
    """``exp(1 - 1/(1 - r^2))`` with ``r = (y - center)/radius``, zero for ``|r| >= 1``."""

    def parts(y):
        y = np.asarray(y, dtype=float)
        r = (y - center) / radius
        inside = np.abs(r) < 1.0
        ri = np.where(inside, r, 0.0)
        w = 1.0 - ri * ri
        val = np.where(inside, np.exp(1.0 - 1.0 / w), 0.0)
        return r, ri, w, inside, val

    def f(y):
        return parts(y)[4]

    def d1(y):
        _, ri, w, inside, val = parts(y)
        # d/dr exp(1 - 1/w) = val * (-2r / w^2)
        return np.where(inside, val * (-2.0 * ri / (w * w)) / radius, 0.0)

    def d2(y):
        _, ri, w, inside, val = parts(y)
        g1 = -2.0 * ri / (w * w)
        g1p = -2.0 / (w * w) - 8.0 * ri * ri / (w**3)
        return np.where(inside, val * (g1 * g1 + g1p) / radius**2, 0.0)

    lo, hi = center - radius, center + radius
    return TestFunction(
        name=name,
        eval=f,
        deriv1=d1,
        deriv2=d2,
        limit_at_infinity=0.0,
        sup_norm=1.0,
        lipschitz=_grid_max(d1, hi + 1.0),
        support_bound=hi,
        breakpoints=tuple(p for p in (lo, center - 0.5 * radius, center, center + 0.5 * radius, hi) if p > 0),
        nonnegative=True,
    )


def smoothstep(s):
    """Quintic ``6s^5 - 15s^4 + 10s^3`` clamped to ``[0, 1]``; C^2 on the real line."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def smoothstep_d1(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0) & (s < 1)
    return np.where(inside, 30.0 * s * s * (1.0 - s) ** 2, 0.0)


def smoothstep_d2(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0) & (s < 1)
    return np.where(inside, 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s), 0.0)


def _core_step(lo: float = 1.0, hi: float = 3.0) -> TestFunction:
    """C^2 function equal to 1 on ``[0, lo]`` and 0 beyond ``hi`` (a core element)."""
    w = hi - lo
    return TestFunction(
        name="corestep",
        eval=lambda y: 1.0 - smoothstep((np.asarray(y, dtype=float) - lo) / w),
        deriv1=lambda y: -smoothstep_d1((np.asarray(y, dtype=float) - lo) / w) / w,
        deriv2=lambda y: -smoothstep_d2((np.asarray(y, dtype=float) - lo) / w) / w**2,
        limit_at_infinity=0.0,
        sup_norm=1.0,
        lipschitz=1.875 / w,
        support_bound=hi,
        breakpoints=(lo, 0.5 * (lo + hi), hi),
        nonnegative=True,
    )


def _exp_plus_one() -> TestFunction:
    return TestFunction(
        name="exp1",
        eval=lambda y: np.exp(-y) + 1.0,
        deriv1=lambda y: -np.exp(-y),
        deriv2=lambda y: np.exp(-y),
        limit_at_infinity=1.0,
        sup_norm=2.0,
        lipschitz=1.0,
        breakpoints=(1.0, 5.0),
        nonnegative=True,
    )


_FACTORIES = {
    "one": lambda: constant(1.0),
    "exp": _exp_decay,
    "inv1p": _inv_linear,
    "dsine": _damped_sine,
    "bump": lambda: _bump(1.0, 1.0, "bump"),
    "bump1": lambda: _bump(0.5, 0.5, "bump1"),
    "bump3": lambda: _bump(3.0, 1.5, "bump3"),
    "corestep": _core_step,
    "exp1": _exp_plus_one,
}
_CACHE: dict = {}

REGISTRY_NAMES = tuple(_FACTORIES)
# functions with sup-norm at most one used by the default sweeps
DEFAULT_SWEEP_FUNCTIONS = ("exp", "inv1p", "dsine", "bump", "corestep")


def get(name: str) -> TestFunction:
    """Look up a registry function by name; ``const:<c>`` builds a constant."""
    if name.startswith("const:"):
        try:
            return constant(float(name.split(":", 1)[1]))
        except ValueError as exc:
            raise DomainError(f"bad constant in {name!r}") from exc
    if name not in _FACTORIES:
        raise DomainError(f"unknown test function {name!r}; known: {', '.join(REGISTRY_NAMES)}")
    if name not in _CACHE:
        _CACHE[name] = _FACTORIES[name]()
    return _CACHE[name]


def dilate(f: TestFunction, c: float) -> TestFunction:
    """``y -> f(c y)``; the generator commutes with dilations up to the factor ``c``."""
    if not (math.isfinite(c) and c > 0):
        raise DomainError(f"dilation factor must be positive, got {c}")
    if c == 1.0:
        return f

    def scaled(fn, power):
        if fn is None:
            return None
        return lambda y: c**power * fn(c * np.asarray(y, dtype=float))

    return TestFunction(
        name=f"{f.name}@{c:g}",
        eval=lambda y: f.eval(c * np.asarray(y, dtype=float)),
        deriv1=scaled(f.deriv1, 1),
        deriv2=scaled(f.deriv2, 2),
        limit_at_infinity=f.limit_at_infinity,
        sup_norm=f.sup_norm,
        lipschitz=None if f.lipschitz is None else c * f.lipschitz,
        support_bound=None if f.support_bound is None else f.support_bound / c,
        breakpoints=tuple(p / c for p in f.breakpoints),
        nonnegative=f.nonnegative,
    )
