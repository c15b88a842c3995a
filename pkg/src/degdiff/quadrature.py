"""Adaptive composite Gauss quadrature with vectorised integrands.

The integrand is called once per refinement sweep on the nodes of every
pending panel, so the cost of evaluating kernels in numpy is amortised.
An algebraic endpoint weight ``(z - a)**p`` at the left end is integrated
exactly by a Gauss-Jacobi rule on the first panel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import roots_jacobi

from .errors import BudgetExceededError, DomainError

ORDER = 15


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budgets shared by all integrals and series.

    ``tol`` is the absolute accuracy requested from quadratures,
    ``max_nodes`` caps integrand evaluations per integral, ``series_budget``
    caps the number of terms in truncated series, and ``t_floor`` is the
    smallest time accepted by semigroup evaluations.
    """

    tol: float = 1e-11
    max_nodes: int = 400_000
    series_budget: int = 100_000
    t_floor: float = 1e-6

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_nodes < 16 or self.series_budget < 16:
            raise DomainError("budgets must be at least 16")
        if not self.t_floor > 0:
            raise DomainError("t_floor must be positive")

    def with_tol(self, tol: float) -> "QuadratureSpec":
        return QuadratureSpec(tol, self.max_nodes, self.series_budget, self.t_floor)


class IntegrationResult(NamedTuple):
    value: np.ndarray | float
    error: float
    nodes: int


@lru_cache(maxsize=None)
def _legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=64)
def _jacobi(n: int, p: float):
    x, w = roots_jacobi(n, 0.0, p)
    return x, w


def _rule(a, b, jacobi_power, n):
    """Nodes and weights on [a, b]; Jacobi panels absorb (z - a)**p."""
    if jacobi_power is None:
        x, w = _legendre(n)
        h = 0.5 * (b - a)
        return a + h * (x + 1.0), h * w
    x, w = _jacobi(n, jacobi_power)
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), w * h ** (jacobi_power + 1.0)


class _Panel:
    __slots__ = ("a", "b", "jacobi", "whole", "halves", "err")

    def __init__(self, a, b, jacobi, whole=None):
        self.a = a
        self.b = b
        self.jacobi = jacobi
        self.whole = whole
        self.halves = None
        self.err = np.inf


def integrate(
    fun: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    *,
    abs_tol: float,
    rel_tol: float = 0.0,
    max_nodes: int = 400_000,
    endpoint_power: float | None = None,
    order: int = ORDER,
) -> IntegrationResult:
    """Integrate ``fun`` (times ``(z - z0)**endpoint_power``) over the breakpoint range.

    ``fun`` maps an array of nodes of shape ``(n,)`` to values of shape
    ``(n,)`` or ``(k, n)`` for a vector-valued integrand. Each panel is
    estimated by an ``order``-point rule on the whole panel and on its two
    halves; the halves are kept as the value and the difference as the error.
    Panels are bisected until the summed error is below
    ``max(abs_tol, rel_tol * |value|)``.
    """
    pts = np.unique(np.asarray(breakpoints, dtype=float))
    if pts.size < 2:
        raise DomainError("need at least two distinct breakpoints")
    z0 = pts[0]
    power = endpoint_power
    if power is not None and power <= -1.0:
        raise DomainError("endpoint_power must exceed -1")
    if power == 0.0:
        power = None

    def weighted(z):
        vals = np.asarray(fun(z), dtype=float)
        if power is not None:
            vals = vals * (z - z0) ** power
        return vals

    def jac_eval(z):
        return np.asarray(fun(z), dtype=float)

    panels = [_Panel(pts[i], pts[i + 1], power is not None and i == 0) for i in range(pts.size - 1)]
    n_evals = 0

    def evaluate(requests):
        # requests: list of (a, b, jacobi); returns list of estimates
        nonlocal n_evals
        reg = [(k, r) for k, r in enumerate(requests) if not r[2]]
        jac = [(k, r) for k, r in enumerate(requests) if r[2]]
        out = [None] * len(requests)
        for group, evaluator in ((reg, weighted), (jac, jac_eval)):
            if not group:
                continue
            nodes, weights = [], []
            for _, (a, b, is_jac) in group:
                x, w = _rule(a, b, power if is_jac else None, order)
                nodes.append(x)
                weights.append(w)
            z = np.concatenate(nodes)
            vals = evaluator(z)
            n_evals += z.size
            start = 0
            for (k, _), w in zip(group, weights):
                out[k] = vals[..., start:start + w.size] @ w
                start += w.size
        return out

    wholes = evaluate([(p.a, p.b, p.jacobi) for p in panels])
    for p, w in zip(panels, wholes):
        p.whole = w

    pending = panels
    while True:
        reqs = []
        for p in pending:
            m = 0.5 * (p.a + p.b)
            reqs.append((p.a, m, p.jacobi))
            reqs.append((m, p.b, False))
        est = evaluate(reqs)
        for i, p in enumerate(pending):
            p.halves = (est[2 * i], est[2 * i + 1])
            p.err = float(np.max(np.abs(p.whole - (est[2 * i] + est[2 * i + 1]))))
        value = sum(p.halves[0] + p.halves[1] for p in panels)
        total_err = sum(p.err for p in panels)
        target = max(abs_tol, rel_tol * float(np.max(np.abs(value))))
        if total_err <= target:
            return IntegrationResult(value, total_err, n_evals)
        if n_evals >= max_nodes:
            raise BudgetExceededError(
                f"quadrature error {total_err:.3g} above target {target:.3g} after {n_evals} nodes",
                IntegrationResult(value, total_err, n_evals),
            )
        threshold = target / (2.0 * len(panels))
        split = [p for p in panels if p.err > threshold and (p.b - p.a) > 1e-14 * max(abs(p.a), abs(p.b), 1e-300)]
        if not split:
            raise BudgetExceededError(
                f"quadrature stalled at error {total_err:.3g} (target {target:.3g})",
                IntegrationResult(value, total_err, n_evals),
            )
        keep = [p for p in panels if p not in split]
        pending = []
        for p in split:
            m = 0.5 * (p.a + p.b)
            left = _Panel(p.a, m, p.jacobi, p.halves[0])
            right = _Panel(m, p.b, False, p.halves[1])
            pending.extend((left, right))
        panels = sorted(keep + pending, key=lambda q: q.a)
