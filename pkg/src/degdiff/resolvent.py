"""Resolvent ``R(lambda) f = int_0^inf exp(-lambda t) P_t f dt`` for ``Re lambda > 0``.

The time integral is split at ``t* = 1 / Re lambda``. On ``[0, t*]`` the
substitution ``t = t* u^2`` removes the ``t^{-1/2}`` behaviour of the
gradient near ``t = 0``; on ``[t*, T]`` the substitution ``t = t* e^v``
covers the exponential tail with few nodes. ``T`` is chosen so that the
neglected tail is below the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from . import semigroup
from .errors import ContractError, DomainError
from .functions import TestFunction
from .kernel import Params
from .quadrature import QuadratureSpec, integrate

LAMBDA_MIN = 1e-3
# inner evaluations of P_t are allowed down to this time; below it the
# integrand is replaced by its t -> 0 limit
T_EVAL_MIN = 1e-13


@dataclass(frozen=True)
class ResolventQuery:
    params: Params
    lam: complex
    f: TestFunction
    x: float
    quad: QuadratureSpec = QuadratureSpec()

    def __post_init__(self):
        lam = complex(self.lam)
        if not (math.isfinite(lam.real) and math.isfinite(lam.imag)) or lam.real <= 0:
            raise DomainError(f"Re(lambda) must be positive, got {self.lam}")
        if not (math.isfinite(self.x) and self.x >= 0):
            raise DomainError(f"x must be finite and nonnegative, got {self.x}")
        object.__setattr__(self, "lam", lam)


def _laplace(values: Callable[[float], object], lam: complex, scale: float, quad: QuadratureSpec) -> np.ndarray:
    """``int_0^inf exp(-lam t) values(t) dt`` for scalar or vector ``values``.

    ``scale`` bounds ``|values(t)|`` for large ``t`` and fixes the cut ``T``.
    Returns a complex array with one entry per component of ``values``.
    """
    a = lam.real
    if a < LAMBDA_MIN:
        raise DomainError(f"Re(lambda)={a} below the supported minimum {LAMBDA_MIN}")
    tstar = 1.0 / a
    T = max(2.0 * tstar, math.log(max(scale, 1e-300) / (0.1 * a * quad.tol)) / a)
    vmax = math.log(T / tstar)

    def rows(t, jac):
        v = np.array([np.atleast_1d(values(float(ti))) for ti in t]).T
        w = np.exp(-lam * t) * jac * v
        return np.concatenate([w.real, w.imag])

    def head(u):
        t = tstar * u * u
        return rows(t, 2.0 * tstar * u)

    def tail(v):
        t = tstar * np.exp(v)
        return rows(t, t)

    kw = dict(abs_tol=0.5 * quad.tol, max_nodes=quad.max_nodes)
    total = integrate(head, [0.0, 0.5, 1.0], **kw).value
    total = total + integrate(tail, np.linspace(0.0, vmax, 3), **kw).value
    k = total.size // 2
    return total[:k] + 1j * total[k:]


def _inner(quad: QuadratureSpec) -> QuadratureSpec:
    # the time integral sees the inner error amplified by at most 1/Re(lambda)
    return QuadratureSpec(0.1 * quad.tol, quad.max_nodes, quad.series_budget, T_EVAL_MIN)


def resolve(q: ResolventQuery) -> complex:
    """``R(lambda) f (x)``."""
    p, f, x = q.params, q.f, q.x
    inner = _inner(q.quad)
    fx = f.value(x)

    def value(t):
        if t < T_EVAL_MIN:
            return fx
        return semigroup.apply(p, f, t, x, inner)

    return complex(_laplace(value, q.lam, f.sup_norm, q.quad)[0])


def resolve_derivative(q: ResolventQuery) -> complex:
    """``(R(lambda) f)'(x)``.

    For ``x > 0`` the integrand is the drift-shifted kernel difference.
    At ``x = 0`` the integrand ``P_t^{b+gamma}(f')`` is used, which needs
    ``f'`` bounded.
    """
    p, f, x = q.params, q.f, q.x
    inner = _inner(q.quad)
    if x == 0.0:
        if f.deriv1 is None:
            raise DomainError("x = 0 requires a test function with a bounded derivative")
        d0 = f.d1(0.0)

        def grad(t):
            if t < T_EVAL_MIN:
                return d0
            return semigroup.derivative_from_gradient(p, f, t, 0.0, inner)

        return complex(_laplace(grad, q.lam, f.lipschitz or f.sup_norm, q.quad)[0])

    d_small = f.d1(x) if f.deriv1 is not None else 0.0

    def deriv(t):
        if t < T_EVAL_MIN:
            return d_small
        return semigroup.derivative(p, f, t, x, inner)

    # |(P_t f)'| <= 2 ||f|| / (gamma t) bounds the tail
    return complex(_laplace(deriv, q.lam, f.sup_norm * 2.0 * q.lam.real / p.gamma, q.quad)[0])


def resolve_jets(q: ResolventQuery) -> tuple[complex, complex]:
    """``(R f(x), (R f)'(x))`` from one time integral (``x > 0``)."""
    p, f, x = q.params, q.f, q.x
    if x == 0.0:
        return resolve(q), resolve_derivative(q)
    inner = _inner(q.quad)
    lam = q.lam
    fx = f.value(x)
    d_small = f.d1(x) if f.deriv1 is not None else 0.0
    scale = max(f.sup_norm, f.sup_norm * 2.0 * lam.real / p.gamma)

    def jet(t):
        if t < T_EVAL_MIN:
            return np.array([fx, d_small])
        return semigroup._jets(p, f, t, x, inner, 1)

    r = _laplace(jet, lam, scale, q.quad)
    return complex(r[0]), complex(r[1])


def x_second_derivative(q: ResolventQuery) -> complex:
    """``x (R f)''(x) = (lambda R f - f - b (R f)') / gamma`` (from ``(lambda - A) R f = f``)."""
    r0, r1 = resolve_jets(q)
    p = q.params
    return (q.lam * r0 - q.f.value(q.x) - p.b * r1) / p.gamma


def gradient_constant(params: Params, derivative_value: complex, sup_norm: float) -> float:
    """Empirical ``C`` in ``|(R f)'| <= (C / gamma) max(2, gamma / b) ||f||``."""
    if params.b == 0.0:
        raise DomainError("the global gradient bound needs b > 0")
    return abs(derivative_value) * params.gamma / (max(2.0, params.gamma / params.b) * sup_norm)


def x_second_derivative_bound_check(q: ResolventQuery, C: float | None = None):
    """``(|x (R f)''(x)|, (C / gamma) (1 + max(2b/gamma, 1)) ||f||)``.

    ``C`` is the calibrated gradient constant; when omitted it is taken
    from the same query via :func:`gradient_constant`.
    """
    p = q.params
    if p.b == 0.0:
        raise DomainError("needs b > 0")
    if q.lam.imag != 0.0:
        raise DomainError("needs real lambda")
    r0, r1 = resolve_jets(q)
    value = abs((q.lam * r0 - q.f.value(q.x) - p.b * r1) / p.gamma)
    if C is None:
        C = gradient_constant(p, r1, q.f.sup_norm)
    bound = C / p.gamma * (1.0 + max(2.0 * p.b / p.gamma, 1.0)) * q.f.sup_norm
    return value, bound


def sampled_function(
    params: Params, lam: float, f: TestFunction, *, nodes: int = 24, length: float = 4.0, quad: QuadratureSpec = QuadratureSpec()
) -> TestFunction:
    """``R(lam) f`` as a TestFunction, interpolated in ``xi = y / (y + length)``.

    Chebyshev points of the second kind on ``xi in [0, 1]`` include the
    endpoint ``xi = 1`` (``y = inf``), where the value is ``limit / lam``.
    """
    lam = float(lam)
    k = np.arange(nodes)
    xi = 0.5 * (1.0 - np.cos(np.pi * k / (nodes - 1)))
    vals = np.empty(nodes)
    for i, s in enumerate(xi):
        if s >= 1.0:
            vals[i] = f.limit_at_infinity / lam
        else:
            y = length * s / (1.0 - s)
            vals[i] = resolve(ResolventQuery(params, lam, f, y, quad)).real
    interp = BarycentricInterpolator(xi, vals)

    def ev(y):
        y = np.asarray(y, dtype=float)
        return np.asarray(interp(y / (y + length)), dtype=float).reshape(y.shape)

    return TestFunction(
        name=f"R({lam:g}){f.name}",
        eval=ev,
        limit_at_infinity=f.limit_at_infinity / lam,
        sup_norm=max(float(np.max(np.abs(vals))), f.sup_norm / lam) * (1.0 + 1e-6),
        breakpoints=tuple(length * c for c in (0.1, 0.5, 1.0, 3.0, 10.0)),
    )


def resolvent_identity_defect(
    params: Params,
    f: TestFunction,
    lam: float,
    mu: float,
    xs,
    quad: QuadratureSpec = QuadratureSpec(),
    nodes: int = 24,
) -> list:
    """``|R(lam) f - R(mu) f - (mu - lam) R(lam) R(mu) f|`` at each point of ``xs``.

    ``R(mu) f`` is re-entered as an interpolated test function.
    """
    if lam == mu:
        raise ContractError("lam and mu must differ")
    g = sampled_function(params, mu, f, nodes=nodes, quad=quad)
    out = []
    for x in np.atleast_1d(np.asarray(xs, dtype=float)):
        r_lam = resolve(ResolventQuery(params, lam, f, float(x), quad)).real
        r_mu = resolve(ResolventQuery(params, mu, f, float(x), quad)).real
        rr = resolve(ResolventQuery(params, lam, g, float(x), quad)).real
        out.append(abs(r_lam - r_mu - (mu - lam) * rr))
    return out


def central_weights(half_width: int, order: int) -> np.ndarray:
    """Central finite-difference weights on offsets ``-m..m`` for the ``order``-th derivative."""
    k = np.arange(-half_width, half_width + 1, dtype=float)
    A = np.vander(k, increasing=True).T
    rhs = np.zeros(k.size)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(A, rhs)


def equation_residual(
    params: Params,
    lam: float,
    f: TestFunction,
    x: float,
    quad: QuadratureSpec = QuadratureSpec(),
    h: float = 0.05,
    half_width: int = 4,
) -> float:
    """``|lam u - gamma x u'' - b u' - f|`` at ``x`` with ``u = R(lam) f`` and difference derivatives.

    The default nine-point stencil has truncation error ``O(h^8)``.
    """
    if not x - half_width * h >= 0:
        raise DomainError(f"stencil leaves the half-line at x={x}, h={h}")
    u = np.array(
        [resolve(ResolventQuery(params, lam, f, x + j * h, quad)).real for j in range(-half_width, half_width + 1)]
    )
    d1 = central_weights(half_width, 1) @ u / h
    d2 = central_weights(half_width, 2) @ u / (h * h)
    return abs(lam * u[half_width] - params.gamma * x * d2 - params.b * d1 - f.value(x))
