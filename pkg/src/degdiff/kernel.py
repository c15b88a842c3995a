r"""Transition kernel of ``A u = gamma x u'' + b u'`` on ``[0, inf)``.

With ``beta = b / gamma``, ``s = x / (gamma t)`` and ``z = y / (gamma t)`` the
absolutely continuous part of the kernel is

.. math::
    \gamma t\, p(x, y, t) = z^{\beta - 1} e^{-(\sqrt s - \sqrt z)^2}\, \tilde S(\beta, s z),

which is the Bessel form ``(x/y)^{(1-beta)/2} e^{-(x+y)/(gamma t)} I_{beta-1}(...)``
with the exponential scaling pulled out. For ``b = 0`` the process is
absorbed at the origin with probability ``exp(-s)``.

Integrals against the kernel are taken in the ``z`` variable. When the
kernel family has an algebraic factor ``z^{beta-1}`` at the origin it is
absorbed into a Gauss-Jacobi panel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError
from .quadrature import QuadratureSpec, integrate
from .specialfn import scaled_series_S


@dataclass(frozen=True)
class Params:
    """Diffusion scale ``gamma > 0`` and drift ``b >= 0``."""

    gamma: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise DomainError(f"gamma must be finite and positive, got {self.gamma}")
        if not (math.isfinite(self.b) and self.b >= 0):
            raise DomainError(f"b must be finite and nonnegative, got {self.b}")

    @property
    def beta(self) -> float:
        return self.b / self.gamma

    def shifted(self, k: int) -> "Params":
        """The drift-shifted operator with ``b + k gamma``."""
        return Params(self.gamma, self.b + k * self.gamma)


@dataclass(frozen=True)
class KernelEval:
    density: float
    atom: float
    log_density: float


def _check_xt(x, t):
    if not (math.isfinite(x) and x >= 0):
        raise DomainError(f"x must be finite and nonnegative, got {x}")
    if not (math.isfinite(t) and t > 0):
        raise DomainError(f"t must be finite and positive, got {t}")


def log_density_z(beta: float, s, z):
    """``log(gamma t p)`` in scaled variables, broadcasting ``s`` and ``z`` (``z > 0``)."""
    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=float)
    s, z = np.broadcast_arrays(s, z)
    gauss = -(np.sqrt(s) - np.sqrt(z)) ** 2
    u = (s * z).ravel()
    with np.errstate(divide="ignore"):
        if beta == 0.0:
            tail = np.log(scaled_series_S(2.0, u)).reshape(s.shape)
            return np.log(s) + gauss + tail
        tail = np.log(scaled_series_S(beta, u)).reshape(s.shape)
        return (beta - 1.0) * np.log(z) + gauss + tail


def density(params: Params, x: float, y: float, t: float) -> KernelEval:
    """Kernel value at ``(x, y, t)`` with ``y > 0``, plus the atom at the origin."""
    _check_xt(x, t)
    if not (math.isfinite(y) and y > 0):
        raise DomainError(f"y must be finite and positive, got {y}")
    gt = params.gamma * t
    log_d = float(log_density_z(params.beta, x / gt, y / gt)) - math.log(gt)
    atom = math.exp(-x / gt) if params.b == 0.0 else 0.0
    return KernelEval(math.exp(log_d), atom, log_d)


def density_array(params: Params, x, y, t: float) -> np.ndarray:
    """Vectorised absolutely continuous density; ``x`` and ``y`` broadcast."""
    gt = params.gamma * t
    return np.exp(log_density_z(params.beta, np.asarray(x) / gt, np.asarray(y) / gt)) / gt


def atom_mass(params: Params, x: float, t: float) -> float:
    _check_xt(x, t)
    return math.exp(-x / (params.gamma * t)) if params.b == 0.0 else 0.0


# ---------------------------------------------------------------------------
# Integration against the kernel
# ---------------------------------------------------------------------------

def _family(beta: float, s: float, z: np.ndarray, shifts: Sequence[int]):
    """Smooth parts ``h_j`` with ``p^{beta+j}(z) = z**power * h_j(z)``.

    Returns ``(power, values)`` where ``values`` has shape ``(len(shifts), n)``
    and ``power`` is ``None`` when no algebraic weight is factored out.
    """
    g = np.exp(-(math.sqrt(s) - np.sqrt(z)) ** 2)
    u = s * z
    rows = []
    if beta == 0.0:
        for j in shifts:
            if j == 0:
                rows.append(s * g * scaled_series_S(2.0, u))
            else:
                rows.append(z ** (j - 1) * g * scaled_series_S(float(j), u))
        return None, np.array(rows)
    if beta >= 1.0 and float(beta).is_integer():
        for j in shifts:
            rows.append(z ** (beta - 1.0 + j) * g * scaled_series_S(beta + j, u))
        return None, np.array(rows)
    for j in shifts:
        rows.append(z ** j * g * scaled_series_S(beta + j, u))
    return beta - 1.0, np.array(rows)


def z_window(s: float, beta: float) -> tuple[float, list[float]]:
    """Truncation point and interior breakpoints for a kernel with mode parameter ``s``.

    The kernel is a Poisson(s) mixture of Gamma(m + beta) laws; cutting the
    mixture index at ``s + 12 sqrt(s) + 40`` and each gamma law a further
    ``12 sqrt(k) + 40`` beyond its shape leaves a tail far below 1e-20.
    """
    k = s + 12.0 * math.sqrt(s) + 40.0 + beta
    zmax = k + 12.0 * math.sqrt(k) + 40.0
    mean = s + beta
    sd = math.sqrt(2.0 * s + beta) if (2.0 * s + beta) > 0 else 1.0
    pts = [mean + c * sd for c in (-12, -6, -3, -1, 0, 1, 3, 6, 12)]
    return zmax, [p for p in pts if 0.0 < p < zmax]


def expect(
    params: Params,
    x: float,
    t: float,
    g: Callable[[np.ndarray], np.ndarray],
    quad: QuadratureSpec,
    *,
    shifts: Sequence[int] = (0,),
    center: float = 0.0,
    y_breaks: Iterable[float] = (),
    rel_tol: float = 0.0,
    y_max: float | None = None,
    combine: np.ndarray | None = None,
) -> np.ndarray:
    """``int p^{b + j gamma}(x, y, t) (g(y) - center) dy`` for each shift ``j``.

    The atom of the ``b = 0`` kernel is included. ``g`` must accept arrays.
    Subtracting ``center`` (e.g. ``g(0)`` or ``g(x)``) keeps the integrand
    small where the kernel is large. ``y_max`` restricts the integral to
    ``[0, y_max]`` (for compactly supported ``g``). ``combine`` is an
    optional matrix applied to the shift rows inside the integrand, so that
    the error control acts on the combinations (e.g. finite differences
    across shifts) rather than on the individual integrals.
    """
    _check_xt(x, t)
    gt = params.gamma * t
    s = x / gt
    beta = params.beta
    jmax = max(shifts)
    zmax, pts = z_window(s, beta + jmax)
    for y in y_breaks:
        if y > 0:
            pts.append(y / gt)
    for c in (0.01, 0.1, 1.0, 10.0):
        pts.append(c / gt)
    if y_max is not None:
        zmax = min(zmax, y_max / gt)
    pts = [p for p in pts if 0.0 < p < zmax]
    breaks = [0.0] + sorted(pts) + [zmax]

    def integrand(z):
        _, vals = _family(beta, s, z, shifts)
        if combine is not None:
            vals = combine @ vals
        return vals * (g(gt * z) - center)

    power, _ = _family(beta, s, np.array([1.0]), shifts)
    res = integrate(
        integrand,
        breaks,
        abs_tol=quad.tol,
        rel_tol=rel_tol,
        max_nodes=quad.max_nodes,
        endpoint_power=power,
    )
    nrows = len(shifts) if combine is None else combine.shape[0]
    out = np.array(res.value, dtype=float).reshape(nrows)
    if beta == 0.0 and 0 in shifts:
        atom = math.exp(-s) * (float(g(np.array([0.0]))[0]) - center)
        j = list(shifts).index(0)
        if combine is None:
            out[j] += atom
        else:
            out += combine[:, j] * atom
    return out


def normalization_defect(params: Params, x: float, t: float, quad: QuadratureSpec | None = None) -> float:
    """``|atom + int_0^inf p(x, y, t) dy - 1|`` by quadrature."""
    quad = quad or QuadratureSpec()
    _check_xt(x, t)
    if params.b == 0.0 and x == 0.0:
        return 0.0
    mass = expect(params, x, t, np.ones_like, quad)[0]
    return abs(mass - 1.0)


def chapman_kolmogorov_defect(
    params: Params, x: float, y: float, s: float, t: float, quad: QuadratureSpec | None = None
) -> float:
    """``|p(x, y, t+s) - [atom_t(x) p(0, y, s) + int p(x, w, t) p(w, y, s) dw]|``."""
    quad = quad or QuadratureSpec()
    _check_xt(x, t)
    if not (y > 0 and s > 0):
        raise DomainError("need y > 0 and s > 0")
    lhs = density(params, x, y, t + s).density
    gs = params.gamma * s
    spread = math.sqrt(2.0 * gs * y + gs * gs * (params.beta + 1.0))
    breaks = [y + c * spread for c in (-6, -3, -1, 0, 1, 3, 6)]

    def second_leg(w):
        return density_array(params, w, y, s)

    rhs = expect(params, x, t, second_leg, quad, y_breaks=breaks)[0]
    # the atom of the first leg is already counted by ``expect`` through g(0)
    return abs(lhs - rhs)
