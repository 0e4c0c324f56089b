"""Root-finding speedups and sequence transformations.

Fixed points of ``f`` are roots of ``g(x) = f(x) - x``. The derivative-based
schemes (Newton, Halley, general Householder) and the secant method work on
``g``; Aitken's delta-squared process and Steffensen's restart scheme work
on the raw sequence / on ``f`` directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DerivativeVanishes,
    DomainViolation,
    FlatSecant,
    MissingDerivatives,
    NonmonotoneErrors,
    TooShort,
)
from .fixpoint import IterationMap, StopRule, Trajectory, project_box

TINY = 1e-300


@dataclass(frozen=True)
class RootProblem:
    """Scalar root problem ``g(x) = 0`` on ``[lower, upper]``.

    ``derivatives[k-1]`` evaluates ``g^(k)``. Missing first and second
    derivatives fall back to central differences with step
    ``max(1e-6, 1e-6 * |x|)`` (``max(1e-4, 1e-4 * |x|)`` for the second).

    ``seed_map`` is a fixed-point map whose fixed points are the roots of
    ``g``; the secant method draws its second seed from it. It defaults to
    ``g + id``.
    """

    g: Callable[[float], float]
    derivatives: tuple = ()
    lower: float = -math.inf
    upper: float = math.inf
    seed_map: Callable[[float], float] | None = None

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError("empty domain")
        object.__setattr__(self, "derivatives", tuple(self.derivatives))

    @classmethod
    def from_map(cls, fmap: IterationMap) -> "RootProblem":
        """Root form ``g = f - id`` of a scalar iteration map."""
        f = fmap.func.scalar_func  # type: ignore[attr-defined]
        derivs = list(fmap.derivatives)
        if derivs:
            d1 = derivs[0]
            derivs[0] = lambda x: d1(x) - 1.0
        return cls(lambda x: f(x) - x, tuple(derivs), float(fmap.lower[0]), float(fmap.upper[0]), f)

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper

    def stack(self, x: float, order: int) -> list[float]:
        """``[g(x), g'(x), ..., g^(order)(x)]``."""
        out = [float(self.g(x))]
        for k in range(1, order + 1):
            if k <= len(self.derivatives):
                out.append(float(self.derivatives[k - 1](x)))
            elif k == 1:
                h = max(1e-6, 1e-6 * abs(x))
                out.append((self.g(x + h) - self.g(x - h)) / (2 * h))
            elif k == 2:
                h = max(1e-4, 1e-4 * abs(x))
                out.append((self.g(x + h) - 2 * out[0] + self.g(x - h)) / (h * h))
            else:
                raise MissingDerivatives(f"order {order} needs g derivatives up to {order}")
        return out


def reciprocal_derivatives(gs: Sequence[float]) -> list[float]:
    """Derivatives of ``1/g`` from those of ``g`` via Leibniz on ``g * (1/g) = 1``."""
    g0 = gs[0]
    h = [1.0 / g0]
    for n in range(1, len(gs)):
        acc = sum(math.comb(n, k) * gs[k] * h[n - k] for k in range(1, n + 1))
        h.append(-acc / g0)
    return h


def _newton_step(gs, multiplicity):
    g0, g1 = gs[0], gs[1]
    if abs(g1) < TINY:
        raise DerivativeVanishes("g' vanishes")
    return -multiplicity * g0 / g1


def _halley_step(gs):
    g0, g1, g2 = gs[0], gs[1], gs[2]
    den = 2 * g1 * g1 - g0 * g2
    if abs(den) < TINY:
        raise DerivativeVanishes("Halley denominator vanishes")
    return -2 * g0 * g1 / den


def _householder_step(gs, order):
    h = reciprocal_derivatives(gs)
    if abs(h[order]) < TINY:
        raise DerivativeVanishes(f"(1/g)^({order}) vanishes")
    return order * h[order - 1] / h[order]


def householder_iterate(
    p: RootProblem,
    order: int,
    x0: float,
    stop: StopRule,
    multiplicity: float = 1.0,
    closed_form: bool = True,
) -> Trajectory:
    """Householder iteration of convergence order ``order + 1``.

    ``order=1`` is Newton (optionally with a multiplicity factor), ``order=2``
    Halley. With ``closed_form=False`` both use the generic ``1/g`` update,
    which is how the two forms are cross-checked.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if order >= 3 and len(p.derivatives) < order:
        raise MissingDerivatives(f"order {order} needs g derivatives up to {order}")
    x = float(x0)
    if not p.contains(x):
        raise DomainViolation(f"x0={x} outside [{p.lower}, {p.upper}]")
    xs, res, counts = [x], [], []
    evals = 0
    reason = "max_iters"
    t = 0
    while True:
        gs = p.stack(x, order)
        evals += order + 1
        res.append(abs(gs[0]))
        counts.append(evals)
        if res[-1] <= stop.tol:
            reason = "residual_below_tol"
            break
        if t >= stop.max_iters:
            break
        if order == 1 and closed_form:
            step = _newton_step(gs, multiplicity)
        elif order == 2 and closed_form:
            step = _halley_step(gs)
        else:
            step = _householder_step(gs, order)
        new = x + step
        if not p.contains(new) or not math.isfinite(new):
            reason = "domain_violation"
            break
        x = new
        xs.append(x)
        t += 1
    return Trajectory(np.array(xs), np.array(res), evals, reason, np.array(counts))


def newton_iterate(p: RootProblem, x0: float, stop: StopRule, multiplicity: float = 1.0) -> Trajectory:
    return householder_iterate(p, 1, x0, stop, multiplicity)


def halley_iterate(p: RootProblem, x0: float, stop: StopRule) -> Trajectory:
    return householder_iterate(p, 2, x0, stop)


def secant_iterate(p: RootProblem, x0: float, x1: float | None, stop: StopRule) -> Trajectory:
    """Two-point secant iteration; one new ``g`` evaluation per step.

    Without ``x1`` the second seed is ``p.seed_map(x0)``, which is
    ``g(x0) + x0`` unless the problem names its own map.
    """
    x_prev = float(x0)
    if not p.contains(x_prev):
        raise DomainViolation(f"x0={x_prev} outside [{p.lower}, {p.upper}]")
    g_prev = float(p.g(x_prev))
    evals = 1
    xs, res, counts = [x_prev], [abs(g_prev)], [evals]
    if res[0] <= stop.tol:
        return Trajectory(np.array(xs), np.array(res), evals, "residual_below_tol", np.array(counts))
    if x1 is not None:
        x = float(x1)
    elif p.seed_map is not None:
        x = float(p.seed_map(x_prev))
    else:
        x = g_prev + x_prev
    reason = "max_iters"
    t = 1
    while True:
        if not p.contains(x) or not math.isfinite(x):
            reason = "domain_violation"
            break
        gx = float(p.g(x))
        evals += 1
        xs.append(x)
        res.append(abs(gx))
        counts.append(evals)
        if res[-1] <= stop.tol:
            reason = "residual_below_tol"
            break
        if t >= stop.max_iters:
            break
        dg = gx - g_prev
        if abs(dg) < TINY:
            raise FlatSecant(f"g(x_t) - g(x_t-1) vanishes at t={t}")
        x, x_prev, g_prev = x - gx * (x - x_prev) / dg, x, gx
        t += 1
    return Trajectory(np.array(xs), np.array(res), evals, reason, np.array(counts))


def aitken_value(a: float, b: float, c: float) -> float:
    den = c - 2.0 * b + a
    if abs(den) < TINY:
        return c
    return a - (b - a) ** 2 / den


def aitken_transform(seq: Sequence[float]) -> list[float]:
    """Aitken delta-squared transform; output is two entries shorter."""
    seq = [float(s) for s in seq]
    if len(seq) < 3:
        raise TooShort("Aitken needs at least three terms")
    return [aitken_value(seq[t], seq[t + 1], seq[t + 2]) for t in range(len(seq) - 2)]


def steffensen_iterate(fmap: IterationMap, x0: float, stop: StopRule, project: bool = False) -> Trajectory:
    """Steffensen's method: two map steps, one Aitken combine, restart.

    The trajectory holds the outer iterates. The map value ``f(x)`` used to
    measure the residual of an outer iterate doubles as the first of its two
    map steps, so each outer iteration costs exactly two evaluations.
    """
    x = float(x0)
    if not fmap.contains([x]):
        raise DomainViolation(f"x0={x} outside the domain")
    lo, hi = float(fmap.lower[0]), float(fmap.upper[0])
    xs, res, counts, visited = [x], [], [], [x]
    evals = 0
    reason = "max_iters"
    t = 0
    while True:
        m1 = fmap.scalar(x)
        evals += 1
        res.append(abs(x - m1))
        counts.append(evals)
        visited.append(m1)
        if res[-1] <= stop.tol:
            reason = "residual_below_tol"
            break
        if t >= stop.max_iters:
            break
        m2 = fmap.scalar(m1)
        evals += 1
        visited.append(m2)
        y = aitken_value(x, m1, m2)
        if not lo <= y <= hi:
            if not project:
                raise DomainViolation(f"Aitken value {y} left the domain at t={t + 1}")
            y = float(project_box([y], [lo], [hi])[0])
        x = y
        xs.append(x)
        visited.append(x)
        t += 1
    return Trajectory(np.array(xs), np.array(res), evals, reason, np.array(counts), visited=tuple(visited))


@dataclass(frozen=True)
class OrderEstimate:
    order: float
    constant: float
    window: tuple = field(default=())


def estimate_order(errors: Sequence[float]) -> OrderEstimate:
    """Empirical order ``o`` and asymptotic constant from an error sequence.

    ``o`` is the median of ``log(e[t+1]/e[t]) / log(e[t]/e[t-1])``; the
    constant is the median of ``e[t+1] / e[t]**o``.
    """
    e = np.asarray(errors, dtype=float)
    if e.size < 4:
        raise TooShort("order estimation needs at least four errors")
    if np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise NonmonotoneErrors("errors must be finite and positive")
    if np.any(np.diff(e) >= 0):
        raise NonmonotoneErrors("errors must be strictly decreasing")
    le = np.log(e)
    ratios = (le[2:] - le[1:-1]) / (le[1:-1] - le[:-2])
    o = float(np.median(ratios))
    c = float(np.median(e[2:] / e[1:-1] ** o))
    return OrderEstimate(o, c, tuple(range(e.size)))


def positive_errors(values: Sequence[float], limit: float) -> list[float]:
    """``|x_t - limit|`` up to (not including) the first exact hit."""
    out = []
    for v in values:
        err = abs(float(v) - limit)
        if err == 0.0:
            break
        out.append(err)
    return out
