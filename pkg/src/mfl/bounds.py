"""Closed-form convergence-time and error bounds.

Every time formula yields a real ``T`` and the integer iteration budget
``T_eta = 1 + floor(max(0, T))``. Both are returned as a :class:`TimeBound`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

from scipy import integrate, optimize

from .errors import InvalidInputs, UnreachableTime


@dataclass(frozen=True)
class TimeBound:
    T: float
    T_eta: int


def _budget(T: float) -> TimeBound:
    return TimeBound(T, 1 + math.floor(max(0.0, T)))


@dataclass(frozen=True)
class ContractionInputs:
    alpha1: float
    d0: float
    eta: float

    def __post_init__(self):
        if not 0 < self.alpha1 < 1:
            raise InvalidInputs("alpha1 must lie in (0, 1)")
        if not self.d0 >= 0:
            raise InvalidInputs("d0 must be nonnegative")
        if not self.eta > 0:
            raise InvalidInputs("eta must be positive")


def contraction_time(inp: ContractionInputs) -> TimeBound:
    """Picard budget for an ``alpha1``-contraction started ``d0`` away from its fixed point."""
    if inp.d0 == 0:
        return _budget(-math.inf)
    T = math.log(inp.d0 / (inp.eta * (1 - inp.alpha1))) / math.log(1 / inp.alpha1)
    return _budget(T)


def nonexpansive_time(d0: float, eta: float) -> TimeBound:
    if not d0 >= 0 or not eta > 0:
        raise InvalidInputs("need d0 >= 0 and eta > 0")
    return _budget(16 * d0**2 / (eta**2 * math.pi))


def residual_bound(scale: float, lam: Union[float, Callable[[int], float], Sequence[float]], t: int, bounded: bool = True) -> float:
    """Asymptotic-regularity bound on ``|x_t - f(x_t)|`` for Mann iteration of a nonexpansive map.

    ``scale`` is the domain diameter when ``bounded`` (the default), otherwise
    the distance from the start to the fixed-point set, in which case the
    bound doubles.
    """
    if t < 1:
        raise InvalidInputs("t must be >= 1")
    if callable(lam):
        lams = [float(lam(s)) for s in range(1, t + 1)]
    elif isinstance(lam, (int, float)):
        lams = [float(lam)] * t
    else:
        lams = [float(v) for v in lam][:t]
        if len(lams) < t:
            raise InvalidInputs("schedule shorter than t")
    if any(not 0 < v < 1 for v in lams):
        raise InvalidInputs("step sizes must lie in (0, 1)")
    total = math.fsum(v * (1 - v) for v in lams)
    factor = 1.0 if bounded else 2.0
    return factor * scale / math.sqrt(math.pi * total)


@dataclass(frozen=True)
class PseudocontractiveParams:
    L: float
    k: float
    s: float | None = None  # carried for completeness; no formula uses it

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidInputs("Lipschitz constant must be positive")
        if not 0 < self.k < 1:
            raise InvalidInputs("k must lie in (0, 1)")

    @property
    def lam_bar(self) -> float:
        return self.k / ((self.L + 1) * (self.L + 2 - self.k))

    @property
    def lam_star(self) -> float:
        return -1 + math.sqrt(1 + self.lam_bar)

    def rho(self, lam: float) -> float:
        c = (self.L + 1) * (self.L + 2 - self.k)
        return (1 + (1 - self.k) * lam + c * lam**2) / (1 + lam)


@dataclass(frozen=True)
class PseudocontractiveTime:
    lam_star: float
    rho_star: float
    bound: TimeBound


def pseudocontractive_time(p: PseudocontractiveParams, d0: float, eta: float) -> PseudocontractiveTime:
    if not d0 > 0 or not eta > 0:
        raise InvalidInputs("need d0 > 0 and eta > 0")
    lam = p.lam_star
    rho = p.rho(lam)
    if not 0 < rho < 1:
        raise InvalidInputs(f"rho(lam*) = {rho} is not in (0, 1)")
    T = math.log(d0 / eta) / math.log(1 / rho)
    return PseudocontractiveTime(lam, rho, _budget(T))


@dataclass(frozen=True)
class SpeedupInputs:
    eta0: float
    eta_star: float
    c2: float
    o: int

    def __post_init__(self):
        if not 0 < self.eta0 < 1:
            raise InvalidInputs("eta0 must lie in (0, 1)")
        if not self.eta_star > 0:
            raise InvalidInputs("eta_star must be positive")
        if not 0 < self.c2 < 1:
            raise InvalidInputs("c2 must lie in (0, 1)")
        if int(self.o) != self.o or self.o < 1:
            raise InvalidInputs("o must be a positive integer")


def speedup_time(inp: SpeedupInputs) -> TimeBound:
    """Iteration budget of an order-``(o+1)`` scheme with error recursion ``e' <= c2 e**(o+1)``."""
    scale = inp.c2 ** (1.0 / inp.o)
    num_arg = inp.eta_star * scale
    den_arg = inp.eta0 * scale
    if num_arg >= 1 or den_arg >= 1:
        raise InvalidInputs("eta * c2**(1/o) must be below 1 for both eta0 and eta_star")
    T = math.log(math.log(1 / num_arg) / math.log(1 / den_arg)) / math.log(inp.o + 1)
    return _budget(T)


def speedup_error(inp: SpeedupInputs, t: int) -> float:
    q = (inp.o + 1) ** t
    return inp.c2 ** ((q - 1) / inp.o) * inp.eta0**q


class ConstantRate:
    def __init__(self, lam: float):
        if not lam > 0:
            raise InvalidInputs("constant rate must be positive")
        self.lam = float(lam)

    def __call__(self, s: float) -> float:
        return self.lam

    def integral(self, t: float) -> float:
        return self.lam * t


class ExponentialRate:
    """``lam_s = exp(s)``."""

    def __call__(self, s: float) -> float:
        return math.exp(s)

    def integral(self, t: float) -> float:
        return math.expm1(t)


def clock(rate: Callable[[float], float], t: float) -> float:
    """``g(t) = integral of rate over [0, t]``."""
    if hasattr(rate, "integral"):
        return rate.integral(t)
    val, _ = integrate.quad(rate, 0.0, t, epsabs=1e-13, epsrel=1e-10, limit=200)
    return val


def rescaled_time(T_a: float, rate: Callable[[float], float]) -> float:
    """Time at which ``db/dt = rate(t) f(b)`` has covered ``T_a`` units of ``da/dt = f(a)``.

    Closed forms for :class:`ConstantRate` and :class:`ExponentialRate`;
    otherwise ``g(t) = T_a`` is solved by bisection on adaptive quadrature.
    """
    if not T_a > 0:
        raise InvalidInputs("T_a must be positive")
    if isinstance(rate, ConstantRate):
        return T_a / rate.lam
    if isinstance(rate, ExponentialRate):
        return math.log(T_a + 1)
    hi = 1.0
    for _ in range(60):
        if clock(rate, hi) >= T_a:
            break
        hi *= 2
    else:
        raise UnreachableTime(f"integral of the rate stays below T_a={T_a}")
    return optimize.bisect(lambda t: clock(rate, t) - T_a, 0.0, hi, xtol=1e-12, rtol=1e-12, maxiter=500)


def rescaled_solution(a_of: Callable[[float], float], rate: Callable[[float], float], t: float) -> float:
    """``b_t = a_{g(t)}``: the time-changed trajectory."""
    return a_of(clock(rate, t))
