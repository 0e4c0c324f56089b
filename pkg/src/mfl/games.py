"""Aggregative games, their mean-field limits and the worked examples.

In an aggregative game player ``j`` best-responds to the mean action of the
others, ``m~_j = (n * m_n - a_j) / (n - 1)``, where ``m_n`` is the population
mean. Players update simultaneously from the same observed mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from . import accel
from .errors import DerivativeVanishes, DomainViolation, NoCriticalPoint
from .fixpoint import IterationMap, Schedule, StopRule


def others_mean(mean, a_j, n: int):
    """Mean action of everybody but ``j`` given the population mean."""
    if n < 2:
        raise ValueError("need at least two players")
    return (n * mean - a_j) / (n - 1)


@dataclass(frozen=True)
class AggregativeGame:
    """``n`` players with actions in ``[lower, upper]``.

    ``best_response`` is vectorised over players: it receives the array of
    others' means ``m~`` (one entry per player) and returns the array of
    best responses ``f_j(m~_j)``. ``payoff`` (optional) maps an action
    profile to the payoff vector and is only used for reporting.
    """

    n: int
    lower: float
    upper: float
    best_response: Callable[[np.ndarray], np.ndarray]
    payoff: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("an aggregative game needs n >= 2")
        if not self.lower <= self.upper:
            raise ValueError("empty action interval")

    def respond(self, m_tilde: np.ndarray) -> np.ndarray:
        out = np.asarray(self.best_response(np.asarray(m_tilde, dtype=float)), dtype=float)
        if out.shape != (self.n,):
            out = np.broadcast_to(out, (self.n,)).copy()
        if np.any(out < self.lower) or np.any(out > self.upper) or np.any(~np.isfinite(out)):
            raise DomainViolation("a best response left the action interval")
        return out


@dataclass(frozen=True)
class MeanFieldGame:
    response: Callable[[float], float]
    lower: float
    upper: float
    payoff: Callable[[float, float], float] | None = None

    def as_map(self) -> IterationMap:
        lo, hi = self.lower, self.upper
        f = self.response
        return IterationMap.from_scalar(lambda m: min(hi, max(lo, f(m))), lo, hi)


@dataclass(frozen=True)
class RoundLog:
    """Per-round record of a population run.

    ``actions[t, j]`` is player ``j``'s action in round ``t``; ``aggregate[t]``
    the observed mean. ``reads`` lists, per player, the local quantities the
    update rule consulted (filled by the satisfaction learners).
    """

    actions: np.ndarray
    aggregate: np.ndarray
    payoffs: np.ndarray | None = None
    residuals: np.ndarray | None = None
    stop_reason: str = "max_iters"
    reads: tuple = field(default=())

    def check_aggregate(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.actions.mean(axis=1) - self.aggregate)) <= tol)


def play_rounds(
    game: AggregativeGame,
    schedule: Schedule | Sequence[Schedule],
    a0,
    T: int,
) -> RoundLog:
    """Simultaneous mean-field response for ``T`` rounds.

    One schedule is shared by all players; a sequence gives each player its
    own step sizes. Supported kinds: picard, mann, ishikawa.
    """
    n = game.n
    scheds = [schedule] * n if isinstance(schedule, Schedule) else list(schedule)
    if len(scheds) != n:
        raise ValueError("need one schedule per player")
    if any(s.kind == "reverse_ishikawa" for s in scheds):
        raise ValueError("reverse_ishikawa is not a population scheme here")
    ishikawa = np.array([s.kind == "ishikawa" for s in scheds])
    a = np.asarray(a0, dtype=float).copy()
    if a.shape != (n,):
        raise ValueError(f"a0 must have {n} entries")
    if np.any(a < game.lower) or np.any(a > game.upper):
        raise DomainViolation("a0 outside the action interval")
    actions = [a.copy()]
    means = [float(a.mean())]
    payoffs = [game.payoff(a)] if game.payoff else None
    for t in range(1, T + 1):
        steps = np.array([s.at(t) for s in scheds])
        lam, mu = steps[:, 0], steps[:, 1]
        m_tilde = (n * means[-1] - a) / (n - 1)
        br = game.respond(m_tilde)
        new = lam * br + (1.0 - lam) * a
        if ishikawa.any():
            y = mu * br + (1.0 - mu) * a
            inner = lam * game.respond(y) + (1.0 - lam) * a
            new = np.where(ishikawa, inner, new)
        a = new
        actions.append(a.copy())
        means.append(float(a.mean()))
        if payoffs is not None:
            payoffs.append(game.payoff(a))
    return RoundLog(
        np.array(actions),
        np.array(means),
        None if payoffs is None else np.array(payoffs),
    )


# --- resource sharing ---------------------------------------------------


def resource_sharing_response(c: float, p: float, eps: float, n: int, m_tilde):
    """Best demand against others' mean demand ``m_tilde``.

    With ``S = eps + (n - 1) m_tilde`` this is ``[sqrt(c S / p) - S]_+``.
    """
    s = eps + (n - 1) * np.asarray(m_tilde, dtype=float)
    out = np.maximum(np.sqrt((c / p) * s) - s, 0.0)
    return float(out) if out.ndim == 0 else out


def resource_sharing_payoff(c: float, p: float, eps: float, a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    total = eps + a.sum()
    # nobody demands anything: the resource goes unused
    share = a / total if total > 0 else np.zeros_like(a)
    return c * share - p * a


def resource_sharing_cap(c: float, p: float) -> float:
    """Largest possible best response, ``c / (4 p)``."""
    return c / (4 * p)


def resource_sharing_map(c: float = 1.0, p: float = 1.0, eps: float = 0.0, n: int = 10) -> IterationMap:
    """Symmetric-profile response ``a -> f(a)`` on ``[0, c/(4p)]``."""
    return IterationMap.from_scalar(lambda a: resource_sharing_response(c, p, eps, n, a), 0.0, resource_sharing_cap(c, p))


def resource_sharing_game(
    n: int,
    c: float = 1.0,
    p: float = 1.0,
    eps: float = 0.0,
    congestion: int | None = None,
) -> AggregativeGame:
    """Resource-sharing game with ``n`` players.

    ``congestion`` is the player count used inside the response formula. It
    defaults to ``n``; holding it fixed while ``n`` grows keeps the response
    map unchanged, which is how the finite-population runs are compared to
    their mean-field limit (the formula itself has no finite limit in ``n``).
    """
    k = n if congestion is None else congestion
    return AggregativeGame(
        n,
        0.0,
        resource_sharing_cap(c, p),
        lambda m: resource_sharing_response(c, p, eps, k, m),
        None if congestion is not None else (lambda a: resource_sharing_payoff(c, p, eps, a)),
    )


# --- beauty contest -----------------------------------------------------


def beauty_contest_response(mu: float, p: float, M: float, m):
    """``min(M, mu + p m)`` clamped below at 0."""
    out = np.clip(mu + p * np.asarray(m, dtype=float), 0.0, M)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Equilibrium:
    value: float | None
    boundary: bool
    every_point: bool = False


def beauty_equilibrium(mu: float, p: float, M: float) -> Equilibrium:
    if p < 1:
        v = min(M, max(0.0, mu / (1 - p)))
    elif p > 1 or mu > 0:
        v = M
    else:
        return Equilibrium(None, False, every_point=True)
    return Equilibrium(v, not 0 < v < M)


def beauty_contest_payoff(R: float, kappa: float, mu: float, p: float, a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return R - kappa * np.abs(a - (mu + p * a.mean()))


def prize_payoff(alpha: float, p: float, a) -> np.ndarray:
    """Winner-take-all contest: the prize is split among those closest to ``p * mean``."""
    a = np.asarray(a, dtype=float)
    gap = np.abs(a - p * a.mean())
    winners = gap == gap.min()
    return alpha * winners / winners.sum()


def chi_response(chi: Callable[[float], float], M: float, m: float) -> float:
    return min(M, max(0.0, chi(m)))


def sqrt_chi(m: float) -> float:
    return math.sqrt(2 * m + 3)


# --- social optimum -----------------------------------------------------


def social_objective(h: Callable[[float], float], price: float) -> Callable[[float], float]:
    return lambda z: z * h(z) - price * z


@dataclass(frozen=True)
class SocialOptimum:
    z: float
    value: float
    method: str
    degenerate: bool = False


def social_optimize(
    h: Callable[[float], float],
    price: float,
    interval: tuple[float, float],
    stop: StopRule = StopRule(tol=1e-12, max_iters=100),
    h_prime: Callable[[float], float] | None = None,
) -> SocialOptimum:
    """Critical point of ``z h(z) - price z`` on ``interval``.

    Newton on the derivative of the objective first; bounded Brent/golden
    search when Newton fails or leaves the interval.
    """
    lo, hi = map(float, interval)
    if not lo < hi:
        raise ValueError("interval must be nonempty")
    obj = social_objective(h, price)
    grid = np.linspace(lo, hi, 33)
    vals = np.array([obj(z) for z in grid])
    if np.ptp(vals) <= 1e-12 * max(1.0, float(np.max(np.abs(vals)))):
        mid = 0.5 * (lo + hi)
        return SocialOptimum(mid, obj(mid), "constant", degenerate=True)

    def dobj(z):
        if h_prime is not None:
            return h(z) + z * h_prime(z) - price
        step = max(1e-6, 1e-6 * abs(z))
        return (obj(z + step) - obj(z - step)) / (2 * step)

    start = float(grid[np.argmax(vals)])
    problem = accel.RootProblem(dobj, (), lo, hi)
    try:
        traj = accel.householder_iterate(problem, 1, start, stop)
        if traj.stop_reason == "residual_below_tol":
            z = float(traj.values[-1])
            return SocialOptimum(z, obj(z), "newton")
    except DerivativeVanishes:
        pass
    res = optimize.minimize_scalar(lambda z: -obj(z), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    z = float(res.x)
    edge = 1e-6 * (hi - lo)
    if z - lo < edge or hi - z < edge:
        raise NoCriticalPoint("no interior critical point on the interval")
    return SocialOptimum(z, obj(z), "golden")
