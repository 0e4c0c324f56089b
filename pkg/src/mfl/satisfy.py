"""Learning a satisfactory power profile in an interference network.

Player ``j`` is satisfied when its signal-to-interference-plus-noise ratio
reaches its target ``gamma_j``. Feasibility is decided by the nonnegative
matrix ``M`` and vector ``b`` for which the all-satisfied profile solves
``a = M a + b``:

    M[j, j'] = gamma_j * w[j, j'] * eps[j, j'] / w[j, j]   (j != j')
    b[j]     = gamma_j * N0 / w[j, j]

The learners only ever see their own action, own measured payoff and own
target; :class:`LocalView` enforces and records that.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import accel
from .errors import ZeroPayoff
from .fixpoint import IterationMap, Schedule, StopRule, Trajectory, iterate
from .games import RoundLog


@dataclass(frozen=True)
class SinrNetwork:
    """Gains ``w`` (``w[j, j']`` = power gain from ``j'`` to ``j``), cross
    factors ``eps``, noise ``N0``, targets ``gamma`` and power caps ``a_max``."""

    w: np.ndarray
    eps: np.ndarray
    N0: float
    gamma: np.ndarray
    a_max: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("gain matrix must be square")
        n = w.shape[0]
        eps = np.broadcast_to(np.asarray(self.eps, dtype=float), (n, n)).copy()
        gamma = np.broadcast_to(np.asarray(self.gamma, dtype=float), (n,)).copy()
        a_max = np.broadcast_to(np.asarray(self.a_max, dtype=float), (n,)).copy()
        if np.any(w < 0) or np.any(np.diag(w) <= 0):
            raise ValueError("gains must be nonnegative with positive own gain")
        off = ~np.eye(n, dtype=bool)
        if np.any(eps[off] <= 0):
            raise ValueError("cross factors must be positive")
        if not self.N0 > 0 or np.any(gamma <= 0) or np.any(a_max <= 0):
            raise ValueError("noise, targets and caps must be positive")
        for name, value in (("w", w), ("eps", eps), ("gamma", gamma), ("a_max", a_max)):
            value.flags.writeable = False
            object.__setattr__(self, name, value)
        object.__setattr__(self, "N0", float(self.N0))

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def cross(self) -> np.ndarray:
        """Effective cross gains ``w * eps`` with a zero diagonal."""
        g = self.w * self.eps
        np.fill_diagonal(g, 0.0)
        return g


@dataclass(frozen=True)
class SinrReading:
    values: np.ndarray
    satisfied: np.ndarray


def sinr(net: SinrNetwork, a, rtol: float = 0.0) -> SinrReading:
    """SINR of every player; ``satisfied`` means SINR >= target * (1 - rtol)."""
    a = np.asarray(a, dtype=float)
    if a.shape != (net.n,):
        raise ValueError(f"profile must have {net.n} entries")
    interference = net.N0 + net.cross @ a
    values = a * np.diag(net.w) / interference
    return SinrReading(values, values >= net.gamma * (1.0 - rtol))


# --- feasibility --------------------------------------------------------


def spectral_radius(A: np.ndarray, rtol: float = 1e-12, max_iters: int = 100_000) -> float:
    """Perron root of a nonnegative matrix by power iteration.

    Iterates on ``I + A`` from the all-ones vector, which removes the
    oscillation of cyclic matrices, and stops once the Collatz-Wielandt
    bounds ``min(Bx/x) <= 1 + rho <= max(Bx/x)`` agree to ``rtol``.
    """
    A = np.asarray(A, dtype=float)
    B = A + np.eye(A.shape[0])
    x = np.ones(A.shape[0])
    lo = hi = 1.0
    for _ in range(max_iters):
        y = B @ x
        support = x > 1e-300 * x.max()
        ratios = y[support] / x[support]
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= rtol * hi:
            break
        x = y / y.max()
    return max(0.0, 0.5 * (lo + hi) - 1.0)


@dataclass(frozen=True)
class FeasibilityReport:
    M: np.ndarray
    rho: float
    b: np.ndarray
    a_star: np.ndarray | None
    feasible: bool


def feasibility(net: SinrNetwork) -> FeasibilityReport:
    own = np.diag(net.w)
    M = (net.gamma / own)[:, None] * net.cross
    b = net.gamma * net.N0 / own
    rho = spectral_radius(M)
    a_star = None
    feasible = False
    if rho < 1:
        a_star = np.linalg.solve(np.eye(net.n) - M, b)
        feasible = bool(np.all(a_star > 0) and np.all(a_star <= net.a_max))
    return FeasibilityReport(M, rho, b, a_star, feasible)


# --- distributed learners ----------------------------------------------


class LocalView:
    """What one player may see in a round. Every attribute read is recorded."""

    _fields = ("action", "payoff", "target")

    def __init__(self, action: float, payoff: float, target: float):
        self._data = {"action": action, "payoff": payoff, "target": target}
        self.reads: set[str] = set()

    def __getattr__(self, name):
        if name not in LocalView._fields:
            raise AttributeError(f"players cannot read {name!r}")
        self.reads.add(name)
        return self._data[name]


def _satisfy_step(view: LocalView, lam: float) -> float:
    if view.payoff == 0:
        raise ZeroPayoff("realized payoff is zero; the update is undefined")
    a = view.action
    return lam * a * view.target / view.payoff + (1.0 - lam) * a


def _run_satisfy(
    net: SinrNetwork,
    a0,
    rate: Callable[[int], float],
    stop: StopRule,
    payoff_oracle: Callable[[np.ndarray], np.ndarray] | None,
) -> RoundLog:
    oracle = payoff_oracle or (lambda a: sinr(net, a).values)
    a = np.asarray(a0, dtype=float).copy()
    if a.shape != (net.n,):
        raise ValueError(f"a0 must have {net.n} entries")
    if np.any(a <= 0) or np.any(a > net.a_max):
        raise ValueError("a0 must lie in (0, a_max] componentwise")
    reads = [set() for _ in range(net.n)]
    actions, payoffs, residuals = [a.copy()], [], []
    reason = "max_iters"
    t = 0
    while True:
        r = np.asarray(oracle(a.copy()), dtype=float)
        lam = rate(t + 1)
        raw = np.empty(net.n)
        for j in range(net.n):
            view = LocalView(float(a[j]), float(r[j]), float(net.gamma[j]))
            raw[j] = _satisfy_step(view, lam)
            reads[j] |= view.reads
        new = np.clip(raw, 0.0, net.a_max)
        payoffs.append(r)
        residuals.append(float(np.max(np.abs(new - a))))
        if residuals[-1] <= stop.tol:
            capped = (a >= net.a_max) & (raw > net.a_max)
            reason = "cap_saturated" if capped.any() else "residual_below_tol"
            break
        if t >= stop.max_iters:
            break
        a = new
        actions.append(a.copy())
        t += 1
    acts = np.array(actions)
    return RoundLog(
        acts,
        acts.mean(axis=1),
        np.array(payoffs),
        np.array(residuals),
        reason,
        tuple(frozenset(s) for s in reads),
    )


def banach_picard_satisfy(
    net: SinrNetwork,
    a0,
    stop: StopRule = StopRule(),
    payoff_oracle: Callable[[np.ndarray], np.ndarray] | None = None,
) -> RoundLog:
    """Each player rescales its power by ``target / measured SINR``, then clips to its cap.

    ``residuals[t]`` is the largest power change the round-``t`` update
    would make; the run stops before applying it when that is within
    ``stop.tol``.
    """
    return _run_satisfy(net, a0, lambda t: 1.0, stop, payoff_oracle)


def reverse_ishikawa_satisfy(
    net: SinrNetwork,
    a0,
    lam: float | Callable[[int], float] = 5 / 3,
    stop: StopRule = StopRule(),
    payoff_oracle: Callable[[np.ndarray], np.ndarray] | None = None,
) -> RoundLog:
    """Over-relaxed update ``lam * a * target / r + (1 - lam) * a`` with ``1 <= lam < 2``."""
    rate = lam if callable(lam) else (lambda t: float(lam))

    def checked(t):
        v = float(rate(t))
        if not 1.0 <= v < 2.0:
            raise ValueError(f"lambda_{t} = {v} outside [1, 2)")
        return v

    return _run_satisfy(net, a0, checked, stop, payoff_oracle)


# --- mean-field version -------------------------------------------------


@dataclass(frozen=True)
class MeanFieldSinr:
    """Scalar limit: mean power ``m`` earns ``m / (N0 + alpha m)``."""

    gamma: float
    N0: float
    alpha: float
    a_max: float

    def __post_init__(self):
        if min(self.gamma, self.N0, self.alpha, self.a_max) <= 0:
            raise ValueError("all mean-field parameters must be positive")

    def payoff(self, m: float) -> float:
        return m / (self.N0 + self.alpha * m)

    @property
    def rho(self) -> float:
        return self.gamma * self.alpha

    def as_network(self) -> SinrNetwork:
        """Two symmetric players whose satisfaction problem matches the scalar one."""
        w = np.array([[1.0, self.alpha], [self.alpha, 1.0]])
        return SinrNetwork(w, 1.0, self.N0, self.gamma, self.a_max)

    def picard_map(self) -> IterationMap:
        g, n0, al, cap = self.gamma, self.N0, self.alpha, self.a_max
        return IterationMap.from_scalar(lambda m: min(cap, max(0.0, g * (n0 + al * m))), 0.0, cap)

    def blended_map(self, lam: float) -> IterationMap:
        g, n0, al, cap = self.gamma, self.N0, self.alpha, self.a_max
        slope = lam * g * al + 1.0 - lam
        return IterationMap.from_scalar(lambda m: min(cap, max(0.0, lam * g * n0 + slope * m)), 0.0, cap)


@dataclass(frozen=True)
class MeanFieldSolution:
    trajectory: Trajectory
    m_star: float | None
    interior: bool = field(default=False)


def meanfield_satisfy(
    mf: MeanFieldSinr,
    m0: float,
    scheme: str = "picard",
    stop: StopRule = StopRule(),
    lam: float = 5 / 3,
) -> MeanFieldSolution:
    """Run one scheme on the scalar satisfaction map.

    The reverse-Ishikawa run is Picard iteration of the blended map, so its
    residuals are measured against that map. Steffensen projects Aitken
    values back onto ``[0, a_max]``.
    """
    if not 0 <= m0 <= mf.a_max:
        raise ValueError("m0 must lie in [0, a_max]")
    if scheme == "picard":
        traj = iterate(mf.picard_map(), Schedule.picard(), m0, stop)
    elif scheme == "reverse_ishikawa":
        if not 1.0 <= lam < 2.0:
            raise ValueError("lam must lie in [1, 2)")
        traj = iterate(mf.blended_map(lam), Schedule.picard(), m0, stop)
    elif scheme == "steffensen":
        traj = accel.steffensen_iterate(mf.picard_map(), m0, stop, project=True)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    m_star = None
    interior = False
    if mf.rho < 1:
        m_star = mf.N0 * mf.gamma / (1.0 - mf.rho)
        interior = m_star <= mf.a_max
    return MeanFieldSolution(traj, m_star, interior)
