"""Fixed-point iteration engine.

Four learning schemes share one loop:

* ``picard``            x_{t+1} = f(x_t)
* ``mann``              x_{t+1} = lam_t f(x_t) + (1 - lam_t) x_t
* ``ishikawa``          y_t = mu_t f(x_t) + (1 - mu_t) x_t,
                        x_{t+1} = lam_t f(y_t) + (1 - lam_t) x_t
* ``reverse_ishikawa``  Mann step with lam_t in (1, 2), lam_t -> 1,
                        projected back onto the domain box

Distances are Euclidean throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DomainViolation, InsufficientHistory, InvalidSchedule, UnboundedDomain

RateLike = Union[float, Callable[[int], float]]

KINDS = ("picard", "mann", "ishikawa", "reverse_ishikawa")
STOP_REASONS = ("residual_below_tol", "max_iters", "cycle_detected", "domain_violation")


def _as_point(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float)).copy()


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


def distance(x, y) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


@dataclass(frozen=True)
class IterationMap:
    """A self-map of a box ``[lower_i, upper_i]``.

    ``func`` takes and returns a 1-d float array. Use :meth:`from_scalar` for
    maps of one real variable; those may also carry derivative evaluators
    (``derivatives[k-1]`` is the k-th derivative).
    """

    func: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    derivatives: tuple = ()
    is_scalar: bool = False

    def __post_init__(self):
        lo = _frozen(np.atleast_1d(self.lower))
        hi = _frozen(np.atleast_1d(self.upper))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("domain box needs matching bounds with lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "derivatives", tuple(self.derivatives))

    @classmethod
    def from_scalar(
        cls,
        func: Callable[[float], float],
        lower: float = -math.inf,
        upper: float = math.inf,
        derivatives: Sequence[Callable[[float], float]] = (),
    ) -> "IterationMap":
        def wrapped(x: np.ndarray) -> np.ndarray:
            return np.array([func(float(x[0]))], dtype=float)

        wrapped.scalar_func = func  # type: ignore[attr-defined]
        return cls(wrapped, np.array([lower]), np.array([upper]), tuple(derivatives), True)

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def scalar(self, x: float) -> float:
        """Evaluate a one-dimensional map on a plain float."""
        return float(self(np.array([x], dtype=float))[0])

    def derivative(self, k: int, x: float) -> float:
        return float(self.derivatives[k - 1](x))

    def __call__(self, x) -> np.ndarray:
        x = _as_point(x)
        y = _as_point(self.func(x))
        if y.shape != self.lower.shape:
            raise DomainViolation(f"map returned shape {y.shape}, expected {self.lower.shape}")
        if not self.contains(y):
            raise DomainViolation(f"f({x.tolist()}) = {y.tolist()} leaves the domain box")
        return y


def project_box(x, lower, upper) -> np.ndarray:
    """Componentwise clamp of ``x`` onto ``[lower, upper]``."""
    return np.minimum(np.asarray(upper, dtype=float), np.maximum(np.asarray(lower, dtype=float), _as_point(x)))


def _rate(value: RateLike) -> Callable[[int], float]:
    if callable(value):
        return value
    const = float(value)
    return lambda t: const


@dataclass(frozen=True)
class Schedule:
    """Step sizes ``lam(t)``, ``mu(t)`` for t = 1, 2, ... and the scheme kind.

    The boundary value lam = 1 is accepted for ``mann``, ``ishikawa`` and
    ``reverse_ishikawa``: it is the degenerate case that reduces each scheme
    to the plain Picard step.
    """

    kind: str
    lam: Callable[[int], float]
    mu: Callable[[int], float]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSchedule(f"unknown scheme kind {self.kind!r}")

    @classmethod
    def picard(cls) -> "Schedule":
        return cls("picard", _rate(1.0), _rate(0.0))

    @classmethod
    def mann(cls, lam: RateLike) -> "Schedule":
        return cls("mann", _rate(lam), _rate(0.0))

    @classmethod
    def ishikawa(cls, lam: RateLike, mu: RateLike) -> "Schedule":
        return cls("ishikawa", _rate(lam), _rate(mu))

    @classmethod
    def reverse_ishikawa(cls, lam: RateLike | None = None) -> "Schedule":
        if lam is None:
            lam = default_reverse_rate
        return cls("reverse_ishikawa", _rate(lam), _rate(0.0))

    def at(self, t: int) -> tuple[float, float]:
        lam, mu = float(self.lam(t)), float(self.mu(t))
        ok = {
            "picard": lam == 1.0 and mu == 0.0,
            "mann": 0.0 < lam <= 1.0 and mu == 0.0,
            "ishikawa": 0.0 < lam <= 1.0 and 0.0 <= mu <= 1.0,
            "reverse_ishikawa": 1.0 <= lam < 2.0 and mu == 0.0,
        }[self.kind]
        if not ok:
            raise InvalidSchedule(f"{self.kind} schedule violated at t={t}: lam={lam}, mu={mu}")
        return lam, mu


def default_reverse_rate(t: int) -> float:
    return 1.0 + (1.0 / 1.5) ** t


@dataclass(frozen=True)
class StopRule:
    tol: float = 1e-10
    max_iters: int = 1000
    cycle_check: bool = False
    max_period: int = 16
    cycle_tol: float = 1e-9

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class Cycle:
    period: int
    points: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Iterates ``x_0..x_T`` with residuals ``|x_t - f(x_t)|``.

    ``eval_counts[t]`` is the cumulative number of map evaluations spent when
    the residual of ``x_t`` became known; ``evaluations`` is the total.
    ``visited`` optionally lists every point a method touched, in order
    (Steffensen interleaves raw map steps with its Aitken restarts).
    """

    iterates: np.ndarray
    residuals: np.ndarray
    evaluations: int
    stop_reason: str
    eval_counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    cycle: Cycle | None = None
    visited: tuple = ()

    def __post_init__(self):
        its = np.asarray(self.iterates, dtype=float)
        if its.ndim == 1:
            its = its[:, None]
        object.__setattr__(self, "iterates", _frozen(its))
        object.__setattr__(self, "residuals", _frozen(self.residuals))
        counts = self.eval_counts
        if counts is None:
            counts = np.full(len(its), self.evaluations)
        counts = np.asarray(counts).astype(int)
        counts.setflags(write=False)
        object.__setattr__(self, "eval_counts", counts)
        if self.stop_reason not in STOP_REASONS:
            raise ValueError(f"unknown stop reason {self.stop_reason!r}")

    def __len__(self) -> int:
        return len(self.iterates)

    @property
    def values(self) -> np.ndarray:
        """Iterates as a flat array (one-dimensional maps)."""
        if self.iterates.shape[1] != 1:
            raise ValueError("values is only defined for scalar trajectories")
        return self.iterates[:, 0]

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]


def _find_cycle(points: Sequence[np.ndarray], max_period: int, tol: float) -> Cycle | None:
    n = len(points)
    for p in range(1, max_period + 1):
        if 5 * p > n:
            break
        window = np.asarray(points[n - 5 * p :])
        head, shifted = window[: 4 * p], window[p : 5 * p]
        if np.max(np.linalg.norm(head - shifted, axis=1)) > tol:
            continue
        steps = np.linalg.norm(window[1 : 4 * p + 1] - window[: 4 * p], axis=1)
        if np.min(steps) <= 10 * tol:
            continue
        return Cycle(p, _frozen(window[-p:].copy()))
    return None


def detect_cycle(traj: Trajectory | np.ndarray, max_period: int = 16, tol: float = 1e-9) -> Cycle | None:
    """Smallest period ``p <= max_period`` sustained over the last ``4p`` iterates.

    Consecutive iterates must also differ by more than ``10 * tol`` so that a
    converged (fixed-point) tail is never reported as a period-1 cycle.
    """
    points = traj.iterates if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if not tol > 0:
        raise ValueError("tol must be positive")
    if len(points) < 2 * max_period:
        raise InsufficientHistory(f"need at least {2 * max_period} iterates, got {len(points)}")
    return _find_cycle(list(points), max_period, tol)


def iterate(fmap: IterationMap, schedule: Schedule, x0, stop: StopRule) -> Trajectory:
    x = _as_point(x0)
    if not fmap.contains(x):
        raise DomainViolation(f"start point {x.tolist()} is outside the domain")
    kind = schedule.kind
    points = [x]
    residuals = []
    counts = []
    evals = 0
    cycle = None
    t = 0
    while True:
        fx = fmap(x)
        evals += 1
        residuals.append(distance(x, fx))
        counts.append(evals)
        if residuals[-1] <= stop.tol:
            reason = "residual_below_tol"
            break
        if stop.cycle_check:
            cycle = _find_cycle(points, stop.max_period, stop.cycle_tol)
            if cycle is not None:
                reason = "cycle_detected"
                break
        if t >= stop.max_iters:
            reason = "max_iters"
            break
        t += 1
        lam, mu = schedule.at(t)
        if kind == "picard":
            new = fx
        elif kind == "ishikawa":
            y = mu * fx + (1.0 - mu) * x
            fy = fmap(y)
            evals += 1
            new = lam * fy + (1.0 - lam) * x
        else:
            new = lam * fx + (1.0 - lam) * x
        if kind == "reverse_ishikawa":
            new = project_box(new, fmap.lower, fmap.upper)
        elif not fmap.contains(new):
            raise DomainViolation(f"{kind} update left the domain at t={t}")
        x = new
        points.append(x)
    return Trajectory(np.array(points), np.array(residuals), evals, reason, np.array(counts), cycle)


@dataclass(frozen=True)
class ConditionReport:
    """Sampled lower bounds on the contraction-type constants of a map.

    Every figure is a maximum over random pairs, so it can only under-state
    the true constant.
    """

    alpha1: float
    kannan_alpha2: float
    chatterjea_alpha3: float
    nonexpansive: bool
    n_pairs: int
    note: str = "sampled maxima: lower bounds on the true constants"


def sample_map_conditions(fmap: IterationMap, n_pairs: int = 1000, seed: int = 0) -> ConditionReport:
    if not fmap.bounded:
        raise UnboundedDomain("sampling needs a finite domain box")
    if n_pairs < 2:
        raise ValueError("n_pairs must be at least 2")
    rng = np.random.default_rng(seed)
    lo, hi = fmap.lower, fmap.upper
    a1s = rng.uniform(lo, hi, size=(n_pairs, lo.size))
    a2s = rng.uniform(lo, hi, size=(n_pairs, lo.size))
    q0 = q1 = q2 = 0.0
    for a1, a2 in zip(a1s, a2s):
        f1, f2 = fmap(a1), fmap(a2)
        num = distance(f1, f2)
        d12 = distance(a1, a2)
        kan = distance(a1, f1) + distance(a2, f2)
        cha = distance(a1, f2) + distance(a2, f1)
        if d12 > 0:
            q0 = max(q0, num / d12)
        if kan > 0:
            q1 = max(q1, num / kan)
        if cha > 0:
            q2 = max(q2, num / cha)
    return ConditionReport(q0, q1, q2, q0 <= 1.0 + 1e-12, n_pairs)
