"""Derivative-free learning by sinusoidal perturbation (extremum seeking).

Each player keeps a baseline ``a_hat`` and a virtual clock ``t_hat`` (the
running sum of its step sizes), plays

    a = a_hat + eps * sin(w * t_hat + phi)

and corrects the baseline using only the payoff value it observes. The
second-order variant additionally tracks an estimate ``d_hat`` of the
inverse Hessian of its payoff.

Step ``t`` (0-based) uses the clock value accumulated over steps ``0..t-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import OracleFailure

Payoff = Callable[[np.ndarray], np.ndarray]


def default_probe(phase: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """``(sin^2(phase) - 1) / eps^2``."""
    return (np.sin(phase) ** 2 - 1.0) / eps**2


def _vector(value, n: int, name: str) -> np.ndarray:
    out = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
    if out.shape != (n,):
        raise ValueError(f"{name} needs {n} entries")
    return out


@dataclass
class EscParams:
    """Per-player gains and perturbation settings.

    Scalars broadcast to all ``n`` players. ``step`` is either a constant or
    a callable ``t -> array`` of step sizes. Frequencies default to
    ``1 + j / (n + 1)`` for player ``j = 0..n-1`` so no two players share one.
    ``noise`` is the half-width of additive uniform payoff noise (0: none).
    """

    n: int = 1
    gain: object = 1.0
    amplitude: object = 0.1
    freq: object = None
    phase: object = 0.0
    step: object = 0.05
    washout: float = 0.5
    probe: Callable[[np.ndarray, np.ndarray], np.ndarray] = default_probe
    noise: float = 0.0
    seed: int = 0

    k: np.ndarray = field(init=False, repr=False)
    eps: np.ndarray = field(init=False, repr=False)
    w: np.ndarray = field(init=False, repr=False)
    phi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n
        self.k = _vector(self.gain, n, "gain")
        self.eps = _vector(self.amplitude, n, "amplitude")
        freq = 1.0 + np.arange(n) / (n + 1) if self.freq is None else self.freq
        self.w = _vector(freq, n, "freq")
        self.phi = _vector(self.phase, n, "phase")
        if np.any(self.eps <= 0) or np.any(self.w <= 0):
            raise ValueError("amplitudes and frequencies must be positive")
        if np.any(self.k < 0):
            raise ValueError("gains must be nonnegative")
        if not self.washout > 0:
            raise ValueError("washout gain must be positive")

    def steps(self, t: int) -> np.ndarray:
        lam = self.step(t) if callable(self.step) else self.step
        return _vector(lam, self.n, "step")


@dataclass(frozen=True)
class EscRun:
    """Trajectories of one run.

    ``baseline`` and ``clock`` have ``T + 1`` rows; ``actions`` and
    ``payoffs`` have ``T``. ``hessian_inv`` is set for second-order runs;
    ``diverged_at`` is the first step where ``|d_hat|`` exceeded 1e6.
    """

    baseline: np.ndarray
    actions: np.ndarray
    payoffs: np.ndarray
    clock: np.ndarray
    hessian_inv: np.ndarray | None = None
    diverged_at: int | None = None

    def tail_mean(self, fraction: float = 0.2) -> np.ndarray:
        start = int(round(len(self.baseline) * (1 - fraction)))
        return self.baseline[start:].mean(axis=0)


class _Clock:
    """Compensated running sum, so constant steps add up without drift."""

    def __init__(self, n: int):
        self.total = np.zeros(n)
        self.comp = np.zeros(n)

    def add(self, x: np.ndarray):
        s = self.total + x
        big = np.abs(self.total) >= np.abs(x)
        self.comp += np.where(big, (self.total - s) + x, (x - s) + self.total)
        self.total = s

    @property
    def value(self) -> np.ndarray:
        return self.total + self.comp


def _observe(oracle: Payoff, a: np.ndarray, params: EscParams, rng) -> np.ndarray:
    try:
        r = np.asarray(oracle(a.copy()), dtype=float)
    except Exception as exc:  # noqa: BLE001 - any oracle fault is reported uniformly
        raise OracleFailure(f"payoff oracle failed: {exc}") from exc
    r = np.broadcast_to(r, (params.n,)).astype(float)
    if params.noise:
        r = r + rng.uniform(-params.noise, params.noise, size=params.n)
    if not np.all(np.isfinite(r)):
        raise OracleFailure("payoff oracle returned a non-finite value")
    return r


def esc_first_order(oracle: Payoff, params: EscParams, a_hat0, T: int) -> EscRun:
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(params.seed)
    a_hat = _vector(a_hat0, params.n, "a_hat0")
    clk = _Clock(params.n)
    base, acts, pays, clocks = [a_hat.copy()], [], [], [clk.value.copy()]
    for t in range(T):
        lam = params.steps(t)
        wave = np.sin(params.w * clk.value + params.phi)
        a = a_hat + params.eps * wave
        r = _observe(oracle, a, params, rng)
        a_hat = a_hat + lam * params.k * r * params.eps * wave
        clk.add(lam)
        acts.append(a)
        pays.append(r)
        base.append(a_hat.copy())
        clocks.append(clk.value.copy())
    return EscRun(np.array(base), np.array(acts), np.array(pays), np.array(clocks))


def esc_second_order(oracle: Payoff, params: EscParams, a_hat0, d_hat0, T: int) -> EscRun:
    """Second-order variant with Hessian-inverse tracking.

    The ``d_hat`` recursion is applied as written, with no safeguard; if it
    runs past magnitude 1e6 the run stops there and records ``diverged_at``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(params.seed)
    a_hat = _vector(a_hat0, params.n, "a_hat0")
    d_hat = _vector(d_hat0, params.n, "d_hat0")
    if np.any(d_hat == 0) or not np.all(np.isfinite(d_hat)):
        raise ValueError("d_hat0 must be finite and nonzero")
    wc = params.washout
    clk = _Clock(params.n)
    base, acts, pays, clocks, ds = [a_hat.copy()], [], [], [clk.value.copy()], [d_hat.copy()]
    diverged = None
    for t in range(T):
        lam = params.steps(t)
        phase = params.w * clk.value + params.phi
        wave = np.sin(phase)
        a = a_hat + params.eps * wave
        r = _observe(oracle, a, params, rng)
        s = params.probe(phase, params.eps)
        a_hat = a_hat + lam * params.k * d_hat * r * (2.0 / params.eps) * wave
        d_hat = (1.0 + lam * wc) * d_hat + lam * (-wc * d_hat * s * r * d_hat)
        clk.add(lam)
        acts.append(a)
        pays.append(r)
        base.append(a_hat.copy())
        clocks.append(clk.value.copy())
        ds.append(d_hat.copy())
        if np.any(np.abs(d_hat) > 1e6) or not np.all(np.isfinite(d_hat)):
            diverged = t + 1
            break
    return EscRun(np.array(base), np.array(acts), np.array(pays), np.array(clocks), np.array(ds), diverged)
