import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from mfl import bounds
from mfl.accel import newton_iterate
from mfl.errors import InvalidInputs, UnreachableTime
from mfl.fixpoint import StopRule
from mfl.reproduce import quadratic_root


def first_passage(alpha, d0, eta):
    x, t = d0, 0
    while abs(x) > eta:
        x *= alpha
        t += 1
    return t


def test_contraction_example_half():
    tb = bounds.contraction_time(bounds.ContractionInputs(0.5, 1.0, 1e-4))
    assert tb.T == pytest.approx(math.log2(20000), rel=1e-14)
    assert tb.T_eta == 15


def test_contraction_clamps():
    tb = bounds.contraction_time(bounds.ContractionInputs(0.5, 1.0, 2.0))
    assert tb.T <= 0 and tb.T_eta == 1
    assert bounds.contraction_time(bounds.ContractionInputs(0.5, 0.0, 1e-3)).T_eta == 1


def test_contraction_slow_rate():
    # ln(2 / (1e-6 * 0.1)) / ln(1/0.9) = 163.5...
    tb = bounds.contraction_time(bounds.ContractionInputs(0.9, 2.0, 1e-6))
    assert tb.T == pytest.approx(math.log(2e7) / math.log(1 / 0.9), rel=1e-14)
    assert tb.T_eta == 1 + math.floor(tb.T)
    assert first_passage(0.9, 2.0, 1e-6) <= tb.T_eta


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
@pytest.mark.parametrize("d0", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("eta", [1e-2, 1e-6])
def test_contraction_dominance(alpha, d0, eta):
    tb = bounds.contraction_time(bounds.ContractionInputs(alpha, d0, eta))
    assert first_passage(alpha, d0, eta) <= tb.T_eta


@pytest.mark.parametrize("bad", [(0.0, 1, 1), (1.0, 1, 1), (0.5, -1, 1), (0.5, 1, 0)])
def test_contraction_rejects(bad):
    with pytest.raises(InvalidInputs):
        bounds.ContractionInputs(*bad)


def test_nonexpansive_examples():
    tb = bounds.nonexpansive_time(1.0, 0.1)
    assert tb.T == pytest.approx(16 / (0.01 * math.pi))
    assert tb.T_eta == 510
    assert bounds.nonexpansive_time(0.0, 0.1).T_eta == 1
    with pytest.raises(InvalidInputs):
        bounds.nonexpansive_time(1.0, 0.0)


def test_residual_bound_examples():
    assert bounds.residual_bound(1.0, 0.5, 100) == pytest.approx(1 / math.sqrt(25 * math.pi), rel=1e-14)
    assert bounds.residual_bound(1.0, lambda t: 0.5, 100) == bounds.residual_bound(1.0, [0.5] * 100, 100)
    assert bounds.residual_bound(1.0, 0.5, 100, bounded=False) == 2 * bounds.residual_bound(1.0, 0.5, 100)
    with pytest.raises(InvalidInputs):
        bounds.residual_bound(1.0, 1.0, 10)
    with pytest.raises(InvalidInputs):
        bounds.residual_bound(1.0, [0.5], 10)


def test_pseudocontractive_example():
    p = bounds.PseudocontractiveParams(1.0, 0.5)
    assert p.lam_bar == pytest.approx(0.1)
    assert p.lam_star == pytest.approx(math.sqrt(1.1) - 1)
    out = bounds.pseudocontractive_time(p, 1.0, 1e-3)
    assert out.rho_star == pytest.approx(0.98809, abs=1e-5)
    assert abs(out.bound.T_eta - 577) <= 1
    assert bounds.pseudocontractive_time(p, 1.0, 2.0).bound.T_eta == 1


def test_pseudocontractive_lam_star_minimizes_rho():
    p = bounds.PseudocontractiveParams(2.0, 0.3)
    grid = np.linspace(1e-4, 0.2, 2001)
    assert p.rho(p.lam_star) <= min(p.rho(v) for v in grid) + 1e-15


def test_speedup_examples():
    inp = bounds.SpeedupInputs(0.5, 1e-4, 0.9, 1)
    tb = bounds.speedup_time(inp)
    assert tb.T == pytest.approx(math.log(math.log(1 / 9e-5) / math.log(1 / 0.45)) / math.log(2), rel=1e-14)
    assert tb.T_eta == 4
    # unroll e' = c2 e^2 from 0.5
    e, t = 0.5, 0
    while e > 1e-4:
        e, t = 0.9 * e * e, t + 1
    assert t == tb.T_eta
    assert bounds.speedup_error(inp, 3) == pytest.approx(0.9**7 * 0.5**8, rel=1e-14)


def test_speedup_equal_errors():
    tb = bounds.speedup_time(bounds.SpeedupInputs(0.5, 0.5, 0.9, 2))
    assert tb.T == 0.0 and tb.T_eta == 1


def test_speedup_rejects_undefined_logs():
    with pytest.raises(InvalidInputs):
        bounds.SpeedupInputs(1.5, 1e-3, 0.5, 1)
    with pytest.raises(InvalidInputs):
        bounds.speedup_time(bounds.SpeedupInputs(0.5, 5.0, 0.5, 1))


def test_newton_errors_under_speedup_bound():
    c2 = 0.5 * 4 / (3 - 1) ** 3  # sup |h''| / 2 on [3, 3.4]
    inp = bounds.SpeedupInputs(0.4, 1e-15, c2, 1)
    traj = newton_iterate(quadratic_root(), 3.4, StopRule(tol=1e-300, max_iters=6))
    for t, v in enumerate(traj.values):
        assert abs(v - 3) <= bounds.speedup_error(inp, t) * (1 + 1e-12) + 1e-16


@given(st.floats(1e-8, 0.5), st.floats(1e-8, 0.5), st.floats(0.05, 0.95), st.floats(0.1, 10.0))
def test_contraction_monotone(e1, e2, alpha, d0):
    lo, hi = sorted((e1, e2))
    a = bounds.contraction_time(bounds.ContractionInputs(alpha, d0, lo)).T_eta
    b = bounds.contraction_time(bounds.ContractionInputs(alpha, d0, hi)).T_eta
    assert a >= b
    assert bounds.contraction_time(bounds.ContractionInputs(alpha, 2 * d0, lo)).T_eta >= a


@given(st.floats(1e-4, 1.0), st.floats(1e-4, 1.0), st.floats(0.0, 5.0))
def test_nonexpansive_monotone(e1, e2, d0):
    lo, hi = sorted((e1, e2))
    assert bounds.nonexpansive_time(d0, lo).T_eta >= bounds.nonexpansive_time(d0, hi).T_eta
    assert bounds.nonexpansive_time(d0 + 1, lo).T_eta >= bounds.nonexpansive_time(d0, lo).T_eta


@pytest.mark.parametrize(
    "rate,T_a,expected",
    [
        (bounds.ConstantRate(2.0), 10.0, 5.0),
        (bounds.ExponentialRate(), 10.0, math.log(11)),
        (lambda s: 1 + s, 4.0, 2.0),
    ],
)
def test_rescaled_time_examples(rate, T_a, expected):
    assert bounds.rescaled_time(T_a, rate) == pytest.approx(expected, rel=1e-9)


def test_rescaled_time_unreachable():
    with pytest.raises(UnreachableTime):
        bounds.rescaled_time(5.0, lambda s: math.exp(-s))


@pytest.mark.parametrize(
    "rate,method",
    [(bounds.ConstantRate(2.0), "RK45"), (bounds.ExponentialRate(), "Radau"), (lambda s: 1 + s, "RK45")],
)
def test_rescaling_matches_ode(rate, method):
    ts = np.linspace(0.0, 10.0, 201)
    sol = solve_ivp(lambda t, b: -rate(t) * b, (0, 10), [1.0], method=method, t_eval=ts, rtol=1e-10, atol=1e-12)
    closed = np.array([bounds.rescaled_solution(lambda s: math.exp(-s), rate, t) for t in ts])
    assert np.max(np.abs(sol.y[0] - closed)) <= 1e-6
