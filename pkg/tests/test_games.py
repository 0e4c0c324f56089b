import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfl import games
from mfl.errors import DomainViolation, NoCriticalPoint
from mfl.fixpoint import Schedule, StopRule, detect_cycle, iterate


def test_others_mean_examples():
    assert games.others_mean(1.0, 1.0, 10) == 1.0
    assert games.others_mean(2.0, 5.0, 3) == 0.5
    a1, a2 = 0.3, 0.7
    assert games.others_mean((a1 + a2) / 2, a1, 2) == pytest.approx(a2, abs=1e-16)
    with pytest.raises(ValueError):
        games.others_mean(1.0, 1.0, 1)


def test_resource_sharing_response_examples():
    assert games.resource_sharing_response(1, 1, 0, 10, 0.09) == pytest.approx(0.09, abs=1e-15)
    assert games.resource_sharing_response(1, 1, 0, 10, 1.0) == 0.0
    assert games.resource_sharing_response(4, 1, 0, 2, 1.0) == 1.0


@given(st.floats(1e-3, 0.3), st.floats(0.5, 4.0), st.floats(0.5, 4.0), st.floats(0.0, 1.0))
def test_resource_sharing_best_response_beats_grid(m_tilde, c, p, eps):
    n = 5
    others = (n - 1) * m_tilde + eps
    br = games.resource_sharing_response(c, p, eps, n, m_tilde)

    def payoff(a):
        total = others + a
        return 0.0 if total == 0 else c * a / total - p * a

    grid = np.linspace(0.0, games.resource_sharing_cap(c, p), 201)
    assert payoff(br) >= max(payoff(a) for a in grid) - 1e-12


def test_picard_symmetric_run_approaches_fixed_point():
    game = games.resource_sharing_game(10)
    log = games.play_rounds(game, Schedule.mann(0.1), np.full(10, 0.005), 400)
    assert np.ptp(log.actions[-1]) == 0.0
    assert abs(log.actions[-1, 0] - 0.09) < 1e-8


def test_mann_large_step_cycles_in_population():
    game = games.resource_sharing_game(10)
    log = games.play_rounds(game, Schedule.mann(0.9), np.full(10, 0.005), 400)
    cyc = detect_cycle(log.actions[:, :1], tol=1e-9)
    assert cyc is not None and cyc.period >= 2


def test_mann_small_step_has_no_cycle():
    game = games.resource_sharing_game(10)
    log = games.play_rounds(game, Schedule.mann(0.1), np.full(10, 0.005), 400)
    assert detect_cycle(log.actions[:, :1], tol=1e-12) is None


@pytest.mark.parametrize("sched", [Schedule.picard(), Schedule.mann(0.3), Schedule.ishikawa(0.4, 0.6)])
def test_symmetric_run_equals_aggregate_map(sched):
    n = 10
    log = games.play_rounds(games.resource_sharing_game(n), sched, np.full(n, 0.005), 60)
    assert np.all(np.ptp(log.actions, axis=1) == 0.0)

    # scalar replay doing the population's others'-mean arithmetic
    def br(a):
        m = float(np.full(n, a).mean())
        return games.resource_sharing_response(1, 1, 0, n, (n * m - a) / (n - 1))

    a, replay = 0.005, [0.005]
    for t in range(1, 61):
        lam, mu = sched.at(t)
        if sched.kind == "ishikawa":
            y = mu * br(a) + (1 - mu) * a
            a = lam * games.resource_sharing_response(1, 1, 0, n, y) + (1 - lam) * a
        else:
            a = lam * br(a) + (1 - lam) * a
        replay.append(a)
    for j in range(n):
        assert np.array_equal(log.actions[:, j], replay)

    traj = iterate(games.resource_sharing_map(), sched, 0.005, StopRule(tol=1e-300, max_iters=20))
    k = len(traj)  # an exact fixed-point hit ends the scalar run early
    np.testing.assert_allclose(log.actions[:k, 0], traj.values, rtol=1e-12, atol=1e-15)


def test_gap_to_mean_field_shrinks_with_n():
    fmap = games.resource_sharing_map(n=10)
    mf = [0.005]
    for _ in range(20):
        mf.append(fmap.scalar(mf[-1]))
    gaps = []
    for n in (10, 100, 1000):
        game = games.resource_sharing_game(n, congestion=10)
        a0 = 0.005 + 0.004 * np.linspace(-1, 1, n)
        log = games.play_rounds(game, Schedule.picard(), a0, 20)
        gaps.append(np.max(np.abs(log.aggregate - np.array(mf))))
    assert gaps[0] > gaps[1] > gaps[2]


def test_aggregate_consistency():
    rng = np.random.default_rng(1)
    game = games.resource_sharing_game(7)
    log = games.play_rounds(game, Schedule.ishikawa(0.5, 0.5), rng.uniform(0, 0.2, 7), 50)
    assert log.check_aggregate(1e-12)
    assert log.payoffs.shape == (51, 7)


def test_heterogeneous_schedules():
    game = games.resource_sharing_game(3)
    scheds = [Schedule.picard(), Schedule.mann(0.5), Schedule.ishikawa(0.5, 0.5)]
    log = games.play_rounds(game, scheds, np.full(3, 0.05), 5)
    assert log.actions.shape == (6, 3)
    with pytest.raises(ValueError):
        games.play_rounds(game, scheds[:2], np.full(3, 0.05), 5)


def test_play_rounds_rejects_bad_start():
    with pytest.raises(DomainViolation):
        games.play_rounds(games.resource_sharing_game(3), Schedule.picard(), np.full(3, 5.0), 3)


def test_play_rounds_rejects_escaping_response():
    game = games.AggregativeGame(2, 0.0, 1.0, lambda m: 2 * m + 0.5)
    with pytest.raises(DomainViolation):
        games.play_rounds(game, Schedule.picard(), np.array([0.5, 0.5]), 3)


def test_beauty_examples():
    assert games.beauty_contest_response(0, 2 / 3, 100, 50) == pytest.approx(100 / 3)
    assert games.beauty_equilibrium(0, 2 / 3, 100).value == 0.0
    assert games.beauty_equilibrium(1, 0.5, 100).value == 2.0
    eq = games.beauty_equilibrium(0, 1.2, 100)
    assert eq.value == 100 and eq.boundary
    assert games.beauty_equilibrium(0, 1.0, 100).every_point


def test_beauty_iteration_reaches_zero():
    fmap = games.MeanFieldGame(lambda m: games.beauty_contest_response(0, 2 / 3, 100, m), 0.0, 100.0).as_map()
    traj = iterate(fmap, Schedule.picard(), 50.0, StopRule(tol=1e-12, max_iters=200))
    assert traj.final[0] < 1e-10


@given(st.floats(0.0, 10.0), st.floats(0.0, 0.99), st.floats(1.0, 200.0))
def test_beauty_equilibrium_is_fixed_point(mu, p, M):
    v = games.beauty_equilibrium(mu, p, M).value
    assert games.beauty_contest_response(mu, p, M, v) == pytest.approx(v, abs=1e-9 * max(1.0, M))


def test_chi_examples():
    assert games.chi_response(games.sqrt_chi, 10, 3.0) == 3.0
    assert games.chi_response(games.sqrt_chi, 10, 4.0) == pytest.approx(3.316624790, abs=1e-9)
    assert games.chi_response(lambda m: m, 10, 7.25) == 7.25


def test_chi_equilibrium_by_iteration():
    fmap = games.MeanFieldGame(games.sqrt_chi, 0.0, 10.0).as_map()
    traj = iterate(fmap, Schedule.picard(), 4.0, StopRule(tol=1e-12, max_iters=200))
    z = traj.final[0]
    assert abs(games.sqrt_chi(z) - z) <= 1e-10


@pytest.mark.parametrize("price,z,value", [(0.0, 0.5, 0.25), (0.5, 0.25, 0.0625)])
def test_social_optimize_examples(price, z, value):
    out = games.social_optimize(lambda x: 1 - x, price, (0.0, 1.0))
    assert out.z == pytest.approx(z, abs=1e-9)
    assert out.value == pytest.approx(value, abs=1e-12)


def test_social_optimize_constant():
    assert games.social_optimize(lambda x: 2.0, 2.0, (0.0, 1.0)).degenerate


def test_social_optimize_fallback_and_failure():
    # |z - 0.3| has no derivative at its peak; Newton on finite differences cannot settle
    out = games.social_optimize(lambda z: -abs(z - 0.3) / max(z, 1e-9), 0.0, (0.0, 1.0))
    assert out.z == pytest.approx(0.3, abs=1e-6)
    with pytest.raises(NoCriticalPoint):
        games.social_optimize(lambda z: 1.0 + z, 0.0, (0.0, 1.0))


def test_prize_payoff_splits_ties():
    out = games.prize_payoff(6.0, 2 / 3, [1.0, 1.0, 4.0])
    assert out.sum() == pytest.approx(6.0)
    assert out[0] == out[1] == 3.0
