from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfplan.corridors import Corridor, enumerate_corridors, intersect, \
    monotonize, obstacle_step_window, prune_infeasible
from mfplan.errors import InfeasibleCorridor
from mfplan.scenario import EgoState, Limits, STObstacle

LIM = Limits(v_max=10.0, a_min=-4.0, a_max=3.0, j_min=-6.0, j_max=6.0,
             s_max=100.0)


def grid_points_avoid_obstacles(corridor, obstacles, dt, T, ds=0.1):
    """Brute-force occupancy check at resolution dt x ds.

    Every grid point strictly inside the corridor band must lie outside
    every obstacle rectangle.
    """
    for k in range(T):
        t = k * dt
        lo, hi = corridor.lb[k], corridor.ub[k]
        if hi - lo < 2 * ds:
            continue
        ss = np.arange(lo + ds, hi - ds / 2, ds)
        for ob in obstacles:
            if ob.t_in <= t <= ob.t_out:
                inside = (ss > ob.s_in) & (ss < ob.s_out)
                if np.any(inside):
                    return False
    return True


def test_no_obstacles_single_corridor():
    out = enumerate_corridors((), LIM, 0.5, 10)
    assert len(out) == 1
    assert np.all(out[0].lb == 0.0)
    assert np.all(out[0].ub == 100.0)


def test_single_obstacle_two_corridors():
    obs = [STObstacle(2.0, 4.0, 10.0, 20.0)]
    out = enumerate_corridors(obs, LIM, 1.0, 10)
    assert len(out) == 2
    below, above = out
    assert below.decision_bits == (0,)
    assert np.array_equal(below.ub, [10.0] * 5 + [100.0] * 5)
    assert np.all(below.lb == 0.0)
    assert above.decision_bits == (1,)
    assert np.array_equal(above.lb, [0.0, 0.0] + [20.0] * 8)
    assert np.all(above.ub == 100.0)
    for c in out:
        assert grid_points_avoid_obstacles(c, obs, 1.0, 10)


def test_staircase_counts_k3():
    stair = [STObstacle(2 * i + 1, 2 * i + 2, 10.0 + 20 * i, 20.0 + 20 * i)
             for i in range(3)]
    assert len(enumerate_corridors(stair, LIM, 1.0, 10)) == 8


def test_out_of_window_and_band_obstacles_ignored():
    obs = [STObstacle(50.0, 60.0, 10.0, 20.0),       # beyond horizon
           STObstacle(1.0, 2.0, 150.0, 180.0)]       # above s_max
    out = enumerate_corridors(obs, LIM, 1.0, 10)
    assert len(out) == 1
    assert out[0].decision_bits == ()


def test_forced_sides_at_band_edges():
    # touches s=0: only "above" is enumerable; spans to s_max: only "below"
    obs = [STObstacle(1.0, 2.0, 0.0, 10.0), STObstacle(4.0, 5.0, 50.0, 100.0)]
    out = enumerate_corridors(obs, LIM, 1.0, 10)
    assert len(out) == 1
    assert out[0].decision_bits == (1, 0)


def test_full_blockage_returns_empty():
    obs = [STObstacle(1.0, 2.0, 0.0, 100.0)]
    assert enumerate_corridors(obs, LIM, 1.0, 10) == []


def test_obstacle_between_samples_constrains_nothing():
    window = obstacle_step_window(STObstacle(1.1, 1.4, 5.0, 9.0), 0.5, 10)
    assert window is None


def test_monotonize_fixed_point():
    c = Corridor(np.array([0.0, 1.0, 2.0]), np.array([5.0, 6.0, 7.0]))
    m = monotonize(c)
    assert np.array_equal(m.lb, c.lb)
    assert np.array_equal(m.ub, c.ub)


def test_monotonize_suffix_min():
    ub = np.array([100, 100, 10, 10, 100, 100, 100, 100, 100, 100.0])
    m = monotonize(Corridor(np.zeros(10), ub))
    assert np.array_equal(
        m.ub, [10, 10, 10, 10, 100, 100, 100, 100, 100, 100.0])


def test_monotonize_crossing_raises():
    lb = np.array([0.0, 30.0, 0.0])
    ub = np.full(3, 20.0)
    with pytest.raises(InfeasibleCorridor):
        monotonize(Corridor(lb, ub))


@given(st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_monotonize_idempotent(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(2, 30))
    lb = rng.uniform(0, 40, T)
    ub = lb + rng.uniform(5, 60, T)
    try:
        once = monotonize(Corridor(lb, ub))
    except InfeasibleCorridor:
        return
    twice = monotonize(once)
    assert np.array_equal(once.lb, twice.lb)
    assert np.array_equal(once.ub, twice.ub)


def test_intersect_identity():
    c = Corridor(np.zeros(5), np.full(5, 50.0))
    out = intersect([c])
    assert np.array_equal(out.lb, c.lb)
    assert np.array_equal(out.ub, c.ub)


def test_intersect_disjoint_bands_empty():
    c1 = Corridor(np.zeros(5), np.full(5, 20.0))
    c2 = Corridor(np.full(5, 40.0), np.full(5, 100.0))
    out = intersect([c1, c2])
    assert np.all(out.lb == 40.0)
    assert np.all(out.ub == 20.0)  # empty band, caller tests feasibility


def test_intersect_diverging_at_5():
    T = 10
    ub1 = np.where(np.arange(T) >= 5, 20.0, 100.0)
    lb2 = np.where(np.arange(T) >= 5, 40.0, 0.0)
    out = intersect([Corridor(np.zeros(T), ub1),
                     Corridor(lb2, np.full(T, 100.0))])
    feasible = out.lb <= out.ub
    assert np.all(feasible[:5])
    assert not np.any(feasible[5:])


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_intersect_commutative_associative(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(2, 15))
    cs = [Corridor(rng.uniform(0, 30, T), rng.uniform(40, 90, T))
          for _ in range(3)]
    a = intersect([cs[0], intersect([cs[1], cs[2]])])
    b = intersect([intersect([cs[0], cs[1]]), cs[2]])
    c = intersect([cs[2], cs[1], cs[0]])
    for other in (b, c):
        assert np.array_equal(a.lb, other.lb)
        assert np.array_equal(a.ub, other.ub)


def test_prune_unreachable_floor():
    # corridor requiring s >= 50 m at t = 1 s with v_max = 10, s0 = 0
    T, dt = 10, 1.0
    lb = np.where(np.arange(T) >= 1, 50.0, 0.0)
    c = monotonize(Corridor(lb, np.full(T, 100.0)))
    kept = prune_infeasible([c], EgoState(0.0, 5.0, 0.0), LIM, dt)
    assert kept == []


def test_prune_keeps_unconstrained():
    c = Corridor(np.zeros(10), np.full(10, 100.0))
    kept = prune_infeasible([c], EgoState(0.0, 5.0, 0.0), LIM, 1.0)
    assert kept == [c]


def test_prune_drops_crossing_bounds():
    c = Corridor(np.full(10, 30.0), np.full(10, 20.0))
    assert prune_infeasible([c], EgoState(25.0, 5.0, 0.0), LIM, 1.0) == []


def test_prune_drops_start_outside():
    c = Corridor(np.full(10, 30.0), np.full(10, 90.0))
    assert prune_infeasible([c], EgoState(0.0, 5.0, 0.0), LIM, 1.0) == []


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_enumeration_bound_and_avoidance(seed):
    rng = np.random.default_rng(seed)
    T, dt = 12, 0.5
    k = int(rng.integers(1, 5))
    obstacles = []
    for _ in range(k):
        t0 = float(rng.uniform(0, T * dt - 1))
        s0 = float(rng.uniform(2, 80))
        obstacles.append(STObstacle(t0, t0 + float(rng.uniform(0.3, 2.0)),
                                    s0, s0 + float(rng.uniform(2, 15))))
    out = enumerate_corridors(obstacles, LIM, dt, T)
    assert len(out) <= 2 ** k
    for c in out:
        assert np.all(c.lb <= c.ub)
        assert np.all(np.diff(c.lb) >= 0)
        assert np.all(np.diff(c.ub) >= 0)
        assert grid_points_avoid_obstacles(c, obstacles, dt, T)
