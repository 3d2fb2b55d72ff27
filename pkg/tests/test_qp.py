from __future__ import annotations

import numpy as np
import pytest

from helpers_mfplan import brute_force_objective
from mfplan.corridors import Corridor
from mfplan.errors import DimensionMismatch, EmptyPrefixBand
from mfplan.qp import BlockLayout, CostWeights, SolverConfig, SolverStatus, \
    build_qp, dump_problem, extract_plan, solve_qp
from mfplan.scenario import EgoState, Limits

LIM = Limits(v_max=2.0, a_min=-1.0, a_max=1.0, j_min=-5.0, j_max=5.0,
             s_max=1000.0)
REST = EgoState(0.0, 0.0, 0.0)


def free_corridor(T, s_max=1000.0):
    return Corridor(np.zeros(T), np.full(T, s_max))


def test_layout_variable_count():
    assert BlockLayout(T=20, t_d_steps=8, m=2).n == 128


def test_degenerate_single_future_full_lock():
    # m=1 with t_d = T-1 is a single-future MPC with a one-step suffix
    T = 6
    prob = build_qp([free_corridor(T)], [1.0], T - 1, REST, LIM, 1.0,
                    CostWeights())
    assert prob.layout.suffix_steps == 1
    sol = solve_qp(prob)
    assert sol.status is SolverStatus.OPTIMAL


def test_rest_zero_solution():
    prob = build_qp([free_corridor(5)], [1.0], 2, REST, LIM, 1.0,
                    CostWeights(w_v=1, w_a=1, w_j=1, w_disp=0))
    sol = solve_qp(prob)
    assert sol.status is SolverStatus.OPTIMAL
    assert sol.objective == pytest.approx(0.0, abs=1e-9)
    assert np.max(np.abs(sol.x)) < 1e-9


def test_contradictory_floor_infeasible():
    blocked = Corridor(np.full(5, 10.0), np.full(5, 1000.0))
    prob = build_qp([blocked], [1.0], 2, REST, LIM, 1.0, CostWeights())
    assert solve_qp(prob).status is SolverStatus.INFEASIBLE


def test_identical_corridors_identical_suffix_rows():
    T = 8
    c = Corridor(np.zeros(T), np.linspace(40, 90, T))
    prob = build_qp([c, c], [0.6, 0.4], 3, EgoState(0, 1, 0), LIM, 1.0,
                    CostWeights())
    lay = prob.layout
    for k in range(3, T):
        for ch in range(4):
            i0 = lay.suffix_var(0, k, ch)
            i1 = lay.suffix_var(1, k, ch)
            assert prob.l_box[i0] == prob.l_box[i1]
            assert prob.u_box[i0] == prob.u_box[i1]
    # duplicated blocks make the optimal face degenerate, which defeats the
    # polish step; solve tightly enough for the symmetry check
    sol = solve_qp(prob, SolverConfig(eps_abs=1e-9, eps_rel=1e-9))
    plan = extract_plan(sol, prob)
    assert np.max(np.abs(plan.suffixes[0] - plan.suffixes[1])) < 1e-6


def test_objective_matches_brute_force():
    w = CostWeights(w_v=0.1, w_a=0.4, w_j=0.1, w_disp=1.0)
    prob = build_qp([free_corridor(5)], [1.0], 2, REST, LIM, 1.0, w)
    sol = solve_qp(prob)
    assert sol.status is SolverStatus.OPTIMAL
    oracle = brute_force_objective(REST, LIM, w, T=5, dt=1.0)
    assert abs(sol.objective - oracle) <= 0.05 * abs(oracle)


def test_dynamics_residual_and_seam():
    w = CostWeights()
    dt = 0.5
    ego = EgoState(0.0, 1.5, 0.2)
    prob = build_qp([free_corridor(12), free_corridor(12)], [0.7, 0.3], 4,
                    ego, LIM, dt, w)
    sol = solve_qp(prob)
    plan = extract_plan(sol, prob)
    for i in range(2):
        tr = plan.full_trajectory(i)
        s, v, a = tr[:, 0], tr[:, 1], tr[:, 2]
        assert np.max(np.abs(s[1:] - (s[:-1] + v[:-1] * dt
                                      + 0.5 * a[:-1] * dt * dt))) < 1e-6
        assert np.max(np.abs(v[1:] - (v[:-1] + a[:-1] * dt))) < 1e-6
    s_p, v_p, a_p = plan.prefix[-1, 0], plan.prefix[-1, 1], plan.prefix[-1, 2]
    for sfx in plan.suffixes:
        assert abs(sfx[0, 0] - (s_p + v_p * dt + 0.5 * a_p * dt * dt)) < 1e-6
        assert abs(sfx[0, 1] - (v_p + a_p * dt)) < 1e-6


def test_inequalities_satisfied_at_optimum():
    w = CostWeights(w_disp=3.0)
    T = 10
    c = Corridor(np.zeros(T), np.minimum(4.0 + 0.8 * np.arange(T), 12.0))
    prob = build_qp([c], [1.0], 3, EgoState(0, 1.2, 0), LIM, 0.5, w)
    sol = solve_qp(prob)
    assert sol.status is SolverStatus.OPTIMAL
    assert np.all(sol.x >= prob.l_box - 1e-5)
    assert np.all(sol.x <= prob.u_box + 1e-5)
    assert np.max(np.abs(prob.A_eq @ sol.x - prob.b_eq)) < 1e-5
    # stationarity: the reported residuals passed the termination test
    scale = max(1.0, float(np.max(np.abs(sol.x))))
    assert sol.prim_res <= 1e-6 + 1e-6 * scale * 10
    assert sol.dual_res <= 1e-6 + 1e-6 * scale * 10


def test_probability_scaling_invariance():
    T = 10
    c1 = Corridor(np.zeros(T), np.full(T, 8.0))
    c2 = Corridor(np.zeros(T), np.full(T, 15.0))
    ego = EgoState(0.0, 1.0, 0.0)
    base = [0.8, 0.2]
    scaled = [p * 3.0 for p in base]
    total = sum(scaled)
    renorm = [p / total for p in scaled]
    sols = []
    for probs in (base, renorm):
        prob = build_qp([c1, c2], probs, 3, ego, LIM, 0.5, CostWeights())
        sols.append(solve_qp(prob))
    assert np.max(np.abs(sols[0].x - sols[1].x)) < 1e-6
    assert sols[0].objective == pytest.approx(sols[1].objective, abs=1e-8)


def test_reduction_to_single_future():
    T = 9
    c = Corridor(np.zeros(T), np.full(T, 10.0))
    ego = EgoState(0.0, 1.0, 0.0)
    multi = build_qp([c, c, c], [0.5, 0.3, 0.2], 3, ego, LIM, 0.5,
                     CostWeights())
    single = build_qp([c], [1.0], 3, ego, LIM, 0.5, CostWeights())
    tight = SolverConfig(eps_abs=1e-9, eps_rel=1e-9)
    sol_m = solve_qp(multi, tight)
    sol_s = solve_qp(single, tight)
    plan_m = extract_plan(sol_m, multi)
    plan_s = extract_plan(sol_s, single)
    for i in range(3):
        assert np.max(np.abs(plan_m.full_trajectory(i)
                             - plan_s.full_trajectory(0))) < 1e-5
    assert sol_m.objective == pytest.approx(sol_s.objective, abs=1e-6)


def test_empty_prefix_band_raises():
    T = 8
    lo = Corridor(np.zeros(T), np.full(T, 10.0))
    hi = Corridor(np.full(T, 40.0), np.full(T, 90.0))
    with pytest.raises(EmptyPrefixBand):
        build_qp([lo, hi], [0.5, 0.5], 3, EgoState(5.0, 1.0, 0.0), LIM, 0.5,
                 CostWeights())


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        build_qp([free_corridor(5), free_corridor(6)], [0.5, 0.5], 2, REST,
                 LIM, 1.0, CostWeights())
    with pytest.raises(DimensionMismatch):
        build_qp([free_corridor(5)], [1.0], 5, REST, LIM, 1.0, CostWeights())
    with pytest.raises(DimensionMismatch):
        build_qp([free_corridor(5)], [0.7], 2, REST, LIM, 1.0, CostWeights())


def test_max_iter_status():
    w = CostWeights(w_disp=2.0)
    prob = build_qp([free_corridor(20)], [1.0], 5, EgoState(0, 1, 0), LIM,
                    0.5, w)
    sol = solve_qp(prob, SolverConfig(eps_abs=1e-12, eps_rel=1e-12,
                                      max_iter=10))
    assert sol.status is SolverStatus.MAX_ITER


def test_ego_at_domain_floor_is_feasible():
    # sitting at s=0 (the path start) must not trip the safety shrink
    prob = build_qp([free_corridor(6)], [1.0], 2, REST, LIM, 1.0,
                    CostWeights(w_disp=0.0, w_a=1.0))
    assert solve_qp(prob).status is SolverStatus.OPTIMAL


def test_dump_problem(tmp_path):
    prob = build_qp([free_corridor(5)], [1.0], 2, REST, LIM, 1.0,
                    CostWeights())
    path = tmp_path / "qp.txt"
    dump_problem(prob, path)
    text = path.read_text()
    assert text.startswith(f"n {prob.n}\n")
    assert "layout T 5 t_d_steps 2 futures 1" in text
    assert "EQ " in text and "BOX " in text
