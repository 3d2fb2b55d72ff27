"""Closed-loop simulation: replan each step, reveal the true future, score.

The loop replans at every step over the shrinking remaining horizon,
executes the first step of the active plan's prefix, and collapses the
future set to the true future once the reveal time is reached. Collisions
are evaluated against the true future only.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import NoPlan
from .planner import PlannerConfig, PlanningSnapshot, plan as run_plan
from .qp import MultiFuturePlan
from .scenario import EgoState, FuturePrediction, ScenarioSpec, \
    sample_reveal_time, shift_future

POLICIES = ("delayed", "most_probable", "conservative", "expectation_unlocked")

COMPLETED = "Completed"
COLLISION = "Collision"
PLANNER_FAILURE = "PlannerFailure"


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    s: float
    v: float
    a: float
    j: float
    plan_id: int           # -1 while braking open-loop / after failure
    t_d_steps: int
    revealed: bool
    candidate_id: int
    feasible_bits: tuple[bool, ...]  # state vs each original future


@dataclass(frozen=True)
class SimTrace:
    records: tuple[StepRecord, ...]
    status: str
    dt: float
    true_future_index: int
    reveal_step: int
    cycle_times: tuple[float, ...]


@dataclass(frozen=True)
class Metrics:
    collision: bool
    final_displacement: float
    min_acceleration: float
    max_abs_jerk: float
    decision_delay_s: float
    cycle_times: tuple[float, ...]


def _blocked(futures, t: float, s: float):
    """Feasibility bit per future for a single executed (t, s) point."""
    return tuple(not any(ob.blocks(t, s) for ob in f.obstacles) for f in futures)


def _union_future(futures) -> FuturePrediction:
    obstacles = []
    for f in futures:
        for ob in f.obstacles:
            if ob not in obstacles:
                obstacles.append(ob)
    return FuturePrediction(1.0, tuple(obstacles), "conservative")


def _max_braking_step(s, v, a, limits, dt):
    """Jerk-limited hardest braking that does not drive the speed negative."""
    a_next = max(limits.a_min, a + limits.j_min * dt)
    if v + a_next * dt < 0.0:
        a_next = -v / dt
    j = (a_next - a) / dt
    s_next = s + v * dt + 0.5 * a_next * dt * dt
    v_next = max(0.0, v + a_next * dt)
    return s_next, v_next, a_next, j


def simulate(scenario: ScenarioSpec, policy: str, config: PlannerConfig,
             seed: int = 0) -> SimTrace:
    """Run one closed-loop episode and return its trace."""
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; choose from {POLICIES}")
    futures = tuple(scenario.joint_futures())
    true_future = futures[scenario.true_future_index]
    t_R = sample_reveal_time(scenario.reveal, seed)
    T = scenario.horizon_steps
    dt = scenario.dt
    limits = scenario.limits

    s, v, a = scenario.ego.s0, scenario.ego.v0, scenario.ego.a0
    j = 0.0
    records: list[StepRecord] = []
    cycle_times: list[float] = []
    status = COMPLETED
    last_plan: MultiFuturePlan | None = None
    plan_id = -1
    next_plan_id = 0
    braking = False

    for k in range(T - 1):
        revealed = k >= t_R
        t_now = k * dt
        window = T - k
        if revealed:
            base = (replace(true_future, probability=1.0),)
        else:
            base = futures
        if policy == "most_probable":
            pick = base[int(np.argmax([f.probability for f in base]))]
            base = (replace(pick, probability=1.0),)
        elif policy == "conservative":
            base = (_union_future(futures),)
        visible = tuple(shift_future(f, t_now) for f in base)

        cfg = replace(
            config,
            td_max_steps=max(1, min(config.td_max_steps, window - 1)),
            td_fixed_steps=max(1, min(config.td_fixed_steps, window - 1)))
        if policy == "expectation_unlocked":
            cfg = replace(cfg, td_mode="fixed", td_fixed_steps=1)

        snapshot = PlanningSnapshot(ego=EgoState(s, max(0.0, v), a),
                                    limits=limits, dt=dt,
                                    horizon_steps=window, futures=visible)
        t0 = time.perf_counter()
        current: MultiFuturePlan | None
        try:
            current = run_plan(snapshot, cfg, previous_plan=last_plan)
        except NoPlan:
            current = None
        cycle_times.append(time.perf_counter() - t0)

        if current is None and policy != "conservative":
            records.append(StepRecord(k, t_now, s, v, a, j, -1, 0, revealed,
                                      -1, _blocked(futures, t_now, s)))
            status = PLANNER_FAILURE
            return SimTrace(tuple(records), status, dt,
                            scenario.true_future_index, t_R,
                            tuple(cycle_times))

        if current is not None:
            if not current.degraded:
                plan_id = next_plan_id
                next_plan_id += 1
            braking = False
            records.append(StepRecord(k, t_now, s, v, a, j, plan_id,
                                      current.t_d_steps, revealed,
                                      current.candidate_id,
                                      _blocked(futures, t_now, s)))
            nxt = current.full_trajectory(current.most_probable_index)[1]
            s, v, a, j = float(nxt[0]), max(0.0, float(nxt[1])), \
                float(nxt[2]), float(nxt[3])
            last_plan = current
        else:
            # conservative fallback: maximum braking, open loop
            braking = True
            records.append(StepRecord(k, t_now, s, v, a, j, -1, 0, revealed,
                                      -1, _blocked(futures, t_now, s)))
            s, v, a, j = _max_braking_step(s, v, a, limits, dt)
            last_plan = None

        t_next = (k + 1) * dt
        if any(ob.blocks(t_next, s) for ob in true_future.obstacles):
            records.append(StepRecord(k + 1, t_next, s, v, a, j, plan_id,
                                      0 if braking else current.t_d_steps,
                                      k + 1 >= t_R, -1,
                                      _blocked(futures, t_next, s)))
            status = COLLISION
            return SimTrace(tuple(records), status, dt,
                            scenario.true_future_index, t_R,
                            tuple(cycle_times))

    k = T - 1
    records.append(StepRecord(k, k * dt, s, v, a, j, plan_id,
                              0 if (last_plan is None) else last_plan.t_d_steps,
                              k >= t_R, -1, _blocked(futures, k * dt, s)))
    return SimTrace(tuple(records), COMPLETED, dt,
                    scenario.true_future_index, t_R, tuple(cycle_times))


def evaluate_metrics(trace: SimTrace, scenario: ScenarioSpec) -> Metrics:
    """Summary metrics of one trace.

    The decision delay is the time the executed states stayed feasible for
    every original future, capped at the reveal time and the horizon end:
    the first moment the policy materially committed.
    """
    futures = scenario.joint_futures()
    true_future = futures[scenario.true_future_index]
    collision = any(
        any(ob.blocks(r.t, r.s) for ob in true_future.obstacles)
        for r in trace.records)
    s_first = trace.records[0].s
    s_last = trace.records[-1].s
    min_a = min(r.a for r in trace.records)
    max_j = max(abs(r.j) for r in trace.records)
    delay_steps = trace.records[-1].step
    for r in trace.records:
        if not all(r.feasible_bits):
            delay_steps = r.step
            break
    delay_steps = min(delay_steps, trace.reveal_step)
    return Metrics(collision=collision, final_displacement=s_last - s_first,
                   min_acceleration=min_a, max_abs_jerk=max_j,
                   decision_delay_s=delay_steps * trace.dt,
                   cycle_times=trace.cycle_times)


CSV_HEADER = "step,t,s,v,a,j,plan_id,t_d_steps,revealed,candidate_id,status"


def trace_to_csv(trace: SimTrace) -> str:
    """Deterministic CSV rendering: the last row carries the terminal status."""
    lines = [CSV_HEADER]
    last = len(trace.records) - 1
    for i, r in enumerate(trace.records):
        status = trace.status if i == last else "run"
        lines.append(
            f"{r.step},{r.t:.10g},{r.s:.10g},{r.v:.10g},{r.a:.10g},"
            f"{r.j:.10g},{r.plan_id},{r.t_d_steps},{int(r.revealed)},"
            f"{r.candidate_id},{status}")
    return "\n".join(lines) + "\n"
