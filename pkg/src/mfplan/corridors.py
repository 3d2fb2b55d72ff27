"""Convex corridor generation on the discretized space-time graph.

Each obstacle rectangle admits an above/below choice; every assignment over
the obstacles that overlap the horizon yields one corridor of piecewise
(-constant, hence piecewise-linear) lower/upper station bounds. Bounds are
monotonized because the speed planner cannot reverse, and corridors whose
bounds cross are dropped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleCorridor
from .scenario import EgoState, Limits, STObstacle

_EPS = 1e-9


@dataclass(frozen=True)
class Corridor:
    """One convex feasible band over the horizon.

    `decision_bits` records the above(1)/below(0) choice per enumerated
    obstacle, least significant first (obstacle input order).
    """

    lb: np.ndarray
    ub: np.ndarray
    decision_bits: tuple[int, ...] = ()

    def __post_init__(self):
        lb = np.asarray(self.lb, dtype=float)
        ub = np.asarray(self.ub, dtype=float)
        lb.flags.writeable = False
        ub.flags.writeable = False
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        if lb.shape != ub.shape or lb.ndim != 1:
            raise ValueError("corridor bounds must be 1-D arrays of equal length")


@dataclass(frozen=True)
class CorridorSet:
    future_index: int
    corridors: tuple[Corridor, ...]


def obstacle_step_window(ob: STObstacle, dt: float, T: int):
    """Grid steps k with k*dt inside [t_in, t_out], or None if there are none."""
    k_in = int(np.ceil(ob.t_in / dt - _EPS))
    k_out = int(np.floor(ob.t_out / dt + _EPS))
    k_in = max(k_in, 0)
    k_out = min(k_out, T - 1)
    if k_in > k_out:
        return None
    return k_in, k_out


def monotonize(corridor: Corridor) -> Corridor:
    """Tighten bounds so a non-reversing profile sees the same feasible set.

    ub'[t] = min over z >= t of ub[z]; lb'[t] = max over z <= t of lb[z].
    """
    lb = np.maximum.accumulate(corridor.lb)
    ub = np.minimum.accumulate(corridor.ub[::-1])[::-1]
    if np.any(lb > ub):
        t = int(np.argmax(lb > ub))
        raise InfeasibleCorridor(
            f"bounds cross after monotonization at step {t}: "
            f"lb={lb[t]:g} > ub={ub[t]:g}")
    return Corridor(lb, ub, corridor.decision_bits)


def enumerate_corridors(obstacles, limits: Limits, dt: float, T: int):
    """All feasible monotonized corridors for one future's obstacle set.

    Order is stable by the binary encoding of the above/below assignment
    (below=0, above=1, obstacle index ascending in significance). Obstacles
    that do not overlap the horizon window, or that leave only one possible
    side, reduce the enumeration accordingly; output size is <= 2^k.
    """
    s_max = limits.s_max
    active = []  # (k_in, k_out, obstacle, allowed sides)
    for ob in obstacles:
        if ob.s_in > s_max or ob.s_out < 0:
            continue
        window = obstacle_step_window(ob, dt, T)
        if window is None:
            continue
        sides = []
        if ob.s_in > 0:
            sides.append(0)  # pass below: ceiling at s_in
        if ob.s_out < s_max:
            sides.append(1)  # pass above: floor at s_out
        if not sides:
            return []  # obstacle spans the whole band during its window
        active.append((window[0], window[1], ob, sides))

    base_lb = np.zeros(T)
    base_ub = np.full(T, float(s_max))
    if not active:
        return [Corridor(base_lb, base_ub)]

    # Walk the allowed side assignments in ascending binary-code order
    # (obstacle 0 is the least significant bit) without touching the codes
    # that single-sided obstacles rule out.
    out = []
    side_lists = [sides for (_, _, _, sides) in active]
    for rev_bits in itertools.product(*reversed(side_lists)):
        bits = rev_bits[::-1]
        lb = base_lb.copy()
        ub = base_ub.copy()
        for bit, (k_in, k_out, ob, _) in zip(bits, active):
            if bit == 0:
                np.minimum(ub[k_in:k_out + 1], ob.s_in, out=ub[k_in:k_out + 1])
            else:
                np.maximum(lb[k_in:k_out + 1], ob.s_out, out=lb[k_in:k_out + 1])
        try:
            out.append(monotonize(Corridor(lb, ub, tuple(bits))))
        except InfeasibleCorridor:
            continue
    return out


def intersect(corridors) -> Corridor:
    """Pointwise intersection band; may be empty (caller tests lb <= ub)."""
    corridors = list(corridors)
    if not corridors:
        raise ValueError("intersect needs at least one corridor")
    T = len(corridors[0].lb)
    if any(len(c.lb) != T for c in corridors):
        raise ValueError("corridors must share their horizon length")
    lb = np.max([c.lb for c in corridors], axis=0)
    ub = np.min([c.ub for c in corridors], axis=0)
    return Corridor(lb, ub)


def prune_infeasible(corridors, ego: EgoState, limits: Limits, dt: float):
    """Drop corridors the ego clearly cannot follow.

    Keeps corridors whose approximate profile exists from the ego start and
    whose lower bound stays inside the coarse reachability envelope
    s0 + v_max * t. Both checks are conservative in the keep direction
    (acceleration limits are ignored); the QP stays the exact feasibility
    arbiter.
    """
    from .profile import approximate_profile
    from .errors import Infeasible

    kept = []
    for c in corridors:
        try:
            approximate_profile(c.lb, c.ub, ego.s0)
        except Infeasible:
            continue
        envelope = ego.s0 + limits.v_max * dt * np.arange(c.lb.shape[0])
        if np.any(c.lb > envelope + _EPS):
            continue
        kept.append(c)
    return kept
