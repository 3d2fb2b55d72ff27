"""One planning cycle: corridors, pairing, decision time, candidate QPs.

Also hosts the diagnostic evaluators for the expected reward, the
feasibility probability at the reveal time, and the entropy-regularized
objective. Planning itself uses the hard-constraint surrogate (shared
prefix through t_d), not the entropy term.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .corridors import Corridor, CorridorSet, enumerate_corridors, \
    obstacle_step_window, prune_infeasible
from .errors import EmptyPrefixBand, Infeasible, NoCorridor, NoFeasibleLock, \
    NoPlan, SeamViolation
from .profile import ApproxProfile, approximate_profile, sample_profile
from .qp import CostWeights, MultiFuturePlan, SolverConfig, SolverStatus, \
    DEFAULT_EPS_BAND, build_qp, extract_plan, solve_qp
from .scenario import EgoState, FuturePrediction, Limits


@dataclass(frozen=True)
class PlanningSnapshot:
    """Everything one planning cycle needs to know about the world."""

    ego: EgoState
    limits: Limits
    dt: float
    horizon_steps: int
    futures: tuple[FuturePrediction, ...]

    def __post_init__(self):
        object.__setattr__(self, "futures", tuple(self.futures))
        total = math.fsum(f.probability for f in self.futures)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"future probabilities sum to {total:g}")


@dataclass(frozen=True)
class PlannerConfig:
    td_mode: str = "exact"          # "exact" | "fixed"
    td_fixed_steps: int = 4
    td_max_steps: int = 10_000      # clamped to the horizon at use
    weights: CostWeights = field(default_factory=CostWeights)
    solver: SolverConfig = field(default_factory=SolverConfig)
    eps_band: float = DEFAULT_EPS_BAND

    def __post_init__(self):
        if self.td_mode not in ("exact", "fixed"):
            raise ValueError(f"unknown td_mode {self.td_mode!r}")
        if not 1 <= self.td_fixed_steps <= self.td_max_steps:
            raise ValueError("need 1 <= td_fixed_steps <= td_max_steps")


@dataclass(frozen=True)
class CandidateTuple:
    """One corridor chosen per future, plus the profiles that paired them."""

    corridor_indices: tuple[int, ...]
    corridors: tuple[Corridor, ...]
    profiles: tuple[ApproxProfile, ...]
    distance: float


@dataclass(frozen=True)
class Trajectory:
    """Per-step (s, v, a, j) over the horizon."""

    states: np.ndarray  # (T, 4)

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError("trajectory states must be a (T, 4) array")
        if np.any(arr[:, 1] < -1e-9):
            raise ValueError("trajectory speed must be >= 0")
        arr.flags.writeable = False
        object.__setattr__(self, "states", arr)

    @property
    def s(self):
        return self.states[:, 0]

    @property
    def v(self):
        return self.states[:, 1]

    @property
    def a(self):
        return self.states[:, 2]

    @property
    def j(self):
        return self.states[:, 3]


def pair_corridors(corridor_sets, ego: EgoState, anchor: int):
    """One candidate tuple per anchor corridor, pairing by profile distance.

    For every other future the corridor whose sampled approximate profile has
    the smallest squared-error distance to the anchor's profile is selected
    (ties to the lower corridor index). This reduces the cross product of
    per-future corridor choices to the anchor's corridor count.
    """
    sets = list(corridor_sets)
    m = len(sets)
    if not 0 <= anchor < m:
        raise ValueError(f"anchor {anchor} out of range for {m} futures")
    usable: list[list[tuple[int, Corridor, ApproxProfile, np.ndarray]]] = []
    for cs in sets:
        entries = []
        for idx, c in enumerate(cs.corridors):
            try:
                prof = approximate_profile(c.lb, c.ub, ego.s0)
            except Infeasible:
                continue
            entries.append((idx, c, prof, sample_profile(prof, len(c.lb))))
        if not entries:
            raise NoCorridor(cs.future_index)
        usable.append(entries)

    out = []
    for a_idx, a_corr, a_prof, a_samp in usable[anchor]:
        indices = [0] * m
        corrs: list[Corridor] = [None] * m
        profs: list[ApproxProfile] = [None] * m
        indices[anchor], corrs[anchor], profs[anchor] = a_idx, a_corr, a_prof
        total = 0.0
        for i in range(m):
            if i == anchor:
                continue
            dists = [float(np.sum((samp - a_samp) ** 2))
                     for _, _, _, samp in usable[i]]
            best = int(np.argmin(dists))
            idx, c, prof, _ = usable[i][best]
            indices[i], corrs[i], profs[i] = idx, c, prof
            total += dists[best]
        out.append(CandidateTuple(tuple(indices), tuple(corrs),
                                  tuple(profs), total))
    return out


PROBE_EPS = 1e-4  # feasibility probes need a status, not a polished optimum


def _lock_feasible(corridors, L: int, ego, limits, dt, config) -> bool:
    """Can all futures stay jointly feasible for the first L steps?

    Probabilities do not affect the feasible set, so a uniform weighting is
    used, and the solve runs at a coarse tolerance since only the status
    matters.
    """
    m = len(corridors)
    uniform = [1.0 / m] * m
    try:
        prob = build_qp(corridors, uniform, L, ego, limits, dt,
                        config.weights, eps_band=config.eps_band)
    except EmptyPrefixBand:
        return False
    probe = SolverConfig(eps_abs=max(config.solver.eps_abs, PROBE_EPS),
                         eps_rel=max(config.solver.eps_rel, PROBE_EPS),
                         max_iter=config.solver.max_iter)
    return solve_qp(prob, probe).status is SolverStatus.OPTIMAL


def compute_decision_time(tup: CandidateTuple, ego: EgoState, limits: Limits,
                          dt: float, config: PlannerConfig) -> int:
    """Lock length (steps) for this corridor tuple.

    Exact mode binary-searches the largest feasible lock; fixed mode checks
    the configured lock once and halves it on infeasibility. Feasibility of a
    lock of length L implies feasibility of any shorter lock, which is what
    makes the binary search valid.
    """
    T = tup.corridors[0].lb.shape[0]
    L_max = min(config.td_max_steps, T - 1)

    def feasible(L: int) -> bool:
        return _lock_feasible(tup.corridors, L, ego, limits, dt, config)

    if config.td_mode == "fixed":
        L = min(config.td_fixed_steps, L_max)
        while L >= 1:
            if feasible(L):
                return L
            L //= 2
        raise NoFeasibleLock("no feasible shared prefix even at one step")

    if not feasible(1):
        raise NoFeasibleLock("no feasible shared prefix even at one step")
    if L_max == 1 or feasible(L_max):
        return L_max
    lo, hi = 1, L_max  # feasible(lo), not feasible(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _evaluate_candidate(tid, tup, snapshot, config, probabilities):
    try:
        td = compute_decision_time(tup, snapshot.ego, snapshot.limits,
                                   snapshot.dt, config)
    except NoFeasibleLock:
        return None
    try:
        prob = build_qp(tup.corridors, probabilities, td, snapshot.ego,
                        snapshot.limits, snapshot.dt, config.weights,
                        eps_band=config.eps_band)
    except EmptyPrefixBand:
        return None
    sol = solve_qp(prob, config.solver)
    if sol.status is not SolverStatus.OPTIMAL:
        return None
    try:
        plan = extract_plan(sol, prob)
    except SeamViolation:
        return None
    return replace(plan, candidate_id=tid)


def shift_plan(plan: MultiFuturePlan) -> MultiFuturePlan:
    """Previous plan re-indexed one step later, flagged degraded.

    While shared prefix steps remain, drop the executed one; once they run
    out, commit to the previous most-probable suffix as a single-future plan
    (the backup plan).
    """
    if plan.prefix.shape[0] >= 2:
        return replace(plan, prefix=plan.prefix[1:],
                       t_d_steps=plan.t_d_steps - 1, degraded=True)
    full = plan.full_trajectory(plan.most_probable_index)
    shifted = full[1:]
    if shifted.shape[0] < 2:
        raise NoPlan("previous plan exhausted")
    return MultiFuturePlan(prefix=shifted[:-1], suffixes=(shifted[-1:],),
                           t_d_steps=shifted.shape[0] - 1,
                           candidate_id=plan.candidate_id,
                           objective=plan.objective, feasible=(True,),
                           probabilities=(1.0,), degraded=True)


def candidate_tuples(snapshot: PlanningSnapshot):
    """Corridor enumeration, pruning, and pairing for one snapshot.

    The anchor is the most probable future (ties to the lowest index).
    Raises NoCorridor when some future has no feasible corridor left.
    """
    sets = []
    for i, fut in enumerate(snapshot.futures):
        corrs = enumerate_corridors(fut.obstacles, snapshot.limits,
                                    snapshot.dt, snapshot.horizon_steps)
        corrs = prune_infeasible(corrs, snapshot.ego, snapshot.limits,
                                 snapshot.dt)
        if not corrs:
            raise NoCorridor(i)
        sets.append(CorridorSet(i, tuple(corrs)))
    anchor = int(np.argmax([f.probability for f in snapshot.futures]))
    return pair_corridors(sets, snapshot.ego, anchor)


def plan(snapshot: PlanningSnapshot, config: PlannerConfig,
         previous_plan: MultiFuturePlan | None = None) -> MultiFuturePlan:
    """Run one full planning cycle.

    Enumerates and prunes corridors per future, pairs them into candidate
    tuples, computes the decision time per tuple, solves one QP per tuple,
    and returns the optimal plan with the lowest objective (ties to the
    lowest tuple id). With zero optimal candidates the previous plan is
    re-indexed to the current time and returned with its degraded flag set;
    without a previous plan NoPlan is raised.
    """
    probabilities = [f.probability for f in snapshot.futures]
    try:
        tuples = candidate_tuples(snapshot)
    except NoCorridor:
        tuples = []

    results = []
    workers = int(os.environ.get("MFP_THREADS", "1") or "1")
    if workers > 1 and len(tuples) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda it: _evaluate_candidate(it[0], it[1], snapshot, config,
                                               probabilities),
                enumerate(tuples)))
    else:
        results = [_evaluate_candidate(tid, tup, snapshot, config, probabilities)
                   for tid, tup in enumerate(tuples)]

    candidates = [p for p in results if p is not None]
    if candidates:
        return min(candidates, key=lambda p: (p.objective, p.candidate_id))
    if previous_plan is not None:
        return shift_plan(previous_plan)
    raise NoPlan("no candidate solved and no previous plan to fall back on")


# --- diagnostic evaluators -------------------------------------------------

@dataclass(frozen=True)
class RewardResult:
    """Finite part of the expected reward plus a catastrophic flag.

    The flag replaces the -inf term: it is set when some future with
    positive probability is violated by the trajectory.
    """

    value: float
    catastrophic: bool


def satisfies_future(trajectory: Trajectory, future: FuturePrediction,
                     dt: float) -> np.ndarray:
    """Per-step indicator: station outside every obstacle of the future."""
    s = trajectory.s
    T = s.shape[0]
    ok = np.ones(T, dtype=bool)
    for ob in future.obstacles:
        window = obstacle_step_window(ob, dt, T)
        if window is None:
            continue
        k0, k1 = window
        seg = s[k0:k1 + 1]
        ok[k0:k1 + 1] &= ~((seg > ob.s_in) & (seg < ob.s_out))
    return ok


def _comfort_cost(trajectory: Trajectory, weights: CostWeights) -> float:
    return float(np.sum(weights.w_v * trajectory.v ** 2
                        + weights.w_a * trajectory.a ** 2
                        + weights.w_j * trajectory.j ** 2))


def expected_reward(trajectory: Trajectory, futures, weights: CostWeights,
                    dt: float) -> RewardResult:
    """Probability-weighted reward; violated futures raise the flag.

    Per future the reward is -(comfort cost) + w_disp * final station when
    the trajectory satisfies that future's constraints at every step.
    """
    finite = -_comfort_cost(trajectory, weights) \
        + weights.w_disp * float(trajectory.s[-1])
    value = 0.0
    catastrophic = False
    for fut in futures:
        if bool(np.all(satisfies_future(trajectory, fut, dt))):
            value += fut.probability * finite
        elif fut.probability > 0:
            catastrophic = True
    return RewardResult(value=value, catastrophic=catastrophic)


def _reveal_pmf(pmf, T: int) -> np.ndarray:
    if pmf is None:
        return np.full(T, 1.0 / T)
    pmf = np.asarray(pmf, dtype=float)
    if pmf.shape[0] != T:
        raise ValueError(f"reveal pmf length {pmf.shape[0]} != horizon {T}")
    if abs(float(pmf.sum()) - 1.0) > 1e-9:
        raise ValueError(f"reveal pmf sums to {pmf.sum():g}")
    return pmf


def feasibility_probability(trajectory: Trajectory, futures, reveal_pmf,
                            dt: float) -> float:
    """Probability the trajectory is feasible for the true future at reveal.

    Sum over futures and steps of p_i * P(t_R = t) * [step satisfies c_i].
    Ego transitions are deterministic, so their probability product is 1.
    A None pmf means uniform over the horizon.
    """
    T = trajectory.s.shape[0]
    pmf = _reveal_pmf(reveal_pmf, T)
    total = 0.0
    for fut in futures:
        ind = satisfies_future(trajectory, fut, dt)
        total += fut.probability * float(np.sum(pmf[ind]))
    return total


def entropy_objective(trajectory: Trajectory, futures, reveal_pmf,
                      weights: CostWeights, dt: float) -> float:
    """Finite expected reward plus the entropy of the per-future
    feasibility-at-reveal probabilities (natural log; 0*log 0 = 0)."""
    T = trajectory.s.shape[0]
    pmf = _reveal_pmf(reveal_pmf, T)
    entropy = 0.0
    for fut in futures:
        ind = satisfies_future(trajectory, fut, dt)
        P_i = fut.probability * float(np.sum(pmf[ind]))
        if P_i > 0.0:
            entropy -= P_i * math.log(P_i)
    return expected_reward(trajectory, futures, weights, dt).value + entropy
