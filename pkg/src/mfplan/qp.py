"""Multi-future quadratic program: shared prefix, per-future suffixes.

Decision vector: one prefix block of t_d steps plus one suffix block per
future, each step carrying (s, v, a, j). Dynamics couple consecutive steps
inside a block and across the prefix/suffix seam, so every suffix starts
from the exact state the prefix hands over. Station corridors bound s per
step (the prefix uses the intersection over futures), and box limits bound
v, a, j everywhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .corridors import Corridor
from .errors import DimensionMismatch, EmptyPrefixBand, SeamViolation
from .scenario import EgoState, Limits

S, V, A, J = 0, 1, 2, 3  # per-step channel order

DEFAULT_EPS_BAND = 0.05  # m, safety shrink turning strict bounds non-strict


@dataclass(frozen=True)
class CostWeights:
    """Smoothness penalties per channel plus the displacement reward."""

    w_v: float = 0.0
    w_a: float = 1.0
    w_j: float = 0.2
    w_disp: float = 2.0

    def __post_init__(self):
        ws = (self.w_v, self.w_a, self.w_j, self.w_disp)
        if any(w < 0 for w in ws):
            raise ValueError("cost weights must be >= 0")
        if not any(w > 0 for w in ws):
            raise ValueError("at least one cost weight must be > 0")


@dataclass(frozen=True)
class BlockLayout:
    """Variable indexing for the prefix + m suffix blocks."""

    T: int
    t_d_steps: int
    m: int

    @property
    def suffix_steps(self) -> int:
        return self.T - self.t_d_steps

    @property
    def n(self) -> int:
        return 4 * (self.t_d_steps + self.m * self.suffix_steps)

    def prefix_var(self, step: int, channel: int) -> int:
        return 4 * step + channel

    def suffix_var(self, future: int, step: int, channel: int) -> int:
        # step is the global step index, t_d_steps <= step < T
        base = 4 * self.t_d_steps + 4 * future * self.suffix_steps
        return base + 4 * (step - self.t_d_steps) + channel

    def var(self, future: int, step: int, channel: int) -> int:
        """Index of a channel along future `future`'s full trajectory."""
        if step < self.t_d_steps:
            return self.prefix_var(step, channel)
        return self.suffix_var(future, step, channel)

    def unpack(self, x: np.ndarray):
        """Split a solution vector into (prefix, suffixes) state arrays."""
        prefix = x[:4 * self.t_d_steps].reshape(self.t_d_steps, 4).copy()
        suffixes = []
        for i in range(self.m):
            lo = 4 * self.t_d_steps + 4 * i * self.suffix_steps
            hi = lo + 4 * self.suffix_steps
            suffixes.append(x[lo:hi].reshape(self.suffix_steps, 4).copy())
        return prefix, suffixes


class SolverStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"


@dataclass(frozen=True)
class SolverConfig:
    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    max_iter: int = 20000


@dataclass(frozen=True)
class QPProblem:
    """Assembled QP: min 1/2 x'Px + q'x  s.t.  A_eq x = b_eq, l <= x <= u."""

    layout: BlockLayout
    P: sp.csc_matrix
    q: np.ndarray
    A_eq: sp.csc_matrix
    b_eq: np.ndarray
    l_box: np.ndarray
    u_box: np.ndarray
    corridors: tuple[Corridor, ...]
    probabilities: tuple[float, ...]
    dt: float

    @property
    def n(self) -> int:
        return self.layout.n


@dataclass(frozen=True)
class QPSolution:
    x: np.ndarray | None
    objective: float
    status: SolverStatus
    prim_res: float
    dual_res: float
    iterations: int


@dataclass(frozen=True)
class MultiFuturePlan:
    """Shared locked prefix plus one suffix trajectory per future."""

    prefix: np.ndarray                 # (t_d_steps, 4)
    suffixes: tuple[np.ndarray, ...]   # each (T - t_d_steps, 4)
    t_d_steps: int
    candidate_id: int
    objective: float
    feasible: tuple[bool, ...]         # per future, corridor re-check
    probabilities: tuple[float, ...]
    degraded: bool = False

    def __post_init__(self):
        p = np.asarray(self.prefix, dtype=float)
        p.flags.writeable = False
        object.__setattr__(self, "prefix", p)
        sufs = []
        for sfx in self.suffixes:
            a = np.asarray(sfx, dtype=float)
            a.flags.writeable = False
            sufs.append(a)
        object.__setattr__(self, "suffixes", tuple(sufs))

    @property
    def horizon_steps(self) -> int:
        return self.prefix.shape[0] + self.suffixes[0].shape[0]

    @property
    def most_probable_index(self) -> int:
        return int(np.argmax(self.probabilities))

    def full_trajectory(self, future: int) -> np.ndarray:
        """(T, 4) states of the plan executed for one future."""
        if self.prefix.shape[0] == 0:
            return np.array(self.suffixes[future])
        return np.vstack([self.prefix, self.suffixes[future]])


def _band_shrink(lb: np.ndarray, ub: np.ndarray, eps_band: float, s_max: float):
    """Shrink a band by eps_band per obstacle-induced side.

    The path-domain edges (lb == 0, ub == s_max) are closed bounds, not
    obstacle surfaces, so they are left untouched; the shrink is capped so
    a feasible band never empties.
    """
    shr_lo = np.where(lb > 0.0, eps_band, 0.0)
    shr_hi = np.where(ub < s_max, eps_band, 0.0)
    total = shr_lo + shr_hi
    gap = ub - lb
    scale = np.where(total > 0.0,
                     np.minimum(1.0, gap / np.maximum(total, 1e-300)), 0.0)
    return lb + shr_lo * scale, ub - shr_hi * scale


def build_qp(corridors, probabilities, t_d_steps: int, ego: EgoState,
             limits: Limits, dt: float, weights: CostWeights,
             eps_band: float = DEFAULT_EPS_BAND) -> QPProblem:
    """Assemble the shared-prefix multi-future QP.

    Prefix station rows use the pointwise intersection of every future's
    (shrunk) corridor; suffix rows use each future's own corridor. Raises
    EmptyPrefixBand when the intersection is empty inside the prefix, which
    signals that t_d_steps is too large for this corridor tuple.
    """
    corridors = tuple(corridors)
    probabilities = tuple(float(p) for p in probabilities)
    m = len(corridors)
    if m == 0 or len(probabilities) != m:
        raise DimensionMismatch(
            f"{m} corridors vs {len(probabilities)} probabilities")
    T = corridors[0].lb.shape[0]
    if any(c.lb.shape[0] != T for c in corridors):
        raise DimensionMismatch("corridors must share the horizon length")
    if not 1 <= t_d_steps < T:
        raise DimensionMismatch(
            f"need 1 <= t_d_steps < T, got t_d_steps={t_d_steps}, T={T}")
    if abs(sum(probabilities) - 1.0) > 1e-6:
        raise DimensionMismatch(
            f"probabilities sum to {sum(probabilities):g}, expected 1")

    layout = BlockLayout(T=T, t_d_steps=t_d_steps, m=m)
    n = layout.n

    # Cost: diagonal P with 2*w entries (objective = sum w*value^2 ...),
    # suffix entries scaled by their future's probability.
    P_diag = np.zeros(n)
    q = np.zeros(n)
    for k in range(t_d_steps):
        P_diag[layout.prefix_var(k, V)] = 2.0 * weights.w_v
        P_diag[layout.prefix_var(k, A)] = 2.0 * weights.w_a
        P_diag[layout.prefix_var(k, J)] = 2.0 * weights.w_j
    for i, p_i in enumerate(probabilities):
        for k in range(t_d_steps, T):
            P_diag[layout.suffix_var(i, k, V)] = 2.0 * p_i * weights.w_v
            P_diag[layout.suffix_var(i, k, A)] = 2.0 * p_i * weights.w_a
            P_diag[layout.suffix_var(i, k, J)] = 2.0 * p_i * weights.w_j
        q[layout.suffix_var(i, T - 1, S)] = -p_i * weights.w_disp

    # Equalities: initial conditions + dynamics per transition per block.
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    b_eq: list[float] = []
    r = 0

    def add(row_entries, rhs):
        nonlocal r
        for c, v in row_entries:
            rows.append(r)
            cols.append(c)
            vals.append(v)
        b_eq.append(rhs)
        r += 1

    add([(layout.prefix_var(0, S), 1.0)], ego.s0)
    add([(layout.prefix_var(0, V), 1.0)], ego.v0)
    add([(layout.prefix_var(0, A), 1.0)], ego.a0)

    def add_transition(i_from, i_to, k_from, k_to):
        s0, v0, a0 = (layout.var(i_from, k_from, c) for c in (S, V, A))
        s1, v1, a1, j1 = (layout.var(i_to, k_to, c) for c in (S, V, A, J))
        add([(s1, 1.0), (s0, -1.0), (v0, -dt), (a0, -0.5 * dt * dt)], 0.0)
        add([(v1, 1.0), (v0, -1.0), (a0, -dt)], 0.0)
        add([(j1, dt), (a1, -1.0), (a0, 1.0)], 0.0)

    for k in range(t_d_steps - 1):
        add_transition(0, 0, k, k + 1)
    for i in range(m):
        add_transition(0, i, t_d_steps - 1, t_d_steps)  # seam
        for k in range(t_d_steps, T - 1):
            add_transition(i, i, k, k + 1)

    A_eq = sp.coo_matrix((vals, (rows, cols)), shape=(r, n)).tocsc()

    # Box bounds: station corridors (shrunk) plus v/a/j limits.
    l_box = np.full(n, -np.inf)
    u_box = np.full(n, np.inf)
    shrunk = [_band_shrink(c.lb, c.ub, eps_band, limits.s_max) for c in corridors]
    pre_lb = np.max([lo for lo, _ in shrunk], axis=0)
    pre_ub = np.min([hi for _, hi in shrunk], axis=0)
    raw_lb = np.max([c.lb for c in corridors], axis=0)
    raw_ub = np.min([c.ub for c in corridors], axis=0)

    for k in range(t_d_steps):
        si = layout.prefix_var(k, S)
        lo, hi = pre_lb[k], pre_ub[k]
        if k == 0 and raw_lb[0] <= ego.s0 <= raw_ub[0]:
            lo, hi = min(lo, ego.s0), max(hi, ego.s0)
        l_box[si], u_box[si] = lo, hi
        l_box[layout.prefix_var(k, V)], u_box[layout.prefix_var(k, V)] = 0.0, limits.v_max
        l_box[layout.prefix_var(k, A)], u_box[layout.prefix_var(k, A)] = limits.a_min, limits.a_max
        l_box[layout.prefix_var(k, J)], u_box[layout.prefix_var(k, J)] = limits.j_min, limits.j_max
    empty = [k for k in range(t_d_steps)
             if l_box[layout.prefix_var(k, S)] > u_box[layout.prefix_var(k, S)]]
    if empty:
        raise EmptyPrefixBand(
            f"corridor intersection empty at prefix step(s) {empty}; "
            f"t_d_steps={t_d_steps} too large")

    for i in range(m):
        lo_i, hi_i = shrunk[i]
        for k in range(t_d_steps, T):
            si = layout.suffix_var(i, k, S)
            l_box[si], u_box[si] = lo_i[k], hi_i[k]
            l_box[layout.suffix_var(i, k, V)] = 0.0
            u_box[layout.suffix_var(i, k, V)] = limits.v_max
            l_box[layout.suffix_var(i, k, A)] = limits.a_min
            u_box[layout.suffix_var(i, k, A)] = limits.a_max
            l_box[layout.suffix_var(i, k, J)] = limits.j_min
            u_box[layout.suffix_var(i, k, J)] = limits.j_max

    return QPProblem(layout=layout, P=sp.diags(P_diag).tocsc(), q=q,
                     A_eq=A_eq, b_eq=np.asarray(b_eq), l_box=l_box,
                     u_box=u_box, corridors=corridors,
                     probabilities=probabilities, dt=dt)


def solve_qp(problem: QPProblem, config: SolverConfig | None = None) -> QPSolution:
    """Solve with the operator-splitting method (OSQP) plus polishing.

    Status is Optimal when both residuals pass the eps_abs/eps_rel test,
    Infeasible when the primal-infeasibility certificate fires, and MaxIter
    otherwise. adaptive_rho is pinned to an iteration interval so repeated
    solves are bit-reproducible.
    """
    import osqp

    if config is None:
        config = SolverConfig()
    n = problem.n
    A = sp.vstack([problem.A_eq, sp.identity(n, format="csc")], format="csc")
    l = np.concatenate([problem.b_eq, problem.l_box])
    u = np.concatenate([problem.b_eq, problem.u_box])
    solver = osqp.OSQP()
    solver.setup(P=problem.P, q=problem.q, A=A, l=l, u=u, verbose=False,
                 eps_abs=config.eps_abs, eps_rel=config.eps_rel,
                 max_iter=config.max_iter, polishing=True,
                 adaptive_rho_interval=50)
    res = solver.solve(raise_error=False)
    status_str = res.info.status
    if status_str == "solved":
        status = SolverStatus.OPTIMAL
    elif "primal infeasible" in status_str:
        status = SolverStatus.INFEASIBLE
    else:
        status = SolverStatus.MAX_ITER
    x = np.asarray(res.x, dtype=float) if res.x is not None else None
    objective = float(res.info.obj_val) if status is SolverStatus.OPTIMAL else np.nan
    return QPSolution(x=x, objective=objective, status=status,
                      prim_res=float(res.info.prim_res),
                      dual_res=float(res.info.dual_res),
                      iterations=int(res.info.iter))


SEAM_TOL = 1e-6
FEAS_TOL = 1e-5  # m, corridor re-check


def extract_plan(solution: QPSolution, problem: QPProblem) -> MultiFuturePlan:
    """Unpack an optimal solution and re-check its per-future feasibility."""
    if solution.status is not SolverStatus.OPTIMAL:
        raise ValueError(f"cannot extract a plan from status {solution.status}")
    layout = problem.layout
    dt = problem.dt
    prefix, suffixes = layout.unpack(solution.x)
    s_p, v_p, a_p = prefix[-1, S], prefix[-1, V], prefix[-1, A]
    s_exp = s_p + v_p * dt + 0.5 * a_p * dt * dt
    v_exp = v_p + a_p * dt
    for i, sfx in enumerate(suffixes):
        if abs(sfx[0, S] - s_exp) > SEAM_TOL or abs(sfx[0, V] - v_exp) > SEAM_TOL:
            raise SeamViolation(
                f"suffix {i} does not continue the prefix: "
                f"ds={sfx[0, S] - s_exp:.3e}, dv={sfx[0, V] - v_exp:.3e}")
    feasible = []
    for i, c in enumerate(problem.corridors):
        s_full = np.concatenate([prefix[:, S], suffixes[i][:, S]])
        feasible.append(bool(np.all(s_full >= c.lb - FEAS_TOL)
                             and np.all(s_full <= c.ub + FEAS_TOL)))
    return MultiFuturePlan(prefix=prefix, suffixes=tuple(suffixes),
                           t_d_steps=layout.t_d_steps, candidate_id=-1,
                           objective=solution.objective,
                           feasible=tuple(feasible),
                           probabilities=problem.probabilities)


def dump_problem(problem: QPProblem, path) -> None:
    """Write a plain-text dump (dimensions, triplets, bounds) for inspection."""
    with open(path, "w", encoding="utf-8") as f:
        lay = problem.layout
        f.write(f"n {problem.n}\n")
        f.write(f"layout T {lay.T} t_d_steps {lay.t_d_steps} futures {lay.m}\n")
        f.write(f"eq_rows {problem.A_eq.shape[0]}\n")
        P = problem.P.tocoo()
        for i, j, v in zip(P.row, P.col, P.data):
            f.write(f"P {i} {j} {v:.17g}\n")
        for i, v in enumerate(problem.q):
            if v != 0.0:
                f.write(f"q {i} {v:.17g}\n")
        Aeq = problem.A_eq.tocoo()
        for i, j, v in zip(Aeq.row, Aeq.col, Aeq.data):
            f.write(f"EQ {i} {j} {v:.17g}\n")
        for i, v in enumerate(problem.b_eq):
            f.write(f"beq {i} {v:.17g}\n")
        for i in range(problem.n):
            f.write(f"BOX {i} {problem.l_box[i]:.17g} {problem.u_box[i]:.17g}\n")
