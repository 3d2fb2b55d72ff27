"""Multi-future speed planning on the space-time graph.

Plans a longitudinal trajectory along a fixed path under several
probabilistic joint predictions of traffic-agent futures: all futures are
kept feasible through a shared locked prefix up to the decision time, and
probability-weighted per-future suffixes are optimized jointly in one
quadratic program. A closed-loop simulator reveals the true future and
scores policies.
"""

from .corridors import Corridor, CorridorSet, enumerate_corridors, intersect, \
    monotonize, prune_infeasible
from .errors import CombinatorialLimitExceeded, DimensionMismatch, \
    EmptyPrefixBand, Infeasible, InfeasibleCorridor, NoCorridor, \
    NoFeasibleLock, NoPlan, ParseError, PlanningError, \
    RecursionDepthExceeded, SeamViolation, ValidationError
from .planner import CandidateTuple, PlannerConfig, PlanningSnapshot, \
    RewardResult, Trajectory, candidate_tuples, compute_decision_time, \
    entropy_objective, expected_reward, feasibility_probability, \
    pair_corridors, plan, shift_plan
from .profile import ApproxProfile, approximate_profile, lower_split, \
    sample_profile, upper_split
from .qp import BlockLayout, CostWeights, MultiFuturePlan, QPProblem, \
    QPSolution, SolverConfig, SolverStatus, build_qp, dump_problem, \
    extract_plan, solve_qp
from .scenario import EgoState, FuturePrediction, Limits, RevealModel, \
    STObstacle, ScenarioSpec, compose_joint_futures, load_scenario, \
    sample_reveal_time, serialize_scenario
from .simulate import Metrics, POLICIES, SimTrace, StepRecord, \
    evaluate_metrics, simulate, trace_to_csv
from .theory import Theorem1Report, TheoremCell, theorem1_enumeration

__version__ = "0.1.0"
