"""Enumeration experiment: deciding late never increases catastrophe risk.

Each grid cell fixes an initial belief in the (WLOG) true option, a belief
trajectory that grows monotonically toward certainty at the reveal time, two
finite payoffs, and an early/late decision-time pair. A rational agent picks
the higher-belief option at its decision time. The four comparison cases are
classified per cell; the late decision must never be catastrophic where the
early one was safe (case 4), and its catastrophe indicator must never exceed
the early one's.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import PlanningError


class AssertionFailure(PlanningError):
    """A cell violated the late-decision dominance; implementation bug."""


@dataclass(frozen=True)
class TheoremCell:
    p1: float        # initial belief in the true option
    k1: float        # finite regret of the late decision when both are safe
    k2: float        # finite reward of a safe late decision
    t_reveal: float  # time at which belief reaches certainty
    t_a: float       # early decision time
    t_d: float       # late decision time (t_a < t_d)


@dataclass(frozen=True)
class CellResult:
    cell: TheoremCell
    case: int                 # 1..4
    catastrophe_early: bool
    catastrophe_late: bool
    reward_early: float | None  # None encodes the catastrophic -inf
    reward_late: float | None


@dataclass(frozen=True)
class Theorem1Report:
    cells: int
    case_counts: tuple[int, int, int, int]
    violations: tuple[CellResult, ...]
    max_finite_regret: float  # largest k1 paid by waiting (case 1)

    @property
    def case4_count(self) -> int:
        return self.case_counts[3]


def belief_in_true(cell: TheoremCell, t: float) -> float:
    """Belief that the true option is true at time t; monotone in t."""
    frac = min(1.0, max(0.0, t / cell.t_reveal)) if cell.t_reveal > 0 else 1.0
    return cell.p1 + (1.0 - cell.p1) * frac


def _choice(cell: TheoremCell, t: float) -> int:
    """1 picks the true option, 2 the other; ties go to option 1."""
    return 1 if belief_in_true(cell, t) >= 0.5 else 2


def evaluate_cell(cell: TheoremCell) -> CellResult:
    if not cell.t_a < cell.t_d:
        raise ValueError(f"need t_a < t_d, got {cell.t_a}, {cell.t_d}")
    early = _choice(cell, cell.t_a)
    late = _choice(cell, cell.t_d)
    if early == 1 and late == 1:
        case = 1
        reward_late, reward_early = cell.k2, cell.k2 + cell.k1
    elif early == 2 and late == 2:
        case = 2
        reward_late = reward_early = None
    elif early == 2 and late == 1:
        case = 3
        reward_late, reward_early = cell.k2, None
    else:
        case = 4
        reward_late, reward_early = None, cell.k2
    return CellResult(cell=cell, case=case,
                      catastrophe_early=(early != 1),
                      catastrophe_late=(late != 1),
                      reward_early=reward_early, reward_late=reward_late)


def default_grid():
    """The default 1000-cell grid (10 beliefs x 5 k1 x 2 k2 x 10 timings)."""
    p1s = [0.05 + 0.1 * i for i in range(10)]
    k1s = [0.5, 1.0, 2.0, 5.0, 10.0]
    k2s = [1.0, 10.0]
    timings = [  # (t_a, t_d, t_reveal)
        (0.0, 1.0, 2.0), (0.0, 2.0, 2.0), (1.0, 2.0, 4.0), (0.0, 3.0, 6.0),
        (2.0, 4.0, 8.0), (1.0, 5.0, 5.0), (3.0, 6.0, 6.0), (0.0, 4.0, 10.0),
        (2.0, 8.0, 10.0), (5.0, 9.0, 12.0),
    ]
    return [TheoremCell(p1, k1, k2, t_r, t_a, t_d)
            for p1, k1, k2, (t_a, t_d, t_r)
            in itertools.product(p1s, k1s, k2s, timings)]


def theorem1_enumeration(grid=None) -> Theorem1Report:
    """Evaluate every cell; raise AssertionFailure on any dominance violation."""
    cells = list(grid) if grid is not None else default_grid()
    counts = [0, 0, 0, 0]
    violations = []
    max_regret = 0.0
    for cell in cells:
        res = evaluate_cell(cell)
        counts[res.case - 1] += 1
        if res.catastrophe_late > res.catastrophe_early or res.case == 4:
            violations.append(res)
            raise AssertionFailure(
                f"late decision worse than early in cell {cell}")
        if res.case == 1:
            max_regret = max(max_regret, cell.k1)
    return Theorem1Report(cells=len(cells), case_counts=tuple(counts),
                          violations=tuple(violations),
                          max_finite_regret=max_regret)
