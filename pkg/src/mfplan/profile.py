"""Fast piecewise-linear profile approximation between monotone station bounds.

Pads the bounds inward by the largest margin they allow, then recursively
proposes straight segments and splits at the worst violation, alternating
lower/upper checks so every returned segment is verified against both
bounds. The result is a screening device for feasibility and pairing, not a
drivable trajectory; it may be locally non-monotone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, RecursionDepthExceeded

_RAMP = np.arange(1.0, 257.0)

# Padding computes lb+margin and ub-margin separately; on a collapsed band
# the two can disagree by one ulp, which would otherwise force a spurious
# split at every step. Violations smaller than this are ignored.
_VIOL_TOL = 1e-9


def _ramp(n: int) -> np.ndarray:
    global _RAMP
    if n > _RAMP.shape[0]:
        _RAMP = np.arange(1.0, float(max(n, 2 * _RAMP.shape[0])) + 1.0)
    return _RAMP[:n]


@dataclass(frozen=True)
class ApproxProfile:
    """Piecewise-linear station profile: (step index, station) vertices."""

    vertices: tuple[tuple[int, float], ...]
    margin: float  # padding actually applied (m)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(
            (int(k), float(s)) for k, s in self.vertices))
        ks = [k for k, _ in self.vertices]
        if any(b <= a for a, b in zip(ks[:-1], ks[1:])):
            raise ValueError("profile vertices must be strictly increasing in time")
        if self.margin < 0:
            raise ValueError("profile margin must be >= 0")


def _solve(lb: np.ndarray, ub: np.ndarray, first_task, budget: int,
           stats: dict | None = None):
    """Worklist form of the alternating split recursion.

    Tasks are (check_lower, i0, s0, iE, sE, new_split); violations are only
    looked for at indices strictly between the segment endpoints (the
    endpoints are fixed boundary conditions). Ties in the worst violation go
    to the smallest index. Total splits are bounded by `budget`; exceeding
    it signals a bug, since each split strictly shrinks its segment.
    """
    out: list[tuple[int, float]] = []
    stack = [first_task]
    splits = 0
    while stack:
        check_lower, i0, s0, iE, sE, new_split = stack.pop()
        n_int = iE - i0 - 1
        if n_int > 0:
            if stats is not None:
                stats["checks"] += 1
                stats["scanned"] += n_int
            prop = s0 + ((sE - s0) / (iE - i0)) * _ramp(n_int)
            if check_lower:
                diff = prop - lb[i0 + 1:iE]
            else:
                diff = ub[i0 + 1:iE] - prop
            j = int(diff.argmin())
            if diff[j] < -_VIOL_TOL:
                splits += 1
                if splits > budget:
                    raise RecursionDepthExceeded(
                        f"more than {budget} splits; internal bug")
                s_id = i0 + 1 + j
                anchor = lb[s_id] if check_lower else ub[s_id]
                stack.append((not check_lower, s_id, anchor, iE, sE, True))
                stack.append((not check_lower, i0, s0, s_id, anchor, True))
                continue
        if new_split:
            stack.append((not check_lower, i0, s0, iE, sE, False))
            continue
        if not out or out[-1][0] != i0:
            out.append((i0, s0))
        out.append((iE, sE))
    if stats is not None:
        stats["splits"] = splits
    return out


def lower_split(lb, ub, pt0, ptE, new_split: bool = True):
    """Split recursion entered with a lower-bound check. Returns vertices."""
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    i0, s0 = int(pt0[0]), float(pt0[1])
    iE, sE = int(ptE[0]), float(ptE[1])
    if not 0 <= i0 < iE < lb.shape[0]:
        raise ValueError(f"need 0 <= {i0} < {iE} < {lb.shape[0]}")
    return _solve(lb, ub, (True, i0, s0, iE, sE, bool(new_split)), lb.shape[0])


def upper_split(lb, ub, pt0, ptE, new_split: bool = True):
    """Mirror of lower_split, entered with an upper-bound check."""
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    i0, s0 = int(pt0[0]), float(pt0[1])
    iE, sE = int(ptE[0]), float(ptE[1])
    if not 0 <= i0 < iE < lb.shape[0]:
        raise ValueError(f"need 0 <= {i0} < {iE} < {lb.shape[0]}")
    return _solve(lb, ub, (False, i0, s0, iE, sE, bool(new_split)), lb.shape[0])


def _prepare(lb, ub, pt0: float):
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if lb.shape != ub.shape or lb.ndim != 1 or lb.shape[0] < 2:
        raise ValueError("bounds must be 1-D arrays of equal length >= 2")
    gap_min = float(np.min(ub - lb))
    if gap_min < 0.0:
        raise Infeasible("bounds cross: lb > ub at some step")
    pt0 = float(pt0)
    if not lb[0] <= pt0 <= ub[0]:
        raise Infeasible(
            f"start point {pt0:g} outside [{lb[0]:g}, {ub[0]:g}]")
    margin = max(0.0, 0.5 * gap_min)
    return lb + margin, ub - margin, pt0, margin


def approximate_profile(lb, ub, pt0: float) -> ApproxProfile:
    """Profile between monotone bounds, started at station pt0 at step 0.

    Finds the largest margin the band allows, pads both bounds inward by it,
    targets the padded upper bound at the final step (maximizing travel
    distance), and runs the split recursion. The sampled result satisfies the
    original, unpadded bounds at every step.
    """
    lbp, ubp, pt0, margin = _prepare(lb, ub, pt0)
    T = lbp.shape[0]
    verts = _solve(lbp, ubp, (True, 0, pt0, T - 1, float(ubp[-1]), True), T)
    return ApproxProfile(tuple(verts), margin)


def profile_work(lb, ub, pt0: float) -> dict:
    """Operation counts of one approximate_profile run.

    Returns {"splits", "checks", "scanned"}; `scanned` is the total number
    of interior indices examined across all violation checks, the quantity
    whose worst case grows quadratically in the horizon.
    """
    lbp, ubp, pt0, _ = _prepare(lb, ub, pt0)
    T = lbp.shape[0]
    stats = {"splits": 0, "checks": 0, "scanned": 0}
    _solve(lbp, ubp, (True, 0, pt0, T - 1, float(ubp[-1]), True), T, stats)
    return stats


def sample_profile(profile: ApproxProfile, T: int) -> np.ndarray:
    """Dense length-T station sequence by linear interpolation of vertices."""
    ks = np.array([k for k, _ in profile.vertices], dtype=float)
    ss = np.array([s for _, s in profile.vertices], dtype=float)
    if ks[0] != 0 or ks[-1] != T - 1:
        raise ValueError(f"profile vertices must span [0, {T - 1}]")
    return np.interp(np.arange(T, dtype=float), ks, ss)
