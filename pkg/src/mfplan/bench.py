"""Latency benchmarks for the approximate-profile routine.

Obstacle-induced bounds have O(k) breakpoints, so runtime should scale near
linearly in k at fixed horizon; an adversarial staircase with a collapsed
padded band forces a split at every step and exposes the quadratic worst
case.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .profile import approximate_profile


def random_obstacle_bounds(rng: np.random.Generator, T: int, k: int,
                           s_max: float = 100.0):
    """Feasible monotone bound pair induced by k obstacle-style clips."""
    while True:
        lb = np.zeros(T)
        ub = np.full(T, s_max)
        for _ in range(k):
            k0 = int(rng.integers(0, T - 1))
            k1 = int(rng.integers(k0, min(T - 1, k0 + max(2, T // 4)) + 1))
            s_lo = float(rng.uniform(0.05 * s_max, 0.85 * s_max))
            s_hi = s_lo + float(rng.uniform(0.02 * s_max, 0.15 * s_max))
            if rng.random() < 0.5:
                ub[k0:k1 + 1] = np.minimum(ub[k0:k1 + 1], s_lo)
            else:
                lb[k0:k1 + 1] = np.maximum(lb[k0:k1 + 1], min(s_hi, s_max))
        lb = np.maximum.accumulate(lb)
        ub = np.minimum.accumulate(ub[::-1])[::-1]
        if np.all(lb <= ub):
            return lb, ub


def staircase_bounds(T: int, gap: float = 2.0):
    """Adversarial narrow staircase pass.

    The padded band collapses onto the parity staircase c(j) = j - (j % 2),
    whose deviations against any straight proposal tie exactly in float
    arithmetic. The smallest-index tie-break then splits adjacent to the
    segment start at every level, so the recursion re-scans nearly the whole
    tail each time: one split per step and quadratic total work.
    """
    j = np.arange(T, dtype=float)
    c = j - (np.arange(T) % 2)
    return c - 0.5 * gap, c + 0.5 * gap


def _time_calls(bound_sets):
    times = []
    for lb, ub, pt0 in bound_sets:
        t0 = time.perf_counter()
        approximate_profile(lb, ub, pt0)
        times.append(time.perf_counter() - t0)
    return np.asarray(times)


@dataclass(frozen=True)
class BenchRow:
    T: int
    k: int
    t_min: float
    t_median: float
    t_p99: float


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    staircase: tuple[tuple[int, float], ...]  # (T, median seconds)
    staircase_slope: float                    # log-log slope over doubling T
    staircase_work: tuple[tuple[int, int], ...]  # (T, indices scanned)
    staircase_work_slope: float               # exact, noise-free
    kscale: tuple[tuple[int, float], ...]     # (k, median seconds)
    kscale_slope: float

    def to_csv(self) -> str:
        lines = ["section,T,k,min_s,median_s,p99_s"]
        for r in self.rows:
            lines.append(f"random,{r.T},{r.k},{r.t_min:.3e},"
                         f"{r.t_median:.3e},{r.t_p99:.3e}")
        for (T, med), (_, work) in zip(self.staircase, self.staircase_work):
            lines.append(f"staircase,{T},,,{med:.3e},{work}")
        for k, med in self.kscale:
            lines.append(f"kscale,,{k},,{med:.3e},")
        lines.append(f"slope,staircase_T,,,{self.staircase_slope:.3f},")
        lines.append(f"slope,staircase_work,,,{self.staircase_work_slope:.3f},")
        lines.append(f"slope,kscale_k,,,{self.kscale_slope:.3f},")
        return "\n".join(lines) + "\n"


def _loglog_slope(xs, ys) -> float:
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def bench_approx_profile(T_values=(100,), k_values=(5,), repetitions: int = 300,
                         rng_seed: int = 0,
                         staircase_T=(4096, 8192, 16384),
                         kscale_k=(4, 8, 16), kscale_T: int = 400,
                         staircase_reps: int = 7) -> BenchReport:
    """Measure per-call latency over randomized feasible bounds plus the
    scaling trends (staircase in T, obstacle count in k)."""
    from .profile import profile_work

    rng = np.random.default_rng(rng_seed)
    rows = []
    for T in T_values:
        for k in k_values:
            sets = []
            for _ in range(repetitions):
                lb, ub = random_obstacle_bounds(rng, T, k)
                sets.append((lb, ub, float(rng.uniform(lb[0], ub[0]))))
            _time_calls(sets[:20])  # warm caches before measuring
            times = _time_calls(sets)
            rows.append(BenchRow(T=T, k=k, t_min=float(times.min()),
                                 t_median=float(np.median(times)),
                                 t_p99=float(np.percentile(times, 99))))

    stair = []
    stair_work = []
    for T in staircase_T:
        lb, ub = staircase_bounds(T)
        pt0 = 0.5 * (lb[0] + ub[0])
        sets = [(lb, ub, pt0)] * staircase_reps
        _time_calls(sets[:2])
        stair.append((T, float(np.median(_time_calls(sets)))))
        stair_work.append((T, int(profile_work(lb, ub, pt0)["scanned"])))
    stair_slope = _loglog_slope([t for t, _ in stair], [m for _, m in stair])
    work_slope = _loglog_slope([t for t, _ in stair_work],
                               [w for _, w in stair_work])

    krows = []
    for k in kscale_k:
        sets = []
        for _ in range(max(50, repetitions // 4)):
            lb, ub = random_obstacle_bounds(rng, kscale_T, k)
            sets.append((lb, ub, float(rng.uniform(lb[0], ub[0]))))
        _time_calls(sets[:10])
        krows.append((k, float(np.median(_time_calls(sets)))))
    k_slope = _loglog_slope([k for k, _ in krows], [m for _, m in krows])

    return BenchReport(rows=tuple(rows), staircase=tuple(stair),
                       staircase_slope=stair_slope,
                       staircase_work=tuple(stair_work),
                       staircase_work_slope=work_slope,
                       kscale=tuple(krows), kscale_slope=k_slope)
