"""Scenario definitions: ego state, limits, obstacles, futures, reveal model.

A scenario file (UTF-8 JSON) carries either per-agent prediction lists or
ready-made joint futures; per-agent lists are composed into joint futures by
Cartesian product. All types here are immutable and safe to share.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import CombinatorialLimitExceeded, ParseError, ValidationError

DEFAULT_JOINT_FUTURE_CAP = 64
PROB_TOL = 1e-9


@dataclass(frozen=True)
class EgoState:
    s0: float  # station (m)
    v0: float  # speed (m/s)
    a0: float  # acceleration (m/s^2)

    def __post_init__(self):
        if self.v0 < 0:
            raise ValidationError(f"ego.v0: speed must be >= 0, got {self.v0}")
        if self.s0 < 0:
            raise ValidationError(f"ego.s0: station must be >= 0, got {self.s0}")


@dataclass(frozen=True)
class Limits:
    v_max: float   # m/s
    a_min: float   # m/s^2, < 0
    a_max: float   # m/s^2, > 0
    j_min: float   # m/s^3, < 0
    j_max: float   # m/s^3, > 0
    s_max: float   # m, end of the modeled path

    def __post_init__(self):
        if self.v_max <= 0:
            raise ValidationError(f"limits.v_max: must be > 0, got {self.v_max}")
        if not (self.a_min < 0 < self.a_max):
            raise ValidationError(
                f"limits.a_min/a_max: need a_min < 0 < a_max, got {self.a_min}, {self.a_max}")
        if not (self.j_min < 0 < self.j_max):
            raise ValidationError(
                f"limits.j_min/j_max: need j_min < 0 < j_max, got {self.j_min}, {self.j_max}")
        if self.s_max <= 0:
            raise ValidationError(f"limits.s_max: must be > 0, got {self.s_max}")


@dataclass(frozen=True)
class STObstacle:
    """A blocked rectangle in (time, station) space."""

    t_in: float   # s
    t_out: float  # s
    s_in: float   # m
    s_out: float  # m

    def __post_init__(self):
        if not self.t_in < self.t_out:
            raise ValidationError(
                f"obstacle.t_in/t_out: need t_in < t_out, got {self.t_in}, {self.t_out}")
        if not self.s_in < self.s_out:
            raise ValidationError(
                f"obstacle.s_in/s_out: need s_in < s_out, got {self.s_in}, {self.s_out}")

    def blocks(self, t: float, s: float) -> bool:
        """True when (t, s) is inside the rectangle (station strictly)."""
        return self.t_in <= t <= self.t_out and self.s_in < s < self.s_out


@dataclass(frozen=True)
class FuturePrediction:
    """One joint future: its belief probability and the obstacles it implies."""

    probability: float
    obstacles: tuple[STObstacle, ...] = ()
    label: str = ""

    def __post_init__(self):
        if not (0.0 < self.probability <= 1.0):
            raise ValidationError(
                f"future.probability: must be in (0, 1], got {self.probability}")
        object.__setattr__(self, "obstacles", tuple(self.obstacles))


@dataclass(frozen=True)
class RevealModel:
    """When the true future becomes known: a fixed step or a pmf over steps."""

    mode: str                           # "fixed" | "pmf"
    t_R_fixed: int | None = None        # step index, mode "fixed"
    pmf: tuple[float, ...] | None = None  # probability per step index, mode "pmf"

    def __post_init__(self):
        if self.mode == "fixed":
            if self.t_R_fixed is None or self.t_R_fixed < 0:
                raise ValidationError(
                    f"reveal.t_R: need a step index >= 0, got {self.t_R_fixed}")
        elif self.mode == "pmf":
            if not self.pmf:
                raise ValidationError("reveal.pmf: missing for mode 'pmf'")
            pmf = tuple(float(p) for p in self.pmf)
            if any(p < 0 for p in pmf):
                raise ValidationError("reveal.pmf: entries must be >= 0")
            total = math.fsum(pmf)
            if abs(total - 1.0) > PROB_TOL:
                raise ValidationError(f"reveal.pmf: probabilities sum to {total:g}")
            object.__setattr__(self, "pmf", pmf)
        else:
            raise ValidationError(f"reveal.mode: unknown mode {self.mode!r}")


def _check_probabilities(futures, where: str) -> None:
    total = math.fsum(f.probability for f in futures)
    if abs(total - 1.0) > PROB_TOL:
        raise ValidationError(f"{where}: probabilities sum to {total:g}")


def compose_joint_futures(agents, cap: int = DEFAULT_JOINT_FUTURE_CAP):
    """Cartesian product of per-agent prediction lists.

    Joint probability is the product of per-agent probabilities; joint
    obstacles are the union of per-agent obstacle sets. With r predictions
    for each of k agents the output has m = r^k futures.
    """
    agents = [tuple(preds) for preds in agents]
    if not agents or any(len(p) == 0 for p in agents):
        raise ValidationError("agents: every agent needs at least one prediction")
    for ai, preds in enumerate(agents):
        _check_probabilities(preds, f"agents[{ai}]")
    m = 1
    for preds in agents:
        m *= len(preds)
    if m > cap:
        raise CombinatorialLimitExceeded(
            f"joint futures m={m} exceeds cap {cap}")
    joint = []
    for combo in itertools.product(*agents):
        prob = 1.0
        for p in combo:
            prob *= p.probability
        obstacles: list[STObstacle] = []
        for p in combo:
            for ob in p.obstacles:
                if ob not in obstacles:
                    obstacles.append(ob)
        label = "+".join(p.label for p in combo if p.label)
        joint.append(FuturePrediction(prob, tuple(obstacles), label))
    return joint


def sample_reveal_time(reveal: RevealModel, rng_seed: int) -> int:
    """Step index at which the true future is revealed.

    Fixed mode ignores the seed; pmf mode draws reproducibly from the seed.
    """
    if reveal.mode == "fixed":
        return int(reveal.t_R_fixed)
    rng = np.random.default_rng(rng_seed)
    return int(rng.choice(len(reveal.pmf), p=np.asarray(reveal.pmf)))


@dataclass(frozen=True)
class ScenarioSpec:
    """A full planning scenario. Exactly one of `agents` / `futures` is set."""

    ego: EgoState
    limits: Limits
    dt: float
    horizon_steps: int
    reveal: RevealModel
    true_future_index: int
    agents: tuple[tuple[FuturePrediction, ...], ...] | None = None
    futures: tuple[FuturePrediction, ...] | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError(f"dt: must be > 0, got {self.dt}")
        if self.horizon_steps < 2:
            raise ValidationError(
                f"horizon_steps: must be >= 2, got {self.horizon_steps}")
        if (self.agents is None) == (self.futures is None):
            raise ValidationError(
                "agents/futures: exactly one of the two forms must be given")
        if self.agents is not None:
            object.__setattr__(
                self, "agents", tuple(tuple(preds) for preds in self.agents))
        if self.futures is not None:
            object.__setattr__(self, "futures", tuple(self.futures))
            _check_probabilities(self.futures, "futures")
        joint = self.joint_futures()
        if not (0 <= self.true_future_index < len(joint)):
            raise ValidationError(
                f"true_future_index: {self.true_future_index} out of range "
                f"for m={len(joint)} futures")
        if self.reveal.mode == "fixed" and self.reveal.t_R_fixed >= self.horizon_steps:
            raise ValidationError(
                f"reveal.t_R: step {self.reveal.t_R_fixed} outside horizon "
                f"of {self.horizon_steps} steps")
        if self.reveal.mode == "pmf" and len(self.reveal.pmf) != self.horizon_steps:
            raise ValidationError(
                f"reveal.pmf: length {len(self.reveal.pmf)} != horizon_steps "
                f"{self.horizon_steps}")
        t_end = self.horizon_steps * self.dt
        for fi, fut in enumerate(joint):
            for oi, ob in enumerate(fut.obstacles):
                if ob.t_out < 0 or ob.t_in > t_end or ob.s_out < 0 or ob.s_in > self.limits.s_max:
                    raise ValidationError(
                        f"futures[{fi}].obstacles[{oi}]: rectangle does not "
                        f"intersect [0,{t_end:g}]x[0,{self.limits.s_max:g}]")

    def joint_futures(self, cap: int = DEFAULT_JOINT_FUTURE_CAP):
        """The scenario's joint futures (composed from agents when needed)."""
        if self.futures is not None:
            return list(self.futures)
        return compose_joint_futures(self.agents, cap=cap)


def _obstacle_from_json(data, where: str) -> STObstacle:
    try:
        return STObstacle(float(data["t_in"]), float(data["t_out"]),
                          float(data["s_in"]), float(data["s_out"]))
    except KeyError as e:
        raise ValidationError(f"{where}: missing key {e.args[0]!r}") from e


def _future_from_json(data, where: str) -> FuturePrediction:
    if "p" not in data:
        raise ValidationError(f"{where}: missing key 'p'")
    obstacles = tuple(
        _obstacle_from_json(ob, f"{where}.obstacles[{i}]")
        for i, ob in enumerate(data.get("obstacles", ())))
    return FuturePrediction(float(data["p"]), obstacles, str(data.get("label", "")))


def load_scenario(source) -> ScenarioSpec:
    """Load a scenario from a file path or a JSON text string."""
    if isinstance(source, (str, os.PathLike)):
        text = str(source)
        if isinstance(source, os.PathLike) or not text.lstrip().startswith("{"):
            try:
                with open(source, "r", encoding="utf-8") as f:
                    text = f.read()
            except OSError as e:
                raise ParseError(f"cannot read scenario file {source}: {e}") from e
    else:
        raise ParseError(f"unsupported scenario source type {type(source)!r}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed scenario JSON: {e}") from e
    if not isinstance(data, dict):
        raise ParseError("scenario JSON must be an object")

    for key in ("ego", "limits", "dt", "horizon_steps", "reveal", "true_future_index"):
        if key not in data:
            raise ValidationError(f"{key}: missing from scenario")
    try:
        ego = EgoState(float(data["ego"]["s0"]), float(data["ego"]["v0"]),
                       float(data["ego"]["a0"]))
    except KeyError as e:
        raise ValidationError(f"ego: missing key {e.args[0]!r}") from e
    try:
        lim = data["limits"]
        limits = Limits(float(lim["v_max"]), float(lim["a_min"]), float(lim["a_max"]),
                        float(lim["j_min"]), float(lim["j_max"]), float(lim["s_max"]))
    except KeyError as e:
        raise ValidationError(f"limits: missing key {e.args[0]!r}") from e

    rev = data["reveal"]
    mode = rev.get("mode")
    if mode == "fixed":
        if "t_R" not in rev:
            raise ValidationError("reveal.t_R: missing for mode 'fixed'")
        reveal = RevealModel("fixed", t_R_fixed=int(rev["t_R"]))
    elif mode == "pmf":
        reveal = RevealModel("pmf", pmf=tuple(float(p) for p in rev.get("pmf", ())))
    else:
        raise ValidationError(f"reveal.mode: unknown mode {mode!r}")

    agents = futures = None
    if ("agents" in data) and ("futures" in data):
        raise ValidationError("agents/futures: exactly one of the two forms must be given")
    if "agents" in data:
        agents = tuple(
            tuple(_future_from_json(p, f"agents[{ai}][{pi}]")
                  for pi, p in enumerate(preds))
            for ai, preds in enumerate(data["agents"]))
    elif "futures" in data:
        futures = tuple(
            _future_from_json(f, f"futures[{fi}]")
            for fi, f in enumerate(data["futures"]))
    else:
        raise ValidationError("agents/futures: one of the two forms must be given")

    return ScenarioSpec(ego=ego, limits=limits, dt=float(data["dt"]),
                        horizon_steps=int(data["horizon_steps"]), reveal=reveal,
                        true_future_index=int(data["true_future_index"]),
                        agents=agents, futures=futures)


def serialize_scenario(spec: ScenarioSpec) -> str:
    """JSON text such that load_scenario(serialize_scenario(s)) == s."""

    def future_json(f: FuturePrediction):
        return {"p": f.probability, "label": f.label,
                "obstacles": [{"t_in": ob.t_in, "t_out": ob.t_out,
                               "s_in": ob.s_in, "s_out": ob.s_out}
                              for ob in f.obstacles]}

    data = {
        "ego": {"s0": spec.ego.s0, "v0": spec.ego.v0, "a0": spec.ego.a0},
        "limits": {"v_max": spec.limits.v_max, "a_min": spec.limits.a_min,
                   "a_max": spec.limits.a_max, "j_min": spec.limits.j_min,
                   "j_max": spec.limits.j_max, "s_max": spec.limits.s_max},
        "dt": spec.dt,
        "horizon_steps": spec.horizon_steps,
        "reveal": ({"mode": "fixed", "t_R": spec.reveal.t_R_fixed}
                   if spec.reveal.mode == "fixed"
                   else {"mode": "pmf", "pmf": list(spec.reveal.pmf)}),
        "true_future_index": spec.true_future_index,
    }
    if spec.agents is not None:
        data["agents"] = [[future_json(p) for p in preds] for preds in spec.agents]
    else:
        data["futures"] = [future_json(f) for f in spec.futures]
    return json.dumps(data, indent=2)


def shift_future(future: FuturePrediction, t_shift: float) -> FuturePrediction:
    """Copy of a future with obstacle times moved by -t_shift (replanning)."""
    return replace(future, obstacles=tuple(
        replace(ob, t_in=ob.t_in - t_shift, t_out=ob.t_out - t_shift)
        for ob in future.obstacles))
