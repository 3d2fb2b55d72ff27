"""Exception types shared across the planning stack."""


class PlanningError(Exception):
    """Base class for all mfplan errors."""


class ParseError(PlanningError):
    """Scenario source is not well-formed JSON / not readable."""


class ValidationError(PlanningError):
    """A scenario value violates a documented invariant. Message names the field."""


class CombinatorialLimitExceeded(PlanningError):
    """Joint-future composition would exceed the configured cap."""


class InfeasibleCorridor(PlanningError):
    """Monotonization produced crossing bounds (lb > ub) somewhere."""


class Infeasible(PlanningError):
    """Approximate profile cannot be built for the given bounds/start point."""


class RecursionDepthExceeded(PlanningError):
    """Split count exceeded the horizon length; signals an internal bug."""


class DimensionMismatch(PlanningError):
    """QP inputs disagree on horizon length or future count."""


class EmptyPrefixBand(PlanningError):
    """Corridor intersection is empty inside the locked prefix (t_d too large)."""


class SeamViolation(PlanningError):
    """Prefix and suffix blocks disagree at the handover step; internal bug."""


class NoCorridor(PlanningError):
    """A future ended up with zero feasible corridors."""

    def __init__(self, future_index: int):
        super().__init__(f"future {future_index} has no feasible corridor")
        self.future_index = future_index


class NoFeasibleLock(PlanningError):
    """Even a one-step shared prefix is infeasible for this candidate tuple."""


class NoPlan(PlanningError):
    """No candidate solved and no previous plan exists to fall back on."""
