"""Exception types shared across the package."""


class MetrilabError(Exception):
    """Base class for all package errors."""


class IntegrationDivergedError(MetrilabError):
    """Integration produced a non-finite state. Carries the failing step index."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class SingularMatrixError(MetrilabError):
    """Linear solve hit a singular (or non-PD) normal-equation system."""


class NoConvergenceError(MetrilabError):
    """Iterative estimate failed to converge within the iteration cap."""


class BoundaryStateError(MetrilabError):
    """Physical state sits inside the declared basin-boundary band."""


class InvalidConfigError(MetrilabError):
    """Bad configuration value or unknown key."""


class InvalidGateParamsError(MetrilabError):
    """Gate parameters outside the verified bistability/monostability regime."""


class NoSettleError(MetrilabError):
    """Circuit state still in the forbidden band at t_max."""

    def __init__(self, message, final_state=None):
        self.final_state = final_state
        super().__init__(message)


class NonFixedPointError(MetrilabError):
    """Circuit keeps moving inside a logical interval (oscillation in window)."""


class AmbiguousStateError(MetrilabError):
    """Symmetric race or unresolvable tie in a bistable element."""


class UndefinedIntelligenceError(MetrilabError):
    """Work-per-nat ratio requested with zero irreversible information."""


class UndefinedConsciousnessError(MetrilabError):
    """Work-per-nat ratio requested with zero preserved information."""


class UndefinedBaselineError(MetrilabError):
    """Emergence index requested with a non-positive baseline."""


class ChannelIrregularError(MetrilabError):
    """Channel Fisher integral is non-finite."""


class InsufficientDataError(MetrilabError):
    """A check needs time-resolved channels the caller did not supply."""


class BorderContactError(MetrilabError):
    """Lattice energy reached the border, invalidating the no-boundary guarantee."""


class InternalLogicError(MetrilabError):
    """A condition the implementation guarantees unreachable was reached."""
