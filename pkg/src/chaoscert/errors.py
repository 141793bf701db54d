"""Exception hierarchy shared across the library."""


class ChaoscertError(Exception):
    """Base class for all library errors."""


class AlphabetMismatch(ChaoscertError):
    """Word / matrix alphabet sizes disagree."""


class EmptySubshift(ChaoscertError):
    """Transition matrix has spectral radius zero (no admissible sequences)."""


class PowerIterationStall(ChaoscertError):
    """Rayleigh quotients failed to settle within the iteration cap."""


class FlowError(ChaoscertError):
    """Base class for integration failures."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class StepLimitExceeded(FlowError):
    pass


class NonFiniteState(FlowError):
    pass


class StepUnderflow(FlowError):
    pass


class DomainEscape(FlowError):
    """State left the declared domain box or exceeded the escape radius."""


class SectionError(ChaoscertError):
    pass


class NoSectionHit(SectionError):
    def __init__(self, message, found=0, requested=0):
        super().__init__(message)
        self.found = found
        self.requested = requested


class TangentialCrossing(SectionError):
    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class NotOnSection(SectionError):
    pass


class NewtonDivergence(ChaoscertError):
    pass


class SingularShootingJacobian(ChaoscertError):
    pass


class NonHyperbolicOrbit(ChaoscertError):
    pass


class ManifoldGrowthError(ChaoscertError):
    def __init__(self, message, worst_point=None):
        super().__init__(message)
        self.worst_point = worst_point


class FrameResidualError(ChaoscertError):
    """Image of a frame point sits too far off the target frame plane."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class LipschitzGateError(ChaoscertError):
    """Curve Lipschitz product is >= 1, the contraction argument fails."""


class ContainmentError(ChaoscertError):
    """Nested strip sequence is not actually nested."""


class InadmissibleWord(ChaoscertError):
    pass


class NestingBreakdown(ChaoscertError):
    def __init__(self, message, depth=None):
        super().__init__(message)
        self.depth = depth


class StripConstructionError(ChaoscertError):
    pass


class MapInversionError(ChaoscertError):
    """Map handle could not invert at the requested point."""
