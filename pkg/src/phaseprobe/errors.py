"""Exception hierarchy shared by all phaseprobe modules."""


class PhaseProbeError(Exception):
    """Base class for every error raised by this package."""


class NormalizationError(PhaseProbeError, ValueError):
    pass


class ContractError(PhaseProbeError, ValueError):
    """An input violated a documented precondition (e.g. not normalized)."""


class PreconditionError(ContractError):
    pass


class EmptyRequest(PhaseProbeError, ValueError):
    pass


class TruncationError(PhaseProbeError):
    """The truncated basis is too small for the requested accuracy."""

    def __init__(self, message: str, tail_mass: float):
        super().__init__(f"{message} (tail mass {tail_mass:.3e})")
        self.tail_mass = tail_mass


class SupportError(PhaseProbeError, ValueError):
    pass


class MomentError(PhaseProbeError, ArithmeticError):
    pass


class SingularityError(MomentError):
    pass


class RangeError(PhaseProbeError, ValueError):
    pass


class InfeasibleError(PhaseProbeError, ValueError):
    pass


class ConvergenceError(PhaseProbeError, ArithmeticError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual
