"""Exception hierarchy. Validation errors and data errors are kept apart so
the CLI can map them to distinct exit codes."""


class DemsmError(Exception):
    pass


class ValidationError(DemsmError, ValueError):
    """Bad parameters or configuration."""


class DataError(DemsmError, ValueError):
    """Input data cannot support the requested computation."""


class EmptyInput(ValidationError):
    pass


class NegativeWeight(ValidationError):
    pass


class ZeroTotalWeight(ValidationError):
    pass


class GammaOutOfRange(ValidationError):
    pass


class InvalidPair(ValidationError):
    pass


class UnboundedGamma(ValidationError):
    pass


class UnboundedGammaWithNonzeroGamma1(UnboundedGamma):
    pass


class TauBelowHalf(ValidationError):
    pass


class InfeasibleBox(ValidationError):
    pass


class ResolutionOutOfRange(ValidationError):
    pass


class EmptyGrid(ValidationError):
    pass


class MissingStratumDistribution(DataError):
    pass


class NegativeImpliedDensity(DemsmError, ArithmeticError):
    pass


class EmptySample(DataError):
    pass


class EmptyArmInStratum(DataError):
    def __init__(self, stratum, arm):
        super().__init__(f"stratum {stratum!r} has no observations with t={arm}")
        self.stratum = stratum
        self.arm = arm


class DegenerateResample(DataError):
    pass
