"""Exception hierarchy shared by all modules."""


class FredfamError(Exception):
    """Base class for every error raised by the package."""


class StructuralError(FredfamError, ValueError):
    """Malformed parameter space or operator data."""


class PreconditionError(FredfamError, ValueError):
    pass


class UnsupportedCombinationError(FredfamError, TypeError):
    """Arithmetic between operators of different model classes."""


class OnEssentialSpectrumError(FredfamError):
    """The symbol curve passes within the Fredholm margin of the spectral parameter."""


class InstabilityError(FredfamError):
    """Finite-section estimates did not stabilize under doubling."""


class NotFredholmFamilyError(FredfamError):
    def __init__(self, message, offending=()):
        super().__init__(message)
        self.offending = list(offending)


class DiscretizationError(FredfamError):
    """Sampled points of one component disagree on the index."""


class InconclusiveError(FredfamError):
    """Input sequence does not satisfy the convergence premise."""


class IllPosedError(FredfamError):
    pass


class HypothesisViolation(FredfamError):
    """Structural hypothesis of a limit theorem does not hold; no claim is made."""


class SchemaError(FredfamError, ValueError):
    pass
