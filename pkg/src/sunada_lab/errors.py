"""Exception hierarchy shared by all modules."""


class SunadaLabError(Exception):
    """Base class for every error raised by sunada_lab."""


class CapExceeded(SunadaLabError):
    pass


class NotAlmostConjugate(SunadaLabError):
    pass


class NoInvertibleFound(SunadaLabError):
    def __init__(self, seeds):
        self.seeds = list(seeds)
        super().__init__(f"no invertible intertwiner found; seeds tried: {self.seeds}")


class IllConditioned(SunadaLabError):
    pass


class SubgroupNotContained(SunadaLabError):
    pass


class NotNormalizing(SunadaLabError):
    pass


class MissingPhase(SunadaLabError):
    pass


class MissingPotential(SunadaLabError):
    pass


class NonHermitian(SunadaLabError):
    pass


class LengthMismatch(SunadaLabError):
    pass


class DimensionMismatch(SunadaLabError):
    pass


class EigenResidualError(SunadaLabError):
    pass


class BadK(SunadaLabError):
    pass


class NotInvariant(SunadaLabError):
    """A field declared G-invariant is not constant on a deck orbit."""

    def __init__(self, message, orbit=None):
        self.orbit = orbit
        super().__init__(message)


class RNotInvariant(NotInvariant):
    pass


class ValidationFailed(SunadaLabError):
    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")
