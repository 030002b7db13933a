"""Exception hierarchy shared by every module of the package."""


class NLGameError(Exception):
    """Base class for all package errors."""


class InputError(NLGameError, ValueError):
    """Malformed or inconsistent input data."""


class NumericalError(NLGameError, ArithmeticError):
    """A numerical routine did not deliver its contract."""


class HypothesisNotMet(NLGameError):
    """A theorem hypothesis (complete support, perfect guessing, ...) fails."""


# numerics
class NotHermitian(InputError):
    pass


class NotPSD(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NoConvergence(NumericalError):
    pass


# model
class AlphabetMismatch(InputError):
    pass


class InvalidStrategy(InputError):
    pass


class UnknownInput(InputError, KeyError):
    pass


class DomainError(InputError):
    pass


# classical
class TooLarge(InputError):
    pass


# classicalize
class NotCompleteSupport(HypothesisNotMet):
    def __init__(self, message, zero_pairs=()):
        super().__init__(message)
        self.zero_pairs = list(zero_pairs)


class NotPerfectGuessing(HypothesisNotMet):
    def __init__(self, message, witness=None, overlap=None):
        super().__init__(message)
        self.witness = witness
        self.overlap = overlap


class NotCommuting(HypothesisNotMet):
    def __init__(self, message, norm=None):
        super().__init__(message)
        self.norm = norm


class CommutationViolation(NotCommuting):
    pass


class DecompositionFailed(NumericalError):
    pass


class FactorizationFailed(NumericalError):
    pass
