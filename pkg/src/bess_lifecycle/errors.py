"""Exception hierarchy.

``ValidationError`` subclasses signal bad inputs (CLI exit code 1);
``OutcomeError`` subclasses signal a well-formed problem with no usable
answer, such as an infeasible program or an IRR without a root (exit code 2).
"""


class BessError(Exception):
    """Base class for all package errors."""


class ValidationError(BessError):
    pass


class OutcomeError(BessError):
    pass


# market data
class MalformedFile(ValidationError):
    pass


class NonFiniteValue(ValidationError):
    pass


class NegativeAncillaryPrice(ValidationError):
    pass


class TooShort(ValidationError):
    pass


class DivisionByZeroMileage(ValidationError):
    pass


# degradation
class DomainError(ValidationError):
    pass


class SocOutOfRange(ValidationError):
    pass


class NoRoot(OutcomeError):
    pass


# dispatch
class InfeasibleParams(ValidationError):
    pass


class Infeasible(OutcomeError):
    pass


class Unbounded(OutcomeError):
    pass


class ObjectiveMismatch(OutcomeError):
    pass


class NodeLimit(OutcomeError):
    pass


class SolverFailure(OutcomeError):
    pass


# lifecycle
class MissingData(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class KTooLarge(ValidationError):
    pass


class WrongCount(ValidationError):
    pass


class CountMismatch(ValidationError):
    pass


class NeverDies(OutcomeError):
    pass


# finance
class EmptyLedger(ValidationError):
    pass


class NoSignChange(OutcomeError):
    pass


class NoRootInBracket(OutcomeError):
    pass


class ZeroEnergy(ValidationError):
    pass


# config
class ConfigError(ValidationError):
    pass
