"""Exception hierarchy.

Validation errors describe bad input (the CLI maps them to exit code 2);
solver errors describe a well-formed problem that could not be solved
(exit code 3).
"""


class AraError(Exception):
    """Base class for all errors raised by ara_engine."""


class ValidationError(AraError, ValueError):
    """Input does not satisfy the model invariants."""


class UnknownActionError(ValidationError, KeyError):
    """An action or outcome label is not part of the game."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown action"


class JudgmentsAbsentError(ValidationError):
    """An agent's probability or utility table is required but missing."""


class CKDataRequiredError(JudgmentsAbsentError):
    """A game-theoretic baseline needs the attacker's tables as common knowledge."""


class ShapeConflictError(ValidationError):
    """Judgment specs do not match the shape of the game."""


class SolverError(AraError, RuntimeError):
    """A solver could not produce an answer."""


class InstanceTooLargeError(SolverError):
    """Exhaustive enumeration would exceed the configured cap."""


class QuadratureError(SolverError):
    """Numerical integration did not reach the requested tolerance."""


class PreconditionError(AraError, ValueError):
    """A result's precondition is not met, so no verdict is given."""
