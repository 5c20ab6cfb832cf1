"""Exception hierarchy shared by every stage of the toolkit."""


class AmdnError(Exception):
    """Base class for all domain errors (CLI exit code 1)."""


class AmdnSyntaxError(AmdnError):
    """Malformed input text.

    Attributes:
        line: 1-based line of the offending token (0 if unknown).
        column: 1-based column of the offending token (0 if unknown).
        expected: description of what the reader expected, if known.
    """

    def __init__(self, message, line=0, column=0, expected=None):
        self.line = line
        self.column = column
        self.expected = expected
        where = f"line {line}, column {column}: " if line else ""
        tail = f" (expected {expected})" if expected else ""
        super().__init__(f"{where}{message}{tail}")


class SemanticError(AmdnError):
    """Well-formed text that refers to undeclared symbols or has wrong arity."""


class UnsupportedFeature(AmdnError):
    """PDDL requirement or construct outside the typed-STRIPS fragment."""


class SchemaMismatch(AmdnError):
    """A ground action, literal, or domain does not match the schema it is used with."""


class ValidationError(AmdnError):
    """A trace refers to unknown actions or objects, or violates typing."""


class NoPlanWithinBudget(AmdnError):
    pass


class InapplicableModel(AmdnError):
    """The ground-truth model cannot execute a step it is asked to execute."""


class PairOutOfScope(AmdnError):
    pass


class BudgetExceeded(AmdnError):
    """Exact search ran out of time; carries the incumbent and the best lower bound."""

    def __init__(self, message, incumbent=None, lower_bound=None):
        super().__init__(message)
        self.incumbent = incumbent
        self.lower_bound = lower_bound


class HardUnsat(AmdnError):
    pass


class NoFeasibleFound(AmdnError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class HardViolation(AmdnError):
    pass


class UnknownVariable(AmdnError):
    pass


class EmptyInput(AmdnError):
    pass


class MixedVariation(AmdnError):
    pass
