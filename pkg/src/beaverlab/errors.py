"""Shared exception types.

The CLI maps these onto exit codes: UsageError -> 2, CapExceeded and
its subclasses -> 3, everything else that signals a failed property or
a losing strategy -> 1.
"""


class UsageError(ValueError):
    """A caller violated a documented precondition."""


class CapExceeded(RuntimeError):
    """A configured resource cap was hit before the operation finished."""


class EnumerationCapExceeded(CapExceeded):
    """Program-space enumeration would exceed the configured cap."""


class WorkCapExceeded(CapExceeded):
    """A scan or refinement loop hit its budget (possibly convergent input)."""


class NoConvergence(CapExceeded):
    """Declared tail bounds never certified the comparison within the cap."""


class RuleViolation(ValueError):
    """An input stream broke its monotonicity or budget contract."""


class PadError(ValueError):
    """A plain program is too long for the requested padded length."""


class InvalidProgram(ValueError):
    """A bitstring is not a valid plain program."""


class StrategyExhausted(RuntimeError):
    """A strategy ran out of moves; indicates a violated hypothesis."""


class BudgetExhausted(RuntimeError):
    """A player spent their whole budget without reaching a decision."""
