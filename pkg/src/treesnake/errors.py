"""Error types shared across the package.

Exit-code mapping used by the CLI: usage errors -> 2, resource budget
errors -> 3, internal invariant violations -> 4.
"""


class UsageError(ValueError):
    """Bad parameters or malformed configuration."""


class BudgetExceededError(RuntimeError):
    """A per-trial resource budget was exceeded.

    Budgets are hard errors by design: a truncated sample would silently
    bias every downstream statistic.
    """

    def __init__(self, message, trial_index=None):
        if trial_index is not None:
            message = f"{message} (trial {trial_index})"
        super().__init__(message)
        self.trial_index = trial_index


class InvariantViolation(AssertionError):
    """An internal consistency check failed on sampled data."""
