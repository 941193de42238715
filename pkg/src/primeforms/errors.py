"""Shared exception types."""


class BudgetExceededError(RuntimeError):
    """An enumeration or join exceeded its configured work/memory cap.

    Raised loudly instead of truncating a count; carries the offending
    cardinalities in the message.
    """
