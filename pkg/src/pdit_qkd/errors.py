class PditError(Exception):
    """Base class for all pdit-qkd errors."""

    pass


class BudgetExceededError(PditError):
    """Raised when a dense construction would exceed a configured dimension budget."""

    def __init__(self, dimension: str, requested: int, allowed: int):
        self.dimension = dimension
        self.requested = requested
        self.allowed = allowed
        super().__init__(
            f"{dimension} = {requested} exceeds the configured budget of {allowed}"
        )


def check_budget(dimension: str, requested: int, allowed: int) -> None:
    if requested > allowed:
        raise BudgetExceededError(dimension, requested, allowed)
