"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


class ScenarioError(ValueError):
    """A scenario document failed validation.

    ``path`` names the offending field, e.g. ``cameras.rows``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NoFeasiblePlanError(RuntimeError):
    """A camera has no plan that satisfies the privacy threshold."""

    def __init__(self, camera_id: int, threshold: float):
        self.camera_id = camera_id
        self.threshold = threshold
        super().__init__(
            f"camera {camera_id} has no feasible plan (privacy threshold V={threshold:g})"
        )


class InvariantViolation(RuntimeError):
    """An internal consistency check failed; the run is aborted."""


class BudgetExceededError(RuntimeError):
    """Exhaustive search refused because the combination count is too large."""

    def __init__(self, combinations: int, budget: int):
        self.combinations = combinations
        self.budget = budget
        super().__init__(
            f"exhaustive search over {combinations} plan combinations exceeds budget {budget}"
        )
