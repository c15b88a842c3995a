"""Exception types shared by the numerical modules."""


class DomainError(ValueError):
    """An argument lies outside the documented domain of an operation."""


class ContractError(ValueError):
    """A required ingredient (e.g. a derivative of a test function) is missing."""


class BudgetExceededError(RuntimeError):
    """A series or quadrature did not converge within its node/term budget.

    The best available estimate is attached as ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
