"""Heat kernel, semigroup and resolvent of ``A u = gamma x u'' + b u'`` on ``[0, inf)``."""

from .errors import BudgetExceededError, ContractError, DomainError
from .functions import TestFunction
from .kernel import KernelEval, Params, atom_mass, density
from .quadrature import QuadratureSpec
from .semigroup import apply, derivative, generator_apply, translated_moment, x_second_derivative
from .resolvent import ResolventQuery, resolve, resolve_derivative

__all__ = [
    "BudgetExceededError",
    "ContractError",
    "DomainError",
    "KernelEval",
    "Params",
    "QuadratureSpec",
    "ResolventQuery",
    "TestFunction",
    "apply",
    "atom_mass",
    "density",
    "derivative",
    "generator_apply",
    "resolve",
    "resolve_derivative",
    "translated_moment",
    "x_second_derivative",
]

__version__ = "0.1.0"
