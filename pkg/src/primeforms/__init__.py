"""Exact arithmetic, lattice, and counting kernels for the equation
a1*p1 + a2*p2 + a3*p3 + a4*p4 = 0 in primes, plus desk-scale experiments
on densities, minimal solutions, and counting-function variance."""

__version__ = "0.1.0"

from .errors import BudgetExceededError

__all__ = ["BudgetExceededError", "__version__"]
