"""Classification and numerical study of u_t + (i - eps) u_xx = F(u, u_x, conj u, conj u_x) on the circle."""

from .classifier import ClassificationVerdict, decide, mizohata_functional
from .nonlin_poly import ComplexPolynomial4, GaussianRational
from .solver import SolverConfig, Trajectory, evolve
from .spectral import GridFunction

__all__ = [
    "ClassificationVerdict",
    "ComplexPolynomial4",
    "GaussianRational",
    "GridFunction",
    "SolverConfig",
    "Trajectory",
    "decide",
    "evolve",
    "mizohata_functional",
]
__version__ = "0.1.0"
