"""Exact well-/ill-posedness classification of a polynomial nonlinearity.

With G = Im F_beta read as a first-order differential density in psi, the
mean of G(psi, psi_x, conj psi, conj psi_x) vanishes for every psi exactly
when G is a total x-derivative with zero constant term. The variational
(Euler) derivative decides the first part over exact arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from .nonlin_poly import (
    ComplexPolynomial4,
    DifferentialDensity,
    GaussianRational,
    J_PSI,
    J_PSIC,
    J_PSIX,
    J_PSIXC,
    JetPolynomial,
    as_density,
    im_part,
    jet_to_first_order,
    lift_to_jet,
    total_derivative,
    wirtinger_derivative,
)
from .pointwise import mean_of_poly, random_trig_poly
from .spectral import GridFunction

WELL_POSED = "WellPosed"
ILL_POSED = "IllPosed"
WITNESS_TOL = 1e-6
WITNESS_GRID = 64
DEFAULT_SEED = 20240501


class WitnessNotFound(RuntimeError):
    """The exact test says ill-posed but no numeric witness was found."""


class ExactnessViolation(RuntimeError):
    """A constructed potential does not differentiate back to the density."""


@dataclass
class ClassificationVerdict:
    status: str
    nonlinearity: ComplexPolynomial4
    density: DifferentialDensity
    potential: Optional[DifferentialDensity] = None
    witness: Optional[GridFunction] = None
    witness_description: Optional[dict] = None
    mizohata_value_at_witness: float = 0.0
    mizohata_value_at_one: float = 0.0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.status == ILL_POSED and (self.witness is None or not abs(self.mizohata_value_at_witness) > 0):
            raise ValueError("an ill-posed verdict needs a witness with nonzero Mizohata value")

    @property
    def well_posed(self) -> bool:
        return self.status == WELL_POSED

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "nonlinearity": self.nonlinearity.to_term_list(),
            "nonlinearity_text": str(self.nonlinearity),
            "density": self.density.to_term_list(),
            "potential": None if self.potential is None else self.potential.to_term_list(),
            "witness": self.witness_description,
            "mizohata_value_at_witness": self.mizohata_value_at_witness,
            "mizohata_value_at_one": self.mizohata_value_at_one,
            "seed": self.seed,
        }


def mizohata_density(F: ComplexPolynomial4) -> DifferentialDensity:
    """G = Im F_beta as a density in (psi, psi_x, conj psi, conj psi_x)."""
    return im_part(wirtinger_derivative(F, "beta"))


def mizohata_functional(F: ComplexPolynomial4, psi: GridFunction) -> float:
    """Normalized integral of Im F_beta(psi, psi_x, conj psi, conj psi_x)."""
    if psi.n < 4:
        raise ValueError("need at least 4 grid points")
    if not psi.is_finite():
        raise ValueError("psi has non-finite values")
    return mean_of_poly(mizohata_density(F), psi).real


def _density_mean(G: DifferentialDensity, psi: GridFunction) -> float:
    return mean_of_poly(G, psi).real


def euler_operator(G: DifferentialDensity) -> Tuple[JetPolynomial, JetPolynomial]:
    """(E_psi G, E_psibar G) with E_psi G = dG/dpsi - D_x(dG/dpsi_x)."""
    g = lift_to_jet(G)
    e_psi = g.diff(J_PSI) - total_derivative(g.diff(J_PSIX))
    e_psic = g.diff(J_PSIC) - total_derivative(g.diff(J_PSIXC))
    return e_psi, e_psic


def is_null_lagrangian(G: DifferentialDensity) -> bool:
    e1, e2 = euler_operator(G)
    return e1.is_zero() and e2.is_zero()


def construct_potential(G: DifferentialDensity) -> DifferentialDensity:
    """Phi(psi, conj psi) with D_x Phi = G, by the homotopy formula.

    The integrand psi*dG/dpsi_x + conj(psi)*dG/dconj(psi_x) is evaluated
    along the ray lambda*(psi, ...); integrating lambda^(d-1) over [0, 1]
    divides each degree-d monomial by d.
    """
    if not is_null_lagrangian(G) or G.constant_term():
        raise ExactnessViolation("density is not a total derivative")
    psi = DifferentialDensity.var(0)
    psic = DifferentialDensity.var(2)
    integrand = psi * G.diff(1) + psic * G.diff(3)
    terms = {}
    for e, c in integrand.terms.items():
        d = sum(e)
        terms[e] = c * Fraction(1, d)
    phi = DifferentialDensity(terms)
    if phi.degree_in(1) or phi.degree_in(3):
        raise ExactnessViolation("potential depends on derivatives")
    if jet_to_first_order(total_derivative(lift_to_jet(phi))) != G:
        raise ExactnessViolation("D_x(Phi) differs from G")
    return phi


# -- witness search ----------------------------------------------------------

def _constant_lattice():
    def ordered(vals):
        pts = {GaussianRational(a, b) for a in vals for b in vals}
        return sorted(
            pts,
            key=lambda c: (
                c.re * c.re + c.im * c.im,
                float(np.mod(np.angle(complex(c)), 2 * np.pi)),
            ),
        )

    ints = ordered([0, 1, -1, 2, -2])
    halves = [c for c in ordered([Fraction(k, 2) for k in range(-3, 4)]) if c not in set(ints)]
    return ints + halves


def _trig_lattice():
    vals = [GaussianRational(0), GaussianRational(1), GaussianRational(0, 1), GaussianRational(-1), GaussianRational(0, -1)]
    for c0, c1, c2 in itertools.product(vals, repeat=3):
        if not (c1 or c2):
            continue
        yield c0, c1, c2


def find_witness(
    F: ComplexPolynomial4,
    seed: int = DEFAULT_SEED,
    n: int = WITNESS_GRID,
    random_budget: int = 400,
):
    """Search for psi with |M[psi]| > 1e-6.

    Order: constants on a Gaussian-rational lattice, then
    c0 + c1 e^{ix} + c2 e^{-ix} on a small lattice, then seeded random
    trigonometric polynomials of degree <= 8. Returns (psi, description, M).
    """
    G = mizohata_density(F)
    for c in _constant_lattice():
        psi = GridFunction.constant(n, complex(c))
        m = _density_mean(G, psi)
        if abs(m) > WITNESS_TOL:
            return psi, {"kind": "constant", "c": list(c.to_pair())}, m
    for c0, c1, c2 in _trig_lattice():
        psi = GridFunction.from_modes(n, {0: complex(c0), 1: complex(c1), -1: complex(c2)})
        m = _density_mean(G, psi)
        if abs(m) > WITNESS_TOL:
            return psi, {"kind": "trig1", "c0": list(c0.to_pair()), "c1": list(c1.to_pair()), "c_minus1": list(c2.to_pair())}, m
    rng = np.random.default_rng(seed)
    for trial in range(random_budget):
        degree = int(rng.integers(1, 9))
        psi = random_trig_poly(rng, n, degree)
        m = _density_mean(G, psi)
        if abs(m) > WITNESS_TOL:
            coeffs = {int(k): [float(psi.coeff(k).real), float(psi.coeff(k).imag)] for k in range(-degree, degree + 1)}
            return psi, {"kind": "random", "seed": seed, "trial": trial, "degree": degree, "coeffs": coeffs}, m
    raise WitnessNotFound(f"no witness for {F} after full search budget")


def decide(F: ComplexPolynomial4, seed: int = DEFAULT_SEED) -> ClassificationVerdict:
    G = mizohata_density(F)
    m_one = _density_mean(G, GridFunction.constant(WITNESS_GRID, 1.0))
    if is_null_lagrangian(G) and not G.constant_term():
        return ClassificationVerdict(
            status=WELL_POSED,
            nonlinearity=F,
            density=G,
            potential=construct_potential(G),
            mizohata_value_at_one=m_one,
            seed=seed,
        )
    psi, desc, m = find_witness(F, seed=seed)
    return ClassificationVerdict(
        status=ILL_POSED,
        nonlinearity=F,
        density=G,
        witness=psi,
        witness_description=desc,
        mizohata_value_at_witness=m,
        mizohata_value_at_one=m_one,
        seed=seed,
    )
