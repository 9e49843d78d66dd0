"""Exact polynomial algebra for nonlinearities F(alpha, beta, alpha_bar, beta_bar).

Coefficients are Gaussian rationals so that "is this identically zero" is an
exact question. Floating point only enters through :meth:`Poly.evaluate`.

Variable slots of a four-variable polynomial are ordered
``(alpha, beta, alpha_bar, beta_bar)``. When the same object is read as a
differential density the slots mean ``(psi, psi_x, psi_bar, psi_bar_x)``.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Mapping, Sequence, Tuple, Union

import numpy as np

Exponent = Tuple[int, ...]

ALPHA, BETA, ALPHA_BAR, BETA_BAR = 0, 1, 2, 3
VAR_INDEX = {
    "alpha": ALPHA,
    "beta": BETA,
    "alpha_bar": ALPHA_BAR,
    "beta_bar": BETA_BAR,
}
# slot i <-> slot CONJ_SWAP4[i] under formal conjugation
CONJ_SWAP4 = (2, 3, 0, 1)


class GaussianRational:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: Union[int, Fraction, str] = 0, im: Union[int, Fraction, str] = 0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Rational)):
            return cls(Fraction(x))
        if isinstance(x, complex):
            # only exactly representable parts are accepted
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, float):
            return cls(Fraction(x))
        raise TypeError(f"cannot coerce {type(x).__name__} to GaussianRational")

    @classmethod
    def _maybe(cls, x):
        try:
            return cls.coerce(x)
        except TypeError:
            return None

    def __add__(self, other):
        o = GaussianRational._maybe(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        o = GaussianRational._maybe(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __mul__(self, other):
        o = GaussianRational._maybe(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational._maybe(other)
        if o is None:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        num = self * o.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __eq__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"

    def to_pair(self) -> Tuple[str, str]:
        return (str(self.re), str(self.im))

    @classmethod
    def from_pair(cls, pair: Sequence[str]) -> "GaussianRational":
        return cls(Fraction(pair[0]), Fraction(pair[1]))


I = GaussianRational(0, 1)
ZERO = GaussianRational(0)
ONE = GaussianRational(1)


class Poly:
    """Sparse polynomial with Gaussian-rational coefficients.

    ``terms`` maps exponent tuples to nonzero coefficients. Instances are
    immutable; all arithmetic returns new objects.
    """

    nvars: int = 4
    var_names: Tuple[str, ...] = ("a", "b", "ac", "bc")

    __slots__ = ("_terms",)

    def __init__(self, terms: Union[Mapping[Exponent, object], None] = None):
        clean: Dict[Exponent, GaussianRational] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.nvars or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for {self.nvars} variables")
            c = GaussianRational.coerce(c)
            if c:
                clean[exp] = clean.get(exp, ZERO) + c
                if not clean[exp]:
                    del clean[exp]
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, c) -> "Poly":
        return cls({(0,) * cls.nvars: c})

    @classmethod
    def var(cls, index: int) -> "Poly":
        exp = [0] * cls.nvars
        exp[index] = 1
        return cls({tuple(exp): ONE})

    @classmethod
    def monomial(cls, exp: Exponent, c=1) -> "Poly":
        return cls({tuple(exp): c})

    def _like(self, terms) -> "Poly":
        return type(self)(terms)

    # -- views --------------------------------------------------------------
    @property
    def terms(self) -> Dict[Exponent, GaussianRational]:
        return dict(self._terms)

    def items(self) -> Iterable[Tuple[Exponent, GaussianRational]]:
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self._terms), default=0)

    def constant_term(self) -> GaussianRational:
        return self._terms.get((0,) * self.nvars, ZERO)

    def coefficient(self, exp: Exponent) -> GaussianRational:
        return self._terms.get(tuple(exp), ZERO)

    # -- ring operations ----------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise TypeError("polynomials over different variable sets")
            return other
        return type(self).constant(other)

    def __add__(self, other):
        o = self._coerce(other)
        terms = dict(self._terms)
        for e, c in o._terms.items():
            terms[e] = terms.get(e, ZERO) + c
        return self._like(terms)

    __radd__ = __add__

    def __neg__(self):
        return self._like({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        terms: Dict[Exponent, GaussianRational] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in o._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, ZERO) + c1 * c2
        return self._like(terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = type(self).constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c) -> "Poly":
        c = GaussianRational.coerce(c)
        return self._like({e: c * v for e, v in self._terms.items()})

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._terms == other._terms
        try:
            return self._terms == type(self).constant(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self._terms.items())))

    # -- calculus -----------------------------------------------------------
    def diff(self, index: int) -> "Poly":
        """Formal partial derivative in one variable slot."""
        terms = {}
        for e, c in self._terms.items():
            if e[index]:
                ne = list(e)
                ne[index] -= 1
                terms[tuple(ne)] = c * e[index]
        return self._like(terms)

    # -- evaluation ---------------------------------------------------------
    def evaluate(self, point: Sequence):
        """Evaluate at complex scalars or equally shaped numpy arrays.

        Coefficients are converted to complex doubles; powers of each
        argument are built once and reused (Horner-like in each slot).
        """
        if len(point) != self.nvars:
            raise ValueError(f"expected {self.nvars} arguments")
        if not self._terms:
            shapes = [np.shape(p) for p in point]
            shape = np.broadcast_shapes(*shapes) if shapes else ()
            return np.zeros(shape, dtype=complex) if shape else 0j
        args = [np.asarray(p, dtype=complex) for p in point]
        powers = []
        for i, a in enumerate(args):
            top = self.degree_in(i)
            pw = [np.ones_like(a)]
            for _ in range(top):
                pw.append(pw[-1] * a)
            powers.append(pw)
        total = None
        for e, c in sorted(self._terms.items()):
            term = complex(c)
            for i, k in enumerate(e):
                if k:
                    term = term * powers[i][k]
            total = term if total is None else total + term
        total = np.asarray(total, dtype=complex)
        shape = np.broadcast_shapes(*[a.shape for a in args])
        total = np.broadcast_to(total, shape).copy() if total.shape != shape else total
        if total.ndim == 0:
            return complex(total)
        return total

    # -- display / serialization -------------------------------------------
    def __repr__(self):
        return f"{type(self).__name__}({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.items():
            mono = "*".join(
                name if k == 1 else f"{name}^{k}"
                for name, k in zip(self.var_names, e)
                if k
            )
            if not mono:
                parts.append(str(c))
            elif c == ONE:
                parts.append(mono)
            elif c == -ONE:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts)

    def to_term_list(self) -> list:
        """JSON-friendly ``[[exponents], [re, im]]`` list, sorted."""
        return [[list(e), list(c.to_pair())] for e, c in self.items()]

    @classmethod
    def from_term_list(cls, data) -> "Poly":
        return cls({tuple(e): GaussianRational.from_pair(c) for e, c in data})


class ComplexPolynomial4(Poly):
    """Polynomial in (alpha, beta, alpha_bar, beta_bar) = (u, u_x, conj u, conj u_x)."""

    nvars = 4
    var_names = ("u", "ux", "uc", "uxc")
    __slots__ = ()


class DifferentialDensity(ComplexPolynomial4):
    """Same representation, read as a density in (psi, psi_x, psi_bar, psi_bar_x)."""

    var_names = ("psi", "psix", "psic", "psixc")
    __slots__ = ()


def as_density(p: Poly) -> DifferentialDensity:
    return DifferentialDensity(p.terms)


def as_poly4(p: Poly) -> ComplexPolynomial4:
    return ComplexPolynomial4(p.terms)


def _resolve_var(var) -> int:
    if isinstance(var, int):
        if not 0 <= var < 4:
            raise ValueError(f"variable slot {var} out of range")
        return var
    try:
        return VAR_INDEX[var]
    except KeyError:
        raise ValueError(f"unknown variable {var!r}; use one of {sorted(VAR_INDEX)}") from None


def wirtinger_derivative(p: ComplexPolynomial4, var) -> ComplexPolynomial4:
    """Wirtinger derivative of ``p`` in one of alpha, beta, alpha_bar, beta_bar.

    Treating a variable and its conjugate as independent, the Wirtinger
    derivative of a polynomial is its formal partial derivative.
    """
    return p.diff(_resolve_var(var))


def conjugate_poly(p: ComplexPolynomial4) -> ComplexPolynomial4:
    """Formal complex conjugate: conjugate coefficients, swap u<->conj u, u_x<->conj u_x."""
    terms = {}
    for e, c in p.terms.items():
        terms[tuple(e[CONJ_SWAP4[i]] for i in range(4))] = c.conjugate()
    return type(p)(terms)


def im_part(p: ComplexPolynomial4) -> DifferentialDensity:
    """Imaginary part as a density: (p - conj p) / (2i)."""
    diff = p - conjugate_poly(p)
    return as_density(diff.scale(GaussianRational(0, Fraction(-1, 2))))


def re_part(p: ComplexPolynomial4) -> DifferentialDensity:
    return as_density((p + conjugate_poly(p)).scale(Fraction(1, 2)))


def evaluate(p: Poly, point: Sequence):
    return p.evaluate(point)


def is_real_density(p: Poly) -> bool:
    """True when ``p`` is fixed by formal conjugation (real-valued for every psi)."""
    return conjugate_poly(as_poly4(p)) == as_poly4(p)


# -- second-order jet polynomials -------------------------------------------

# jet slots: psi, psi_x, psi_xx, psi_bar, psi_bar_x, psi_bar_xx
J_PSI, J_PSIX, J_PSIXX, J_PSIC, J_PSIXC, J_PSIXXC = range(6)
_FIRST_TO_JET = (J_PSI, J_PSIX, J_PSIC, J_PSIXC)


class JetPolynomial(Poly):
    """Differential polynomial up to second order in psi and psi_bar."""

    nvars = 6
    var_names = ("psi", "psix", "psixx", "psic", "psixc", "psixxc")
    __slots__ = ()


def lift_to_jet(p: Poly) -> JetPolynomial:
    terms = {}
    for e, c in p.terms.items():
        je = [0] * 6
        for slot, k in zip(_FIRST_TO_JET, e):
            je[slot] = k
        terms[tuple(je)] = c
    return JetPolynomial(terms)


def total_derivative(p: JetPolynomial) -> JetPolynomial:
    """Formal x-derivative D_x of a jet polynomial of order at most one.

    Raises ValueError if ``p`` already depends on second derivatives, since
    the result would need third-order jet variables.
    """
    if p.degree_in(J_PSIXX) or p.degree_in(J_PSIXXC):
        raise ValueError("total_derivative needs a first-order jet polynomial")
    out = JetPolynomial()
    for src, dst in ((J_PSI, J_PSIX), (J_PSIX, J_PSIXX), (J_PSIC, J_PSIXC), (J_PSIXC, J_PSIXXC)):
        out = out + p.diff(src) * JetPolynomial.var(dst)
    return out


def jet_to_first_order(p: JetPolynomial) -> DifferentialDensity:
    if p.degree_in(J_PSIXX) or p.degree_in(J_PSIXXC):
        raise ValueError("polynomial depends on second derivatives")
    terms = {}
    for e, c in p.terms.items():
        terms[tuple(e[s] for s in _FIRST_TO_JET)] = c
    return DifferentialDensity(terms)
