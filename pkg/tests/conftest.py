from fractions import Fraction

import numpy as np
import pytest

from torus_nls.nonlin_poly import ComplexPolynomial4, DifferentialDensity, GaussianRational

A, B, AC, BC = (ComplexPolynomial4.var(i) for i in range(4))
PSI, PSIX, PSIC, PSIXC = (DifferentialDensity.var(i) for i in range(4))
I = GaussianRational(0, 1)

DNLS = 2 * A * AC * B + A ** 2 * BC  # d_x(|u|^2 u)
I_DNLS = I * DNLS


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_nonlinearity(rng, max_degree=4):
    """Random F of total degree <= max_degree; roughly half are built to be well-posed.

    Well-posed branch: F_beta = S + D_x h with S self-conjugate and h a
    polynomial in (u, conj u), plus any beta-free part.
    """
    from torus_nls.nonlin_poly import re_part, as_poly4

    def gauss():
        return GaussianRational(int(rng.integers(-2, 3)), int(rng.integers(-2, 3)))

    def poly_in(slots, max_deg, nterms):
        p = ComplexPolynomial4()
        for _ in range(nterms):
            e = [0, 0, 0, 0]
            for _ in range(int(rng.integers(0, max_deg + 1))):
                e[slots[int(rng.integers(len(slots)))]] += 1
            p = p + ComplexPolynomial4.monomial(tuple(e), gauss())
        return p

    if rng.random() < 0.5:
        S = as_poly4(re_part(poly_in([0, 2], max_degree - 1, 2)))
        h = poly_in([0, 2], max_degree - 1, 2)
        h_a, h_ac = h.diff(0), h.diff(2)
        F = S * B + h_a * B * B * GaussianRational(Fraction(1, 2)) + h_ac * B * BC + poly_in([0, 2, 3], max_degree, 2)
        if F.degree() > max_degree:
            return random_nonlinearity(rng, max_degree)
        return F
    return poly_in([0, 1, 2, 3], max_degree, 3)


def direct_mizohata(F, coeffs, n=256):
    """Quadrature of Im F_beta at psi = sum_k c_k e^{ikx} with analytic derivatives."""
    x = -np.pi + 2 * np.pi * np.arange(n) / n
    psi = sum(c * np.exp(1j * k * x) for k, c in coeffs.items())
    psix = sum(1j * k * c * np.exp(1j * k * x) for k, c in coeffs.items())
    Fb = F.diff(1)
    return float(np.mean(Fb.evaluate((psi, psix, np.conj(psi), np.conj(psix))).imag))


def oracle_verdict(F, rng, samples=200, tol=1e-6):
    for j in range(samples):
        deg = int(rng.integers(0, 5))
        coeffs = {k: (rng.normal() + 1j * rng.normal()) / (1 + abs(k)) for k in range(-deg, deg + 1)}
        if abs(direct_mizohata(F, coeffs)) > tol:
            return "IllPosed"
    return "WellPosed"


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if name.startswith("test_criterion_") and (report.when == "call" or report.failed):
        if report.when == "call" or name not in _CRITERIA:
            _CRITERIA[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda x: int(x.split("_")[2])):
        number = name.split("_")[2]
        label = "_".join(name.split("_")[3:]).replace("_", " ")
        terminalreporter.write_line(f"criterion {number}: {_CRITERIA[name]}  ({label})")
