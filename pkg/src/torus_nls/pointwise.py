"""Pointwise evaluation of polynomial nonlinearities on grid functions."""

from __future__ import annotations

import numpy as np

from .nonlin_poly import Poly
from .spectral import (
    GridFunction,
    coeffs_to_values,
    pad_coeffs,
    padded_size,
    unpad_coeffs,
    values_to_coeffs,
    wavenumbers,
)


class OverflowDetected(ArithmeticError):
    """A nonlinearity produced non-finite values (numerical blow-up)."""


def jet_on_grid(coeffs: np.ndarray, m: int):
    """(u, u_x, conj u, conj u_x) on a grid of size m from FFT-ordered coefficients."""
    n = coeffs.shape[-1]
    k = wavenumbers(n)
    uc = np.array(coeffs)
    uc[..., n // 2] = 0.0
    dc = 1j * k * uc
    u = coeffs_to_values(pad_coeffs(uc, m))
    ux = coeffs_to_values(pad_coeffs(dc, m))
    return u, ux, np.conj(u), np.conj(ux)


def apply_poly_coeffs(p: Poly, coeffs: np.ndarray, degree: int = None) -> np.ndarray:
    """Fourier coefficients of p(u, u_x, conj u, conj u_x), dealiased for ``degree``."""
    n = coeffs.shape[-1]
    if degree is None:
        degree = p.degree()
    m = padded_size(n, max(degree, 1))
    vals = p.evaluate(jet_on_grid(coeffs, m))
    vals = np.broadcast_to(vals, coeffs.shape[:-1] + (m,))
    out = unpad_coeffs(values_to_coeffs(vals), n)
    out[..., n // 2] = 0.0
    return out


def apply_poly(p: Poly, u: GridFunction, degree: int = None) -> GridFunction:
    return GridFunction.from_coeffs(apply_poly_coeffs(p, np.asarray(u.coeffs), degree))


def mean_of_poly(p: Poly, u: GridFunction) -> complex:
    """Exact zero mode of p(u, u_x, ...) for band-limited u (padded quadrature)."""
    m = padded_size(u.n, max(p.degree(), 1))
    vals = p.evaluate(jet_on_grid(np.asarray(u.coeffs), m))
    return complex(np.mean(vals))


def random_trig_poly(rng: np.random.Generator, n: int, degree: int, scale: float = 1.0) -> GridFunction:
    """Random trigonometric polynomial sum_{|k|<=degree} c_k e^{ikx} with c_k ~ scale * N(0,1)/(1+|k|)."""
    c = np.zeros(n, dtype=complex)
    for k in range(-degree, degree + 1):
        z = rng.normal() + 1j * rng.normal()
        c[k % n] = scale * z / (1.0 + abs(k))
    return GridFunction.from_coeffs(c)
