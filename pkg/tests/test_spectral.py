import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_nls.fitting import fit_power
from torus_nls.spectral import (
    ANTIDERIVATIVE,
    GridFunction,
    bessel,
    check_grid_size,
    dealias_product,
    derivative,
    dx,
    dx_inv,
    dyadic_modes,
    l2_inner,
    make_rough_data,
    project,
    sobolev_norm,
    truncate,
    wavenumbers,
)

GRIDS = [8, 16, 32, 64, 128, 256, 512, 1024]


def random_gf(rng, n, decay=1.0):
    k = wavenumbers(n)
    c = (rng.normal(size=n) + 1j * rng.normal(size=n)) / (1 + np.abs(k)) ** decay
    c[n // 2] = 0.0
    return GridFunction.from_coeffs(c)


def test_grid_size_validation():
    for bad in (4, 12, 0, 100):
        with pytest.raises(ValueError):
            check_grid_size(bad)


def test_normalized_coefficients_of_exponential():
    f = GridFunction.from_callable(16, lambda x: np.exp(3j * x) + 2)
    assert f.coeff(3) == pytest.approx(1.0)
    assert f.coeff(0) == pytest.approx(2.0)
    assert abs(f.coeff(-3)) < 1e-15


@pytest.mark.parametrize("n", GRIDS + [2048, 4096])
def test_round_trip_and_parseval(n, rng):
    vals = rng.normal(size=n) + 1j * rng.normal(size=n)
    f = GridFunction(vals)
    back = GridFunction.from_coeffs(f.coeffs).values
    assert np.max(np.abs(back - vals)) <= 1e-12 * np.max(np.abs(vals))
    assert np.mean(np.abs(vals) ** 2) == pytest.approx(np.sum(np.abs(f.coeffs) ** 2), rel=1e-12)
    assert sobolev_norm(f, 0) ** 2 == pytest.approx(np.mean(np.abs(vals) ** 2), rel=1e-12)


def test_sobolev_norm_examples():
    assert sobolev_norm(GridFunction.constant(16, 1.0), 3.7) == pytest.approx(1.0)
    assert sobolev_norm(GridFunction.from_modes(16, {1: 1}), 1) == pytest.approx(math.sqrt(2))
    assert sobolev_norm(GridFunction.from_modes(16, {3: 1, -3: 1}), 2) == pytest.approx(10 * math.sqrt(2))


def test_projection_examples():
    f = GridFunction.from_modes(16, {0: 3, 1: 1, -2: 2})
    assert project(f, "P0") == pytest.approx(3)
    assert project(f, "Pplus").allclose(GridFunction.from_modes(16, {1: 1}))
    assert project(f, "Pminus").allclose(GridFunction.from_modes(16, {-2: 2}))
    assert sobolev_norm(project(GridFunction.constant(16, 5.0), "Pneq0"), 0) < 1e-15
    with pytest.raises(ValueError):
        project(f, "Pboth")


@pytest.mark.parametrize("n", GRIDS)
def test_antiderivative_identities(n, rng):
    f = random_gf(rng, n)
    pneq0 = project(f, "Pneq0")
    assert dx_inv(dx(f)).allclose(pneq0, 1e-12)
    assert dx(dx_inv(f)).allclose(pneq0, 1e-12)


@pytest.mark.parametrize("n", GRIDS)
def test_projections_partition(n, rng):
    f = random_gf(rng, n)
    total = project(f, "Pplus") + project(f, "Pminus") + GridFunction.constant(n, project(f, "P0"))
    assert total.allclose(f, 1e-14)


def test_bessel_inverse(rng):
    f = random_gf(rng, 64)
    assert bessel(-2.3)(bessel(2.3)(f)).allclose(f, 1e-12)
    assert bessel(1.5).then(bessel(-1.5))(f).allclose(f, 1e-12)


def test_multiplier_zeroes_nyquist():
    c = np.zeros(8, dtype=complex)
    c[4] = 1.0
    assert derivative(0)(GridFunction.from_coeffs(c)).coeff(4) == 0


def test_derivative_of_exponential():
    f = GridFunction.from_modes(16, {2: 1})
    assert dx(f, 2).allclose(GridFunction.from_modes(16, {2: -4}))
    assert ANTIDERIVATIVE(f).allclose(GridFunction.from_modes(16, {2: -0.5j}))


def test_l2_inner_normalized():
    f = GridFunction.from_modes(16, {1: 2j})
    assert l2_inner(f, f) == pytest.approx(4)


def test_truncate_examples():
    assert sobolev_norm(truncate(GridFunction.from_modes(16, {5: 1}), 4), 0) == 0
    g = GridFunction.from_modes(16, {3: 1})
    assert truncate(g, 3).allclose(g)
    with pytest.raises(ValueError):
        truncate(g, 9)


def test_truncation_rate_matches_tail_sum():
    n, s, r = 4096, 2.6, 1.6
    k = wavenumbers(n)
    c = (1 + k * k) ** (-(s + 0.55) / 2)
    c[n // 2] = 0
    phi = GridFunction.from_coeffs(c.astype(complex))
    Ns = [8, 16, 32, 64]
    errs = [sobolev_norm(truncate(phi, N) - phi, r) for N in Ns]
    tail = [math.sqrt(np.sum(((1 + k * k) ** r * c * c)[np.abs(k) > N])) for N in Ns]
    np.testing.assert_allclose(errs, tail, rtol=1e-12)
    slope, _, _ = fit_power(Ns, errs)
    assert abs(slope + (s - r)) <= 0.1 * (s - r)


def test_band_limited_truncation_is_exact():
    phi = GridFunction.from_modes(64, {0: 1, 3: 2, -5: 1j})
    for N in (5, 8, 16):
        assert sobolev_norm(truncate(phi, N) - phi, 1.6) == 0


# -- dealiasing -----------------------------------------------------------------

def test_dealias_examples():
    e = GridFunction.from_modes(16, {1: 1})
    assert dealias_product([e, e]).allclose(GridFunction.from_modes(16, {2: 1}), 1e-15)
    one = dealias_product([])
    assert one.allclose(GridFunction.constant(8, 1.0))
    with pytest.raises(ValueError):
        dealias_product([e], degree=2)


def test_dealias_matches_convolution(rng):
    n, deg = 32, 3
    band = n // (deg + 1)
    fs = []
    for _ in range(deg):
        modes = {k: rng.normal() + 1j * rng.normal() for k in range(-band, band + 1)}
        fs.append(GridFunction.from_modes(n, modes))
    conv = np.array([1.0 + 0j])
    for f in fs:
        conv = np.convolve(conv, f.coeffs[np.arange(-band, band + 1) % n])
    K = (len(conv) - 1) // 2
    expected = np.zeros(n, dtype=complex)
    for j, k in enumerate(range(-K, K + 1)):
        if -n // 2 < k < n // 2:
            expected[k % n] += conv[j]
    out = dealias_product(fs)
    assert np.max(np.abs(out.coeffs - expected)) < 1e-12


# -- rough data -----------------------------------------------------------------

def test_rough_data_coefficients():
    n = 1024
    f = make_rough_data(2.6, 0.25, "both", GridFunction.constant(n, 0.0), 1.0)
    for k in dyadic_modes(n):
        assert f.coeff(k) == pytest.approx(k ** -2.85)
        assert f.coeff(-k) == pytest.approx(k ** -2.85)
    assert dyadic_modes(n)[-1] == 256  # Nyquist 512 excluded
    assert abs(f.coeff(3)) == 0


def test_rough_data_one_sided_and_zero_amplitude():
    base = GridFunction.from_modes(64, {0: 1, 1: 0.5})
    assert make_rough_data(2.6, 0.25, "both", base, 0.0).allclose(base)
    plus = make_rough_data(2.6, 0.25, "plus", base, 1.0)
    assert abs(plus.coeff(-4)) == 0 and abs(plus.coeff(4)) > 0
    with pytest.raises(ValueError):
        make_rough_data(2.6, 0.25, "left", base, 1.0)


def test_rough_tail_norm_growth():
    s, delta = 2.6, 0.25
    hs, hsd = [], []
    for n in (256, 512, 1024):
        tail = make_rough_data(s, delta, "both", GridFunction.constant(n, 0.0), 1.0)
        hs.append(sobolev_norm(tail, s))
        hsd.append(sobolev_norm(tail, s + delta))
    # uniform bound: the full dyadic series converges in H^s
    limit = math.sqrt(2 * sum((1 + 4.0 ** j) ** s * 2.0 ** (-2 * j * (s + delta)) for j in range(1, 80)))
    assert hs[0] <= hs[1] <= hs[2] <= limit
    assert hsd[0] < hsd[1] < hsd[2]


# -- persistence ------------------------------------------------------------------

def test_binary_layout(rng):
    f = random_gf(rng, 16)
    blob = f.to_bytes(0.25)
    assert len(blob) == 16 + 16 * 16
    n, t = np.frombuffer(blob[:8], "<i8")[0], np.frombuffer(blob[8:16], "<f8")[0]
    assert (n, t) == (16, 0.25)
    body = np.frombuffer(blob[16:], "<f8")
    assert body[0] == f.coeff(-7).real and body[1] == f.coeff(-7).imag
    g, t2 = GridFunction.from_bytes(blob)
    assert t2 == 0.25 and np.array_equal(g.coeffs[:8], f.coeffs[:8])


def test_csv_export():
    rows = GridFunction.from_modes(8, {1: 2}).to_csv().splitlines()
    assert rows[0] == "k,re,im"
    assert rows[1].startswith("-3,")
    assert "1,2.0,0.0" in rows


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 10), st.floats(-3, 3), st.integers(0, 2 ** 32 - 1))
def test_bessel_multiplier_monotone_norms(logn, s, seed):
    f = random_gf(np.random.default_rng(seed), 2 ** logn)
    assert sobolev_norm(f, s) <= sobolev_norm(f, s + 0.5) * (1 + 1e-14)
    assert sobolev_norm(bessel(s)(f), 0) == pytest.approx(sobolev_norm(f, s), rel=1e-12)
