import math

import numpy as np
import pytest

from torus_nls.fitting import fit_power
from torus_nls.nonlin_poly import ComplexPolynomial4, conjugate_poly
from torus_nls.pointwise import OverflowDetected
from torus_nls.solver import (
    SolverConfig,
    StepSizeRejected,
    Trajectory,
    derived_fields,
    evolve,
    integrate_coeffs,
    linear_factor,
    nonlinearity_apply,
    residual,
    stable_dt,
)
from torus_nls.spectral import GridFunction, sobolev_norm, sobolev_norm_coeffs, wavenumbers

from conftest import A, AC, B, BC, DNLS, I, I_DNLS

ZERO = ComplexPolynomial4()


# -- nonlinearity evaluation ------------------------------------------------------

def test_nonlinearity_examples():
    e = GridFunction.from_modes(16, {1: 1})
    assert nonlinearity_apply(B, e).allclose(GridFunction.from_modes(16, {1: 1j}), 1e-14)
    assert nonlinearity_apply(2 * AC * BC, e).allclose(GridFunction.from_modes(16, {-2: -2j}), 1e-14)
    u = GridFunction.from_modes(16, {0: 1, 1: 1})
    assert nonlinearity_apply(A * B, u).allclose(GridFunction.from_modes(16, {1: 1j, 2: 1j}), 1e-14)


def test_nonlinearity_overflow_detected():
    u = GridFunction.constant(16, 1e200)
    with pytest.raises(OverflowDetected):
        nonlinearity_apply(A ** 3, u)


# -- configuration ----------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(n=16, eps=0, dt=0, T_end=1)
    with pytest.raises(ValueError):
        SolverConfig(n=12, eps=0, dt=0.1, T_end=1)
    with pytest.raises(ValueError):
        SolverConfig(n=16, eps=-1, dt=0.1, T_end=1)
    with pytest.raises(ValueError):
        SolverConfig(n=16, eps=0, dt=0.3, T_end=1).nsteps
    cfg = SolverConfig(n=16, eps=0.1, dt=0.25, T_end=1)
    assert cfg.nsteps == 4
    assert SolverConfig.from_dict(cfg.to_dict()) == cfg


def test_step_size_guard():
    phi = GridFunction.from_modes(16, {1: 0.1})
    limit = stable_dt(2 * AC * BC, phi)
    assert limit == pytest.approx(0.5 / 16)
    with pytest.raises(StepSizeRejected):
        evolve(2 * AC * BC, phi, SolverConfig(n=16, eps=0, dt=2 * limit, T_end=4 * limit))


def test_grid_mismatch_rejected():
    with pytest.raises(ValueError):
        evolve(ZERO, GridFunction.constant(16, 1.0), SolverConfig(n=32, eps=0, dt=0.01, T_end=0.01))


# -- linear flow ----------------------------------------------------------------

def test_linear_flow_schroedinger():
    # u_t + i u_xx = 0 gives u_hat(t, k) = exp(i k^2 t) phi_hat(k)
    phi = GridFunction.from_modes(16, {1: 1})
    tr = evolve(ZERO, phi, SolverConfig(n=16, eps=0.0, dt=0.03125, T_end=1.0))
    assert abs(tr.snapshots[-1].coeff(1) - np.exp(1j)) < 1e-10


def test_linear_flow_viscous():
    phi = GridFunction.from_modes(16, {2: 1})
    tr = evolve(ZERO, phi, SolverConfig(n=16, eps=0.1, dt=0.03125, T_end=1.0))
    assert abs(tr.snapshots[-1].coeff(2) - np.exp((1j - 0.1) * 4)) < 1e-10


def test_linear_norms():
    rng = np.random.default_rng(3)
    k = wavenumbers(64)
    c = (rng.normal(size=64) + 1j * rng.normal(size=64)) / (1 + k * k)
    c[32] = 0
    phi = GridFunction.from_coeffs(c)
    tr = evolve(ZERO, phi, SolverConfig(n=64, eps=0.0, dt=0.005, T_end=0.2, diag_s=(2.0,)))
    norms = [d["sobolev"]["2"] for d in tr.diagnostics]
    assert max(norms) - min(norms) < 1e-10
    eps = 0.05
    tr = evolve(ZERO, phi, SolverConfig(n=64, eps=eps, dt=0.005, T_end=0.2))
    for t, u in zip(tr.times, tr.snapshots):
        exact = math.sqrt(np.sum((1 + k * k) ** 2.6 * np.exp(-2 * eps * k * k * t) * np.abs(c) ** 2))
        assert sobolev_norm(u, 2.6) == pytest.approx(exact, abs=1e-10)


def test_linear_factor_nyquist():
    assert linear_factor(8, 0.0, 1.0)[4] == 0


# -- nonlinear accuracy -----------------------------------------------------------

def _final(F, phi, eps, dt, T):
    return evolve(F, phi, SolverConfig(n=phi.n, eps=eps, dt=dt, T_end=T)).snapshots[-1]


def test_self_convergence_order():
    F = 2 * AC * BC
    phi = GridFunction.from_modes(16, {1: 0.1})
    dts = [0.025, 0.0125, 0.00625, 0.003125]
    ref = _final(F, phi, 1e-3, dts[-1] / 2, 0.1)
    errs = [sobolev_norm(_final(F, phi, 1e-3, dt, 0.1) - ref, 2) for dt in dts]
    slope, _, _ = fit_power(dts, errs)
    assert slope >= 3.5


def test_residual_second_order():
    phi = GridFunction.from_modes(16, {0: 0.2, 1: 0.1})
    r = []
    for dt in (0.004, 0.002):
        tr = evolve(DNLS, phi, SolverConfig(n=16, eps=1e-3, dt=dt, T_end=4 * dt))
        r.append(residual(DNLS, tr, 2))
    assert r[0] / r[1] == pytest.approx(4.0, rel=0.25)


def test_residual_of_linear_flow_is_central_difference_error():
    phi = GridFunction.from_modes(16, {2: 1})
    r = []
    for dt in (0.01, 0.005):
        tr = evolve(ZERO, phi, SolverConfig(n=16, eps=0, dt=dt, T_end=2 * dt))
        r.append(residual(ZERO, tr, 1))
    assert r[0] / r[1] == pytest.approx(4.0, rel=0.05)


def test_constant_solution_residual():
    phi = GridFunction.constant(16, 0.7 + 0.2j)
    tr = evolve(DNLS, phi, SolverConfig(n=16, eps=0.01, dt=0.01, T_end=0.03))
    assert residual(DNLS, tr, 1) < 1e-10
    with pytest.raises(IndexError):
        residual(DNLS, tr, 0)


def test_time_reversal_conjugation():
    # u'(t) = conj u(-t) solves the equation with F'(a, b, ac, bc) = -conj(F(ac, bc, a, b)),
    # i.e. the formal conjugate with the variable swap undone
    F = I * A * B + 2 * AC * BC + A * AC * B + (1 - I) * A
    swapped = conjugate_poly(F)
    Fp = -ComplexPolynomial4({(e[2], e[3], e[0], e[1]): c for e, c in swapped.terms.items()})
    phi = GridFunction.from_modes(32, {0: 0.3, 1: 0.2, -2: 0.1j})
    dt, steps = 0.005, 20
    back = list(integrate_coeffs(F, phi.coeffs, 0.0, -dt, steps))[-1][1]
    fwd = list(integrate_coeffs(Fp, phi.conj().coeffs, 0.0, dt, steps))[-1][1]
    u_back = GridFunction.from_coeffs(back)
    u_fwd = GridFunction.from_coeffs(fwd).conj()
    assert sobolev_norm(u_back - u_fwd, 2) < 1e-8


def test_grid_refinement_smooth_data():
    F = 2 * AC * BC
    out = []
    for n in (32, 64):
        phi = GridFunction.from_modes(n, {1: 0.1, -1: 0.05})
        out.append(evolve(F, phi, SolverConfig(n=n, eps=1e-3, dt=0.0025, T_end=0.05)).snapshots[-1])
    fine = out[1].coeffs
    coarse = np.zeros(64, dtype=complex)
    for k in range(-15, 16):
        coarse[k % 64] = out[0].coeff(k)
    assert sobolev_norm(GridFunction.from_coeffs(fine - coarse), 2) < 1e-8


# -- blow-up, persistence, derived fields ---------------------------------------------

def test_blow_up_is_truncated_and_flagged():
    phi = GridFunction.constant(16, 1.0)
    F = A ** 3
    tr = evolve(F, phi, SolverConfig(n=16, eps=0.0, dt=0.02, T_end=2.0), check_step=False)
    assert tr.overflowed and tr.overflow_time is not None
    assert tr.times[-1] < 2.0 and all(u.is_finite() for u in tr.snapshots)


def test_trajectory_round_trip(tmp_path):
    phi = GridFunction.from_modes(16, {1: 0.1})
    tr = evolve(DNLS, phi, SolverConfig(n=16, eps=1e-3, dt=0.01, T_end=0.05, snapshot_stride=2))
    assert tr.times == pytest.approx([0, 0.02, 0.04, 0.05])
    tr.save(tmp_path / "run")
    back = Trajectory.load(tmp_path / "run")
    assert back.config == tr.config and back.nonlinearity == DNLS
    assert back.times == tr.times
    for a, b in zip(back.snapshots, tr.snapshots):
        assert np.array_equal(a.coeffs, b.coeffs)


def test_trajectory_invariants():
    g = GridFunction.constant(8, 1.0)
    cfg = SolverConfig(n=8, eps=0, dt=0.1, T_end=0.1)
    with pytest.raises(ValueError):
        Trajectory(cfg, ZERO, [0.1, 0.0], [g, g])
    with pytest.raises(ValueError):
        Trajectory(cfg, ZERO, [0.0, 0.1], [g, GridFunction.constant(16, 1.0)])


def test_diagnostic_only_flag():
    tr = evolve(ZERO, GridFunction.constant(8, 1.0), SolverConfig(n=8, eps=0, dt=0.05, T_end=0.1))
    assert tr.diagnostic_only


def test_derived_fields():
    tr = evolve(ZERO, GridFunction.from_modes(16, {1: 1}), SolverConfig(n=16, eps=0, dt=0.025, T_end=0.1))
    u, v, w = derived_fields(tr, 0)
    assert v.allclose(GridFunction.from_modes(16, {1: 1j}))
    assert w.allclose(GridFunction.from_modes(16, {1: -1}))
    assert sobolev_norm(v, 0) == pytest.approx(1.0)
    tr = evolve(ZERO, GridFunction.constant(16, 2.0), SolverConfig(n=16, eps=0, dt=0.025, T_end=0.1))
    _, v, w = derived_fields(tr, -1)
    assert sobolev_norm(v, 0) == 0 and sobolev_norm(w, 0) == 0


def test_p0_diagnostic():
    phi = GridFunction.constant(16, 1.0)
    tr = evolve(I_DNLS, phi, SolverConfig(n=16, eps=0, dt=0.01, T_end=0.01))
    assert tr.diagnostics[0]["P0_Fbeta"] == pytest.approx([0.0, 2.0])
