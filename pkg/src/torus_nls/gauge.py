"""Gauge transform Lambda = -(i/2) d_x^{-1} F_beta(u, u_x, ...), W = exp(-Lambda) u_xx."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fitting import fit_power
from .nonlin_poly import ComplexPolynomial4, JetPolynomial, lift_to_jet, wirtinger_derivative
from .pointwise import apply_poly
from .spectral import (
    GridFunction,
    coeffs_to_values,
    dx,
    dx_inv,
    pad_coeffs,
    padded_size,
    project,
    sobolev_norm,
    unpad_coeffs,
    values_to_coeffs,
    wavenumbers,
)


@dataclass
class GaugeState:
    Lambda: GridFunction
    W: GridFunction
    P0_Fbeta: complex
    Fbeta: GridFunction
    source_time: float = 0.0

    def reconstruct_w(self) -> GridFunction:
        return GridFunction(np.exp(self.Lambda.values) * self.W.values)

    def to_dict(self) -> dict:
        return {
            "P0_Fbeta": [self.P0_Fbeta.real, self.P0_Fbeta.imag],
            "source_time": self.source_time,
            "Lambda_L2": sobolev_norm(self.Lambda, 0),
            "W_L2": sobolev_norm(self.W, 0),
        }


def gauge_forward(F: ComplexPolynomial4, u: GridFunction, t: float = 0.0, use_gauge: bool = True) -> GaugeState:
    """Lambda from the spectral antiderivative of F_beta; W = exp(-Lambda) w pointwise.

    ``use_gauge=False`` forces Lambda = 0 (W = w) for negative controls.
    """
    if not u.is_finite():
        raise ValueError("non-finite input to gauge_forward")
    Fb = wirtinger_derivative(F, "beta")
    fbeta = apply_poly(Fb, u, max(F.degree(), 1))
    p0 = fbeta.mean()
    w = dx(u, 2)
    if use_gauge:
        lam = -0.5j * dx_inv(fbeta)
        W = GridFunction(np.exp(-lam.values) * w.values)
    else:
        lam = GridFunction.from_coeffs(np.zeros(u.n, dtype=complex))
        W = w
    if not (lam.is_finite() and W.is_finite()):
        raise ValueError("gauge transform produced non-finite values")
    return GaugeState(lam, W, p0, fbeta, t)


def _chain_rule_dx_fbeta(F: ComplexPolynomial4, u: GridFunction) -> GridFunction:
    """F_{alpha beta} v + F_{beta beta} w + F_{alphabar beta} conj v + F_{beta betabar} conj w, dealiased."""
    Fb = wirtinger_derivative(F, "beta")
    jet = (
        lift_to_jet(Fb.diff(0)) * JetPolynomial.var(1)
        + lift_to_jet(Fb.diff(1)) * JetPolynomial.var(2)
        + lift_to_jet(Fb.diff(2)) * JetPolynomial.var(4)
        + lift_to_jet(Fb.diff(3)) * JetPolynomial.var(5)
    )
    n = u.n
    m = padded_size(n, max(F.degree(), 1))
    k = wavenumbers(n)
    c = np.array(u.coeffs)
    c[n // 2] = 0.0
    u0 = coeffs_to_values(pad_coeffs(c, m))
    u1 = coeffs_to_values(pad_coeffs(1j * k * c, m))
    u2 = coeffs_to_values(pad_coeffs(-(k * k) * c, m))
    vals = jet.evaluate((u0, u1, u2, np.conj(u0), np.conj(u1), np.conj(u2)))
    vals = np.broadcast_to(vals, (m,))
    out = unpad_coeffs(values_to_coeffs(vals), n)
    out[n // 2] = 0.0
    return GridFunction.from_coeffs(out)


def check_gauge_identities(state: GaugeState, F: ComplexPolynomial4, u: GridFunction) -> dict:
    """L2 residuals of d_x Lambda = -(i/2) P_{!=0} F_beta and d_x^2 Lambda = -(i/2) d_x F_beta (chain rule)."""
    fbeta = state.Fbeta
    r1 = dx(state.Lambda) - (-0.5j) * project(fbeta, "Pneq0")
    r2 = dx(state.Lambda, 2) - (-0.5j) * _chain_rule_dx_fbeta(F, u)
    tol = 1e-10 * (1.0 + sobolev_norm(fbeta, 0))
    res1, res2 = sobolev_norm(r1, 0), sobolev_norm(r2, 0)
    return {
        "dxLambda_residual": res1,
        "dxxLambda_residual": res2,
        "tolerance": tol,
        "passed": bool(res1 < tol and res2 < tol),
    }


def energy_cancellation(state: GaugeState, r: float) -> dict:
    """Re((P0 F_beta) <d>^{r-2} d_x W, <d>^{r-2} W)_{L^2}, which vanishes when P0 F_beta is real.

    The imaginary part of P0 F_beta multiplies the non-vanishing
    Im(d_x ., .) pairing, so it is reported separately.
    """
    W = state.W
    k = W.k
    c = (1.0 + k * k) ** ((r - 2) / 2) * W.coeffs
    c[W.n // 2] = 0.0
    dc = 1j * k * c
    pairing = complex(np.sum(dc * np.conj(c)))
    value = (state.P0_Fbeta.real * pairing).real
    scale = sobolev_norm(W, r - 1) ** 2
    return {
        "real_part_term": value,
        "scale": scale,
        "passed": bool(abs(value) <= 1e-10 * max(scale, 1e-300) or abs(value) < 1e-300),
    }


def _band_l2(f: GridFunction, kmin: float) -> float:
    return float(np.sqrt(np.sum(np.abs(f.coeffs[np.abs(f.k) >= kmin]) ** 2)))


def transformed_residual(F, traj, t_index: int, s: float = 2.6, use_gauge: bool = True, kmin: float = 0.0) -> dict:
    """Residual D of the W equation after removing the first-order terms.

    D = W_t + (i - eps) W_xx - (P0 F_beta) W_x + i eps (P_{!=0} F_beta) W_x
        - F_betabar exp(-Lambda + conj Lambda) conj(W_x),
    with W_t by central differences of neighbouring snapshots. Without the
    gauge (``use_gauge=False``) the same formula is applied to w = u_xx.
    The ``*_band`` entries are L2 norms restricted to |k| >= kmin.
    """
    if not 0 < t_index < len(traj) - 1:
        raise IndexError("transformed_residual needs an interior snapshot")
    t0, t1, t2 = traj.times[t_index - 1:t_index + 2]
    h = t1 - t0
    eps = traj.config.eps
    states = [gauge_forward(F, traj.snapshots[j], traj.times[j], use_gauge) for j in (t_index - 1, t_index, t_index + 1)]
    st = states[1]
    Wt = (states[2].W.coeffs - states[0].W.coeffs) / (2 * h)
    W = st.W
    k = W.k
    Wx = dx(W)
    Wxx_c = -(k * k) * W.coeffs
    u = traj.snapshots[t_index]
    Fbb = wirtinger_derivative(F, "beta_bar")
    fbb = apply_poly(Fbb, u, max(F.degree(), 1))
    lam = st.Lambda
    coupling = fbb.values * np.exp(-lam.values + np.conj(lam.values)) * np.conj(Wx.values)
    pneq0 = project(st.Fbeta, "Pneq0")
    D = (
        Wt
        + (1j - eps) * Wxx_c
        - st.P0_Fbeta * Wx.coeffs
        + 1j * eps * GridFunction(pneq0.values * Wx.values).coeffs
        - GridFunction(coupling).coeffs
    )
    D = np.array(D)
    D[W.n // 2] = 0.0
    Dg = GridFunction.from_coeffs(D)
    return {
        "time": t1,
        "use_gauge": use_gauge,
        "D_norm": sobolev_norm(Dg, s - 3),
        "D_L2": sobolev_norm(Dg, 0),
        "Wx_norm": sobolev_norm(Wx, s - 3),
        "Wx_L2": sobolev_norm(Wx, 0),
        "W_L2": sobolev_norm(W, 0),
        "kmin": kmin,
        "D_band": _band_l2(Dg, kmin),
        "Wx_band": _band_l2(Wx, kmin),
    }


def cancellation_regression(reports: Sequence[dict], frequencies: Sequence[float], ratio: float = 0.7) -> dict:
    """Compare growth of ||D|| and ||W_x|| across data of increasing frequency.

    Norms are the band-restricted L2 norms of each report (|k| >= kmin),
    which isolate the high-frequency part of the data. Passes when the
    fitted exponent of ||D|| is at most ``ratio`` times the fitted exponent of ||W_x||, i.e. no first-order term survives in D.
    """
    d = [r["D_band"] for r in reports]
    wx = [r["Wx_band"] for r in reports]
    ed, _, rd = fit_power(frequencies, d)
    ew, _, rw = fit_power(frequencies, wx)
    return {
        "frequencies": list(frequencies),
        "D_band": d,
        "Wx_band": wx,
        "D_exponent": ed,
        "Wx_exponent": ew,
        "fit_residuals": [rd, rw],
        "passed": bool(ed <= ratio * ew),
    }
