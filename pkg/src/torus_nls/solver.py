"""Integrating-factor RK4 for  u_t + (i - eps) u_xx = F(u, u_x, conj u, conj u_x).

In Fourier space the linear part is u_hat' = (i - eps) k^2 u_hat, which is
applied exactly through exp((i - eps) k^2 t); only the nonlinearity is
treated by the classical four-stage Runge-Kutta (Lawson) scheme.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .nonlin_poly import ComplexPolynomial4, wirtinger_derivative
from .pointwise import OverflowDetected, apply_poly, apply_poly_coeffs, jet_on_grid
from .spectral import (
    GridFunction,
    check_grid_size,
    dx,
    sobolev_norm,
    sobolev_norm_coeffs,
    wavenumbers,
)

log = logging.getLogger(__name__)

BLOWUP_LEVEL = 1e150


class StepSizeRejected(ValueError):
    """dt violates the documented stability heuristic."""


@dataclass(frozen=True)
class SolverConfig:
    n: int
    eps: float
    dt: float
    T_end: float
    scheme: str = "ifrk4"
    snapshot_stride: int = 1
    seed: int = 0
    diag_s: Tuple[float, ...] = (2.6,)

    def __post_init__(self):
        check_grid_size(self.n)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T_end < 0:
            raise ValueError("T_end must be nonnegative")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if self.scheme != "ifrk4":
            raise ValueError("only the integrating-factor RK4 scheme is available")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")

    @property
    def nsteps(self) -> int:
        steps = int(round(self.T_end / self.dt))
        if abs(steps * self.dt - self.T_end) > 1e-9 * max(self.T_end, self.dt):
            raise ValueError(f"T_end={self.T_end} is not a multiple of dt={self.dt}")
        return steps

    def to_dict(self) -> dict:
        d = asdict(self)
        d["diag_s"] = list(self.diag_s)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        d["diag_s"] = tuple(d.get("diag_s", (2.6,)))
        return cls(**d)


@dataclass
class Trajectory:
    config: SolverConfig
    nonlinearity: ComplexPolynomial4
    times: List[float]
    snapshots: List[GridFunction]
    diagnostics: List[dict] = field(default_factory=list)
    overflowed: bool = False
    overflow_time: Optional[float] = None

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("snapshot times must be strictly increasing")
        if len({u.n for u in self.snapshots}) > 1:
            raise ValueError("snapshots must share one grid")

    @property
    def diagnostic_only(self) -> bool:
        return self.config.eps == 0

    def coeff_array(self) -> np.ndarray:
        return np.array([u.coeffs for u in self.snapshots])

    def __len__(self):
        return len(self.snapshots)

    # -- persistence --------------------------------------------------------
    def save(self, directory) -> Path:
        """Write manifest.json plus one little-endian snapshot file per stored step."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        files = []
        for i, (t, u) in enumerate(zip(self.times, self.snapshots)):
            name = f"snap_{i:05d}.bin"
            (d / name).write_bytes(u.to_bytes(t))
            files.append(name)
        manifest = {
            "schema": "torus_nls.trajectory/1",
            "config": self.config.to_dict(),
            "nonlinearity": self.nonlinearity.to_term_list(),
            "times": list(self.times),
            "diagnostics": self.diagnostics,
            "overflowed": self.overflowed,
            "overflow_time": self.overflow_time,
            "diagnostic_only": self.diagnostic_only,
            "snapshots": files,
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
        return d

    @classmethod
    def load(cls, directory) -> "Trajectory":
        d = Path(directory)
        manifest = json.loads((d / "manifest.json").read_text())
        snaps = [GridFunction.from_bytes((d / name).read_bytes())[0] for name in manifest["snapshots"]]
        return cls(
            config=SolverConfig.from_dict(manifest["config"]),
            nonlinearity=ComplexPolynomial4.from_term_list(manifest["nonlinearity"]),
            times=manifest["times"],
            snapshots=snaps,
            diagnostics=manifest["diagnostics"],
            overflowed=manifest["overflowed"],
            overflow_time=manifest["overflow_time"],
        )


def nonlinearity_apply(F: ComplexPolynomial4, u: GridFunction) -> GridFunction:
    """F(u, u_x, conj u, conj u_x) with spectral u_x and products dealiased to deg F."""
    with np.errstate(over="ignore", invalid="ignore"):
        out = apply_poly(F, u)
    if not out.is_finite():
        raise OverflowDetected("nonlinearity produced non-finite values")
    return out


def max_abs_fbeta(F: ComplexPolynomial4, u: GridFunction) -> float:
    Fb = wirtinger_derivative(F, "beta")
    if Fb.is_zero():
        return 0.0
    return float(np.max(np.abs(Fb.evaluate(jet_on_grid(np.asarray(u.coeffs), u.n)))))


def stable_dt(F: ComplexPolynomial4, phi: GridFunction) -> float:
    """Largest dt accepted by the guard dt <= 0.5 / (n (1 + max|F_beta(phi)|))."""
    return 0.5 / (phi.n * (1.0 + max_abs_fbeta(F, phi)))


def linear_factor(n: int, eps: float, t: float) -> np.ndarray:
    """exp((i - eps) k^2 t): exact propagator of u_t + (i - eps) u_xx = 0."""
    k = wavenumbers(n)
    out = np.exp((1j - eps) * k * k * t)
    out[n // 2] = 0.0
    return out


class _Stepper:
    def __init__(self, F: ComplexPolynomial4, n: int, eps: float, dt: float):
        self.F = F
        self.deg = F.degree()
        self.dt = dt
        self.zero = F.is_zero()
        self.E = linear_factor(n, eps, dt / 2)
        self.E2 = linear_factor(n, eps, dt)

    def N(self, c):
        if self.zero:
            return np.zeros_like(c)
        return apply_poly_coeffs(self.F, c, self.deg)

    def step(self, c):
        dt, E, E2 = self.dt, self.E, self.E2
        k1 = self.N(c)
        k2 = self.N(E * (c + 0.5 * dt * k1))
        k3 = self.N(E * c + 0.5 * dt * k2)
        k4 = self.N(E2 * c + dt * E * k3)
        return E2 * c + dt / 6.0 * (E2 * k1 + 2.0 * E * (k2 + k3) + k4)


def integrate_coeffs(F: ComplexPolynomial4, c0: np.ndarray, eps: float, dt: float, nsteps: int, stride: int = 1):
    """Yield (step, coeffs) every ``stride`` steps, starting with step 0.

    ``dt`` may be negative for eps = 0 (backward runs). Raises
    OverflowDetected when the state stops being finite.
    """
    c = np.array(c0, dtype=complex)
    c[c.size // 2] = 0.0
    stepper = _Stepper(F, c.size, eps, dt)
    yield 0, c.copy()
    for j in range(1, nsteps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            c = stepper.step(c)
        if not np.all(np.isfinite(c)) or np.max(np.abs(c)) > BLOWUP_LEVEL:
            raise OverflowDetected(f"blow-up at step {j}")
        if j % stride == 0 or j == nsteps:
            yield j, c.copy()


def _diagnostics(F, u: GridFunction, diag_s) -> dict:
    Fb = wirtinger_derivative(F, "beta")
    p0 = 0j
    if not Fb.is_zero():
        p0 = complex(np.mean(Fb.evaluate(jet_on_grid(np.asarray(u.coeffs), u.n))))
    return {
        "sobolev": {f"{s:g}": sobolev_norm(u, s) for s in diag_s},
        "P0_Fbeta": [p0.real, p0.imag],
    }


def evolve(F: ComplexPolynomial4, phi: GridFunction, cfg: SolverConfig, check_step: bool = True) -> Trajectory:
    """Run from t = 0 to cfg.T_end; blow-up truncates and flags the trajectory."""
    if phi.n != cfg.n:
        raise ValueError(f"initial data on grid {phi.n}, config expects {cfg.n}")
    if check_step:
        limit = stable_dt(F, phi)
        if cfg.dt > limit * (1 + 1e-12):
            raise StepSizeRejected(f"dt={cfg.dt:g} exceeds stability guard {limit:g}")
    if cfg.eps == 0:
        log.info("eps = 0 run: diagnostic only")
    times, snaps, diags = [], [], []
    overflowed, t_over = False, None
    try:
        for j, c in integrate_coeffs(F, phi.coeffs, cfg.eps, cfg.dt, cfg.nsteps, cfg.snapshot_stride):
            u = GridFunction.from_coeffs(c)
            times.append(j * cfg.dt)
            snaps.append(u)
            diags.append(_diagnostics(F, u, cfg.diag_s))
    except OverflowDetected as exc:
        overflowed = True
        t_over = times[-1] if times else 0.0
        log.warning("trajectory truncated: %s", exc)
    return Trajectory(cfg, F, times, snaps, diags, overflowed, t_over)


def derived_fields(traj: Trajectory, t_index: int):
    """(u, v, w) = (u, u_x, u_xx) at one snapshot."""
    u = traj.snapshots[t_index]
    return u, dx(u, 1), dx(u, 2)


def residual(F: ComplexPolynomial4, traj: Trajectory, t_index: int, s: float = 2.6) -> float:
    """H^{s-2} norm of the central-difference residual of the equation at an interior snapshot."""
    if not 0 < t_index < len(traj) - 1:
        raise IndexError("residual needs an interior snapshot")
    t0, t1, t2 = traj.times[t_index - 1:t_index + 2]
    h = t1 - t0
    if abs((t2 - t1) - h) > 1e-9 * h:
        raise ValueError("snapshots are not equally spaced around t_index")
    um, u, up = traj.snapshots[t_index - 1:t_index + 2]
    eps = traj.config.eps
    c = (up.coeffs - um.coeffs) / (2 * h)
    k = u.k
    c = c + (1j - eps) * (-(k * k)) * u.coeffs - apply_poly(F, u).coeffs
    c[u.n // 2] = 0.0
    return float(sobolev_norm_coeffs(c, s - 2))


def threads_from_env(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("TORUS_NLS_THREADS", default)))
    except ValueError:
        return default
