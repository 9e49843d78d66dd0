"""Gauged energy E_s(t) = sqrt(|u|^2_{s-2} + |u_x|^2_{s-2} + |W|^2_{s-2}) along a trajectory."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .gauge import gauge_forward
from .spectral import dx, sobolev_norm


class PreconditionViolated(ValueError):
    pass


@dataclass
class EnergyTrace:
    times: List[float]
    s: float
    r: float
    E_s: List[float]
    E_r: List[float]
    components_s: List[List[float]]  # per time: [|u|, |v|, |W|] in H^{s-2}
    components_r: List[List[float]]
    naive_E_s: List[float]  # same energy with w = u_xx in place of W
    K: float
    C1_hat: float = float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "E_s", "E_r", "u_s", "v_s", "W_s", "naive_E_s"])
        for row in zip(self.times, self.E_s, self.E_r, self.components_s, self.naive_E_s):
            t, es, er, comp, nv = row
            w.writerow([repr(t), repr(es), repr(er), *map(repr, comp), repr(nv)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "r": self.r,
            "K": self.K,
            "C1_hat": self.C1_hat,
            "times": list(self.times),
            "E_s": list(self.E_s),
            "E_r": list(self.E_r),
            "naive_E_s": list(self.naive_E_s),
        }


def _components(F, u, sigma: float):
    st = gauge_forward(F, u)
    v = dx(u)
    w = dx(u, 2)
    comps = [sobolev_norm(u, sigma - 2), sobolev_norm(v, sigma - 2), sobolev_norm(st.W, sigma - 2)]
    naive = math.sqrt(comps[0] ** 2 + comps[1] ** 2 + sobolev_norm(w, sigma - 2) ** 2)
    return comps, naive


def energy_trace(F, traj, s: float, r: float) -> EnergyTrace:
    if not 2.5 < s <= r:
        raise PreconditionViolated(f"need 5/2 < s <= r, got s={s}, r={r}")
    E_s, E_r, cs, cr, naive = [], [], [], [], []
    for u in traj.snapshots:
        comp_s, nv = _components(F, u, s)
        comp_r, _ = _components(F, u, r) if r != s else (comp_s, nv)
        cs.append(comp_s)
        cr.append(comp_r)
        E_s.append(math.sqrt(sum(c * c for c in comp_s)))
        E_r.append(math.sqrt(sum(c * c for c in comp_r)))
        naive.append(nv)
    return EnergyTrace(list(traj.times), s, r, E_s, E_r, cs, cr, naive, K=E_s[0] if E_s else 0.0)


def time_derivative(times: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Central differences inside, one-sided second-order stencils at the ends."""
    return np.gradient(np.asarray(y, float), np.asarray(times, float), edge_order=2)


def verify_energy_inequality(trace: EnergyTrace) -> dict:
    """C1_hat = max over interior times of (d/dt E_r) / (1 + E_r)."""
    if len(trace.times) < 8:
        raise PreconditionViolated("need at least 8 snapshots")
    dE = time_derivative(trace.times, trace.E_r)
    ratio = dE / (1.0 + np.asarray(trace.E_r))
    c1 = float(np.max(ratio[1:-1]))
    trace.C1_hat = c1
    return {
        "C1_hat": c1,
        "finite": bool(np.isfinite(c1)),
        "ratio_series": ratio.tolist(),
        "passed": bool(np.isfinite(c1)),
    }


def refinement_stability(c1_coarse: float, c1_fine: float, max_growth: float = 0.5) -> dict:
    """Stable when C1_hat grows by less than 50% from n to 2n (non-positive values count as stable)."""
    base = max(abs(c1_coarse), 1e-12)
    growth = (c1_fine - c1_coarse) / base
    return {
        "C1_coarse": c1_coarse,
        "C1_fine": c1_fine,
        "relative_growth": growth,
        "passed": bool(np.isfinite(c1_fine) and (c1_fine <= 0 or growth < max_growth)),
    }
