"""Least-squares rate fits on log-log data."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def fit_power(x: Sequence[float], y: Sequence[float]):
    """Slope, intercept and RMS residual of log y = slope * log x + intercept."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if lx.size < 2:
        raise ValueError("need at least two points to fit a rate")
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2)))


def fit_through_origin(x: Sequence[float], y: Sequence[float]):
    """Slope c minimizing |y - c x|^2 and the RMS residual."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    den = float(np.dot(x, x))
    if den == 0:
        raise ValueError("degenerate regressor")
    c = float(np.dot(x, y) / den)
    return c, float(np.sqrt(np.mean((y - c * x) ** 2)))
