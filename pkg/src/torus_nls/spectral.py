"""Grid functions on the torus R / 2piZ and their Fourier multipliers.

Grid points are x_j = -pi + 2 pi j / n. Fourier coefficients use the
normalized measure, f_hat(k) = (1/2pi) int f(x) exp(-ikx) dx, so the mean of
a function is its zero mode. Wavenumbers are k in {-n/2+1, ..., n/2}; the
Nyquist mode n/2 is zeroed after every multiplier application.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

SNAPSHOT_HEADER = struct.Struct("<qd")


def check_grid_size(n: int) -> int:
    n = int(n)
    if n < 8 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two >= 8, got {n}")
    return n


def wavenumbers(n: int) -> np.ndarray:
    """Integer wavenumbers in numpy FFT order with the Nyquist slot taken as +n/2."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    k[n // 2] = n // 2
    return k


def grid(n: int) -> np.ndarray:
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


def _phase(n: int) -> np.ndarray:
    # exp(-i k x_0) with x_0 = -pi
    return np.where(wavenumbers(n).astype(np.int64) % 2 == 0, 1.0, -1.0)


def values_to_coeffs(values: np.ndarray) -> np.ndarray:
    n = values.shape[-1]
    return np.fft.fft(values, axis=-1) / n * _phase(n)


def coeffs_to_values(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[-1]
    return np.fft.ifft(coeffs * _phase(n), axis=-1) * n


def japanese(k) -> np.ndarray:
    return np.sqrt(1.0 + np.asarray(k, dtype=float) ** 2)


class GridFunction:
    """Complex function sampled on the uniform torus grid.

    Construct from grid values or (with :meth:`from_coeffs`) from Fourier
    coefficients in numpy FFT order. The other view is computed lazily.
    """

    __slots__ = ("n", "_values", "_coeffs")

    def __init__(self, values: Sequence[complex]):
        arr = np.array(values, dtype=complex)
        if arr.ndim != 1:
            raise ValueError("GridFunction values must be one-dimensional")
        self.n = check_grid_size(arr.size)
        arr.setflags(write=False)
        self._values = arr
        self._coeffs = None

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[complex]) -> "GridFunction":
        c = np.array(coeffs, dtype=complex)
        obj = cls.__new__(cls)
        obj.n = check_grid_size(c.size)
        c.setflags(write=False)
        obj._coeffs = c
        obj._values = None
        return obj

    @classmethod
    def from_modes(cls, n: int, modes: dict) -> "GridFunction":
        """Build sum_k modes[k] * exp(ikx) for integer k with -n/2 < k <= n/2."""
        n = check_grid_size(n)
        c = np.zeros(n, dtype=complex)
        for k, a in modes.items():
            k = int(k)
            if not -n // 2 < k <= n // 2:
                raise ValueError(f"mode {k} does not fit grid of size {n}")
            c[k % n] += a
        return cls.from_coeffs(c)

    @classmethod
    def from_callable(cls, n: int, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        x = grid(check_grid_size(n))
        return cls(np.broadcast_to(np.asarray(f(x), dtype=complex), x.shape))

    @classmethod
    def constant(cls, n: int, c: complex) -> "GridFunction":
        return cls(np.full(check_grid_size(n), complex(c)))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            v = coeffs_to_values(self._coeffs)
            v.setflags(write=False)
            self._values = v
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            c = values_to_coeffs(self._values)
            c.setflags(write=False)
            self._coeffs = c
        return self._coeffs

    @property
    def k(self) -> np.ndarray:
        return wavenumbers(self.n)

    @property
    def x(self) -> np.ndarray:
        return grid(self.n)

    def coeff(self, k: int) -> complex:
        return complex(self.coeffs[int(k) % self.n])

    def mean(self) -> complex:
        return complex(self.coeffs[0])

    def is_finite(self) -> bool:
        arr = self._coeffs if self._values is None else self._values
        return bool(np.all(np.isfinite(arr)))

    def conj(self) -> "GridFunction":
        return GridFunction(np.conj(self.values))

    def __add__(self, other):
        if isinstance(other, GridFunction):
            _same_grid(self, other)
            return GridFunction.from_coeffs(self.coeffs + other.coeffs)
        return GridFunction(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            _same_grid(self, other)
            return GridFunction.from_coeffs(self.coeffs - other.coeffs)
        return GridFunction(self.values - other)

    def __neg__(self):
        return GridFunction.from_coeffs(-self.coeffs)

    def __mul__(self, other):
        """Pointwise product on the grid (aliased); see dealias_product."""
        if isinstance(other, GridFunction):
            _same_grid(self, other)
            return GridFunction(self.values * other.values)
        return GridFunction.from_coeffs(self.coeffs * other)

    __rmul__ = __mul__

    def allclose(self, other: "GridFunction", atol: float = 1e-12) -> bool:
        _same_grid(self, other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs), initial=0.0) <= atol)

    def __repr__(self):
        return f"GridFunction(n={self.n})"

    # -- persistence --------------------------------------------------------
    def to_bytes(self, time: float = 0.0) -> bytes:
        """Little-endian header (int64 n, float64 t) then (re, im) pairs for k = -n/2+1..n/2."""
        ordered = self.ordered_coeffs()
        body = np.empty(2 * self.n, dtype="<f8")
        body[0::2] = ordered.real
        body[1::2] = ordered.imag
        return SNAPSHOT_HEADER.pack(self.n, float(time)) + body.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes):
        n, t = SNAPSHOT_HEADER.unpack_from(data, 0)
        body = np.frombuffer(data, dtype="<f8", offset=SNAPSHOT_HEADER.size, count=2 * n)
        ordered = body[0::2] + 1j * body[1::2]
        return cls.from_ordered_coeffs(ordered), t

    def ordered_wavenumbers(self) -> np.ndarray:
        return np.arange(-self.n // 2 + 1, self.n // 2 + 1)

    def ordered_coeffs(self) -> np.ndarray:
        return self.coeffs[self.ordered_wavenumbers() % self.n]

    @classmethod
    def from_ordered_coeffs(cls, ordered: Sequence[complex]) -> "GridFunction":
        ordered = np.asarray(ordered, dtype=complex)
        n = check_grid_size(ordered.size)
        c = np.empty(n, dtype=complex)
        c[np.arange(-n // 2 + 1, n // 2 + 1) % n] = ordered
        return cls.from_coeffs(c)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "re", "im"])
        for k, c in zip(self.ordered_wavenumbers(), self.ordered_coeffs()):
            w.writerow([int(k), repr(float(c.real)), repr(float(c.imag))])
        return buf.getvalue()


def _same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.n != g.n:
        raise ValueError(f"grid mismatch: {f.n} vs {g.n}")


# -- multipliers -------------------------------------------------------------

@dataclass(frozen=True)
class FourierMultiplier:
    """Diagonal operator k -> symbol(k) acting on Fourier coefficients."""

    symbol: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __call__(self, f: GridFunction) -> GridFunction:
        k = f.k
        c = f.coeffs * self.symbol(k)
        c[f.n // 2] = 0.0
        return GridFunction.from_coeffs(c)

    def then(self, other: "FourierMultiplier") -> "FourierMultiplier":
        return FourierMultiplier(lambda k: other.symbol(k) * self.symbol(k), f"{other.name}.{self.name}")


def derivative(m: int = 1) -> FourierMultiplier:
    return FourierMultiplier(lambda k: (1j * k) ** m, f"d^{m}")


def _inv_ik(k):
    out = np.zeros(k.shape, dtype=complex)
    nz = k != 0
    out[nz] = 1.0 / (1j * k[nz])
    return out


ANTIDERIVATIVE = FourierMultiplier(_inv_ik, "d^-1")


def bessel(s: float) -> FourierMultiplier:
    """<d_x>^s with <k> = sqrt(1 + k^2)."""
    return FourierMultiplier(lambda k: japanese(k) ** s, f"<d>^{s}")


def dx(f: GridFunction, m: int = 1) -> GridFunction:
    return derivative(m)(f)


def dx_inv(f: GridFunction) -> GridFunction:
    return ANTIDERIVATIVE(f)


def sobolev_norm(f: GridFunction, s: float) -> float:
    if not np.isfinite(s):
        raise ValueError("Sobolev index must be finite")
    w = japanese(f.k) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def sobolev_norm_coeffs(coeffs: np.ndarray, s: float) -> np.ndarray:
    """Sobolev norms along the last axis of FFT-ordered coefficient arrays."""
    n = coeffs.shape[-1]
    w = japanese(wavenumbers(n)) ** (2.0 * s)
    return np.sqrt(np.sum(w * np.abs(coeffs) ** 2, axis=-1))


def l2_inner(f: GridFunction, g: GridFunction) -> complex:
    """(f, g)_{L^2} = int f conj(g) dx with the normalized measure."""
    _same_grid(f, g)
    return complex(np.sum(f.coeffs * np.conj(g.coeffs)))


PROJECTIONS = ("P0", "Pneq0", "Pplus", "Pminus")


def project(f: GridFunction, which: str):
    """P0 (a complex scalar), Pneq0, Pplus (k >= 1) or Pminus (k <= -1)."""
    if which == "P0":
        return f.mean()
    k = f.k
    c = np.array(f.coeffs)
    if which == "Pneq0":
        c[0] = 0.0
    elif which == "Pplus":
        c[k <= 0] = 0.0
    elif which == "Pminus":
        c[k >= 0] = 0.0
    else:
        raise ValueError(f"unknown projection {which!r}; expected one of {PROJECTIONS}")
    return GridFunction.from_coeffs(c)


def truncate(phi: GridFunction, N: int) -> GridFunction:
    """Keep modes with |k| <= N."""
    N = int(N)
    if N < 0 or N > phi.n // 2:
        raise ValueError(f"truncation level {N} outside [0, n/2]")
    c = np.where(np.abs(phi.k) <= N, phi.coeffs, 0.0)
    return GridFunction.from_coeffs(c)


def padded_size(n: int, degree: int) -> int:
    """Smallest power of two >= (degree + 1) n / 2 (and >= n)."""
    target = max(n, (degree + 1) * n / 2)
    m = n
    while m < target:
        m *= 2
    return m


def pad_coeffs(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Embed FFT-ordered coefficients of length n into length m >= n (Nyquist dropped)."""
    n = coeffs.shape[-1]
    out = np.zeros(coeffs.shape[:-1] + (m,), dtype=complex)
    h = n // 2
    out[..., :h] = coeffs[..., :h]
    out[..., m - h + 1:] = coeffs[..., h + 1:]
    return out


def unpad_coeffs(coeffs: np.ndarray, n: int) -> np.ndarray:
    m = coeffs.shape[-1]
    out = np.zeros(coeffs.shape[:-1] + (n,), dtype=complex)
    h = n // 2
    out[..., :h] = coeffs[..., :h]
    out[..., h + 1:] = coeffs[..., m - h + 1:]
    return out


def dealias_product(fs: Sequence[GridFunction], degree: int = None, n: int = 8) -> GridFunction:
    """Product of ``degree`` factors evaluated on a zero-padded grid and truncated back.

    Exact for trigonometric polynomials supported on |k| <= n/(degree+1).
    An empty list gives the constant 1 on a grid of size ``n``.
    """
    fs = list(fs)
    if degree is None:
        degree = len(fs)
    if degree != len(fs):
        raise ValueError("degree must equal the number of factors")
    if not fs:
        return GridFunction.constant(n, 1.0)
    n = fs[0].n
    for f in fs[1:]:
        _same_grid(fs[0], f)
    m = padded_size(n, degree)
    prod = np.ones(m, dtype=complex)
    for f in fs:
        prod = prod * coeffs_to_values(pad_coeffs(np.asarray(f.coeffs), m))
    return GridFunction.from_coeffs(unpad_coeffs(values_to_coeffs(prod), n))


def dyadic_modes(n: int) -> list:
    """Dyadic wavenumbers 2, 4, ... strictly below the Nyquist mode n/2."""
    ks = []
    k = 2
    while k < n // 2:
        ks.append(k)
        k *= 2
    return ks


def make_rough_data(
    s: float,
    delta: float,
    side: str,
    base: GridFunction,
    amplitude: float,
) -> GridFunction:
    """base + amplitude * sum over dyadic 2 <= k < n/2 of k^(-s-delta) exp(+-ikx).

    ``side`` selects the positive modes ("plus"), the negative modes
    ("minus"), or both. The Nyquist mode is excluded because it cannot carry
    a +k / -k pair on the grid.
    """
    if side not in ("plus", "minus", "both"):
        raise ValueError(f"side must be plus, minus or both, got {side!r}")
    n = base.n
    c = np.array(base.coeffs)
    for k in dyadic_modes(n):
        a = amplitude * float(k) ** (-s - delta)
        if side in ("plus", "both"):
            c[k % n] += a
        if side in ("minus", "both"):
            c[(-k) % n] += a
    return GridFunction.from_coeffs(c)
