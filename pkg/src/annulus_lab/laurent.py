"""Finitely supported two-sided sequences and their Laurent polynomials.

A sequence {lambda_n} defines v(z) = sum_n z^n lambda_n.  On the circle
|z| = e^alpha this is sampled by placing e^{alpha n} lambda_n in FFT bin
n mod N.  Recovery goes the other way with the 1/N-normalized forward
transform, so coefficient n of the samples is e^{alpha n} lambda_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circle import CircleGrid, GridFunction


@dataclass(frozen=True, eq=False)
class LaurentSeq:
    """Coefficients lambda_n for n = lo..hi; zero outside that window."""

    lo: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d array")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "lo", int(self.lo))

    @property
    def hi(self) -> int:
        return self.lo + self.coeffs.size - 1

    @property
    def degree(self) -> int:
        return max(abs(self.lo), abs(self.hi))

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    @classmethod
    def delta(cls, m: int, value: complex = 1.0) -> "LaurentSeq":
        return cls(m, [value])

    @classmethod
    def zero(cls) -> "LaurentSeq":
        return cls(0, [0.0])

    @classmethod
    def from_dict(cls, d: dict) -> "LaurentSeq":
        lo, hi = min(d), max(d)
        c = np.zeros(hi - lo + 1, dtype=complex)
        for n, v in d.items():
            c[n - lo] = v
        return cls(lo, c)

    def __getitem__(self, n: int) -> complex:
        if self.lo <= n <= self.hi:
            return complex(self.coeffs[n - self.lo])
        return 0j

    def padded(self, lo: int, hi: int) -> np.ndarray:
        """Coefficients on the window lo..hi (which must contain the support)."""
        if lo > self.lo or hi < self.hi:
            raise ValueError("window does not contain the support")
        out = np.zeros(hi - lo + 1, dtype=complex)
        out[self.lo - lo : self.hi - lo + 1] = self.coeffs
        return out

    def weighted(self, alpha: float) -> "LaurentSeq":
        """The sequence {e^{alpha n} lambda_n}."""
        return LaurentSeq(self.lo, np.exp(alpha * self.indices) * self.coeffs)

    def trimmed(self, tol: float = 0.0) -> "LaurentSeq":
        nz = np.flatnonzero(np.abs(self.coeffs) > tol)
        if nz.size == 0:
            return LaurentSeq.zero()
        return LaurentSeq(self.lo + nz[0], self.coeffs[nz[0] : nz[-1] + 1])

    def __add__(self, other: "LaurentSeq") -> "LaurentSeq":
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return LaurentSeq(lo, self.padded(lo, hi) + other.padded(lo, hi))

    def __neg__(self) -> "LaurentSeq":
        return LaurentSeq(self.lo, -self.coeffs)

    def __sub__(self, other: "LaurentSeq") -> "LaurentSeq":
        return self + (-other)

    def __mul__(self, c) -> "LaurentSeq":
        return LaurentSeq(self.lo, self.coeffs * c)

    __rmul__ = __mul__

    def allclose(self, other: "LaurentSeq", atol: float = 1e-12) -> bool:
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return bool(np.allclose(self.padded(lo, hi), other.padded(lo, hi), rtol=0, atol=atol))

    def __call__(self, z) -> complex:
        """Direct evaluation of sum_n z^n lambda_n."""
        z = np.asarray(z, dtype=complex)
        return np.sum(self.coeffs * z[..., None] ** self.indices, axis=-1)

    def __repr__(self):
        return f"LaurentSeq(lo={self.lo}, hi={self.hi}, coeffs={np.array2string(self.coeffs, precision=4)})"


def place_bins(coeffs: np.ndarray, lo: int, size: int) -> np.ndarray:
    """Scatter coefficients (last axis, frequencies lo..) into FFT bins n mod size."""
    coeffs = np.asarray(coeffs, dtype=complex)
    bins = np.zeros(coeffs.shape[:-1] + (size,), dtype=complex)
    idx = (lo + np.arange(coeffs.shape[-1])) % size
    bins[..., idx] = coeffs
    return bins


def sample_circle(coeffs: np.ndarray, lo: int, size: int) -> np.ndarray:
    """Values of sum_n c_n e^{int} at t = 2*pi*k/size (batched over leading axes)."""
    return size * np.fft.ifft(place_bins(coeffs, lo, size), axis=-1)


def eval_circle(lam: LaurentSeq, alpha: float, grid: CircleGrid) -> GridFunction:
    """Sample v(z) = sum_n z^n lambda_n at the nodes of the circle |z| = e^alpha."""
    if grid.size < 2 * lam.degree + 2:
        raise ValueError(
            f"grid of size {grid.size} aliases a sequence of degree {lam.degree}"
        )
    w = lam.weighted(alpha)
    return GridFunction(grid.at_radius(alpha), sample_circle(w.coeffs, w.lo, grid.size))


def fourier_coeffs(f: GridFunction, lo: int, hi: int) -> LaurentSeq:
    """Laurent coefficients e^{-n alpha} * (discrete Fourier coefficient n), n = lo..hi."""
    n_nodes = f.grid.size
    if hi < lo or hi - lo + 1 > n_nodes or max(abs(lo), abs(hi)) >= n_nodes // 2:
        raise ValueError(f"range [{lo}, {hi}] exceeds the Nyquist limit of a {n_nodes}-node grid")
    spectrum = np.fft.fft(f.values) / n_nodes
    n = np.arange(lo, hi + 1)
    return LaurentSeq(lo, np.exp(-f.grid.radius_exponent * n) * spectrum[n % n_nodes])


def fejer_weights(N: int, n) -> np.ndarray:
    n = np.abs(np.asarray(n))
    return np.where(n <= N, 1.0 - n / (N + 1.0), 0.0)


def fejer_kernel(N: int, t):
    """kappa_N(t) = (1/(N+1)) (sin((N+1)t/2) / sin(t/2))^2."""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    half = np.sin(t / 2.0)
    small = np.abs(half) < 1e-6
    out = np.empty_like(t)
    big = ~small
    out[big] = (np.sin((N + 1) * t[big] / 2.0) / half[big]) ** 2 / (N + 1)
    if np.any(small):
        # series form avoids 0/0 near t = 0 mod 2pi
        n = np.arange(1, N + 1)
        ts = t[small][:, None]
        out[small] = 1.0 + 2.0 * np.sum((1.0 - n / (N + 1.0)) * np.cos(n * ts), axis=-1)
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


def fejer_mean(lam: LaurentSeq, N: int) -> LaurentSeq:
    """Coefficient n scaled by (1 - |n|/(N+1)) for |n| <= N, dropped otherwise."""
    lo, hi = max(lam.lo, -N), min(lam.hi, N)
    if lo > hi:
        return LaurentSeq.zero()
    n = np.arange(lo, hi + 1)
    return LaurentSeq(lo, lam.coeffs[lo - lam.lo : hi - lam.lo + 1] * fejer_weights(N, n))


def fejer_convolve(f: GridFunction, N: int) -> GridFunction:
    """(1/2pi) * integral of kappa_N(t - s) f(s) ds by the trapezoid rule on f's grid."""
    kernel = fejer_kernel(N, f.grid.angles)
    conv = np.fft.ifft(np.fft.fft(kernel) * np.fft.fft(f.values)) / f.grid.size
    return GridFunction(f.grid, conv)


def fejer_partial_sum(lam: LaurentSeq, N: int, z) -> complex:
    """P_N(z) = sum_{|n|<=N} (1 - |n|/(N+1)) z^n lambda_n."""
    return fejer_mean(lam, N)(z)


def dirichlet_partial_sum(lam: LaurentSeq, N: int, z) -> complex:
    lo, hi = max(lam.lo, -N), min(lam.hi, N)
    if lo > hi:
        return 0j
    return LaurentSeq(lo, lam.coeffs[lo - lam.lo : hi - lam.lo + 1])(z)


def cesaro_value(lam: LaurentSeq, z) -> complex:
    """T(lambda)(z) for finitely supported lambda: the Cesaro limit is the plain sum."""
    return lam(z)


def random_laurent(rng: np.random.Generator, lo: int, hi: int) -> LaurentSeq:
    """Coefficients drawn uniformly from the complex unit disc."""
    m = hi - lo + 1
    r = np.sqrt(rng.random(m))
    phase = rng.random(m) * 2 * math.pi
    return LaurentSeq(lo, r * np.exp(1j * phase))
