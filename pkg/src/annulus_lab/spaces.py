"""Weighted Fourier-coefficient norms FL^p_alpha (p in {1, inf}) and FC_theta.

Conventions: the L^1 norm on the circle integrates against arc length
(total mass 2*pi), so the pairing bound carries a factor 1/(2*pi).
Sup norms are the grid maximum polished to the continuous supremum; L^1
norms are trapezoid sums, recomputed by graded quadrature wherever the
integrand has a kink (a zero on the circle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _quad, _trigmax
from .circle import CircleGrid
from .laurent import LaurentSeq, fejer_weights, sample_circle

INF = math.inf
_BATCH_ENTRIES = 1 << 22  # complex samples per normalization block


@dataclass(frozen=True)
class SpaceSpec:
    p: float
    alpha: float = 0.0

    def __post_init__(self):
        if self.p not in (1, INF):
            raise ValueError(f"p must be 1 or inf, got {self.p}")

    @classmethod
    def fc(cls, theta: float) -> "SpaceSpec":
        return cls(INF, theta)


@dataclass(frozen=True)
class NormReport:
    value: float
    grid_size: int
    snap_error_bound: float

    def __float__(self):
        return self.value


def _check_grid(degree: int, grid: CircleGrid):
    if grid.size < 64 * degree:
        raise ValueError(
            f"grid of size {grid.size} is too coarse for degree {degree} (need >= {64 * degree})"
        )


def _lipschitz(c: np.ndarray, lo: int) -> float:
    # Bernstein-type bound on |d/dt v| for the centered polynomial
    f = np.arange(c.shape[-1]) - (c.shape[-1] - 1) / 2.0
    return float(np.sum(np.abs(f) * np.abs(c)))


def fl_norm(lam: LaurentSeq, spec: SpaceSpec, grid: CircleGrid, refine: bool = True) -> NormReport:
    """||{e^{alpha n} lambda_n}||_{FL^p} measured on the circle |z| = e^alpha."""
    _check_grid(lam.degree, grid)
    w = lam.weighted(spec.alpha)
    h = grid.step
    if spec.p == INF:
        value = float(_trigmax.sup_1d(w.coeffs, w.lo, grid.size, refine=refine))
        # grid-only maxima can miss the supremum by at most L*h/2
        bound = 0.0 if refine else _lipschitz(w.coeffs, w.lo) * h / 2
    else:
        vals = sample_circle(w.coeffs, w.lo, grid.size)
        if refine:
            value, bound = float(_quad.l1_norms(w.coeffs, vals)[0]), 0.0
        else:
            value = float(h * np.abs(vals).sum())
            bound = 2 * math.pi * _lipschitz(w.coeffs, w.lo) * h / 4
    return NormReport(value, grid.size, bound)


def fl_norm_batch(coeffs: np.ndarray, lo: int, spec: SpaceSpec, grid: CircleGrid) -> np.ndarray:
    """fl_norm for every row of a (B, m) coefficient array on the window lo..lo+m-1."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    m = coeffs.shape[1]
    _check_grid(max(abs(lo), abs(lo + m - 1)), grid)
    w = coeffs * np.exp(spec.alpha * (lo + np.arange(m)))
    if spec.p == INF:
        return _trigmax.sup_1d(w, lo, grid.size)
    return _quad.l1_norms(w, sample_circle(w, lo, grid.size))


def fc_theta_norm(lam: LaurentSeq, theta: float, grid: CircleGrid) -> NormReport:
    """The FC_theta norm, sup_t |v(e^{theta + it})|."""
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    return fl_norm(lam, SpaceSpec.fc(theta), grid)


def multiplier(lam: LaurentSeq, s: float) -> LaurentSeq:
    """M_s: lambda_n -> e^{ins} lambda_n."""
    return LaurentSeq(lam.lo, np.exp(1j * s * lam.indices) * lam.coeffs)


def shift(lam: LaurentSeq, m: int) -> LaurentSeq:
    """S_m: lambda_n -> lambda_{n-m}."""
    return LaurentSeq(lam.lo + m, lam.coeffs)


def pairing(lam: LaurentSeq, sigma: LaurentSeq) -> complex:
    """sum_n lambda_n sigma_n over the common support."""
    lo, hi = max(lam.lo, sigma.lo), min(lam.hi, sigma.hi)
    if lo > hi:
        return 0j
    a = lam.coeffs[lo - lam.lo : hi - lam.lo + 1]
    b = sigma.coeffs[lo - sigma.lo : hi - sigma.lo + 1]
    return complex(np.sum(a * b))


def pairing_integral(lam: LaurentSeq, sigma: LaurentSeq, grid: CircleGrid) -> complex:
    """(1/2pi) * integral of f_lambda(e^{it}) f_sigma(e^{-it}) dt by the trapezoid rule."""
    if grid.size <= lam.degree + sigma.degree + 1:
        raise ValueError("grid too coarse for the product of the two polynomials")
    f = sample_circle(lam.coeffs, lam.lo, grid.size)
    # f_sigma(e^{-it}) has coefficients sigma_{-n}
    g = sample_circle(sigma.coeffs[::-1], -sigma.hi, grid.size)
    return complex(np.mean(f * g))


def normalize_dual(sigma: LaurentSeq, grid: CircleGrid) -> LaurentSeq:
    """Rescale so that ||sigma||_{FL^1} = 2*pi."""
    l1 = fl_norm(sigma, SpaceSpec(1, 0.0), grid).value
    if l1 == 0.0:
        raise ValueError("cannot normalize the zero sequence")
    return sigma * (2 * math.pi / l1)


def normalize_duals(candidates, grid: CircleGrid) -> list[LaurentSeq]:
    """normalize_dual over a list, batched by support window."""
    candidates = list(candidates)
    out: list[LaurentSeq | None] = [None] * len(candidates)
    groups: dict[tuple[int, int], list[int]] = {}
    for i, sigma in enumerate(candidates):
        groups.setdefault((sigma.lo, sigma.hi), []).append(i)
    rows = max(1, _BATCH_ENTRIES // grid.size)
    for (lo, _hi), idx in groups.items():
        for start in range(0, len(idx), rows):
            part = idx[start : start + rows]
            C = np.stack([candidates[i].coeffs for i in part])
            l1 = fl_norm_batch(C, lo, SpaceSpec(1, 0.0), grid)
            if np.any(l1 == 0.0):
                raise ValueError("cannot normalize the zero sequence")
            for i, row, n in zip(part, C, l1):
                out[i] = LaurentSeq(lo, row * (2 * math.pi / n))
    return out


def dual_norm_lower(lam: LaurentSeq, candidates, grid: CircleGrid, normalized: bool = False) -> float:
    """max |<lambda, sigma>| over candidates rescaled to FL^1 norm 2*pi.

    A lower bound for ||lambda||_{FL^infty}.  Pass ``normalized=True`` with
    the output of ``normalize_duals`` to reuse one candidate set.
    """
    sigmas = candidates if normalized else normalize_duals(candidates, grid)
    return max((abs(pairing(lam, s)) for s in sigmas), default=0.0)


def fejer_dual_candidates(order: int, count: int) -> list[LaurentSeq]:
    """Fejer kernels of the given order centred at ``count`` equispaced points.

    Pairing with the candidate centred at t0 returns the Fejer mean of
    u_lambda evaluated at t0.
    """
    n = np.arange(-order, order + 1)
    w = fejer_weights(order, n)
    return [LaurentSeq(-order, w * np.exp(1j * n * t0))
            for t0 in 2 * math.pi * np.arange(count) / count]
