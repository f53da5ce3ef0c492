"""Suprema of trigonometric polynomials: grid sampling plus local Newton polish.

The grid maximum of |p| underestimates the true supremum.  Every grid
local maximum that could still hold the supremum is polished by a
safeguarded Newton iteration on |p|^2, and the best value seen is kept,
so the result never falls below the grid maximum.
"""

from __future__ import annotations

import math

import numpy as np

from .laurent import place_bins

NEWTON_STEPS = 12
MAX_CANDIDATES = 64
MAX_CANDIDATES_2D = 16
WIENER_SLACK = 1e-14
TIE_SLACK = 1e-12
BOX_CELLS = 4


def _centered(lo: int, m: int) -> np.ndarray:
    # |p| is unchanged by a unimodular factor e^{ict}; centering keeps derivatives small
    return np.arange(m) - (m - 1) / 2.0


def _threshold(rel_degrees) -> float:
    drop = 2.0 * sum((math.pi * r) ** 2 for r in rel_degrees)
    return max(0.5, 1.0 - drop)


def grid_size_for(degree: float, oversample: int = 8, minimum: int = 16) -> int:
    n = max(minimum, oversample * (int(math.ceil(degree)) + 1))
    return 1 << (n - 1).bit_length()


def row_exponent(c: np.ndarray) -> np.ndarray:
    """Binary exponent of the largest |c_n| per row; dividing by 2**e keeps
    Newton on |p|^2 clear of underflow and overflow, even for subnormals."""
    return np.frexp(np.abs(c).max(axis=-1))[1]


def scaled(x: np.ndarray, e) -> np.ndarray:
    """x * 2**e, exact and safe for complex x."""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return np.ldexp(x.real, e) + 1j * np.ldexp(x.imag, e)
    return np.ldexp(x, e)


def sup_1d(coeffs: np.ndarray, lo: int, size: int, refine: bool = True) -> np.ndarray:
    """sup_t |sum_n c_n e^{int}| for each row of ``coeffs`` (frequencies lo..).

    Returns an array with one entry per leading index.
    """
    c = np.asarray(coeffs, dtype=complex)
    squeeze = c.ndim == 1
    c = np.atleast_2d(c)
    e = row_exponent(c)
    best = scaled(_sup_rows(scaled(c, -e[:, None]), lo, size, refine), e)
    return best[0] if squeeze else best


def _sup_rows(c: np.ndarray, lo: int, size: int, refine: bool) -> np.ndarray:
    B, m = c.shape
    vals = np.abs(size * np.fft.ifft(place_bins(c, lo, size), axis=-1))
    best = vals.max(axis=1)
    if not refine or m == 1:
        return best
    deg = (m - 1) / 2.0
    thr = _threshold([deg / size]) * best
    # rows whose grid maximum already meets the bound sum |c_n| are exact
    open_rows = best < np.abs(c).sum(axis=1) * (1 - WIENER_SLACK)
    is_peak = (vals >= np.roll(vals, 1, axis=1)) & (vals >= np.roll(vals, -1, axis=1))
    is_peak &= (vals >= thr[:, None]) & open_rows[:, None]
    rows, cols = np.nonzero(is_peak)
    if rows.size == 0:
        return best
    # keep at most MAX_CANDIDATES per row, highest first
    order = np.lexsort((-vals[rows, cols], rows))
    rows, cols = rows[order], cols[order]
    rank = np.arange(rows.size) - np.searchsorted(rows, rows)
    keep = rank < MAX_CANDIDATES
    rows, cols = rows[keep], cols[keep]

    f = _centered(lo, m)
    h = 2 * math.pi / size
    t0 = cols * h
    t = t0.copy()
    C = c[rows]
    peak = np.zeros(rows.size)
    for _ in range(NEWTON_STEPS):
        E = np.exp(1j * np.outer(t, f)) * C
        v = E.sum(axis=1)
        v1 = (E * (1j * f)).sum(axis=1)
        v2 = (E * (-f * f)).sum(axis=1)
        peak = np.maximum(peak, np.abs(v))
        g1 = 2 * np.real(np.conj(v) * v1)
        g2 = 2 * (np.abs(v1) ** 2 + np.real(np.conj(v) * v2))
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(g2 < 0, -g1 / g2, np.sign(g1) * h / 4)
        step = np.nan_to_num(step)
        t = np.clip(t + step, t0 - h, t0 + h)
    E = np.exp(1j * np.outer(t, f)) * C
    peak = np.maximum(peak, np.abs(E.sum(axis=1)))
    np.maximum.at(best, rows, peak)
    return best


def sup_2d(table: np.ndarray, lo1: int, lo2: int, size1: int | None = None,
           size2: int | None = None, stop_above: float = math.inf) -> float:
    """sup_{s,t} |sum_{n,k} A_{n,k} e^{ins} e^{ikt}| over the 2-torus.

    If the grid maximum already reaches ``stop_above`` it is returned
    without polishing (it is a valid lower bound).
    """
    A = np.asarray(table, dtype=complex)
    e = int(row_exponent(A.ravel()))
    return float(scaled(_sup_table(scaled(A, -e), lo1, lo2, size1, size2, float(scaled(stop_above, -e))), e))


def _sup_table(A: np.ndarray, lo1: int, lo2: int, size1: int | None, size2: int | None,
               stop_above: float) -> float:
    m1, m2 = A.shape
    d1, d2 = (m1 - 1) / 2.0, (m2 - 1) / 2.0
    # ridges run along mixed directions whose frequency is up to d1 + d2,
    # so both axes are resolved at that combined degree
    size1 = size1 or grid_size_for(d1 + d2)
    size2 = size2 or grid_size_for(d1 + d2)
    bins = np.zeros((size1, size2), dtype=complex)
    i1 = (lo1 + np.arange(m1)) % size1
    i2 = (lo2 + np.arange(m2)) % size2
    bins[np.ix_(i1, i2)] = A
    vals = np.abs(np.fft.ifft2(bins)) * (size1 * size2)
    best = float(vals.max())
    if m1 * m2 == 1 or best == 0.0 or best >= stop_above:
        return best
    if best >= np.abs(A).sum() * (1 - WIENER_SLACK):
        return best
    thr = _threshold([d1 / size1, d2 / size2]) * best
    peak_mask = vals >= thr
    for ax in (0, 1):
        for sh in (1, -1):
            peak_mask &= vals >= np.roll(vals, sh, axis=ax)
    peak_mask &= vals >= np.roll(np.roll(vals, 1, 0), 1, 1)
    peak_mask &= vals >= np.roll(np.roll(vals, -1, 0), -1, 1)
    peak_mask &= vals >= np.roll(np.roll(vals, 1, 0), -1, 1)
    peak_mask &= vals >= np.roll(np.roll(vals, -1, 0), 1, 1)
    r1, r2 = np.nonzero(peak_mask)
    order = np.argsort(-vals[r1, r2], kind="stable")
    r1, r2 = r1[order], r2[order]
    # a ridge (u depending on a combination of s and t only) yields many
    # tied grid peaks; keep one per value so other ridges get a slot
    v = vals[r1, r2]
    fresh = np.ones(v.size, dtype=bool)
    fresh[1:] = v[1:] < v[:-1] * (1 - TIE_SLACK)
    r1, r2 = r1[fresh][:MAX_CANDIDATES_2D], r2[fresh][:MAX_CANDIDATES_2D]
    if r1.size == 0:
        return best

    f1, f2 = _centered(lo1, m1), _centered(lo2, m2)
    h1, h2 = 2 * math.pi / size1, 2 * math.pi / size2
    x0 = np.stack([r1 * h1, r2 * h2], axis=1)
    x = x0.copy()
    # ridges can put the true peak a few cells from the grid local maximum
    box = BOX_CELLS * np.array([h1, h2])

    def evaluate(x):
        E1 = np.exp(1j * np.outer(x[:, 0], f1))
        E2 = np.exp(1j * np.outer(x[:, 1], f2))
        return E1, E2

    def value(x):
        E1, E2 = evaluate(x)
        return np.abs(np.einsum("kn,nm,km->k", E1, A, E2))

    peak = value(x)
    for _ in range(NEWTON_STEPS):
        E1, E2 = evaluate(x)
        AE2 = E2 @ A.T  # (K, m1): sum_k A_{n,k} e^{ikt}
        AE2_t = (E2 * (1j * f2)) @ A.T
        AE2_tt = (E2 * (-f2 * f2)) @ A.T
        u = np.sum(E1 * AE2, axis=1)
        us = np.sum(E1 * (1j * f1) * AE2, axis=1)
        ut = np.sum(E1 * AE2_t, axis=1)
        uss = np.sum(E1 * (-f1 * f1) * AE2, axis=1)
        utt = np.sum(E1 * AE2_tt, axis=1)
        ust = np.sum(E1 * (1j * f1) * AE2_t, axis=1)
        cu = np.conj(u)
        grad = 2 * np.stack([np.real(cu * us), np.real(cu * ut)], axis=1)
        hss = 2 * (np.abs(us) ** 2 + np.real(cu * uss))
        htt = 2 * (np.abs(ut) ** 2 + np.real(cu * utt))
        hst = 2 * (np.real(np.conj(us) * ut) + np.real(cu * ust))
        H = np.stack([np.stack([hss, hst], -1), np.stack([hst, htt], -1)], -2)
        w, V = np.linalg.eigh(H)
        scale = np.maximum(np.abs(w).max(axis=1, keepdims=True), 1e-300)
        w = np.minimum(w, -1e-3 * scale)
        g_rot = np.einsum("kji,kj->ki", V, grad)
        # cap each eigen-direction separately: near-flat ridges must not
        # swamp the Newton step across them
        reach = min(h1, h2)
        step_rot = np.clip(np.nan_to_num(-g_rot / w), -reach, reach)
        step = np.einsum("kij,kj->ki", V, step_rot)
        accepted = np.zeros(x.shape[0], dtype=bool)
        for _half in range(4):
            trial = np.clip(x + step, x0 - box, x0 + box)
            tv = value(trial)
            better = (tv > peak) & ~accepted
            x[better] = trial[better]
            peak[better] = tv[better]
            accepted |= better
            step = step / 4
        if not accepted.any():
            break
    return max(best, float(peak.max()))
