"""Accurate integrals of |p| over the circle for trigonometric polynomials p.

The trapezoid rule converges geometrically for |p| unless p has a zero on
(or very near) the circle, where |p| has a kink.  Rows whose trapezoid sums
on N, N/2 and N/4 nodes do not show converged geometric decay are
recomputed by composite Gauss-Legendre with breakpoints at the near-zeros
of p and geometric grading toward them.
"""

from __future__ import annotations

import math

import numpy as np

from ._trigmax import row_exponent, scaled

CONVERGED = 1e-13
GEOMETRIC_RATIO = 1e-3
GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(20)
GRADING = 0.15
GRADING_LEVELS = 20
NEWTON_STEPS = 30
PANEL_WIDTH = 2.0  # panel length times (degree / 2 + 1)
CUT_DISTANCE = 2.0  # zeros farther than this many panel widths are left uncut
_CHUNK = 1 << 20


def _near_zeros(C: np.ndarray, f: np.ndarray, A: np.ndarray, width: float) -> list:
    """Per row: sorted local minima of |p| lying close to a zero, with the
    distance estimate |p|/|p'| there.  Minima are located on the grid and
    polished by Newton on |p|^2, batched over all rows."""
    R, N = A.shape
    h = 2 * math.pi / N
    L = np.abs(C) @ np.abs(f)
    is_min = (A <= np.roll(A, 1, axis=1)) & (A < np.roll(A, -1, axis=1))
    # |p|/|p'| >= (grid min - L h) / L, so distant minima are dropped up front
    is_min &= (A - (L * h)[:, None]) < (CUT_DISTANCE * width) * L[:, None]
    rows, cols = np.nonzero(is_min)
    t0 = cols * h
    t = t0.copy()
    Cr = C[rows]
    for _ in range(NEWTON_STEPS):
        if t.size == 0:
            break
        E = np.exp(1j * np.outer(t, f)) * Cr
        v, v1, v2 = E.sum(axis=1), E @ (1j * f), E @ (-f * f)
        g1 = 2 * np.real(np.conj(v) * v1)
        g2 = 2 * (np.abs(v1) ** 2 + np.real(np.conj(v) * v2))
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.nan_to_num(np.where(g2 > 0, -g1 / g2, 0.0))
        t = np.clip(t + step, t0 - h, t0 + h)
        if np.abs(step).max() < 1e-15:
            break
    E = np.exp(1j * np.outer(t, f)) * Cr
    v, v1 = np.abs(E.sum(axis=1)), np.abs(E @ (1j * f))
    with np.errstate(divide="ignore", invalid="ignore"):
        dist = np.where(v1 > 0, v / v1, np.where(v > 0, np.inf, 0.0))
    t = np.mod(t, 2 * math.pi)
    near = dist < CUT_DISTANCE * width
    rows, t, dist = rows[near], t[near], dist[near]
    order = np.lexsort((t, rows))
    rows, t, dist = rows[order], t[order], dist[order]
    bounds = np.searchsorted(rows, np.arange(R + 1))
    return [(t[bounds[r] : bounds[r + 1]], dist[bounds[r] : bounds[r + 1]]) for r in range(R)]


def _levels(dist: float, first: float) -> int:
    """Grading depth that brings the piece next to a cut below the zero distance."""
    if not math.isfinite(dist):
        return 0
    if dist <= 0:
        return GRADING_LEVELS
    return min(max(math.ceil(math.log(dist / first) / math.log(GRADING)) + 1, 1), GRADING_LEVELS)


def _panel_edges(a: float, b: float, width: float, left_levels: int, right_levels: int) -> np.ndarray:
    """Subdivide [a, b] uniformly to ``width``, then grade the end pieces toward a and b."""
    pieces = max(2, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, pieces + 1)
    first, last = edges[1] - a, b - edges[-2]
    left = a + first * GRADING ** np.arange(left_levels, 0, -1)
    right = b - last * GRADING ** np.arange(1, right_levels + 1)
    return np.concatenate([[a], left, edges[1:-1], right, [b]])


def _row_panels(cuts: np.ndarray, dist: np.ndarray, width: float) -> tuple[np.ndarray, np.ndarray]:
    if cuts.size == 0:
        cuts, dist = np.array([0.0]), np.array([np.inf])
    ends = np.append(cuts[1:], cuts[0] + 2 * math.pi)
    end_dist = np.append(dist[1:], dist[0])
    edges = []
    for a, b, da, db in zip(cuts, ends, dist, end_dist):
        first = min(width, (b - a) / 2)
        edges.append(_panel_edges(a, b, width, _levels(da, first), _levels(db, first)))
    lo = np.concatenate([e[:-1] for e in edges])
    hi = np.concatenate([e[1:] for e in edges])
    keep = hi > lo
    return lo[keep], hi[keep]


def l1_refined(coeffs: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Row-wise integral over [0, 2pi) of |p| by graded composite Gauss-Legendre.

    ``coeffs`` holds consecutive frequencies (the offset is irrelevant to |p|)
    and ``vals`` the samples of p on an equispaced grid.
    """
    C = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    e = row_exponent(C)
    C = scaled(C, -e[:, None])
    A = scaled(np.abs(np.atleast_2d(vals)), -e[:, None])
    R, m = C.shape
    f = np.arange(m) - (m - 1) / 2.0
    width = PANEL_WIDTH / (1.0 + (m - 1) / 2.0)
    ts, ws, ids = [], [], []
    for r, (cuts, dist) in enumerate(_near_zeros(C, f, A, width)):
        lo, hi = _row_panels(cuts, dist, width)
        half = (hi - lo) / 2
        ts.append(((lo + half)[:, None] + half[:, None] * GAUSS_NODES).ravel())
        ws.append((half[:, None] * GAUSS_WEIGHTS).ravel())
        ids.append(np.full(ts[-1].size, r))
    t, w, rid = np.concatenate(ts), np.concatenate(ws), np.concatenate(ids)
    total = np.zeros(R)
    step = max(1, _CHUNK // m)
    for s in range(0, t.size, step):
        sl = slice(s, s + step)
        # Horner in z = e^{it}; the dropped unimodular factor does not change |p|
        z, Cs = np.exp(1j * t[sl]), C[rid[sl]]
        p = Cs[:, -1].copy()
        for k in range(m - 2, -1, -1):
            p = p * z + Cs[:, k]
        total += np.bincount(rid[sl], weights=w[sl] * np.abs(p), minlength=R)
    return scaled(total, e)


def l1_norms(coeffs: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Row-wise integral of |p| given coefficients and samples on an even grid."""
    vals = np.atleast_2d(vals)
    size = vals.shape[1]
    h = 2 * math.pi / size
    a = np.abs(vals)
    full = h * a.sum(axis=1)
    half = 2 * h * a[:, ::2].sum(axis=1)
    d_hi = np.abs(full - half)
    if size % 4 == 0:
        d_lo = np.abs(half - 4 * h * a[:, ::4].sum(axis=1))
    else:
        d_lo = np.zeros_like(full)
    # geometric convergence shrinks successive differences by a large factor,
    # while a kink only gives the algebraic factor 1/4
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d_lo > 0, d_hi / d_lo, np.inf)
    geometric = (ratio <= GEOMETRIC_RATIO) & (d_hi * np.minimum(ratio, 1.0) <= CONVERGED * full)
    open_rows = np.flatnonzero(~((d_hi <= CONVERGED * full) | geometric))
    if open_rows.size:
        full[open_rows] = l1_refined(np.atleast_2d(coeffs)[open_rows], vals[open_rows])
    return full
