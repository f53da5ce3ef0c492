"""The annulus space F_A for the couple (FL^inf, FL^inf_1) restricted to
Laurent polynomials in zeta with finitely supported sequence coefficients.

A member is stored as a table a[n, k]: u(zeta, w) = sum_{n,k} zeta^n w^k a_{n,k}.
Row n is the sequence coefficient b_n of zeta^n; column k is frequency k
of the sequence.  On the boundary circle |zeta| = e^j the FL^inf_j norm of
g(zeta) is sup_t |u(e^{j+is}, e^{j+it})|, so the F_A norm is a sup of
|u| over two tori.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _trigmax
from .circle import CircleGrid
from .laurent import LaurentSeq, fejer_weights, fourier_coeffs, random_laurent, sample_circle, eval_circle
from .spaces import SpaceSpec, fc_theta_norm, fl_norm

E = math.e


@dataclass(frozen=True, eq=False)
class BiLaurent:
    zeta_lo: int
    w_lo: int
    table: np.ndarray

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.table, dtype=complex))
        if t.ndim != 2:
            raise ValueError("coefficient table must be 2-d")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "zeta_lo", int(self.zeta_lo))
        object.__setattr__(self, "w_lo", int(self.w_lo))

    @property
    def zeta_hi(self) -> int:
        return self.zeta_lo + self.table.shape[0] - 1

    @property
    def w_hi(self) -> int:
        return self.w_lo + self.table.shape[1] - 1

    @property
    def zeta_degree(self) -> int:
        return max(abs(self.zeta_lo), abs(self.zeta_hi))

    @property
    def w_degree(self) -> int:
        return max(abs(self.w_lo), abs(self.w_hi))

    @property
    def zeta_indices(self) -> np.ndarray:
        return np.arange(self.zeta_lo, self.zeta_hi + 1)

    @property
    def w_indices(self) -> np.ndarray:
        return np.arange(self.w_lo, self.w_hi + 1)

    @classmethod
    def constant(cls, b: LaurentSeq) -> "BiLaurent":
        return cls(0, b.lo, b.coeffs[None, :])

    @classmethod
    def from_rows(cls, rows: dict[int, LaurentSeq]) -> "BiLaurent":
        """Build sum_n zeta^n rows[n]."""
        nlo, nhi = min(rows), max(rows)
        klo = min(r.lo for r in rows.values())
        khi = max(r.hi for r in rows.values())
        t = np.zeros((nhi - nlo + 1, khi - klo + 1), dtype=complex)
        for n, r in rows.items():
            t[n - nlo] = r.padded(klo, khi)
        return cls(nlo, klo, t)

    def row(self, n: int) -> LaurentSeq:
        return LaurentSeq(self.w_lo, self.table[n - self.zeta_lo])

    def padded(self, zlo, zhi, wlo, whi) -> np.ndarray:
        out = np.zeros((zhi - zlo + 1, whi - wlo + 1), dtype=complex)
        out[self.zeta_lo - zlo : self.zeta_hi - zlo + 1, self.w_lo - wlo : self.w_hi - wlo + 1] = self.table
        return out

    def _window(self, other):
        return (min(self.zeta_lo, other.zeta_lo), max(self.zeta_hi, other.zeta_hi),
                min(self.w_lo, other.w_lo), max(self.w_hi, other.w_hi))

    def __add__(self, other: "BiLaurent") -> "BiLaurent":
        zlo, zhi, wlo, whi = self._window(other)
        return BiLaurent(zlo, wlo, self.padded(zlo, zhi, wlo, whi) + other.padded(zlo, zhi, wlo, whi))

    def __mul__(self, c) -> "BiLaurent":
        return BiLaurent(self.zeta_lo, self.w_lo, self.table * c)

    __rmul__ = __mul__

    def __call__(self, zeta, w) -> complex:
        zeta = np.asarray(zeta, dtype=complex)
        w = np.asarray(w, dtype=complex)
        zp = zeta[..., None] ** self.zeta_indices
        wp = w[..., None] ** self.w_indices
        return np.einsum("...n,nk,...k->...", zp, self.table, wp)


def evaluate_member(g: BiLaurent, zeta: complex) -> LaurentSeq:
    """g(zeta) = sum_n zeta^n b_n as a finitely supported sequence."""
    r = abs(zeta)
    if not (1.0 - 1e-12 <= r <= E * (1 + 1e-12)):
        raise ValueError(f"|zeta| = {r} lies outside the annulus [1, e]")
    powers = np.asarray(zeta, dtype=complex) ** g.zeta_indices
    return LaurentSeq(g.w_lo, powers @ g.table)


def _boundary_table(g: BiLaurent, j: int) -> np.ndarray:
    return g.table * np.exp(j * (g.zeta_indices[:, None] + g.w_indices[None, :]))


def boundary_norm(g: BiLaurent, j: int, grid: CircleGrid, stop_above: float = math.inf) -> float:
    """sup over |zeta| = e^j of ||g(zeta)||_{FL^inf_j}.

    The supremum runs over the whole circle, not only the nodes of ``grid``;
    the grid fixes the admissible degree.  ``stop_above`` allows an early
    return of any lower bound that already reaches it.
    """
    if j not in (0, 1):
        raise ValueError("j must be 0 or 1")
    deg = max(g.zeta_degree, g.w_degree)
    if grid.size < 64 * deg:
        raise ValueError(f"grid of size {grid.size} is too coarse for degree {deg}")
    return _trigmax.sup_2d(_boundary_table(g, j), g.zeta_lo, g.w_lo, stop_above=stop_above)


def fA_norm(g: BiLaurent, grid: CircleGrid, stop_above: float = math.inf) -> float:
    inner = boundary_norm(g, 0, grid, stop_above)
    if inner >= stop_above:
        return inner
    return max(inner, boundary_norm(g, 1, grid, stop_above))


def canonical_extension(lam: LaurentSeq, theta: float) -> BiLaurent:
    """g(zeta) = {e^{n theta} zeta^{-n} lambda_n}: entries a_{-k,k} = e^{k theta} lambda_k."""
    k = lam.indices
    m = k.size
    table = np.zeros((m, m), dtype=complex)
    # zeta index -k runs from -hi (row 0) to -lo (row m-1)
    table[m - 1 - np.arange(m), np.arange(m)] = np.exp(theta * k) * lam.coeffs
    return BiLaurent(-lam.hi, lam.lo, table)


@dataclass
class InterpResult:
    value: float
    upper_certificate: BiLaurent

    def __iter__(self):
        return iter((self.value, self.upper_certificate))


def interp_norm(lam: LaurentSeq, theta: float, grid: CircleGrid) -> InterpResult:
    """The interpolation norm with its attaining annulus function."""
    return InterpResult(fc_theta_norm(lam, theta, grid).value, canonical_extension(lam, theta))


def vanishing_perturbation(q: BiLaurent, theta: float) -> BiLaurent:
    """h(zeta) = (zeta - e^theta) q(zeta), which vanishes at zeta = e^theta."""
    shifted = BiLaurent(q.zeta_lo + 1, q.w_lo, q.table)
    return shifted + q * (-math.exp(theta))


def interp_norm_search(lam: LaurentSeq, theta: float, budget: int, seed: int,
                       grid: CircleGrid | None = None, perturbation_degree: int = 6) -> float:
    """Try to push the F_A norm of an interpolating function below the FC_theta norm.

    Random-direction descent over g = canonical + (zeta - e^theta) q, with q a
    zeta-polynomial of degree ``perturbation_degree`` whose coefficients are
    sequences on the support of lambda.  Every iterate interpolates lambda at
    e^theta, so the returned value bounds the infimum from above.
    """
    grid = grid or CircleGrid(4096)
    base = canonical_extension(lam, theta)
    best = fA_norm(base, grid)
    rng = np.random.default_rng(seed)
    shape = (2 * perturbation_degree + 1, lam.coeffs.size)
    x = np.zeros(shape, dtype=complex)
    step = 0.1 * max(best, 1e-12) / math.sqrt(shape[0] * shape[1])
    direction = None
    for it in range(budget):
        if direction is None or it % 2 == 0:
            direction = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            trial_dir = direction
        else:
            trial_dir = -direction
        trial = x + step * trial_dir
        q = BiLaurent(-perturbation_degree, lam.lo, trial)
        value = fA_norm(base + vanishing_perturbation(q, theta), grid, stop_above=best)
        if value < best:
            best, x = value, trial
            step *= 2.0
            direction = None
        elif it % 2 == 1:
            step *= 0.5
    return best


@dataclass
class ThreeCirclesReport:
    theta: float
    empirical_C: float
    sample_count: int
    ratios: np.ndarray = field(repr=False, default=None)


def three_circles_ratio(v: LaurentSeq, theta: float, grid: CircleGrid) -> float:
    """|v(e^theta)| / (L1 on |z|=1)^{1-theta} (L1 on |z|=e)^theta."""
    if not np.any(v.coeffs):
        raise ValueError("three_circles_ratio is undefined for the zero sequence")
    return float(three_circles_ratios(v.coeffs[None, :], v.lo, theta, grid)[0])


def three_circles_ratios(coeffs: np.ndarray, lo: int, theta: float, grid: CircleGrid) -> np.ndarray:
    """Batched three_circles_ratio over the rows of ``coeffs``."""
    coeffs = np.atleast_2d(coeffs)
    n = lo + np.arange(coeffs.shape[1])
    if grid.size < 2 * max(abs(n[0]), abs(n[-1])) + 2:
        raise ValueError("grid too coarse")
    center = np.abs(coeffs @ np.exp(theta * n))
    inner = grid.step * np.abs(sample_circle(coeffs, lo, grid.size)).sum(axis=1)
    outer = grid.step * np.abs(sample_circle(coeffs * np.exp(n), lo, grid.size)).sum(axis=1)
    return center / (inner ** (1 - theta) * outer ** theta)


def three_circles_report(samples, theta: float, grid: CircleGrid) -> ThreeCirclesReport:
    ratios = np.array([three_circles_ratio(v, theta, grid) for v in samples])
    return ThreeCirclesReport(theta, float(ratios.max()), len(ratios), ratios)


class EnvelopeViolation(ValueError):
    """A boundary value left the envelope; carries the witnessing zeta node."""

    def __init__(self, msg, zeta, frequency, excess):
        super().__init__(msg)
        self.zeta = zeta
        self.frequency = frequency
        self.excess = excess


def _envelope_on(envelope: LaurentSeq, lo: int, hi: int) -> np.ndarray:
    lo2, hi2 = min(lo, envelope.lo), max(hi, envelope.hi)
    return envelope.padded(lo2, hi2).real, lo2, hi2


def hull_membership_margin(g: BiLaurent, j: int, envelope: LaurentSeq,
                           grid: CircleGrid | None = None, tol: float = 1e-10) -> float:
    """min over (n, k) of c_k - |a'_{n,k}|, a' recovered from the boundary values.

    The boundary values g(zeta), |zeta| = e^j, are sampled on a zeta-grid and
    checked against the envelope {|lambda_k| <= c_k}; the zeta-Fourier
    coefficients are then recovered from those samples.
    """
    radii, klo, khi = _envelope_on(envelope, g.w_lo, g.w_hi)
    size = grid.size if grid is not None else max(64, 4 * (g.zeta_degree + 1))
    zgrid = CircleGrid(size, float(j))
    tab = np.zeros((g.table.shape[0], khi - klo + 1), dtype=complex)
    tab[:, g.w_lo - klo : g.w_hi - klo + 1] = g.table
    # column k of ``boundary`` is s -> c_k(e^{j+is}) on the zeta grid
    boundary = sample_circle((tab * np.exp(j * g.zeta_indices)[:, None]).T, g.zeta_lo, size).T
    excess = np.abs(boundary) - radii[None, :]
    scale = max(1.0, float(radii.max(initial=0.0)))
    if excess.max() > tol * scale:
        node, kk = np.unravel_index(np.argmax(excess), excess.shape)
        zeta = complex(zgrid.points[node])
        raise EnvelopeViolation(
            f"boundary value at zeta={zeta:.6g} leaves the envelope at frequency {klo + kk} "
            f"by {excess[node, kk]:.3g}", zeta, klo + kk, float(excess[node, kk]))
    from .circle import GridFunction
    margins = []
    for col in range(boundary.shape[1]):
        f = GridFunction(zgrid, boundary[:, col])
        a = fourier_coeffs(f, g.zeta_lo, g.zeta_hi).coeffs
        margins.append(radii[col] - np.abs(a))
    return float(np.min(margins))


def fejer_mean_zeta(g: BiLaurent, N: int) -> BiLaurent:
    """Fejer mean in the zeta variable."""
    w = fejer_weights(N, g.zeta_indices)
    keep = np.flatnonzero(w > 0)
    if keep.size == 0:
        return BiLaurent(0, g.w_lo, np.zeros((1, g.table.shape[1])))
    return BiLaurent(g.zeta_lo + keep[0], g.w_lo, (g.table * w[:, None])[keep[0] : keep[-1] + 1])


def psi_sigma(g: BiLaurent, sigma: LaurentSeq) -> LaurentSeq:
    """The scalar function psi(zeta) = sum_n zeta^n sum_k a_{n,k} sigma_k zeta^k."""
    s = np.array([sigma[k] for k in g.w_indices])
    lo = g.zeta_lo + g.w_lo
    out = np.zeros(g.table.shape[0] + g.table.shape[1] - 1, dtype=complex)
    for i in range(g.table.shape[0]):
        out[i : i + g.table.shape[1]] += g.table[i] * s
    return LaurentSeq(lo, out)


def random_member(rng: np.random.Generator, zeta_degree: int, w_lo: int, w_hi: int) -> BiLaurent:
    rows = {n: random_laurent(rng, w_lo, w_hi) for n in range(-zeta_degree, zeta_degree + 1)}
    return BiLaurent.from_rows(rows)
