"""The class E_K, the modulus rho_K, equicontinuity moduli, greedy nets and a
grid-scale Lusin decomposition.

Members of E_K are BiLaurent tables u(zeta, w) whose zeta-slices u(zeta, .)
lie in K for every zeta on the unit circle.  Two certified constructions
are used: convex combinations of listed members with a nonnegative
trigonometric partition of unity in zeta, and envelope families whose
w-coefficient columns are scaled by their continuous zeta-supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _trigmax
from .circle import CircleGrid, GridFunction
from .interp import BiLaurent
from .laurent import LaurentSeq, eval_circle, fejer_mean, fejer_weights, sample_circle
from .spaces import INF, SpaceSpec

_CHUNK = 1 << 20  # complex entries per block in the pairwise kernels


@dataclass(frozen=True, eq=False)
class FamilyK:
    """A set K in L^inf(T): listed members, an envelope {|lambda_k| <= c_k}, or both.

    ``sup_bound`` additionally intersects with a ball of FL^inf.
    """

    members: tuple = ()
    envelope: LaurentSeq | None = None
    sup_bound: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members and self.envelope is None:
            raise ValueError("a family needs members or an envelope")
        if self.envelope is not None:
            c = self.envelope.coeffs
            if np.any(np.abs(c.imag) > 0) or np.any(c.real < 0):
                raise ValueError("envelope radii must be nonnegative reals")

    @classmethod
    def geometric(cls, kmax: int, ratio: float = 0.5, sup_bound: float | None = None) -> "FamilyK":
        """Envelope c_k = ratio^|k| for |k| <= kmax."""
        k = np.arange(-kmax, kmax + 1)
        return cls(envelope=LaurentSeq(-kmax, ratio ** np.abs(k)), sup_bound=sup_bound)

    @classmethod
    def flat(cls, kmax: int) -> "FamilyK":
        return cls(envelope=LaurentSeq(-kmax, np.ones(2 * kmax + 1)))

    def lipschitz_sum(self) -> float:
        """sum_k |k| c_k, a Lipschitz constant for every envelope member."""
        if self.envelope is None:
            raise ValueError("no envelope")
        return float(np.sum(np.abs(self.envelope.indices) * self.envelope.coeffs.real))


@dataclass(frozen=True)
class ModulusCurve:
    deltas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if d.shape != v.shape or d.ndim != 1 or d.size == 0:
            raise ValueError("deltas and values must be 1-d arrays of equal length")
        if np.any(np.diff(d) <= 0):
            raise ValueError("deltas must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("modulus values must be nonnegative")
        if np.any(np.diff(v) < -1e-9):
            raise ValueError("modulus curve must be nondecreasing")
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "values", v)

    def at(self, delta: float) -> float:
        """Value at the first knot >= delta."""
        i = int(np.searchsorted(self.deltas, delta - 1e-12, side="left"))
        if i == self.deltas.size:
            raise ValueError(f"separation {delta} lies beyond the last knot {self.deltas[-1]}")
        return float(self.values[i])

    def to_dat(self) -> str:
        return "".join(f"{float(d)!r} {float(v)!r}\n" for d, v in zip(self.deltas, self.values))


@dataclass(frozen=True)
class CoveringReport:
    epsilon: float
    net_indices: tuple
    count: int


# --------------------------------------------------------------------- rho


def _separation_steps(delta: float, grid: CircleGrid) -> int:
    if not 0.0 < delta <= math.pi:
        raise ValueError(f"separation must lie in (0, pi], got {delta}")
    j = int(math.floor(delta / grid.step + 1e-9))
    if j == 0:
        raise ValueError(f"separation {delta} is below the grid step {grid.step}")
    return j


def _pair_table(u: BiLaurent, shift: float) -> tuple[np.ndarray, int]:
    """C[k, m] with u(w, z w) - u(w, z e^{i shift} w) = sum_{k,m} z^k w^m C[k, m]."""
    rows, cols = u.table.shape
    k = u.w_indices
    C = np.zeros((cols, rows + cols - 1), dtype=complex)
    factor = 1.0 - np.exp(1j * k * shift)
    ci = np.arange(cols)
    for i in range(rows):
        C[ci, i + ci] = u.table[i] * factor
    return C, u.zeta_lo + u.w_lo


def _z_nodes(grid: CircleGrid, pair_samples: int | None) -> np.ndarray:
    if pair_samples is None or pair_samples >= grid.size:
        return grid.angles
    if pair_samples < 1:
        raise ValueError("pair_samples must be positive")
    return grid.step * np.round(np.arange(pair_samples) * grid.size / pair_samples)


def rho_of_member(u: BiLaurent, delta: float, grid: CircleGrid, pair_samples: int | None = None) -> float:
    """max over sampled z1 of the integral over T of |u(w, z1 w) - u(w, z2 w)|, z2 = z1 e^{i delta'}.

    delta' is the largest grid multiple not exceeding delta; z1 runs over
    ``pair_samples`` equispaced nodes (all nodes by default).
    """
    j = _separation_steps(delta, grid)
    deg = max(u.zeta_degree, u.w_degree)
    if grid.size < 64 * deg:
        raise ValueError(f"grid of size {grid.size} is too coarse for degree {deg}")
    C, mlo = _pair_table(u, j * grid.step)
    z1 = _z_nodes(grid, pair_samples)
    powers_k = u.w_indices
    chunk = max(1, _CHUNK // grid.size)
    best = 0.0
    for b in range(0, z1.size, chunk):
        Z = np.exp(1j * np.outer(z1[b : b + chunk], powers_k))
        vals = sample_circle(Z @ C, mlo, grid.size)
        best = max(best, float(grid.step * np.abs(vals).sum(axis=1).max()))
    return best


def diagonal_samples(u: BiLaurent, z_angles, j: int, size: int) -> np.ndarray:
    """Rows t -> u(e^{j+it}, e^{i z} e^{j+it}) sampled at ``size`` nodes, one row per angle z."""
    rows, cols = u.table.shape
    D = np.zeros((cols, rows + cols - 1), dtype=complex)
    ci = np.arange(cols)
    for i in range(rows):
        D[ci, i + ci] = u.table[i]
    mlo = u.zeta_lo + u.w_lo
    D *= np.exp(j * (mlo + np.arange(D.shape[1])))[None, :]
    Z = np.exp(1j * np.outer(np.asarray(z_angles, dtype=float), u.w_indices))
    return sample_circle(Z @ D, mlo, size)


def rho_curve(members, deltas, grid: CircleGrid, pair_samples: int | None = None) -> tuple[ModulusCurve, np.ndarray]:
    """Sampled rho at each separation.

    Returns the monotone curve (running max over the knots, which is still a
    lower bound for the supremum over d <= delta) and the raw per-knot maxima.
    """
    deltas = np.sort(np.asarray(deltas, dtype=float))
    raw = np.zeros(deltas.size)
    for u in members:
        for i, d in enumerate(deltas):
            raw[i] = max(raw[i], rho_of_member(u, d, grid, pair_samples))
    return ModulusCurve(deltas, np.maximum.accumulate(raw)), raw


def _partition_members(K: FamilyK, rng, count: int, order: int) -> list[BiLaurent]:
    """u(zeta, w) = sum_m c_m(zeta) k_m(w) with c_m a Fejer partition of unity.

    c_m(e^{is}) = kappa_order(s - 2 pi m/(order+1)) / (order+1) is nonnegative and
    the c_m sum to 1, so every zeta-slice is a convex combination of members.
    """
    members = K.members
    lo = min(m.lo for m in members)
    hi = max(m.hi for m in members)
    mat = np.array([m.padded(lo, hi) for m in members])
    n = np.arange(-order, order + 1)
    nodes = 2 * math.pi * np.arange(order + 1) / (order + 1)
    weights = fejer_weights(order, n)[:, None] * np.exp(-1j * np.outer(n, nodes)) / (order + 1)
    out = [BiLaurent(0, lo, mat[i : i + 1]) for i in range(len(members))]
    for _ in range(count):
        picks = rng.integers(len(members), size=order + 1)
        out.append(BiLaurent(-order, lo, weights @ mat[picks]))
    return out


def _envelope_columns(table: np.ndarray, zeta_lo: int, radii: np.ndarray) -> np.ndarray:
    """Scale column k so that sup over |zeta| = 1 of |column polynomial| equals c_k."""
    m = table.shape[0]
    sups = np.atleast_1d(_trigmax.sup_1d(table.T, zeta_lo, _trigmax.grid_size_for((m - 1) / 2.0)))
    scale = np.divide(radii, sups, out=np.zeros_like(radii), where=sups > 0)
    return table * scale[None, :]


def _cap_sup(table: np.ndarray, zeta_lo: int, w_lo: int, bound: float | None) -> np.ndarray:
    if bound is None:
        return table
    s = _trigmax.sup_2d(table, zeta_lo, w_lo)
    return table * (bound / s) if s > bound else table


def _envelope_members(K: FamilyK, rng, count: int, zeta_degree: int) -> list[BiLaurent]:
    env = K.envelope.trimmed()
    radii = env.coeffs.real
    out = []
    # monomial sweep c_k w^k: the extreme points that drive non-compact behaviour
    for k, c in zip(env.indices, radii):
        if c > 0:
            amp = c if K.sup_bound is None else min(c, K.sup_bound)
            out.append(BiLaurent(0, int(k), [[amp]]))
    shape = (2 * zeta_degree + 1, radii.size)
    for _ in range(count):
        r = np.sqrt(rng.random(shape))
        raw = r * np.exp(2j * math.pi * rng.random(shape))
        t = _envelope_columns(raw, -zeta_degree, radii)
        t = _cap_sup(t, -zeta_degree, env.lo, K.sup_bound)
        out.append(BiLaurent(-zeta_degree, env.lo, t))
    return out


def ek_members(K: FamilyK, budget: int, seed: int, zeta_degree: int = 4) -> list[BiLaurent]:
    """Certified members of E_K: deterministic extreme members plus ``budget`` random ones."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    out = []
    if K.members:
        out += _partition_members(K, rng, budget, zeta_degree)
    if K.envelope is not None:
        out += _envelope_members(K, rng, budget, zeta_degree)
    return out


def rho_K(K: FamilyK, delta: float, generator_budget: int, seed: int,
          grid: CircleGrid | None = None, pair_samples: int | None = 256, zeta_degree: int = 4) -> float:
    """Sampled lower bound for rho_K(delta)."""
    grid = grid or CircleGrid(4096)
    members = ek_members(K, generator_budget, seed, zeta_degree)
    return max(rho_of_member(u, delta, grid, pair_samples) for u in members)


# --------------------------------------------------------- equicontinuity


def _stack(F) -> np.ndarray:
    F = list(F)
    if not F:
        raise ValueError("empty family")
    size = F[0].grid.size
    if any(f.grid.size != size for f in F):
        raise ValueError("all members must share one grid")
    return np.array([f.values for f in F])


def _pair_maxima(V: np.ndarray, J: int, mask: np.ndarray | None = None) -> np.ndarray:
    """out[j-1] = max over rows and nodes s of |V[s + j] - V[s]|, j = 1..J (pairs inside mask)."""
    B, N = V.shape
    out = np.zeros(J)
    ext = np.concatenate([V, V[:, :J]], axis=1)
    windows = sliding_window_view(ext, J + 1, axis=1)[:, :N]  # (B, N, J+1)
    if mask is not None:
        mext = np.concatenate([mask, mask[:J]])
        mwin = sliding_window_view(mext, J + 1)[:N]
    block = max(1, _CHUNK // max(1, B * (J + 1)))
    for s in range(0, N, block):
        w = windows[:, s : s + block]
        d = np.abs(w[..., 1:] - w[..., :1])
        if mask is not None:
            mw = mwin[s : s + block]
            ok = mw[:, 1:] & mw[:, :1]
            d = np.where(ok[None], d, 0.0)
        np.maximum(out, d.max(axis=(0, 1)), out=out)
    return out


def equicontinuity_modulus(F, delta: float, mask=None) -> float:
    """max over members and node pairs at arc distance <= delta of |f(z1) - f(z2)|.

    ``mask`` (boolean per node) restricts both points of a pair.
    """
    V = _stack(F)
    N = V.shape[1]
    h = 2 * math.pi / N
    J = min(N // 2, int(math.floor(delta / h + 1e-9)))
    if J == 0:
        return 0.0
    m = None if mask is None else np.asarray(mask, dtype=bool)
    return float(_pair_maxima(V, J, m).max())


# ------------------------------------------------------------- coverings


def _cos_factor(half_width: float, size: int) -> float:
    arg = math.pi * half_width / size
    return 1.0 / math.cos(arg) if arg < math.pi / 2 else math.inf


def covering_number(points, epsilon: float, norm: SpaceSpec, grid: CircleGrid) -> CoveringReport:
    """Greedy epsilon-net in input order; ties go to the earliest center."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    points = list(points)
    if not points:
        return CoveringReport(epsilon, (), 0)
    lo = min(p.lo for p in points)
    hi = max(p.hi for p in points)
    deg = max(abs(lo), abs(hi))
    if grid.size < 64 * deg:
        raise ValueError(f"grid of size {grid.size} is too coarse for degree {deg}")
    weights = np.exp(norm.alpha * np.arange(lo, hi + 1))
    coeffs = np.array([p.padded(lo, hi) for p in points]) * weights
    vals = sample_circle(coeffs, lo, grid.size)
    factor = _cos_factor((hi - lo) / 2.0, grid.size)
    centers: list[int] = []
    for i in range(len(points)):
        if centers:
            diff = vals[i] - vals[centers]
            if norm.p == INF:
                gd = np.abs(diff).max(axis=1)
                if np.any(gd * factor <= epsilon):
                    continue
                unsure = np.flatnonzero(gd <= epsilon)
                if unsure.size:
                    rows = coeffs[i] - coeffs[np.asarray(centers)[unsure]]
                    if np.any(_trigmax.sup_1d(rows, lo, grid.size) <= epsilon):
                        continue
            else:
                if np.any(grid.step * np.abs(diff).sum(axis=1) <= epsilon):
                    continue
        centers.append(i)
    return CoveringReport(epsilon, tuple(centers), len(centers))


# ----------------------------------------------------------------- Lusin


class LusinFailure(RuntimeError):
    def __init__(self, msg: str, attempts: list):
        super().__init__(msg)
        self.attempts = attempts


@dataclass
class LusinResult:
    U: GridFunction
    delta: float
    order: int
    net_indices: tuple
    excluded_measure: float
    attempts: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.U, self.delta))


def _grid_net(V: np.ndarray, radius: float) -> list[int]:
    centers: list[int] = []
    for i in range(V.shape[0]):
        if centers and np.any(np.abs(V[i] - V[centers]).max(axis=1) <= radius):
            continue
        centers.append(i)
    return centers


def lusin_decomposition(F: FamilyK, epsilon: float, grid: CircleGrid,
                        orders=(64, 256, 1024)) -> LusinResult:
    """A node set U with mu(T \\ U) < epsilon and a separation delta such that
    every member of F varies by at most epsilon between points of U closer
    than delta.

    Centers f_j of an epsilon/3 net (node sup norm) are smoothed by Fejer
    means g_j; U keeps the nodes where every |f_j - g_j| <= epsilon/9, and
    delta is the largest grid separation over which every g_j varies by less
    than epsilon/9 between points of U.
    """
    if not F.members:
        raise ValueError("the Lusin construction needs a listed family")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    V = np.array([eval_circle(m, 0.0, grid).values for m in F.members])
    net = _grid_net(V, epsilon / 3)
    tol = epsilon / 9
    attempts = []
    for order in orders:
        G = np.array([eval_circle(fejer_mean(F.members[j], order), 0.0, grid).values for j in net])
        err = np.abs(V[net] - G).max(axis=0)
        inside = err <= tol
        excluded = grid.step * int(np.count_nonzero(~inside))
        steps = 0
        if excluded < epsilon:
            jumps = np.maximum.accumulate(_pair_maxima(G, grid.size // 2, inside))
            steps = int(np.searchsorted(jumps, tol, side="left"))
        attempts.append({"order": order, "excluded_measure": excluded, "delta_steps": steps})
        if excluded < epsilon and steps > 0:
            return LusinResult(GridFunction(grid, inside.astype(float)), steps * grid.step,
                               order, tuple(net), excluded, attempts)
    raise LusinFailure(
        f"no Fejer order in {tuple(orders)} gives mu(T \\ U) < {epsilon} with a positive delta", attempts)


# ---------------------------------------------------------- modulus check


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    slack: float
    worst_separation: float

    def __bool__(self):
        return self.passed


def separation_maxima(psi: GridFunction) -> np.ndarray:
    """out[j-1] = max over nodes of |psi(s + j h) - psi(s)| for j = 1..N/2."""
    return _pair_maxima(psi.values[None, :], psi.grid.size // 2)


def modulus_bound_check(psi: GridFunction, curve: ModulusCurve, theta: float, C: float) -> BoundCheck:
    """Check |psi(s) - psi(sigma)| <= C rho(d)^{1-theta} (4 pi)^theta on all node pairs.

    rho(d) is read at the first curve knot >= d.
    """
    N = psi.grid.size
    seps = psi.grid.step * np.arange(1, N // 2 + 1)
    idx = np.searchsorted(curve.deltas, seps - 1e-12, side="left")
    if np.any(idx == curve.deltas.size):
        raise ValueError("the modulus curve does not reach every node separation")
    rhs = C * curve.values[idx] ** (1 - theta) * (4 * math.pi) ** theta
    lhs = separation_maxima(psi)
    gap = rhs - lhs
    w = int(np.argmin(gap))
    return BoundCheck(bool(gap[w] >= 0), float(gap[w]), float(seps[w]))


# ------------------------------------------------ annulus members for K_theta


@dataclass(frozen=True)
class ConstrainedMember:
    member: BiLaurent
    scale: float
    inner_norm: float
    outer_norm: float
    envelope_ratio: float


def constrained_member(rng: np.random.Generator, zeta_degree: int, K0: FamilyK,
                       grid: CircleGrid, max_active: int = 8) -> ConstrainedMember:
    """A random g in G_A with g(zeta) in K0 for |zeta| = 1 and ||g(zeta)||_{FL^inf_1} <= 1 for |zeta| = e.

    A few active entries a_{n,k} are drawn with magnitudes up to
    min(c_k, e^{-(n+k)}), which balances the two boundary constraints; the
    table is then rescaled so that the tightest constraint holds with
    equality.  Constraints are measured by continuous suprema.
    """
    from .interp import boundary_norm

    env = K0.envelope
    radii = env.coeffs.real
    n = np.arange(-zeta_degree, zeta_degree + 1)[:, None]
    k = env.indices[None, :]
    shape = (n.size, radii.size)
    weight = np.minimum(radii[None, :], np.exp(-(n + k)))
    entries = np.sqrt(rng.random(shape)) * np.exp(2j * math.pi * rng.random(shape)) * weight
    active = int(rng.integers(1, max_active + 1))
    keep = np.zeros(entries.size, dtype=bool)
    keep[rng.choice(entries.size, size=active, replace=False)] = True
    table = entries * keep.reshape(shape)
    sups = np.atleast_1d(_trigmax.sup_1d(table.T, -zeta_degree, _trigmax.grid_size_for(zeta_degree)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = float(np.max(np.where(radii > 0, sups / radii, np.where(sups > 0, np.inf, 0.0))))
    g = BiLaurent(-zeta_degree, env.lo, table)
    inner = boundary_norm(g, 0, grid)
    outer = boundary_norm(g, 1, grid)
    scale = max(ratio, outer, inner / K0.sup_bound if K0.sup_bound else 0.0)
    if not np.isfinite(scale) or scale == 0.0:
        raise ValueError("no nonzero member satisfies the constraints")
    return ConstrainedMember(g * (1.0 / scale), 1.0 / scale, inner / scale, outer / scale, ratio / scale)
