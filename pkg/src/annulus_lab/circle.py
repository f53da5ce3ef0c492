"""Geometry, measure and quadrature on circles |z| = e^alpha.

Points on a circle are addressed by their angle in [0, 2*pi).  Arc length
is the measure throughout, so the whole circle has mass 2*pi (there is no
1/(2*pi) normalization anywhere in this module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CircleGrid:
    """Equispaced nodes e^{alpha + 2*pi*i*k/N}, k = 0..N-1."""

    size: int
    radius_exponent: float = 0.0

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 4 or self.size % 2:
            raise ValueError(f"grid size must be an even integer >= 4, got {self.size}")
        if not (0.0 <= self.radius_exponent <= 1.0):
            raise ValueError(
                f"radius exponent must lie in [0, 1], got {self.radius_exponent}"
            )

    @property
    def step(self) -> float:
        return TWO_PI / self.size

    @property
    def angles(self) -> np.ndarray:
        return TWO_PI * np.arange(self.size) / self.size

    @property
    def points(self) -> np.ndarray:
        return np.exp(self.radius_exponent + 1j * self.angles)

    def at_radius(self, alpha: float) -> "CircleGrid":
        return CircleGrid(self.size, alpha)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples of a function at the nodes of a CircleGrid."""

    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} values, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: CircleGrid, fn) -> "GridFunction":
        """Sample ``fn(t)`` at the node angles t."""
        return cls(grid, fn(grid.angles))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c) -> "GridFunction":
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def rotated(self, steps: int) -> "GridFunction":
        """The function t -> f(t - steps*h), i.e. values moved forward by ``steps`` nodes."""
        return GridFunction(self.grid, np.roll(self.values, steps))


def _same_grid(f: GridFunction, g: GridFunction):
    if f.grid.size != g.grid.size:
        raise ValueError("grid functions live on different grids")


def arc_distance(z1: float, z2: float) -> float:
    """Length of the shortest arc joining the angles z1 and z2."""
    d = (z2 - z1) % TWO_PI
    return float(min(d, TWO_PI - d))


def snap(grid: CircleGrid, z: float) -> tuple[int, float]:
    """Nearest node index to angle z and the arc distance to it."""
    k = int(round((z % TWO_PI) / grid.step)) % grid.size
    return k, arc_distance(z, k * grid.step)


def _arc_weights(grid: CircleGrid, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights integrating the piecewise-linear interpolant over [-r, r]."""
    if not (0.0 < r <= math.pi):
        raise ValueError(f"arc half-length r must lie in (0, pi], got {r}")
    h = grid.step
    if math.isclose(r, math.pi, rel_tol=0.0, abs_tol=1e-14):
        # full circle: plain trapezoid, every node weight h
        return np.arange(grid.size), np.full(grid.size, h)
    m = int(math.floor(r / h + 1e-12))
    a = r - m * h
    if a < 1e-12 * h:
        a = 0.0
    offsets = np.arange(-m - 1, m + 2)
    w = np.zeros(offsets.size)
    inner = np.abs(offsets) <= m
    w[inner] = h
    # interior trapezoid ends at +-m carry h/2
    w[np.abs(offsets) == m] = h / 2 if m > 0 else 0.0
    # partial cells [m h, r] and [-r, -m h] of the linear interpolant
    end = a * (1.0 - a / (2 * h))
    nxt = a * a / (2 * h)
    w[offsets == m] += end
    w[offsets == -m] += end
    w[offsets == m + 1] += nxt
    w[offsets == -m - 1] += nxt
    return offsets, w


def arc_integral(f: GridFunction, z: float, r: float, diagnostics: dict | None = None) -> complex:
    """Trapezoid quadrature of the integral of f(z e^{it}) over t in [-r, r].

    Off-node z is snapped to the nearest node; the snap distance is written
    to ``diagnostics["snap_distance"]`` when a dict is passed.
    """
    k0, snap_dist = snap(f.grid, z)
    if diagnostics is not None:
        diagnostics["snap_distance"] = snap_dist
        diagnostics["node"] = k0
    offsets, w = _arc_weights(f.grid, r)
    idx = (k0 + offsets) % f.grid.size
    return complex(np.dot(w, f.values[idx]))


def local_average(f: GridFunction, z: float, r: float) -> complex:
    return arc_integral(f, z, r) / (2.0 * r)


def density_fraction(E: GridFunction, z: float, r: float) -> float:
    """Measured fraction of the arc of half-length r around z covered by E."""
    vals = E.values
    if np.any(np.abs(vals.imag) > 0) or not np.all((vals.real == 0) | (vals.real == 1)):
        raise ValueError("density_fraction needs an indicator function (values 0 or 1)")
    frac = arc_integral(E, z, r).real / (2.0 * r)
    return float(min(1.0, max(0.0, frac)))


def indicator(grid: CircleGrid, mask) -> GridFunction:
    return GridFunction(grid, np.asarray(mask, dtype=float))


def circle_norms(f: GridFunction) -> tuple[float, float]:
    """(sup norm, L^1 norm) with the L^1 norm taken against arc length."""
    mod = np.abs(f.values)
    return float(mod.max(initial=0.0)), float(f.grid.step * mod.sum())
