"""Radial grids, quadrature weights and interpolated profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numba import njit

from .errors import ConfigurationError, DomainError, ExtrapolationError

__all__ = [
    "RadialGrid",
    "Profile",
    "make_grid",
    "default_grid",
    "grid_from_nodes",
    "interpolate",
    "quadrature",
    "simpson_weights",
]


def simpson_weights(x: np.ndarray) -> np.ndarray:
    """Composite Simpson weights on arbitrary increasing nodes.

    Interval pairs use the non-uniform three-point rule; an odd trailing
    interval is integrated with the parabola through the last three nodes.
    Exact for cubics on the paired part and quadratics on the tail.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise ConfigurationError("need at least two nodes")
    w = np.zeros(n)
    if n == 2:
        h = x[1] - x[0]
        w[:] = 0.5 * h
        return w
    dx = np.diff(x)
    m = (n - 1) // 2 * 2  # number of intervals covered by pairs
    h0 = dx[0:m:2]
    h1 = dx[1:m:2]
    s = h0 + h1
    w[0:m:2] += s / 6.0 * (2.0 - h1 / h0)
    w[1:m:2] += s**3 / (6.0 * h0 * h1)
    w[2:m + 1:2] += s / 6.0 * (2.0 - h0 / h1)
    if m < n - 1:
        h0, h1 = dx[-2], dx[-1]
        w[-1] += (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1))
        w[-2] += (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0)
        w[-3] -= h1**3 / (6.0 * h0 * (h0 + h1))
    return w


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Geometric nodes on [rho0, 1) followed by uniform nodes on [1, rho_max]."""

    rho0: float
    rho_max: float
    n_geo: int
    n_uni: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.nodes.size

    @property
    def spacing(self) -> float:
        """Uniform spacing of the outer section."""
        return (self.rho_max - 1.0) / (self.n_uni - 1)


def make_grid(rho0: float, rho_max: float, n_geo: int, n_uni: int) -> RadialGrid:
    """Build the composite grid.

    ``n_geo`` geometric nodes start at ``rho0`` and stop short of 1; the
    ``n_uni`` uniform nodes run from 1 to ``rho_max`` inclusive.
    """
    if not (math.isfinite(rho0) and math.isfinite(rho_max)):
        raise ConfigurationError("grid bounds must be finite")
    if not 0.0 < rho0 < 1.0 < rho_max:
        raise ConfigurationError("grid requires 0 < rho0 < 1 < rho_max")
    if int(n_geo) < 1 or int(n_uni) < 2:
        raise ConfigurationError("grid requires n_geo >= 1 and n_uni >= 2")
    n_geo, n_uni = int(n_geo), int(n_uni)
    geo = np.geomspace(rho0, 1.0, n_geo + 1)[:-1]
    uni = np.linspace(1.0, rho_max, n_uni)
    nodes = np.concatenate([geo, uni])
    nodes.setflags(write=False)
    w = simpson_weights(nodes)
    w.setflags(write=False)
    return RadialGrid(float(rho0), float(rho_max), n_geo, n_uni, nodes, w)


def grid_from_nodes(nodes) -> RadialGrid:
    """Wrap externally supplied nodes (for example a CSV column) as a grid."""
    x = np.array(nodes, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise ConfigurationError("a grid needs at least three nodes")
    if not np.all(np.isfinite(x)) or x[0] <= 0.0:
        raise ConfigurationError("grid nodes must be finite and positive")
    if np.any(np.diff(x) <= 0.0):
        raise ConfigurationError("grid nodes must be strictly increasing")
    n_geo = int(np.count_nonzero(x < 1.0))
    x.setflags(write=False)
    w = simpson_weights(x)
    w.setflags(write=False)
    return RadialGrid(float(x[0]), float(x[-1]), n_geo, x.size - n_geo, x, w)


def default_grid(rho0: float = 1e-4, rho_max: float = 25.0, spacing: float = 0.03,
                 n_geo: Optional[int] = None) -> RadialGrid:
    """Grid with uniform spacing ``spacing`` on [1, rho_max].

    By default the geometric section gets as many nodes as needed for its
    last step below 1 to match ``spacing``.
    """
    if not spacing > 0 or not spacing < 1:
        raise ConfigurationError("spacing must lie in (0, 1)")
    if not 0.0 < rho0 < 1.0:
        raise ConfigurationError("grid requires 0 < rho0 < 1")
    if n_geo is None:
        n_geo = int(math.ceil(math.log(1.0 / rho0) / -math.log1p(-spacing)))
    n_uni = max(2, int(math.ceil((rho_max - 1.0) / spacing)) + 1)
    return make_grid(rho0, rho_max, n_geo, n_uni)


def quadrature(grid: RadialGrid, samples) -> float:
    """Integrate node samples over [rho0, rho_max]."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != grid.nodes.shape:
        raise ConfigurationError("sample count does not match the grid")
    return float(grid.weights @ samples)


# Hermite interpolation ---------------------------------------------------

@njit(cache=True)
def _limit_slopes(x, y, d):
    """Fritsch-Carlson limiter: keeps the cubic Hermite interpolant monotone.

    Written without dividing by the secant so subnormal data cannot overflow.
    """
    n = x.size
    m = d.copy()
    for k in range(n - 1):
        delta = (y[k + 1] - y[k]) / (x[k + 1] - x[k])
        if delta == 0.0:
            m[k] = 0.0
            m[k + 1] = 0.0
            continue
        if m[k] * delta < 0.0:
            m[k] = 0.0
        if m[k + 1] * delta < 0.0:
            m[k + 1] = 0.0
        r = math.hypot(m[k], m[k + 1])
        if r > 3.0 * abs(delta):
            t = 3.0 * abs(delta) / r
            m[k] *= t
            m[k + 1] *= t
    return m


@njit(cache=True)
def _hermite(x, y, m, rho):
    """Value and derivative of the Hermite interpolant at rho (inside the grid)."""
    n = x.size
    k = np.searchsorted(x, rho) - 1
    if k < 0:
        k = 0
    if k > n - 2:
        k = n - 2
    hk = x[k + 1] - x[k]
    t = (rho - x[k]) / hk
    t2 = t * t
    t3 = t2 * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + t
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    v = h00 * y[k] + h10 * hk * m[k] + h01 * y[k + 1] + h11 * hk * m[k + 1]
    d00 = (6 * t2 - 6 * t) / hk
    d10 = 3 * t2 - 4 * t + 1
    d01 = (-6 * t2 + 6 * t) / hk
    d11 = 3 * t2 - 2 * t
    dv = d00 * y[k] + d10 * m[k] + d01 * y[k + 1] + d11 * m[k + 1]
    return v, dv


@njit(cache=True)
def profile_eval(x, y, m, v0, c, p, rho):
    """Profile value and derivative, using the origin law below the grid.

    Callers guarantee rho <= x[-1].
    """
    if rho < x[0]:
        if p <= 0.0:
            return y[0], 0.0
        return v0 + c * rho**p, p * c * rho ** (p - 1.0)
    return _hermite(x, y, m, rho)


@dataclass(frozen=True, eq=False)
class Profile:
    """Node values and derivatives of one radial function.

    Parameters
    ----------
    grid : RadialGrid
    values, derivs : ndarray
        Samples at the grid nodes.
    origin : (float, float) or None
        ``(v0, p)`` of the small-rho law ``v0 + c rho**p``; ``c`` is fixed by
        the first node.  Without it, queries below ``rho0`` raise.
    name : str
    """

    grid: RadialGrid
    values: np.ndarray = field(repr=False)
    derivs: np.ndarray = field(repr=False)
    origin: Optional[tuple] = None
    name: str = ""
    _slopes: np.ndarray = field(init=False, repr=False)
    _c: float = field(init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        d = np.array(self.derivs, dtype=float)
        n = len(self.grid)
        if v.shape != (n,) or d.shape != (n,):
            raise ConfigurationError("profile arrays must match the grid length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(d))):
            raise DomainError(f"profile {self.name!r} has non-finite samples")
        v.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "derivs", d)
        s = _limit_slopes(self.grid.nodes, v, d)
        s.setflags(write=False)
        object.__setattr__(self, "_slopes", s)
        c = 0.0
        if self.origin is not None:
            v0, p = self.origin
            c = (v[0] - v0) / self.grid.rho0**p
        object.__setattr__(self, "_c", float(c))

    @classmethod
    def from_function(cls, grid: RadialGrid, fn: Callable, dfn: Callable, origin=None,
                      name: str = "") -> "Profile":
        x = grid.nodes
        return cls(grid, np.asarray(fn(x), dtype=float), np.asarray(dfn(x), dtype=float), origin, name)

    def kernel_data(self):
        """Arrays consumed by the jitted evaluator."""
        v0, p = self.origin if self.origin is not None else (self.values[0], 0.0)
        return (self.grid.nodes, self.values, self._slopes, float(v0), self._c, float(p))

    def evaluate(self, rho, extend_origin: bool = True):
        """Return (value, derivative) at rho (scalar or array)."""
        r = np.asarray(rho, dtype=float)
        if not np.all(np.isfinite(r)):
            raise DomainError("rho must be finite")
        lo = 0.0 if (extend_origin and self.origin is not None) else self.grid.rho0
        if np.any(r > self.grid.rho_max * (1 + 1e-14)) or np.any(r < lo) or (
                lo == 0.0 and np.any(r <= 0.0)):
            raise ExtrapolationError(
                f"rho outside [{lo:g}, {self.grid.rho_max:g}] for profile {self.name!r}")
        x, y, m, v0, c, p = self.kernel_data()
        flat = np.minimum(r.ravel(), x[-1])
        out_v = np.empty(flat.size)
        out_d = np.empty(flat.size)
        for i, q in enumerate(flat):
            out_v[i], out_d[i] = profile_eval(x, y, m, v0, c, p, q)
        if r.ndim == 0:
            return float(out_v[0]), float(out_d[0])
        return out_v.reshape(r.shape), out_d.reshape(r.shape)

    def __call__(self, rho, extend_origin: bool = True):
        return self.evaluate(rho, extend_origin)[0]

    def deriv(self, rho, extend_origin: bool = True):
        return self.evaluate(rho, extend_origin)[1]

    def replace(self, values=None, derivs=None, name=None) -> "Profile":
        return Profile(self.grid, self.values if values is None else values,
                       self.derivs if derivs is None else derivs, self.origin,
                       self.name if name is None else name)


def interpolate(p: Profile, rho):
    """Value of ``p`` at rho inside [rho0, rho_max]; raises outside."""
    return p(rho, extend_origin=False)
