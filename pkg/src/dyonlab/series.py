"""Regular solutions at the singular origin by Picard iteration.

Each shifted unknown u in {f, H, J} satisfies u'' - 2u/rho^2 = S[u], whose
homogeneous solutions are rho^2 and 1/rho.  The regular solution with
u ~ lead * rho^2 is the fixed point of

    u(rho) = lead rho^2 + (1/3) int_0^rho (rho^2/r - r^2/rho) S[u](r) dr.

The kernel is split as rho^2 I1(rho)/3 - I2(rho)/(3 rho) with
I1 = int S/r and I2 = int r^2 S, which avoids any cancellation near
r = rho.  The cumulative integrals use Simpson's rule on a uniform mesh.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import ConfigurationError, DomainError, SeriesError
from .grid import Profile

__all__ = ["OriginExpansion", "f_series", "h_series", "j_series", "valid_radius", "picard"]

PICARD_TOL = 1e-12
MAX_SWEEPS = 50
MESH = 64

Frozen = Union[Profile, Callable, float, None]


def valid_radius(leading: float) -> float:
    """Radius up to which the origin iteration is trusted."""
    return min(0.05, 0.5 / math.sqrt(1.0 + abs(leading)))


def _sample(frozen: Frozen, r: np.ndarray) -> np.ndarray:
    if frozen is None:
        return np.zeros_like(r)
    if isinstance(frozen, Profile):
        return np.asarray(frozen(r), dtype=float)
    if callable(frozen):
        return np.broadcast_to(np.asarray(frozen(r), dtype=float), r.shape).copy()
    return np.full_like(r, float(frozen))


def _source(kind: str, r, u, a1, a2, beta):
    """S[u] at r > 0.  a1/a2 are the frozen inputs (J, h) or (F, -)."""
    if kind == "F":
        J, h = a1, a2
        return (h * h - J * J / r**2) * (u + 1.0) + (3.0 * u * u + u**3) / r**2
    F = a1
    if kind == "H":
        return (2.0 * (F * F - 1.0) / r**2 + 0.5 * beta * beta * (u * u / r**2 - 1.0)) * u
    return 2.0 * u * (F * F - 1.0) / r**2


def picard(kind: str, leading: float, frozen1: Frozen, frozen2: Frozen, rho_eval: float,
           beta: float = 0.0, mesh: int = MESH, tol: float = PICARD_TOL, max_sweeps: int = MAX_SWEEPS,
           check_radius: bool = True):
    """Run the Picard iteration on [0, rho_eval].

    Returns ``(value, derivative, history)`` at ``rho_eval``; ``history``
    lists the relative sup-distance between consecutive sweeps.
    """
    if kind not in ("F", "H", "J"):
        raise ConfigurationError(f"unknown expansion kind {kind!r}")
    if not (math.isfinite(rho_eval) and rho_eval > 0):
        raise DomainError("rho_eval must be finite and positive")
    if not math.isfinite(leading):
        raise DomainError("leading coefficient must be finite")
    if check_radius and rho_eval > valid_radius(leading) * (1 + 1e-12):
        raise SeriesError(f"rho_eval={rho_eval:g} exceeds the validity radius {valid_radius(leading):g}")
    r = np.linspace(0.0, rho_eval, 2 * mesh + 1)
    rp = r[1:]
    a1 = _sample(frozen1, rp)
    a2 = _sample(frozen2, rp) if kind == "F" else None
    u = leading * r**2
    history = []
    for _ in range(max_sweeps):
        S = np.zeros_like(r)
        S[1:] = _source(kind, rp, u[1:], a1, a2, beta)
        if not np.all(np.isfinite(S)):
            raise SeriesError("non-finite source term in the origin iteration")
        g1 = np.zeros_like(r)
        g1[1:] = S[1:] / rp
        I1 = cumulative_simpson(g1, x=r, initial=0.0)
        I2 = cumulative_simpson(r * r * S, x=r, initial=0.0)
        new = leading * r**2
        new[1:] += rp**2 * I1[1:] / 3.0 - I2[1:] / (3.0 * rp)
        scale = max(np.max(np.abs(new)), np.finfo(float).tiny)
        dist = float(np.max(np.abs(new - u)) / scale)
        history.append(dist)
        u = new
        if dist <= tol:
            x = rho_eval
            du = 2.0 * leading * x + 2.0 * x * I1[-1] / 3.0 + I2[-1] / (3.0 * x * x)
            return float(u[-1]), float(du), history
    raise SeriesError(f"origin iteration did not converge in {max_sweeps} sweeps "
                      f"(last change {history[-1]:.3g}); rho_eval too large")


@dataclass(frozen=True)
class OriginExpansion:
    """Regular local solution near rho = 0.

    ``kind`` is ``"F"`` (f = F - 1), ``"H"`` (H = rho h) or ``"J"``;
    ``leading`` is the rho^2 coefficient.  Calling the object returns
    ``(value, derivative)`` of the shifted unknown.
    """

    kind: str
    leading: float
    frozen1: Frozen = field(repr=False, default=None)
    frozen2: Frozen = field(repr=False, default=None)
    beta: float = 0.0

    @property
    def valid_to(self) -> float:
        return valid_radius(self.leading)

    def __call__(self, rho: float):
        v, d, _ = picard(self.kind, self.leading, self.frozen1, self.frozen2, rho, self.beta)
        return v, d


def f_series(a: float, J: Frozen, h: Frozen, rho_eval: float):
    """(f, f') at rho_eval for the regular solution with f ~ a rho^2."""
    if a > 0:
        raise DomainError("f_series requires a <= 0")
    v, d, _ = picard("F", a, J, h, rho_eval)
    return v, d


def h_series(b: float, F: Frozen, beta: float, rho_eval: float):
    """(H, H') at rho_eval for H = rho h with H ~ b rho^2."""
    if b < 0:
        raise DomainError("h_series requires b >= 0")
    v, d, _ = picard("H", b, F, None, rho_eval, beta)
    return v, d


def j_series(c: float, F: Frozen, rho_eval: float):
    """(J, J') at rho_eval for J ~ c rho^2."""
    if c < 0:
        raise DomainError("j_series requires c >= 0")
    v, d, _ = picard("J", c, F, None, rho_eval)
    return v, d
