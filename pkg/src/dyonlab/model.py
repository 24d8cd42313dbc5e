"""Run parameters and the right-hand sides of the radial profile equations.

The three profile functions satisfy, in the dimensionless radius rho,

    F'' rho^2 = (F^2 - 1) F - (J^2 - rho^2 h^2) F
    h'' rho^2 + 2 h' rho = 2 F^2 h + (beta^2 / 2) h (h^2 - 1) rho^2
    J'' rho^2 = 2 J F^2

with F(0)=1, h(0)=0, J(0)=0 and F->0, h->1, J/rho->C at infinity.  The
solver integrates the shifted gauge function f = F - 1, the scaled Higgs
function H = rho h and J itself; all three have a regular singular point
at rho = 0 with a rho^2 leading term.

Monopole mode is the same system with J frozen at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConfigurationError, DomainError

__all__ = [
    "ModelParameters",
    "StateVector",
    "f_rhs",
    "h_rhs_Hform",
    "j_rhs",
    "residual",
    "residual_arrays",
]

MODES = ("dyon", "monopole")


@dataclass(frozen=True)
class ModelParameters:
    """Couplings of one run.

    Parameters
    ----------
    beta : float
        Dimensionless Higgs coupling, beta^2 = 2 lambda / g^2.
    bigC : float
        Asymptotic slope of J, 0 <= C < 1.
    g : float
        Gauge coupling; only enters the charges.
    mode : {"dyon", "monopole"}
        Monopole mode forces C = 0 and J identically zero.
    """

    beta: float
    bigC: float = 0.0
    g: float = 1.0
    mode: str = "dyon"
    nu: float = field(init=False)

    def __post_init__(self):
        for name in ("beta", "bigC", "g"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.beta < 0:
            raise ConfigurationError("beta must satisfy beta >= 0")
        if not 0.0 <= self.bigC < 1.0:
            raise ConfigurationError("C must satisfy 0 <= C < 1")
        if self.g <= 0:
            raise ConfigurationError("g must satisfy g > 0")
        if self.mode == "monopole" and self.bigC != 0.0:
            raise ConfigurationError("monopole mode requires C = 0")
        object.__setattr__(self, "nu", math.sqrt((1.0 - self.bigC) * (1.0 + self.bigC)))

    @property
    def monopole(self) -> bool:
        return self.mode == "monopole"

    @classmethod
    def monopole_params(cls, beta: float, g: float = 1.0) -> "ModelParameters":
        return cls(beta=beta, bigC=0.0, g=g, mode="monopole")

    def as_dict(self) -> dict:
        return {"beta": self.beta, "C": self.bigC, "g": self.g, "nu": self.nu, "mode": self.mode}


@dataclass(frozen=True)
class StateVector:
    """Point (rho, y, y') of a second-order trajectory."""

    rho: float
    y: float
    dy: float

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError("StateVector.rho must be strictly positive")


# jitted kernels shared with the integrator -------------------------------

@njit(cache=True)
def _f_rhs(rho, f, J, h):
    return 2.0 * f / rho**2 + h * h * (f + 1.0) + (f**3 + 3.0 * f * f - J * J * (f + 1.0)) / rho**2


@njit(cache=True)
def _h_rhs(rho, H, F, beta):
    return 2.0 * F * F * H / rho**2 + 0.5 * beta * beta * H * (H * H / rho**2 - 1.0)


@njit(cache=True)
def _j_rhs(rho, J, F):
    return 2.0 * J * F * F / rho**2


def _check(rho, *values):
    if not (math.isfinite(rho) and rho > 0):
        raise DomainError(f"rho must be finite and positive, got {rho!r}")
    for v in values:
        if not math.isfinite(v):
            raise DomainError(f"non-finite argument {v!r}")


def f_rhs(rho: float, f: float, J_at: float, h_at: float) -> float:
    """Second derivative of the shifted gauge function f = F - 1."""
    _check(rho, f, J_at, h_at)
    return float(_f_rhs(float(rho), float(f), float(J_at), float(h_at)))


def h_rhs_Hform(rho: float, H: float, F_at: float, beta: float) -> float:
    """Second derivative of H = rho * h."""
    _check(rho, H, F_at, beta)
    return float(_h_rhs(float(rho), float(H), float(F_at), float(beta)))


def j_rhs(rho: float, J: float, F_at: float) -> float:
    """Second derivative of the electric profile J."""
    _check(rho, J, F_at)
    return float(_j_rhs(float(rho), float(J), float(F_at)))


def _rhs_arrays(rho, F, h, dh, J, beta):
    """Second derivatives demanded by the three equations at each node."""
    r2 = rho * rho
    Fpp = ((F * F - 1.0) * F - (J * J - r2 * h * h) * F) / r2
    hpp = (2.0 * F * F * h + 0.5 * beta * beta * h * (h * h - 1.0) * r2) / r2 - 2.0 * dh / rho
    Jpp = 2.0 * J * F * F / r2
    return Fpp, hpp, Jpp


def residual_arrays(rho, F, dF, h, dh, J, dJ, beta, monopole=False):
    """Node-wise residuals of the three profile equations (rho^2 form).

    At interior node i the centred difference of the stored first
    derivatives over [rho_{i-1}, rho_{i+1}] is compared with the
    three-point Simpson average of the right-hand side over the same
    interval, then multiplied by rho_i^2.  This is fourth order and never
    differences the values twice, so integrator noise is not amplified by
    1/spacing^2.  Returns three arrays over the interior nodes; the J entry
    is zero in monopole mode.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.size < 3:
        raise ConfigurationError("residual needs a grid with at least 3 nodes")
    h0 = rho[1:-1] - rho[:-2]
    h1 = rho[2:] - rho[1:-1]
    span = h0 + h1
    w0 = (2.0 - h1 / h0) / 6.0
    w1 = span**2 / (6.0 * h0 * h1)
    w2 = (2.0 - h0 / h1) / 6.0
    r2 = rho[1:-1] ** 2
    out = []
    for d, acc in zip((dF, dh, dJ), _rhs_arrays(rho, F, h, dh, J, beta)):
        diff = (d[2:] - d[:-2]) / span
        avg = w0 * acc[:-2] + w1 * acc[1:-1] + w2 * acc[2:]
        out.append(r2 * (diff - avg))
    if monopole:
        out[2] = np.zeros_like(r2)
    return tuple(out)


def residual(solution) -> tuple:
    """Max absolute residual of each profile equation on interior nodes.

    See :func:`residual_arrays` for the discretisation.

    ``solution`` is anything exposing ``params`` and Profiles ``F``, ``h``
    and ``J`` on one grid (normally a :class:`~dyonlab.fixedpoint.DyonSolution`).
    Monopole runs report 0.0 for the J equation.
    """
    F, h, J = solution.F, solution.h, solution.J
    if not (F.grid is h.grid is J.grid or (
            np.array_equal(F.grid.nodes, h.grid.nodes) and np.array_equal(F.grid.nodes, J.grid.nodes))):
        raise ConfigurationError("profiles must share one grid")
    p = solution.params
    rF, rh, rJ = residual_arrays(F.grid.nodes, F.values, F.derivs, h.values, h.derivs,
                                 J.values, J.derivs, p.beta, p.monopole)
    return float(np.max(np.abs(rF))), float(np.max(np.abs(rh))), float(np.max(np.abs(rJ)))
