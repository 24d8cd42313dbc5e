"""Outer iteration (J, h) -> (J~, h~) and the assembled dyon solution.

One sweep solves for F with (J, h) frozen, then for h~ and J~ with that F
frozen.  Since h~ and J~ both depend only on F, Jacobi and Gauss-Seidel
orderings coincide.  Sweeps are under-relaxed and stop when the weighted
sup-norm of T(x) - x drops below ``fp_tol``.
"""
from __future__ import annotations

import math
import os
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ConvergenceError, DomainError, ShootingError
from .grid import Profile, RadialGrid, default_grid
from .model import ModelParameters
from .shoot import solve_f, solve_h, solve_j, zero_profile

__all__ = [
    "SolveOptions",
    "IterationState",
    "DyonSolution",
    "weighted_norm",
    "seed_state",
    "apply_T",
    "solve_dyon",
    "tail_value",
    "default_rho_max",
    "SEED_ENV",
]

SEED_ENV = "DYONLAB_SEED_PROFILE"
K_DEFAULT = 0.5


def default_rho_max(params: ModelParameters) -> float:
    """Outer radius: 25/nu, or 2000/nu at beta = 0 where 1 - h decays only like 1/rho."""
    return (2000.0 if params.beta == 0.0 else 25.0) / params.nu


@dataclass(frozen=True)
class SolveOptions:
    """Numerical controls of :func:`solve_dyon`."""

    rho0: float = 1e-4
    rho_max: Optional[float] = None
    spacing: float = 0.03
    n_geo: Optional[int] = None
    fp_tol: float = 1e-8
    ode_tol: float = 1e-10
    bisect_tol: float = 1e-12
    relax: float = 0.7
    max_sweeps: int = 50
    k: float = K_DEFAULT
    seed: str = "tanh"
    acceptance: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.relax <= 1.0:
            raise ConfigurationError("relax must lie in (0, 1]")
        if not 0.0 < self.k < 1.0:
            raise ConfigurationError("k must lie in (0, 1)")
        if self.fp_tol <= 0 or self.bisect_tol <= 0:
            raise ConfigurationError("tolerances must be positive")
        if not (1e-13 <= self.ode_tol <= 1e-6):
            raise ConfigurationError("ode_tol must lie in [1e-13, 1e-6]")
        if self.max_sweeps < 1:
            raise ConfigurationError("max_sweeps must be at least 1")
        if self.seed not in ("tanh", "rational"):
            raise ConfigurationError("seed must be 'tanh' or 'rational'")

    def grid(self, params: ModelParameters) -> RadialGrid:
        rho_max = default_rho_max(params) if self.rho_max is None else self.rho_max
        return default_grid(self.rho0, rho_max, self.spacing, self.n_geo)

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class IterationState:
    """Current iterate of the outer loop."""

    J: Profile
    h: Profile
    F: Optional[Profile] = None
    iter: int = 0
    delta_norm: float = float("inf")
    history: tuple = ()
    a_star: Optional[float] = None
    b_star: Optional[float] = None
    c_star: Optional[float] = None

    def __post_init__(self):
        if not (self.delta_norm >= 0):
            raise DomainError("delta_norm must be non-negative")


@dataclass(frozen=True, eq=False)
class DyonSolution:
    """Converged profiles with their diagnostics."""

    params: ModelParameters
    F: Profile
    h: Profile
    J: Profile
    a_star: float
    b_star: float
    c_star: float
    residuals: tuple = (float("nan"),) * 3
    charges: tuple = (float("nan"), float("nan"))
    decay_fits: tuple = (float("nan"),) * 3
    iterations: int = 0
    history: tuple = ()
    options: SolveOptions = field(default_factory=SolveOptions)
    wall_time: float = float("nan")
    accepted: bool = True

    @property
    def grid(self) -> RadialGrid:
        return self.F.grid


def weighted_norm(J, h, k: float = K_DEFAULT) -> float:
    """sup over nodes of rho^(-1-k)(1+rho^k)|J| + rho^(-k)(1+rho^k)|h|.

    ``J`` and ``h`` are Profiles on one grid (or ``(rho, values)`` pairs).
    """
    if not 0.0 < k < 1.0:
        raise ConfigurationError("k must lie in (0, 1)")
    rho, Jv = (J.grid.nodes, J.values) if isinstance(J, Profile) else J
    _, hv = (h.grid.nodes, h.values) if isinstance(h, Profile) else h
    w = 1.0 + rho**k
    return float(np.max(rho ** (-1.0 - k) * w * np.abs(Jv) + rho ** (-k) * w * np.abs(hv)))


def _seed_from_csv(path: str, grid: RadialGrid, params: ModelParameters):
    from .io import read_profile_csv

    table = read_profile_csv(path)
    r = table["rho"]
    x = grid.nodes
    h = np.interp(x, r, table["h"])
    dh = np.interp(x, r, table["dh"])
    J = np.interp(x, r, table["J"])
    dJ = np.interp(x, r, table["dJ"])
    beyond = x > r[-1]
    J[beyond] = table["J"][-1] + params.bigC * (x[beyond] - r[-1])
    dJ[beyond] = params.bigC
    return h, dh, J, dJ


def seed_state(params: ModelParameters, grid: RadialGrid, seed: str = "tanh",
               path: Optional[str] = None) -> IterationState:
    """Initial (J, h): (C rho tanh rho, tanh rho) or (C rho^2/(1+rho), rho/(1+rho))."""
    x = grid.nodes
    C = params.bigC
    if path:
        h, dh, J, dJ = _seed_from_csv(path, grid, params)
    elif seed == "tanh":
        t = np.tanh(x)
        h, dh = t, 1.0 - t * t
        J, dJ = C * x * t, C * (t + x * (1.0 - t * t))
    elif seed == "rational":
        h, dh = x / (1.0 + x), 1.0 / (1.0 + x) ** 2
        J, dJ = C * x * x / (1.0 + x), C * (x * x + 2.0 * x) / (1.0 + x) ** 2
    else:
        raise ConfigurationError(f"unknown seed {seed!r}")
    hp = Profile(grid, h, dh, (0.0, 1.0), "h")
    Jp = zero_profile(grid) if params.monopole else Profile(grid, J, dJ, (0.0, 2.0), "J")
    return IterationState(J=Jp, h=hp)


def apply_T(state: IterationState, params: ModelParameters, opts: Optional[SolveOptions] = None):
    """One unrelaxed sweep.  Returns ``(T_state, F)`` where ``T_state`` holds (J~, h~)."""
    opts = opts or SolveOptions()
    try:
        F, a_star, _ = solve_f(state.J, state.h, opts.bisect_tol, opts.ode_tol, guess=state.a_star)
    except ShootingError as exc:
        exc.component = "F"
        raise
    h_new, b_star, _ = solve_h(F, params.beta, opts.bisect_tol, opts.ode_tol, guess=state.b_star,
                               nu=params.nu)
    if params.monopole:
        J_new, c_star = zero_profile(F.grid), 0.0
    else:
        J_new, c_star, _ = solve_j(F, params.bigC, opts.ode_tol)
    delta = weighted_norm(
        (F.grid.nodes, J_new.values - state.J.values), (F.grid.nodes, h_new.values - state.h.values), opts.k)
    entry = (state.iter + 1, delta, a_star, b_star, c_star)
    new = IterationState(J=J_new, h=h_new, F=F, iter=state.iter + 1, delta_norm=delta,
                         history=state.history + (entry,), a_star=a_star, b_star=b_star, c_star=c_star)
    return new, F


def _relax(old: Profile, new: Profile, w: float) -> Profile:
    return new.replace(values=(1 - w) * old.values + w * new.values,
                       derivs=(1 - w) * old.derivs + w * new.derivs)


def solve_dyon(params: ModelParameters, opts: Optional[SolveOptions] = None,
               seed_path: Optional[str] = None) -> DyonSolution:
    """Iterate the outer map to its fixed point and assemble diagnostics.

    The seed CSV defaults to ``$DYONLAB_SEED_PROFILE`` when set.

    Raises
    ------
    ConvergenceError
        If ``delta_norm`` stays above ``fp_tol`` after ``max_sweeps`` sweeps.
    """
    from .model import residual
    from .observables import electric_charge_flux, magnetic_charge
    from .verify import decay_fits

    opts = opts or SolveOptions()
    t0 = time.perf_counter()
    grid = opts.grid(params)
    seed_path = seed_path if seed_path is not None else os.environ.get(SEED_ENV) or None
    state = seed_state(params, grid, opts.seed, seed_path)
    w = opts.relax
    last = None
    for _ in range(opts.max_sweeps):
        try:
            T, F = apply_T(state, params, opts)
        except ShootingError as exc:
            raise ConvergenceError(f"sweep {state.iter + 1} failed in component {exc.component}: {exc}",
                                   state.history, exc.component) from exc
        last = (T, F)
        if not math.isfinite(T.delta_norm):
            raise ConvergenceError("non-finite update", T.history)
        if T.delta_norm < opts.fp_tol:
            break
        state = replace(T, J=_relax(state.J, T.J, w), h=_relax(state.h, T.h, w))
    T, F = last
    if T.delta_norm >= opts.fp_tol:
        raise ConvergenceError(
            f"no convergence in {opts.max_sweeps} sweeps (last delta {T.delta_norm:.3g})", T.history)
    sol = DyonSolution(params=params, F=F, h=T.h, J=T.J, a_star=T.a_star, b_star=T.b_star,
                       c_star=T.c_star, iterations=T.iter, history=T.history, options=opts)
    res = residual(sol)
    charges = (magnetic_charge(sol), electric_charge_flux(sol))
    fits = decay_fits(sol)
    accepted = max(res) <= opts.acceptance
    if not accepted:
        warnings.warn(f"residuals {res} exceed acceptance {opts.acceptance:g}", RuntimeWarning)
    return replace(sol, residuals=res, charges=charges, decay_fits=fits,
                   wall_time=time.perf_counter() - t0, accepted=accepted)


def tail_rate_h(params: ModelParameters) -> float:
    """Exponential rate of 1 - h for beta > 0."""
    return min(params.beta, 2.0 * params.nu)


def tail_value(component: str, solution: DyonSolution, rho):
    """Asymptotic model of a profile beyond the outer radius, matched at rho_max.

    F ~ A exp(-nu rho); h ~ 1 - A exp(-min(beta, 2 nu) rho) (beta > 0) or
    1 - A/rho (beta = 0); J ~ C rho - D.
    """
    R = solution.grid.rho_max
    r = np.asarray(rho, dtype=float)
    if np.any(r < R):
        raise DomainError("tail_value is defined only for rho >= rho_max")
    p = solution.params
    if component == "F":
        A = solution.F.values[-1]
        out = A * np.exp(-p.nu * (r - R))
    elif component == "h":
        A = 1.0 - solution.h.values[-1]
        if p.beta > 0:
            out = 1.0 - A * np.exp(-tail_rate_h(p) * (r - R))
        else:
            out = 1.0 - A * R / r
    elif component == "J":
        D = p.bigC * R - solution.J.values[-1]
        out = p.bigC * r - D
    else:
        raise ConfigurationError(f"unknown component {component!r}")
    return float(out) if np.ndim(out) == 0 else out


def tail_constants(solution: DyonSolution) -> dict:
    """Matching data of the tail models: values at rho_max and the offset D of J."""
    p = solution.params
    R = solution.grid.rho_max
    return {"rho_max": R, "F_R": float(solution.F.values[-1]), "one_minus_h_R": float(1.0 - solution.h.values[-1]),
            "D": float(p.bigC * R - solution.J.values[-1])}
