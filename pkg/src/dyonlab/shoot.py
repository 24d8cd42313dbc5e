"""Single-component solvers: shooting for F and h, linear rescaling for J.

The F and (beta > 0) h problems have a one-parameter family of regular
solutions at the origin and exactly one that decays correctly at infinity.
The shooting parameter is located by classifying trajectories (they turn
back, or cross the vacuum value) and bisecting between the two classes.
Once the two bracketing trajectories separate, the exponentially unstable
outward integration is replaced by a boundary value solve of the
linearised tail (Numerov's method on the uniform part of the grid).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConfigurationError, DomainError, ShootingError
from .grid import Profile, RadialGrid
from .integrate import EventSpec, FrozenRHS, Trajectory, integrate_to_event
from .model import StateVector
from .series import f_series, h_series, j_series

__all__ = [
    "ShootingOutcome",
    "classify_f",
    "classify_h",
    "solve_f",
    "solve_h",
    "solve_j",
    "zero_profile",
    "B2_MARGIN",
]

B2_MARGIN = 1e-3
SPLIT_REL = 1e-10
BISECT_MAX = 200
SCAN_DECADES = (-6.0, 3.0)
SCAN_PER_DECADE = 4

_F_EVENTS = (
    EventSpec("derivative-changes-sign", direction="up", label="A1"),
    EventSpec("value-crosses-threshold", -1.0, "down", label="A2"),
    EventSpec.blowup(),
)
_H_EVENTS = (
    EventSpec("derivative-changes-sign", direction="down", label="B1"),
    EventSpec("value-crosses-threshold", 1.0 + B2_MARGIN, "up", over_rho=True, label="B2"),
    EventSpec.blowup(),
)


@dataclass(frozen=True, eq=False)
class ShootingOutcome:
    """Classification of one trial trajectory."""

    tag: str
    rho_event: Optional[float]
    trajectory: Trajectory = field(repr=False)
    parameter: float = float("nan")


def zero_profile(grid: RadialGrid, name: str = "J") -> Profile:
    z = np.zeros(len(grid))
    return Profile(grid, z, z, (0.0, 2.0), name)


def _tag(tr: Trajectory, small: str, large: str) -> ShootingOutcome:
    if tr.terminal == "event":
        label = tr.event.label
        tag = small if label == small else large
        return ShootingOutcome(tag, tr.rho_hit, tr)
    return ShootingOutcome("accept", None, tr)


def classify_f(a: float, J: Profile, h: Profile, tol: float = 1e-10) -> ShootingOutcome:
    """Integrate f = F - 1 from the origin series and classify it.

    A1: f' turns positive while f > -1.  A2: f reaches -1 first.
    """
    if not a < 0:
        raise DomainError("classify_f requires a < 0")
    grid = J.grid
    r0 = grid.rho0
    y0, d0 = f_series(a, J, h, r0)
    tr = integrate_to_event(StateVector(r0, y0, d0), FrozenRHS(0, (J, h)), _F_EVENTS,
                            grid.rho_max, tol, nodes=grid.nodes)
    out = _tag(tr, "A1", "A2")
    return ShootingOutcome(out.tag, out.rho_event, tr, a)


def classify_h(b: float, F: Profile, beta: float, tol: float = 1e-10) -> ShootingOutcome:
    """Integrate H = rho h from the origin series and classify it.

    B1: H' turns negative.  B2: h exceeds 1 + B2_MARGIN (or the blow-up
    guard fires) while H' > 0.
    """
    if not b > 0:
        raise DomainError("classify_h requires b > 0")
    if not beta > 0:
        raise DomainError("classify_h requires beta > 0")
    grid = F.grid
    r0 = grid.rho0
    y0, d0 = h_series(b, F, beta, r0)
    tr = integrate_to_event(StateVector(r0, y0, d0), FrozenRHS(1, (F,), beta), _H_EVENTS,
                            grid.rho_max, tol, nodes=grid.nodes)
    out = _tag(tr, "B1", "B2")
    return ShootingOutcome(out.tag, out.rho_event, tr, b)


# bracketing and bisection ------------------------------------------------

def _scan(classify, sign: float, small: str, large: str):
    lo, hi = SCAN_DECADES
    mags = np.logspace(lo, hi, int(round((hi - lo) * SCAN_PER_DECADE)) + 1)
    report = []
    prev = None
    for m in mags:
        out = classify(sign * m)
        report.append((float(sign * m), out.tag))
        if prev is not None and _side(prev, small, large) == small and _side(out, small, large) == large:
            return prev, out, report
        prev = out
    return None, None, report


def _bracket(classify, sign, small, large, guess, component):
    if guess is not None and guess * sign > 0:
        for eps in (1e-6, 1e-4, 1e-2, 1e-1, 0.5):
            lo = classify(guess * (1 - eps))
            hi = classify(guess * (1 + eps))
            if _side(lo, small, large) == small and _side(hi, small, large) == large:
                return lo, hi
    lo, hi, report = _scan(classify, sign, small, large)
    if lo is None:
        raise ShootingError(f"no {small}/{large} bracket found for {component}", component, report)
    return lo, hi


def _side(out: ShootingOutcome, small: str, large: str) -> str:
    """Bracket side of an outcome; event-free trajectories go by their end state."""
    if out.tag != "accept":
        return out.tag
    tr = out.trajectory
    if small == "B1":
        return large if tr.y[-1] / tr.rho[-1] > 1.0 else small
    return large if tr.y[-1] <= -1.0 else small


def _reach(out: ShootingOutcome) -> float:
    return out.rho_event if out.rho_event is not None else out.trajectory.rho[-1]


def _bisect(classify, lo: ShootingOutcome, hi: ShootingOutcome, small, large, rel_tol, component):
    """Shrink [lo, hi] keeping lo on the small side and hi on the large side."""
    it = 0
    while it < BISECT_MAX:
        width = abs(hi.parameter - lo.parameter)
        mid_p = 0.5 * (lo.parameter + hi.parameter)
        if width <= rel_tol * abs(mid_p) or mid_p in (lo.parameter, hi.parameter):
            break
        mid = classify(mid_p)
        # a trajectory between two others cannot leave the separatrix earlier than both;
        # a small violation means integrator noise now exceeds the bracket width
        floor = min(_reach(lo), _reach(hi))
        if _reach(mid) < floor * (1 - 1e-3) - 1e-6:
            if _reach(mid) > 0.5 * floor:
                break
            raise ShootingError(
                f"inconsistent classification in {component}: midpoint {mid_p!r} ({mid.tag}) leaves at "
                f"rho={_reach(mid):.6g} before its bracket ({floor:.6g})", component)
        if _side(mid, small, large) == small:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo, hi, it


# tail boundary value problem ----------------------------------------------

def _accumulate(d0: float, d_end: float, ypp: np.ndarray, dx: float) -> np.ndarray:
    """First derivative on a uniform mesh from y'' and both end values.

    Each interval is integrated with the cubic through the four nearest
    nodes. The leftover mismatch at the right end is quadrature error, which
    builds up where |y''| lives, so it is removed in proportion to the
    cumulative |y''|.
    """
    f = ypp
    n = f.size
    seg = np.empty(n - 1)
    seg[1:-1] = (-f[:-3] + 13.0 * f[1:-2] + 13.0 * f[2:-1] - f[3:]) / 24.0
    seg[0] = (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
    seg[-1] = (f[-4] - 5.0 * f[-3] + 19.0 * f[-2] + 9.0 * f[-1]) / 24.0
    d = d0 + dx * np.concatenate([[0.0], np.cumsum(seg)])
    weight = np.concatenate([[0.0], np.cumsum(0.5 * (np.abs(f[1:]) + np.abs(f[:-1])))])
    if weight[-1] > 0.0:
        d -= (d[-1] - d_end) * weight / weight[-1]
    return d


def _numerov(q: np.ndarray, s: np.ndarray, y_left: float, dx: float, kappa_end: float) -> np.ndarray:
    """Solve y'' = q y + s on a uniform mesh.

    ``y[0] = y_left`` is prescribed; the last node decays like exp(-kappa_end rho).
    """
    n = q.size
    c = dx * dx / 12.0
    m = n - 1  # unknowns y[1..n-1]
    ab = np.zeros((3, m))
    lower = 1.0 - c * q[:-2]
    diag = -2.0 * (1.0 + 5.0 * c * q[1:-1])
    upper = 1.0 - c * q[2:]
    rhs = np.zeros(m)
    rhs[:-1] = c * (s[2:] + 10.0 * s[1:-1] + s[:-2])
    rhs[0] -= lower[0] * y_left
    ab[1, :-1] = diag
    ab[0, 1:] = upper
    ab[2, :-2] = lower[1:]
    ab[1, -1] = 1.0
    ab[2, -2] = -math.exp(-kappa_end * dx)
    return np.concatenate([[y_left], solve_banded((1, 1), ab, rhs)])


def _split_index(lo: Trajectory, hi: Trajectory, ref: np.ndarray) -> int:
    """Last node at which the two bracket trajectories still agree."""
    ok = np.isfinite(lo.node_y) & np.isfinite(hi.node_y)
    agree = ok & (np.abs(lo.node_y - hi.node_y) <= SPLIT_REL * np.abs(ref))
    bad = np.flatnonzero(~agree)
    return (bad[0] - 1) if bad.size else len(ref) - 1


def _tail_start(grid: RadialGrid, s: int, component: str) -> int:
    first_uniform = grid.n_geo
    if s < first_uniform + 1:
        raise ShootingError(f"{component} trajectories separate at rho={grid.nodes[max(s, 0)]:.4g}, "
                            "inside the geometric part of the grid", component)
    if len(grid) - s < 6:
        return -1
    return s


def _f_tail(F0: float, rho, Jv, hv, dx):
    """Tail of F by Numerov with the cubic term lagged."""
    Fprev = None
    for _ in range(50):
        F2 = 0.0 if Fprev is None else Fprev**2
        q = hv**2 - (1.0 + Jv**2 - F2) / rho**2
        kappa = math.sqrt(max(q[-1], 1e-12))
        F = _numerov(q, np.zeros_like(q), F0, dx, kappa)
        if Fprev is not None and np.max(np.abs(F - Fprev)) <= 1e-15 * max(np.max(np.abs(F)), 1e-300):
            break
        Fprev = F
    return F, (hv**2 - (1.0 + Jv**2 - F * F) / rho**2) * F, -kappa * F[-1]


def _v_tail(v0: float, rho, Fv, beta, nu, dx):
    """Tail of v = rho (1 - h) by Numerov with the nonlinear factor lagged."""
    vprev = None
    for _ in range(50):
        fac = 1.0 if vprev is None else (1.0 - vprev / rho) * (1.0 - 0.5 * vprev / rho)
        q = beta**2 * fac + 2.0 * Fv**2 / rho**2
        s = -2.0 * Fv**2 / rho
        kappa = min(beta, 2.0 * nu)
        v = _numerov(q, s, v0, dx, kappa)
        if vprev is not None and np.max(np.abs(v - vprev)) <= 1e-15 * max(np.max(np.abs(v)), 1e-300):
            break
        vprev = v
    fac = (1.0 - v / rho) * (1.0 - 0.5 * v / rho)
    return v, (beta**2 * fac + 2.0 * Fv**2 / rho**2) * v - 2.0 * Fv**2 / rho, -kappa * v[-1]


def _spliced(grid: RadialGrid, lo: ShootingOutcome, hi: ShootingOutcome, mid: Trajectory, ref_kind: str):
    """Node values/derivatives of the unknown (f or H) and the splice index (-1 if none)."""
    y = mid.node_y.copy()
    d = mid.node_dy.copy()
    rho = grid.nodes
    if ref_kind == "f":
        ref = 1.0 + mid.node_y
    else:
        ref = rho - mid.node_y
    ref = np.where(np.isfinite(ref), ref, 0.0)
    s = _split_index(lo.trajectory, hi.trajectory, ref)
    reach = mid.reached
    s = min(s, reach - 1)
    return y, d, s


def solve_f(J: Profile, h: Profile, bisect_tol: float = 1e-12, tol: float = 1e-10,
            guess: Optional[float] = None):
    """Decaying F for frozen (J, h).

    Returns ``(F, a_star, info)`` where ``info`` records the bisection.
    """
    grid = J.grid
    if h.grid is not grid and not np.array_equal(h.grid.nodes, grid.nodes):
        raise ConfigurationError("J and h must share a grid")
    classify = lambda a: classify_f(a, J, h, tol)  # noqa: E731
    lo, hi = _bracket(classify, -1.0, "A1", "A2", guess, "F")
    lo, hi, iters = _bisect(classify, lo, hi, "A1", "A2", bisect_tol, "F")
    a_star = 0.5 * (lo.parameter + hi.parameter)
    mid = classify(a_star).trajectory
    f, df, s = _spliced(grid, lo, hi, mid, "f")
    F = 1.0 + f
    dF = df
    rho = grid.nodes
    if s >= 0:
        s = _tail_start(grid, s, "F")
        if s >= 0:
            dx = grid.spacing
            Ft, Fpp, d_end = _f_tail(float(F[s]), rho[s:], J.values[s:], h.values[s:], dx)
            F[s:] = Ft
            dF[s:] = _accumulate(float(dF[s]), d_end, Fpp, dx)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(dF))):
        raise ShootingError("F trajectory did not cover the grid", "F")
    info = {"a_star": a_star, "bracket": (lo.parameter, hi.parameter), "iterations": iters,
            "splice_rho": float(rho[s]) if s >= 0 else None}
    return Profile(grid, F, dF, (1.0, 2.0), "F"), a_star, info


def solve_h(F: Profile, beta: float, bisect_tol: float = 1e-12, tol: float = 1e-10,
            guess: Optional[float] = None, trial_b: float = 1.0, nu: float = 1.0):
    """Higgs profile h for frozen F.

    For beta > 0 the parameter b is found by shooting.  For beta = 0 the
    equation is linear in h: one trajectory with ``trial_b`` is rescaled so
    that (rho h)' = 1 at the outer radius, i.e. h -> 1 at infinity.
    ``nu`` sets the decay rate of the F-driven part of the tail.
    Returns ``(h, b_star, info)``.
    """
    grid = F.grid
    rho = grid.nodes
    if beta < 0:
        raise DomainError("beta must be non-negative")
    if beta == 0.0:
        y0, d0 = h_series(trial_b, F, 0.0, grid.rho0)
        tr = integrate_to_event(StateVector(grid.rho0, y0, d0), FrozenRHS(1, (F,), 0.0), (),
                                grid.rho_max, tol, nodes=rho)
        scale = 1.0 / tr.node_dy[-1]
        H = tr.node_y * scale
        dH = tr.node_dy * scale
        b_star = trial_b * scale
        info = {"b_star": b_star, "iterations": 0, "splice_rho": None, "trial_b": trial_b}
    else:
        classify = lambda b: classify_h(b, F, beta, tol)  # noqa: E731
        lo, hi = _bracket(classify, 1.0, "B1", "B2", guess, "h")
        lo, hi, iters = _bisect(classify, lo, hi, "B1", "B2", bisect_tol, "h")
        b_star = 0.5 * (lo.parameter + hi.parameter)
        mid = classify(b_star).trajectory
        H, dH, s = _spliced(grid, lo, hi, mid, "H")
        if s >= 0:
            s = _tail_start(grid, s, "h")
            if s >= 0:
                dx = grid.spacing
                v, vpp, d_end = _v_tail(float(rho[s] - H[s]), rho[s:], F.values[s:], beta, nu, dx)
                H[s:] = rho[s:] - v
                dH[s:] = 1.0 - _accumulate(1.0 - float(dH[s]), d_end, vpp, dx)
        info = {"b_star": b_star, "bracket": (lo.parameter, hi.parameter), "iterations": iters,
                "splice_rho": float(rho[s]) if s >= 0 else None}
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(dH))):
        raise ShootingError("h trajectory did not cover the grid", "h")
    h = H / rho
    dh = (dH - h) / rho
    if beta > 0 and h[-1] < 1.0 - 1e-4:
        warnings.warn(f"h(rho_max)={h[-1]:.6g} is more than 1e-4 below 1; enlarge rho_max", RuntimeWarning)
    return Profile(grid, h, dh, (0.0, 1.0), "h"), b_star, info


def solve_j(F: Profile, bigC: float, tol: float = 1e-10, trial_c: float = 1.0):
    """Electric profile J for frozen F with J'(rho_max) = C.

    The J equation is linear: one trajectory with ``trial_c`` is rescaled.
    Returns ``(J, c_star, info)``.
    """
    if not 0.0 <= bigC < 1.0:
        raise ConfigurationError("C must satisfy 0 <= C < 1")
    grid = F.grid
    if bigC == 0.0:
        return zero_profile(grid), 0.0, {"c_star": 0.0, "slope": None}
    y0, d0 = j_series(trial_c, F, grid.rho0)
    tr = integrate_to_event(StateVector(grid.rho0, y0, d0), FrozenRHS(2, (F,)), (), grid.rho_max, tol,
                            nodes=grid.nodes)
    slope = tr.node_dy[-1]
    if not slope > 0:
        raise ShootingError(f"degenerate J trajectory (terminal slope {slope!r})", "J")
    scale = bigC / slope
    J = Profile(grid, tr.node_y * scale, tr.node_dy * scale, (0.0, 2.0), "J")
    c_star = trial_c * scale
    return J, c_star, {"c_star": c_star, "slope": slope / trial_c}
