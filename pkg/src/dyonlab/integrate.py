"""Adaptive Dormand-Prince 5(4) integration of scalar second-order ODEs.

The hot loop is compiled with numba and calls the frozen-profile
right-hand side directly (numba will not cache kernels that take function
arguments).  Arbitrary Python callables run an interpreted copy of the
same loop with that call rebound.
"""
from __future__ import annotations

import math
import types
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numba import njit

from .errors import ConfigurationError, DomainError, StiffnessError
from .grid import Profile, profile_eval
from .model import StateVector, _f_rhs, _h_rhs, _j_rhs

__all__ = [
    "EventSpec",
    "Trajectory",
    "FrozenRHS",
    "integrate_to_event",
    "BLOWUP_DEFAULT",
]

BLOWUP_DEFAULT = 1e6

# Dormand-Prince 5(4) tableau with Shampine's quartic dense output.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
])
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_OBS = {"value-crosses-threshold": 0, "derivative-changes-sign": 1, "blow-up-guard": 3}
_DIR = {"up": 1, "down": -1, "either": 0}

STATUS_RHO_MAX, STATUS_EVENT, STATUS_STIFF, STATUS_MAXSTEPS = 0, 1, 2, 3


@dataclass(frozen=True)
class EventSpec:
    """Terminal event.

    ``value-crosses-threshold`` watches y (or y/rho with ``over_rho``),
    ``derivative-changes-sign`` watches y' against zero and
    ``blow-up-guard`` watches |y| against ``threshold``.
    """

    kind: str
    threshold: float = 0.0
    direction: str = "either"
    over_rho: bool = False
    label: str = ""

    def __post_init__(self):
        if self.kind not in _OBS:
            raise ConfigurationError(f"unknown event kind {self.kind!r}")
        if self.direction not in _DIR:
            raise ConfigurationError(f"unknown event direction {self.direction!r}")
        if not math.isfinite(self.threshold):
            raise ConfigurationError("event threshold must be finite")
        if self.kind == "blow-up-guard" and self.threshold <= 0:
            raise ConfigurationError("blow-up guard threshold must be positive")

    @classmethod
    def blowup(cls, threshold: float = BLOWUP_DEFAULT) -> "EventSpec":
        return cls("blow-up-guard", threshold, "up", label="blow-up")

    def encode(self):
        obs = _OBS[self.kind]
        if obs == 0 and self.over_rho:
            obs = 2
        level = 0.0 if obs == 1 else self.threshold
        return obs, level, _DIR[self.direction]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Accepted steps plus samples at requested nodes.

    ``rho``/``y``/``dy`` hold every accepted step (strictly increasing).
    ``node_y``/``node_dy`` are NaN at nodes the trajectory did not reach.
    """

    rho: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    terminal: str
    event: Optional[EventSpec]
    event_index: int
    rho_hit: float
    nodes: np.ndarray
    node_y: np.ndarray
    node_dy: np.ndarray

    @property
    def samples(self):
        return [StateVector(float(r), float(a), float(b)) for r, a, b in zip(self.rho, self.y, self.dy)]

    @property
    def end(self) -> StateVector:
        return StateVector(float(self.rho[-1]), float(self.y[-1]), float(self.dy[-1]))

    @property
    def reached(self) -> int:
        """Number of leading nodes with valid samples."""
        ok = np.isfinite(self.node_y)
        return int(np.argmin(ok)) if not ok.all() else ok.size


@njit(cache=True)
def _frozen_rhs(r, y, dy, data):
    kind, prm, x, V, M, O = data
    re = r if r < x[-1] else x[-1]
    if kind == 0:
        J, _ = profile_eval(x, V[0], M[0], O[0, 0], O[0, 1], O[0, 2], re)
        h, _ = profile_eval(x, V[1], M[1], O[1, 0], O[1, 1], O[1, 2], re)
        return _f_rhs(r, y, J, h)
    F, _ = profile_eval(x, V[0], M[0], O[0, 0], O[0, 1], O[0, 2], re)
    if kind == 1:
        return _h_rhs(r, y, F, prm[0])
    return _j_rhs(r, y, F)


@njit(cache=True)
def _obs(kind, r, y, dy):
    if kind == 0:
        return y
    if kind == 1:
        return dy
    if kind == 2:
        return y / r
    return abs(y)


@njit(cache=True)
def _triggered(direction, g0, g1):
    if direction > 0:
        return g0 < 0.0 and g1 >= 0.0
    if direction < 0:
        return g0 > 0.0 and g1 <= 0.0
    return (g0 < 0.0 and g1 >= 0.0) or (g0 > 0.0 and g1 <= 0.0)


@njit(cache=True)
def _dense(y0, dy0, h, Q, theta):
    t1 = theta
    t2 = t1 * theta
    t3 = t2 * theta
    t4 = t3 * theta
    y = y0 + h * (Q[0, 0] * t1 + Q[0, 1] * t2 + Q[0, 2] * t3 + Q[0, 3] * t4)
    dy = dy0 + h * (Q[1, 0] * t1 + Q[1, 1] * t2 + Q[1, 2] * t3 + Q[1, 3] * t4)
    return y, dy


@njit(cache=True)
def _core(data, r0, y0, dy0, rmax, rtol, atol, ev_obs, ev_lvl, ev_dir, nodes, h0, max_steps,
          Cc, A, B, E, P):
    nev = ev_obs.size
    cap = 1024
    sr = np.empty(cap)
    sy = np.empty(cap)
    sd = np.empty(cap)
    sr[0] = r0
    sy[0] = y0
    sd[0] = dy0
    ns = 1
    nn = nodes.size
    ny = np.full(nn, np.nan)
    nd = np.full(nn, np.nan)
    k = 0
    while k < nn and nodes[k] < r0 * (1.0 - 1e-14):
        k += 1
    while k < nn and nodes[k] <= r0 * (1.0 + 1e-14):
        ny[k] = y0
        nd[k] = dy0
        k += 1

    K = np.zeros((7, 2))
    r = r0
    y = y0
    dy = dy0
    K[0, 0] = dy
    K[0, 1] = _frozen_rhs(r, y, dy, data)
    h = h0
    status = STATUS_RHO_MAX
    ev_idx = -1
    r_hit = np.nan
    steps = 0
    while r < rmax:
        if steps >= max_steps:
            status = STATUS_MAXSTEPS
            break
        if rmax - r <= 1e-14 * max(abs(rmax), 1.0):
            break
        last = False
        if r + h >= rmax:
            h = rmax - r
            last = True
        elif h <= 1e-14 * max(abs(r), 1.0):
            status = STATUS_STIFF
            break
        for s in range(1, 6):
            yy = y
            dd = dy
            for j in range(s):
                yy += h * A[s, j] * K[j, 0]
                dd += h * A[s, j] * K[j, 1]
            K[s, 0] = dd
            K[s, 1] = _frozen_rhs(r + Cc[s] * h, yy, dd, data)
        yn = y
        dn = dy
        for j in range(6):
            yn += h * B[j] * K[j, 0]
            dn += h * B[j] * K[j, 1]
        rn = rmax if last else r + h
        K[6, 0] = dn
        K[6, 1] = _frozen_rhs(rn, yn, dn, data)
        e0 = 0.0
        e1 = 0.0
        for j in range(7):
            e0 += h * E[j] * K[j, 0]
            e1 += h * E[j] * K[j, 1]
        s0 = atol + rtol * max(abs(y), abs(yn))
        s1 = atol + rtol * max(abs(dy), abs(dn))
        err = math.sqrt(0.5 * ((e0 / s0) ** 2 + (e1 / s1) ** 2))
        if not math.isfinite(err):
            h *= 0.2
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        steps += 1
        # dense-output coefficients for this step
        Q = np.zeros((2, 4))
        for c in range(4):
            q0 = 0.0
            q1 = 0.0
            for j in range(7):
                q0 += K[j, 0] * P[j, c]
                q1 += K[j, 1] * P[j, c]
            Q[0, c] = q0
            Q[1, c] = q1
        # events: earliest trigger inside the step
        best = 2.0
        for e in range(nev):
            g0 = _obs(ev_obs[e], r, y, dy) - ev_lvl[e]
            g1 = _obs(ev_obs[e], rn, yn, dn) - ev_lvl[e]
            if _triggered(ev_dir[e], g0, g1):
                lo = 0.0
                hi = 1.0
                for _ in range(60):
                    if (hi - lo) * h <= 1e-12 * rn:
                        break
                    mid = 0.5 * (lo + hi)
                    ym, dm = _dense(y, dy, h, Q, mid)
                    gm = _obs(ev_obs[e], r + mid * h, ym, dm) - ev_lvl[e]
                    if _triggered(ev_dir[e], g0, gm):
                        hi = mid
                    else:
                        lo = mid
                if hi < best:
                    best = hi
                    ev_idx = e
        r_end = rn
        if ev_idx >= 0:
            r_end = r + best * h
            r_hit = r_end
            status = STATUS_EVENT
        while k < nn and nodes[k] <= r_end * (1.0 + 1e-15):
            if nodes[k] >= rn:
                ny[k] = yn
                nd[k] = dn
            else:
                ny[k], nd[k] = _dense(y, dy, h, Q, (nodes[k] - r) / h)
            k += 1
        if ev_idx >= 0:
            yn, dn = _dense(y, dy, h, Q, best)
            rn = r_end
        if ns == cap:
            cap *= 2
            sr2 = np.empty(cap)
            sy2 = np.empty(cap)
            sd2 = np.empty(cap)
            sr2[:ns] = sr[:ns]
            sy2[:ns] = sy[:ns]
            sd2[:ns] = sd[:ns]
            sr = sr2
            sy = sy2
            sd = sd2
        sr[ns] = rn
        sy[ns] = yn
        sd[ns] = dn
        ns += 1
        if ev_idx >= 0:
            break
        r = rn
        y = yn
        dy = dn
        K[0, 0] = K[6, 0]
        K[0, 1] = K[6, 1]
        h *= min(10.0, 0.9 * err ** -0.2) if err > 0 else 10.0
    if status == STATUS_RHO_MAX:
        while k < nn and nodes[k] <= rmax * (1.0 + 1e-14):
            ny[k] = y
            nd[k] = dy
            k += 1
    return status, ev_idx, r_hit, sr[:ns].copy(), sy[:ns].copy(), sd[:ns].copy(), ny, nd


def _python_core(rhs):
    """Interpreted copy of the kernel whose right-hand side is ``rhs``."""
    env = dict(_core.py_func.__globals__)
    env["_frozen_rhs"] = lambda r, y, dy, _data: float(rhs(r, y, dy))
    return types.FunctionType(_core.py_func.__code__, env, "_core_python")


@dataclass(frozen=True, eq=False)
class FrozenRHS:
    """One of the three shooting equations with its frozen partner profiles.

    kind 0: f equation with frozen (J, h); kind 1: H = rho h equation with
    frozen F and parameter beta; kind 2: J equation with frozen F.
    """

    kind: int
    profiles: tuple
    beta: float = 0.0

    def __post_init__(self):
        need = 2 if self.kind == 0 else 1
        if self.kind not in (0, 1, 2) or len(self.profiles) != need:
            raise ConfigurationError("FrozenRHS: bad kind/profile combination")

    def data(self):
        ps = list(self.profiles)
        x = ps[0].grid.nodes
        n = x.size
        V = np.zeros((2, n))
        M = np.zeros((2, n))
        O = np.zeros((2, 3))
        for i, p in enumerate(ps):
            _, v, m, v0, c, pw = p.kernel_data()
            V[i] = v
            M[i] = m
            O[i] = (v0, c, pw)
        return (np.int64(self.kind), np.array([float(self.beta)]), np.ascontiguousarray(x, dtype=float), V, M, O)

    def __call__(self, rho, y, dy):
        return float(_frozen_rhs(float(rho), float(y), float(dy), self.data()))


def integrate_to_event(start: StateVector, rhs, events: Sequence[EventSpec] = (), rho_max: float = 1.0,
                       tol: float = 1e-10, nodes=None, atol: Optional[float] = None,
                       h0: Optional[float] = None, max_steps: int = 2_000_000) -> Trajectory:
    """Integrate y'' = rhs(rho, y, y') from ``start`` to ``rho_max`` or the first event.

    Parameters
    ----------
    start : StateVector
    rhs : FrozenRHS or callable(rho, y, dy) -> float
    events : sequence of EventSpec
    rho_max : float
    tol : float
        Relative local error tolerance, in [1e-13, 1e-6].
    nodes : array_like, optional
        Radii at which to sample the dense output.
    atol : float, optional
        Absolute floor of the error scale, default ``tol * 1e-12``.

    Raises
    ------
    StiffnessError
        If the step size underflows.
    """
    if not (1e-13 <= tol <= 1e-6):
        raise ConfigurationError("tol must lie in [1e-13, 1e-6]")
    if not start.rho > 0:
        raise DomainError("start.rho must be positive")
    if not (math.isfinite(start.y) and math.isfinite(start.dy)):
        raise DomainError("non-finite initial state")
    if not rho_max > start.rho:
        raise ConfigurationError("rho_max must exceed the start radius")
    ev = [e.encode() for e in events]
    ev_obs = np.array([e[0] for e in ev], dtype=np.int64)
    ev_lvl = np.array([e[1] for e in ev], dtype=float)
    ev_dir = np.array([e[2] for e in ev], dtype=np.int64)
    nodes_arr = np.ascontiguousarray(np.zeros(0) if nodes is None else np.asarray(nodes, dtype=float))
    atol = tol * 1e-12 if atol is None else float(atol)
    h0 = 0.01 * start.rho if h0 is None else float(h0)
    args = (float(start.rho), float(start.y), float(start.dy), float(rho_max), float(tol), atol,
            ev_obs, ev_lvl, ev_dir, nodes_arr, h0, int(max_steps), _C, _A, _B, _E, _P)
    if isinstance(rhs, FrozenRHS):
        out = _core(rhs.data(), *args)
    elif callable(rhs):
        out = _python_core(rhs)(None, *args)
    else:
        raise ConfigurationError("rhs must be a FrozenRHS or a callable")
    status, ev_idx, r_hit, sr, sy, sd, ny, nd = out
    if status == STATUS_STIFF:
        raise StiffnessError(f"step size underflow at rho={sr[-1]:.6g}")
    if status == STATUS_MAXSTEPS:
        raise StiffnessError(f"step budget exhausted at rho={sr[-1]:.6g}")
    if status == STATUS_EVENT:
        e = events[ev_idx]
        return Trajectory(sr, sy, sd, "event", e, int(ev_idx), float(r_hit), nodes_arr, ny, nd)
    return Trajectory(sr, sy, sd, "reached-rho-max", None, -1, float("nan"), nodes_arr, ny, nd)
