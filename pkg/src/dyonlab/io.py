"""Profile CSV files, run manifests and plot-data emission."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from . import __version__
from .errors import ConfigurationError
from .grid import Profile, grid_from_nodes

__all__ = [
    "CSV_COLUMNS",
    "MANIFEST_VERSION",
    "RunManifest",
    "write_profile_csv",
    "read_profile_csv",
    "profiles_from_table",
    "input_hash",
    "write_plot_data",
    "dump_json",
]

CSV_COLUMNS = ("rho", "F", "dF", "h", "dh", "J", "dJ")
MANIFEST_VERSION = 1
ORIGIN_LAWS = {"F": (1.0, 2.0), "h": (0.0, 1.0), "J": (0.0, 2.0)}


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_profile_csv(path: str, F: Profile, h: Profile, J: Profile) -> None:
    """One row per node with header ``rho,F,dF,h,dh,J,dJ``; 17 significant digits."""
    x = F.grid.nodes
    cols = (x, F.values, F.derivs, h.values, h.derivs, J.values, J.derivs)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_profile_csv(path: str) -> dict:
    """Parse a profile CSV into a dict of float arrays keyed by column name.

    Raises
    ------
    ConfigurationError
        On a missing or wrong header, a short row, a non-numeric or
        non-finite field, or non-increasing radii; the message names the line.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ConfigurationError(f"{path}: empty file")
        if tuple(c.strip() for c in header) != CSV_COLUMNS:
            raise ConfigurationError(f"{path}:1: header must be {','.join(CSV_COLUMNS)}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise ConfigurationError(f"{path}:{line}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{line}: {exc}") from None
            if not all(math.isfinite(v) for v in vals):
                raise ConfigurationError(f"{path}:{line}: non-finite value")
            if rows and vals[0] <= rows[-1][0]:
                raise ConfigurationError(f"{path}:{line}: rho must be strictly increasing")
            rows.append(vals)
    if len(rows) < 3:
        raise ConfigurationError(f"{path}: need at least three data rows")
    if rows[0][0] <= 0.0:
        raise ConfigurationError(f"{path}:2: rho must be positive")
    data = np.array(rows)
    return {name: data[:, i].copy() for i, name in enumerate(CSV_COLUMNS)}


def profiles_from_table(table: dict):
    """(F, h, J) Profiles on the grid formed by the ``rho`` column."""
    grid = grid_from_nodes(table["rho"])
    return tuple(Profile(grid, table[n], table["d" + n], ORIGIN_LAWS[n], n) for n in ("F", "h", "J"))


def input_hash(payload: dict, seed_path: Optional[str] = None) -> str:
    """SHA-256 of the canonical JSON of the run inputs plus any seed file bytes."""
    h = hashlib.sha256(json.dumps(payload, sort_keys=True).encode())
    if seed_path:
        with open(seed_path, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, tuples become lists."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to identify and reproduce one solve."""

    params: dict
    grid: dict
    tolerances: dict
    a_star: Optional[float]
    b_star: Optional[float]
    c_star: Optional[float]
    iterations: int
    residuals: list
    charges: dict
    decay_fits: dict
    wall_time: float
    tool_version: str
    input_hash: str
    accepted: bool
    oracle_supnorm: Optional[float] = None
    version: int = MANIFEST_VERSION

    @classmethod
    def from_solution(cls, sol, seed_path: Optional[str] = None,
                      oracle_supnorm: Optional[float] = None) -> "RunManifest":
        g = sol.grid
        params = sol.params.as_dict()
        tolerances = sol.options.as_dict()
        return cls(
            params=params,
            grid={"rho0": g.rho0, "rho_max": g.rho_max, "n_geo": g.n_geo, "n_uni": g.n_uni,
                  "n_nodes": len(g), "spacing": g.spacing},
            tolerances=tolerances,
            a_star=sol.a_star, b_star=sol.b_star, c_star=sol.c_star,
            iterations=sol.iterations,
            residuals=list(sol.residuals),
            charges={"q_m": sol.charges[0], "q_e": sol.charges[1]},
            decay_fits=dict(zip(("F", "one_minus_h", "Jpp"), sol.decay_fits)),
            wall_time=sol.wall_time,
            tool_version=__version__,
            input_hash=input_hash({"params": params, "options": tolerances}, seed_path),
            accepted=bool(sol.accepted),
            oracle_supnorm=oracle_supnorm,
        )

    def as_dict(self) -> dict:
        return _clean(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        names = {f.name for f in fields(cls)}
        if data.get("version") != MANIFEST_VERSION:
            raise ConfigurationError(f"unsupported manifest version {data.get('version')!r}")
        missing = names - set(data) - {"oracle_supnorm"}
        extra = set(data) - names
        if missing or extra:
            raise ConfigurationError(f"manifest keys: missing {sorted(missing)}, unexpected {sorted(extra)}")
        return cls(**data)

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def read(cls, path: str) -> "RunManifest":
        with open(path) as fh:
            return cls.from_json(fh.read())


def write_plot_data(directory: str, sol) -> list:
    """Two-column ``rho value`` files per component plus a log10 tail table.

    Returns the written paths.
    """
    from .verify import jpp_profile

    os.makedirs(directory, exist_ok=True)
    x = sol.grid.nodes
    out = []
    for name, prof in (("F", sol.F), ("h", sol.h), ("J", sol.J)):
        path = os.path.join(directory, f"{name}.dat")
        np.savetxt(path, np.column_stack([x, prof.values]), fmt="%.17g", header=f"rho {name}")
        out.append(path)
    with np.errstate(divide="ignore"):
        tail = np.column_stack([
            x,
            np.log10(np.abs(sol.F.values)),
            np.log10(np.abs(1.0 - sol.h.values)),
            np.log10(np.abs(jpp_profile(sol).values)),
        ])
    tail[~np.isfinite(tail)] = np.nan
    path = os.path.join(directory, "tail.dat")
    np.savetxt(path, tail, fmt="%.17g", header="rho log10_F log10_one_minus_h log10_Jpp")
    out.append(path)
    return out
