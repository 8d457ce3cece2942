"""Batch evaluation of trap and loading quantities over a parameter grid.

Each grid point is evaluated independently: analytic outputs exactly,
stochastic outputs through the cycle simulator with a seed derived from
(master seed, parameter name, grid value). Deriving from the value rather
than the row position keeps a split grid equivalent to the full one when
the pieces are concatenated.

A failed point does not abort the sweep; its row carries the error text and
empty output cells. TRAPSIM_THREADS > 1 evaluates points concurrently
(points share no mutable state); the output row order is always grid order.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import analysis, potential
from .config import DEFAULTS, dynamics_from, kappa_from, trap_from
from .dynamics import concat_traces, simulate_cycles

# occupancy probability columns reported per point
_MAX_OCC_STATES = 4


def _occ_columns() -> list[str]:
    return [f"occ_p{i}" for i in range(_MAX_OCC_STATES)]


OUTPUT_COLUMNS: dict[str, list[str]] = {
    "trap_depth": ["trap_depth_mk"],
    "enhancement": ["enhancement_exact"],  # alias for the exact ratio
    "enhancement_exact": ["enhancement_exact"],
    "enhancement_approx": ["enhancement_approx"],
    "kappa": ["kappa"],
    "site_count": ["site_count"],
    "stark_shift_mhz": ["stark_shift_mhz"],
    "occupancy": _occ_columns(),
    "lifetime": ["lifetime_ms"],
}


@dataclass(frozen=True)
class SweepSpec:
    """One swept config key, its grid, and the outputs wanted per point."""

    parameter: str
    values: tuple[float, ...]
    outputs: tuple[str, ...]
    config: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.parameter not in DEFAULTS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if len(self.values) == 0:
            raise ValueError("sweep grid is empty")
        diffs = np.diff(np.asarray(self.values, dtype=float))
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sweep grid must be strictly monotone")
        unknown = set(self.outputs) - set(OUTPUT_COLUMNS)
        if unknown:
            raise ValueError(f"unknown sweep outputs: {sorted(unknown)}")
        if not self.outputs:
            raise ValueError("no sweep outputs requested")


@dataclass
class SweepResult:
    parameter: str
    columns: list[str]
    rows: list[dict]
    provenance: dict


def point_seed(master_seed: int, parameter: str, value: float) -> int:
    """Stable per-point seed from the master seed, parameter name and value."""
    text = f"{master_seed}:{parameter}:{repr(float(value))}"
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _simulated_quantities(cfg: dict, seed: int) -> dict:
    params = dynamics_from(cfg)
    traces = simulate_cycles(
        params,
        n_cycles=cfg["simulate.n_cycles"],
        seed=seed,
        bin_width_ms=cfg["simulate.bin_width_ms"],
        mot_seconds=cfg["simulate.mot_seconds"],
        probe_seconds=cfg["simulate.probe_seconds"],
        off_seconds=cfg["simulate.off_seconds"],
    )
    n_comp = cfg["analyze.n_components"] or "auto"
    report = analysis.analyze_trace(
        concat_traces(traces), model=cfg["analyze.model"], n_components=n_comp
    )
    out = {}
    weights = report["weights"]
    for i in range(_MAX_OCC_STATES):
        out[f"occ_p{i}"] = float(weights[i]) if i < len(weights) else 0.0
    out["lifetime_ms"] = report["lifetime_ms"]
    return out


def _evaluate_point(spec: SweepSpec, value: float, master_seed: int) -> dict:
    cfg = dict(spec.config)
    cfg[spec.parameter] = value
    row: dict[str, Any] = {}
    trap = trap_from(cfg)
    simulated = None
    for name in spec.outputs:
        if name == "trap_depth":
            row["trap_depth_mk"] = potential.trap_depth(trap)
        elif name in ("enhancement", "enhancement_exact"):
            row["enhancement_exact"] = potential.enhancement_ratio_exact(trap)
        elif name == "enhancement_approx":
            row["enhancement_approx"] = potential.enhancement_ratio_approx(
                cfg["primary.power_mw"],
                cfg["ancillary.power_mw"],
                cfg["primary.waist_um"],
                cfg["ancillary.waist_um"],
                cfg["primary.zeta"],
                cfg["trap.zeta_applies_to_ancillary"],
            )
        elif name == "kappa":
            row["kappa"] = kappa_from(cfg)
        elif name == "site_count":
            sites = potential.find_antinodes(
                trap,
                cfg["sites.z_min_um"],
                cfg["sites.z_max_um"],
                cfg["sites.threshold_mk"],
            )
            row["site_count"] = len(sites)
        elif name == "stark_shift_mhz":
            row["stark_shift_mhz"] = potential.stark_shift(potential.trap_depth(trap))
        elif name in ("occupancy", "lifetime"):
            if simulated is None:
                simulated = _simulated_quantities(
                    cfg, point_seed(master_seed, spec.parameter, value)
                )
            if name == "occupancy":
                for col in _occ_columns():
                    row[col] = simulated[col]
            else:
                row["lifetime_ms"] = simulated["lifetime_ms"]
    return row


def run_sweep(spec: SweepSpec, seed: int) -> SweepResult:
    value_col = spec.parameter.replace(".", "_")
    columns = [value_col]
    for name in spec.outputs:
        for col in OUTPUT_COLUMNS[name]:
            if col not in columns:
                columns.append(col)
    columns.append("error")

    def one(value: float) -> dict:
        row = dict.fromkeys(columns)
        row[value_col] = value
        try:
            row.update(_evaluate_point(spec, value, seed))
        except Exception as exc:  # record, keep sweeping
            row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    workers = int(os.environ.get("TRAPSIM_THREADS", "1") or "1")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, spec.values))
    else:
        rows = [one(v) for v in spec.values]

    provenance = {
        "parameter": spec.parameter,
        "values": [float(v) for v in spec.values],
        "outputs": list(spec.outputs),
    }
    return SweepResult(
        parameter=spec.parameter, columns=columns, rows=rows, provenance=provenance
    )
