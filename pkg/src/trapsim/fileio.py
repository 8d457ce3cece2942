"""CSV and JSON file formats.

All numbers are written as decimal text (repr for floats), so values
round-trip exactly and re-runs with the same seed produce byte-identical
files. Trace files carry one row per bin: ``t_ms,counts,phase``. A missing
phase column is tolerated on read (all bins become probe bins of a single
cycle). Cycle boundaries are reconstructed from the phase sequence.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import PHASE_LOAD, PHASE_OFF, TraceRecord
from .loading import LoadingCurvePoint


class DataFormatError(ValueError):
    """Malformed input file; message carries the offending line number."""


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_trace_csv(path, trace: TraceRecord) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t_ms,counts,phase\n")
        t = trace.t_ms
        for i in range(trace.n_bins):
            fh.write(f"{_fmt(t[i])},{int(trace.counts[i])},{trace.phases[i]}\n")


def _cycles_from_phases(phases: np.ndarray) -> np.ndarray:
    """A new cycle starts where a load run begins, or where a probe/load run
    follows an off period."""
    n = len(phases)
    cycles = np.zeros(n, dtype=np.int32)
    c = 0
    for i in range(1, n):
        prev, cur = phases[i - 1], phases[i]
        if (cur == PHASE_LOAD and prev != PHASE_LOAD) or (
            prev == PHASE_OFF and cur != PHASE_OFF and cur != PHASE_LOAD
        ):
            c += 1
        cycles[i] = c
    return cycles


def read_trace_csv(path) -> TraceRecord:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header[:2] != ["t_ms", "counts"]:
            raise DataFormatError(
                f"{path}: line 1: expected header starting 't_ms,counts', got {header}"
            )
        has_phase = len(header) > 2 and header[2] == "phase"
        t, counts, phases = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise DataFormatError(f"{path}: line {lineno}: expected >= 2 fields")
            try:
                t.append(float(row[0]))
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: bad t_ms value {row[0]!r}"
                ) from None
            try:
                c = int(row[1])
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: bad counts value {row[1]!r}"
                ) from None
            if c < 0:
                raise DataFormatError(f"{path}: line {lineno}: negative counts")
            counts.append(c)
            phases.append(row[2].strip() if has_phase and len(row) > 2 else "probe")
    if len(counts) < 2:
        raise DataFormatError(f"{path}: need at least 2 data rows")
    dt = np.diff(np.asarray(t))
    if np.any(np.abs(dt - dt[0]) > 1e-6) or dt[0] <= 0:
        raise DataFormatError(f"{path}: t_ms values must be uniformly spaced")
    phases_arr = np.asarray(phases, dtype="<U5")
    try:
        return TraceRecord(
            bin_width_ms=float(dt[0]),
            counts=np.asarray(counts, dtype=np.int64),
            phases=phases_arr,
            cycle_index=_cycles_from_phases(phases_arr),
        )
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def read_loading_csv(path) -> list[LoadingCurvePoint]:
    path = Path(path)
    points = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if header[:2] != ["power_mW", "probability"]:
            raise DataFormatError(
                f"{path}: line 1: expected header 'power_mW,probability[,stderr]'"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise DataFormatError(f"{path}: line {lineno}: expected >= 2 fields")
            try:
                power = float(row[0])
                prob = float(row[1])
                stderr = None
                if len(row) > 2 and row[2].strip():
                    stderr = float(row[2])
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: bad numeric value") from None
            try:
                points.append(LoadingCurvePoint(power, prob, stderr))
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
    if not points:
        raise DataFormatError(f"{path}: no data rows")
    return points


def write_profile_csv(path, profile) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("z_um,depth_mK\n")
        for z, d in zip(profile.z_um, profile.depth_mk):
            fh.write(f"{_fmt(float(z))},{_fmt(float(d))}\n")


def write_table_csv(path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for col in columns:
                v = row.get(col)
                cells.append("" if v is None else _fmt(v))
            fh.write(",".join(cells) + "\n")


def write_provenance(path, command: str, seed: int, config: dict, extra: dict | None = None) -> None:
    doc = {
        "artifact": "trapsim",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
