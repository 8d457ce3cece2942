"""Flat dotted-key run configuration with experiment-calibrated defaults.

Config files are JSON objects whose keys mirror the module fields
("primary.power_mw", "trap.kappa", ...). Command-line flags override file
values; unknown keys are rejected so typos cannot silently fall back to
defaults. A provenance sidecar written by any command contains the fully
resolved mapping under "config" and can itself be passed back as --config.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .beams import BeamSpec
from .dynamics import DynamicsParams
from .polarization import ancillary_overlap_vs_angle, make_elliptical
from .potential import TrapConfig, find_antinodes, trap_depth


class ConfigError(ValueError):
    pass


# calibrated setup constants: 852 nm light, metalens primary focus
# (w=1.3 um, zR=11.7 um, effective power fraction 0.33, left-handed with
# ellipticity ~0.65), objective-focused ancillary (w=2.03 um, ideal-Gaussian
# Rayleigh length), 50 ms counting bins, 3 s load / 2 s probe / 1 s off.
DEFAULTS: dict[str, Any] = {
    "primary.power_mw": 10.0,
    "primary.waist_um": 1.3,
    "primary.rayleigh_um": 11.7,
    "primary.wavelength_nm": 852.0,
    "primary.zeta": 0.33,
    "primary.amplitude": 1.0,
    "primary.ellipticity": 0.65,
    "primary.handedness": -1,
    "ancillary.power_mw": 0.0,
    "ancillary.waist_um": 2.03,
    "ancillary.rayleigh_um": math.pi * 2.03**2 / 0.852,
    "ancillary.wavelength_nm": 852.0,
    "ancillary.zeta": 1.0,
    "ancillary.amplitude": 1.0,
    "ancillary.ellipticity": 1.0,
    "ancillary.handedness": -1,
    "trap.kappa": 1.0,
    "trap.kappa_from_qwp": False,
    "trap.relative_phase_rad": 0.0,
    "trap.zeta_applies_to_ancillary": False,
    "qwp.theta_deg": 53.0,
    "qwp.theta0_deg": 8.0,
    "sites.z_min_um": -1.0,
    "sites.z_max_um": 1.0,
    "sites.threshold_mk": 0.0,
    "profile.z_min_um": -12.0,
    "profile.z_max_um": 12.0,
    "profile.n_points": 2001,
    "dynamics.load_rate_probe": 0.2,
    "dynamics.load_rate_mot": 1.0,
    "dynamics.one_body_loss_rate": 1.0,
    "dynamics.pair_loss_rate": 0.0,
    "dynamics.n_sites": 1,
    "dynamics.n_sites_from_antinodes": False,
    "dynamics.max_atoms_per_site": 1,
    "dynamics.atom_count_rate": 1000.0,
    # optional [[depth_mK, counts_per_s], ...] table; when non-empty the
    # per-atom rate is interpolated at the configured trap depth
    "dynamics.count_rate_table": [],
    "dynamics.background_count_rate": 100.0,
    "simulate.n_cycles": 10,
    "simulate.bin_width_ms": 50.0,
    "simulate.mot_seconds": 3.0,
    "simulate.probe_seconds": 2.0,
    "simulate.off_seconds": 1.0,
    "analyze.model": "poisson",
    "analyze.n_components": 0,  # 0 means automatic selection by BIC
    "sweep.parameter": "",
    "sweep.values": [],
    "sweep.outputs": ["trap_depth", "enhancement"],
    "seed": 12345,
    "out": ".",
}


def _coerce(key: str, value: Any) -> Any:
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            if isinstance(value, bool):
                return value
            if isinstance(value, str):
                if value.lower() in ("true", "1", "yes"):
                    return True
                if value.lower() in ("false", "0", "no"):
                    return False
            raise ConfigError(f"{key}: expected a boolean, got {value!r}")
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ConfigError(f"{key}: expected an integer, got {value!r}")
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, str):
            return str(value)
        if isinstance(default, list):
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{key}: expected a list, got {value!r}")
            return list(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {value!r}") from None
    return value


def resolve_config(
    file_path: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> dict[str, Any]:
    """Defaults, then config file, then overrides; unknown keys rejected.

    ``file_path`` may point at a plain config mapping or at a provenance
    sidecar (recognized by its nested "config" object), so any written
    sidecar can reproduce its run.
    """
    cfg = dict(DEFAULTS)
    if file_path is not None:
        try:
            with open(file_path) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {file_path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{file_path}: invalid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"{file_path}: top level must be an object")
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]
        for key, value in loaded.items():
            if key not in DEFAULTS:
                raise ConfigError(f"{file_path}: unknown config key {key!r}")
            cfg[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        cfg[key] = _coerce(key, value)
    return cfg


def beam_from(cfg: dict, prefix: str) -> BeamSpec:
    try:
        return BeamSpec(
            power_mw=cfg[f"{prefix}.power_mw"],
            waist_um=cfg[f"{prefix}.waist_um"],
            rayleigh_um=cfg[f"{prefix}.rayleigh_um"],
            wavelength_nm=cfg[f"{prefix}.wavelength_nm"],
            zeta=cfg[f"{prefix}.zeta"],
            amplitude=cfg[f"{prefix}.amplitude"],
            polarization=make_elliptical(
                cfg[f"{prefix}.ellipticity"], cfg[f"{prefix}.handedness"]
            ),
            direction=+1 if prefix == "primary" else -1,
        )
    except ValueError as exc:
        raise ConfigError(f"{prefix} beam: {exc}") from None


def kappa_from(cfg: dict) -> float:
    if cfg["trap.kappa_from_qwp"]:
        primary = make_elliptical(cfg["primary.ellipticity"], cfg["primary.handedness"])
        return ancillary_overlap_vs_angle(
            cfg["qwp.theta_deg"], cfg["qwp.theta0_deg"], primary
        )
    return cfg["trap.kappa"]


def trap_from(cfg: dict) -> TrapConfig:
    try:
        return TrapConfig(
            primary=beam_from(cfg, "primary"),
            ancillary=beam_from(cfg, "ancillary"),
            kappa=kappa_from(cfg),
            relative_phase_rad=cfg["trap.relative_phase_rad"],
            zeta_applies_to_ancillary=cfg["trap.zeta_applies_to_ancillary"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _rate_from_table(cfg: dict) -> float:
    """Per-atom count rate interpolated at the configured trap depth."""
    table = cfg["dynamics.count_rate_table"]
    if not table:
        return cfg["dynamics.atom_count_rate"]
    try:
        depths = np.array([float(row[0]) for row in table])
        rates = np.array([float(row[1]) for row in table])
    except (TypeError, ValueError, IndexError):
        raise ConfigError(
            "dynamics.count_rate_table must be [[depth_mK, counts_per_s], ...]"
        ) from None
    if len(depths) < 1 or np.any(np.diff(depths) <= 0):
        raise ConfigError("dynamics.count_rate_table depths must be strictly increasing")
    return float(np.interp(trap_depth(trap_from(cfg)), depths, rates))


def dynamics_from(cfg: dict) -> DynamicsParams:
    n_sites = cfg["dynamics.n_sites"]
    if cfg["dynamics.n_sites_from_antinodes"]:
        sites = find_antinodes(
            trap_from(cfg),
            cfg["sites.z_min_um"],
            cfg["sites.z_max_um"],
            cfg["sites.threshold_mk"],
        )
        n_sites = max(1, len(sites))
    try:
        return DynamicsParams(
            load_rate_probe=cfg["dynamics.load_rate_probe"],
            load_rate_mot=cfg["dynamics.load_rate_mot"],
            one_body_loss_rate=cfg["dynamics.one_body_loss_rate"],
            pair_loss_rate=cfg["dynamics.pair_loss_rate"],
            n_sites=n_sites,
            max_atoms_per_site=cfg["dynamics.max_atoms_per_site"],
            atom_count_rate=_rate_from_table(cfg),
            background_count_rate=cfg["dynamics.background_count_rate"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
