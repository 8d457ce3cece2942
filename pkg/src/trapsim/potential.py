"""Interference-modified trap potential of the primary + ancillary beam pair.

The two counter-propagating beams produce an on-axis power density

    rho(z) = rho_p(z) + rho_a(z) + 2 kappa sqrt(rho_p(z) rho_a(z)) cos(2 k z + phi)

where rho_p, rho_a are the single-beam envelope densities, kappa is the
polarization overlap (0 suppresses interference entirely, 1 is a full
standing wave) and phi fixes where the antinodes sit (phi = 0 pins one at
the focus). Gouy and curvature phases are deliberately left out of the
interference term; the treatment is envelope-level.

Trap depth in mK is density / RHO0_MW_PER_UM2. The depth is quoted
positive-down: larger depth means a deeper trap.

Two bookkeeping conventions exist for the effective-power fraction zeta. The
literal formulas put zeta on the primary beam only; setting
``zeta_applies_to_ancillary`` folds the same fraction into the ancillary
density, which makes zeta cancel from the enhancement ratio. Both are kept
because measured enhancement figures are only mutually consistent across the
two conventions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .beams import BeamSpec

# depth calibration: 1 mK of trap depth per RHO0 of on-axis density
RHO0_MW_PER_UM2 = 2.17
# AC-Stark shift of the D2 line per mK of depth (k_B/h in MHz/mK)
STARK_MHZ_PER_MK = 20.84


@dataclass(frozen=True)
class TrapConfig:
    """Primary + ancillary beam pair and the interference conventions."""

    primary: BeamSpec
    ancillary: BeamSpec
    kappa: float = 1.0
    relative_phase_rad: float = 0.0
    zeta_applies_to_ancillary: bool = False

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must be in [0, 1], got {self.kappa}")
        if self.primary.wavelength_nm != self.ancillary.wavelength_nm:
            raise ValueError("primary and ancillary beams must share a wavelength")


@dataclass(frozen=True, eq=False)
class PotentialProfile:
    """Axial trap depth sampled on a strictly increasing z grid."""

    z_um: np.ndarray
    depth_mk: np.ndarray

    def __post_init__(self):
        if len(self.z_um) != len(self.depth_mk):
            raise ValueError("z grid and depth arrays must have equal length")
        if np.any(np.diff(self.z_um) <= 0):
            raise ValueError("z grid must be strictly increasing")


@dataclass(frozen=True)
class TrapSite:
    """A local maximum of the depth profile, usable as a lattice site."""

    z_center_um: float
    local_depth_mk: float

    def __post_init__(self):
        if self.local_depth_mk <= 0:
            raise ValueError("a trap site needs positive local depth")


def _on_axis_densities(cfg: TrapConfig, z):
    """Envelope densities (rho_p, rho_a) on axis, honoring the zeta convention."""
    p, a = cfg.primary, cfg.ancillary
    gp = 1.0 / (1.0 + (z / p.rayleigh_um) ** 2)
    ga = 1.0 / (1.0 + (z / a.rayleigh_um) ** 2)
    rho_p = 2.0 * p.zeta * p.power_mw / (np.pi * p.waist_um**2) * gp
    zeta_anc = p.zeta if cfg.zeta_applies_to_ancillary else 1.0
    rho_a = 2.0 * zeta_anc * a.power_mw / (np.pi * a.waist_um**2) * ga
    return rho_p, rho_a


def axial_intensity(cfg: TrapConfig, z_um):
    """Combined on-axis power density in mW/um^2 at axial position z."""
    z = np.asarray(z_um, dtype=float)
    rho_p, rho_a = _on_axis_densities(cfg, z)
    k = cfg.primary.wavenumber_per_um
    cross = (
        2.0
        * cfg.kappa
        * np.sqrt(rho_p * rho_a)
        * np.cos(2.0 * k * z + cfg.relative_phase_rad)
    )
    rho = rho_p + rho_a + cross
    return rho if rho.ndim else float(rho)


def axial_depth(cfg: TrapConfig, z_um):
    """Trap depth in mK at axial position z (positive-down)."""
    rho = axial_intensity(cfg, z_um)
    return rho / RHO0_MW_PER_UM2


def _parabolic_refine(x0: float, h: float, y_minus: float, y0: float, y_plus: float) -> float:
    """Vertex of the parabola through three uniformly spaced samples."""
    denom = y_minus - 2.0 * y0 + y_plus
    if denom >= 0.0:
        return x0
    shift = 0.5 * h * (y_minus - y_plus) / denom
    # a sane vertex stays within the bracketing interval
    return x0 + np.clip(shift, -h, h)


def trap_depth(cfg: TrapConfig) -> float:
    """Maximum axial trap depth in mK.

    Grid search over one Rayleigh length either side of the focus (2001
    points resolves the half-wavelength lattice period comfortably) followed
    by a parabolic refinement at the best sample.
    """
    zr = cfg.primary.rayleigh_um
    z = np.linspace(-zr, zr, 2001)
    rho = axial_intensity(cfg, z)
    i = int(np.argmax(rho))
    best = rho[i]
    if 0 < i < len(z) - 1:
        z_ref = _parabolic_refine(z[i], z[1] - z[0], rho[i - 1], rho[i], rho[i + 1])
        best = max(best, axial_intensity(cfg, z_ref))
    return best / RHO0_MW_PER_UM2


def enhancement_ratio_exact(cfg: TrapConfig) -> float:
    """Fractional depth gain from the ancillary beam, (1 + x)^2 - 1.

    x^2 is the focus density ratio rho_anc / rho_p under the configured zeta
    convention.
    """
    rho_p, rho_a = _on_axis_densities(cfg, 0.0)
    if rho_p <= 0.0:
        raise ValueError("enhancement ratio requires nonzero primary power")
    x = np.sqrt(rho_a / rho_p)
    return float(x * x + 2.0 * x)


def enhancement_ratio_approx(
    p_primary_mw: float,
    p_ancillary_mw: float,
    waist_primary_um: float,
    waist_ancillary_um: float,
    zeta: float,
    zeta_applies_to_ancillary: bool = False,
) -> float:
    """Small-ancillary-power approximation 2x of the enhancement ratio.

    Always a lower bound on the exact value (the exact form adds x^2).
    """
    if p_primary_mw <= 0.0:
        raise ValueError("enhancement ratio requires nonzero primary power")
    zeta_eff = 1.0 if zeta_applies_to_ancillary else zeta
    x = np.sqrt(
        p_ancillary_mw
        * waist_primary_um**2
        / (zeta_eff * p_primary_mw * waist_ancillary_um**2)
    )
    return float(2.0 * x)


def potential_profile(
    cfg: TrapConfig, z_min_um: float, z_max_um: float, n_points: int
) -> PotentialProfile:
    """Sample the axial depth on a uniform grid."""
    if not z_min_um < z_max_um:
        raise ValueError(f"need z_min < z_max, got [{z_min_um}, {z_max_um}]")
    if n_points < 2:
        raise ValueError(f"need at least 2 grid points, got {n_points}")
    z = np.linspace(z_min_um, z_max_um, n_points)
    return PotentialProfile(z_um=z, depth_mk=axial_depth(cfg, z))


def axial_force(cfg: TrapConfig, z_um):
    """d(depth)/dz in mK/um, proportional to the axial dipole force.

    The sign convention makes the force restoring toward local depth maxima:
    just past a maximum the value is negative, pointing back to it.
    """
    z = np.asarray(z_um, dtype=float)
    p, a = cfg.primary, cfg.ancillary
    zp2 = p.rayleigh_um**2
    za2 = a.rayleigh_um**2
    rho_p, rho_a = _on_axis_densities(cfg, z)
    # envelope terms: d/dz [rho0 / (1 + (z/zR)^2)] = -rho * 2z/(zR^2 + z^2)
    d_env = -rho_p * 2.0 * z / (zp2 + z**2) - rho_a * 2.0 * z / (za2 + z**2)
    k = cfg.primary.wavenumber_per_um
    arg = 2.0 * k * z + cfg.relative_phase_rad
    amp = 2.0 * cfg.kappa * np.sqrt(rho_p * rho_a)
    d_amp = -amp * (z / (zp2 + z**2) + z / (za2 + z**2))
    d_cross = d_amp * np.cos(arg) - amp * 2.0 * k * np.sin(arg)
    force = (d_env + d_cross) / RHO0_MW_PER_UM2
    return force if force.ndim else float(force)


def find_antinodes(
    cfg: TrapConfig,
    z_min_um: float,
    z_max_um: float,
    depth_threshold_mk: float = 0.0,
) -> list[TrapSite]:
    """Locate interior local maxima of the depth profile above a threshold.

    A dense grid (about 40 samples per lattice period) brackets each
    maximum, a parabolic step refines it, and sites below the threshold are
    dropped. The returned list is sorted by z; its length is the number of
    active lattice sites.
    """
    if depth_threshold_mk < 0.0:
        raise ValueError("depth threshold must be >= 0")
    if not z_min_um < z_max_um:
        raise ValueError(f"need z_min < z_max, got [{z_min_um}, {z_max_um}]")
    period = cfg.primary.wavelength_um / 2.0
    n = max(401, int(np.ceil((z_max_um - z_min_um) / (period / 20.0))) + 1)
    z = np.linspace(z_min_um, z_max_um, n)
    d = axial_depth(cfg, z)
    interior = (d[1:-1] > d[:-2]) & (d[1:-1] >= d[2:])
    sites = []
    h = z[1] - z[0]
    for i in np.nonzero(interior)[0] + 1:
        z_ref = _parabolic_refine(z[i], h, d[i - 1], d[i], d[i + 1])
        depth = float(axial_depth(cfg, z_ref))
        if depth < d[i]:
            z_ref, depth = float(z[i]), float(d[i])
        if depth >= depth_threshold_mk and depth > 0.0:
            sites.append(TrapSite(z_center_um=float(z_ref), local_depth_mk=depth))
    sites.sort(key=lambda s: s.z_center_um)
    return sites


def stark_shift(depth_mk: float) -> float:
    """AC-Stark shift of the D2 transition in MHz for a given depth in mK."""
    if depth_mk < 0.0:
        raise ValueError("depth must be >= 0")
    return STARK_MHZ_PER_MK * depth_mk


def zeta_from_stark(shift_mhz: float, p_primary_mw: float, waist_primary_um: float) -> float:
    """Effective-power fraction implied by a measured AC-Stark shift.

    Inverts shift = STARK_MHZ_PER_MK * (2 zeta P / (pi w^2)) / RHO0. A result
    above 1 is clamped to 1 with a warning rather than silently returned.
    """
    if shift_mhz < 0.0:
        raise ValueError("shift must be >= 0")
    if p_primary_mw <= 0.0 or waist_primary_um <= 0.0:
        raise ValueError("power and waist must be > 0")
    depth_per_zeta = (
        2.0 * p_primary_mw / (np.pi * waist_primary_um**2) / RHO0_MW_PER_UM2
    )
    zeta = shift_mhz / (STARK_MHZ_PER_MK * depth_per_zeta)
    if zeta > 1.0:
        warnings.warn(
            f"inferred zeta = {zeta:.4f} exceeds 1; clamping to 1.0", stacklevel=2
        )
        return 1.0
    return float(zeta)
