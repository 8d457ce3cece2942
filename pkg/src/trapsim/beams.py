"""Scalar Gaussian beam model for a single focused dipole-trap beam.

Field envelope:

    E(r, z) = a * w0/w(z) * exp(-r^2/w(z)^2 - i k (r^2/(2R) + z))

with w(z) = w0 sqrt(1 + (z/zR)^2) and wavefront curvature radius
R = z (1 + (zR/z)^2). The curvature phase is evaluated as
r^2 z / (2 (z^2 + zR^2)), which equals r^2/(2R) for z != 0 and stays finite
through the focus.

waist and Rayleigh length are independent parameters: the focusing optic
produces a beam whose measured (waist, zR) pair does not satisfy the
ideal-Gaussian relation zR = pi w0^2 / lambda, so both are taken from
measurement. The fraction zeta of the nominal power that actually feeds the
tightly confined central lobe enters the intensity only, never the Eq-style
field envelope.

Units: powers in mW, transverse/axial lengths in um, wavelength stored in nm
and converted internally. Intensities come out in mW/um^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .polarization import JonesVector, make_elliptical


def _default_polarization() -> JonesVector:
    # measured primary beam: left-handed, ellipticity ~0.65
    return make_elliptical(0.65)


@dataclass(frozen=True)
class BeamSpec:
    """One focused dipole beam."""

    power_mw: float
    waist_um: float = 1.3
    rayleigh_um: float = 11.7
    wavelength_nm: float = 852.0
    zeta: float = 1.0
    amplitude: float = 1.0
    polarization: JonesVector = field(default_factory=_default_polarization)
    direction: int = +1

    def __post_init__(self):
        if self.power_mw < 0:
            raise ValueError(f"power must be >= 0, got {self.power_mw}")
        if self.waist_um <= 0:
            raise ValueError(f"waist must be > 0, got {self.waist_um}")
        if self.rayleigh_um <= 0:
            raise ValueError(f"Rayleigh length must be > 0, got {self.rayleigh_um}")
        if self.wavelength_nm <= 0:
            raise ValueError(f"wavelength must be > 0, got {self.wavelength_nm}")
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError(f"zeta must be in [0, 1], got {self.zeta}")
        if self.direction not in (+1, -1):
            raise ValueError(f"direction must be +1 or -1, got {self.direction}")

    @property
    def wavelength_um(self) -> float:
        return self.wavelength_nm * 1e-3

    @property
    def wavenumber_per_um(self) -> float:
        return 2.0 * np.pi / self.wavelength_um


def beam_waist_at(beam: BeamSpec, z_um):
    """Beam radius w(z) in um; even in z, equal to the waist at the focus."""
    z = np.asarray(z_um, dtype=float)
    w = beam.waist_um * np.sqrt(1.0 + (z / beam.rayleigh_um) ** 2)
    return w if w.ndim else float(w)

def beam_field(beam: BeamSpec, r_um, z_um):
    """Complex field envelope at radius r and axial position z.

    The propagation direction flips the sign of the phase accumulation; the
    magnitude is direction-independent.
    """
    r = np.asarray(r_um, dtype=float)
    z = np.asarray(z_um, dtype=float)
    w = beam.waist_um * np.sqrt(1.0 + (z / beam.rayleigh_um) ** 2)
    curvature_phase = r**2 * z / (2.0 * (z**2 + beam.rayleigh_um**2))
    phase = -1j * beam.direction * beam.wavenumber_per_um * (curvature_phase + z)
    e = beam.amplitude * (beam.waist_um / w) * np.exp(-(r**2) / w**2 + phase)
    return e if e.ndim else complex(e)

def intensity_density(beam: BeamSpec, r_um, z_um):
    """Optical power density in mW/um^2, including the effective fraction zeta.

    On axis at the focus this is 2 zeta P / (pi w0^2); its transverse integral
    is zeta*P at every z.
    """
    r = np.asarray(r_um, dtype=float)
    z = np.asarray(z_um, dtype=float)
    w2 = beam.waist_um**2 * (1.0 + (z / beam.rayleigh_um) ** 2)
    rho = (2.0 * beam.zeta * beam.power_mw / (np.pi * w2)) * np.exp(-2.0 * r**2 / w2)
    return rho if rho.ndim else float(rho)
