"""Jones-calculus polarization states and the beam interference overlap.

The two trap beams are described by normalized Jones vectors in one fixed
transverse lab basis (x horizontal, y vertical). The ancillary beam passes
through a quarter-wave plate whose fast-axis angle controls how well its
polarization overlaps the trap beam's; that overlap magnitude is the
visibility factor that scales the standing-wave interference term of the
combined trap.

Handedness convention: in this basis a left-handed circular state is
(1, -i)/sqrt(2), i.e. handedness -1 in ``make_elliptical``. With that choice
the quarter-wave plate J(theta) = R(theta) diag(1, i) R(-theta) acting on
horizontal light gives unit overlap with a left-circular target exactly at
theta = 45 deg + theta0, which is what the calibration offset is fitted
against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LEFT_HANDED = -1
RIGHT_HANDED = +1


@dataclass(frozen=True)
class JonesVector:
    """Transverse field components (ex, ey) in the fixed lab basis."""

    ex: complex
    ey: complex

    def norm(self) -> float:
        return math.sqrt(abs(self.ex) ** 2 + abs(self.ey) ** 2)

    def normalized(self) -> "JonesVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero Jones vector")
        return JonesVector(self.ex / n, self.ey / n)

    def as_array(self) -> np.ndarray:
        return np.array([self.ex, self.ey], dtype=complex)


@dataclass(frozen=True)
class WavePlateSetting:
    """Quarter-wave plate fast-axis angle, with a calibration offset.

    Angles are degrees from horizontal; only theta mod 180 matters.
    """

    theta_deg: float
    theta0_deg: float = 0.0

    @property
    def effective_theta_deg(self) -> float:
        return self.theta_deg - self.theta0_deg


H_LINEAR = JonesVector(1.0 + 0.0j, 0.0 + 0.0j)


def make_elliptical(ellipticity: float, handedness: int = LEFT_HANDED) -> JonesVector:
    """Normalized elliptical state (1, i*handedness*ellipticity)/sqrt(1+e^2).

    ellipticity 1 gives circular light, 0 gives horizontal linear.
    """
    if not 0.0 <= ellipticity <= 1.0:
        raise ValueError(f"ellipticity must be in [0, 1], got {ellipticity}")
    if handedness not in (LEFT_HANDED, RIGHT_HANDED):
        raise ValueError("handedness must be +1 or -1")
    scale = 1.0 / math.sqrt(1.0 + ellipticity**2)
    return JonesVector(scale + 0.0j, 1j * handedness * ellipticity * scale)


def left_circular() -> JonesVector:
    return make_elliptical(1.0, LEFT_HANDED)


def qwp_matrix(theta_rad: float) -> np.ndarray:
    """Quarter-wave plate Jones matrix, fast axis at theta_rad from horizontal."""
    c, s = math.cos(theta_rad), math.sin(theta_rad)
    rot = np.array([[c, -s], [s, c]])
    retard = np.array([[1.0, 0.0], [0.0, 1j]])
    return rot @ retard @ rot.T


def qwp_transform(state: JonesVector, setting: WavePlateSetting) -> JonesVector:
    """Apply the quarter-wave plate at the setting's effective angle.

    Unitary, so the Jones norm is preserved.
    """
    theta = math.radians(setting.effective_theta_deg)
    out = qwp_matrix(theta) @ state.as_array()
    return JonesVector(complex(out[0]), complex(out[1]))


def overlap_factor(a: JonesVector, b: JonesVector) -> float:
    """Interference visibility: magnitude of the Hermitian inner product.

    1 for identical states, 0 for orthogonal ones. Inputs are assumed
    normalized.
    """
    return abs(np.conj(a.ex) * b.ex + np.conj(a.ey) * b.ey)


def ancillary_overlap_vs_angle(
    theta_deg: float, theta0_deg: float, primary: JonesVector
) -> float:
    """Visibility of the ancillary beam against the primary vs QWP angle.

    The ancillary arrives horizontally polarized, passes the quarter-wave
    plate, and the result is overlapped with the primary state. For a
    left-circular primary this is exactly |cos(theta - theta0 - 45 deg)|.
    """
    setting = WavePlateSetting(theta_deg, theta0_deg)
    return overlap_factor(qwp_transform(H_LINEAR, setting), primary)
