"""Optical element transforms.

The pinhole splits an incident ray between the two slits with amplitudes
alpha*sin(phi/2) and alpha*cos(phi/2); a ray perpendicular to the diaphragm
feeds both slits equally. The remaining amplitude (photons missing the double
slit entirely) is a lump loss channel: it lowers detected flux but never
reaches the screen. The direction filter and Alice's two detector placements
are incomplete measurements, expressed here as retained-mode projectors.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

from .modes import (
    IDLER_P_SIDE,
    IDLER_Q_SIDE,
    SIGNAL_P_DOWN,
    SIGNAL_P_SIDE,
    SIGNAL_Q_DOWN,
    SIGNAL_Q_SIDE,
    Direction,
    Party,
    Projector,
    SourcePoint,
)


@dataclass(frozen=True)
class SlitAmplitudes:
    """Amplitudes diffracted into the two slits; the rest of the wave is lost."""

    into_u: complex
    into_v: complex

    def two_slit_weight(self) -> float:
        return abs(self.into_u) ** 2 + abs(self.into_v) ** 2


def pinhole_diffraction(phi: float, alpha: float) -> SlitAmplitudes:
    """Split a ray at incidence angle phi (radians) between the slits.

    alpha is the total amplitude into the double slit; it depends on the hole
    and slit cross-sections and is a configuration scalar here.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if not 0.0 <= phi <= math.pi:
        raise ValueError(f"incidence angle must be in [0, pi], got {phi}")
    return SlitAmplitudes(alpha * math.sin(0.5 * phi), alpha * math.cos(0.5 * phi))


def direction_filter() -> Projector:
    """Idler-side projector of the two-lens pinhole filter.

    Only the horizontal rays thread the pinhole, so exactly the two side
    idler modes survive; the filter is modeled as ideal (unit transmission,
    zero leakage).
    """
    return Projector(Party.IDLER, frozenset({IDLER_P_SIDE, IDLER_Q_SIDE}))


def signal_source_projector(point: SourcePoint) -> Projector:
    """Signal modes emitted from one source point (a position outcome)."""
    if point is SourcePoint.P:
        return Projector(Party.SIGNAL, frozenset({SIGNAL_P_SIDE, SIGNAL_P_DOWN}))
    return Projector(Party.SIGNAL, frozenset({SIGNAL_Q_SIDE, SIGNAL_Q_DOWN}))


def signal_direction_projector(direction: Direction) -> Projector:
    """Signal modes sharing one emission direction (a momentum outcome)."""
    if direction is Direction.SIDE:
        return Projector(Party.SIGNAL, frozenset({SIGNAL_P_SIDE, SIGNAL_Q_SIDE}))
    return Projector(Party.SIGNAL, frozenset({SIGNAL_P_DOWN, SIGNAL_Q_DOWN}))


class DetectionPlane(Enum):
    IMAGE = "image"
    FOCAL = "focal"


class DetectionPoint(Enum):
    IMAGE_OF_P = "image_of_p"
    IMAGE_OF_Q = "image_of_q"
    FOCAL_AXIS = "focal_axis"   # where all horizontal signal rays converge


@dataclass(frozen=True)
class AliceOutcome:
    """One detector placement on Alice's side and the projector it implements."""

    plane: DetectionPlane
    point: DetectionPoint
    projector: Projector


_OUTCOME_TABLE = {
    (DetectionPlane.IMAGE, DetectionPoint.IMAGE_OF_P): signal_source_projector(SourcePoint.P),
    (DetectionPlane.IMAGE, DetectionPoint.IMAGE_OF_Q): signal_source_projector(SourcePoint.Q),
    (DetectionPlane.FOCAL, DetectionPoint.FOCAL_AXIS): signal_direction_projector(Direction.SIDE),
}


def alice_lens_outcome(plane: DetectionPlane, point: DetectionPoint) -> AliceOutcome:
    """Map a detector placement to its incomplete-measurement projector.

    Image-plane detections identify the source point but not the emission
    direction; the on-axis focal detection identifies the horizontal
    direction but not the source point.
    """
    proj = _OUTCOME_TABLE.get((plane, point))
    if proj is None:
        raise ValueError(f"inconsistent placement: {plane.value} plane has no point {point.value}")
    return AliceOutcome(plane, point, proj)


def alice_branch_projectors(setting: str) -> tuple[Projector, ...]:
    """The complete outcome set Alice's lens resolves for a protocol setting."""
    if setting == "position":
        return (signal_source_projector(SourcePoint.P), signal_source_projector(SourcePoint.Q))
    if setting == "momentum":
        return (
            signal_direction_projector(Direction.SIDE),
            signal_direction_projector(Direction.UPDOWN),
        )
    raise ValueError(f"unknown Alice setting {setting!r}")


def propagation_phase(length: float, lambda_dc: float) -> complex:
    """Free-propagation phase factor exp(i * 2 pi * length / lambda); unit modulus."""
    if length < 0.0:
        raise ValueError("path length must be nonnegative")
    if lambda_dc <= 0.0:
        raise ValueError("wavelength must be positive")
    return cmath.exp(2j * math.pi * length / lambda_dc)
