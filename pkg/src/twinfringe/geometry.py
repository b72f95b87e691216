"""Bench geometry: layout, path lengths, incidence angles, optical regimes.

Coordinates: z runs along Bob's arm from the source plane, y is transverse.
The two source points sit at y = +/- source_half_separation. Bob's direction
filter is a pair of confocal lenses (focal length g) with its first lens at
z = 2g and a pinhole diaphragm on the shared focal plane at z = 3g; the
double slit is at z = d with openings at y = -s/2 (slit u) and y = +s/2
(slit v), and the screen lies a further ``screen_distance`` downstream.

Only horizontal rays thread the pinhole, so the incidence angle at the hole
is set by the emission height: phi(y) = 90 deg - atan(y / g), measured from
the diaphragm's transverse axis. Rays from the two source points arrive at
supplementary angles. All path lengths are exact Euclidean distances; the
small-angle forms appear only in cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CausalOrderError, RegimeError
from .modes import SourcePoint

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# "Much less than" is not quantified in the usual presentations of these
# conditions; we grade margin ratios on the standard order-of-magnitude scale.
PASS_RATIO = 0.1
WARN_RATIO = 0.3


@dataclass(frozen=True)
class ExperimentLayout:
    """All bench geometry, SI units (meters / radians).

    ``lambda_dc`` defaults to twice the pump wavelength (degenerate
    down-conversion). ``phi0`` defaults to the smallest incidence angle the
    filter's first lens can accept, 90 deg - atan(R/g).
    """

    focal_length_alice: float          # f
    focal_length_filter: float         # g
    lens_radius: float                 # R
    hole_diameter: float               # h
    slit_separation: float             # s
    source_to_slits: float             # d
    screen_distance: float             # slit plane to screen
    pump_wavelength: float = 351.1e-9
    dc_wavelength: float | None = None
    source_half_separation: float = 1e-3
    min_incidence_angle: float | None = None  # phi0, radians

    lambda_dc: float = field(init=False)
    phi0: float = field(init=False)

    def __post_init__(self):
        lam = self.dc_wavelength if self.dc_wavelength is not None else 2.0 * self.pump_wavelength
        object.__setattr__(self, "lambda_dc", lam)
        if self.min_incidence_angle is not None:
            phi0 = self.min_incidence_angle
        else:
            phi0 = 0.5 * math.pi - math.atan2(self.lens_radius, self.focal_length_filter)
        object.__setattr__(self, "phi0", phi0)

        positives = {
            "focal_length_alice": self.focal_length_alice,
            "focal_length_filter": self.focal_length_filter,
            "lens_radius": self.lens_radius,
            "hole_diameter": self.hole_diameter,
            "slit_separation": self.slit_separation,
            "source_to_slits": self.source_to_slits,
            "screen_distance": self.screen_distance,
            "pump_wavelength": self.pump_wavelength,
            "lambda_dc": self.lambda_dc,
            "source_half_separation": self.source_half_separation,
        }
        for name, value in positives.items():
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if not 0.0 < self.phi0 < 0.5 * math.pi:
            raise ValueError(
                f"minimum incidence angle must lie in (0, 90) degrees, got {math.degrees(self.phi0):.3f}"
            )
        if self.source_to_slits <= 4.0 * self.focal_length_filter:
            raise ValueError("source_to_slits must exceed 4g so the relay fits before the slits")

    # -- derived quantities -------------------------------------------------

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.lambda_dc

    @property
    def fringe_period(self) -> float:
        """Small-angle fringe period lambda * D / s on the screen."""
        return self.lambda_dc * self.screen_distance / self.slit_separation

    @property
    def slit_u_offset(self) -> float:
        return -0.5 * self.slit_separation

    @property
    def slit_v_offset(self) -> float:
        return +0.5 * self.slit_separation

    def source_offset(self, point: SourcePoint) -> float:
        return self.source_half_separation if point is SourcePoint.P else -self.source_half_separation

    def relay_path_sums(self) -> tuple[float, float]:
        """Common source-to-slit path computed along both slit branches.

        Returns (via slit v, via slit u): 2g for the horizontal leg into the
        first lens, the broken segment through the pinhole to the second
        lens, then the horizontal run to the slit plane. The two sums agree
        for the mirror-symmetric layout and their mean defines ``d_prime``.
        """
        g = self.focal_length_filter
        a = self.source_half_separation
        half_s = 0.5 * self.slit_separation
        to_hole_p = math.hypot(g, a)        # first-lens crossing of the p ray -> hole
        to_hole_q = math.hypot(g, a)        # mirror ray from q
        hole_to_lens2 = math.hypot(g, half_s)
        run_to_slits = self.source_to_slits - 4.0 * g
        via_v = 2.0 * g + to_hole_p + hole_to_lens2 + run_to_slits
        via_u = 2.0 * g + to_hole_q + hole_to_lens2 + run_to_slits
        return via_v, via_u

    @property
    def d_prime(self) -> float:
        via_v, via_u = self.relay_path_sums()
        return 0.5 * (via_v + via_u)


def screen_positions(layout: ExperimentLayout, n: int = 2001, half_width_fringes: float = 5.0) -> np.ndarray:
    """Uniform screen grid spanning +/- half_width_fringes fringe periods."""
    if n < 2:
        raise ValueError("screen grid needs at least 2 points")
    half = half_width_fringes * layout.fringe_period
    return np.linspace(-half, half, n)


def path_difference(layout: ExperimentLayout, x):
    """Slit-to-screen path difference at screen offset x; odd in x.

    Equals sqrt((x+s/2)^2 + D^2) - sqrt((x-s/2)^2 + D^2), evaluated as
    2 x s / (sum of the two roots) so no precision is lost to cancellation;
    reduces to x*s/D in the small-angle limit.
    """
    x = np.asarray(x, dtype=float)
    half_s = 0.5 * layout.slit_separation
    d = layout.screen_distance
    denom = np.hypot(x + half_s, d) + np.hypot(x - half_s, d)
    out = 4.0 * x * half_s / denom
    return out if out.ndim else float(out)


def incidence_angle_at(layout: ExperimentLayout, y: float) -> float:
    """Incidence angle at the pinhole for the horizontal ray emitted at height y."""
    return 0.5 * math.pi - math.atan2(y, layout.focal_length_filter)


def incidence_angle_phi(layout: ExperimentLayout, source_point: SourcePoint) -> float:
    """Pinhole incidence angle for a source point's horizontal ray, radians.

    The p and q rays arrive at supplementary angles; both must fall inside
    [phi0, pi - phi0] or the layout is outside the modeled beam.
    """
    phi = incidence_angle_at(layout, layout.source_offset(source_point))
    if not (layout.phi0 - 1e-15 <= phi <= math.pi - layout.phi0 + 1e-15):
        raise RegimeError(
            f"ray from {source_point.value} arrives at {math.degrees(phi):.3f} deg, "
            f"outside [{math.degrees(layout.phi0):.3f}, {180 - math.degrees(layout.phi0):.3f}] deg"
        )
    return phi


# ---------------------------------------------------------------------------
# Optical regimes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegimeDiagnostic:
    """Outcome of a regime validation; never raised, always returned."""

    name: str
    status: str                    # "pass" | "warn" | "fail"
    ratios: dict[str, float]
    message: str

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def failed(self) -> bool:
        return self.status == "fail"


def _grade(ratio: float) -> str:
    if ratio <= PASS_RATIO:
        return "pass"
    if ratio <= WARN_RATIO:
        return "warn"
    return "fail"


def validate_small_hole_regime(layout: ExperimentLayout) -> RegimeDiagnostic:
    """Diffractive-hole regime: h/g << lambda/s, with the hole small enough
    to stay out of the geometric-optics regime.

    The margin ratio is (h/g)/(lambda/s). The second ratio guards the regime
    boundary: once h exceeds ~10 wavelengths the hole stops diffracting each
    ray over both slits and the large-hole analysis applies instead, so the
    two validators can never both pass.
    """
    angular = (layout.hole_diameter / layout.focal_length_filter) / (
        layout.lambda_dc / layout.slit_separation
    )
    geometric = layout.lambda_dc / layout.hole_diameter  # must stay > PASS_RATIO
    status = _grade(angular)
    if geometric <= PASS_RATIO and status != "fail":
        status = "fail"
        message = (
            f"hole is {1 / geometric:.1f} wavelengths wide: geometric-optics regime, "
            "no two-slit diffraction at the pinhole"
        )
    else:
        message = f"angular-blur margin (h/g)/(lambda/s) = {angular:.3g} ({status})"
    return RegimeDiagnostic(
        "small_hole",
        status,
        {"angular_blur": angular, "wavelengths_per_hole": 1.0 / geometric},
        message,
    )


def validate_large_hole_regime(layout: ExperimentLayout) -> RegimeDiagnostic:
    """Geometric-hole regime: 1 << h/lambda << g/s.

    Both margin ratios (lambda/h and (h/lambda)/(g/s)) must clear the pass
    threshold: the hole transmits rays without diffracting them, yet is still
    small enough that the admitted tilt cannot blur the fringes.
    """
    diffraction = layout.lambda_dc / layout.hole_diameter
    tilt = (layout.hole_diameter / layout.lambda_dc) / (
        layout.focal_length_filter / layout.slit_separation
    )
    worst = max(diffraction, tilt)
    status = _grade(worst)
    message = (
        f"lambda/h = {diffraction:.3g}, (h/lambda)/(g/s) = {tilt:.3g} ({status})"
    )
    return RegimeDiagnostic(
        "large_hole", status, {"diffraction": diffraction, "tilt": tilt}, message
    )


# ---------------------------------------------------------------------------
# Effective signal speed
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectiveSpeed:
    meters_per_second: float
    in_units_of_c: float


def effective_signal_speed(layout: ExperimentLayout, t_a: float, t_b: float) -> EffectiveSpeed:
    """Apparent speed (d + 4f) / (t_b - t_a) of the one-bit transfer.

    t_b is Bob's measurement instant, t_a the instant of Alice's choice;
    equal times yield the +infinity sentinel.
    """
    if t_b < t_a:
        raise CausalOrderError(f"t_b ({t_b}) precedes t_a ({t_a})")
    span = layout.source_to_slits + 4.0 * layout.focal_length_alice
    if t_b == t_a:
        return EffectiveSpeed(math.inf, math.inf)
    v = span / (t_b - t_a)
    return EffectiveSpeed(v, v / SPEED_OF_LIGHT)
