"""Field operators, coincidence probabilities, and averaged fringe patterns.

A detector field is a linear combination of annihilation operators whose
coefficients carry the geometric path phases. Contracting two such fields
against the pair state gives the coincidence probability; because the
direction filter removes every idler mode that could tag Alice's outcome,
the result depends only on the slit path difference and the pinhole
incidence angle, and the interference survives in Bob's single counts.

Screen patterns are built by numerically averaging the coincidence
probability over the incidence angle with a configurable beam weight,
summed over Alice's outcome branches. Patterns are reported in units of
the joint prefactor (pair amplitude^2 x slit amplitude^2) times the
configured beam intensity scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._integrate import adaptive_simpson, composite_simpson
from .elements import pinhole_diffraction
from .errors import RegimeError, UndefinedVisibilityError
from .geometry import ExperimentLayout, path_difference, screen_positions
from .modes import (
    IDLER_P_SIDE,
    IDLER_Q_SIDE,
    SIGNAL_P_DOWN,
    SIGNAL_P_SIDE,
    SIGNAL_Q_DOWN,
    SIGNAL_Q_SIDE,
    Mode,
    Party,
    SourcePoint,
    TwoPhotonState,
    canonical_spdc_state,
)

PHI_AVERAGE_TOL = 1e-9


# ---------------------------------------------------------------------------
# Field operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldOperator:
    """Linear combination of one party's annihilation operators.

    Coefficients are complex scalars, or complex arrays when a whole screen
    grid is evaluated at once. A mode may appear in several terms (one per
    optical path); contraction sums them.
    """

    terms: tuple

    def __post_init__(self):
        terms = tuple((mode, coeff) for mode, coeff in self.terms)
        if not terms:
            raise ValueError("field operator needs at least one term")
        parties = {mode.party for mode, _ in terms}
        if len(parties) != 1:
            raise ValueError("all modes of a field operator must share one party")
        object.__setattr__(self, "terms", terms)

    @property
    def party(self) -> Party:
        return self.terms[0][0].party

    def coefficient(self, mode: Mode):
        total = 0j
        for m, coeff in self.terms:
            if m is mode:
                total = total + coeff
        return total

    @property
    def modes(self) -> tuple[Mode, ...]:
        seen = []
        for mode, _ in self.terms:
            if mode not in seen:
                seen.append(mode)
        return tuple(seen)


def bob_field(layout: ExperimentLayout, x, phi: float, alpha: float) -> FieldOperator:
    """Bob's detector field at screen offset x for incidence angle phi.

    The two surviving idler modes arrive at the pinhole at supplementary
    angles, so each contributes its own two-slit split; the coefficients'
    moduli depend only on phi and alpha while the phases carry the exact
    relay-plus-slit path lengths. x may be an array.
    """
    if not (layout.phi0 - 1e-15 <= phi <= math.pi - layout.phi0 + 1e-15):
        raise RegimeError(
            f"incidence angle {math.degrees(phi):.3f} deg outside the admitted beam"
        )
    x = np.asarray(x, dtype=float)
    k = layout.wavenumber
    d = layout.screen_distance
    v_path = np.hypot(x - layout.slit_v_offset, d)
    # The huge common phase (relay + one slit path, ~1e7 rad) multiplies all
    # four terms and cancels in every squared modulus; only the slit path
    # difference must stay accurate, so it is applied as a relative factor.
    phase_v = np.exp(1j * k * (layout.d_prime + v_path))
    phase_u = phase_v * np.exp(1j * k * path_difference(layout, x))

    split_p = pinhole_diffraction(phi, alpha)
    split_q = pinhole_diffraction(math.pi - phi, alpha)
    if x.ndim == 0:
        phase_u, phase_v = complex(phase_u), complex(phase_v)
    return FieldOperator(
        (
            (IDLER_P_SIDE, split_p.into_u * phase_u),
            (IDLER_P_SIDE, split_p.into_v * phase_v),
            (IDLER_Q_SIDE, split_q.into_u * phase_u),
            (IDLER_Q_SIDE, split_q.into_v * phase_v),
        )
    )


def alice_field_position(
    layout: ExperimentLayout, source_point: SourcePoint = SourcePoint.P
) -> FieldOperator:
    """Alice's field for a detection on the image plane of one source point.

    Two signal rays converge there: the horizontal ray via the lens edge
    crossing, and the oblique ray through the lens center. Both coefficients
    are pure phases; they cancel in every coincidence modulus because the
    filter leaves each at most one surviving idler partner.
    """
    f = layout.focal_length_alice
    a = layout.source_half_separation
    k = layout.wavenumber
    side_path = 2.0 * f + math.hypot(2.0 * f, 2.0 * a)
    down_path = math.hypot(4.0 * f, 2.0 * a)
    side = np.exp(1j * k * side_path)
    down = np.exp(1j * k * down_path)
    if source_point is SourcePoint.P:
        return FieldOperator(((SIGNAL_P_SIDE, side), (SIGNAL_P_DOWN, down)))
    return FieldOperator(((SIGNAL_Q_SIDE, side), (SIGNAL_Q_DOWN, down)))


def alice_field_momentum(layout: ExperimentLayout) -> FieldOperator:
    """Alice's field at the on-axis focal point.

    Both horizontal signal rays converge there along mirror-image paths of
    identical length, so the two coefficients are equal complex phases.
    """
    f = layout.focal_length_alice
    a = layout.source_half_separation
    k = layout.wavenumber
    phase = np.exp(1j * k * (2.0 * f + math.hypot(f, a)))
    return FieldOperator(((SIGNAL_P_SIDE, phase), (SIGNAL_Q_SIDE, phase)))


def coincidence_probability(state: TwoPhotonState, e_a: FieldOperator, e_b: FieldOperator):
    """|<E+_A E+_B>|^2: joint detection probability for the two fields.

    Each (signal, idler) coefficient product is contracted against the pair
    amplitude of that mode combination. Returns a float, or an array when the
    idler field was built on a screen grid.
    """
    if e_a.party is not Party.SIGNAL:
        raise ValueError("e_a must act on signal modes")
    if e_b.party is not Party.IDLER:
        raise ValueError("e_b must act on idler modes")
    total = 0j
    for sig, c_sig in e_a.terms:
        for idl, c_idl in e_b.terms:
            amp = state.amplitude(sig, idl)
            if amp != 0:
                total = total + c_sig * c_idl * amp
    return np.abs(total) ** 2 if isinstance(total, np.ndarray) else abs(total) ** 2


# ---------------------------------------------------------------------------
# Beam weight profiles over the incidence angle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightProfile:
    """Nonnegative weight over the incidence-angle interval.

    Either a density w(phi) integrated by adaptive quadrature, or a point
    mass at a single angle (useful for narrow beams and for matching a
    target mean of sin(phi)).
    """

    name: str
    density: Callable[[float], float] | None = None
    atom: float | None = None

    def __post_init__(self):
        if (self.density is None) == (self.atom is None):
            raise ValueError("provide exactly one of density or atom")


def flat_profile() -> WeightProfile:
    return WeightProfile("flat", density=lambda phi: 1.0)


def sin_squared_profile() -> WeightProfile:
    return WeightProfile("sin2", density=lambda phi: math.sin(phi) ** 2)


def point_mass_profile(angle: float) -> WeightProfile:
    return WeightProfile(f"point:{math.degrees(angle):g}", atom=float(angle))


def tabulated_profile(angles: Sequence[float], weights: Sequence[float], name: str = "table") -> WeightProfile:
    angles = np.asarray(angles, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if angles.ndim != 1 or angles.shape != weights.shape or angles.size < 2:
        raise ValueError("tabulated profile needs matching 1-d angle and weight arrays")
    if np.any(np.diff(angles) <= 0):
        raise ValueError("tabulated angles must be strictly increasing")
    if np.any(weights < 0):
        raise ValueError("tabulated weights must be nonnegative")
    return WeightProfile(
        name, density=lambda phi: float(np.interp(phi, angles, weights, left=0.0, right=0.0))
    )


def weighted_phi_average(
    profile: WeightProfile,
    f: Callable[[float], "np.ndarray | float"],
    phi0: float,
    abs_tol: float = PHI_AVERAGE_TOL,
):
    """Weighted mean of f over [phi0, pi - phi0].

    A point-mass profile evaluates f at its atom; a degenerate interval
    (phi0 at 90 deg) evaluates f at 90 deg. The weight must not integrate
    to zero.
    """
    lo, hi = phi0, math.pi - phi0
    if profile.atom is not None:
        if not lo - 1e-12 <= profile.atom <= hi + 1e-12:
            raise ValueError(
                f"point mass at {math.degrees(profile.atom):.3f} deg lies outside the beam interval"
            )
        return f(profile.atom)
    if hi - lo < 1e-12:
        return f(0.5 * math.pi)
    weight = profile.density
    norm = adaptive_simpson(weight, lo, hi, abs_tol)
    if not norm > 0.0:
        raise ValueError(f"weight profile {profile.name!r} integrates to zero on the beam interval")
    mean = adaptive_simpson(lambda phi: np.asarray(f(phi)) * weight(phi), lo, hi, abs_tol * norm)
    return mean / norm


class _CachedAngleAverage:
    """Fixed-order Gauss-Legendre version of the weighted angle average.

    Used where the average is evaluated many times in a row (the bounded
    extremum searches); 192 nodes put the rule's error orders of magnitude
    below the shared 1e-9 tolerance for the smooth profiles shipped here.
    """

    def __init__(self, profile: WeightProfile, phi0: float, order: int = 192):
        self.atom = profile.atom
        if self.atom is not None:
            return
        lo, hi = phi0, math.pi - phi0
        if hi - lo < 1e-12:
            self.atom = 0.5 * math.pi
            return
        nodes, weights = np.polynomial.legendre.leggauss(order)
        self.nodes = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        wvals = np.array([profile.density(p) for p in self.nodes])
        self.weights = 0.5 * (hi - lo) * weights * wvals
        norm = float(np.sum(self.weights))
        if not norm > 0.0:
            raise ValueError("weight profile integrates to zero on the beam interval")
        self.weights /= norm

    def __call__(self, f: Callable[[float], float]) -> float:
        if self.atom is not None:
            return float(f(self.atom))
        return float(sum(w * f(p) for w, p in zip(self.weights, self.nodes)))


def weighted_mean_sine(profile: WeightProfile, phi0: float) -> float:
    """Mean of sin(phi) under the profile: the position-protocol visibility."""
    return float(weighted_phi_average(profile, math.sin, phi0))


def flat_profile_mean_sine(phi0: float) -> float:
    """Closed form of the flat-profile mean of sin(phi): 2 cos(phi0)/(pi - 2 phi0)."""
    if abs(math.pi - 2.0 * phi0) < 1e-12:
        return 1.0
    return 2.0 * math.cos(phi0) / (math.pi - 2.0 * phi0)


# ---------------------------------------------------------------------------
# Screen patterns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntensityPattern:
    """Sampled screen pattern with its summary statistics.

    ``intensity`` is in units of intensity_scale x epsilon^2 alpha^2.
    ``visibility`` is the full-contrast ratio over the central fringe;
    ``total_flux`` integrates the samples over the grid span.
    """

    positions: np.ndarray
    intensity: np.ndarray
    visibility: float
    total_flux: float
    label: str
    fringe_period: float | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        inten = np.asarray(self.intensity, dtype=float)
        if pos.ndim != 1 or pos.shape != inten.shape:
            raise ValueError("positions and intensity must be matching 1-d arrays")
        pos.setflags(write=False)
        inten.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "intensity", inten)

    @property
    def span(self) -> float:
        return float(self.positions[-1] - self.positions[0])


def _protocol_branches(layout: ExperimentLayout, protocol: str):
    """Alice outcome branches feeding Bob's single counts, with their weights.

    Position: detections at the images of the two source points, weight 1/2
    each. Momentum: the on-axis focal detection; the complementary oblique
    branch never passes the direction filter and contributes nothing.
    """
    if protocol == "position":
        return (
            (alice_field_position(layout, SourcePoint.P), 0.5),
            (alice_field_position(layout, SourcePoint.Q), 0.5),
        )
    if protocol == "momentum":
        return ((alice_field_momentum(layout), 1.0),)
    raise ValueError(f"unknown protocol {protocol!r}")


def single_count_intensity(
    layout: ExperimentLayout,
    protocol: str,
    weight_profile: WeightProfile,
    *,
    epsilon: float = 0.1,
    alpha: float = 0.5,
    intensity_scale: float = 1.0,
    grid_points: int = 2001,
    half_width_fringes: float = 5.0,
    state: TwoPhotonState | None = None,
) -> IntensityPattern:
    """Bob's single-count screen pattern for one protocol setting.

    The coincidence probability is averaged over the incidence angle with the
    given weight, summed over Alice's outcome branches, and sampled on a
    uniform grid. Visibility is refined by a bounded scalar search on the
    continuous pattern so it is grid-independent.
    """
    if state is None:
        state = canonical_spdc_state(epsilon)
    units = intensity_scale / (state.epsilon**2 * alpha**2)
    branches = _protocol_branches(layout, protocol)
    xs = screen_positions(layout, grid_points, half_width_fringes)

    def per_angle_at(x):
        def per_angle(phi):
            e_b = bob_field(layout, x, phi, alpha)
            value = 0.0
            for e_a, wt in branches:
                value = value + wt * coincidence_probability(state, e_a, e_b)
            return value

        return per_angle

    samples = np.asarray(
        weighted_phi_average(weight_profile, per_angle_at(xs), layout.phi0)
    ) * units
    floor = -1e-9 * max(1.0, float(np.max(np.abs(samples))))
    if np.min(samples) < floor:
        raise AssertionError("intensity pattern went negative; contraction bug")
    samples = np.maximum(samples, 0.0)

    averager = _CachedAngleAverage(weight_profile, layout.phi0)
    visibility = _refined_visibility(
        lambda x: averager(per_angle_at(float(x))) * units, layout.fringe_period
    )
    flux = composite_simpson(samples, xs)
    return IntensityPattern(xs, samples, visibility, flux, protocol, layout.fringe_period)


def _refined_visibility(intensity_at: Callable[[float], float], period: float) -> float:
    """Full-contrast ratio from the continuous pattern over the central fringe.

    The central maximum sits at the symmetry point x = 0 and the first
    minimum near half a period out; both are located by bounded Brent
    searches so the result does not inherit the sampling grid's resolution.
    """
    xatol = period * 1e-9
    hi = -minimize_scalar(
        lambda x: -intensity_at(x), bounds=(-0.3 * period, 0.3 * period),
        method="bounded", options={"xatol": xatol},
    ).fun
    lo = minimize_scalar(
        intensity_at, bounds=(0.2 * period, 0.8 * period),
        method="bounded", options={"xatol": xatol},
    ).fun
    lo = max(lo, 0.0)
    if hi + lo <= 0.0:
        raise UndefinedVisibilityError("pattern is identically zero on the central fringe")
    return float((hi - lo) / (hi + lo))


def grid_visibility(positions: np.ndarray, intensity: np.ndarray, period: float | None) -> float:
    """Full-contrast ratio straight from samples, parabolic-sharpened extremes."""
    if period is not None:
        if positions[-1] - positions[0] < period - 1e-12:
            raise ValueError("pattern must span at least one full fringe period")
        window = np.abs(positions) <= 0.55 * period
    else:
        window = np.ones(positions.size, dtype=bool)
    idx = np.flatnonzero(window)
    i_max = idx[np.argmax(intensity[idx])]
    i_min = idx[np.argmin(intensity[idx])]
    hi = _parabolic_peak(intensity, i_max)
    lo = max(_parabolic_peak(intensity, i_min), 0.0)
    if hi + lo <= 0.0:
        raise UndefinedVisibilityError("pattern is identically zero on the central fringe")
    return float((hi - lo) / (hi + lo))


def fringe_visibility(pattern: IntensityPattern) -> float:
    """(I_max - I_min)/(I_max + I_min) over the central fringe of a sampled pattern.

    Discrete extremes are sharpened by three-point parabolic interpolation.
    This estimator sees only the samples, so it is the grid-level
    counterpart of the stored (search-refined) visibility.
    """
    return grid_visibility(pattern.positions, pattern.intensity, pattern.fringe_period)


def _parabolic_peak(y: np.ndarray, i: int) -> float:
    if i == 0 or i == y.size - 1:
        return float(y[i])
    curvature = y[i + 1] - 2.0 * y[i] + y[i - 1]
    if curvature == 0.0:
        return float(y[i])
    slope = y[i + 1] - y[i - 1]
    return float(y[i] - slope * slope / (8.0 * curvature))


def intensity_ratio(pattern_m: IntensityPattern, pattern_p: IntensityPattern) -> float:
    """Total-flux ratio of two patterns sampled on the same grid."""
    if pattern_m.positions.shape != pattern_p.positions.shape or not np.array_equal(
        pattern_m.positions, pattern_p.positions
    ):
        raise ValueError("patterns must share one screen grid")
    if pattern_p.total_flux == 0.0:
        raise ValueError("denominator pattern carries zero flux")
    return pattern_m.total_flux / pattern_p.total_flux


# ---------------------------------------------------------------------------
# Closed-form references
# ---------------------------------------------------------------------------

def position_coincidence_closed_form(
    phi: float, path_diff, wavenumber: float, epsilon: float, alpha: float
):
    """eps^2 alpha^2 (1 + sin(phi) cos(k delta)): position-setting coincidence."""
    return epsilon**2 * alpha**2 * (1.0 + math.sin(phi) * np.cos(wavenumber * np.asarray(path_diff)))


def momentum_coincidence_closed_form(
    phi: float, path_diff, wavenumber: float, epsilon: float, alpha: float
):
    """2 eps^2 alpha^2 (1 + sin(phi)) (1 + cos(k delta)): momentum-setting coincidence."""
    return (
        2.0
        * epsilon**2
        * alpha**2
        * (1.0 + math.sin(phi))
        * (1.0 + np.cos(wavenumber * np.asarray(path_diff)))
    )


def closed_form_pattern_summary(
    phi0: float, epsilon: float, alpha: float, intensity_scale: float = 1.0
) -> dict:
    """Closed-form reference numbers for the two averaged patterns.

    The position visibility is quoted two ways: the flat-profile quadrature
    value 2 cos(phi0)/(pi - 2 phi0), and the narrow-beam value cos(phi0)
    (exact when the beam weight concentrates where sin(phi) = cos(phi0)).
    The two averaged patterns share the (1 + cos phi0) factor in their
    quoted prefactors, which therefore differ by exactly 2.
    """
    base = intensity_scale * epsilon**2 * alpha**2
    return {
        "position_visibility_flat": flat_profile_mean_sine(phi0),
        "position_visibility_cos_phi0": math.cos(phi0),
        "momentum_visibility": 1.0,
        "position_prefactor": base * (1.0 + math.cos(phi0)),
        "momentum_prefactor": 2.0 * base * (1.0 + math.cos(phi0)),
        "prefactor_ratio": 2.0,
    }


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def pattern_to_csv(pattern: IntensityPattern) -> str:
    """Deterministic CSV: fixed columns, 17 significant digits."""
    lines = ["x_m,intensity"]
    for x, i in zip(pattern.positions, pattern.intensity):
        lines.append(f"{x:.17g},{i:.17g}")
    return "\n".join(lines) + "\n"


def pattern_summary(pattern: IntensityPattern) -> dict:
    return {
        "label": pattern.label,
        "visibility": float(pattern.visibility),
        "total_flux": float(pattern.total_flux),
        "fringe_period_m": pattern.fringe_period,
        "n_samples": int(pattern.positions.size),
        "x_min_m": float(pattern.positions[0]),
        "x_max_m": float(pattern.positions[-1]),
    }
