"""End-to-end protocol runs and the finite-statistics layer.

One run fixes Alice's setting (position or momentum), produces Bob's
filtered single-count pattern, the conditional two-photon state implied by
the projector algebra, and the bit Bob infers from the pattern's fringe
contrast. A Monte-Carlo layer samples detection events from the pattern and
attaches a bootstrap confidence interval to the estimated visibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._integrate import composite_simpson
from .correlation import (
    IntensityPattern,
    WeightProfile,
    flat_profile,
    single_count_intensity,
    weighted_mean_sine,
)
from .elements import alice_branch_projectors, direction_filter
from .errors import RegimeError
from .geometry import (
    ExperimentLayout,
    RegimeDiagnostic,
    path_difference,
    screen_positions,
    validate_large_hole_regime,
    validate_small_hole_regime,
)
from .modes import (
    CANONICAL_PAIRS,
    DensityOperator,
    branch_weights,
    canonical_spdc_state,
    conditional_mixture,
)

ALICE_SETTINGS = ("position", "momentum")
RNG_NAME = "philox"   # counter-based, 64-bit seed


# ---------------------------------------------------------------------------
# Bit inference
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdPolicy:
    """Visibility bands for Bob's decision rule.

    Above ``v_hi`` the pattern reads as the full-contrast momentum case,
    below ``v_lo`` as the reduced-contrast position case; the band between
    is an explicit "indeterminate" verdict for finite statistics.
    """

    v_lo: float
    v_hi: float

    def __post_init__(self):
        if not 0.0 <= self.v_lo <= self.v_hi <= 1.0:
            raise ValueError("require 0 <= v_lo <= v_hi <= 1")

    @classmethod
    def centered(cls, predicted_position_visibility: float, band: float = 0.05) -> "ThresholdPolicy":
        """Guard band of +/- ``band`` around the midpoint between the predicted
        position-case visibility and the momentum case's 1.0."""
        mid = 0.5 * (predicted_position_visibility + 1.0)
        return cls(max(0.0, mid - band), min(1.0, mid + band))


def infer_alice_bit(pattern: IntensityPattern, policy: ThresholdPolicy) -> str:
    """Read Alice's setting off the fringe contrast of Bob's pattern."""
    v = pattern.visibility
    if v is None or math.isnan(v):
        return "indeterminate"
    if v > policy.v_hi:
        return "momentum"
    if v < policy.v_lo:
        return "position"
    return "indeterminate"


# ---------------------------------------------------------------------------
# Monte-Carlo counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountRecord:
    """Binned detection events with a bootstrapped visibility estimate."""

    n_events: int
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    estimated_visibility: float
    visibility_ci95: tuple[float, float]
    seed: int
    rng_name: str = RNG_NAME

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.bin_counts, dtype=np.int64)
        if counts.sum() != self.n_events:
            raise ValueError("bin counts must sum to n_events")
        edges.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "bin_counts", counts)


def _harmonic_visibility(counts: np.ndarray, centers: np.ndarray, period: float) -> float:
    """First-harmonic fringe contrast of binned counts.

    For a density proportional to 1 + V cos(2 pi x / period) the complex
    first harmonic of the counts has modulus n V / 2 (up to the bin-width
    sinc factor, divided out here).
    """
    n = counts.sum()
    if n == 0:
        return 0.0
    phases = np.exp(2j * np.pi * centers / period)
    width_correction = np.sinc((centers[1] - centers[0]) / period) if centers.size > 1 else 1.0
    return float(2.0 * np.abs(counts @ phases) / (n * width_correction))


def monte_carlo_counts(
    pattern: IntensityPattern,
    n_events: int,
    seed: int,
    bins_per_fringe: int = 20,
    n_bootstrap: int = 1000,
) -> CountRecord:
    """Sample detection positions from the pattern and estimate visibility.

    Positions are drawn by inverting the piecewise-linear CDF of the sampled
    pattern, binned at ``bins_per_fringe`` bins per fringe period, and the
    95% interval comes from a multinomial bootstrap over the bins (1000
    resamples). Deterministic for a given seed (counter-based generator).
    """
    if n_events < 100:
        raise ValueError("need at least 100 events for a meaningful estimate")
    if pattern.fringe_period is None:
        raise ValueError("pattern carries no fringe period; cannot bin or estimate contrast")
    y = pattern.intensity
    xs = pattern.positions
    cell = np.diff(xs) * 0.5 * (y[1:] + y[:-1])
    total = float(cell.sum())
    if not total > 0.0:
        raise ValueError("pattern is not normalizable (zero or negative total flux)")
    cdf = np.concatenate([[0.0], np.cumsum(cell)]) / total

    rng = np.random.Generator(np.random.Philox(seed))
    positions = np.interp(rng.random(n_events), cdf, xs)

    n_bins = max(4, round(pattern.span / (pattern.fringe_period / bins_per_fringe)))
    edges = np.linspace(xs[0], xs[-1], n_bins + 1)
    counts, _ = np.histogram(positions, edges)
    centers = 0.5 * (edges[:-1] + edges[1:])

    estimate = min(1.0, _harmonic_visibility(counts, centers, pattern.fringe_period))

    probs = counts / counts.sum()
    resamples = rng.multinomial(n_events, probs, size=n_bootstrap)
    boot = np.array(
        [_harmonic_visibility(row, centers, pattern.fringe_period) for row in resamples]
    )
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return CountRecord(n_events, edges, counts, estimate, (float(lo), float(hi)), seed)


def count_record_to_csv(record: CountRecord) -> str:
    lines = ["bin_left_m,bin_right_m,count"]
    for left, right, c in zip(record.bin_edges[:-1], record.bin_edges[1:], record.bin_counts):
        lines.append(f"{left:.17g},{right:.17g},{int(c)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Protocol runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProtocolResult:
    """Everything one protocol run produces."""

    alice_setting: str
    pattern: IntensityPattern
    conditional_bob_state: DensityOperator
    inferred_bit: str
    counts: CountRecord | None
    regime: RegimeDiagnostic
    predicted_position_visibility: float


def conditional_state(setting: str, epsilon: float = 0.1) -> DensityOperator:
    """Two-photon state Bob's filtered counts sample, for one Alice setting.

    Position conditioning yields the equal mixture of the two surviving
    horizontal pair terms; momentum conditioning leaves their coherent
    superposition (the oblique branch is annihilated by the filter).
    """
    state = canonical_spdc_state(epsilon).normalized()
    return conditional_mixture(
        state, alice_branch_projectors(setting), direction_filter(), basis=CANONICAL_PAIRS
    )


def detected_pair_fraction(setting: str, epsilon: float = 0.1) -> float:
    """Fraction of produced pairs that survive Alice's branching plus Bob's filter."""
    state = canonical_spdc_state(epsilon).normalized()
    return sum(branch_weights(state, alice_branch_projectors(setting), direction_filter()))


def run_protocol(
    layout: ExperimentLayout,
    alice_setting: str,
    weight_profile: WeightProfile | None = None,
    *,
    epsilon: float = 0.1,
    alpha: float = 0.5,
    intensity_scale: float = 1.0,
    grid_points: int = 2001,
    half_width_fringes: float = 5.0,
    n_events: int = 0,
    seed: int = 12345,
    threshold_policy: ThresholdPolicy | None = None,
) -> ProtocolResult:
    """One full run: pattern, conditional state, inferred bit, optional counts.

    Refuses layouts that do not pass the diffractive-hole validation; the
    analysis behind the averaged patterns assumes that regime.
    """
    if alice_setting not in ALICE_SETTINGS:
        raise ValueError(f"unknown Alice setting {alice_setting!r}")
    diag = validate_small_hole_regime(layout)
    if not diag.passed:
        raise RegimeError(f"small-hole regime validation: {diag.message}", diag)
    profile = weight_profile if weight_profile is not None else flat_profile()

    pattern = single_count_intensity(
        layout,
        alice_setting,
        profile,
        epsilon=epsilon,
        alpha=alpha,
        intensity_scale=intensity_scale,
        grid_points=grid_points,
        half_width_fringes=half_width_fringes,
    )
    predicted = weighted_mean_sine(profile, layout.phi0)
    policy = threshold_policy if threshold_policy is not None else ThresholdPolicy.centered(predicted)
    counts = monte_carlo_counts(pattern, n_events, seed) if n_events else None
    return ProtocolResult(
        alice_setting,
        pattern,
        conditional_state(alice_setting, epsilon),
        infer_alice_bit(pattern, policy),
        counts,
        diag,
        predicted,
    )


def large_hole_variant(
    layout: ExperimentLayout,
    *,
    epsilon: float = 0.1,
    intensity_scale: float = 1.0,
    grid_points: int = 2001,
    half_width_fringes: float = 5.0,
    n_events: int = 0,
    seed: int = 12345,
    threshold_policy: ThresholdPolicy | None = None,
) -> tuple[ProtocolResult, ProtocolResult]:
    """The geometric-hole demonstration: zero diffraction at the pinhole.

    With no diffraction, a position measurement leaves each idler ray
    traversing a single slit (the relay images the source points onto the
    slit openings, so this presumes source_half_separation = s/2): the
    pattern is flat with visibility exactly 0. A momentum measurement leaves
    the idler coherently spread over both slits: full fringes, visibility
    exactly 1. Returns (position run, momentum run).
    """
    diag = validate_large_hole_regime(layout)
    if not diag.passed:
        raise RegimeError(f"large-hole regime validation: {diag.message}", diag)
    policy = threshold_policy if threshold_policy is not None else ThresholdPolicy.centered(0.0)

    xs = screen_positions(layout, grid_points, half_width_fringes)
    flat = np.full_like(xs, intensity_scale)
    fringes = intensity_scale * (1.0 + np.cos(layout.wavenumber * path_difference(layout, xs)))

    results = []
    for setting, samples, visibility in (
        ("position", flat, 0.0),
        ("momentum", fringes, 1.0),
    ):
        pattern = IntensityPattern(
            xs,
            samples,
            visibility,
            composite_simpson(samples, xs),
            setting,
            layout.fringe_period,
        )
        counts = monte_carlo_counts(pattern, n_events, seed) if n_events else None
        results.append(
            ProtocolResult(
                setting,
                pattern,
                conditional_state(setting, epsilon),
                infer_alice_bit(pattern, policy),
                counts,
                diag,
                0.0,
            )
        )
    return results[0], results[1]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _density_to_json(rho: DensityOperator) -> dict:
    labels = []
    for entry in rho.basis:
        if isinstance(entry, tuple):
            labels.append(f"{entry[0].label}*{entry[1].label}")
        else:
            labels.append(entry.label)
    return {
        "basis": labels,
        "matrix_real": rho.matrix.real.tolist(),
        "matrix_imag": rho.matrix.imag.tolist(),
    }


def protocol_result_to_json_dict(result: ProtocolResult, config_echo: dict | None = None) -> dict:
    from .correlation import pattern_summary

    out = {
        "alice_setting": result.alice_setting,
        "inferred_bit": result.inferred_bit,
        "pattern": pattern_summary(result.pattern),
        "predicted_position_visibility": result.predicted_position_visibility,
        "regime": {
            "name": result.regime.name,
            "status": result.regime.status,
            "ratios": result.regime.ratios,
            "message": result.regime.message,
        },
        "conditional_bob_state": _density_to_json(result.conditional_bob_state),
    }
    if result.counts is not None:
        out["counts"] = {
            "n_events": result.counts.n_events,
            "estimated_visibility": result.counts.estimated_visibility,
            "visibility_ci95": list(result.counts.visibility_ci95),
            "seed": result.counts.seed,
            "rng": result.counts.rng_name,
            "n_bins": int(result.counts.bin_counts.size),
        }
    if config_echo is not None:
        out["config"] = config_echo
    return out
