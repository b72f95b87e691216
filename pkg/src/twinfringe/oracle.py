"""Independent brute-force verification machinery.

Nothing here reuses the closed-form pattern expressions: angle averages are
done by adaptive quadrature on the caller's integrand, and screen patterns
are rebuilt from a discretized model that propagates exact Euclidean path
phases from every source point to every Alice detector point and to Bob's
screen. The headline check marginalizes Bob's pattern over a complete
Alice measurement and verifies that his statistics cannot depend on her
setting, then runs the filtered (incomplete) configuration and reports the
visibility gap that survives it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._integrate import adaptive_simpson, composite_simpson
from .correlation import (
    IntensityPattern,
    WeightProfile,
    flat_profile,
    grid_visibility,
    pattern_summary,
    single_count_intensity,
    weighted_mean_sine,
)
from .elements import pinhole_diffraction
from .geometry import ExperimentLayout, incidence_angle_at, screen_positions


def quadrature_average(
    integrand,
    weight: WeightProfile,
    interval: tuple[float, float],
    abs_tol: float = 1e-9,
) -> float:
    """Weighted mean of the integrand over an angle interval.

    Adaptive Simpson on both the weighted integrand and the weight norm;
    a degenerate interval or a point-mass weight reduces to a single
    evaluation. Raises ConvergenceError when the tolerance is unreachable.
    """
    lo, hi = interval
    if weight.atom is not None:
        if not lo - 1e-12 <= weight.atom <= hi + 1e-12:
            raise ValueError("point-mass weight lies outside the interval")
        return float(integrand(weight.atom))
    if hi - lo < 1e-12:
        return float(integrand(0.5 * (lo + hi)))
    norm = adaptive_simpson(weight.density, lo, hi, abs_tol)
    if not norm > 0.0:
        raise ValueError("weight integrates to zero on the interval")
    total = adaptive_simpson(
        lambda phi: integrand(phi) * weight.density(phi), lo, hi, abs_tol * norm
    )
    return float(total / norm)


# ---------------------------------------------------------------------------
# Discretized continuum model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContinuumModel:
    """Discretization of the source segment and of Alice's detection plane.

    ``n_source_points`` samples the emitting segment between the two nominal
    source points (2 reproduces the discrete-mode treatment); focal-plane
    marginalization samples ``n_alice_points`` detector positions across a
    window of ``focal_window_periods`` interference periods of the widest
    source-point pair. ``max_cells`` caps n_source * n_alice * grid so a
    mistyped config cannot exhaust memory.
    """

    n_source_points: int = 2
    n_alice_points: int = 64
    include_filter: bool = True
    alice_plane: str | None = None   # None: chosen by the protocol setting
    focal_window_periods: float = 16.0
    max_cells: int = 50_000_000

    def __post_init__(self):
        if self.n_source_points < 2:
            raise ValueError("need at least 2 source points")
        if self.n_alice_points < 1:
            raise ValueError("need at least 1 Alice detector point")
        if self.alice_plane not in (None, "image", "focal"):
            raise ValueError(f"unknown alice_plane {self.alice_plane!r}")


def _source_offsets(layout: ExperimentLayout, n: int) -> np.ndarray:
    a = layout.source_half_separation
    return np.linspace(-a, a, n)


def _idler_amplitudes(
    model: ContinuumModel, layout: ExperimentLayout, xs: np.ndarray, alpha: float
) -> np.ndarray:
    """Idler amplitude from each source point to each screen position.

    Filter in place: only the horizontal ray survives, reaching the slits
    through the relay and splitting per the pinhole diffraction rule.
    Filter removed: the idler propagates freely from the source to both
    slit openings. All phases are exact Euclidean path lengths.
    """
    k = layout.wavenumber
    d = layout.screen_distance
    offsets = _source_offsets(layout, model.n_source_points)
    share = 1.0 / math.sqrt(2.0 * offsets.size)
    u_path = np.hypot(xs - layout.slit_u_offset, d)
    v_path = np.hypot(xs - layout.slit_v_offset, d)

    rows = []
    if model.include_filter:
        g = layout.focal_length_filter
        run = layout.source_to_slits - 4.0 * g
        hole_to_lens2 = math.hypot(g, 0.5 * layout.slit_separation)
        for y in offsets:
            phi = incidence_angle_at(layout, float(y))
            split = pinhole_diffraction(phi, alpha)
            relay = 2.0 * g + math.hypot(g, float(y)) + hole_to_lens2 + run
            rows.append(
                share
                * (
                    split.into_u * np.exp(1j * k * (relay + u_path))
                    + split.into_v * np.exp(1j * k * (relay + v_path))
                )
            )
    else:
        for y in offsets:
            to_u = math.hypot(layout.source_to_slits, layout.slit_u_offset - float(y))
            to_v = math.hypot(layout.source_to_slits, layout.slit_v_offset - float(y))
            rows.append(
                share * (np.exp(1j * k * (to_u + u_path)) + np.exp(1j * k * (to_v + v_path)))
            )
    return np.asarray(rows)


def _alice_outcome_matrix(
    model: ContinuumModel, layout: ExperimentLayout, alice_setting: str
) -> np.ndarray:
    """Outcome-amplitude matrix X[m, j]: source point j detected in outcome m.

    Image plane: the lens focuses each source point onto its own image
    pixel, so the matrix is diagonal phases (one outcome per source point).
    Focal plane, filter in place: the surviving horizontal signal rays all
    converge on the axis, a single outcome. Focal plane, filter removed:
    every source point illuminates every sampled focal position through the
    lens-center ray, with exact path phases.
    """
    k = layout.wavenumber
    f = layout.focal_length_alice
    offsets = _source_offsets(layout, model.n_source_points)
    plane = model.alice_plane or ("image" if alice_setting == "position" else "focal")

    if plane == "image":
        phases = [
            math.hypot(2.0 * f, 2.0 * abs(float(y))) + 2.0 * f for y in offsets
        ]
        return np.diag([np.exp(1j * k * L) for L in phases])

    if model.include_filter:
        row = [np.exp(1j * k * (2.0 * f + math.hypot(f, float(y)))) for y in offsets]
        return np.asarray([row])

    n = offsets.size
    pair_gap = 2.0 * layout.source_half_separation
    period = layout.lambda_dc * f / pair_gap
    window = model.focal_window_periods * period
    points = np.linspace(-window, window, model.n_alice_points)
    X = np.empty((points.size, n), dtype=complex)
    for m, ym in enumerate(points):
        for j, yj in enumerate(offsets):
            L = math.hypot(2.0 * f, 2.0 * ym) + math.hypot(f, float(yj) + ym)
            X[m, j] = np.exp(1j * k * L)
    return X


def _lowdin_complete(X: np.ndarray) -> np.ndarray:
    """Rescale an outcome set so it resolves the identity exactly.

    G = X^dag X is the Gram matrix of the outcome amplitudes over the source
    modes; X G^(-1/2) has an exactly complete POVM, which is what "treating
    Alice's outcomes as a complete measurement" means operationally.
    """
    gram = X.conj().T @ X
    w, v = np.linalg.eigh(gram)
    if w[0] <= 1e-12 * w[-1]:
        raise ValueError(
            "Alice outcome set does not span the source modes; widen the detector window"
        )
    inv_sqrt = (v * (1.0 / np.sqrt(w))) @ v.conj().T
    return X @ inv_sqrt


def _gram_offdiag_fraction(X: np.ndarray) -> float:
    gram = X.conj().T @ X
    diag_scale = float(np.mean(np.abs(np.diag(gram))))
    off = gram - np.diag(np.diag(gram))
    return float(np.max(np.abs(off)) / diag_scale) if diag_scale > 0 else 0.0


def continuum_marginal_pattern(
    model: ContinuumModel,
    layout: ExperimentLayout,
    alice_setting: str,
    *,
    alpha: float = 0.5,
    grid_points: int = 1001,
    half_width_fringes: float = 5.0,
    complete: bool = False,
) -> IntensityPattern:
    """Bob's single-count pattern with Alice's outcomes marginalized.

    Probability (not amplitude) summation over outcomes, per the measurement
    postulate. With ``complete=True`` the outcome set is first completed
    (see ``_lowdin_complete``), which makes the marginal provably
    setting-independent; without it the raw detector-point set is used.
    """
    if alice_setting not in ("position", "momentum"):
        raise ValueError(f"unknown Alice setting {alice_setting!r}")
    cells = model.n_source_points * model.n_alice_points * grid_points
    if cells > model.max_cells:
        raise ValueError(
            f"model requires {cells} cells, above the cap of {model.max_cells}"
        )
    xs = screen_positions(layout, grid_points, half_width_fringes)
    B = _idler_amplitudes(model, layout, xs, alpha)
    X = _alice_outcome_matrix(model, layout, alice_setting)
    if complete:
        X = _lowdin_complete(X)
    joint = X @ B
    samples = np.add.reduce(np.abs(joint) ** 2, axis=0)
    visibility = grid_visibility(xs, samples, layout.fringe_period)
    return IntensityPattern(
        xs,
        samples,
        visibility,
        composite_simpson(samples, xs),
        "custom",
        layout.fringe_period,
    )


def no_signaling_check(
    layout: ExperimentLayout,
    model: ContinuumModel,
    tolerance: float = 1e-12,
    *,
    weight_profile: WeightProfile | None = None,
    alpha: float = 0.5,
    epsilon: float = 0.1,
    grid_points: int = 1001,
    half_width_fringes: float = 5.0,
) -> dict:
    """Marginal-statistics comparison between Alice's two settings.

    Part one removes the filter and marginalizes over a complete Alice
    measurement: the sup-norm difference between Bob's patterns for the two
    settings must vanish (the content of the no-signaling theorem). Part two
    runs the filtered, incomplete configuration the protocol actually uses
    and reports the visibility gap between the settings, together with its
    predicted value 1 - <sin phi>.

    Always returns a report; never raises on a failed comparison.
    """
    unfiltered = replace(model, include_filter=False)
    pattern_a = continuum_marginal_pattern(
        unfiltered, layout, "position",
        alpha=alpha, grid_points=grid_points, half_width_fringes=half_width_fringes,
        complete=True,
    )
    pattern_b = continuum_marginal_pattern(
        unfiltered, layout, "momentum",
        alpha=alpha, grid_points=grid_points, half_width_fringes=half_width_fringes,
        complete=True,
    )
    peak = float(max(pattern_a.intensity.max(), pattern_b.intensity.max()))
    max_abs_diff = float(np.max(np.abs(pattern_a.intensity - pattern_b.intensity)) / peak)

    raw_focal_offdiag = _gram_offdiag_fraction(
        _alice_outcome_matrix(unfiltered, layout, "momentum")
    )

    profile = weight_profile if weight_profile is not None else flat_profile()
    filtered_p = single_count_intensity(
        layout, "position", profile, epsilon=epsilon, alpha=alpha,
        grid_points=grid_points, half_width_fringes=half_width_fringes,
    )
    filtered_m = single_count_intensity(
        layout, "momentum", profile, epsilon=epsilon, alpha=alpha,
        grid_points=grid_points, half_width_fringes=half_width_fringes,
    )
    mean_sine = weighted_mean_sine(profile, layout.phi0)

    return {
        "setting_a_pattern": pattern_summary(pattern_a),
        "setting_b_pattern": pattern_summary(pattern_b),
        "max_abs_diff": max_abs_diff,
        "visibility_a": pattern_a.visibility,
        "visibility_b": pattern_b.visibility,
        "pass": bool(max_abs_diff < tolerance),
        "tolerance": tolerance,
        "uncompleted_focal_gram_offdiag": raw_focal_offdiag,
        "filtered": {
            "visibility_position": float(filtered_p.visibility),
            "visibility_momentum": float(filtered_m.visibility),
            "visibility_difference": float(filtered_m.visibility - filtered_p.visibility),
            "predicted_difference": 1.0 - mean_sine,
            "weight_profile": profile.name,
        },
    }
