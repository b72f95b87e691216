"""twinfringe: a delayed-choice EPR double-slit simulator.

Computes Bob's filtered single-count interference patterns conditioned on
Alice's choice of a position or momentum measurement, the projector algebra
behind them, and an independent brute-force oracle that checks every closed
form and the no-signaling marginals at desk scale.
"""

__version__ = "0.1.0"

from .config import RunConfig, parse_config
from .correlation import (
    FieldOperator,
    IntensityPattern,
    WeightProfile,
    alice_field_momentum,
    alice_field_position,
    bob_field,
    coincidence_probability,
    flat_profile,
    fringe_visibility,
    intensity_ratio,
    point_mass_profile,
    sin_squared_profile,
    single_count_intensity,
    tabulated_profile,
    weighted_mean_sine,
)
from .elements import (
    AliceOutcome,
    DetectionPlane,
    DetectionPoint,
    SlitAmplitudes,
    alice_branch_projectors,
    alice_lens_outcome,
    direction_filter,
    pinhole_diffraction,
    propagation_phase,
    signal_direction_projector,
    signal_source_projector,
)
from .errors import (
    CausalOrderError,
    ConfigError,
    ConvergenceError,
    EmptyEnsembleError,
    RegimeError,
    UndefinedVisibilityError,
)
from .geometry import (
    EffectiveSpeed,
    ExperimentLayout,
    RegimeDiagnostic,
    effective_signal_speed,
    incidence_angle_phi,
    path_difference,
    screen_positions,
    validate_large_hole_regime,
    validate_small_hole_regime,
)
from .modes import (
    CANONICAL_PAIRS,
    IDLER_MODES,
    SIGNAL_MODES,
    DensityOperator,
    Direction,
    Mode,
    Party,
    Projector,
    SourcePoint,
    TwoPhotonState,
    apply_projector,
    canonical_spdc_state,
    conditional_mixture,
    density_from_state,
    entangled_partner,
    identity_projector,
    partial_trace_signal,
    single_mode_probability,
    trace_distance,
)
from .oracle import ContinuumModel, continuum_marginal_pattern, no_signaling_check, quadrature_average
from .scenarios import (
    CountRecord,
    ProtocolResult,
    ThresholdPolicy,
    infer_alice_bit,
    large_hole_variant,
    monte_carlo_counts,
    run_protocol,
)
