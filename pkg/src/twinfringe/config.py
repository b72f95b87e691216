"""Run configuration: strict key = value files with sections.

Unknown sections or keys are hard errors (no silently ignored typos), every
numeric field is validated against its module's preconditions before any
computation starts, and the fully resolved configuration can be echoed back
out as a file that reparses to the identical run. Lengths are meters,
angles are degrees in files (radians internally).
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .correlation import (
    WeightProfile,
    flat_profile,
    point_mass_profile,
    sin_squared_profile,
    tabulated_profile,
)
from .errors import ConfigError
from .geometry import ExperimentLayout

ENV_PREFIX = "TWINFRINGE"

# section -> key -> (python type, required, default)
_SCHEMA: dict[str, dict[str, tuple]] = {
    "layout": {
        "alice_focal_length_m": (float, True, None),
        "filter_focal_length_m": (float, True, None),
        "filter_lens_radius_m": (float, True, None),
        "hole_diameter_m": (float, True, None),
        "slit_separation_m": (float, True, None),
        "source_to_slits_m": (float, True, None),
        "slits_to_screen_m": (float, True, None),
        "pump_wavelength_m": (float, False, 351.1e-9),
        "dc_wavelength_m": (float, False, None),
        "source_half_separation_m": (float, False, 1e-3),
        "min_incidence_angle_deg": (float, False, None),
    },
    "beam": {
        "epsilon": (float, False, 0.1),
        "alpha": (float, False, 0.5),
        "intensity_scale": (float, False, 1.0),
        "weight_profile": (str, False, "flat"),
    },
    "screen": {
        "grid_points": (int, False, 2001),
        "half_width_fringes": (float, False, 5.0),
    },
    "run": {
        "protocol": (str, False, "both"),
        "events": (int, False, 0),
        "seed": (int, False, 12345),
    },
    "oracle": {
        "n_source_points": (int, False, 2),
        "n_alice_points": (int, False, 64),
        "include_filter": (bool, False, True),
        "focal_window_periods": (float, False, 16.0),
        "tolerance": (float, False, 1e-12),
    },
    "output": {
        "directory": (str, False, "out"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Fully validated configuration for one invocation."""

    layout: ExperimentLayout
    epsilon: float
    alpha: float
    intensity_scale: float
    weight_profile: WeightProfile
    weight_profile_spec: str
    grid_points: int
    half_width_fringes: float
    protocol: str
    events: int
    seed: int
    n_source_points: int
    n_alice_points: int
    include_filter: bool
    focal_window_periods: float
    tolerance: float
    output_dir: str


def default_config_text() -> str:
    """A minimal, fully working example configuration."""
    return """\
# Bench geometry (meters; angles in degrees)
[layout]
alice_focal_length_m = 0.5
filter_focal_length_m = 0.1
filter_lens_radius_m = 0.02
hole_diameter_m = 1e-6
slit_separation_m = 1e-4
source_to_slits_m = 1.0
slits_to_screen_m = 1.0
pump_wavelength_m = 351.1e-9
source_half_separation_m = 1e-3
min_incidence_angle_deg = 30

[beam]
epsilon = 0.1
alpha = 0.5
intensity_scale = 1.0
weight_profile = flat

[screen]
grid_points = 2001
half_width_fringes = 5.0

[run]
protocol = both
events = 0
seed = 12345

[oracle]
n_source_points = 2
n_alice_points = 64
include_filter = true
focal_window_periods = 16.0
tolerance = 1e-12

[output]
directory = out
"""


def _line_of(text: str, needle: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(needle):
            return i
    return None


def _coerce(raw: str, typ, section: str, key: str, line: int | None):
    raw = raw.strip()
    try:
        if typ is bool:
            lowered = raw.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: cannot parse {raw!r} as {typ.__name__}", line
        ) from None


def _check_range(section: str, key: str, value, line: int | None):
    positive = {
        ("layout", k) for k in _SCHEMA["layout"] if k.endswith("_m")
    } | {("beam", "intensity_scale"), ("screen", "half_width_fringes"),
         ("oracle", "focal_window_periods"), ("oracle", "tolerance")}
    if (section, key) in positive and not value > 0:
        raise ConfigError(f"[{section}] {key} must be positive, got {value}", line)
    if (section, key) == ("beam", "epsilon") and not 0 < value < 1:
        raise ConfigError(f"[beam] epsilon must be in (0, 1), got {value}", line)
    if (section, key) == ("beam", "alpha") and not 0 < value <= 1:
        raise ConfigError(f"[beam] alpha must be in (0, 1], got {value}", line)
    if (section, key) == ("layout", "min_incidence_angle_deg") and not 0 < value < 90:
        raise ConfigError(f"[layout] min_incidence_angle_deg must be in (0, 90), got {value}", line)
    if (section, key) == ("screen", "grid_points") and value < 2:
        raise ConfigError(f"[screen] grid_points must be at least 2, got {value}", line)
    if (section, key) == ("run", "events") and value < 0:
        raise ConfigError(f"[run] events must be nonnegative, got {value}", line)
    if (section, key) == ("run", "protocol") and value not in ("position", "momentum", "both"):
        raise ConfigError(f"[run] protocol must be position, momentum or both, got {value!r}", line)
    if (section, key) == ("oracle", "n_source_points") and value < 2:
        raise ConfigError(f"[oracle] n_source_points must be at least 2, got {value}", line)
    if (section, key) == ("oracle", "n_alice_points") and value < 1:
        raise ConfigError(f"[oracle] n_alice_points must be at least 1, got {value}", line)


def _parse_weight_profile(spec: str, base_dir: Path, line: int | None) -> WeightProfile:
    if spec == "flat":
        return flat_profile()
    if spec == "sin2":
        return sin_squared_profile()
    if spec.startswith("point:"):
        try:
            angle_deg = float(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad point-mass weight spec {spec!r}", line) from None
        if not 0 < angle_deg < 180:
            raise ConfigError(f"point-mass angle must be in (0, 180) degrees, got {angle_deg}", line)
        return point_mass_profile(math.radians(angle_deg))
    if spec.startswith("table:"):
        path = Path(spec.split(":", 1)[1])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"weight table {path} does not exist", line)
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise ConfigError(f"weight table {path} must have two columns: phi_deg, weight", line)
        return tabulated_profile(np.radians(data[:, 0]), data[:, 1], name=f"table:{path}")
    raise ConfigError(
        f"unknown weight_profile {spec!r} (expected flat, sin2, point:<deg> or table:<path>)", line
    )


def _apply_env_overrides(values: dict, text: str, env) -> None:
    for section, keys in _SCHEMA.items():
        for key, (typ, _required, _default) in keys.items():
            name = f"{ENV_PREFIX}_{section.upper()}_{key.upper()}"
            if name in env:
                values[(section, key)] = _coerce(env[name], typ, section, key, None)


def parse_config(path: str | os.PathLike, env=None) -> RunConfig:
    """Parse and validate a configuration file.

    Environment variables named TWINFRINGE_<SECTION>_<KEY> override file
    values (CI convenience). Raises ConfigError with a line number for
    unknown keys, type errors and range violations.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text()
    return parse_config_text(text, base_dir=path.parent, env=env)


def parse_config_text(text: str, base_dir: str | os.PathLike = ".", env=None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"malformed config: {exc.message}", line) from None

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown section [{section}]", _line_of(text, f"[{section}]")
            )
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {key!r} in section [{section}]", _line_of(text, key)
                )

    values: dict[tuple[str, str], object] = {}
    for section, keys in _SCHEMA.items():
        for key, (typ, required, default) in keys.items():
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                values[(section, key)] = _coerce(raw, typ, section, key, _line_of(text, key))
            elif required:
                raise ConfigError(
                    f"missing required key {key!r} in section [{section}]",
                    _line_of(text, f"[{section}]") or 1,
                )
            else:
                values[(section, key)] = default

    if env is None:
        env = os.environ
    _apply_env_overrides(values, text, env)

    for (section, key), value in values.items():
        if value is not None:
            _check_range(section, key, value, _line_of(text, key))

    min_angle = values[("layout", "min_incidence_angle_deg")]
    try:
        layout = ExperimentLayout(
            focal_length_alice=values[("layout", "alice_focal_length_m")],
            focal_length_filter=values[("layout", "filter_focal_length_m")],
            lens_radius=values[("layout", "filter_lens_radius_m")],
            hole_diameter=values[("layout", "hole_diameter_m")],
            slit_separation=values[("layout", "slit_separation_m")],
            source_to_slits=values[("layout", "source_to_slits_m")],
            screen_distance=values[("layout", "slits_to_screen_m")],
            pump_wavelength=values[("layout", "pump_wavelength_m")],
            dc_wavelength=values[("layout", "dc_wavelength_m")],
            source_half_separation=values[("layout", "source_half_separation_m")],
            min_incidence_angle=math.radians(min_angle) if min_angle is not None else None,
        )
    except ValueError as exc:
        raise ConfigError(f"[layout] {exc}") from None

    spec = values[("beam", "weight_profile")]
    profile = _parse_weight_profile(spec, Path(base_dir), _line_of(text, "weight_profile"))

    return RunConfig(
        layout=layout,
        epsilon=values[("beam", "epsilon")],
        alpha=values[("beam", "alpha")],
        intensity_scale=values[("beam", "intensity_scale")],
        weight_profile=profile,
        weight_profile_spec=spec,
        grid_points=values[("screen", "grid_points")],
        half_width_fringes=values[("screen", "half_width_fringes")],
        protocol=values[("run", "protocol")],
        events=values[("run", "events")],
        seed=values[("run", "seed")],
        n_source_points=values[("oracle", "n_source_points")],
        n_alice_points=values[("oracle", "n_alice_points")],
        include_filter=values[("oracle", "include_filter")],
        focal_window_periods=values[("oracle", "focal_window_periods")],
        tolerance=values[("oracle", "tolerance")],
        output_dir=values[("output", "directory")],
    )


def resolved_dict(cfg: RunConfig) -> dict:
    """The fully resolved configuration, as echoed into result files."""
    return {
        "layout": {
            "alice_focal_length_m": cfg.layout.focal_length_alice,
            "filter_focal_length_m": cfg.layout.focal_length_filter,
            "filter_lens_radius_m": cfg.layout.lens_radius,
            "hole_diameter_m": cfg.layout.hole_diameter,
            "slit_separation_m": cfg.layout.slit_separation,
            "source_to_slits_m": cfg.layout.source_to_slits,
            "slits_to_screen_m": cfg.layout.screen_distance,
            "pump_wavelength_m": cfg.layout.pump_wavelength,
            "dc_wavelength_m": cfg.layout.lambda_dc,
            "source_half_separation_m": cfg.layout.source_half_separation,
            "min_incidence_angle_deg": math.degrees(cfg.layout.phi0),
        },
        "beam": {
            "epsilon": cfg.epsilon,
            "alpha": cfg.alpha,
            "intensity_scale": cfg.intensity_scale,
            "weight_profile": cfg.weight_profile_spec,
        },
        "screen": {
            "grid_points": cfg.grid_points,
            "half_width_fringes": cfg.half_width_fringes,
        },
        "run": {
            "protocol": cfg.protocol,
            "events": cfg.events,
            "seed": cfg.seed,
        },
        "oracle": {
            "n_source_points": cfg.n_source_points,
            "n_alice_points": cfg.n_alice_points,
            "include_filter": cfg.include_filter,
            "focal_window_periods": cfg.focal_window_periods,
            "tolerance": cfg.tolerance,
        },
        "output": {
            "directory": cfg.output_dir,
        },
    }


def config_to_ini(resolved: dict) -> str:
    """Render a resolved configuration back into a parseable file.

    Floats are written with repr so the round trip is bit-exact.
    """
    lines = []
    for section, keys in resolved.items():
        lines.append(f"[{section}]")
        for key, value in keys.items():
            if isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{key} = {rendered}")
        lines.append("")
    return "\n".join(lines)
