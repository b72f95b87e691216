"""Command-line entry point.

Subcommands: run (patterns + result JSON), oracle (no-signaling report),
sweep (one parameter swept into a summary table), validate (regime and
config diagnostics). Single-threaded orchestration; heavy lifting lives in
the computation modules. Exit codes: 0 success, 2 config error, 3 regime
refusal, 4 numerical non-convergence, 1 anything else; failures also print
a machine-readable error JSON.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, config_to_ini, parse_config, resolved_dict
from .correlation import intensity_ratio, pattern_to_csv, single_count_intensity
from .errors import ConfigError, ConvergenceError, RegimeError
from .geometry import validate_large_hole_regime, validate_small_hole_regime
from .oracle import ContinuumModel, no_signaling_check
from .scenarios import count_record_to_csv, protocol_result_to_json_dict, run_protocol

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_CONVERGENCE = 4

SWEEPABLE = ("phi0_deg", "epsilon", "alpha", "hole_diameter_m", "slit_separation_m")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinfringe",
        description="Delayed-choice EPR double-slit simulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to the run configuration file")
        p.add_argument("--out", help="output directory (overrides [output] directory)")
        p.add_argument("--seed", type=int, help="override [run] seed")
        p.add_argument("--grid", type=int, help="override [screen] grid_points")

    p_run = sub.add_parser("run", help="compute Bob's patterns for one or both settings")
    common(p_run)
    p_run.add_argument(
        "--protocol", choices=("position", "momentum", "both"), help="override [run] protocol"
    )
    p_run.add_argument("--events", type=int, help="override [run] events (Monte-Carlo counts)")

    p_oracle = sub.add_parser("oracle", help="run the brute-force no-signaling check")
    common(p_oracle)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter and tabulate visibilities")
    common(p_sweep)
    p_sweep.add_argument("--parameter", required=True, choices=SWEEPABLE)
    p_sweep.add_argument("--start", type=float, required=True)
    p_sweep.add_argument("--stop", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, default=8)

    p_val = sub.add_parser("validate", help="parse the config and report regime diagnostics")
    common(p_val)
    return parser


def _load(args) -> RunConfig:
    cfg = parse_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.grid is not None:
        if args.grid < 2:
            raise ConfigError(f"--grid must be at least 2, got {args.grid}")
        overrides["grid_points"] = args.grid
    if getattr(args, "protocol", None) is not None:
        overrides["protocol"] = args.protocol
    if getattr(args, "events", None) is not None:
        if args.events < 0:
            raise ConfigError(f"--events must be nonnegative, got {args.events}")
        overrides["events"] = args.events
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    print(f"wrote {path}")


def command_run(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    protocols = ("position", "momentum") if cfg.protocol == "both" else (cfg.protocol,)
    echo = resolved_dict(cfg)
    for protocol in protocols:
        result = run_protocol(
            cfg.layout,
            protocol,
            cfg.weight_profile,
            epsilon=cfg.epsilon,
            alpha=cfg.alpha,
            intensity_scale=cfg.intensity_scale,
            grid_points=cfg.grid_points,
            half_width_fringes=cfg.half_width_fringes,
            n_events=cfg.events,
            seed=cfg.seed,
        )
        _write(out / f"pattern_{protocol}.csv", pattern_to_csv(result.pattern))
        _write(
            out / f"result_{protocol}.json",
            json.dumps(protocol_result_to_json_dict(result, echo), indent=2, sort_keys=True) + "\n",
        )
        if result.counts is not None:
            _write(out / f"counts_{protocol}.csv", count_record_to_csv(result.counts))
        print(
            f"{protocol}: visibility={result.pattern.visibility:.6f} "
            f"inferred={result.inferred_bit}"
        )
    _write(out / "config_resolved.ini", config_to_ini(echo))
    return EXIT_OK


def command_oracle(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    model = ContinuumModel(
        n_source_points=cfg.n_source_points,
        n_alice_points=cfg.n_alice_points,
        include_filter=cfg.include_filter,
        focal_window_periods=cfg.focal_window_periods,
    )
    report = no_signaling_check(
        cfg.layout,
        model,
        cfg.tolerance,
        weight_profile=cfg.weight_profile,
        alpha=cfg.alpha,
        epsilon=cfg.epsilon,
        grid_points=min(cfg.grid_points, 2001),
        half_width_fringes=cfg.half_width_fringes,
    )
    report["config"] = resolved_dict(cfg)
    _write(out / "no_signaling_report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    status = "pass" if report["pass"] else "FAIL"
    print(
        f"complete marginalization: max |diff| = {report['max_abs_diff']:.3e} ({status}); "
        f"filtered visibility gap = {report['filtered']['visibility_difference']:.6f}"
    )
    return EXIT_OK


def _swept_layout(cfg: RunConfig, parameter: str, value: float) -> RunConfig:
    if parameter == "phi0_deg":
        layout = dataclasses.replace(cfg.layout, min_incidence_angle=math.radians(value))
        return dataclasses.replace(cfg, layout=layout)
    if parameter == "epsilon":
        return dataclasses.replace(cfg, epsilon=value)
    if parameter == "alpha":
        return dataclasses.replace(cfg, alpha=value)
    field = {"hole_diameter_m": "hole_diameter", "slit_separation_m": "slit_separation"}[parameter]
    layout = dataclasses.replace(cfg.layout, **{field: value})
    return dataclasses.replace(cfg, layout=layout)


def command_sweep(cfg: RunConfig, parameter: str, start: float, stop: float, steps: int) -> int:
    if steps < 2:
        raise ConfigError("sweep needs at least 2 steps")
    out = _outdir(cfg)
    rows = ["%s,visibility_position,visibility_momentum,flux_ratio" % parameter]
    for i in range(steps):
        value = start + (stop - start) * i / (steps - 1)
        swept = _swept_layout(cfg, parameter, value)
        patterns = {}
        for protocol in ("position", "momentum"):
            patterns[protocol] = single_count_intensity(
                swept.layout,
                protocol,
                swept.weight_profile,
                epsilon=swept.epsilon,
                alpha=swept.alpha,
                intensity_scale=swept.intensity_scale,
                grid_points=min(swept.grid_points, 801),
                half_width_fringes=swept.half_width_fringes,
            )
        ratio = intensity_ratio(patterns["momentum"], patterns["position"])
        rows.append(
            f"{value:.17g},{patterns['position'].visibility:.17g},"
            f"{patterns['momentum'].visibility:.17g},{ratio:.17g}"
        )
    _write(out / f"sweep_{parameter}.csv", "\n".join(rows) + "\n")
    return EXIT_OK


def command_validate(cfg: RunConfig) -> int:
    small = validate_small_hole_regime(cfg.layout)
    large = validate_large_hole_regime(cfg.layout)
    via_v, via_u = cfg.layout.relay_path_sums()
    report = {
        "config": resolved_dict(cfg),
        "small_hole": dataclasses.asdict(small),
        "large_hole": dataclasses.asdict(large),
        "derived": {
            "dc_wavelength_m": cfg.layout.lambda_dc,
            "fringe_period_m": cfg.layout.fringe_period,
            "relay_common_path_m": cfg.layout.d_prime,
            "relay_path_mismatch_m": abs(via_v - via_u),
            "phi0_deg": math.degrees(cfg.layout.phi0),
        },
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "run":
            return command_run(cfg)
        if args.command == "oracle":
            return command_oracle(cfg)
        if args.command == "sweep":
            return command_sweep(cfg, args.parameter, args.start, args.stop, args.steps)
        if args.command == "validate":
            return command_validate(cfg)
        raise AssertionError(f"unhandled command {args.command}")  # pragma: no cover
    except ConfigError as exc:
        _print_error("config", exc, EXIT_CONFIG)
        return EXIT_CONFIG
    except RegimeError as exc:
        _print_error("regime", exc, EXIT_REGIME)
        return EXIT_REGIME
    except ConvergenceError as exc:
        _print_error("convergence", exc, EXIT_CONVERGENCE)
        return EXIT_CONVERGENCE
    except (ValueError, OSError) as exc:
        _print_error(type(exc).__name__, exc, 1)
        return 1


def _print_error(kind: str, exc: Exception, code: int) -> None:
    payload = {"error": {"kind": kind, "message": str(exc), "exit_code": code}}
    diag = getattr(exc, "diagnostic", None)
    if diag is not None:
        payload["error"]["diagnostic"] = dataclasses.asdict(diag)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def run_main() -> None:  # pragma: no cover - console entry
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
