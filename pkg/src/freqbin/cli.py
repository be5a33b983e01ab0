"""Command-line interface: ``freqbin {scan,bell,visibility,equivalence}``.

Outputs are CSV (scan) or JSON (everything else) written to ``--output`` or
stdout. Exit status is 0 on success, 1 on a usage error and 2 when a
tolerance or acceptance check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from freqbin import bell, interference, metrology
from freqbin.config import ConfigError, RunConfig
from freqbin.errors import DomainError, TruncationError, UndefinedResultError
from freqbin.interference import Kind
from freqbin.modulation import BinWindow, RfDrive

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TOLERANCE = 2

SCAN_HEADER = ["phase_diff", "closed_form", "two_photon", "one_photon", "simulated_raw", "simulated_net"]

# singles rate per SSPD that puts accidentals at 1/2000 of a 20 Hz coincidence rate
DEFAULT_SSPD_SINGLES = 4.1e3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(float(value), ".17g")


def _clean(obj):
    """Make ``obj`` JSON-safe: tuples to lists, numpy scalars to Python, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _write(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _angle_in(value: float, degrees: bool) -> float:
    return math.radians(value) if degrees else value


def _angle_out(value: float, degrees: bool) -> float:
    return math.degrees(value) if degrees else value


def _settings_dict(settings: bell.BellSettings, degrees: bool) -> dict:
    out = settings.as_dict()
    for drive in out.values():
        drive["phase"] = _angle_out(drive["phase"], degrees)
    return out


def _bell_dict(result: bell.BellResult, degrees: bool) -> dict:
    out = result.as_dict()
    out["settings"] = _settings_dict(result.settings, degrees)
    return out


# ---------------------------------------------------------------- commands


def cmd_scan(args) -> int:
    window = BinWindow(args.n_max)
    scan = interference.scan_phase(args.a, args.b, args.d, args.points, window)
    bob = RfDrive(args.b, 0.0)
    pairs = tuple((RfDrive(args.a, float(phase)), bob) for phase in scan.phase_difference)
    plan = metrology.ExperimentPlan(
        kind=Kind.TWO_PHOTON,
        base_rate=args.base_rate,
        noise_rate=args.noise_rate,
        integration_time=args.time,
        settings=pairs,
        rng_seed=args.seed,
        d=args.d,
        floor=args.floor,
    )
    records = metrology.simulate_counts(plan)
    reference = records[0].observed_counts
    noise = metrology.simulate_noise_counts(args.noise_rate, args.time, args.seed)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SCAN_HEADER)
    for i, record in enumerate(records[1:]):
        raw = record.observed_counts / reference if reference > 0 else None
        net = (record.observed_counts - noise) / (reference - noise) if reference > noise else None
        writer.writerow(
            [
                _fmt(_angle_out(scan.phase_difference[i], args.degrees)),
                _fmt(scan.closed_form[i]),
                _fmt(scan.two_photon[i]),
                _fmt(scan.one_photon[i]),
                _fmt(raw),
                _fmt(net),
            ]
        )
    _write(buffer.getvalue(), args.output)
    return EXIT_OK


def _bell_settings_from_args(args) -> bell.BellSettings:
    deg = args.degrees
    return bell.BellSettings(
        RfDrive(args.a0, _angle_in(args.alpha0, deg)),
        RfDrive(args.a1, _angle_in(args.alpha1, deg)),
        RfDrive(args.b0, _angle_in(args.beta0, deg)),
        RfDrive(args.b1, _angle_in(args.beta1, deg)),
    )


def cmd_bell(args) -> int:
    dim2, algebraic = bell.reference_bounds()
    bounds = {"local": bell.LOCAL_BOUND, "dim2_quantum_max": dim2, "algebraic_max": algebraic}
    status = EXIT_OK
    if args.mode == "optimize":
        report = {"mode": "optimize", **_bell_dict(bell.optimize_boundary(), args.degrees), "bounds": bounds}
    elif args.mode == "evaluate":
        settings = _bell_settings_from_args(args)
        result = bell.ch74_evaluate(settings)
        geometry = bell.geometry_from_settings(settings)
        report = {
            "mode": "evaluate",
            **_bell_dict(result, args.degrees),
            "geometry": {
                "vertices": {k: list(v) for k, v in geometry.vertices.items()},
                "constraint_slack": list(geometry.constraint_slack()),
                "valid": geometry.is_valid(),
            },
            "bounds": bounds,
        }
    elif args.mode == "brute-check":
        boundary = bell.optimize_boundary()
        brute = bell.optimize_brute_force(args.resolution)
        passed = brute.best_s <= boundary.s_value + brute.slack and brute.refined_s <= boundary.s_value + 1e-9
        report = {
            "mode": "brute-check",
            "boundary": _bell_dict(boundary, args.degrees),
            "brute_force": brute.as_dict(),
            "passed": passed,
        }
        status = EXIT_OK if passed else EXIT_TOLERANCE
    else:
        settings = _bell_settings_from_args(args)
        theory = bell.ch74_evaluate(settings)

        def run(seed):
            plan = metrology.bell_plan(
                settings, args.base_rate, args.noise_rate, args.time, seed, args.floor, args.ref_time
            )
            records = metrology.simulate_counts(plan)
            return records, metrology.bell_statistics(records[1:], records[0])

        records, stats = run(args.seed)
        report = {
            "mode": "simulate",
            "seed": args.seed,
            "base_rate": args.base_rate,
            "noise_rate": args.noise_rate,
            "integration_time": args.time,
            "reference_time": args.ref_time if args.ref_time is not None else args.time,
            "floor": args.floor,
            "theory": _bell_dict(theory, args.degrees),
            "reference": records[0].as_dict(),
            "records": [r.as_dict() for r in records[1:]],
            "S": stats.s_estimate,
            "s_sigma": stats.s_sigma,
            "sigmas_of_violation": stats.sigmas_of_violation,
        }
        if args.repeats > 1:
            runs = [run(args.seed + k)[1] for k in range(args.repeats)]
            s_values = np.array([r.s_estimate for r in runs])
            report["monte_carlo"] = {
                "repeats": args.repeats,
                "seeds": [args.seed, args.seed + args.repeats - 1],
                "mean_S": float(np.mean(s_values)),
                "std_S": float(np.std(s_values, ddof=1)),
                "mean_s_sigma": float(np.mean([r.s_sigma for r in runs])),
            }
    _write(dumps_json(report), args.output)
    return status


def _detector_noise(args) -> tuple[float, str]:
    if args.noise_rate is not None:
        return args.noise_rate, "explicit"
    kind = Kind(args.kind)
    if args.detector == "ideal":
        return 0.0, "ideal"
    if args.detector == "apd":
        return metrology.APD_GATED.single_noise_rate(), "apd"
    if kind is Kind.TWO_PHOTON:
        singles = args.singles_rate
        return metrology.SSPD.coincidence_noise_rate(singles, singles), "sspd"
    return metrology.SSPD.single_noise_rate(), "sspd"


def cmd_visibility(args) -> int:
    noise_rate, noise_source = _detector_noise(args)
    a = args.amplitude
    first_zero = bell.first_j0_zero()
    if 2.0 * a < first_zero:
        raise UsageError(f"amplitude {a} cannot reach the first J_0 zero ({first_zero:.4f}); need >= {first_zero / 2:.4f}")
    phase_min = math.acos(first_zero**2 / (2.0 * a * a) - 1.0)
    pairs = ((RfDrive(a, math.pi), RfDrive(a, 0.0)), (RfDrive(a, phase_min), RfDrive(a, 0.0)))
    plan = metrology.ExperimentPlan(
        kind=args.kind,
        base_rate=args.base_rate,
        noise_rate=noise_rate,
        integration_time=args.time,
        settings=pairs,
        rng_seed=args.seed,
        floor=args.floor,
    )
    records = metrology.simulate_counts(plan)
    n_max, n_min = records[1].observed_counts, records[2].observed_counts
    n_noise = metrology.simulate_noise_counts(noise_rate, args.time, args.seed)
    vis = metrology.visibility(n_max, n_min, n_noise)
    err = metrology.visibility_errors(n_max, n_min, n_noise)
    expected = metrology.visibility(
        records[1].expected_rate, records[2].expected_rate, noise_rate
    )
    report = {
        "kind": Kind(args.kind).value,
        "detector": noise_source,
        "amplitude": a,
        "phase_max": _angle_out(math.pi, args.degrees),
        "phase_min": _angle_out(phase_min, args.degrees),
        "base_rate": args.base_rate,
        "noise_rate": noise_rate,
        "floor": args.floor,
        "integration_time": args.time,
        "seed": args.seed,
        "counts": {"max": n_max, "min": n_min, "noise": n_noise},
        "raw": vis.raw,
        "raw_sigma": err.raw,
        "net": vis.net,
        "net_sigma": err.net,
        "expected": {"raw": expected.raw, "net": expected.net},
    }
    _write(dumps_json(report), args.output)
    return EXIT_OK


def cmd_equivalence(args) -> int:
    window = BinWindow(args.n_max)
    report = interference.equivalence_report(
        amplitude_max=args.amplitude_max,
        samples=args.samples,
        seed=args.seed,
        window=window,
        d_max=args.d_max,
        tolerance=args.tolerance,
    )
    _write(dumps_json(report.as_dict()), args.output)
    return EXIT_OK if report.passed else EXIT_TOLERANCE


# ---------------------------------------------------------------- parser


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if not value >= 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _finite_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text}")
    return value


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI-style configuration file; flags override it")
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--degrees", action="store_true", help="angles on the command line and in outputs are degrees")


def _add_counting(p: argparse.ArgumentParser, time: float) -> None:
    p.add_argument("--base-rate", dest="base_rate", type=_nonneg_float, default=20.0, help="rate with modulation off (Hz)")
    p.add_argument("--floor", type=_nonneg_float, default=0.0, help="setup-imperfection floor, fraction of the base rate")
    p.add_argument("--time", type=_positive_float, default=time, help="integration time per setting (s)")
    p.add_argument("--seed", type=_nonneg_int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="freqbin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    scan = sub.add_parser("scan", help="interference pattern versus phase difference (CSV)")
    _add_common(scan)
    scan.add_argument("--a", type=_nonneg_float, default=2.25, help="Alice's modulation depth (rad)")
    scan.add_argument("--b", type=_nonneg_float, default=2.25, help="Bob's modulation depth (rad)")
    scan.add_argument("--d", type=int, default=0, help="bin shift")
    scan.add_argument("--points", type=int, default=181, help="grid points over [-pi, pi]")
    scan.add_argument("--n-max", dest="n_max", type=_nonneg_int, default=interference.DEFAULT_N_MAX)
    scan.add_argument("--noise-rate", dest="noise_rate", type=_nonneg_float, default=0.01, help="additive noise rate (Hz)")
    _add_counting(scan, time=300.0)
    scan.set_defaults(func=cmd_scan)

    optimal = bell.optimal_settings(0.55)
    b = sub.add_parser("bell", help="CH74 evaluation, optimization and simulation (JSON)")
    _add_common(b)
    b.add_argument("mode", choices=["optimize", "evaluate", "brute-check", "simulate"])
    for name, drive in zip(("a0", "a1", "b0", "b1"), (optimal.alice0, optimal.alice1, optimal.bob0, optimal.bob1)):
        phase = {"a": "alpha", "b": "beta"}[name[0]] + name[1]
        b.add_argument(f"--{name}", type=_nonneg_float, default=drive.amplitude)
        b.add_argument(f"--{phase}", type=_finite_float, default=None)
    b.add_argument("--resolution", type=int, default=64, help="grid points per side for brute-check")
    b.add_argument("--noise-rate", dest="noise_rate", type=_nonneg_float, default=0.01)
    b.add_argument("--ref-time", dest="ref_time", type=_positive_float, default=None, help="reference integration time (s)")
    b.add_argument("--repeats", type=int, default=1, help="Monte Carlo repetitions with consecutive seeds")
    _add_counting(b, time=1200.0)
    b.set_defaults(func=cmd_bell)

    v = sub.add_parser("visibility", help="raw and net visibilities from simulated extrema (JSON)")
    _add_common(v)
    v.add_argument("--kind", choices=[k.value for k in Kind], default=Kind.TWO_PHOTON.value)
    v.add_argument("--detector", choices=["ideal", "sspd", "apd"], default="sspd")
    v.add_argument("--noise-rate", dest="noise_rate", type=_nonneg_float, default=None, help="overrides the detector noise")
    v.add_argument("--singles-rate", dest="singles_rate", type=_nonneg_float, default=DEFAULT_SSPD_SINGLES, help="singles rate per detector for accidentals (Hz)")
    v.add_argument("--amplitude", type=_nonneg_float, default=2.25, help="a = b modulation depth (rad)")
    _add_counting(v, time=300.0)
    v.set_defaults(func=cmd_visibility)

    e = sub.add_parser("equivalence", help="agreement of two-photon, one-photon, classical and closed-form predictions (JSON)")
    _add_common(e)
    e.add_argument("--amplitude-max", dest="amplitude_max", type=_nonneg_float, default=3.0)
    e.add_argument("--samples", type=int, default=200)
    e.add_argument("--seed", type=_nonneg_int, default=0)
    e.add_argument("--tolerance", type=_positive_float, default=1e-8)
    e.add_argument("--n-max", dest="n_max", type=_nonneg_int, default=interference.DEFAULT_N_MAX)
    e.add_argument("--d-max", dest="d_max", type=_nonneg_int, default=interference.DEFAULT_D_MAX)
    e.set_defaults(func=cmd_equivalence)

    parser.subparsers = sub.choices  # name -> subparser, used to apply config files
    return parser


def _apply_config(parser: argparse.ArgumentParser, command: str, config: RunConfig) -> None:
    subparser = parser.subparsers[command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in config.values.items():
        action = actions.get(key)
        if action is None:
            continue  # belongs to another command
        try:
            value = action.type(raw) if action.type else raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc
        if action.choices is not None and value not in action.choices:
            raise ConfigError(f"bad value for {key!r}: {raw!r} (choose from {list(action.choices)})")
        defaults[key] = value
    subparser.set_defaults(**defaults)


def _validate(args) -> None:
    if args.command == "scan" and args.points < 2:
        raise UsageError("--points must be >= 2")
    if args.command == "bell":
        if args.resolution < 8:
            raise UsageError("--resolution must be >= 8")
        if args.repeats < 1:
            raise UsageError("--repeats must be >= 1")
        # unset phases default to the optimal collinear settings
        optimal = bell.optimal_settings(0.55)
        for name, drive in (("alpha0", optimal.alice0), ("alpha1", optimal.alice1), ("beta0", optimal.bob0), ("beta1", optimal.bob1)):
            if getattr(args, name) is None:
                setattr(args, name, _angle_out(drive.phase, args.degrees))
    if args.command == "equivalence" and args.samples < 1:
        raise UsageError("--samples must be >= 1")
    if getattr(args, "floor", 0.0) >= 1.0:
        raise UsageError("--floor must be < 1")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if args.config:
            _apply_config(parser, args.command, RunConfig.load(args.config))
            args = parser.parse_args(argv)
        _validate(args)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except (ConfigError, UsageError, DomainError, TruncationError, UndefinedResultError) as exc:
        print(f"freqbin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
