"""Command-line entry point.

Exit codes: 0 on success, 2 for plan or usage errors, 3 when a run or fit
cannot produce a result.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from .bench import Bench
from .config import ExperimentPlan, parse_with_warnings, serialize, with_overrides
from .core import (
    ConfigError,
    CountRecord,
    InvalidInputError,
    InvalidPlanError,
    RunReport,
    SimulationError,
)
from .metrics import CarResult, InequalityResult, car, count_rates_hz
from .presets import PRESET_PREFIX, plan_source, preset_names

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUN = 3


def _finite(value: float) -> float | None:
    """Map NaN and infinities to None so JSON output stays strict."""
    return value if math.isfinite(value) else None


def _write_json(path: Path, payload: Any) -> None:
    """Write ``payload`` as sorted, indented JSON."""
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    """Write a header row followed by ``rows``."""
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _write_table(
    out: Path, stem: str, fmt: str, header: Sequence[str], rows: Sequence[Sequence[Any]]
) -> None:
    """Write rows to ``<stem>.csv`` or ``<stem>.json`` depending on ``fmt``."""
    if fmt == "json":
        _write_json(out / f"{stem}.json", [dict(zip(header, row)) for row in rows])
    else:
        _write_csv(out / f"{stem}.csv", header, rows)


def _car_dict(result: CarResult) -> dict[str, Any]:
    """CAR fields of a report point."""
    return {
        "car": _finite(result.ratio),
        "car_err": _finite(result.error),
        "defined": result.defined,
    }


def _inequality_dict(result: InequalityResult) -> dict[str, Any]:
    """Inequality fields of a report point."""
    return {
        "lhs": result.lhs,
        "sigma": result.sigma,
        "n_sigma": result.n_sigma_violation,
        "violated": result.violated,
    }


def _record_dict(rec: CountRecord, gate_rate_khz: float) -> dict[str, Any]:
    """Raw counts of a record together with their rates in Hz."""
    return {**rec.as_dict(), **count_rates_hz(rec, gate_rate_khz)}


def _load(args: argparse.Namespace) -> ExperimentPlan:
    """Load the command-line plan with overrides, printing its warnings to stderr."""
    plan, warnings = parse_with_warnings(plan_source(args.config))
    for warning in warnings:
        print(f"{args.config}:{warning}", file=sys.stderr)
    return with_overrides(plan, gates=args.gates, seed=args.seed)


def _report(
    args: argparse.Namespace, plan: ExperimentPlan, points: list[dict[str, Any]]
) -> RunReport:
    """Run report holding the canonical plan, the overrides and every point."""
    overrides: dict[str, Any] = {}
    if args.gates is not None:
        overrides["gates"] = args.gates
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.classical_surrogate:
        overrides["classical_surrogate"] = True
    return RunReport(
        command=args.command,
        seed=plan.seed,
        overrides=overrides,
        plan=serialize(plan),
        points=points,
    )


def _output_dir(args: argparse.Namespace) -> Path:
    """Create the output directory if needed and return it."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_fringe(args: argparse.Namespace) -> int:
    """Run a fringe sweep, write its points and fit, and print the visibility."""
    plan = _load(args)
    bench = Bench(plan, args.workers, args.classical_surrogate)
    angles = bench.fringe_angles()
    dataset, fit = bench.fringe()
    rate = plan.detectors.gate_rate_khz

    header = ("theta2_deg", "singles1", "singles2", "coincidences", "accidentals")
    rows = [
        (
            deg,
            p.record.singles_1,
            p.record.singles_2,
            p.record.coincidences,
            p.record.accidentals_estimate,
        )
        for deg, p in zip(angles, dataset.points)
    ]
    out = _output_dir(args)
    _write_table(out, "points", args.format, header, rows)
    _write_json(
        out / "fit.json",
        {
            "A": fit.amplitude,
            "B": fit.offset,
            "phase": fit.phase,
            "visibility": fit.visibility,
            "chi2_per_dof": fit.chi2_per_dof,
            "A_err": fit.amplitude_error,
            "B_err": fit.offset_error,
            "phase_err": fit.phase_error,
            "visibility_err": fit.visibility_error,
        },
    )
    points = [
        {"theta2_deg": deg, **_record_dict(p.record, rate), **_car_dict(car(p.record))}
        for deg, p in zip(angles, dataset.points)
    ]
    _write_json(out / "report.json", _report(args, plan, points))
    print(f"visibility {fit.visibility:.4f} +/- {fit.visibility_error:.4f}")
    return EXIT_OK


def cmd_car_sweep(args: argparse.Namespace) -> int:
    """Run a pump-power sweep and print the peak CAR."""
    plan = _load(args)
    sweep = Bench(plan, args.workers, args.classical_surrogate).car_sweep()
    rate = plan.detectors.gate_rate_khz

    header = ("power_uw", "car", "car_err", "lhs", "lhs_sigma", "n_sigma")
    rows = [
        (
            p.power_uw,
            _finite(p.car.ratio),
            _finite(p.car.error),
            p.inequality.lhs,
            p.inequality.sigma,
            p.inequality.n_sigma_violation,
        )
        for p in sweep
    ]
    out = _output_dir(args)
    _write_table(out, "sweep", args.format, header, rows)
    points = [
        {
            "power_uw": p.power_uw,
            "mu": p.mu,
            **_car_dict(p.car),
            **_inequality_dict(p.inequality),
            "signal_idler": _record_dict(p.signal_idler, rate),
            "signal_split": _record_dict(p.signal_split, rate),
            "idler_split": _record_dict(p.idler_split, rate),
        }
        for p in sweep
    ]
    _write_json(out / "report.json", _report(args, plan, points))
    defined = [p for p in sweep if p.car.defined]
    if defined:
        peak = max(defined, key=lambda p: p.car.ratio)
        print(f"peak CAR {peak.car.ratio:.2f} +/- {peak.car.error:.2f} at {peak.power_uw:.1f} uW")
    return EXIT_OK


def cmd_inequality(args: argparse.Namespace) -> int:
    """Test the classical inequality at the plan's pump power."""
    plan = _load(args)
    result, (si, s_split, i_split) = Bench(
        plan, args.workers, args.classical_surrogate
    ).inequality()
    rate = plan.detectors.gate_rate_khz
    payload = {
        **_inequality_dict(result),
        **_car_dict(car(si)),
        "signal_idler": _record_dict(si, rate),
        "signal_split": _record_dict(s_split, rate),
        "idler_split": _record_dict(i_split, rate),
    }
    out = _output_dir(args)
    _write_json(out / "inequality.json", payload)
    _write_json(out / "report.json", _report(args, plan, [payload]))
    print(f"lhs {result.lhs:.3e} +/- {result.sigma:.1e} ({result.n_sigma_violation:.1f} sigma)")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    """Print the canonical plan on stdout and its diagnostics on stderr."""
    plan = _load(args)
    bench = Bench(plan, classical_surrogate=args.classical_surrogate)
    for name, value in bench.diagnostics().items():
        print(f"# {name} = {value!r}", file=sys.stderr)
    sys.stdout.write(serialize(plan))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment."""
    parser = argparse.ArgumentParser(
        prog="soi-entangle",
        description="Simulate photon-pair experiments on a silicon waveguide source.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "config",
        help=f"plan file, or {PRESET_PREFIX}NAME with NAME one of: "
        + ", ".join(preset_names()),
    )
    common.add_argument("--seed", type=int, help="override the plan seed")
    common.add_argument("--gates", type=int, help="override gates per run")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument(
        "--classical-surrogate",
        action="store_true",
        help="replace correlated pairs by independent Poissonian streams",
    )
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    sub = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, tuple[Callable[[argparse.Namespace], int], str]] = {
        "fringe": (cmd_fringe, "two-photon interference fringe and visibility fit"),
        "car-sweep": (cmd_car_sweep, "CAR and inequality against pump power"),
        "inequality": (cmd_inequality, "classical-inequality test at one power"),
        "validate": (cmd_validate, "check a plan and print its canonical form"),
    }
    for name, (handler, help_text) in commands.items():
        command = sub.add_parser(name, parents=[common], help=help_text)
        command.set_defaults(handler=handler)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point for ``soi-entangle``; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    start = time.perf_counter()
    try:
        code: int = args.handler(args)
    except ConfigError as exc:
        print(f"{args.config}:{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidPlanError, InvalidInputError) as exc:
        print(f"{args.config}: {exc.code}: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return EXIT_RUN
    logger.info("%s finished in %.2f s", args.command, time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
