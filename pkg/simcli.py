"""
Command line runner for morphing quadrotor scenarios.

Subcommands:
  plan       map -> path -> corridor -> trajectory, writes the plan artifacts
  simulate   full pipeline plus closed-loop flight, writes telemetry
  benchmark  circle tracking with continuous morphing for several controllers

Exit code is 0 only when the run's success flag is true.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import config
from morphing.errors import MorphingError
from morphing.report import emit_report, write_benchmark
from morphing.scenario import (benchmark_controllers, compare_flyover, load_scenario, plan_scenario,
                               run_scenario)


def _resolve_scenario(name: str) -> Path:
    path = Path(name)
    if not path.exists():
        # bare names resolve against the bundled scenarios folder
        for candidate in (config.SCENARIO_FOLDER / name, config.SCENARIO_FOLDER / f"{name}.env"):
            if candidate.exists():
                return candidate
    return path


def _csv_list(text: str, convert=str):
    return [convert(item.strip()) for item in text.split(",") if item.strip()]


def _out_dir(args, scenario) -> Path:
    base = Path(args.out) if args.out else None
    return config.ensure_output_folders(scenario.name, base)


def cmd_plan(args, scenario) -> bool:
    print(f"\n{'='*60}")
    print(f"Planning: {scenario.name}")
    print(f"{'='*60}\n")
    report = plan_scenario(scenario, verbose=True)
    report.summary.success = report.plan is not None and report.plan.success and not report.summary.failure
    out_dir = _out_dir(args, scenario)
    paths = emit_report(report, out_dir)
    print(f"\nStep 5: Writing plan artifacts...")
    for label, path in paths.items():
        print(f"  {label}: {path}")
    return report.success


def cmd_simulate(args, scenario) -> bool:
    if args.flyover:
        through, over, ratio = compare_flyover(scenario, verbose=True)
        out_base = Path(args.out) if args.out else None
        emit_report(through, config.ensure_output_folders(through.summary.scenario, out_base))
        emit_report(over, config.ensure_output_folders(over.summary.scenario, out_base))
        print(f"\n{'='*60}")
        print("Energy comparison (integral of f^2 dt)")
        print(f"{'='*60}")
        print(f"  Through the opening: {through.summary.energy:.2f}")
        print(f"  Over the obstacle:   {over.summary.energy:.2f}")
        print(f"  Ratio:               {ratio:.3f}")
        if through.success and over.success and ratio < 1.0:
            print("[OK] Morphing through the opening uses less energy")
            return True
        print("[WARNING] Morph-through run did not beat the fly-over run")
        return False

    report = run_scenario(scenario, controller=args.controller, out_dir=_out_dir(args, scenario),
                          verbose=True)
    return report.success


def cmd_benchmark(args, scenario) -> bool:
    controllers = _csv_list(args.controllers)
    unknown = [name for name in controllers if name not in config.CONTROLLER_NAMES]
    if unknown:
        print(f"[ERROR] Unknown controller(s): {', '.join(unknown)}")
        return False
    speeds = _csv_list(args.vmax, float)

    print(f"\n{'='*60}")
    print(f"Benchmark: {scenario.name}")
    print(f"{'='*60}\n")
    print(f"Step 1: Circle tracking with continuous morphing "
          f"(radius {scenario.circle_radius:.2f} m, {scenario.circle_duration:.1f} s)...")
    rows = benchmark_controllers(scenario, controllers, speeds, verbose=True)

    out_dir = _out_dir(args, scenario)
    path = write_benchmark(rows, out_dir / "benchmark.csv")
    print(f"\nStep 2: Writing table...")
    print(f"  benchmark: {path}")

    print(f"\n{'controller':>10s} {'v_max':>6s} {'avg (m)':>9s} {'max (m)':>9s}")
    for row in rows:
        print(f"{row.controller:>10s} {row.v_max:6.2f} {row.avg_error:9.4f} {row.max_error:9.4f}")
    return all(row.avg_error <= row.max_error for row in rows)


def main(argv=None) -> int:
    """Main CLI entry point."""
    parser = argparse.ArgumentParser(
        description="Plan and simulate morphing quadrotor flights through narrow spaces",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Plan through the wall gap and write corridor/trajectory files
  python simcli.py plan gap

  # Plan and fly the pipe scenario, writing telemetry to a custom folder
  python simcli.py simulate scenarios/pipe.env --out runs/

  # Compare flying through the gap with flying over the closed wall
  python simcli.py simulate gap --flyover

  # Table of tracking errors on the morphing circle
  python simcli.py benchmark benchmark --controllers pid,lqr,proposed --vmax 0.6,0.8,1.0
        """
    )
    parser.add_argument("command", choices=["plan", "simulate", "benchmark"], help="What to run")
    parser.add_argument("scenario", type=str,
                        help="Scenario file, or the name of a file in the scenarios folder")
    parser.add_argument("--out", type=str,
                        help=f"Output base folder. Defaults to {config.OUTPUT_BASE}")
    parser.add_argument("--seed", type=int, help="Seed for the simulated state noise")
    parser.add_argument("--controller", type=str, default="proposed", choices=config.CONTROLLER_NAMES,
                        help="Controller flown by 'simulate' (default: proposed)")
    parser.add_argument("--controllers", type=str, default=",".join(config.CONTROLLER_NAMES),
                        help="Comma-separated controllers for 'benchmark'")
    parser.add_argument("--vmax", type=str, default=",".join(str(v) for v in config.BENCHMARK_SPEEDS),
                        help="Comma-separated circle speeds (m/s) for 'benchmark'")
    parser.add_argument("--flyover", action="store_true",
                        help="With 'simulate': also fly over the closed obstacles and compare energy")

    args = parser.parse_args(argv)

    scenario_path = _resolve_scenario(args.scenario)
    if not scenario_path.exists():
        parser.error(f"Scenario not found: {args.scenario}")

    try:
        scenario = load_scenario(scenario_path)
        if args.seed is not None:
            scenario = replace(scenario, sim=replace(scenario.sim, seed=args.seed))
        handler = {"plan": cmd_plan, "simulate": cmd_simulate, "benchmark": cmd_benchmark}[args.command]
        success = handler(args, scenario)
    except MorphingError as exc:
        print(f"[ERROR] {exc}")
        return 1
    except OSError as exc:
        print(f"[ERROR] Could not write output: {exc}")
        return 1

    if success:
        print("\n[OK] Done")
    else:
        print("\n[FAILED] Run did not meet its success criteria")
    return 0 if success else 1


if __name__ == "__main__":
    sys.exit(main())
