"""Command-line front end: run scenarios, validate them, sweep gains, plot.

Exit codes: 0 success, 1 scenario/validation problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .analysis import DEFAULT_WINDOW, build_report
from .control import basin_critical_points_2d, basin_threshold_2d
from .export import export_metrics, export_trajectory_csv, load_trajectory_csv
from .plots import emit_plots, plot_errors, plot_trajectories
from .scenario import ScenarioError, load_scenario
from .simulate import SimulationError, ValidationError, simulate


def _out_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get("FORMTRACK_OUT", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.scenario)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    traj = simulate(cfg)
    out = _out_dir(args.out)
    csv_path = export_trajectory_csv(traj, out / "trajectory.csv")
    window = min(DEFAULT_WINDOW, float(traj.times[-1]))
    report = build_report(traj, delta=args.delta, window=window)
    metrics_path = export_metrics(report, out / "metrics.yaml")
    figures = emit_plots(traj, out)
    print(f"simulated {args.scenario}: {len(traj.times)} samples, "
          f"{len(cfg.graph.followers)} followers")
    for fid, fr in sorted(report.followers.items()):
        tau = f"{fr.convergence_time:.3f}" if fr.converged else "not converged"
        print(f"  follower {fid}: tau={tau}  max||u||={fr.max_control_norm:.3f}")
    for p in [csv_path, metrics_path, *figures]:
        print(f"  wrote {p}")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.scenario)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    g = cfg.graph
    print(f"{args.scenario}: valid ({g.n} agents in R^{g.d}, law {cfg.law}, "
          f"dt={cfg.dt:g}, t_end={cfg.t_end:g})")
    return 0


def _cmd_theta(args: argparse.Namespace) -> int:
    points = basin_critical_points_2d(args.a, args.b, args.c)
    theta = basin_threshold_2d(args.a, args.b, args.c)
    print(f"basin threshold = {theta:.12g}")
    for x, e, v in points:
        print(f"  root x={x: .12g}  e=({e[0]: .6g}, {e[1]: .6g})  V={v:.12g}")
    return 0


def _parse_param(spec: str) -> tuple[str, list[float]]:
    if "=" not in spec:
        raise ScenarioError(f"--param expects name=start:stop:step, got {spec!r}")
    name, _, rng = spec.partition("=")
    parts = rng.split(":")
    if len(parts) != 3:
        raise ScenarioError(f"--param {name}: expected start:stop:step, got {rng!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise ScenarioError(f"--param {name}: step must be > 0")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return name, [start + i * step for i in range(count)]


SWEEPABLE = ("k", "k_prime", "alpha", "gamma", "eps")


def _cmd_sweep(args: argparse.Namespace) -> int:
    base = load_scenario(args.scenario)
    grids = [_parse_param(p) for p in args.param]
    for name, _ in grids:
        if name not in SWEEPABLE:
            raise ScenarioError(f"--param {name}: sweepable fields are {SWEEPABLE}")
    combos: list[dict[str, float]] = [{}]
    for name, values in grids:
        combos = [{**c, name: v} for c in combos for v in values]
    out = _out_dir(args.out)
    rows = []
    for combo in combos:
        try:
            control = replace(base.control, **combo)
        except ValueError as exc:
            print(f"skipping {combo}: {exc}", file=sys.stderr)
            continue
        cfg = replace(base, control=control, control_overrides={})
        traj = simulate(cfg)
        window = min(DEFAULT_WINDOW, float(traj.times[-1]))
        report = build_report(traj, delta=args.delta, window=window)
        taus = {
            fid: fr.convergence_time for fid, fr in sorted(report.followers.items())
        }
        rows.append(
            {
                "params": combo,
                "converged": all(fr.converged for fr in report.followers.values()),
                "convergence_times": taus,
                "max_control_norm": max(
                    fr.max_control_norm for fr in report.followers.values()
                ),
            }
        )
        label = ", ".join(f"{k}={v:g}" for k, v in combo.items())
        print(f"  [{label}] converged={rows[-1]['converged']} "
              f"max||u||={rows[-1]['max_control_norm']:.3f}")
    path = out / "sweep.yaml"
    path.write_text(yaml.safe_dump(rows, sort_keys=True))
    print(f"  wrote {path}")
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    times, positions, agent_ids = load_trajectory_csv(args.csv)
    out = _out_dir(args.out)
    if args.scenario:
        cfg = load_scenario(args.scenario)
        if cfg.graph.n != len(agent_ids):
            raise ScenarioError(
                f"scenario has {cfg.graph.n} agents but CSV has {len(agent_ids)}"
            )
        from .graph import augment_leader_clique

        pairs = augment_leader_clique(cfg.graph).constraints()
        diff = positions[:, [i - 1 for i, _ in pairs], :] - positions[:, [j - 1 for _, j in pairs], :]
        errors = (diff**2).sum(axis=2) - np.array(
            [cfg.spec.get(i, j) ** 2 for i, j in pairs]
        )
        n_leaders = cfg.graph.d
        plot_errors(times, errors, pairs, out / "errors.svg")
        print(f"  wrote {out / 'errors.svg'}")
    else:
        n_leaders = 0
        print("no scenario given; emitting the trajectory figure only", file=sys.stderr)
    plot_trajectories(positions, n_leaders, out / "trajectories.svg")
    print(f"  wrote {out / 'trajectories.svg'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formtrack",
        description="Finite-time distance-based formation tracking simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and export CSV, metrics, figures")
    p.add_argument("scenario", help="bundled name (sim1, sim2a, sim2b) or YAML path")
    p.add_argument("--out", help="output directory (default $FORMTRACK_OUT or ./out)")
    p.add_argument("--delta", type=float, default=1e-2,
                   help="convergence error band for the metrics report")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("check", help="validate a scenario without running it")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("theta", help="basin threshold for one planar follower")
    p.add_argument("--a", type=float, required=True, help="half leader separation")
    p.add_argument("--b", type=float, required=True, help="desired distance to leader 1")
    p.add_argument("--c", type=float, required=True, help="desired distance to leader 2")
    p.set_defaults(func=_cmd_theta)

    p = sub.add_parser("sweep", help="grid of runs over control parameters")
    p.add_argument("scenario")
    p.add_argument("--param", action="append", required=True,
                   help="name=start:stop:step (inclusive), e.g. k=0.5:2:0.5")
    p.add_argument("--out")
    p.add_argument("--delta", type=float, default=1e-2)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot", help="re-render figures from an exported CSV")
    p.add_argument("csv")
    p.add_argument("--scenario", help="scenario for the error curves")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_plot)
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
