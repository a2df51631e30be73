"""Command-line front door: world generation, experiment runs, scoring.

Subcommands:
  gen-world  write a synthetic corridor world to a JSON file
  run        run pipelines over (mode, seed) cells and aggregate metrics
  eval       score an estimated TUM trajectory against a ground truth one

Exit codes: 0 success, 1 usage/configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
from pathlib import Path

import numpy as np

from . import metrics as met
from .frontend import DriftConfig, ObservationConfig
from .pipeline import MODES, ScheduleConfig, run as run_pipeline
from .worldgen import WorldSpec, generate_corridor, world_from_file, world_to_file

AGGREGATE_HEADER = ["mode", "seed", "ate_rmse", "rpe_rmse", "align_mode", "rpe_delta"]
OBS_SEED_OFFSET = 1_000_000


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _world_spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corridor-length", type=float, default=40.0)
    p.add_argument("--door-spacing", type=float, default=2.0)
    p.add_argument("--door-height", type=float, default=2.0)
    p.add_argument("--door-width", type=float, default=0.9)
    p.add_argument("--n-turns", type=int, default=0)
    p.add_argument("--turn-angle", type=float, default=90.0)
    p.add_argument("--extra-unique-segments", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)


def _spec_from_args(args) -> WorldSpec:
    return WorldSpec(
        corridor_length=args.corridor_length,
        door_spacing=args.door_spacing,
        door_height=args.door_height,
        door_width=args.door_width,
        n_turns=args.n_turns,
        turn_angle=args.turn_angle,
        extra_unique_segments=args.extra_unique_segments,
        rng_seed=args.seed,
    )


def cmd_gen_world(args) -> int:
    spec = _spec_from_args(args)
    world = generate_corridor(spec)
    world_to_file(world, args.out)
    print(f"wrote {args.out}: {len(world.segments)} segments, {world.n_frames} frames")
    return 0


def _load_experiment(args) -> dict:
    with open(args.config) as f:
        cfg = json.load(f)
    if args.out is not None:
        cfg["out_dir"] = args.out
    if "out_dir" not in cfg:
        raise ValueError("no output directory: set 'out_dir' in the config or pass --out")
    if not cfg.get("seeds"):
        raise ValueError("config must list at least one seed")
    modes = cfg.get("modes", ["baseline", "seg"])
    for m in modes:
        if m not in MODES:
            raise ValueError(f"unknown mode {m!r}; choose from {MODES}")
    cfg["modes"] = modes
    return cfg


def _run_cell(world, cfg, mode: str, seed: int):
    drift = DriftConfig(rng_seed=seed, **cfg.get("drift", {}))
    obs = ObservationConfig(rng_seed=seed + OBS_SEED_OFFSET, **cfg.get("observation", {}))
    schedule = ScheduleConfig(mode=mode, **cfg.get("schedule", {}))
    return run_pipeline(world, drift, obs, schedule)


def cmd_run(args) -> int:
    cfg = _load_experiment(args)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    if "world_file" in cfg:
        world = world_from_file(cfg["world_file"])
    else:
        world = generate_corridor(WorldSpec(**cfg.get("world", {})))
    world_to_file(world, out_dir / "world.json")

    mcfg = cfg.get("metrics", {})
    align_mode = mcfg.get("align_mode", "similarity")
    rpe_delta = int(mcfg.get("rpe_delta", met.DEFAULT_RPE_DELTA))

    rows = []
    cell_errors = []
    results: dict[tuple[str, int], float] = {}
    for mode in cfg["modes"]:
        for seed in cfg["seeds"]:
            cell_dir = out_dir / mode / f"seed{seed}"
            cell_dir.mkdir(parents=True, exist_ok=True)
            try:
                rr = _run_cell(world, cfg, mode, seed)
                met.write_tum(rr.raw_trajectory, cell_dir / "raw.tum")
                met.write_tum(rr.corrected_trajectory, cell_dir / "corrected.tum")
                met.write_tum(rr.gt_trajectory, cell_dir / "gt.tum")
                report = met.evaluate(
                    rr.corrected_trajectory, rr.gt_trajectory, align_mode, rpe_delta
                )
                manifest = {
                    "mode": mode,
                    "seed": seed,
                    # out_dir is excluded so runs of one experiment are
                    # byte-identical regardless of where they are written
                    "config": {k: v for k, v in cfg.items() if k != "out_dir"},
                    "n_map_points": len(rr.emap.points),
                    "n_observations": len(rr.emap.observations),
                    "n_clusters": len(rr.store),
                    "discarded_observations": rr.discarded_observations,
                    "objective_traces": [r.to_json() for r in rr.reports],
                }
                with open(cell_dir / "manifest.json", "w") as f:
                    json.dump(manifest, f, indent=1)
                with open(cell_dir / "metrics.json", "w") as f:
                    json.dump(report.to_json(), f, indent=1)
                with open(cell_dir / "metrics.csv", "w", newline="") as f:
                    w = csv.writer(f)
                    w.writerow(AGGREGATE_HEADER)
                    w.writerow(
                        [mode, seed, repr(report.ate_rmse), repr(report.rpe_rmse), align_mode, rpe_delta]
                    )
                rows.append([mode, seed, report.ate_rmse, report.rpe_rmse])
                results[(mode, seed)] = report.ate_rmse
            except Exception as exc:  # a failed cell must not sink the others
                cell_errors.append({"mode": mode, "seed": seed, "error": str(exc)})
                rows.append([mode, seed, float("nan"), float("nan")])

    with open(out_dir / "aggregate.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(AGGREGATE_HEADER)
        for mode, seed, a, r in rows:
            w.writerow([mode, seed, repr(a), repr(r), align_mode, rpe_delta])

    summary: dict = {"errors": cell_errors, "modes": {}}
    for mode in cfg["modes"]:
        ates = [results[(mode, s)] for s in cfg["seeds"] if (mode, s) in results]
        if not ates:
            continue
        entry = {
            "mean_ate": statistics.fmean(ates),
            "median_ate": statistics.median(ates),
            "n": len(ates),
        }
        if mode != "baseline" and "baseline" in cfg["modes"]:
            wins = [
                s
                for s in cfg["seeds"]
                if (mode, s) in results
                and ("baseline", s) in results
                and results[(mode, s)] < results[("baseline", s)]
            ]
            comparable = [
                s for s in cfg["seeds"] if (mode, s) in results and ("baseline", s) in results
            ]
            if comparable:
                entry["win_rate_vs_baseline"] = len(wins) / len(comparable)
        summary["modes"][mode] = entry
    with open(out_dir / "summary.json", "w") as f:
        json.dump(summary, f, indent=1)

    print(json.dumps(summary["modes"], indent=1))
    return 0 if not cell_errors else 2


def cmd_eval(args) -> int:
    est = met.read_tum(args.est)
    gt = met.read_tum(args.gt)
    if args.interpolate_gt:
        positions = met.spline_interpolate(gt.timestamps, gt.positions, est.timestamps)
        quats = np.tile([1.0, 0.0, 0.0, 0.0], (len(est), 1))
        gt = met.Trajectory(est.timestamps.copy(), positions, quats)
    report = met.evaluate(est, gt, args.align, args.rpe_delta)
    payload = json.dumps(report.to_json(), indent=1)
    print(payload)
    if args.out:
        with open(args.out, "w") as f:
            f.write(payload + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="segdrift")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-world", help="generate a synthetic corridor world")
    _world_spec_args(p)
    p.add_argument("--out", required=True, help="output world JSON path")
    p.set_defaults(func=cmd_gen_world)

    p = sub.add_parser("run", help="run an experiment over (mode, seed) cells")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score an estimated trajectory against ground truth")
    p.add_argument("est", help="estimated trajectory, TUM format")
    p.add_argument("gt", help="ground-truth trajectory, TUM format")
    p.add_argument("--align", choices=["similarity", "rigid", "none"], default="similarity")
    p.add_argument("--rpe-delta", type=int, default=met.DEFAULT_RPE_DELTA)
    p.add_argument("--interpolate-gt", action="store_true", help="spline-interpolate sparse gt")
    p.add_argument("--out", default=None, help="write the metrics JSON here too")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"segdrift: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"segdrift: i/o failure: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"segdrift: runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
