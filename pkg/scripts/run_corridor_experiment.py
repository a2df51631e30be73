#!/usr/bin/env python3
"""Corridor benchmark: Baseline vs Seg vs SegGlobal across seeds.

Runs the full pipeline on one synthetic corridor world per configuration
cell and prints per-mode ATE medians, means and win rates against the
baseline, plus a per-seed table. This is the same comparison the
acceptance suite scores, exposed with tweakable knobs.

Usage:
    python scripts/run_corridor_experiment.py
    python scripts/run_corridor_experiment.py --seeds 40 --corridor-length 60
    python scripts/run_corridor_experiment.py --out results/   # also write CSV
"""

import argparse
import csv
import statistics
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from segdrift.frontend import DriftConfig, ObservationConfig
from segdrift.metrics import ate, rpe
from segdrift.pipeline import MODES, ScheduleConfig, run
from segdrift.worldgen import WorldSpec, generate_corridor


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--corridor-length", type=float, default=40.0)
    p.add_argument("--door-spacing", type=float, default=2.0)
    p.add_argument("--scale-sigma", type=float, default=1e-3)
    p.add_argument("--endpoint-noise", type=float, default=0.01)
    p.add_argument("--detect-prob", type=float, default=0.8)
    p.add_argument("--seeds", type=int, default=20, help="number of seeds (0..n-1)")
    p.add_argument("--align", choices=["similarity", "rigid", "none"], default="similarity")
    p.add_argument("--modes", nargs="+", default=list(MODES), choices=MODES)
    p.add_argument("--out", default=None, help="directory for a per-seed CSV")
    return p.parse_args()


def main():
    args = parse_args()
    world = generate_corridor(
        WorldSpec(corridor_length=args.corridor_length, door_spacing=args.door_spacing)
    )
    print(
        f"world: {args.corridor_length:g} m corridor, doors every "
        f"{args.door_spacing:g} m, {len(world.segments)} segments, "
        f"{world.n_frames} frames"
    )

    start = time.monotonic()
    rows = []
    ates = {mode: [] for mode in args.modes}
    for seed in range(args.seeds):
        drift = DriftConfig(scale_sigma=args.scale_sigma, rng_seed=seed)
        obs = ObservationConfig(
            detect_prob=args.detect_prob,
            endpoint_noise_sigma=args.endpoint_noise,
            rng_seed=seed + 1_000_000,
        )
        for mode in args.modes:
            r = run(world, drift, obs, ScheduleConfig(mode=mode))
            a = ate(r.corrected_trajectory, r.gt_trajectory, mode=args.align)
            rp = rpe(r.corrected_trajectory, r.gt_trajectory)
            ates[mode].append(a)
            rows.append([mode, seed, a, rp, len(r.store)])
        line = " ".join(f"{m}={ates[m][-1]:.4f}" for m in args.modes)
        print(f"seed {seed:2d}: {line}")
    elapsed = time.monotonic() - start

    print(f"\n{args.seeds} seeds x {len(args.modes)} modes in {elapsed:.1f} s")
    print(f"{'mode':<10} {'median ATE':>11} {'mean ATE':>9} {'win rate':>9}")
    for mode in args.modes:
        vals = ates[mode]
        win = ""
        if mode != "baseline" and "baseline" in ates:
            wins = sum(v < b for v, b in zip(vals, ates["baseline"]))
            win = f"{wins}/{len(vals)}"
        print(
            f"{mode:<10} {statistics.median(vals):>11.4f} "
            f"{statistics.fmean(vals):>9.4f} {win:>9}"
        )

    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "corridor_experiment.csv"
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["mode", "seed", "ate_rmse", "rpe_rmse", "n_clusters"])
            w.writerows(rows)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
