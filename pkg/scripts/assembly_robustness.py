#!/usr/bin/env python3
"""Sweep detection noise against the assembly plan and report success rates.

Usage:
  python scripts/assembly_robustness.py [--trials 10] [--seed-base 100]
"""

import argparse
from pathlib import Path

from costar.plan_dsl import parse
from costar.runner import override_noise, run_batch
from costar.world import load_scene

NOISE_LEVELS = [0.0, 0.0025, 0.005, 0.01, 0.02, 0.03, 0.05]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed-base", type=int, default=100)
    ap.add_argument("--plan", default="plans/assembly.bt")
    ap.add_argument("--scene", default="scenes/assembly.yaml")
    args = ap.parse_args()

    doc = parse(Path(args.plan).read_text(), name=Path(args.plan).stem)
    scene = load_scene(args.scene)

    print(f"{'pos sigma (m)':>14} | {'success':>8} | typical failure")
    print("-" * 60)
    for sigma in NOISE_LEVELS:
        noise = override_noise(scene, pos_sigma=sigma)
        report = run_batch(doc, scene, args.trials, seed_base=args.seed_base,
                           noise=noise)
        failures = [t for t in report.per_trial if t.status == "failure"]
        note = failures[0].diagnostic.split(":")[0] if failures else ""
        print(f"{sigma:>14.4f} | {report.successes:>4}/{report.trials:<3} | {note}")


if __name__ == "__main__":
    main()
