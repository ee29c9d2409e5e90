#!/usr/bin/env python3
"""Hand-eye recovery error as a function of marker rotation noise and the
number of stations.

Usage:
  python scripts/calibration_noise_sweep.py [--seeds 50]
"""

import argparse
import math

import numpy as np

from costar.calibration import calibrate_world, pose_error
from costar.world import Scene, WorldSim

SIGMAS_DEG = [0.0, 0.05, 0.1, 0.2, 0.5, 1.0]
STATION_COUNTS = [5, 11, 21]


def mean_error(sigma_deg, stations, seeds):
    errs = []
    for seed in range(seeds):
        scene = Scene()
        result = calibrate_world(WorldSim(scene), stations=stations,
                                 rot_noise=math.radians(sigma_deg), seed=seed)
        pos_err, rot_err = pose_error(result.x, scene.camera)
        errs.append((pos_err, rot_err))
    arr = np.array(errs)
    return arr[:, 0].mean(), arr[:, 1].mean()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=50)
    args = ap.parse_args()

    header = f"{'sigma (deg)':>12} | " + " | ".join(
        f"{n:>2} stations: pos (m) / rot (rad)" for n in STATION_COUNTS)
    print(header)
    print("-" * len(header))
    for sigma in SIGMAS_DEG:
        cells = []
        for n in STATION_COUNTS:
            pos, rot = mean_error(sigma, n, args.seeds)
            cells.append(f"{pos:.2e} / {rot:.2e}")
        print(f"{sigma:>12.2f} | " + " | ".join(f"{c:>33}" for c in cells))


if __name__ == "__main__":
    main()
