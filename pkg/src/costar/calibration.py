"""Hand-eye calibration: recover the fixed sensor-to-base transform X from
paired motion sequences satisfying A X = X B.

A is the arm endpoint motion between two stations expressed in the base frame,
B the marker motion over the same interval expressed in the camera frame. The
solver uses the dual-quaternion construction: each pair contributes a 6x8
linear constraint on the unknown unit dual quaternion; the two-dimensional
null space is extracted by SVD and the mixing coefficients come from a scalar
quadratic with the unit-norm and orthogonality constraints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .geometry import Pose, quat_conj, quat_mul
from .world import WorldSim

CONSISTENCY_BOUND = 0.05       # rad; screw-angle agreement between A and B
DEGENERATE_AXIS_TOL = math.radians(1.0)
MIN_ROTATION = 1e-8            # rad; pure translations carry no axis information


class CalibrationError(Exception):
    pass


class DegenerateMotionsError(CalibrationError):
    pass


class InconsistentPairError(CalibrationError):
    pass


class MarkerNotVisibleError(CalibrationError):
    pass


@dataclass(frozen=True)
class MotionPair:
    a: Pose  # endpoint motion, base frame
    b: Pose  # marker motion, camera frame


@dataclass(frozen=True)
class CalibrationResult:
    x: Pose
    residual: float
    pair_count: int

    def to_json(self) -> dict:
        return {"camera": self.x.to_list(), "residual": self.residual,
                "pairs": self.pair_count}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True))


def load_calibration(path) -> CalibrationResult:
    data = json.loads(Path(path).read_text())
    return CalibrationResult(Pose.from_list(data["camera"]), float(data["residual"]),
                             int(data["pairs"]))


def _dual_quat(pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    """(real, dual) quaternion parts; real scalar forced non-negative."""
    q = np.asarray(pose.orientation, dtype=float)
    if q[0] < 0:
        q = -q
    t = np.concatenate(([0.0], pose.position))
    return q, 0.5 * quat_mul(t, q)


def _skew(v) -> np.ndarray:
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def _pair_rows(pair: MotionPair) -> np.ndarray:
    qa, qa_d = _dual_quat(pair.a)
    qb, qb_d = _dual_quat(pair.b)
    rows = np.zeros((6, 8))
    rows[0:3, 0] = qa[1:] - qb[1:]
    rows[0:3, 1:4] = _skew(qa[1:] + qb[1:])
    rows[3:6, 0] = qa_d[1:] - qb_d[1:]
    rows[3:6, 1:4] = _skew(qa_d[1:] + qb_d[1:])
    rows[3:6, 4] = qa[1:] - qb[1:]
    rows[3:6, 5:8] = _skew(qa[1:] + qb[1:])
    return rows


def _check_pairs(pairs: list[MotionPair], consistency_bound: float):
    if len(pairs) < 2:
        raise DegenerateMotionsError(f"need at least 2 motion pairs, got {len(pairs)}")
    axes = []
    for i, pair in enumerate(pairs):
        angle_a = pair.a.rotation_angle()
        angle_b = pair.b.rotation_angle()
        if abs(angle_a - angle_b) > consistency_bound:
            raise InconsistentPairError(
                f"pair {i}: rotation angles differ by {abs(angle_a - angle_b):.4f} rad "
                f"(bound {consistency_bound})")
        if angle_a > MIN_ROTATION:
            v = np.asarray(pair.a.orientation[1:], dtype=float)
            n = np.linalg.norm(v)
            if n > 0:
                axes.append(v / n)
    if len(axes) < 2:
        raise DegenerateMotionsError("fewer than 2 pairs with usable rotation axes")
    max_spread = 0.0
    for i in range(len(axes)):
        for j in range(i + 1, len(axes)):
            dot = abs(float(np.dot(axes[i], axes[j])))
            max_spread = max(max_spread, math.acos(min(1.0, dot)))
    if max_spread < DEGENERATE_AXIS_TOL:
        raise DegenerateMotionsError(
            f"rotation axes parallel within {math.degrees(DEGENERATE_AXIS_TOL):.1f} degrees")


def alignment_error(x: Pose, pairs: list[MotionPair]) -> float:
    """Mean dual-quaternion alignment error of X over the pairs: the 8-vector
    norm of a*x - x*b, minimized over the dual-quaternion sign of b."""
    qx, qx_d = _dual_quat(x)
    total = 0.0
    for pair in pairs:
        qa, qa_d = _dual_quat(pair.a)
        qb, qb_d = _dual_quat(pair.b)
        real = quat_mul(qa, qx) - quat_mul(qx, qb)
        dual = quat_mul(qa, qx_d) + quat_mul(qa_d, qx) \
            - quat_mul(qx, qb_d) - quat_mul(qx_d, qb)
        real_p = quat_mul(qa, qx) + quat_mul(qx, qb)
        dual_p = quat_mul(qa, qx_d) + quat_mul(qa_d, qx) \
            + quat_mul(qx, qb_d) + quat_mul(qx_d, qb)
        err = min(math.hypot(np.linalg.norm(real), np.linalg.norm(dual)),
                  math.hypot(np.linalg.norm(real_p), np.linalg.norm(dual_p)))
        total += err
    return total / len(pairs)


def solve_hand_eye(pairs: list[MotionPair],
                   consistency_bound: float = CONSISTENCY_BOUND) -> CalibrationResult:
    """Solve A X = X B over the motion pairs for the sensor-to-base pose X."""
    _check_pairs(list(pairs), consistency_bound)
    rows = np.vstack([_pair_rows(p) for p in pairs])
    _, _, vh = np.linalg.svd(rows)
    v1 = vh[6]
    v2 = vh[7]
    u1, w1 = v1[:4], v1[4:]
    u2, w2 = v2[:4], v2[4:]

    a = float(np.dot(u1, w1))
    b = float(np.dot(u1, w2) + np.dot(u2, w1))
    c = float(np.dot(u2, w2))
    uu11 = float(np.dot(u1, u1))
    uu12 = float(np.dot(u1, u2))
    uu22 = float(np.dot(u2, u2))

    def norm_value(s):
        return uu11 * s * s + 2.0 * uu12 * s + uu22

    if abs(a) < 1e-14:
        roots = [-c / b] if abs(b) > 1e-14 else [0.0]
    else:
        disc = b * b - 4.0 * a * c
        sq = math.sqrt(max(0.0, disc))
        roots = [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)]
    s = max(roots, key=norm_value)
    val = norm_value(s)
    if val <= 0:
        raise DegenerateMotionsError("null-space mixing produced a non-positive norm")
    lam2 = 1.0 / math.sqrt(val)
    lam1 = s * lam2

    dq = lam1 * v1 + lam2 * v2
    q = dq[:4]
    q_d = dq[4:]
    n = float(np.linalg.norm(q))
    q = q / n
    q_d = q_d / n
    q_d = q_d - float(np.dot(q, q_d)) * q  # enforce orthogonality exactly
    t = 2.0 * quat_mul(q_d, quat_conj(q))
    x = Pose(t[1:], q)
    return CalibrationResult(x, alignment_error(x, list(pairs)), len(pairs))


# --- simulated station collection ---------------------------------------------


def station_joints(n: int, rng: np.random.Generator) -> list[np.ndarray]:
    """n joint configurations spread over the workspace with diverse wrist
    rotations (the solver needs non-parallel motion axes)."""
    stations = []
    for _ in range(n):
        j2 = rng.uniform(0.8, 2.4)
        joints = np.array([
            rng.uniform(-1.4, 1.4),            # base yaw
            j2 / 2.0 + rng.uniform(0.05, 0.9),  # shoulder, keeps endpoint above table
            j2,
            rng.uniform(-1.5, 1.5),
            rng.uniform(-1.2, 1.2),
            rng.uniform(-1.5, 1.5),
        ])
        stations.append(joints)
    return stations


def collect_stations(world: WorldSim, n: int, rot_noise: float = 0.0,
                     pos_noise: float = 0.0,
                     rng: Optional[np.random.Generator] = None) -> list[MotionPair]:
    """Drive the simulated arm through n stations and difference consecutive
    endpoint / camera-frame marker poses into n-1 motion pairs.

    rot_noise (rad) and pos_noise (m) perturb the marker measurement only; the
    robot side comes from exact kinematics.
    """
    if not world.scene.marker_visible:
        raise MarkerNotVisibleError("calibration marker is not visible to the camera")
    if n < 2:
        raise DegenerateMotionsError("station collection needs n >= 2")
    rng = rng or np.random.default_rng(0)
    endpoint_poses = []
    marker_poses = []
    for joints in station_joints(n, rng):
        world.set_joints(joints)
        endpoint_poses.append(world.endpoint)
        measured = world.marker_in_camera()
        noise_q = Pose(
            rng.normal(0.0, pos_noise, 3),
            _small_rotation(rng, rot_noise))
        marker_poses.append(measured.compose(noise_q))
    pairs = []
    for i in range(n - 1):
        a = endpoint_poses[i + 1].compose(endpoint_poses[i].inverse())
        b = marker_poses[i + 1].compose(marker_poses[i].inverse())
        pairs.append(MotionPair(a, b))
    return pairs


def _small_rotation(rng: np.random.Generator, sigma: float) -> np.ndarray:
    axis = rng.normal(size=3)
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        axis = np.array([0.0, 0.0, 1.0])
        norm = 1.0
    angle = rng.normal(0.0, sigma)
    half = 0.5 * angle
    return np.concatenate(([math.cos(half)], math.sin(half) * axis / norm))


def pose_error(a: Pose, b: Pose) -> tuple[float, float]:
    """(position error in meters, rotation error in radians)."""
    return a.distance_to(b)


def calibrate_world(world: WorldSim, stations: int = 11, rot_noise: float = 0.0,
                    pos_noise: float = 0.0, seed: int = 0) -> CalibrationResult:
    rng = np.random.default_rng(seed)
    pairs = collect_stations(world, stations, rot_noise=rot_noise,
                             pos_noise=pos_noise, rng=rng)
    return solve_hand_eye(pairs)
