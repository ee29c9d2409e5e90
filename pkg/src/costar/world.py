"""Deterministic simulated workspace standing in for real perception and robot
hardware.

The simulation owns ground truth: object poses, the arm endpoint, gripper and
tool state. Perception-style access goes through `simulate_detection`, which
adds seeded sensor noise and dropouts; everything downstream of that call sees
only the detected copies, never ground truth. All randomness flows from the
scene seed, so a fixed seed reproduces the entire trace bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .geometry import (
    Pose,
    SymmetryGroup,
    TRIVIAL_GROUP,
    cube_group,
    cylinder_group,
    quat_from_axis_angle,
    quat_mul,
    quat_normalize,
    quat_slerp,
    quat_to_matrix,
)

# Reachability shell of the simulated arm (meters, around the base).
R_MIN = 0.2
R_MAX = 0.85
LINK_LENGTH = R_MAX / 2.0  # two equal links

ARRIVAL_TOL = 1e-4
DEFAULT_GRASP_RADIUS = 0.02
DEFAULT_SPEED = 0.5  # m/s

# Fixed ground-truth sensor mount used when a scene does not specify one.
DEFAULT_CAMERA = Pose([0.8, -0.6, 0.9], quat_from_axis_angle([0.2, 0.9, -0.3], 2.0))
MARKER_OFFSET = Pose([0.0, 0.0, 0.05])  # marker fixed to the arm endpoint


class UnreachableError(ValueError):
    pass


class NothingToGraspError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    pos_sigma: float = 0.0     # meters, per axis
    rot_sigma: float = 0.0     # radians, about a random axis
    dropout_prob: float = 0.0  # [0, 1] per object per detection


@dataclass(frozen=True)
class ObjectClass:
    label: str
    symmetry: SymmetryGroup
    grasp_offset: Pose = field(default_factory=Pose)


def default_classes() -> dict[str, ObjectClass]:
    return {
        "node": ObjectClass("node", cube_group()),
        "link": ObjectClass("link", cylinder_group(4)),
        "polisher": ObjectClass("polisher", cylinder_group(1)),
    }


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    class_label: str
    pose: Pose
    symmetry: SymmetryGroup = TRIVIAL_GROUP
    grasped_by: Optional[str] = None


@dataclass(frozen=True)
class Region:
    """Axis-aligned box: center plus full extents (all positive)."""

    center: np.ndarray
    size: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        object.__setattr__(self, "size", np.asarray(self.size, dtype=float).reshape(3))
        if np.any(self.size <= 0):
            raise ValueError("region extent must be positive")

    def contains(self, point) -> bool:
        return bool(np.all(np.abs(np.asarray(point, dtype=float) - self.center) <= self.size / 2.0))


@dataclass
class Scene:
    name: str = "scene"
    objects: list[ObjectInstance] = field(default_factory=list)
    regions: dict[str, Region] = field(default_factory=dict)
    frames: dict[str, Pose] = field(default_factory=dict)
    waypoints: dict[str, Pose] = field(default_factory=dict)
    noise: NoiseModel = field(default_factory=NoiseModel)
    rng_seed: int = 0
    table_height: float = 0.0
    base: np.ndarray = field(default_factory=lambda: np.zeros(3))
    camera: Pose = DEFAULT_CAMERA
    marker_visible: bool = True
    gripper_type: str = "adaptive"  # adaptive (all modes) or parallel (pinch only)
    classes: dict[str, ObjectClass] = field(default_factory=default_classes)

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float).reshape(3)
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("scene objects must have distinct ids")


def _parse_symmetry(spec_str: str) -> SymmetryGroup:
    if spec_str == "cube":
        return cube_group()
    if spec_str.startswith("cylinder:"):
        return cylinder_group(int(spec_str.split(":", 1)[1]))
    if spec_str in ("trivial", "none"):
        return TRIVIAL_GROUP
    raise ValueError(f"unknown symmetry spec {spec_str!r}")


def scene_from_dict(data: dict) -> Scene:
    classes = default_classes()
    for label, cfg in (data.get("classes") or {}).items():
        classes[label] = ObjectClass(
            label,
            _parse_symmetry(cfg.get("symmetry", "trivial")),
            Pose.from_list(cfg["grasp_offset"]) if "grasp_offset" in cfg else Pose(),
        )
    objects = []
    for i, obj in enumerate(data.get("objects") or []):
        label = obj["class"]
        cls = classes.get(label) or ObjectClass(label, TRIVIAL_GROUP)
        classes.setdefault(label, cls)
        objects.append(ObjectInstance(
            id=obj.get("id", f"gt_{label}_{i}"),
            class_label=label,
            pose=Pose.from_list(obj["pose"]),
            symmetry=cls.symmetry,
        ))
    noise_cfg = data.get("noise") or {}
    return Scene(
        name=data.get("name", "scene"),
        objects=objects,
        regions={name: Region(cfg["center"], cfg["size"])
                 for name, cfg in (data.get("regions") or {}).items()},
        frames={name: Pose.from_list(v) for name, v in (data.get("frames") or {}).items()},
        waypoints={name: Pose.from_list(v) for name, v in (data.get("waypoints") or {}).items()},
        noise=NoiseModel(
            pos_sigma=float(noise_cfg.get("pos_sigma", 0.0)),
            rot_sigma=float(noise_cfg.get("rot_sigma", 0.0)),
            dropout_prob=float(noise_cfg.get("dropout", 0.0)),
        ),
        rng_seed=int(data.get("seed", 0)),
        table_height=float(data.get("table_height", 0.0)),
        base=data.get("base", [0.0, 0.0, 0.0]),
        camera=Pose.from_list(data["camera"]) if "camera" in data else DEFAULT_CAMERA,
        marker_visible=bool(data.get("marker_visible", True)),
        gripper_type=data.get("gripper", "adaptive"),
        classes=classes,
    )


def load_scene(path) -> Scene:
    """Load a scene file (YAML or JSON; JSON parses as YAML)."""
    text = Path(path).read_text()
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError(f"scene file {path} does not contain a mapping")
    scene = scene_from_dict(data)
    if scene.name == "scene":
        scene.name = Path(path).stem
    return scene


# --- simplified analytic kinematics -----------------------------------------
#
# Joints 0..2 place the endpoint (base yaw, shoulder pitch, elbow on a planar
# two-link chain); joints 3..5 set the orientation as z-y-x Euler angles.
# Decoupled on purpose: forward and inverse maps are exact inverses, which is
# all the reachability predicate and endpoint symbol need.

def forward_kinematics(joints, base) -> Pose:
    j = np.asarray(joints, dtype=float).reshape(6)
    beta = math.atan2(LINK_LENGTH * math.sin(j[2]), LINK_LENGTH * (1.0 + math.cos(j[2])))
    r = LINK_LENGTH * math.sqrt(max(0.0, 2.0 * (1.0 + math.cos(j[2]))))
    elev = j[1] - beta
    direction = np.array([
        math.cos(elev) * math.cos(j[0]),
        math.cos(elev) * math.sin(j[0]),
        math.sin(elev),
    ])
    orientation = quat_mul(quat_mul(
        quat_from_axis_angle([0, 0, 1], j[3]),
        quat_from_axis_angle([0, 1, 0], j[4])),
        quat_from_axis_angle([1, 0, 0], j[5]))
    return Pose(np.asarray(base) + r * direction, orientation)


def inverse_kinematics(pose: Pose, base) -> np.ndarray:
    d = pose.position - np.asarray(base)
    r = float(np.linalg.norm(d))
    r = min(r, 2.0 * LINK_LENGTH)
    cos_j2 = max(-1.0, min(1.0, r * r / (2.0 * LINK_LENGTH * LINK_LENGTH) - 1.0))
    j2 = math.acos(cos_j2)
    beta = math.atan2(LINK_LENGTH * math.sin(j2), LINK_LENGTH * (1.0 + math.cos(j2)))
    j0 = math.atan2(d[1], d[0]) if (abs(d[0]) > 1e-12 or abs(d[1]) > 1e-12) else 0.0
    elev = math.atan2(d[2], math.hypot(d[0], d[1])) if r > 1e-12 else 0.0
    j1 = elev + beta
    m = quat_to_matrix(pose.orientation)
    sy = max(-1.0, min(1.0, -m[2, 0]))
    j4 = math.asin(sy)
    if abs(sy) < 1.0 - 1e-9:
        j3 = math.atan2(m[1, 0], m[0, 0])
        j5 = math.atan2(m[2, 1], m[2, 2])
    else:  # gimbal: fold roll into yaw
        j3 = math.atan2(-m[0, 1], m[1, 1])
        j5 = 0.0
    return np.array([j0, j1, j2, j3, j4, j5])


@dataclass(frozen=True)
class RobotState:
    endpoint: Pose
    joint_positions: np.ndarray
    gripper_closed: bool
    tool_powered: bool


class WorldSim:
    """Single-owner simulation of the workcell.

    All mutation happens through the methods below, which the runtime calls
    from one executor; readers get value snapshots. Motion is kinematic
    interpolation with per-tick advance = speed * dt.
    """

    def __init__(self, scene: Scene):
        self.scene = scene
        self.rng = np.random.default_rng(scene.rng_seed)
        self.objects: list[ObjectInstance] = list(scene.objects)
        self.tool_powered = False
        self.gripper_closed = False
        home = scene.waypoints.get("home", Pose(scene.base + np.array([0.5, 0.0, 0.3])))
        if not self.reachable(home):
            raise UnreachableError("home waypoint outside the workspace shell")
        self._endpoint = home
        self._move: Optional[dict] = None

    # -- robot state ----------------------------------------------------------

    @property
    def endpoint(self) -> Pose:
        return self._endpoint

    def robot_state(self) -> RobotState:
        return RobotState(self._endpoint, inverse_kinematics(self._endpoint, self.scene.base),
                          self.gripper_closed, self.tool_powered)

    def set_joints(self, joints):
        """Teleport to a joint configuration (used by station collection)."""
        self._move = None
        self._endpoint = forward_kinematics(joints, self.scene.base)
        self._track_grasped()

    def reachable(self, goal: Pose) -> bool:
        r = float(np.linalg.norm(goal.position - self.scene.base))
        return R_MIN <= r <= R_MAX and goal.position[2] >= self.scene.table_height

    # -- motion ----------------------------------------------------------------

    def start_move(self, goal: Pose, speed: float = DEFAULT_SPEED):
        """Begin interpolated motion toward the goal. A goal within arrival
        tolerance of the current position completes immediately (rotation
        included), so a move to the current endpoint succeeds in one tick."""
        if not self.reachable(goal):
            raise UnreachableError(f"goal {goal} outside the workspace shell")
        if speed <= 0:
            raise ValueError("speed must be positive")
        if float(np.linalg.norm(goal.position - self._endpoint.position)) < ARRIVAL_TOL:
            self._endpoint = goal
            self._move = None
            self._track_grasped()
            return
        self._move = {
            "start": self._endpoint,
            "goal": goal,
            "speed": float(speed),
            "dist": float(np.linalg.norm(goal.position - self._endpoint.position)),
            "fraction": 0.0,
        }

    def move_arrived(self) -> bool:
        if self._move is not None:
            return False
        return True

    def cancel_move(self):
        self._move = None

    def step(self, dt: float):
        """Advance simulated time: motion interpolation and grasp tracking."""
        mv = self._move
        if mv is not None:
            mv["fraction"] = min(1.0, mv["fraction"] + mv["speed"] * dt / mv["dist"])
            f = mv["fraction"]
            if (1.0 - f) * mv["dist"] < ARRIVAL_TOL:  # within arrival tolerance
                self._endpoint = mv["goal"]
                self._move = None
            else:
                self._endpoint = Pose(
                    mv["start"].position + f * (mv["goal"].position - mv["start"].position),
                    quat_slerp(mv["start"].orientation, mv["goal"].orientation, f),
                )
        self._track_grasped()

    def _grasp_frame(self) -> Pose:
        return self._endpoint

    def _track_grasped(self):
        frame = self._grasp_frame()
        for i, obj in enumerate(self.objects):
            if obj.grasped_by is not None:
                self.objects[i] = replace(obj, pose=frame)

    # -- gripper and tool --------------------------------------------------------

    def execute_grasp(self, grasp_radius: float = DEFAULT_GRASP_RADIUS, gripper_id: str = "gripper",
                      ) -> ObjectInstance:
        """Close on the nearest free object within reach of the grasp frame.

        The object pose snaps to the grasp frame: gripper closure centers the
        part even when the approach was slightly off.
        """
        self.gripper_closed = True
        frame = self._grasp_frame()
        best = None
        for obj in self.objects:
            if obj.grasped_by is not None:
                continue
            d = float(np.linalg.norm(obj.pose.position - frame.position))
            if d <= grasp_radius and (best is None or (d, obj.id) < (best[0], best[1].id)):
                best = (d, obj)
        if best is None:
            raise NothingToGraspError(f"no free object within {grasp_radius} m of the gripper")
        grabbed = replace(best[1], grasped_by=gripper_id, pose=frame)
        self.objects[self.objects.index(best[1])] = grabbed
        return grabbed

    def execute_release(self, gripper_id: str = "gripper") -> Optional[ObjectInstance]:
        """Open the gripper; a held object detaches keeping its current pose."""
        self.gripper_closed = False
        for i, obj in enumerate(self.objects):
            if obj.grasped_by == gripper_id:
                released = replace(obj, grasped_by=None)
                self.objects[i] = released
                return released
        return None

    def set_tool_power(self, on: bool):
        self.tool_powered = bool(on)

    # -- perception ----------------------------------------------------------------

    def simulate_detection(self) -> list[ObjectInstance]:
        """Noisy snapshot of ungrasped ground-truth objects.

        Output is ordered by ground-truth id with anonymous detection ids;
        persistent naming is the identity update's job. Position noise is
        Gaussian per axis, rotation noise a Gaussian angle about a random axis,
        both applied to the detected copy only.
        """
        noise = self.scene.noise
        out = []
        for obj in sorted(self.objects, key=lambda o: o.id):
            if obj.grasped_by is not None:
                continue
            if self.rng.random() < noise.dropout_prob:
                continue
            pos = obj.pose.position + self.rng.normal(0.0, noise.pos_sigma, 3)
            axis = self.rng.normal(size=3)
            if np.linalg.norm(axis) < 1e-12:
                axis = np.array([0.0, 0.0, 1.0])
            angle = self.rng.normal(0.0, noise.rot_sigma)
            orientation = quat_normalize(
                quat_mul(quat_from_axis_angle(axis, angle), obj.pose.orientation))
            out.append(ObjectInstance(
                id=f"det_{len(out)}",
                class_label=obj.class_label,
                pose=Pose(pos, orientation),
                symmetry=obj.symmetry,
            ))
        return out

    def marker_in_camera(self) -> Pose:
        """Pose of the endpoint-mounted marker in the camera frame."""
        if not self.scene.marker_visible:
            raise RuntimeError("marker not visible")
        return self.scene.camera.inverse().compose(self._endpoint.compose(MARKER_OFFSET))

    # -- introspection ----------------------------------------------------------------

    def snapshot(self) -> dict:
        """JSON-ready state summary for the event stream."""
        return {
            "endpoint": self._endpoint.to_list(),
            "gripperClosed": self.gripper_closed,
            "toolPowered": self.tool_powered,
            "moving": self._move is not None,
            "objects": [
                {"id": o.id, "class": o.class_label, "pose": o.pose.to_list(),
                 "grasped": o.grasped_by is not None}
                for o in self.objects
            ],
        }


def scene_to_dict(scene: Scene) -> dict:
    data: dict = {
        "name": scene.name,
        "seed": scene.rng_seed,
        "table_height": scene.table_height,
        "base": [float(v) for v in scene.base],
        "marker_visible": scene.marker_visible,
        "gripper": scene.gripper_type,
        "noise": {
            "pos_sigma": scene.noise.pos_sigma,
            "rot_sigma": scene.noise.rot_sigma,
            "dropout": scene.noise.dropout_prob,
        },
        "objects": [
            {"id": o.id, "class": o.class_label, "pose": o.pose.to_list()}
            for o in scene.objects
        ],
        "regions": {k: {"center": [float(v) for v in r.center],
                        "size": [float(v) for v in r.size]}
                    for k, r in scene.regions.items()},
        "frames": {k: p.to_list() for k, p in scene.frames.items()},
        "waypoints": {k: p.to_list() for k, p in scene.waypoints.items()},
    }
    if scene.camera is not DEFAULT_CAMERA:
        data["camera"] = scene.camera.to_list()
    return data


def save_scene(scene: Scene, path):
    path = Path(path)
    data = scene_to_dict(scene)
    if path.suffix == ".json":
        path.write_text(json.dumps(data, indent=2, sort_keys=True))
    else:
        path.write_text(yaml.safe_dump(data, sort_keys=True))
