"""Rigid-transform algebra, discrete rotation symmetry groups, and canonical
orientation resolution for rotationally ambiguous object poses.

Quaternions are numpy arrays in (w, x, y, z) order. q and -q describe the same
rotation; everything here canonicalizes the sign so the scalar part is >= 0.
Angles are radians, distances meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

QUAT_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

WORLD_AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}
AXIS_COLUMN = {"x": 0, "y": 1, "z": 2}


def quat_normalize(q) -> np.ndarray:
    """Unit-norm quaternion with canonical sign (first nonzero component > 0)."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise ValueError("cannot normalize zero quaternion")
    q = q / n
    for c in q:
        if c > 0.0:
            break
        if c < 0.0:
            q = -q
            break
    return q


def quat_mul(a, b) -> np.ndarray:
    """Hamilton product a*b (apply b first, then a, for frame composition a.b)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate 3-vector v by quaternion q."""
    qv = np.asarray(q[1:], dtype=float)
    v = np.asarray(v, dtype=float)
    t = 2.0 * np.cross(qv, v)
    return v + q[0] * t + np.cross(qv, t)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(m) -> np.ndarray:
    """Shepperd's method, numerically safe for all rotation matrices."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s,
             (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s,
             (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s,
             (m[1, 2] + m[2, 1]) / s]
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s,
             (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    return quat_normalize(q)


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        return QUAT_IDENTITY.copy()
    axis = axis / n
    half = 0.5 * angle
    return quat_normalize(np.concatenate(([math.cos(half)], math.sin(half) * axis)))


def quat_angle(q) -> float:
    """Geodesic rotation angle from the identity: 2*acos(|w|)."""
    return 2.0 * math.acos(min(1.0, abs(float(q[0]))))


def quat_angle_between(a, b) -> float:
    return quat_angle(quat_mul(quat_conj(a), b))


def quat_slerp(a, b, t: float) -> np.ndarray:
    """Shortest-path spherical interpolation."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    if dot > 1.0 - 1e-10:
        return quat_normalize(a + t * (b - a))
    theta = math.acos(min(1.0, dot))
    sin_theta = math.sin(theta)
    wa = math.sin((1.0 - t) * theta) / sin_theta
    wb = math.sin(t * theta) / sin_theta
    return quat_normalize(wa * a + wb * b)


def rot_x(angle: float) -> np.ndarray:
    return quat_from_axis_angle([1.0, 0.0, 0.0], angle)


def rot_y(angle: float) -> np.ndarray:
    return quat_from_axis_angle([0.0, 1.0, 0.0], angle)


def rot_z(angle: float) -> np.ndarray:
    return quat_from_axis_angle([0.0, 0.0, 1.0], angle)


@dataclass(frozen=True, eq=False)
class Pose:
    """6-DOF rigid transform: position (m) plus unit quaternion (w,x,y,z)."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: QUAT_IDENTITY.copy())

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "orientation", quat_normalize(self.orientation))

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_list(values) -> "Pose":
        """Deserialize from the wire 7-tuple [x, y, z, qw, qx, qy, qz]."""
        values = [float(v) for v in values]
        if len(values) != 7:
            raise ValueError(f"pose requires 7 values, got {len(values)}")
        return Pose(values[:3], values[3:])

    def to_list(self) -> list:
        return [float(v) for v in self.position] + [float(v) for v in self.orientation]

    def compose(self, other: "Pose") -> "Pose":
        """self applied first, then other in self's frame (self . other)."""
        return Pose(
            self.position + quat_rotate(self.orientation, other.position),
            quat_mul(self.orientation, other.orientation),
        )

    def inverse(self) -> "Pose":
        q_inv = quat_conj(self.orientation)
        return Pose(-quat_rotate(q_inv, self.position), q_inv)

    def transform_point(self, point) -> np.ndarray:
        return self.position + quat_rotate(self.orientation, point)

    def rotation_angle(self) -> float:
        return quat_angle(self.orientation)

    def distance_to(self, other: "Pose") -> tuple[float, float]:
        """(position distance, rotation angle) between two poses."""
        return (
            float(np.linalg.norm(self.position - other.position)),
            quat_angle_between(self.orientation, other.orientation),
        )

    def __repr__(self):
        p = ", ".join(f"{v:.4f}" for v in self.position)
        q = ", ".join(f"{v:.4f}" for v in self.orientation)
        return f"Pose([{p}], [{q}])"


def compose(a: Pose, b: Pose) -> Pose:
    return a.compose(b)


@dataclass(frozen=True)
class SymmetryGroup:
    """Discrete rotation group of an object model.

    Element 0 is always the identity. The element list is closed under
    composition (up to 1e-6 rad).
    """

    name: str
    elements: tuple = ()

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)


TRIVIAL_GROUP = SymmetryGroup("trivial", (QUAT_IDENTITY.copy(),))


def _dedup_and_order(name: str, quats) -> SymmetryGroup:
    """Canonical element order: identity first, then by (angle, components)."""
    unique: list[np.ndarray] = []
    for q in quats:
        q = quat_normalize(q)
        if not any(quat_angle_between(q, u) < 1e-6 for u in unique):
            unique.append(q)
    unique.sort(key=lambda q: (round(quat_angle(q), 9),) + tuple(np.round(q, 9)))
    assert quat_angle(unique[0]) < 1e-9, "identity must sort first"
    return SymmetryGroup(name, tuple(unique))


def cube_group() -> SymmetryGroup:
    """The 24 proper rotations of a cube, generated by 90-degree axis turns."""
    gens = [rot_x(math.pi / 2), rot_y(math.pi / 2), rot_z(math.pi / 2)]
    elements = [QUAT_IDENTITY.copy()]
    frontier = [QUAT_IDENTITY.copy()]
    while frontier:
        q = frontier.pop()
        for g in gens:
            cand = quat_normalize(quat_mul(q, g))
            if not any(quat_angle_between(cand, e) < 1e-6 for e in elements):
                elements.append(cand)
                frontier.append(cand)
    assert len(elements) == 24
    return _dedup_and_order("cube", elements)


def cylinder_group(n: int) -> SymmetryGroup:
    """2n rotations of a z-aligned cylinder: n turns about z, times a 180-degree
    end-over-end flip."""
    if n < 1:
        raise ValueError("cylinder discretization count must be >= 1")
    flip = rot_x(math.pi)
    elements = []
    for k in range(n):
        turn = rot_z(2.0 * math.pi * k / n)
        elements.append(turn)
        elements.append(quat_mul(flip, turn))
    return _dedup_and_order(f"cylinder{n}", elements)


def set_canonical_orientation(pose: Pose, group: SymmetryGroup,
                              priority: str = "zxy") -> Pose:
    """Replace the orientation by the symmetry-equivalent one nearest identity.

    Among candidates q_s = orientation * s over all group elements s, picks the
    one with minimum geodesic angle to identity. Near-ties (1e-9) prefer the
    candidate whose body axes best align with the same world axes, checked in
    `priority` order, with a final lexicographic fallback for full determinism.
    The result represents the same physical object configuration.
    """
    if len(group) == 0:
        raise ValueError("symmetry group must be nonempty")
    best_q = None
    best_key = None
    for s in group.elements:
        q = quat_normalize(quat_mul(pose.orientation, s))
        angle = quat_angle(q)
        rot = quat_to_matrix(q)
        align = tuple(-rot[AXIS_COLUMN[ax], AXIS_COLUMN[ax]] for ax in priority)
        key = (round(angle, 9),) + tuple(round(a, 9) for a in align) + tuple(q)
        if best_key is None or key < best_key:
            best_key = key
            best_q = q
    return Pose(pose.position, best_q)
