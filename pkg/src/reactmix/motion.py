"""Skeletal-motion data model, forward kinematics, and pair standardization.

Conventions used throughout the toolkit:

* y is the upward axis; "horizontal" means the xz-plane.
* Joint rotations are intrinsic XYZ Euler angles in degrees. The matrix of
  ``(ax, ay, az)`` is ``Rx(ax) @ Ry(ay) @ Rz(az)`` applied to column vectors.
* A skeleton is a single-rooted tree; the root's parent index is -1.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .errors import DataError, DegeneratePoseError, StructuralError

BODY_PARTS = ("left_arm", "right_arm", "left_leg", "right_leg", "trunk")

ROOT_PARENT = -1


@dataclass(frozen=True)
class Skeleton:
    """Joint hierarchy with rest offsets and the five-part body partition.

    ``partition`` maps each body-part name in :data:`BODY_PARTS` to the joint
    indices it owns. The five sets are pairwise disjoint and together cover
    every joint; this is the structural prior behind the hierarchical encoder
    (five parts + whole body) and the bone-length loss.
    """

    joint_names: tuple[str, ...]
    parent_index: tuple[int, ...]
    rest_offsets: np.ndarray  # (J, 3)
    partition: dict[str, tuple[int, ...]]
    name: str = "skeleton"

    def __post_init__(self):
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(self, "parent_index", tuple(int(p) for p in self.parent_index))
        offsets = np.asarray(self.rest_offsets, dtype=np.float64)
        object.__setattr__(self, "rest_offsets", offsets)
        object.__setattr__(
            self, "partition", {k: tuple(int(j) for j in v) for k, v in self.partition.items()}
        )
        self._validate()

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    @property
    def root_index(self) -> int:
        return self.parent_index.index(ROOT_PARENT)

    def _validate(self) -> None:
        j = self.joint_count
        if len(self.parent_index) != j:
            raise StructuralError(f"parent_index has {len(self.parent_index)} entries for {j} joints")
        if self.rest_offsets.shape != (j, 3):
            raise StructuralError(f"rest_offsets shape {self.rest_offsets.shape} != ({j}, 3)")
        if not np.all(np.isfinite(self.rest_offsets)):
            raise DataError("rest_offsets contain non-finite values")

        roots = [i for i, p in enumerate(self.parent_index) if p == ROOT_PARENT]
        if len(roots) != 1:
            raise StructuralError(f"skeleton must have exactly one root, found {len(roots)}")
        for i, p in enumerate(self.parent_index):
            if p != ROOT_PARENT and not 0 <= p < j:
                raise StructuralError(f"joint {i} has out-of-range parent {p}")
        # cycle check: every joint must reach the root
        for i in range(j):
            seen = set()
            k = i
            while k != roots[0]:
                if k in seen:
                    raise StructuralError(f"parent_index contains a cycle through joint {i}")
                seen.add(k)
                k = self.parent_index[k]

        if set(self.partition) != set(BODY_PARTS):
            raise StructuralError(f"partition keys must be {BODY_PARTS}, got {tuple(self.partition)}")
        claimed: list[int] = []
        for part, idxs in self.partition.items():
            for idx in idxs:
                if not 0 <= idx < j:
                    raise StructuralError(f"partition {part!r} references joint {idx} out of range")
            claimed.extend(idxs)
        if len(claimed) != len(set(claimed)):
            raise StructuralError("partition sets are not pairwise disjoint")
        if set(claimed) != set(range(j)):
            raise StructuralError("partition does not cover all joints")

        lengths = np.linalg.norm(self.rest_offsets, axis=1)
        for i in range(j):
            if i != roots[0] and lengths[i] <= 0.0:
                raise StructuralError(f"non-root joint {i} ({self.joint_names[i]}) has zero rest offset")

    def bone_joint_indices(self) -> list[int]:
        """Indices of non-root joints, each defining the bone parent->joint."""
        r = self.root_index
        return [i for i in range(self.joint_count) if i != r]

    def rest_bone_lengths(self) -> np.ndarray:
        """Rest length of each bone, ordered as :meth:`bone_joint_indices`."""
        return np.linalg.norm(self.rest_offsets[self.bone_joint_indices()], axis=1)

    def part_root_joint(self, part: str) -> int:
        """Root-most joint of a body part (its parent lies outside the part)."""
        members = set(self.partition[part])
        for idx in self.partition[part]:
            if self.parent_index[idx] not in members:
                return idx
        raise StructuralError(f"partition {part!r} has no root-most joint")

    def topological_order(self) -> list[int]:
        """Joint indices ordered parents-before-children."""
        order, visited = [], set()
        pending = [self.root_index]
        children: dict[int, list[int]] = {i: [] for i in range(self.joint_count)}
        for i, p in enumerate(self.parent_index):
            if p != ROOT_PARENT:
                children[p].append(i)
        while pending:
            i = pending.pop()
            order.append(i)
            visited.add(i)
            pending.extend(reversed(children[i]))
        return order


@dataclass(frozen=True)
class MotionSequence:
    """T-frame sequence of per-joint 3D positions for one character.

    ``frames`` has shape (T, J, 3). Dataset sequences always have T >= 2;
    a single frame (T == 1) is representable so that generation preserves
    the input length for any input.
    """

    frames: np.ndarray
    frame_rate: float
    skeleton_ref: str

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise StructuralError(f"frames must be (T, J, 3), got {frames.shape}")
        if frames.shape[0] < 1:
            raise StructuralError("sequence must contain at least one frame")
        if not np.all(np.isfinite(frames)):
            raise DataError("sequence contains non-finite coordinates")
        if not self.frame_rate > 0:
            raise DataError(f"frame_rate must be positive, got {self.frame_rate}")
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_joints(self) -> int:
        return self.frames.shape[1]

    def with_frames(self, frames: np.ndarray) -> "MotionSequence":
        return replace(self, frames=frames)


@dataclass(frozen=True)
class InteractionPair:
    """Aligned (A, B) motion pair with its interaction class."""

    motion_a: MotionSequence
    motion_b: MotionSequence
    class_index: int
    subject_id: str
    dataset_id: str
    pair_id: str = ""

    def __post_init__(self):
        a, b = self.motion_a, self.motion_b
        if a.num_frames != b.num_frames:
            raise StructuralError(
                f"pair frame counts differ: A has {a.num_frames}, B has {b.num_frames}"
            )
        if a.frame_rate != b.frame_rate:
            raise StructuralError("pair frame rates differ")
        if a.num_frames < 2:
            raise StructuralError("interaction pairs need at least 2 frames")
        if self.class_index < 0:
            raise DataError(f"class_index must be non-negative, got {self.class_index}")


def euler_xyz_to_matrix(angles_deg: np.ndarray) -> np.ndarray:
    """Rotation matrices for intrinsic XYZ Euler angles in degrees.

    ``angles_deg`` has shape (..., 3); returns (..., 3, 3) computed as
    Rx @ Ry @ Rz.
    """
    a = np.radians(np.asarray(angles_deg, dtype=np.float64))
    cx, cy, cz = np.cos(a[..., 0]), np.cos(a[..., 1]), np.cos(a[..., 2])
    sx, sy, sz = np.sin(a[..., 0]), np.sin(a[..., 1]), np.sin(a[..., 2])
    m = np.empty(a.shape[:-1] + (3, 3), dtype=np.float64)
    m[..., 0, 0] = cy * cz
    m[..., 0, 1] = -cy * sz
    m[..., 0, 2] = sy
    m[..., 1, 0] = cx * sz + cz * sx * sy
    m[..., 1, 1] = cx * cz - sx * sy * sz
    m[..., 1, 2] = -cy * sx
    m[..., 2, 0] = sx * sz - cx * cz * sy
    m[..., 2, 1] = cz * sx + cx * sy * sz
    m[..., 2, 2] = cx * cy
    return m


def axis_rotation_matrix(axis: str, angle_deg: float) -> np.ndarray:
    """Single-axis rotation matrix, axis in {'x','y','z'}, angle in degrees."""
    t = math.radians(angle_deg)
    c, s = math.cos(t), math.sin(t)
    if axis == "x":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=np.float64)
    if axis == "y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=np.float64)
    if axis == "z":
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=np.float64)
    raise ValueError(f"unknown axis {axis!r}")


def forward_kinematics_from_matrices(
    skeleton: Skeleton,
    rotations: np.ndarray,
    root_translation: np.ndarray,
    frame_rate: float = 30.0,
) -> MotionSequence:
    """World-space joint positions from per-joint local rotation matrices.

    ``rotations`` has shape (T, J, 3, 3), ``root_translation`` (T, 3).
    Bone lengths of the result equal the rest-offset lengths exactly
    (rigid transforms only).
    """
    rotations = np.asarray(rotations, dtype=np.float64)
    root_translation = np.asarray(root_translation, dtype=np.float64)
    j = skeleton.joint_count
    if rotations.ndim != 4 or rotations.shape[1:] != (j, 3, 3):
        raise StructuralError(f"rotations must be (T, {j}, 3, 3), got {rotations.shape}")
    t = rotations.shape[0]
    if root_translation.shape != (t, 3):
        raise StructuralError(f"root_translation must be ({t}, 3), got {root_translation.shape}")
    if not np.all(np.isfinite(rotations)) or not np.all(np.isfinite(root_translation)):
        raise DataError("non-finite rotation or translation input")

    world_rot = np.empty((t, j, 3, 3), dtype=np.float64)
    world_pos = np.empty((t, j, 3), dtype=np.float64)
    root = skeleton.root_index
    for idx in skeleton.topological_order():
        if idx == root:
            world_rot[:, idx] = rotations[:, idx]
            world_pos[:, idx] = root_translation + skeleton.rest_offsets[idx]
        else:
            p = skeleton.parent_index[idx]
            world_rot[:, idx] = world_rot[:, p] @ rotations[:, idx]
            offset = skeleton.rest_offsets[idx]
            world_pos[:, idx] = world_pos[:, p] + np.einsum("tij,j->ti", world_rot[:, p], offset)
    return MotionSequence(frames=world_pos, frame_rate=frame_rate, skeleton_ref=skeleton.name)


def forward_kinematics(
    skeleton: Skeleton,
    joint_angles_deg: np.ndarray,
    root_translation: np.ndarray,
    frame_rate: float = 30.0,
) -> MotionSequence:
    """FK from intrinsic XYZ Euler angles in degrees, shape (T, J, 3)."""
    angles = np.asarray(joint_angles_deg, dtype=np.float64)
    if angles.ndim != 3 or angles.shape[1:] != (skeleton.joint_count, 3):
        raise StructuralError(
            f"joint_angles must be (T, {skeleton.joint_count}, 3), got {angles.shape}"
        )
    if not np.all(np.isfinite(angles)):
        raise DataError("non-finite joint angles")
    return forward_kinematics_from_matrices(
        skeleton, euler_xyz_to_matrix(angles), root_translation, frame_rate
    )


def bone_lengths(seq: MotionSequence, skeleton: Skeleton) -> np.ndarray:
    """Per-frame Euclidean length of each parent->child segment, (T, J-1)."""
    if seq.num_joints != skeleton.joint_count:
        raise StructuralError(
            f"sequence has {seq.num_joints} joints, skeleton {skeleton.joint_count}"
        )
    bones = skeleton.bone_joint_indices()
    parents = [skeleton.parent_index[i] for i in bones]
    return np.linalg.norm(seq.frames[:, bones] - seq.frames[:, parents], axis=2)


def scale_sequence(seq: MotionSequence, factor: float) -> MotionSequence:
    """Divide all coordinates by ``factor`` (e.g. 100 for cm -> m style units)."""
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    return seq.with_frames(seq.frames / factor)


def _facing_yaw(pair_frames_a: np.ndarray, skeleton: Skeleton) -> float:
    """Yaw angle (radians) of A's hip axis at the first frame.

    The facing proxy is the horizontal projection of the vector from the
    left-hip joint to the right-hip joint (root-most joints of the leg
    partitions). Raises if that projection is degenerate.
    """
    lh = skeleton.part_root_joint("left_leg")
    rh = skeleton.part_root_joint("right_leg")
    v = pair_frames_a[0, rh] - pair_frames_a[0, lh]
    vx, vz = v[0], v[2]
    if math.hypot(vx, vz) < 1e-12:
        raise DegeneratePoseError(
            "hip axis has no horizontal component at frame 1; cannot define facing"
        )
    return math.atan2(vz, vx)


def standardize_pair(pair: InteractionPair, skeleton: Skeleton) -> InteractionPair:
    """Remove A's frame-1 root translation and yaw from both characters.

    One rigid transform (computed at the first frame of character A) is
    applied to every frame of both characters: the inter-character geometry
    is untouched. Pure function; the input pair is not modified.
    """
    if pair.motion_a.num_joints != skeleton.joint_count:
        raise StructuralError("pair does not match skeleton joint count")
    root = skeleton.root_index
    origin = pair.motion_a.frames[0, root].copy()
    yaw = _facing_yaw(pair.motion_a.frames, skeleton)
    rot = axis_rotation_matrix("y", math.degrees(yaw))

    def apply(seq: MotionSequence) -> MotionSequence:
        shifted = seq.frames - origin
        return seq.with_frames(np.einsum("ij,tkj->tki", rot, shifted))

    return replace(pair, motion_a=apply(pair.motion_a), motion_b=apply(pair.motion_b))


def facing_yaw_of(seq: MotionSequence, skeleton: Skeleton) -> float:
    """Yaw (radians) of the hip axis at frame 1; zero after standardization."""
    return _facing_yaw(seq.frames, skeleton)
