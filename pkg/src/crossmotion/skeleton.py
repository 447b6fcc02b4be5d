"""Unified 25-joint skeleton: topology, bone lengths, forward kinematics, retargeting.

All species share one kinematic tree with 25 joints and 24 bones. A skeleton's
morphology is fully described by its bone-length vector (one nonnegative length
per bone, ordered by child joint); the rest pose follows from fixed canonical
bone directions. Tailless species carry three virtual tail joints with
zero-length bones, co-located with the pelvis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NUM_JOINTS = 25
NUM_BONES = 24

# Tail chain hangs off the pelvis; for tailless species these three bones
# have length zero and the joints coincide with the pelvis.
TAIL_JOINTS = (22, 23, 24)

PELVIS = 0


class MappingIncompleteError(ValueError):
    """A unified joint is neither mapped to a source joint nor marked virtual."""


@dataclass(frozen=True)
class SkeletonTopology:
    """The shared kinematic tree.

    Attributes:
        joint_names: 25 identifiers, index-aligned with all joint arrays.
        parent_index: parent joint per joint; the pelvis root has parent -1.
        bone_edges: 24 (parent, child) pairs, ordered by child joint 1..24.
            Bone-length vectors use this ordering everywhere.
        bone_directions: (24, 3) unit offset directions of the rest pose,
            one per bone edge.
    """

    joint_names: tuple[str, ...]
    parent_index: tuple[int, ...]
    bone_edges: tuple[tuple[int, int], ...]
    bone_directions: np.ndarray = field(repr=False)

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    @property
    def num_bones(self) -> int:
        return len(self.bone_edges)

    def children(self, joint: int) -> list[int]:
        return [j for j, p in enumerate(self.parent_index) if p == joint]

    def descendants(self, joint: int) -> list[int]:
        """All joints strictly below `joint` in the tree, DFS order."""
        out: list[int] = []
        stack = self.children(joint)
        while stack:
            j = stack.pop()
            out.append(j)
            stack.extend(self.children(j))
        return out


_JOINT_NAMES = (
    "pelvis",
    "spine1",
    "spine2",
    "spine3",
    "neck",
    "head",
    "left_hip",
    "left_knee",
    "left_ankle",
    "left_foot",
    "right_hip",
    "right_knee",
    "right_ankle",
    "right_foot",
    "left_scapula",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_scapula",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "tail1",
    "tail2",
    "tail3",
)

_PARENTS = (
    -1,            # pelvis
    0, 1, 2,       # spine chain
    3,             # neck
    4,             # head
    0, 6, 7, 8,    # left leg: hip, knee, ankle, foot
    0, 10, 11, 12, # right leg
    3, 14, 15, 16, # left arm / foreleg: scapula, shoulder, elbow, wrist
    3, 18, 19, 20, # right arm / foreleg
    0, 22, 23,     # tail chain
)

_UP = (0.0, 1.0, 0.0)
_DOWN = (0.0, -1.0, 0.0)
_FWD = (0.0, 0.0, 1.0)
_BACK = (0.0, 0.0, -1.0)
_LEFT = (-1.0, 0.0, 0.0)
_RIGHT = (1.0, 0.0, 0.0)

# Rest-pose direction per bone, indexed by child joint - 1. Spine, neck and
# head grow upward, legs downward with forward feet, arms sideways, tail back.
_DIRECTIONS = (
    _UP, _UP, _UP,            # spine1..3
    _UP,                      # neck
    _UP,                      # head
    _DOWN, _DOWN, _DOWN,      # left hip, knee, ankle
    _FWD,                     # left foot
    _DOWN, _DOWN, _DOWN,      # right leg
    _FWD,                     # right foot
    _LEFT, _LEFT, _LEFT, _LEFT,     # left arm
    _RIGHT, _RIGHT, _RIGHT, _RIGHT, # right arm
    _BACK, _BACK, _BACK,      # tail
)


def canonical_topology() -> SkeletonTopology:
    """The single shared 25-joint topology used throughout the pipeline."""
    edges = tuple((_PARENTS[child], child) for child in range(1, NUM_JOINTS))
    directions = np.asarray(_DIRECTIONS, dtype=np.float64)
    return SkeletonTopology(
        joint_names=_JOINT_NAMES,
        parent_index=_PARENTS,
        bone_edges=edges,
        bone_directions=directions,
    )


def _check_joints(joints: np.ndarray) -> np.ndarray:
    joints = np.asarray(joints, dtype=np.float64)
    if joints.shape[-2:] != (NUM_JOINTS, 3):
        raise ValueError(f"expected (..., {NUM_JOINTS}, 3) joints, got {joints.shape}")
    if not np.isfinite(joints).all():
        raise ValueError("joint coordinates must be finite")
    return joints


def extract_bone_lengths(tpose: np.ndarray, topo: SkeletonTopology) -> np.ndarray:
    """Per-bone Euclidean lengths of a rest pose, ordered as topo.bone_edges."""
    return frame_bone_lengths(tpose, topo)


def frame_bone_lengths(joints: np.ndarray, topo: SkeletonTopology) -> np.ndarray:
    """Bone lengths of an arbitrarily posed (..., 25, 3) frame.

    Works on single frames or stacks of frames; lengths are invariant under
    any rigid transform of the frame.
    """
    joints = _check_joints(joints)
    parents = np.array([e[0] for e in topo.bone_edges])
    children = np.array([e[1] for e in topo.bone_edges])
    deltas = joints[..., children, :] - joints[..., parents, :]
    return np.linalg.norm(deltas, axis=-1)


def forward_kinematics_tpose(bone_lengths: np.ndarray, topo: SkeletonTopology) -> np.ndarray:
    """Rest-pose joint positions from a bone-length vector.

    The root sits at the origin; each child is offset from its parent by
    length * canonical direction. Zero lengths are legal (virtual tails) and
    are never normalized away.

    Raises:
        ValueError: on negative or non-finite lengths.
    """
    b = np.asarray(bone_lengths, dtype=np.float64)
    if b.shape != (NUM_BONES,):
        raise ValueError(f"expected {NUM_BONES} bone lengths, got shape {b.shape}")
    if not np.isfinite(b).all():
        raise ValueError("bone lengths must be finite")
    if (b < 0).any():
        raise ValueError("bone lengths must be nonnegative")

    joints = np.zeros((NUM_JOINTS, 3), dtype=np.float64)
    for e, (parent, child) in enumerate(topo.bone_edges):
        joints[child] = joints[parent] + b[e] * topo.bone_directions[e]
    return joints


def retarget_to_unified(
    src_joints: np.ndarray,
    joint_map: dict[int, int | None],
    scale: float,
    topo: SkeletonTopology,
) -> np.ndarray:
    """Map a foreign skeleton's joints onto the unified 25-joint layout.

    Args:
        src_joints: (N_src, 3) single frame or (L, N_src, 3) sequence.
        joint_map: unified joint index -> source joint index, or None to mark
            the unified joint virtual. All 25 unified joints must appear.
            Virtual joints are placed at the (scaled) pelvis position.
        scale: uniform scale applied to all mapped coordinates; must be > 0.

    Raises:
        MappingIncompleteError: a unified joint is missing from joint_map,
            or the pelvis itself is marked virtual.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    src = np.asarray(src_joints, dtype=np.float64)
    single = src.ndim == 2
    if single:
        src = src[None]
    if src.ndim != 3 or src.shape[-1] != 3:
        raise ValueError(f"expected (L, N_src, 3) joints, got {src_joints.shape}")

    missing = [j for j in range(NUM_JOINTS) if j not in joint_map]
    if missing:
        raise MappingIncompleteError(f"unified joints {missing} are unmapped and not marked virtual")
    if joint_map[PELVIS] is None:
        raise MappingIncompleteError("the pelvis cannot be virtual")

    out = np.empty((src.shape[0], NUM_JOINTS, 3), dtype=np.float64)
    virtual = []
    for unified, source in joint_map.items():
        if source is None:
            virtual.append(unified)
        else:
            out[:, unified] = scale * src[:, source]
    for unified in virtual:
        out[:, unified] = out[:, PELVIS]
    return out[0] if single else out
