"""Per-frame motion features and conversions to/from world-space trajectories.

Each frame is a 76-vector: root yaw velocity (rad/frame), planar root linear
velocity in the yaw-aligned root frame (x, z in m/frame), root height (m),
then the positions of joints 1..24 in the root-local yaw-aligned frame
(24 x 3). Velocities at the final frame replicate the previous one so the
feature track stays frame-aligned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .skeleton import NUM_BONES, NUM_JOINTS, SkeletonTopology, frame_bone_lengths

FRAME_DIM = NUM_JOINTS * 3 + 1  # 76

ROT_VEL = 0
LIN_VEL = slice(1, 3)
HEIGHT = 3
LOCAL_JOINTS = slice(4, FRAME_DIM)

STD_FLOOR = 1e-6


class TooShortError(ValueError):
    """Sequence is too short for the requested operation."""


@dataclass
class GlobalMotion:
    """World-space view of a motion: (L, 25, 3) joint positions plus root yaw."""

    joints_world: np.ndarray
    root_yaw: np.ndarray

    def __post_init__(self) -> None:
        self.joints_world = np.asarray(self.joints_world, dtype=np.float64)
        self.root_yaw = np.asarray(self.root_yaw, dtype=np.float64)
        if self.joints_world.ndim != 3 or self.joints_world.shape[1:] != (NUM_JOINTS, 3):
            raise ValueError(f"joints_world must be (L, {NUM_JOINTS}, 3), got {self.joints_world.shape}")
        if self.root_yaw.shape != (self.joints_world.shape[0],):
            raise ValueError("root_yaw length must match frame count")
        if not (np.isfinite(self.joints_world).all() and np.isfinite(self.root_yaw).all()):
            raise ValueError("global motion must be finite")

    @property
    def length(self) -> int:
        return self.joints_world.shape[0]


@dataclass
class NormStats:
    """Per-dimension feature mean and std; std is floored at 1e-6."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(FRAME_DIM)
        self.std = np.asarray(self.std, dtype=np.float64).reshape(FRAME_DIM)
        if (self.std < STD_FLOOR).any():
            raise ValueError(f"std entries must be >= {STD_FLOOR}")


def _yaw_matrices(yaw: np.ndarray) -> np.ndarray:
    """(L, 3, 3) rotations about +y; world = R(yaw) @ local."""
    c, s = np.cos(yaw), np.sin(yaw)
    zero, one = np.zeros_like(c), np.ones_like(c)
    rows = np.stack(
        [
            np.stack([c, zero, s], axis=-1),
            np.stack([zero, one, zero], axis=-1),
            np.stack([-s, zero, c], axis=-1),
        ],
        axis=-2,
    )
    return rows


def check_sequence(seq: np.ndarray) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != FRAME_DIM:
        raise ValueError(f"expected (L, {FRAME_DIM}) features, got {seq.shape}")
    if not np.isfinite(seq).all():
        raise ValueError("features must be finite")
    return seq


def encode_features(motion: GlobalMotion, topo: SkeletonTopology) -> np.ndarray:
    """World trajectory -> (L, 76) feature matrix.

    Raises:
        TooShortError: fewer than 2 frames (velocities need differencing).
    """
    L = motion.length
    if L < 2:
        raise TooShortError(f"need at least 2 frames to difference velocities, got {L}")

    world = motion.joints_world
    yaw = motion.root_yaw
    root = world[:, 0]

    inv_rot = _yaw_matrices(-yaw)  # local = R(-yaw) @ world

    rot_vel = np.empty(L)
    rot_vel[:-1] = yaw[1:] - yaw[:-1]
    rot_vel[-1] = rot_vel[-2]

    disp = np.empty((L, 3))
    disp[:-1] = root[1:] - root[:-1]
    disp[-1] = disp[-2]
    disp_local = np.einsum("tij,tj->ti", inv_rot, disp)
    lin_vel = disp_local[:, [0, 2]]

    rel = world[:, 1:] - root[:, None, :]
    local = np.einsum("tij,tkj->tki", inv_rot, rel)

    seq = np.empty((L, FRAME_DIM))
    seq[:, ROT_VEL] = rot_vel
    seq[:, LIN_VEL] = lin_vel
    seq[:, HEIGHT] = root[:, 1]
    seq[:, LOCAL_JOINTS] = local.reshape(L, -1)
    return seq


def decode_to_global(seq: np.ndarray, initial_yaw: float = 0.0, initial_xz=(0.0, 0.0)) -> GlobalMotion:
    """(L, 76) features -> world trajectory, integrating the root velocities.

    The initial yaw and planar root position are free constants of the
    representation and must be supplied (defaults pin them at zero).
    """
    seq = check_sequence(seq)
    L = seq.shape[0]

    yaw = np.empty(L)
    yaw[0] = initial_yaw
    np.cumsum(seq[:-1, ROT_VEL], out=yaw[1:])
    yaw[1:] += initial_yaw

    rot = _yaw_matrices(yaw)  # world = R(yaw) @ local

    lin = np.zeros((L, 3))
    lin[:, [0, 2]] = seq[:, LIN_VEL]
    step_world = np.einsum("tij,tj->ti", rot, lin)

    root = np.empty((L, 3))
    root[0, 0], root[0, 2] = initial_xz
    root[1:, 0] = initial_xz[0] + np.cumsum(step_world[:-1, 0])
    root[1:, 2] = initial_xz[1] + np.cumsum(step_world[:-1, 2])
    root[:, 1] = seq[:, HEIGHT]

    local = seq[:, LOCAL_JOINTS].reshape(L, NUM_JOINTS - 1, 3)
    world = np.empty((L, NUM_JOINTS, 3))
    world[:, 0] = root
    world[:, 1:] = root[:, None, :] + np.einsum("tij,tkj->tki", rot, local)
    return GlobalMotion(joints_world=world, root_yaw=yaw)


def local_frame_joints(seq: np.ndarray) -> np.ndarray:
    """(L, 25, 3) root-local joint positions with the root at (0, height, 0)."""
    seq = check_sequence(seq)
    L = seq.shape[0]
    joints = np.zeros((L, NUM_JOINTS, 3))
    joints[:, 0, 1] = seq[:, HEIGHT]
    joints[:, 1:] = joints[:, :1] + seq[:, LOCAL_JOINTS].reshape(L, NUM_JOINTS - 1, 3)
    return joints


def bone_lengths_per_frame(seq: np.ndarray, topo: SkeletonTopology) -> np.ndarray:
    """(L, 24) bone lengths of each frame's local pose.

    Root velocities never enter this computation; only the height and local
    joint positions do (and the height cancels as a translation).
    """
    return frame_bone_lengths(local_frame_joints(seq), topo)


def compute_norm_stats(sequences) -> NormStats:
    """Per-dimension mean/std over all frames of all given sequences."""
    seqs = [check_sequence(s) for s in sequences]
    if not seqs:
        raise ValueError("cannot compute normalization stats from an empty dataset")
    flat = np.concatenate(seqs, axis=0)
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    return NormStats(mean=mean, std=np.maximum(std, STD_FLOOR))


def normalize(seq: np.ndarray, stats: NormStats) -> np.ndarray:
    return (check_sequence(seq) - stats.mean) / stats.std


def denormalize(seq: np.ndarray, stats: NormStats) -> np.ndarray:
    return check_sequence(seq) * stats.std + stats.mean
