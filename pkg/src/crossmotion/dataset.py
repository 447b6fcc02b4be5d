"""Desk-scale dataset construction.

A procedural multi-species gait generator stands in for a full mocap corpus:
each species is a bone-length vector with its own limb/torso proportions
(bipeds get zero-length tails), and each record is a rigid-bone motion built
by swinging limb subtrees of the rest pose, so per-frame bone lengths match
the T-pose lengths to float precision. Records are filtered to the open
length interval (18, 300), split 80/5/15 with an unseen-species holdout, and
serialized in a bit-exact little-endian container.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import features as feats
from .features import FRAME_DIM, GlobalMotion, NormStats, encode_features
from .skeleton import (
    NUM_BONES,
    NUM_JOINTS,
    SkeletonTopology,
    canonical_topology,
    forward_kinematics_tpose,
)

MIN_LENGTH = 18  # exclusive
MAX_LENGTH = 300  # exclusive

GAITS = ("walk", "run", "turn_left", "turn_right", "idle", "rear_up")

CONTAINER_MAGIC = b"UMO4"
CONTAINER_VERSION = 1

# Bone indices (child joint - 1) by body part.
_SPINE = [0, 1, 2]
_NECK = 3
_HEAD = 4
_LEFT_LEG = [5, 6, 7]
_LEFT_FOOT = 8
_RIGHT_LEG = [9, 10, 11]
_RIGHT_FOOT = 12
_LEFT_ARM = [13, 14, 15, 16]
_RIGHT_ARM = [17, 18, 19, 20]
_TAIL = [21, 22, 23]

_SPECIES_POOL = (
    "wolf", "human", "horse", "ostrich", "tiger", "penguin", "deer", "gorilla",
    "fox", "chicken", "bear", "flamingo", "lion", "monkey", "cat", "heron",
)

_CAPTION_TEMPLATES = {
    "walk": (
        "the {s} walks forward",
        "a {s} is walking ahead at a steady pace",
        "the {s} strolls forward",
    ),
    "run": (
        "the {s} runs forward quickly",
        "a {s} is running fast",
        "the {s} sprints ahead",
    ),
    "turn_left": (
        "the {s} turns left while moving",
        "a {s} walks along a leftward curve",
        "the {s} veers to the left",
    ),
    "turn_right": (
        "the {s} turns right while moving",
        "a {s} walks along a rightward curve",
        "the {s} veers to the right",
    ),
    "idle": (
        "the {s} stands still",
        "a {s} idles in place",
        "the {s} stays put, barely moving",
    ),
    "rear_up": (
        "the {s} rears up, lifting its front body",
        "a {s} rises up on its hind legs",
        "the {s} raises its upper body high",
    ),
}


class ContainerError(ValueError):
    """Base class for motion-container parse failures."""


class MagicMismatchError(ContainerError):
    pass


class VersionMismatchError(ContainerError):
    pass


class TruncatedPayloadError(ContainerError):
    pass


@dataclass
class MotionRecord:
    """One motion clip with its captions and species morphology."""

    motion: np.ndarray  # (L, 76) float32
    captions: list[str]
    species_name: str
    tpose_bone_lengths: np.ndarray  # (24,) float64

    @property
    def length(self) -> int:
        return self.motion.shape[0]


@dataclass
class DatasetSplit:
    train: list[int] = field(default_factory=list)
    val: list[int] = field(default_factory=list)
    test: list[int] = field(default_factory=list)
    unseen_test: list[int] = field(default_factory=list)


def generate_synthetic_species(seed: int, species_count: int) -> list[tuple[str, np.ndarray]]:
    """Deterministic (name, bone-length vector) pairs with varied proportions.

    Lengths live in [0.05, 0.8] m; species at odd indices are biped-themed
    and get exactly-zero tail bones.
    """
    if species_count < 2:
        raise ValueError("need at least 2 species")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(species_count):
        name = _SPECIES_POOL[i] if i < len(_SPECIES_POOL) else f"species{i:02d}"
        biped = i % 2 == 1
        base = rng.uniform(0.45, 1.0)
        torso = rng.uniform(0.7, 1.3)
        limb = rng.uniform(0.7, 1.4)

        b = np.zeros(NUM_BONES)
        b[_SPINE] = base * torso * rng.uniform(0.15, 0.3, size=3)
        b[_NECK] = base * torso * rng.uniform(0.1, 0.25)
        b[_HEAD] = base * rng.uniform(0.1, 0.2)

        leg = base * limb * rng.uniform(0.15, 0.3, size=3)
        foot = base * rng.uniform(0.06, 0.12)
        b[_LEFT_LEG] = leg
        b[_LEFT_FOOT] = foot
        b[_RIGHT_LEG] = leg
        b[_RIGHT_FOOT] = foot

        arm = np.concatenate([
            base * rng.uniform(0.06, 0.12, size=1),  # scapula
            base * limb * rng.uniform(0.12, 0.28, size=3),
        ])
        b[_LEFT_ARM] = arm
        b[_RIGHT_ARM] = arm

        tail = base * rng.uniform(0.08, 0.22, size=3)
        b = np.clip(b, 0.05, 0.8)
        b[_TAIL] = 0.0 if biped else np.clip(tail, 0.05, 0.8)
        out.append((name, b))
    return out


def _ry(angles: np.ndarray) -> np.ndarray:
    c, s = np.cos(angles), np.sin(angles)
    zero, one = np.zeros_like(c), np.ones_like(c)
    return np.stack(
        [np.stack([c, zero, s], -1), np.stack([zero, one, zero], -1), np.stack([-s, zero, c], -1)],
        axis=-2,
    )


def _rx(angles: np.ndarray) -> np.ndarray:
    c, s = np.cos(angles), np.sin(angles)
    zero, one = np.zeros_like(c), np.ones_like(c)
    return np.stack(
        [np.stack([one, zero, zero], -1), np.stack([zero, c, -s], -1), np.stack([zero, s, c], -1)],
        axis=-2,
    )


def _swing_subtree(joints: np.ndarray, topo: SkeletonTopology, pivot_joint: int,
                   rots: np.ndarray) -> None:
    """Rigidly rotate all descendants of pivot_joint about its position, per frame."""
    idx = topo.descendants(pivot_joint)
    if not idx:
        return
    pivot = joints[:, pivot_joint : pivot_joint + 1, :]
    joints[:, idx, :] = pivot + np.einsum("tij,tkj->tki", rots, joints[:, idx, :] - pivot)


def generate_gait(species: tuple[str, np.ndarray], gait_kind: str, length: int, seed: int,
                  topo: SkeletonTopology | None = None) -> MotionRecord:
    """Procedural rigid-bone motion of one gait for one species.

    Length must lie strictly inside (18, 300). Captions are templated and
    always include the species word and a gait word.
    """
    if gait_kind not in GAITS:
        raise ValueError(f"unknown gait {gait_kind!r}; expected one of {GAITS}")
    if not (MIN_LENGTH < length < MAX_LENGTH):
        raise ValueError(f"length must be in ({MIN_LENGTH}, {MAX_LENGTH}), got {length}")
    topo = topo or canonical_topology()
    name, b = species
    b = np.asarray(b, dtype=np.float64)

    rng = np.random.default_rng(seed)
    tpose = forward_kinematics_tpose(b, topo)
    leg_len = float(b[_LEFT_LEG].sum())
    base_h = max(leg_len, 0.1)
    L = length
    t = np.arange(L, dtype=np.float64)

    freq = 2 * np.pi * 0.08 * rng.uniform(0.85, 1.15)
    amp = 0.35 * rng.uniform(0.8, 1.2)
    speed = 0.10 * leg_len * rng.uniform(0.8, 1.2)
    phase0 = rng.uniform(0, 2 * np.pi)
    yaw0 = rng.uniform(-np.pi, np.pi)
    yaw_rate = 0.0
    bob_amp = 0.03
    ramp = np.zeros(L)

    if gait_kind == "run":
        freq *= 1.7
        amp *= 1.6
        speed *= 2.2
        bob_amp = 0.05
    elif gait_kind == "turn_left":
        yaw_rate = rng.uniform(0.015, 0.04)
    elif gait_kind == "turn_right":
        yaw_rate = -rng.uniform(0.015, 0.04)
    elif gait_kind == "idle":
        speed = 0.0
        amp = 0.03
        freq *= 0.4
        bob_amp = 0.008
    elif gait_kind == "rear_up":
        speed = 0.0
        amp *= 0.5
        ramp = 1.0 / (1.0 + np.exp(-(t - L / 2) / (L / 10)))

    phase = freq * t + phase0

    joints = np.repeat(tpose[None], L, axis=0)
    if gait_kind == "rear_up":
        _swing_subtree(joints, topo, 1, _rx(-0.6 * ramp))
        _swing_subtree(joints, topo, 15, _rx(-0.9 * ramp + amp * np.sin(phase)))
        _swing_subtree(joints, topo, 19, _rx(-0.9 * ramp + amp * np.sin(phase + np.pi)))
    else:
        _swing_subtree(joints, topo, 15, _rx(0.6 * amp * np.sin(phase + np.pi)))
        _swing_subtree(joints, topo, 19, _rx(0.6 * amp * np.sin(phase)))
    _swing_subtree(joints, topo, 6, _rx(amp * np.sin(phase)))
    _swing_subtree(joints, topo, 10, _rx(amp * np.sin(phase + np.pi)))
    if b[_TAIL].sum() > 0:
        _swing_subtree(joints, topo, 22, _ry(0.3 * np.sin(0.5 * phase)))

    yaw = yaw0 + yaw_rate * t
    height = base_h * (1.0 + bob_amp * np.sin(2 * phase))
    if gait_kind == "rear_up":
        height = base_h * (1.0 + 0.25 * ramp)

    root = np.zeros((L, 3))
    step = speed * np.stack([np.sin(yaw), np.zeros(L), np.cos(yaw)], axis=-1)
    root[1:, 0] = np.cumsum(step[:-1, 0])
    root[1:, 2] = np.cumsum(step[:-1, 2])
    root[:, 1] = height

    world = root[:, None, :] + np.einsum("tij,tkj->tki", _ry(yaw), joints)
    motion = encode_features(GlobalMotion(joints_world=world, root_yaw=yaw), topo)

    templates = _CAPTION_TEMPLATES[gait_kind]
    n_extra = int(rng.integers(1, len(templates)))
    picks = [templates[0]] + list(rng.choice(templates[1:], size=n_extra, replace=False))
    captions = [p.format(s=name) for p in picks]

    return MotionRecord(
        motion=motion.astype(np.float32),
        captions=captions,
        species_name=name,
        tpose_bone_lengths=b,
    )


def generate_toy_dataset(seed: int, species_count: int, records_per_combo: int,
                         min_len: int = 40, max_len: int = 64,
                         topo: SkeletonTopology | None = None) -> list[MotionRecord]:
    """All species x all gaits x records_per_combo, with varied lengths."""
    topo = topo or canonical_topology()
    species = generate_synthetic_species(seed, species_count)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD5]))
    records = []
    for name, b in species:
        for gait in GAITS:
            for _ in range(records_per_combo):
                L = int(rng.integers(min_len, max_len + 1))
                records.append(generate_gait((name, b), gait, L, int(rng.integers(2**31)), topo))
    return records


def filter_by_length(records: list[MotionRecord]) -> list[MotionRecord]:
    """Keep records with length strictly inside (18, 300); order preserved."""
    return [r for r in records if MIN_LENGTH < r.length < MAX_LENGTH]


def make_splits(records: list[MotionRecord], holdout_species: set[str], seed: int) -> DatasetSplit:
    """80/5/15 split of seen-species records plus an unseen-species holdout.

    Train and val sizes are floors of the proportions; the remainder goes to
    test. Raises ValueError when a holdout species has no records.
    """
    present = {r.species_name for r in records}
    unknown = set(holdout_species) - present
    if unknown:
        raise ValueError(f"holdout species not in dataset: {sorted(unknown)}")

    unseen = [i for i, r in enumerate(records) if r.species_name in holdout_species]
    seen = [i for i, r in enumerate(records) if r.species_name not in holdout_species]

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(seen))
    seen = [seen[i] for i in order]

    n = len(seen)
    n_train = int(np.floor(0.80 * n))
    n_val = int(np.floor(0.05 * n))
    return DatasetSplit(
        train=seen[:n_train],
        val=seen[n_train : n_train + n_val],
        test=seen[n_train + n_val :],
        unseen_test=unseen,
    )


def save_manifest(path, split: DatasetSplit, holdout_species: set[str], seed: int) -> None:
    doc = {
        "split_seed": seed,
        "holdout_species": sorted(holdout_species),
        "train": split.train,
        "val": split.val,
        "test": split.test,
        "unseen_test": split.unseen_test,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> tuple[DatasetSplit, set[str], int]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    split = DatasetSplit(
        train=list(doc["train"]),
        val=list(doc["val"]),
        test=list(doc["test"]),
        unseen_test=list(doc["unseen_test"]),
    )
    return split, set(doc["holdout_species"]), int(doc["split_seed"])


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedPayloadError(
                f"expected {n} more bytes at offset {self.pos}, file has {len(self.data)}"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))


def write_container(path, records: list[MotionRecord], topo: SkeletonTopology,
                    stats: NormStats) -> None:
    """Serialize records, topology and normalization stats, bit-exactly."""
    parts = [CONTAINER_MAGIC, struct.pack("<I", CONTAINER_VERSION)]

    parts.append(struct.pack("<I", topo.num_joints))
    for name in topo.joint_names:
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    parts.append(np.asarray(topo.parent_index, dtype="<i4").tobytes())
    parts.append(struct.pack("<I", topo.num_bones))
    parts.append(np.ascontiguousarray(topo.bone_directions, dtype="<f8").tobytes())

    parts.append(np.ascontiguousarray(stats.mean, dtype="<f8").tobytes())
    parts.append(np.ascontiguousarray(stats.std, dtype="<f8").tobytes())

    parts.append(struct.pack("<I", len(records)))
    for rec in records:
        raw = rec.species_name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<H", len(rec.captions)))
        for cap in rec.captions:
            craw = cap.encode("utf-8")
            parts.append(struct.pack("<I", len(craw)))
            parts.append(craw)
        parts.append(np.ascontiguousarray(rec.tpose_bone_lengths, dtype="<f8").tobytes())
        parts.append(struct.pack("<I", rec.length))
        parts.append(np.ascontiguousarray(rec.motion, dtype="<f4").tobytes())

    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_container(path) -> tuple[list[MotionRecord], SkeletonTopology, NormStats]:
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())

    magic = reader.take(4)
    if magic != CONTAINER_MAGIC:
        raise MagicMismatchError(f"bad magic {magic!r}, expected {CONTAINER_MAGIC!r}")
    (version,) = reader.unpack("I")
    if version != CONTAINER_VERSION:
        raise VersionMismatchError(f"unsupported container version {version}")

    (num_joints,) = reader.unpack("I")
    names = []
    for _ in range(num_joints):
        (nlen,) = reader.unpack("H")
        names.append(reader.take(nlen).decode("utf-8"))
    parents = np.frombuffer(reader.take(4 * num_joints), dtype="<i4")
    (num_bones,) = reader.unpack("I")
    directions = np.frombuffer(reader.take(8 * num_bones * 3), dtype="<f8").reshape(num_bones, 3)
    topo = SkeletonTopology(
        joint_names=tuple(names),
        parent_index=tuple(int(p) for p in parents),
        bone_edges=tuple((int(parents[c]), c) for c in range(1, num_joints)),
        bone_directions=directions.copy(),
    )

    mean = np.frombuffer(reader.take(8 * FRAME_DIM), dtype="<f8").copy()
    std = np.frombuffer(reader.take(8 * FRAME_DIM), dtype="<f8").copy()
    stats = NormStats(mean=mean, std=std)

    (count,) = reader.unpack("I")
    records = []
    for _ in range(count):
        (slen,) = reader.unpack("H")
        species = reader.take(slen).decode("utf-8")
        (ncap,) = reader.unpack("H")
        captions = []
        for _ in range(ncap):
            (clen,) = reader.unpack("I")
            captions.append(reader.take(clen).decode("utf-8"))
        bones = np.frombuffer(reader.take(8 * NUM_BONES), dtype="<f8").copy()
        (length,) = reader.unpack("I")
        motion = np.frombuffer(reader.take(4 * length * FRAME_DIM), dtype="<f4")
        records.append(
            MotionRecord(
                motion=motion.reshape(length, FRAME_DIM).copy(),
                captions=captions,
                species_name=species,
                tpose_bone_lengths=bones,
            )
        )
    return records, topo, stats


def train_norm_stats(records: list[MotionRecord], split: DatasetSplit) -> NormStats:
    """Normalization statistics over the training split."""
    return feats.compute_norm_stats([records[i].motion for i in split.train])
