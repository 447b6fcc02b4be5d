"""Evaluation metrics.

Bone-length consistency is measured directly on motion frames; the
distribution/retrieval metrics operate on any aligned feature space (here:
the toy matcher's embeddings). All randomized protocols take an explicit
generator, so every number is reproducible.
"""
from __future__ import annotations

import numpy as np

from .features import bone_lengths_per_frame
from .skeleton import NUM_BONES, SkeletonTopology

COV_EPS = 1e-6
_NEG_FLOOR = -1e-6


def mme(seq: np.ndarray, bone_lengths: np.ndarray, topo: SkeletonTopology) -> float:
    """Mean absolute per-frame, per-bone deviation from the reference lengths."""
    b = np.asarray(bone_lengths, dtype=np.float64)
    if b.shape != (NUM_BONES,):
        raise ValueError(f"expected ({NUM_BONES},) reference lengths, got {b.shape}")
    per_frame = bone_lengths_per_frame(seq, topo)
    return float(np.abs(per_frame - b).mean())


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition."""
    sym = (mat + mat.T) / 2.0
    w, v = np.linalg.eigh(sym)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def fid_from_stats(mu_a: np.ndarray, cov_a: np.ndarray,
                   mu_b: np.ndarray, cov_b: np.ndarray) -> float:
    """Frechet distance between two Gaussians given their statistics.

    The cross term uses the symmetrized product sqrt(cov_a)^T cov_b sqrt(cov_a),
    whose eigenvalues are clipped at zero before the square root.
    """
    mu_a = np.atleast_1d(np.asarray(mu_a, dtype=np.float64))
    mu_b = np.atleast_1d(np.asarray(mu_b, dtype=np.float64))
    cov_a = np.atleast_2d(np.asarray(cov_a, dtype=np.float64))
    cov_b = np.atleast_2d(np.asarray(cov_b, dtype=np.float64))
    if not all(np.isfinite(m).all() for m in (mu_a, mu_b, cov_a, cov_b)):
        raise ValueError("feature statistics must be finite")

    root_a = _sqrtm_psd(cov_a)
    inner = root_a @ cov_b @ root_a
    w = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    trace_sqrt = np.sqrt(np.clip(w, 0.0, None)).sum()

    diff = mu_a - mu_b
    value = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * trace_sqrt)
    if value < _NEG_FLOOR:
        raise FloatingPointError(f"frechet distance came out {value}, below the numeric floor")
    return max(value, 0.0)


def fid(feats_a: np.ndarray, feats_b: np.ndarray) -> float:
    """Frechet distance between the empirical feature distributions.

    Covariances are regularized by +1e-6 I; tiny negative results (numerical)
    are clamped to zero.
    """
    feats_a = np.asarray(feats_a, dtype=np.float64)
    feats_b = np.asarray(feats_b, dtype=np.float64)
    for f in (feats_a, feats_b):
        if f.ndim != 2 or f.shape[0] < 2:
            raise ValueError("need at least 2 feature rows per batch")
        if not np.isfinite(f).all():
            raise ValueError("features must be finite")
    dim = feats_a.shape[1]
    mu_a, mu_b = feats_a.mean(axis=0), feats_b.mean(axis=0)
    cov_a = np.cov(feats_a, rowvar=False) + COV_EPS * np.eye(dim)
    cov_b = np.cov(feats_b, rowvar=False) + COV_EPS * np.eye(dim)
    return fid_from_stats(mu_a, cov_a, mu_b, cov_b)


def r_precision(motion_feats: np.ndarray, text_feats: np.ndarray, k: int,
                pool_size: int = 32, rng: np.random.Generator | None = None) -> float:
    """Retrieval accuracy: fraction of texts whose true motion ranks <= k
    among pool_size-1 random distractor motions.

    Candidates are ordered by dataset index and ranked with a stable sort, so
    distance ties resolve by index order.
    """
    motion_feats = np.asarray(motion_feats, dtype=np.float64)
    text_feats = np.asarray(text_feats, dtype=np.float64)
    n = motion_feats.shape[0]
    if text_feats.shape[0] != n:
        raise ValueError("motion and text features must be row-aligned")
    if n < pool_size:
        raise ValueError(f"need at least pool_size={pool_size} rows, got {n}")
    rng = rng or np.random.default_rng(0)

    hits = 0
    for i in range(n):
        others = np.delete(np.arange(n), i)
        distractors = rng.choice(others, size=pool_size - 1, replace=False)
        pool = np.sort(np.concatenate([[i], distractors]))
        dists = np.linalg.norm(motion_feats[pool] - text_feats[i], axis=1)
        order = np.argsort(dists, kind="stable")
        rank = int(np.nonzero(pool[order] == i)[0][0]) + 1
        hits += rank <= k
    return hits / n


def mm_dist(motion_feats: np.ndarray, text_feats: np.ndarray) -> float:
    """Mean Euclidean distance over aligned motion/text feature pairs."""
    motion_feats = np.asarray(motion_feats, dtype=np.float64)
    text_feats = np.asarray(text_feats, dtype=np.float64)
    if motion_feats.shape != text_feats.shape:
        raise ValueError("aligned feature batches must share a shape")
    return float(np.linalg.norm(motion_feats - text_feats, axis=1).mean())


def diversity(motion_feats: np.ndarray, num_pairs: int,
              rng: np.random.Generator | None = None) -> float:
    """Mean distance over num_pairs disjoint random row pairs."""
    motion_feats = np.asarray(motion_feats, dtype=np.float64)
    n = motion_feats.shape[0]
    if n < 2 * num_pairs:
        raise ValueError(f"need at least {2 * num_pairs} rows for {num_pairs} disjoint pairs")
    rng = rng or np.random.default_rng(0)
    picks = rng.permutation(n)[: 2 * num_pairs]
    a, b = motion_feats[picks[0::2]], motion_feats[picks[1::2]]
    return float(np.linalg.norm(a - b, axis=1).mean())
