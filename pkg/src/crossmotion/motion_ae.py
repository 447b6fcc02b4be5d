"""Convolutional motion autoencoder with 4x temporal downsampling.

Two stride-2 stages take an (L, 76) feature sequence to floor(L/4) latent
frames of width `latent_dim`; transposed convolutions invert them. The loss
couples per-frame reconstruction error with a bone-length consistency term
computed on denormalized frames.
"""
from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from .features import FRAME_DIM, HEIGHT, LOCAL_JOINTS, NormStats, TooShortError
from .skeleton import NUM_JOINTS, SkeletonTopology

DOWNSAMPLE = 4


class ResBlock(nn.Module):
    def __init__(self, channels: int, padding_mode: str = "zeros"):
        super().__init__()
        self.conv1 = nn.Conv1d(channels, channels, 3, padding=1, padding_mode=padding_mode)
        self.conv2 = nn.Conv1d(channels, channels, 3, padding=1, padding_mode=padding_mode)
        self.act = nn.GELU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.conv2(self.act(self.conv1(x)))
        return self.act(x + h)


class MotionAutoencoder(nn.Module):
    def __init__(self, feature_dim: int = FRAME_DIM, channels: int = 128,
                 latent_dim: int = 64, padding_mode: str = "zeros"):
        super().__init__()
        self.latent_dim = latent_dim
        pm = padding_mode
        self.encoder = nn.Sequential(
            nn.Conv1d(feature_dim, channels, 3, padding=1, padding_mode=pm),
            nn.GELU(),
            nn.Conv1d(channels, channels, 4, stride=2, padding=1, padding_mode=pm),
            ResBlock(channels, pm),
            ResBlock(channels, pm),
            nn.Conv1d(channels, channels, 4, stride=2, padding=1, padding_mode=pm),
            ResBlock(channels, pm),
            ResBlock(channels, pm),
            nn.Conv1d(channels, latent_dim, 3, padding=1, padding_mode=pm),
        )
        self.decoder = nn.Sequential(
            nn.Conv1d(latent_dim, channels, 3, padding=1),
            nn.GELU(),
            nn.ConvTranspose1d(channels, channels, 4, stride=2, padding=1),
            ResBlock(channels),
            ResBlock(channels),
            nn.ConvTranspose1d(channels, channels, 4, stride=2, padding=1),
            ResBlock(channels),
            ResBlock(channels),
            nn.Conv1d(channels, feature_dim, 3, padding=1),
        )

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """(B, L, 76) -> (B, floor(L/4), latent_dim); needs L >= 4."""
        if x.shape[1] < DOWNSAMPLE:
            raise TooShortError(f"need at least {DOWNSAMPLE} frames to encode, got {x.shape[1]}")
        return self.encoder(x.transpose(1, 2)).transpose(1, 2)

    def decode(self, z: torch.Tensor, target_length: int) -> torch.Tensor:
        """(B, T, latent_dim) -> (B, target_length, 76).

        target_length must satisfy floor(target_length/4) == T; up to three
        tail frames beyond 4T are filled by repeating the final frame.
        """
        T = z.shape[1]
        if target_length // DOWNSAMPLE != T:
            raise ValueError(
                f"target_length {target_length} incompatible with {T} latent frames"
            )
        x = self.decoder(z.transpose(1, 2)).transpose(1, 2)
        if target_length > x.shape[1]:
            pad = x[:, -1:, :].expand(-1, target_length - x.shape[1], -1)
            x = torch.cat([x, pad], dim=1)
        return x[:, :target_length]


def bone_index_tensors(topo: SkeletonTopology) -> tuple[torch.Tensor, torch.Tensor]:
    parents = torch.tensor([e[0] for e in topo.bone_edges], dtype=torch.long)
    children = torch.tensor([e[1] for e in topo.bone_edges], dtype=torch.long)
    return parents, children


def stats_tensors(stats: NormStats, dtype=torch.float32) -> tuple[torch.Tensor, torch.Tensor]:
    return (
        torch.tensor(stats.mean, dtype=dtype),
        torch.tensor(stats.std, dtype=dtype),
    )


def frame_bone_lengths_torch(x: torch.Tensor, bone_idx: tuple[torch.Tensor, torch.Tensor],
                             eps: float = 1e-12) -> torch.Tensor:
    """Differentiable (B, L, 24) bone lengths from (B, L, 76) raw features."""
    parents, children = bone_idx
    B, L = x.shape[0], x.shape[1]
    joints = x.new_zeros(B, L, NUM_JOINTS, 3)
    joints[:, :, 0, 1] = x[..., HEIGHT]
    joints[:, :, 1:, :] = joints[:, :, :1, :] + x[..., LOCAL_JOINTS].reshape(B, L, NUM_JOINTS - 1, 3)
    deltas = joints[:, :, children, :] - joints[:, :, parents, :]
    return torch.sqrt((deltas**2).sum(dim=-1) + eps)


def _masked_frame_mean(per_frame: torch.Tensor, frame_mask: torch.Tensor | None) -> torch.Tensor:
    """Mean over frames (respecting validity) then over the batch."""
    if frame_mask is None:
        return per_frame.mean(dim=1).mean()
    w = frame_mask.to(per_frame.dtype)
    return ((per_frame * w).sum(dim=1) / w.sum(dim=1).clamp(min=1.0)).mean()


def ae_loss(
    x: torch.Tensor,
    x_hat: torch.Tensor,
    bone_idx: tuple[torch.Tensor, torch.Tensor],
    stats_t: tuple[torch.Tensor, torch.Tensor] | None = None,
    morph_weight: float = 1.0,
    frame_mask: torch.Tensor | None = None,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(total, mse, morph) for (B, L, 76) target/reconstruction pairs.

    The bone-length term is evaluated on denormalized frames when stats are
    given (lengths are meaningless in z-scored space). Root velocity
    dimensions never enter the bone-length term.
    """
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(x_hat.shape)}")
    mse = _masked_frame_mean(((x_hat - x) ** 2).sum(dim=-1), frame_mask)
    if stats_t is not None:
        mean, std = stats_t
        x_raw = x * std + mean
        x_hat_raw = x_hat * std + mean
    else:
        x_raw, x_hat_raw = x, x_hat
    lengths = frame_bone_lengths_torch(x_raw, bone_idx)
    lengths_hat = frame_bone_lengths_torch(x_hat_raw, bone_idx)
    morph = _masked_frame_mean(((lengths_hat - lengths) ** 2).sum(dim=-1), frame_mask)
    return mse + morph_weight * morph, mse, morph


def pad_batch(seqs: list[np.ndarray], dtype=torch.float32) -> tuple[torch.Tensor, torch.Tensor]:
    """Right-pad to the batch max length rounded up to a multiple of 4.

    Returns (B, Lpad, 76) features and a (B, Lpad) validity mask.
    """
    lmax = max(s.shape[0] for s in seqs)
    lmax = ((lmax + DOWNSAMPLE - 1) // DOWNSAMPLE) * DOWNSAMPLE
    x = torch.zeros(len(seqs), lmax, seqs[0].shape[1], dtype=dtype)
    mask = torch.zeros(len(seqs), lmax, dtype=torch.bool)
    for i, s in enumerate(seqs):
        x[i, : s.shape[0]] = torch.as_tensor(s, dtype=dtype)
        mask[i, : s.shape[0]] = True
    return x, mask
