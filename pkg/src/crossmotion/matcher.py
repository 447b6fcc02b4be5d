"""Toy contrastive text-motion matcher backing the metric suite.

A per-frame MLP with temporal mean pooling embeds motions; a small MLP embeds
caption sentence features. Both land in one unit-norm space trained with a
symmetric in-batch contrastive objective.
"""
from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from .features import FRAME_DIM


class ToyMatcher(nn.Module):
    def __init__(self, feature_dim: int = FRAME_DIM, text_dim: int = 64,
                 hidden: int = 256, embed_dim: int = 32):
        super().__init__()
        self.frame_net = nn.Sequential(nn.Linear(feature_dim, hidden), nn.GELU())
        self.motion_head = nn.Sequential(
            nn.Linear(hidden, hidden), nn.GELU(), nn.Linear(hidden, embed_dim)
        )
        self.text_net = nn.Sequential(
            nn.Linear(text_dim, hidden), nn.GELU(), nn.Linear(hidden, embed_dim)
        )

    def embed_motion(self, x: torch.Tensor, frame_mask: torch.Tensor | None = None) -> torch.Tensor:
        """(B, L, 76) [+ validity mask] -> unit-norm (B, embed_dim)."""
        h = self.frame_net(x)
        if frame_mask is None:
            pooled = h.mean(dim=1)
        else:
            w = frame_mask.to(h.dtype).unsqueeze(-1)
            pooled = (h * w).sum(dim=1) / w.sum(dim=1).clamp(min=1.0)
        return F.normalize(self.motion_head(pooled), dim=-1)

    def embed_text(self, sentence: torch.Tensor) -> torch.Tensor:
        """(B, text_dim) caption sentence features -> unit-norm embeddings."""
        return F.normalize(self.text_net(sentence), dim=-1)


def contrastive_loss(motion_emb: torch.Tensor, text_emb: torch.Tensor,
                     temperature: float = 0.07) -> torch.Tensor:
    """Symmetric cross-entropy over in-batch similarities."""
    logits = motion_emb @ text_emb.T / temperature
    targets = torch.arange(logits.shape[0], device=logits.device)
    return 0.5 * (F.cross_entropy(logits, targets) + F.cross_entropy(logits.T, targets))
