"""Morphology critic: recurrent regressor from latent motion to bone lengths.

A single gated recurrent layer (written out gate by gate) scans the latent
sequence left to right; an MLP on the final hidden state predicts the 24
bone lengths. After pretraining on real latents the critic is frozen and
used purely as a differentiable penalty on generated latents, with gradients
routed only through masked positions.
"""
from __future__ import annotations

import hashlib

import torch
import torch.nn as nn

from .skeleton import NUM_BONES


def gru_step(x: torch.Tensor, h: torch.Tensor, w_x: nn.Linear, w_h: nn.Linear) -> torch.Tensor:
    """One recurrence: reset/update gates and candidate state.

    w_x and w_h hold the three gate projections stacked along the output
    axis in (reset, update, candidate) order.
    """
    xr, xu, xn = w_x(x).chunk(3, dim=-1)
    hr, hu, hn = w_h(h).chunk(3, dim=-1)
    reset = torch.sigmoid(xr + hr)
    update = torch.sigmoid(xu + hu)
    candidate = torch.tanh(xn + reset * hn)
    return (1.0 - update) * candidate + update * h


class MorphologyCritic(nn.Module):
    def __init__(self, latent_dim: int = 64, hidden: int = 128, num_bones: int = NUM_BONES):
        super().__init__()
        self.hidden = hidden
        self.w_x = nn.Linear(latent_dim, 3 * hidden)
        self.w_h = nn.Linear(hidden, 3 * hidden)
        self.head = nn.Sequential(
            nn.Linear(hidden, hidden),
            nn.GELU(),
            nn.Linear(hidden, num_bones),
        )

    def forward(self, z: torch.Tensor, lengths: torch.Tensor | None = None) -> torch.Tensor:
        """(B, T, d) latents -> (B, 24) predicted bone lengths.

        With `lengths`, each sample's final hidden state is taken at its own
        last valid step; padded tail positions leave the state untouched.
        """
        B, T, _ = z.shape
        h = z.new_zeros(B, self.hidden)
        for t in range(T):
            h_new = gru_step(z[:, t], h, self.w_x, self.w_h)
            if lengths is None:
                h = h_new
            else:
                valid = (t < lengths).to(z.dtype).unsqueeze(-1)
                h = valid * h_new + (1.0 - valid) * h
        return self.head(h)

    def freeze(self) -> "MorphologyCritic":
        for p in self.parameters():
            p.requires_grad_(False)
        return self.eval()

    def param_checksum(self) -> str:
        digest = hashlib.sha256()
        for name, p in sorted(self.named_parameters()):
            digest.update(name.encode())
            digest.update(p.detach().cpu().double().numpy().tobytes())
        return digest.hexdigest()


def pretrain_loss(critic: MorphologyCritic, z: torch.Tensor, bones: torch.Tensor,
                  lengths: torch.Tensor | None = None) -> torch.Tensor:
    """Squared error between predicted and canonical bone lengths."""
    pred = critic(z, lengths)
    return ((pred - bones) ** 2).sum(dim=-1).mean()


def morph_guide_loss(
    critic: MorphologyCritic,
    z_pred: torch.Tensor,
    z_truth: torch.Tensor,
    mask: torch.Tensor,
    bones: torch.Tensor,
    lengths: torch.Tensor | None = None,
) -> torch.Tensor:
    """Penalty on the critic's prediction for an assembled latent sequence.

    Masked positions come from `z_pred` (live, gradients flow); unmasked
    positions come from `z_truth` and are detached, so their gradient is
    exactly zero. The critic must already be frozen. With an empty mask the
    loss is still defined but carries no gradient to the generator.
    """
    if any(p.requires_grad for p in critic.parameters()):
        raise RuntimeError("morphology critic must be frozen before guiding generation")
    assembled = torch.where(mask.unsqueeze(-1), z_pred, z_truth.detach())
    pred = critic(assembled, lengths)
    return ((pred - bones) ** 2).sum(dim=-1).mean()
