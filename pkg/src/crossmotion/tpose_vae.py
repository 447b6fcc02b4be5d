"""Conditional graph VAE over bone-length vectors.

Bones are graph nodes (adjacent iff they share a joint); the species
condition vector is projected and concatenated onto every node feature in
both encoder and decoder. Sampling the prior and decoding yields a
species-consistent bone-length vector, hence a canonical rest pose via
forward kinematics.
"""
from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .providers import SpeciesEmbedding
from .skeleton import NUM_BONES, SkeletonTopology, forward_kinematics_tpose


def bone_graph(topo: SkeletonTopology) -> np.ndarray:
    """24x24 symmetric bone adjacency with self-loops.

    Two bones are adjacent iff their edges share a joint.
    """
    n = topo.num_bones
    adj = np.eye(n)
    for i, (pi, ci) in enumerate(topo.bone_edges):
        for j, (pj, cj) in enumerate(topo.bone_edges):
            if i != j and {pi, ci} & {pj, cj}:
                adj[i, j] = 1.0
    return adj


def normalized_adjacency(adj: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization D^{-1/2} A D^{-1/2}."""
    deg = adj.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return adj * inv_sqrt[:, None] * inv_sqrt[None, :]


def gcn_propagate(
    node_feats: torch.Tensor,
    adjacency: torch.Tensor,
    weight: torch.Tensor,
    bias: torch.Tensor | None = None,
    activation=F.softplus,
) -> torch.Tensor:
    """One graph-convolution step: aggregate neighbours, project, activate.

    node_feats: (..., N, F_in); adjacency: (N, N), already normalized.
    Passing activation=None gives the linear mode used by shape/algebra tests.
    """
    out = adjacency @ node_feats @ weight
    if bias is not None:
        out = out + bias
    if activation is not None:
        out = activation(out)
    return out


class GraphConv(nn.Module):
    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.weight = nn.Parameter(torch.empty(in_dim, out_dim))
        self.bias = nn.Parameter(torch.zeros(out_dim))
        nn.init.xavier_uniform_(self.weight)

    def forward(self, x: torch.Tensor, adj: torch.Tensor, activation=F.softplus) -> torch.Tensor:
        return gcn_propagate(x, adj, self.weight, self.bias, activation)


def reparameterize(mu: torch.Tensor, logvar: torch.Tensor, noise: torch.Tensor) -> torch.Tensor:
    """z = mu + exp(logvar / 2) * noise."""
    return mu + torch.exp(0.5 * logvar) * noise


def gaussian_kl(mu: torch.Tensor, logvar: torch.Tensor) -> torch.Tensor:
    """KL(N(mu, diag exp(logvar)) || N(0, I)), summed over the latent axis."""
    return 0.5 * (torch.exp(logvar) + mu**2 - 1.0 - logvar).sum(dim=-1)


class TPoseVae(nn.Module):
    """Graph-convolutional conditional VAE on (24,) bone-length vectors."""

    def __init__(self, topo: SkeletonTopology, cond_dim: int = 64, hidden: int = 64,
                 latent_dim: int = 16, cond_hidden: int = 16):
        super().__init__()
        self.latent_dim = latent_dim
        self.num_bones = topo.num_bones
        adj = normalized_adjacency(bone_graph(topo))
        self.register_buffer("adj", torch.tensor(adj, dtype=torch.get_default_dtype()))

        self.cond_proj = nn.Linear(cond_dim, cond_hidden)
        self.enc1 = GraphConv(1 + cond_hidden, hidden)
        self.enc2 = GraphConv(hidden + cond_hidden, hidden)
        self.mu_head = nn.Linear(self.num_bones * hidden, latent_dim)
        self.logvar_head = nn.Linear(self.num_bones * hidden, latent_dim)

        self.dec_seed = nn.Linear(latent_dim + cond_hidden, self.num_bones * hidden)
        self.dec1 = GraphConv(hidden + cond_hidden, hidden)
        self.dec2 = GraphConv(hidden + cond_hidden, hidden)
        self.out_head = nn.Linear(hidden, 1)

    def _cond_nodes(self, cond: torch.Tensor) -> torch.Tensor:
        """(B, cond_hidden) -> (B, N, cond_hidden) broadcast over nodes."""
        proj = self.cond_proj(cond)
        return proj.unsqueeze(-2).expand(*proj.shape[:-1], self.num_bones, proj.shape[-1])

    def encode(self, bones: torch.Tensor, cond: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Posterior parameters (mu, logvar), each (..., latent_dim)."""
        cn = self._cond_nodes(cond)
        x = torch.cat([bones.unsqueeze(-1), cn], dim=-1)
        x = self.enc1(x, self.adj)
        x = self.enc2(torch.cat([x, cn], dim=-1), self.adj)
        flat = x.flatten(start_dim=-2)
        return self.mu_head(flat), self.logvar_head(flat)

    def decode(self, z: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        """(..., latent_dim) -> nonnegative (..., 24) bone lengths."""
        cp = self.cond_proj(cond)
        cn = self._cond_nodes(cond)
        seed = self.dec_seed(torch.cat([z, cp], dim=-1))
        x = seed.reshape(*seed.shape[:-1], self.num_bones, -1)
        x = self.dec1(torch.cat([x, cn], dim=-1), self.adj)
        x = self.dec2(torch.cat([x, cn], dim=-1), self.adj)
        return F.softplus(self.out_head(x)).squeeze(-1)

    def loss(self, bones: torch.Tensor, cond: torch.Tensor, noise: torch.Tensor,
             kl_weight: float) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """(total, recon, kl): squared-error reconstruction plus weighted KL."""
        mu, logvar = self.encode(bones, cond)
        z = reparameterize(mu, logvar, noise)
        recon_b = self.decode(z, cond)
        recon = ((recon_b - bones) ** 2).sum(dim=-1).mean()
        kl = gaussian_kl(mu, logvar).mean()
        return recon + kl_weight * kl, recon, kl


def sample_tpose(model: TPoseVae, species: SpeciesEmbedding, seed: int,
                 topo: SkeletonTopology) -> np.ndarray:
    """Draw a prior latent and decode to a (25, 3) rest pose for the species."""
    rng = np.random.default_rng(seed)
    dtype = next(model.parameters()).dtype
    z = torch.tensor(rng.standard_normal(model.latent_dim), dtype=dtype)
    cond = torch.tensor(species.vector, dtype=dtype)
    with torch.no_grad():
        bones = model.decode(z.unsqueeze(0), cond.unsqueeze(0)).squeeze(0)
    return forward_kinematics_tpose(bones.double().numpy(), topo)


def sample_bone_lengths(model: TPoseVae, species: SpeciesEmbedding, seed: int) -> np.ndarray:
    """The (24,) bone-length vector behind sample_tpose, for metric reference."""
    rng = np.random.default_rng(seed)
    dtype = next(model.parameters()).dtype
    z = torch.tensor(rng.standard_normal(model.latent_dim), dtype=dtype)
    cond = torch.tensor(species.vector, dtype=dtype)
    with torch.no_grad():
        return model.decode(z.unsqueeze(0), cond.unsqueeze(0)).squeeze(0).double().numpy()
