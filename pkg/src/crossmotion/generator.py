"""Masked latent-motion generator.

A transformer backbone reads the latent sequence with masked positions
replaced by a learnable mask token, prefixed by a projected rest-pose token,
and cross-attends to caption tokens (sentence feature first, then words).
Per masked position, an MLP velocity network is trained to carry Gaussian
noise to the clean latent along straight-line interpolations; generation
iteratively unmasks positions along a cosine schedule, integrating the
learned velocity field with Euler steps under classifier-free guidance.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from .features import NormStats, denormalize, normalize
from .morph_critic import MorphologyCritic, morph_guide_loss
from .motion_ae import DOWNSAMPLE, MotionAutoencoder
from .providers import EmbeddingProvider, TextFeatures
from .skeleton import NUM_JOINTS, SkeletonTopology, forward_kinematics_tpose
from .tpose_vae import TPoseVae, sample_bone_lengths

TPOSE_FLAT_DIM = NUM_JOINTS * 3  # 75; the root row is always the origin


def flatten_tpose(tpose: np.ndarray) -> np.ndarray:
    tpose = np.asarray(tpose, dtype=np.float64)
    if tpose.shape != (NUM_JOINTS, 3):
        raise ValueError(f"expected ({NUM_JOINTS}, 3) rest pose, got {tpose.shape}")
    return tpose.reshape(-1)


def sinusoidal_positions(n: int, dim: int, dtype=torch.float32, device=None) -> torch.Tensor:
    """(n, dim) fixed sin/cos position table."""
    pos = torch.arange(n, dtype=dtype, device=device).unsqueeze(1)
    half = dim // 2
    freqs = torch.exp(
        torch.arange(half, dtype=dtype, device=device) * (-math.log(10000.0) / max(half - 1, 1))
    )
    ang = pos * freqs
    table = torch.zeros(n, dim, dtype=dtype, device=device)
    table[:, 0::2] = torch.sin(ang)
    table[:, 1::2] = torch.cos(ang)
    return table


def timestep_embedding(tau: torch.Tensor, dim: int) -> torch.Tensor:
    """Sin/cos features of the flow time tau in [0, 1], shape (..., dim)."""
    half = dim // 2
    freqs = torch.exp(
        torch.arange(half, dtype=tau.dtype, device=tau.device)
        * (-math.log(10000.0) / max(half - 1, 1))
    )
    ang = 1000.0 * tau.unsqueeze(-1) * freqs
    return torch.cat([torch.sin(ang), torch.cos(ang)], dim=-1)


class TransformerBlock(nn.Module):
    """Pre-norm block: self-attention over motion rows, cross-attention to text."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(dim)
        self.self_attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.ln2 = nn.LayerNorm(dim)
        self.cross_attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.ln3 = nn.LayerNorm(dim)
        self.ff = nn.Sequential(nn.Linear(dim, 4 * dim), nn.GELU(), nn.Linear(4 * dim, dim))

    def forward(self, x, text, text_pad=None, motion_pad=None):
        h = self.ln1(x)
        x = x + self.self_attn(h, h, h, key_padding_mask=motion_pad, need_weights=False)[0]
        h = self.ln2(x)
        x = x + self.cross_attn(h, text, text, key_padding_mask=text_pad, need_weights=False)[0]
        return x + self.ff(self.ln3(x))


class MaskedMotionGenerator(nn.Module):
    def __init__(self, latent_dim: int = 64, text_dim: int = 64, blocks: int = 4,
                 heads: int = 4, vel_hidden: int = 128, time_dim: int = 64):
        super().__init__()
        self.latent_dim = latent_dim
        self.time_dim = time_dim
        self.mask_token = nn.Parameter(torch.randn(latent_dim) * 0.02)
        self.tpose_proj = nn.Linear(TPOSE_FLAT_DIM, latent_dim)
        self.text_proj = nn.Linear(text_dim, latent_dim)
        self.blocks = nn.ModuleList(TransformerBlock(latent_dim, heads) for _ in range(blocks))
        self.ln_out = nn.LayerNorm(latent_dim)

        self.vel_z = nn.Linear(latent_dim, vel_hidden)
        self.vel_h = nn.Linear(latent_dim, vel_hidden)
        self.vel_t = nn.Sequential(nn.Linear(time_dim, vel_hidden), nn.GELU(),
                                   nn.Linear(vel_hidden, vel_hidden))
        self.vel_mlp = nn.Sequential(
            nn.GELU(), nn.Linear(vel_hidden, vel_hidden),
            nn.GELU(), nn.Linear(vel_hidden, vel_hidden),
            nn.GELU(),
        )
        self.vel_out = nn.Linear(vel_hidden, latent_dim)

        self.null_sentence = nn.Parameter(torch.randn(text_dim) * 0.02)
        self.null_word = nn.Parameter(torch.randn(text_dim) * 0.02)

    @property
    def dtype(self) -> torch.dtype:
        return self.mask_token.dtype

    def null_tokens(self) -> torch.Tensor:
        """(2, text_dim) learned unconditional stand-in for caption tokens."""
        return torch.stack([self.null_sentence, self.null_word])

    def assemble_rows(self, z: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """Motion rows with masked positions replaced by the shared mask token."""
        token = self.mask_token.to(z.dtype).expand_as(z)
        return torch.where(mask.unsqueeze(-1), token, z)

    def build_context(self, z, mask, tpose_flat, text_tokens, text_pad=None, motion_pad=None):
        """Contextualize (B, T, d) latents into (B, T+1, d); row 0 is the pose token.

        tpose_flat: (B, 75); text_tokens: (B, n_text, text_dim) laid out as
        [sentence; words]. Boolean pad masks mark rows to ignore (True = pad).
        """
        rows = self.assemble_rows(z, mask)
        pose = self.tpose_proj(tpose_flat).unsqueeze(1)
        x = torch.cat([pose, rows], dim=1)
        x = x + sinusoidal_positions(x.shape[1], x.shape[2], dtype=x.dtype, device=x.device)
        text = self.text_proj(text_tokens)
        pad = None
        if motion_pad is not None:
            keep_pose = motion_pad.new_zeros(motion_pad.shape[0], 1)
            pad = torch.cat([keep_pose, motion_pad], dim=1)
        for blk in self.blocks:
            x = blk(x, text, text_pad=text_pad, motion_pad=pad)
        return self.ln_out(x)

    def velocity(self, z_tau: torch.Tensor, tau: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
        """Flow velocity at interpolated latent z_tau, time tau, context row h."""
        if not torch.is_tensor(tau):
            tau = torch.as_tensor(tau, dtype=z_tau.dtype, device=z_tau.device)
        tau = tau.to(z_tau.dtype).expand(z_tau.shape[:-1])
        u = self.vel_z(z_tau) + self.vel_h(h) + self.vel_t(timestep_embedding(tau, self.time_dim))
        return self.vel_out(self.vel_mlp(u))


def sample_training_mask(T: int, rng: np.random.Generator) -> np.ndarray:
    """(T,) boolean mask: a Uniform(0.5, 1.0) fraction of positions, rounded up."""
    if T < 1:
        raise ValueError("T must be >= 1")
    ratio = rng.uniform(0.5, 1.0)
    count = int(np.ceil(ratio * T))
    mask = np.zeros(T, dtype=bool)
    mask[rng.choice(T, size=count, replace=False)] = True
    return mask


def flow_loss(model, Z, mask, noise, taus, H, velocity_override=None) -> torch.Tensor:
    """Mean squared velocity error over masked positions; 0 for an empty mask.

    Z, noise: (B, T, d); taus, mask: (B, T); H: (B, T+1, d).
    """
    if not mask.any():
        return Z.new_zeros(())
    z_m, n_m, tau_m = Z[mask], noise[mask], taus[mask]
    z_tau = (1.0 - tau_m).unsqueeze(-1) * n_m + tau_m.unsqueeze(-1) * z_m
    h_m = H[:, 1:][mask]
    vel = velocity_override or model.velocity
    v = vel(z_tau, tau_m, h_m)
    return ((v - (z_m - n_m)) ** 2).sum(dim=-1).mean()


def predicted_clean_latents(model, Z, mask, noise, taus, H, velocity_override=None) -> torch.Tensor:
    """Estimated clean latents: one Euler step from z_tau to time 1 at masked
    positions, detached ground truth elsewhere."""
    out = Z.detach().clone()
    if not mask.any():
        return out
    z_m, n_m, tau_m = Z[mask], noise[mask], taus[mask]
    z_tau = (1.0 - tau_m).unsqueeze(-1) * n_m + tau_m.unsqueeze(-1) * z_m
    h_m = H[:, 1:][mask]
    vel = velocity_override or model.velocity
    v = vel(z_tau, tau_m, h_m)
    out[mask] = z_tau + (1.0 - tau_m).unsqueeze(-1) * v
    return out


def gen_total_loss(
    model: MaskedMotionGenerator,
    critic: MorphologyCritic,
    Z: torch.Tensor,
    mask: torch.Tensor,
    noise: torch.Tensor,
    taus: torch.Tensor,
    tpose_flat: torch.Tensor,
    text_tokens: torch.Tensor,
    bones: torch.Tensor,
    text_pad: torch.Tensor | None = None,
    motion_pad: torch.Tensor | None = None,
    lengths: torch.Tensor | None = None,
    morph_guide_weight: float = 1.0,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(total, flow, guide) with a single velocity evaluation."""
    if critic is None:
        raise RuntimeError("generator training requires a pretrained morphology critic")
    H = model.build_context(Z, mask, tpose_flat, text_tokens, text_pad, motion_pad)
    if mask.any():
        z_m, n_m, tau_m = Z[mask], noise[mask], taus[mask]
        z_tau = (1.0 - tau_m).unsqueeze(-1) * n_m + tau_m.unsqueeze(-1) * z_m
        v = model.velocity(z_tau, tau_m, H[:, 1:][mask])
        flow = ((v - (z_m - n_m)) ** 2).sum(dim=-1).mean()
        z_pred = Z.new_zeros(Z.shape)
        z_pred[mask] = z_tau + (1.0 - tau_m).unsqueeze(-1) * v
    else:
        flow = Z.new_zeros(())
        z_pred = Z.new_zeros(Z.shape)
    guide = morph_guide_loss(critic, z_pred, Z, mask, bones, lengths)
    return flow + morph_guide_weight * guide, flow, guide


def cfg_velocity(v_cond, v_uncond, omega: float):
    """Guided velocity: unconditional plus omega times the conditional delta.

    The scale-0 and scale-1 limits short-circuit so the identities hold
    exactly rather than up to float rounding.
    """
    if omega == 0.0:
        return v_uncond
    if omega == 1.0:
        return v_cond
    return v_uncond + omega * (v_cond - v_uncond)


def unmask_schedule(T: int, R: int) -> list[int]:
    """Remaining-masked counts after each of R iterations (cosine decay to 0).

    Counts are the rounded cosine curve T*cos(pi*r/(2R)), clipped to be
    nonincreasing; the final entry is always 0.
    """
    remaining = []
    prev = T
    for r in range(1, R + 1):
        value = int(math.floor(T * math.cos(math.pi * r / (2 * R)) + 0.5))
        value = min(value, prev)
        remaining.append(0 if r == R else value)
        prev = remaining[-1]
    return remaining


def text_tokens_tensor(text: TextFeatures, dtype=torch.float32) -> torch.Tensor:
    """[sentence; words] rows as a (1 + n_words, dim) tensor."""
    arr = np.concatenate([text.sentence[None], text.words], axis=0)
    return torch.as_tensor(arr, dtype=dtype)


def _iterative_fill(model, Z, filled, fill_order, R, N, omega, gen,
                    tpose_flat, text_tokens, null_tokens, velocity_override=None) -> None:
    """Fill `fill_order` positions of Z in place over R unmasking iterations."""
    G = fill_order.numel()
    if R > G:
        warnings.warn(f"clamping {R} fill iterations to {G} fillable positions")
        R = G
    remaining = unmask_schedule(G, R)
    prev, ptr = G, 0
    for r in range(R):
        k = prev - remaining[r]
        prev = remaining[r]
        if k == 0:
            continue
        mask_rows = (~filled).unsqueeze(0)
        h_cond = model.build_context(Z, mask_rows, tpose_flat, text_tokens)
        h_uncond = model.build_context(Z, mask_rows, tpose_flat, null_tokens)
        sel = fill_order[ptr : ptr + k]
        ptr += k
        if filled[sel].any():
            raise AssertionError("a position was scheduled for filling twice")
        z = torch.randn(k, model.latent_dim, generator=gen, dtype=model.dtype)
        hc = h_cond[0, 1 + sel]
        hu = h_uncond[0, 1 + sel]
        vel = velocity_override or model.velocity
        for n in range(N):
            tau = torch.full((k,), n / N, dtype=model.dtype)
            v = cfg_velocity(vel(z, tau, hc), vel(z, tau, hu), omega)
            z = z + v / N
        Z[0, sel] = z
        filled[sel] = True


def infer(model: MaskedMotionGenerator, text: TextFeatures, tpose_flat: np.ndarray,
          T: int, R: int, N: int, omega: float, seed: int,
          velocity_override=None) -> torch.Tensor:
    """Generate a (T, d) latent sequence from an all-masked start.

    Deterministic per seed: the fill order and every noise draw come from one
    seeded generator.
    """
    if T < 1 or R < 1 or N < 1:
        raise ValueError("T, R and N must all be >= 1")
    gen = torch.Generator().manual_seed(seed)
    fill_order = torch.randperm(T, generator=gen)
    Z = torch.zeros(1, T, model.latent_dim, dtype=model.dtype)
    filled = torch.zeros(T, dtype=torch.bool)
    tpose_t = torch.as_tensor(tpose_flat, dtype=model.dtype).unsqueeze(0)
    tokens = text_tokens_tensor(text, model.dtype).unsqueeze(0)
    null_tokens = model.null_tokens().unsqueeze(0)
    with torch.no_grad():
        _iterative_fill(model, Z, filled, fill_order, R, N, omega, gen,
                        tpose_t, tokens, null_tokens, velocity_override)
    if not bool(filled.all()):
        raise AssertionError("inference left unfilled positions")
    return Z[0]


@dataclass
class PipelineBundle:
    """Everything needed to run text -> motion end to end."""

    topo: SkeletonTopology
    provider: EmbeddingProvider
    tpose_model: TPoseVae
    motion_model: MotionAutoencoder
    generator: MaskedMotionGenerator
    stats: NormStats | None = None
    fill_iterations: int = 8
    ode_steps: int = 16
    guidance_scale: float = 3.0


@dataclass
class GenerationResult:
    motion: np.ndarray  # (L, 76) float32, denormalized
    bone_lengths: np.ndarray  # (24,) sampled morphology used for conditioning
    tpose: np.ndarray  # (25, 3)


@dataclass
class TransitionResult:
    motion: np.ndarray  # (L, 76) float32
    latents: np.ndarray  # (T_total, d)
    prefix_len: int
    gap_len: int
    suffix_len: int


def generate_motion(bundle: PipelineBundle, caption: str, species_name: str,
                    length: int, seed: int) -> GenerationResult:
    """Sample a rest pose for the species, generate latents, decode to frames."""
    if length < DOWNSAMPLE:
        raise ValueError(f"length must be >= {DOWNSAMPLE}")
    tpose_seed, infer_seed = (int(s) for s in np.random.SeedSequence([seed]).generate_state(2))
    species = bundle.provider.species_embed(species_name)
    bones = sample_bone_lengths(bundle.tpose_model, species, tpose_seed)
    tpose = forward_kinematics_tpose(bones, bundle.topo)
    text = bundle.provider.text_features(caption)
    Z = infer(bundle.generator, text, flatten_tpose(tpose), length // DOWNSAMPLE,
              bundle.fill_iterations, bundle.ode_steps, bundle.guidance_scale, infer_seed)
    with torch.no_grad():
        frames = bundle.motion_model.decode(Z.unsqueeze(0), length)[0].double().numpy()
    if bundle.stats is not None:
        frames = denormalize(frames, bundle.stats)
    return GenerationResult(motion=frames.astype(np.float32), bone_lengths=bones, tpose=tpose)


def cross_species_transition(bundle: PipelineBundle, motion_a: np.ndarray,
                             motion_b: np.ndarray, gap_tokens: int, caption: str,
                             tpose_target: np.ndarray, seed: int) -> TransitionResult:
    """In-fill a gap of fresh latent positions between two encoded motions.

    Only the gap positions are ever generated; the prefix and suffix latents
    pass through bit-identically. The decoded length is 4*(T_a + G + T_b).
    """
    if gap_tokens < 1:
        raise ValueError("gap_tokens must be >= 1")

    def _encode(motion: np.ndarray) -> torch.Tensor:
        arr = np.asarray(motion, dtype=np.float64)
        if bundle.stats is not None:
            arr = normalize(arr, bundle.stats)
        with torch.no_grad():
            return bundle.motion_model.encode(
                torch.as_tensor(arr, dtype=bundle.generator.dtype).unsqueeze(0)
            )[0]

    za = _encode(motion_a)
    zb = _encode(motion_b)
    ta, tb, G = za.shape[0], zb.shape[0], gap_tokens
    total = ta + G + tb

    Z = torch.zeros(1, total, bundle.generator.latent_dim, dtype=bundle.generator.dtype)
    Z[0, :ta] = za
    Z[0, ta + G :] = zb
    filled = torch.ones(total, dtype=torch.bool)
    filled[ta : ta + G] = False

    gen = torch.Generator().manual_seed(seed)
    fill_order = ta + torch.randperm(G, generator=gen)
    text = bundle.provider.text_features(caption)
    tokens = text_tokens_tensor(text, bundle.generator.dtype).unsqueeze(0)
    null_tokens = bundle.generator.null_tokens().unsqueeze(0)
    tpose_t = torch.as_tensor(flatten_tpose(tpose_target), dtype=bundle.generator.dtype).unsqueeze(0)

    with torch.no_grad():
        _iterative_fill(bundle.generator, Z, filled, fill_order,
                        min(bundle.fill_iterations, G), bundle.ode_steps,
                        bundle.guidance_scale, gen, tpose_t, tokens, null_tokens)
        frames = bundle.motion_model.decode(Z, DOWNSAMPLE * total)[0].double().numpy()
    if bundle.stats is not None:
        frames = denormalize(frames, bundle.stats)
    return TransitionResult(
        motion=frames.astype(np.float32),
        latents=Z[0].double().numpy(),
        prefix_len=ta,
        gap_len=G,
        suffix_len=tb,
    )
