"""Deterministic functional Adam shared by every training stage."""
from __future__ import annotations

from dataclasses import dataclass, field

import torch


@dataclass
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    """First/second moments per parameter plus the shared step counter."""

    step: int = 0
    m: dict[str, torch.Tensor] = field(default_factory=dict)
    v: dict[str, torch.Tensor] = field(default_factory=dict)


def init_adam_state(params: dict[str, torch.Tensor]) -> AdamState:
    return AdamState(
        step=0,
        m={k: torch.zeros_like(p) for k, p in params.items()},
        v={k: torch.zeros_like(p) for k, p in params.items()},
    )


def optimizer_step(
    params: dict[str, torch.Tensor],
    grads: dict[str, torch.Tensor | None],
    state: AdamState,
    config: AdamConfig,
) -> AdamState:
    """One bias-corrected adaptive-moment update, applied in place.

    Missing gradients count as zero (the moments still decay). Aborts on
    non-finite gradients rather than corrupting the parameters.
    """
    state.step += 1
    t = state.step
    bc1 = 1.0 - config.beta1**t
    bc2 = 1.0 - config.beta2**t
    with torch.no_grad():
        for name, p in params.items():
            g = grads.get(name)
            if g is None:
                g = torch.zeros_like(p)
            if not torch.isfinite(g).all():
                raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
            m = state.m[name]
            v = state.v[name]
            m.mul_(config.beta1).add_(g, alpha=1.0 - config.beta1)
            v.mul_(config.beta2).addcmul_(g, g, value=1.0 - config.beta2)
            m_hat = m / bc1
            v_hat = v / bc2
            p.add_(-config.lr * m_hat / (v_hat.sqrt() + config.eps))
    return state


def module_params(module: torch.nn.Module) -> dict[str, torch.Tensor]:
    return dict(module.named_parameters())


def module_grads(module: torch.nn.Module) -> dict[str, torch.Tensor | None]:
    return {k: p.grad for k, p in module.named_parameters()}


def sgd_backward_step(module: torch.nn.Module, loss: torch.Tensor, state: AdamState,
                      config: AdamConfig) -> AdamState:
    """backward() + Adam step + grad reset, the common inner loop."""
    module.zero_grad(set_to_none=True)
    loss.backward()
    state = optimizer_step(module_params(module), module_grads(module), state, config)
    module.zero_grad(set_to_none=True)
    return state


def seed_all(seed: int) -> None:
    """Pin every RNG and run single-threaded so runs are bit-reproducible."""
    torch.manual_seed(seed)
    torch.set_num_threads(1)
