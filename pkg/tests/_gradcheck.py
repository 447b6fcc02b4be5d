"""Central finite-difference gradient checking shared by the model tests.

The analytic gradient comes from autograd; the oracle is a central difference
of the loss itself, evaluated coordinate by coordinate at 64-bit precision
with step 1e-5. The error of a coordinate is |fd - grad| relative to the
larger of the two, floored at 1e-3 of the overall gradient magnitude so that
coordinates whose gradient sits below the finite-difference noise floor
(|loss| * eps64 / step) cannot drown the check in rounding noise.
"""
from __future__ import annotations

import numpy as np
import torch


def max_fd_relative_error(
    loss_fn,
    params: dict[str, torch.Tensor],
    n_coords: int = 200,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max relative error between autograd and central differences.

    loss_fn must be a deterministic closure over the given parameters;
    coordinates are sampled across all parameter tensors.
    """
    names = sorted(params)
    tensors = [params[n] for n in names]
    loss = loss_fn()
    grads = torch.autograd.grad(loss, tensors, allow_unused=True)
    grad_map = {
        n: (g.detach().clone() if g is not None else torch.zeros_like(p))
        for n, p, g in zip(names, tensors, grads)
    }
    gmax = max(float(g.abs().max()) for g in grad_map.values())
    floor = max(1e-8, 1e-3 * gmax)

    sizes = np.array([p.numel() for p in tensors], dtype=np.float64)
    rng = np.random.default_rng(seed)
    worst = 0.0
    with torch.no_grad():
        for _ in range(n_coords):
            ti = int(rng.choice(len(tensors), p=sizes / sizes.sum()))
            p = tensors[ti]
            flat = p.view(-1)
            ci = int(rng.integers(flat.numel()))
            original = flat[ci].item()

            flat[ci] = original + step
            with torch.enable_grad():
                plus = float(loss_fn().detach())
            flat[ci] = original - step
            with torch.enable_grad():
                minus = float(loss_fn().detach())
            flat[ci] = original

            fd = (plus - minus) / (2.0 * step)
            an = grad_map[names[ti]].view(-1)[ci].item()
            worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), floor))
    return worst
