import numpy as np
import pytest
import torch

from crossmotion.morph_critic import (
    MorphologyCritic,
    gru_step,
    morph_guide_loss,
    pretrain_loss,
)
from crossmotion.optim import AdamConfig, init_adam_state, sgd_backward_step

from _gradcheck import max_fd_relative_error


def _critic(latent_dim=6, hidden=10, dtype=torch.float64, seed=0):
    torch.manual_seed(seed)
    return MorphologyCritic(latent_dim=latent_dim, hidden=hidden).to(dtype)


def test_gru_step_matches_gate_equation_oracle():
    torch.manual_seed(0)
    critic = _critic()
    x = torch.randn(3, 6, dtype=torch.float64)
    h = torch.randn(3, 10, dtype=torch.float64)
    out = gru_step(x, h, critic.w_x, critic.w_h)

    # explicit gate equations with the same stacked weights
    Wx, bx = critic.w_x.weight.detach().numpy(), critic.w_x.bias.detach().numpy()
    Wh, bh = critic.w_h.weight.detach().numpy(), critic.w_h.bias.detach().numpy()
    xs = x.numpy() @ Wx.T + bx
    hs = h.numpy() @ Wh.T + bh
    H = 10
    sig = lambda v: 1.0 / (1.0 + np.exp(-v))
    r = sig(xs[:, :H] + hs[:, :H])
    u = sig(xs[:, H : 2 * H] + hs[:, H : 2 * H])
    n = np.tanh(xs[:, 2 * H :] + r * hs[:, 2 * H :])
    expected = (1 - u) * n + u * h.numpy()
    assert np.abs(out.detach().numpy() - expected).max() <= 1e-9


def test_single_step_base_case():
    critic = _critic()
    z = torch.randn(2, 1, 6, dtype=torch.float64)
    out = critic(z)
    h = gru_step(z[:, 0], torch.zeros(2, 10, dtype=torch.float64), critic.w_x, critic.w_h)
    expected = critic.head(h)
    assert torch.allclose(out, expected, atol=1e-12)
    assert out.shape == (2, 24)


def test_forward_deterministic():
    critic = _critic()
    z = torch.randn(2, 7, 6, dtype=torch.float64)
    assert torch.equal(critic(z), critic(z))


def test_lengths_stop_recurrence():
    critic = _critic()
    z = torch.randn(1, 5, 6, dtype=torch.float64)
    lengths = torch.tensor([3])
    padded = z.clone()
    padded[0, 3:] = 123.0  # garbage beyond the valid length
    assert torch.equal(critic(padded, lengths), critic(z[:, :3]))


def test_pretrain_loss_identities():
    critic = _critic()
    z = torch.randn(2, 4, 6, dtype=torch.float64)
    with torch.no_grad():
        pred = critic(z)
    assert float(pretrain_loss(critic, z, pred).detach()) <= 1e-20

    bones = torch.zeros(2, 24, dtype=torch.float64)
    base = float(pretrain_loss(critic, z, pred - 0.1).detach())
    doubled = float(pretrain_loss(critic, z, pred - 0.2).detach())
    assert doubled == pytest.approx(4.0 * base, rel=1e-9)


def test_pretrain_gradient_matches_finite_differences():
    critic = _critic(seed=1)
    rng = np.random.default_rng(0)
    z = torch.tensor(rng.standard_normal((2, 5, 6)))
    bones = torch.tensor(rng.uniform(0.05, 0.8, (2, 24)))
    err = max_fd_relative_error(
        lambda: pretrain_loss(critic, z, bones),
        dict(critic.named_parameters()),
        n_coords=200,
    )
    assert err <= 1e-4


def test_guide_loss_requires_frozen_critic():
    critic = _critic()
    z = torch.randn(1, 4, 6, dtype=torch.float64)
    mask = torch.zeros(1, 4, dtype=torch.bool)
    with pytest.raises(RuntimeError):
        morph_guide_loss(critic, z, z, mask, torch.zeros(1, 24, dtype=torch.float64))


def test_guide_loss_unmasked_gradient_exactly_zero():
    critic = _critic().freeze()
    z_pred = torch.randn(1, 5, 6, dtype=torch.float64, requires_grad=True)
    z_truth = torch.randn(1, 5, 6, dtype=torch.float64, requires_grad=True)
    mask = torch.tensor([[True, False, True, False, False]])
    bones = torch.rand(1, 24, dtype=torch.float64)
    loss = morph_guide_loss(critic, z_pred, z_truth, mask, bones)
    loss.backward()
    assert z_truth.grad is None or torch.all(z_truth.grad == 0.0)
    grad = z_pred.grad
    assert torch.all(grad[0, 1] == 0.0)
    assert torch.all(grad[0, 3] == 0.0)
    assert torch.all(grad[0, 4] == 0.0)
    assert grad[0, 0].abs().max() > 0.0
    assert grad[0, 2].abs().max() > 0.0
    for p in critic.parameters():
        assert p.grad is None


def test_guide_loss_empty_mask_no_generator_gradient():
    critic = _critic().freeze()
    z_pred = torch.randn(1, 4, 6, dtype=torch.float64, requires_grad=True)
    z_truth = torch.randn(1, 4, 6, dtype=torch.float64)
    mask = torch.zeros(1, 4, dtype=torch.bool)
    loss = morph_guide_loss(critic, z_pred, z_truth, mask, torch.rand(1, 24, dtype=torch.float64))
    assert float(loss.detach()) >= 0.0
    loss.backward()
    assert z_pred.grad is None or torch.all(z_pred.grad == 0.0)


def test_guide_loss_masked_gradient_matches_finite_differences():
    critic = _critic(seed=2).freeze()
    rng = np.random.default_rng(1)
    z_pred = torch.tensor(rng.standard_normal((1, 5, 6)), requires_grad=True)
    z_truth = torch.tensor(rng.standard_normal((1, 5, 6)))
    mask = torch.tensor([[True, True, False, True, False]])
    bones = torch.tensor(rng.uniform(0.05, 0.8, (1, 24)))
    err = max_fd_relative_error(
        lambda: morph_guide_loss(critic, z_pred, z_truth, mask, bones),
        {"z_pred": z_pred},
        n_coords=200,
    )
    assert err <= 1e-4


def test_frozen_critic_checksum_stable_under_generator_training():
    critic = _critic(dtype=torch.float32).freeze()
    before = critic.param_checksum()
    # emulate generator updates driving gradients through the critic input
    z_pred = torch.randn(2, 4, 6, requires_grad=True)
    state = init_adam_state({"z_pred": z_pred})
    for _ in range(5):
        loss = morph_guide_loss(critic, z_pred, torch.randn(2, 4, 6),
                                torch.ones(2, 4, dtype=torch.bool), torch.rand(2, 24))
        if z_pred.grad is not None:
            z_pred.grad = None
        loss.backward()
        state = __import__("crossmotion.optim", fromlist=["optimizer_step"]).optimizer_step(
            {"z_pred": z_pred}, {"z_pred": z_pred.grad}, state, AdamConfig(lr=1e-2)
        )
    assert critic.param_checksum() == before


def test_pretrained_critic_recovers_bones_from_informative_latents():
    # latents deterministically encode the bone vector; a short pretraining
    # run must drive the guide loss on real latents down to its residual
    torch.manual_seed(3)
    critic = MorphologyCritic(latent_dim=8, hidden=32)
    rng = np.random.default_rng(5)
    proj = rng.standard_normal((24, 8)) * 0.5

    def latents_for(bones):
        base = bones @ proj
        return np.stack([base * (1 + 0.05 * np.sin(t)) for t in range(6)])

    bones_all = rng.uniform(0.05, 0.8, (32, 24))
    z_all = torch.tensor(np.stack([latents_for(b) for b in bones_all]), dtype=torch.float32)
    b_all = torch.tensor(bones_all, dtype=torch.float32)

    state = init_adam_state(dict(critic.named_parameters()))
    for step in range(1000):
        idx = rng.choice(32, size=8, replace=False)
        loss = pretrain_loss(critic, z_all[idx], b_all[idx])
        state = sgd_backward_step(critic, loss, state, AdamConfig(lr=5e-3))

    final = float(pretrain_loss(critic, z_all, b_all).detach())
    critic.freeze()
    guide = float(morph_guide_loss(
        critic, torch.zeros_like(z_all), z_all,
        torch.zeros(32, 6, dtype=torch.bool), b_all,
    ).detach())
    assert guide == pytest.approx(final, rel=1e-5)
    assert final < 0.05
