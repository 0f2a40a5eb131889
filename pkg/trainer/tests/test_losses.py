"""Loss contract: exact decomposition, degeneracies, input validation."""

import pytest
import torch

from edgetrainer.losses import reconstruction_loss, ssim_mean


def _pair(seed=5, shape=(2, 3, 32, 32)):
    g = torch.Generator().manual_seed(seed)
    return torch.rand(shape, generator=g), torch.rand(shape, generator=g)


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0, 2.0])
def test_total_is_literal_sum_of_terms(lam):
    pred, target = _pair()
    total, l2, ssim = reconstruction_loss(pred, target, lam)
    # same float op on the same operands, so bitwise equality is fair
    assert total.item() == (l2 + lam * ssim).item()


def test_lam_zero_degenerates_to_pure_l2():
    pred, target = _pair()
    total, l2, _ = reconstruction_loss(pred, target, lam=0.0)
    assert total.item() == l2.item()
    assert l2.item() == pytest.approx(torch.mean((pred - target) ** 2).item(), abs=1e-12)


def test_identical_pair_costs_nothing():
    x, _ = _pair()
    total, l2, ssim = reconstruction_loss(x, x)
    assert l2.item() == 0.0
    assert abs(ssim.item()) <= 1e-6
    assert abs(total.item()) <= 1e-6


def test_ssim_of_identical_is_one():
    x, _ = _pair()
    assert ssim_mean(x, x).item() == pytest.approx(1.0, abs=1e-6)


def test_ssim_is_symmetric():
    pred, target = _pair(seed=9)
    assert ssim_mean(pred, target).item() == pytest.approx(
        ssim_mean(target, pred).item(), abs=1e-7
    )


def test_ssim_drops_with_noise():
    x, _ = _pair(seed=11)
    g = torch.Generator().manual_seed(12)
    noisy = torch.clamp(x + 0.3 * torch.randn(x.shape, generator=g), 0, 1)
    assert ssim_mean(x, noisy).item() < ssim_mean(x, x).item()


def test_rejects_small_and_mismatched_inputs():
    with pytest.raises(ValueError, match="11 px"):
        ssim_mean(torch.rand(1, 3, 8, 8), torch.rand(1, 3, 8, 8))
    with pytest.raises(ValueError, match="matching"):
        ssim_mean(torch.rand(1, 3, 32, 32), torch.rand(1, 3, 32, 16))
    with pytest.raises(ValueError, match="matching"):
        ssim_mean(torch.rand(3, 32, 32), torch.rand(3, 32, 32))


def test_loss_differentiates():
    pred, target = _pair()
    pred = pred.requires_grad_(True)
    total, _, _ = reconstruction_loss(pred, target)
    total.backward()
    assert pred.grad is not None
    assert torch.isfinite(pred.grad).all()
