import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgemask.loss import (
    LossConfig,
    MaskPrediction,
    edgemask_grad,
    edgemask_loss,
    pixel_bce,
    total_loss,
    vanilla_mask_loss,
)
from edgemask.raster import BinaryMask, boundary_band

from oracles import band_bruteforce, central_difference, rel_error


def random_instance(rng, m, k):
    target = BinaryMask(rng.random((m, m)) < rng.uniform(0.2, 0.8))
    logits = rng.normal(0, 2, (m, m))
    return logits, target, boundary_band(target, k)


def test_pixel_bce_examples():
    assert pixel_bce(True, 0.5) == pytest.approx(math.log(2))
    assert pixel_bce(False, 0.5) == pytest.approx(math.log(2))
    assert pixel_bce(True, 1 - 1e-7) == pytest.approx(1e-7, rel=1e-6)


def test_prediction_is_clamped():
    p = MaskPrediction(np.array([[0.0, 1.0], [0.3, 0.7]]), eps=1e-3)
    assert p.probs.min() == 1e-3 and p.probs.max() == 1 - 1e-3


def test_config_validation():
    for bad in (dict(lam=-1), dict(m=1), dict(k=0), dict(clamp_eps=0.5), dict(clamp_eps=0)):
        with pytest.raises(ValueError):
            LossConfig(**bad)


def test_lambda_one_is_mean_bce():
    rng = np.random.default_rng(0)
    logits, target, band = random_instance(rng, 8, 2)
    pred = MaskPrediction.from_logits(logits)
    out = edgemask_loss(pred, target, band, LossConfig(lam=1, m=8, k=2))
    assert out.total == pytest.approx(vanilla_mask_loss(pred, target), rel=1e-12)


def test_perfect_prediction_is_near_zero():
    target = BinaryMask(np.eye(6, dtype=bool))
    pred = MaskPrediction(target.data.astype(float))
    cfg = LossConfig(lam=100, m=6, k=1)
    out = edgemask_loss(pred, target, boundary_band(target, 1), cfg)
    assert out.total <= -math.log1p(-cfg.clamp_eps) * 100 + 1e-15
    assert vanilla_mask_loss(pred, target) < 1e-6


def test_two_by_two_hand_value():
    target = np.array([[True, True], [True, False]])
    # every clipped window covers the whole 2x2 RoI, so every pixel is boundary
    assert band_bruteforce(target, 1).all()
    band = boundary_band(BinaryMask(target), 1)
    out = edgemask_loss(MaskPrediction(np.full((2, 2), 0.5)), BinaryMask(target), band,
                        LossConfig(lam=100, m=2, k=1))
    # (0 + 100 * 4 ln 2) / 2**2
    assert out.total == pytest.approx(69.31471805599453, rel=1e-12)
    assert (out.pixel_count_boundary, out.pixel_count_interior) == (4, 0)


def test_breakdown_identity_and_validation():
    rng = np.random.default_rng(3)
    logits, target, band = random_instance(rng, 10, 2)
    cfg = LossConfig(lam=7.5, m=10, k=2)
    out = edgemask_loss(MaskPrediction.from_logits(logits), target, band, cfg)
    assert out.total == pytest.approx((out.interior_sum + 7.5 * out.boundary_sum) / 100, rel=1e-14)
    assert out.pixel_count_boundary + out.pixel_count_interior == 100
    with pytest.raises(ValueError):
        edgemask_loss(MaskPrediction.from_logits(logits), target, band, LossConfig(m=10, k=3))
    with pytest.raises(ValueError):
        edgemask_loss(MaskPrediction.from_logits(logits), target, band, LossConfig(m=12, k=2))
    other = boundary_band(BinaryMask(np.zeros((10, 10), bool)), 2)
    with pytest.raises(ValueError):
        edgemask_loss(MaskPrediction.from_logits(logits), target, other, cfg)
    with pytest.raises(ValueError):
        vanilla_mask_loss(MaskPrediction(np.full((3, 3), 0.5)), BinaryMask(np.zeros((4, 4), bool)))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.integers(1, 3))
def test_lambda_one_reduction_property(seed, m, k):
    rng = np.random.default_rng(seed)
    logits, target, band = random_instance(rng, m, k)
    pred = MaskPrediction.from_logits(logits)
    got = edgemask_loss(pred, target, band, LossConfig(lam=1, m=m, k=k)).total
    want = vanilla_mask_loss(pred, target)
    assert abs(got - want) <= 1e-12 * max(abs(want), 1e-300)
    assert got >= 0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 50), st.floats(0.1, 50))
def test_loss_increases_with_lambda(seed, lam, step):
    rng = np.random.default_rng(seed)
    logits, target, band = random_instance(rng, 8, 1)
    pred = MaskPrediction.from_logits(logits)
    lo = edgemask_loss(pred, target, band, LossConfig(lam=lam, m=8, k=1))
    hi = edgemask_loss(pred, target, band, LossConfig(lam=lam + step, m=8, k=1))
    if lo.boundary_sum > 0:
        assert hi.total > lo.total
    else:
        assert hi.total == lo.total


def test_loss_is_permutation_invariant():
    rng = np.random.default_rng(4)
    logits, target, band = random_instance(rng, 9, 2)
    cfg = LossConfig(lam=30, m=9, k=2)
    base = edgemask_loss(MaskPrediction.from_logits(logits), target, band, cfg).total
    # permute pixels identically and re-sum by hand
    perm = rng.permutation(81)
    p = MaskPrediction.from_logits(logits).probs.ravel()[perm]
    y = target.data.ravel()[perm]
    b = band.boundary.ravel()[perm]
    h = -np.where(y, np.log(p), np.log1p(-p))
    assert (h[~b].sum() + 30 * h[b].sum()) / 81 == pytest.approx(base, rel=1e-12)


def test_gradient_ratio_is_lambda():
    target = np.zeros((6, 6), bool)
    target[:, :3] = True
    band = boundary_band(BinaryMask(target), 1)
    z = np.zeros((6, 6))
    g = edgemask_grad(z, BinaryMask(target), band, LossConfig(lam=40, m=6, k=1))
    # (0, 0) is interior-true, (0, 2) is boundary-true: same (p - y) = -0.5
    assert not band.boundary[0, 0] and band.boundary[0, 2]
    assert g[0, 2] / g[0, 0] == pytest.approx(40.0, rel=1e-14)


def test_saturated_correct_pixels_have_tiny_gradient():
    target = BinaryMask(np.triu(np.ones((8, 8), bool)))
    band = boundary_band(target, 2)
    z = np.where(target.data, 40.0, -40.0)
    g = edgemask_grad(z, target, band, LossConfig(lam=100, m=8, k=2))
    assert np.abs(g).max() <= 1e-7 * 100 / 64


@pytest.mark.parametrize("lam", [1.0, 100.0])
def test_gradient_matches_central_differences(lam):
    rng = np.random.default_rng(11)
    for _ in range(20):
        logits, target, band = random_instance(rng, 8, 2)
        cfg = LossConfig(lam=lam, m=8, k=2, clamp_eps=1e-12)
        f = lambda z: edgemask_loss(MaskPrediction.from_logits(z, cfg.clamp_eps), target, band, cfg).total
        assert rel_error(edgemask_grad(logits, target, band, cfg), central_difference(f, logits)) < 1e-4


def test_total_loss():
    assert total_loss(0.5, 0.2, 0.3) == pytest.approx(1.0)
    assert total_loss(0, 0, 0) == 0
    assert total_loss(0, 0, 2.75) == 2.75
    with pytest.raises(ValueError):
        total_loss(float("nan"), 0, 0)
    with pytest.raises(ValueError):
        total_loss(0, float("inf"), 0)
