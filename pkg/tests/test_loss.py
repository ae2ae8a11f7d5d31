import numpy as np
import pytest
from scipy.special import digamma, gammaln

from surgact.model.loss import (
    InvalidAlpha,
    anneal_coefficient,
    evidential_loss,
    evidential_loss_batch,
)


def test_hand_example_three_class():
    # alpha=[2,1,1], target 0, lambda=0: err 0.375 + var 0.125 = 0.5
    loss, _ = evidential_loss([2.0, 1.0, 1.0], 0, epoch=0)
    assert abs(loss - 0.5) < 1e-12


def test_confident_correct_prediction_limit():
    alpha = np.ones(10)
    alpha[3] = 1e6
    loss, _ = evidential_loss(alpha, 3, epoch=0)
    assert loss < 1e-9


def test_invalid_alpha():
    with pytest.raises(InvalidAlpha):
        evidential_loss([0.5, 1.0, 1.0], 0, epoch=0)


def test_anneal_schedule():
    assert anneal_coefficient(0) == 0.0
    assert anneal_coefficient(5) == 0.5
    assert anneal_coefficient(10) == 1.0
    assert anneal_coefficient(25) == 1.0


def test_kl_term_against_independent_formula():
    # KL(Dir(a)||Dir(1)) recomputed from scratch on the label-stripped alpha
    rng = np.random.default_rng(0)
    alpha = 1.0 + rng.gamma(2.0, 2.0, size=(3, 10))
    targets = np.array([0, 4, 9])
    base, _ = evidential_loss_batch(alpha, targets, epoch=0)
    full, _ = evidential_loss_batch(alpha, targets, epoch=100)

    y = np.zeros_like(alpha)
    y[np.arange(3), targets] = 1.0
    at = y + (1.0 - y) * alpha
    s = at.sum(axis=1)
    kl = (gammaln(s) - gammaln(10.0) - gammaln(at).sum(axis=1)
          + ((at - 1.0) * (digamma(at) - digamma(s)[:, None])).sum(axis=1))
    assert abs((full - base) - kl.mean()) < 1e-10


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for epoch in (0, 3, 50):
        alpha = 1.0 + rng.gamma(2.0, 2.0, size=10)
        _, grad = evidential_loss(alpha, 4, epoch=epoch)
        h = 1e-5
        for k in range(10):
            ap, am = alpha.copy(), alpha.copy()
            ap[k] += h
            am[k] -= h
            lp, _ = evidential_loss(ap, 4, epoch=epoch)
            lm, _ = evidential_loss(am, 4, epoch=epoch)
            fd = (lp - lm) / (2 * h)
            assert abs(fd - grad[k]) / max(abs(fd), abs(grad[k]), 1e-8) < 1e-6


def test_batch_mean_matches_single_samples():
    rng = np.random.default_rng(2)
    alpha = 1.0 + rng.gamma(2.0, 2.0, size=(5, 10))
    targets = rng.integers(0, 10, size=5)
    batch_loss, batch_grad = evidential_loss_batch(alpha, targets, epoch=7)
    singles = [evidential_loss(alpha[i], int(targets[i]), epoch=7)
               for i in range(5)]
    assert abs(batch_loss - np.mean([s[0] for s in singles])) < 1e-12
    for i in range(5):
        assert np.abs(batch_grad[i] - singles[i][1] / 5).max() < 1e-12
