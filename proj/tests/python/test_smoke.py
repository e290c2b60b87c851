import math

import numpy as np
import pytest

import aligncr


def test_collapse():
    assert aligncr.collapse([1, 1, 0, 1, 0]) == [1, 1]
    assert aligncr.collapse([0, 0]) == []


def test_greedy_decode_and_inverse_enumerate():
    logp = np.log(np.array([[0.1, 0.9], [0.8, 0.2]]))
    assert aligncr.greedy_decode(logp) == [1, 0]

    paths = aligncr.inverse_enumerate([1], 2, 2)
    assert sorted(tuple(p) for p in paths) == [(0, 1), (1, 0), (1, 1)]


def test_ctc_log_likelihood_worked_example():
    p = np.log(np.array([[0.4, 0.6], [0.4, 0.6]]))
    assert aligncr.ctc_log_likelihood(p, [1]) == pytest.approx(math.log(0.84), abs=1e-12)
    assert aligncr.ctc_log_likelihood(p, [1, 1]) == -math.inf


def test_ctc_loss_and_grad():
    rng = np.random.default_rng(5)
    logits = rng.normal(size=(4, 3))
    loss, grad, reachable = aligncr.ctc_loss_and_grad(logits, [1, 2])
    assert reachable
    assert grad.shape == logits.shape
    # finite-difference check of one coordinate
    h = 1e-6
    bumped = logits.copy()
    bumped[1, 2] += h
    lp, _, _ = aligncr.ctc_loss_and_grad(bumped, [1, 2])
    assert (lp - loss) / h == pytest.approx(grad[1, 2], abs=1e-4)


def test_cr_loss():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(5, 3))
    logp = x - np.log(np.exp(x).sum(axis=1, keepdims=True))
    assert aligncr.cr_loss(logp, logp) == 0.0
    y = rng.normal(size=(5, 3))
    logq = y - np.log(np.exp(y).sum(axis=1, keepdims=True))
    assert aligncr.cr_loss(logp, logq) > 0.0
    assert aligncr.cr_loss(logp, logq) == aligncr.cr_loss(logq, logp)


def test_edit_distance():
    r = aligncr.edit_distance([1, 2, 3], [1, 3])
    assert r.deletions == 1
    assert r.substitutions == 0
    assert r.rate() == pytest.approx(1 / 3)


def test_generate_and_decode_corpus(tmp_path):
    data = tmp_path / "corpus"
    aligncr.generate_corpus(
        vocab_size=3, feat_dim=4, num_utterances=5, noise_stddev=0.3, seed=2, out_dir=str(data)
    )
    assert (data / "manifest.tsv").exists()
    assert (data / "features.bin").exists()
