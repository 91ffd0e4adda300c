import numpy as np
import pytest
import torch

from motion_interp import training
from motion_interp.checkpoint import checkpoint_bytes, load_checkpoint
from motion_interp.data import generate_synthetic_corpus
from motion_interp.model import MotionCVAE
from motion_interp.motion import SkeletonSpec
from motion_interp.training import (
    NonFiniteLossError,
    TrainConfig,
    parse_config_text,
    train,
)


def test_adam_step_matches_hand_formula():
    a = torch.tensor([1.0, 3.0, 0.5], dtype=torch.float64)
    x0 = torch.tensor([0.7, -1.2, 2.0], dtype=torch.float64)
    x = x0.clone().requires_grad_(True)
    lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8
    opt = torch.optim.Adam([x], lr=lr, betas=(b1, b2), eps=eps)
    expected = x0.numpy().copy()
    m = np.zeros(3)
    v = np.zeros(3)
    for t in (1, 2):
        opt.zero_grad()
        (0.5 * (a * x ** 2).sum()).backward()
        g = a.numpy() * expected
        opt.step()
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        expected = expected - lr * m_hat / (np.sqrt(v_hat) + eps)
        np.testing.assert_allclose(x.detach().numpy(), expected, rtol=0, atol=1e-12)


def test_zero_learning_rate_leaves_parameters(tiny_corpus, tiny_config):
    res = train(tiny_corpus, tiny_config, TrainConfig(epochs=3, learning_rate=0.0, seed=4))
    fresh = MotionCVAE(tiny_config, seed=4)
    for (name, p), (_, q) in zip(res.model.named_parameters(), fresh.named_parameters()):
        assert torch.equal(p, q), name
    assert len(res.log) == 3 * 2  # 18 windows in batches of 16


def test_same_seed_same_checkpoint(tiny_corpus, tiny_config, tmp_path):
    tc = TrainConfig(epochs=4, seed=9, checkpoint_every=2)
    a = train(tiny_corpus, tiny_config, tc, checkpoint_path=tmp_path / "a.ckpt")
    b = train(tiny_corpus, tiny_config, tc, checkpoint_path=tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    assert a.log == b.log
    c = train(tiny_corpus, tiny_config, TrainConfig(epochs=4, seed=10))
    assert checkpoint_bytes(c.model, c.normalizer) != (tmp_path / "a.ckpt").read_bytes()


def test_checkpoint_written_and_loadable(tiny_corpus, tiny_config, tmp_path):
    path = tmp_path / "m.ckpt"
    res = train(tiny_corpus, tiny_config, TrainConfig(epochs=2, seed=0), checkpoint_path=path)
    model, cfg, norm = load_checkpoint(path)
    assert cfg == tiny_config
    np.testing.assert_array_equal(norm.mean, res.normalizer.mean)
    for (_, p), (_, q) in zip(model.named_parameters(), res.model.named_parameters()):
        assert torch.equal(p, q)


def test_log_terms_add_up(tiny_corpus, tiny_config):
    res = train(tiny_corpus, tiny_config, TrainConfig(epochs=2, seed=1, lambda_=5.0))
    for b in res.log:
        assert b.total == (b.reconstruction + b.kl) - 5.0 * b.diversity + b.coherence
        assert b.kl >= 0 and b.diversity >= 0 and b.coherence >= 0


def test_without_coherence_logs_zero(tiny_corpus, tiny_config):
    res = train(tiny_corpus, tiny_config, TrainConfig(epochs=1, seed=1, use_coherence=False))
    assert all(b.coherence == 0.0 for b in res.log)


def test_reconstruction_halves_without_diversity():
    # measured at seed 0: epoch-1 mean 0.177, epoch-200 mean 0.0059
    spec = SkeletonSpec.chain(2)
    corpus = generate_synthetic_corpus(spec, 4, 45, seed=3)
    from motion_interp.model import ModelConfig

    cfg = ModelConfig(d=6, hidden_size=16, latent_size=4, gap_length=10, condition_length=5)
    res = train(corpus, cfg, TrainConfig(epochs=200, lambda_=0.0, seed=0, batch_size=16, stride=5))
    steps_per_epoch = len(res.log) // 200
    first = np.mean([b.reconstruction for b in res.log[:steps_per_epoch]])
    last = np.mean([b.reconstruction for b in res.log[-steps_per_epoch:]])
    assert last <= 0.5 * first
    # smoothed loss trends down: moving average (window 50) at every 50th step is non-increasing
    totals = np.array([b.total for b in res.log])
    ma = np.convolve(totals, np.ones(50) / 50, mode="valid")[::50]
    assert np.all(np.diff(ma) <= 0)


def test_non_finite_loss_aborts(tiny_corpus, tiny_config, monkeypatch):
    real = training.batch_objective

    def poisoned(*args, **kwargs):
        total, terms = real(*args, **kwargs)
        return total * float("nan"), terms

    monkeypatch.setattr(training, "batch_objective", poisoned)
    with pytest.raises(NonFiniteLossError, match="step 1"):
        train(tiny_corpus, tiny_config, TrainConfig(epochs=1))


def test_non_finite_gradient_aborts(tiny_corpus, tiny_config, monkeypatch):
    real = training.batch_objective

    def poisoned(model, *args, **kwargs):
        total, terms = real(model, *args, **kwargs)
        # sqrt at 0: finite value, infinite gradient
        s = model.decoder.head.bias.sum()
        return total + torch.sqrt(s - s.detach()), terms

    monkeypatch.setattr(training, "batch_objective", poisoned)
    with pytest.raises(NonFiniteLossError, match="gradient"):
        train(tiny_corpus, tiny_config, TrainConfig(epochs=1))


def test_empty_windows(tiny_config):
    corpus = generate_synthetic_corpus(SkeletonSpec.chain(2), 2, 10, seed=0)
    with pytest.raises(ValueError, match="no training window"):
        train(corpus, tiny_config, TrainConfig(epochs=1))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(lambda_=-1)
    assert TrainConfig().lambda_ == 5.0 and TrainConfig().learning_rate == 1e-3 and TrainConfig().epochs == 500


class TestConfigFile:
    def test_parse(self):
        text = "# pilot\nepochs = 20\nlambda = 0\nhidden_size = 64\nuse_coherence = false\nlearning_rate=2e-3\n"
        model_kw, train_kw = parse_config_text(text)
        assert model_kw == {"hidden_size": 64}
        assert train_kw == {"epochs": 20, "lambda_": 0.0, "use_coherence": False, "learning_rate": 2e-3}
        TrainConfig(**train_kw)

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown key 'momentum'"):
            parse_config_text("momentum = 0.9\n", "c.cfg")

    def test_malformed_line(self):
        with pytest.raises(ValueError, match="c.cfg:2"):
            parse_config_text("epochs = 3\nepochs 4\n", "c.cfg")

    def test_bad_value(self):
        with pytest.raises(ValueError):
            parse_config_text("epochs = many\n")
