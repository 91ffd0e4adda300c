import numpy as np
import pytest
import torch

from motion_interp.checkpoint import (
    CheckpointVersionError,
    CorruptCheckpointError,
    ShapeMismatchError,
    checkpoint_bytes,
    load_checkpoint,
    parse_checkpoint,
    save_checkpoint,
)
from motion_interp.data import Normalizer
from motion_interp.model import ModelConfig, MotionCVAE

CFG = ModelConfig(d=6, hidden_size=8, latent_size=3, gap_length=5, condition_length=3)


@pytest.fixture
def model():
    return MotionCVAE(CFG, seed=2)


def test_round_trip_is_exact(model, tmp_path):
    norm = Normalizer(np.arange(6.0) / 7, np.linspace(0.1, 3.0, 6))
    save_checkpoint(model, tmp_path / "m.ckpt", norm)
    back, cfg, back_norm = load_checkpoint(tmp_path / "m.ckpt")
    assert cfg == CFG
    for (name, p), (_, q) in zip(model.state_dict().items(), back.state_dict().items()):
        assert torch.equal(p, q), name
    np.testing.assert_array_equal(back_norm.mean, norm.mean)
    np.testing.assert_array_equal(back_norm.std, norm.std)
    assert checkpoint_bytes(back, back_norm) == (tmp_path / "m.ckpt").read_bytes()


def test_without_normalizer(model):
    assert parse_checkpoint(checkpoint_bytes(model)).normalizer is None


def test_header_starts_with_version(model):
    assert checkpoint_bytes(model).startswith(b"MICVAE1\nd=6\n")


@pytest.mark.parametrize("cut", [10, 200, -8, -1])
def test_truncated(model, cut):
    buf = checkpoint_bytes(model)
    with pytest.raises(CorruptCheckpointError):
        parse_checkpoint(buf[:cut])


def test_bad_magic(model):
    with pytest.raises(CorruptCheckpointError, match="magic"):
        parse_checkpoint(b"PK" + checkpoint_bytes(model)[2:])


def test_unknown_version(model):
    buf = checkpoint_bytes(model).replace(b"MICVAE1", b"MICVAE2", 1)
    with pytest.raises(CheckpointVersionError, match="'2'"):
        parse_checkpoint(buf)


def test_wrong_d_names_a_tensor(model):
    buf = checkpoint_bytes(model).replace(b"\nd=6\n", b"\nd=7\n", 1)
    with pytest.raises(ShapeMismatchError, match="tensor '"):
        parse_checkpoint(buf)


def test_normalizer_d_mismatch(model):
    with pytest.raises(ValueError):
        checkpoint_bytes(model, Normalizer.identity(5))
