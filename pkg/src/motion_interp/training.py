"""ADAM training loop over windowed interpolation tasks."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import List, NamedTuple, Optional, Union

import numpy as np
import torch

from .checkpoint import save_checkpoint
from .data import Corpus, Normalizer, extract_windows, fit_normalizer
from .losses import (
    DEFAULT_CAP,
    DEFAULT_LAMBDA,
    LossBreakdown,
    boundary_coherence,
    combine,
    diversity_loss,
    kl_divergence,
    reconstruction_loss,
)
from .model import DTYPE, ModelConfig, MotionCVAE

log = logging.getLogger(__name__)


class NonFiniteLossError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 1e-3
    lambda_: float = DEFAULT_LAMBDA
    batch_size: int = 16
    seed: int = 0
    cap: float = DEFAULT_CAP
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float = 5.0
    use_coherence: bool = True
    checkpoint_every: int = 50
    stride: int = 25

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.checkpoint_every < 1 or self.stride < 1:
            raise ValueError("epochs, batch_size, checkpoint_every and stride must be positive")
        if self.learning_rate < 0 or self.lambda_ < 0:
            raise ValueError("learning_rate and lambda must be nonnegative")
        if self.cap <= 0 or self.adam_eps <= 0 or self.clip_norm <= 0:
            raise ValueError("cap, adam_eps and clip_norm must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("adam betas must lie in [0, 1)")


class TrainResult(NamedTuple):
    model: MotionCVAE
    log: List[LossBreakdown]
    normalizer: Normalizer


def batch_objective(model: MotionCVAE, windows: torch.Tensor, noise, z1, z2,
                    lam: float = DEFAULT_LAMBDA, cap: float = DEFAULT_CAP, use_coherence: bool = True):
    """Composite loss for a batch of ``(B, window, d)`` normalized windows.

    ``noise`` drives the reparameterized posterior draw; ``z1`` and ``z2`` are
    the prior latents decoded for the diversity term. Returns the scalar total
    (differentiable) and the batch-mean terms.
    """
    cfg = model.config
    c, g = cfg.condition_length, cfg.gap_length
    B = windows.shape[0]
    x_s, x_t, x_e = windows[:, :c], windows[:, c:c + g], windows[:, c + g:]
    cond = model.encode_condition(x_s, x_e)
    post = model.posterior(x_t, cond)
    z = post.mean + post.std * noise
    # one decoder pass for the reconstruction and both prior draws
    out = model.decode(torch.cat([z, z1, z2]), cond.repeat(3, 1), x_s[:, -1].repeat(3, 1), g)
    rec, o1, o2 = out[:B], out[B:2 * B], out[2 * B:]
    recon = reconstruction_loss(rec, x_t).mean()
    kl = kl_divergence(post).mean()
    div = diversity_loss(o1, o2, z1, z2, cap).mean()
    if use_coherence:
        coh = boundary_coherence(x_s[:, -1].repeat(3, 1), x_e[:, 0].repeat(3, 1), out).mean()
    else:
        coh = torch.zeros((), dtype=DTYPE)
    total = combine(recon, kl, div, coh, lam)
    return total, (recon, kl, div, coh)


def _windows(data, cfg: ModelConfig, stride: int) -> np.ndarray:
    if isinstance(data, Corpus):
        arr, _ = extract_windows(data, cfg.window, stride)
    else:
        arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1] != cfg.window or arr.shape[2] != cfg.d:
        raise ValueError(f"training windows must be (N, {cfg.window}, {cfg.d}), got {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"no training window of {cfg.window} frames in the corpus")
    return arr


def _seeds(seed: int):
    shuffle_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(shuffle_ss), int(noise_ss.generate_state(1, np.uint64)[0] >> 1)


def train(data: Union[Corpus, np.ndarray], model_config: ModelConfig, train_config: TrainConfig,
          normalizer: Optional[Normalizer] = None, checkpoint_path=None) -> TrainResult:
    """Fit a fresh :class:`MotionCVAE` on ``data`` (a corpus or raw ``(N, window, d)`` windows).

    Everything random (parameter init, per-epoch shuffles, posterior noise,
    prior draws) derives from ``train_config.seed``.
    """
    cfg, tc = model_config, train_config
    raw = _windows(data, cfg, tc.stride)
    if normalizer is None:
        normalizer = fit_normalizer(data if isinstance(data, Corpus) else raw)
    windows = torch.as_tensor(normalizer.apply(raw))
    n = windows.shape[0]

    model = MotionCVAE(cfg, seed=tc.seed)
    opt = torch.optim.Adam(model.parameters(), lr=tc.learning_rate,
                           betas=(tc.adam_beta1, tc.adam_beta2), eps=tc.adam_eps)
    shuffle_rng, noise_seed = _seeds(tc.seed)
    gen = torch.Generator().manual_seed(noise_seed)
    L = cfg.latent_size
    history: List[LossBreakdown] = []
    step = 0
    for epoch in range(1, tc.epochs + 1):
        order = shuffle_rng.permutation(n)
        for lo in range(0, n, tc.batch_size):
            step += 1
            batch = windows[order[lo:lo + tc.batch_size]]
            B = batch.shape[0]
            noise = torch.randn((B, L), generator=gen, dtype=DTYPE)
            z1 = torch.randn((B, L), generator=gen, dtype=DTYPE)
            z2 = torch.randn((B, L), generator=gen, dtype=DTYPE)
            total, terms = batch_objective(model, batch, noise, z1, z2, tc.lambda_, tc.cap, tc.use_coherence)
            values = [float(t.detach()) for t in terms]
            if not math.isfinite(float(total.detach())):
                raise NonFiniteLossError(
                    f"non-finite loss at epoch {epoch}, step {step}: "
                    f"reconstruction={values[0]} kl={values[1]} diversity={values[2]} coherence={values[3]}"
                )
            opt.zero_grad(set_to_none=False)
            total.backward()
            for name, p in model.named_parameters():
                if not torch.isfinite(p.grad).all():
                    raise NonFiniteLossError(f"non-finite gradient for {name} at epoch {epoch}, step {step}")
            torch.nn.utils.clip_grad_norm_(model.parameters(), tc.clip_norm)
            opt.step()
            history.append(LossBreakdown(*values, combine(*values, tc.lambda_), tc.lambda_))
        if epoch % 10 == 0 or epoch == tc.epochs:
            log.info("epoch %d/%d  last total %.5g", epoch, tc.epochs, history[-1].total)
        if checkpoint_path is not None and (epoch % tc.checkpoint_every == 0 or epoch == tc.epochs):
            save_checkpoint(model, checkpoint_path, normalizer)
    model.eval()
    return TrainResult(model, history, normalizer)


# key = value config files

_FIELD_ALIASES = {"lambda": "lambda_"}


def _coerce(value: str, default):
    if isinstance(default, bool):
        low = value.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {value!r}")
    if isinstance(default, int):
        return int(value)
    return float(value)


def parse_config_text(text: str, source: str = "<config>"):
    """Parse ``key = value`` lines into ``(model_overrides, TrainConfig overrides)`` dicts.

    Keys are field names of :class:`ModelConfig` or :class:`TrainConfig`
    (``lambda`` spells ``lambda_``). Blank lines and ``#`` comments are ignored.
    """
    model_defaults = {"d": 51, "hidden_size": 128, "latent_size": 32, "gap_length": 75, "condition_length": 25}
    train_defaults = {f.name: f.default for f in fields(TrainConfig)}
    model_kw, train_kw = {}, {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or not key or not value:
            raise ValueError(f"{source}:{i}: expected 'key = value', got {raw!r}")
        key = _FIELD_ALIASES.get(key, key)
        if key in model_defaults:
            target, default = model_kw, model_defaults[key]
        elif key in train_defaults:
            target, default = train_kw, train_defaults[key]
        else:
            raise ValueError(f"{source}:{i}: unknown key {key!r}")
        try:
            target[key] = _coerce(value, default)
        except ValueError as exc:
            raise ValueError(f"{source}:{i}: {exc}") from None
    return model_kw, train_kw


def read_config(path):
    path = Path(path)
    return parse_config_text(path.read_text(), str(path))
