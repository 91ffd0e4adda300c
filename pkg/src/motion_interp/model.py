"""Conditional VAE over motion gaps: GRU condition/posterior encoders and a residual GRU decoder."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np
import torch
from torch import nn

from .motion import MotionSequence

DTYPE = torch.float64
LOGVAR_MIN, LOGVAR_MAX = -10.0, 10.0
PARAM_GROUPS = ("condition", "encoder", "decoder")
HEAD_INIT_SCALE = 0.01


@dataclass(frozen=True)
class ModelConfig:
    d: int
    hidden_size: int = 128
    latent_size: int = 32
    gap_length: int = 75
    condition_length: int = 25

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise ValueError(f"ModelConfig.{f.name} must be a positive integer, got {v!r}")

    @property
    def window(self) -> int:
        return 2 * self.condition_length + self.gap_length

    @property
    def t_s(self) -> int:
        return self.condition_length

    @property
    def t_e(self) -> int:
        return self.condition_length + self.gap_length + 1


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, MotionSequence):
        x = x.frames
    if isinstance(x, torch.Tensor):
        return x.to(DTYPE)
    return torch.from_numpy(np.array(x, dtype=np.float64))


@dataclass
class PosteriorParams:
    mean: torch.Tensor
    log_variance: torch.Tensor

    def __post_init__(self):
        self.mean = _as_tensor(self.mean)
        self.log_variance = torch.clamp(_as_tensor(self.log_variance), LOGVAR_MIN, LOGVAR_MAX)
        if self.mean.shape != self.log_variance.shape:
            raise ValueError("mean and log_variance shapes differ")
        if not (torch.isfinite(self.mean).all() and torch.isfinite(self.log_variance).all()):
            raise ValueError("posterior parameters must be finite")

    @property
    def std(self) -> torch.Tensor:
        return torch.exp(0.5 * self.log_variance)


@dataclass
class LatentSample:
    z: torch.Tensor
    origin: str = "prior"

    def __post_init__(self):
        self.z = _as_tensor(self.z)
        if self.origin not in ("prior", "posterior"):
            raise ValueError(f"origin must be 'prior' or 'posterior', got {self.origin!r}")
        if not torch.isfinite(self.z).all():
            raise ValueError("latent sample must be finite")


class ConditionEncoder(nn.Module):
    """Forward GRU over the start clip, backward GRU over the end clip."""

    def __init__(self, d, hidden_size):
        super().__init__()
        self.start_rnn = nn.GRU(d, hidden_size, batch_first=True, dtype=DTYPE)
        self.end_rnn = nn.GRU(d, hidden_size, batch_first=True, dtype=DTYPE)

    def forward(self, x_s, x_e):
        _, h_s = self.start_rnn(x_s)
        _, h_e = self.end_rnn(torch.flip(x_e, dims=(1,)))
        return torch.cat([h_s[0], h_e[0]], dim=-1)


class PosteriorEncoder(nn.Module):
    def __init__(self, d, hidden_size, latent_size):
        super().__init__()
        self.rnn = nn.GRU(d, hidden_size, batch_first=True, dtype=DTYPE)
        self.head = nn.Linear(3 * hidden_size, 2 * latent_size, dtype=DTYPE)

    def forward(self, x_t, cond):
        _, h = self.rnn(x_t)
        out = self.head(torch.cat([h[0], cond], dim=-1))
        return out.chunk(2, dim=-1)


class ResidualDecoder(nn.Module):
    """GRU started from ``tanh(A [z, cond])``; each step adds a predicted delta to the previous frame."""

    def __init__(self, d, hidden_size, latent_size):
        super().__init__()
        self.init = nn.Linear(latent_size + 2 * hidden_size, hidden_size, dtype=DTYPE)
        self.cell = nn.GRUCell(d, hidden_size, dtype=DTYPE)
        self.head = nn.Linear(hidden_size, d, dtype=DTYPE)

    def forward(self, z, cond, last_pose, gap_length):
        h = torch.tanh(self.init(torch.cat([z, cond], dim=-1)))
        prev = last_pose
        frames = []
        for _ in range(gap_length):
            h = self.cell(prev, h)
            prev = prev + self.head(h)
            frames.append(prev)
        return torch.stack(frames, dim=1)


class MotionCVAE(nn.Module):
    """Parameters and forward passes of the interpolation CVAE.

    Tensor methods take batched inputs: motions are ``(B, T, d)``, latents
    ``(B, latent_size)``. The module-level functions below accept single
    :class:`MotionSequence` objects as well.
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        super().__init__()
        self.config = config
        H, L, d = config.hidden_size, config.latent_size, config.d
        self.condition = ConditionEncoder(d, H)
        self.encoder = PosteriorEncoder(d, H, L)
        self.decoder = ResidualDecoder(d, H, L)
        self.reset_parameters(seed)

    @torch.no_grad()
    def reset_parameters(self, seed: int = 0):
        gen = torch.Generator().manual_seed(int(seed))
        for name, p in self.named_parameters():
            if name == "decoder.head.bias":
                p.zero_()
                continue
            fan_in = p.shape[-1] if p.dim() > 1 else self.config.hidden_size
            bound = 1.0 / math.sqrt(fan_in)
            if name == "decoder.head.weight":
                # near-zero deltas: the untrained decoder holds the last start pose
                bound *= HEAD_INIT_SCALE
            p.copy_(torch.rand(p.shape, generator=gen, dtype=DTYPE) * 2 * bound - bound)

    def parameter_groups(self) -> dict:
        return {g: dict(getattr(self, g).named_parameters()) for g in PARAM_GROUPS}

    def encode_condition(self, x_s, x_e):
        return self.condition(x_s, x_e)

    def posterior(self, x_t, cond) -> PosteriorParams:
        mean, logvar = self.encoder(x_t, cond)
        return PosteriorParams(mean, logvar)

    def decode(self, z, cond, last_pose, gap_length: Optional[int] = None):
        gap = self.config.gap_length if gap_length is None else gap_length
        return self.decoder(z, cond, last_pose, gap)


def _batched(x, d: int, what: str) -> tuple:
    t = _as_tensor(x)
    single = t.dim() == 2
    if single:
        t = t.unsqueeze(0)
    if t.dim() != 3 or t.shape[-1] != d or t.shape[1] < 1:
        raise ValueError(f"{what}: expected (T, {d}) or (B, T, {d}) motion, got {tuple(t.shape)}")
    return t, single


def encode_condition(model: MotionCVAE, x_s, x_e) -> torch.Tensor:
    d = model.config.d
    s, single = _batched(x_s, d, "start clip")
    e, _ = _batched(x_e, d, "end clip")
    if s.shape[0] != e.shape[0]:
        raise ValueError("start and end batch sizes differ")
    cond = model.encode_condition(s, e)
    return cond[0] if single else cond


def posterior(model: MotionCVAE, x_t, cond) -> PosteriorParams:
    t, single = _batched(x_t, model.config.d, "gap motion")
    if t.shape[1] != model.config.gap_length:
        raise ValueError(f"gap motion has {t.shape[1]} frames, model expects {model.config.gap_length}")
    cond = _as_tensor(cond)
    post = model.posterior(t, cond.unsqueeze(0) if single else cond)
    if single:
        return PosteriorParams(post.mean[0], post.log_variance[0])
    return post


def reparameterize(post: PosteriorParams, noise) -> LatentSample:
    noise = _as_tensor(noise)
    if noise.shape != post.mean.shape:
        raise ValueError(f"noise shape {tuple(noise.shape)} does not match latent {tuple(post.mean.shape)}")
    return LatentSample(post.mean + post.std * noise, "posterior")


def sample_prior(latent_size: int, rng, batch: Optional[int] = None) -> LatentSample:
    """Standard-normal draw; ``rng`` is a seed or a ``torch.Generator``."""
    gen = rng if isinstance(rng, torch.Generator) else torch.Generator().manual_seed(int(rng))
    shape = (latent_size,) if batch is None else (batch, latent_size)
    return LatentSample(torch.randn(shape, generator=gen, dtype=DTYPE), "prior")


def decode(model: MotionCVAE, z, cond, last_start_pose, gap_length: Optional[int] = None) -> torch.Tensor:
    cfg = model.config
    zt = _as_tensor(z.z if isinstance(z, LatentSample) else z)
    cond = _as_tensor(cond)
    pose = _as_tensor(last_start_pose)
    single = zt.dim() == 1
    if single:
        zt, cond, pose = zt.unsqueeze(0), cond.unsqueeze(0), pose.unsqueeze(0)
    if zt.shape[-1] != cfg.latent_size:
        raise ValueError(f"latent has size {zt.shape[-1]}, model expects {cfg.latent_size}")
    if cond.shape[-1] != 2 * cfg.hidden_size:
        raise ValueError(f"condition embedding has size {cond.shape[-1]}, expected {2 * cfg.hidden_size}")
    if pose.shape[-1] != cfg.d:
        raise ValueError(f"pose has d={pose.shape[-1]}, model expects {cfg.d}")
    out = model.decode(zt, cond, pose, gap_length)
    return out[0] if single else out
