"""Training objective terms.

Each loss accepts motions as :class:`MotionSequence`, numpy arrays or torch
tensors. Tensor inputs may carry leading batch dimensions and get per-item
tensors back, so autograd flows through; anything else returns a float.

The composite objective is minimized, so the variational term enters as the
negative ELBO::

    total = (reconstruction + kl) - lambda * diversity + coherence
"""
from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from typing import Iterable

import torch

from .model import LatentSample, PosteriorParams, _as_tensor
from .motion import InterpolationTask

MIN_LATENT_DISTANCE = 1e-8
DEFAULT_CAP = 100.0
DEFAULT_LAMBDA = 5.0


def _any_tensor(*xs) -> bool:
    return any(isinstance(x, torch.Tensor) for x in xs)


def _out(value: torch.Tensor, as_tensor: bool):
    if as_tensor or value.dim() > 0 or value.requires_grad:
        return value
    return float(value)


def reconstruction_loss(pred, gt):
    """Mean squared error over frames and dims (unit-variance Gaussian likelihood, constants dropped)."""
    keep = _any_tensor(pred, gt)
    p, g = _as_tensor(pred), _as_tensor(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: prediction {tuple(p.shape)} vs ground truth {tuple(g.shape)}")
    return _out(((p - g) ** 2).mean(dim=(-2, -1)), keep)


def kl_divergence(post: PosteriorParams):
    """KL(N(mean, diag(exp(log_variance))) || N(0, I)), summed over latent dims."""
    mu, lv = post.mean, post.log_variance
    if not (torch.isfinite(mu).all() and torch.isfinite(lv).all()):
        raise ValueError("posterior parameters must be finite")
    kl = 0.5 * (mu ** 2 + torch.exp(lv) - 1.0 - lv).sum(dim=-1)
    # exp(lv) - 1 - lv >= 0 analytically; rounding can dip a hair below
    kl = torch.clamp(kl, min=0.0)
    return _out(kl, False)


def diversity_loss(out1, out2, z1, z2, cap: float = DEFAULT_CAP):
    """``min(||out1 - out2|| / ||z1 - z2||, cap)`` with both norms over flattened items."""
    keep = _any_tensor(out1, out2) or any(
        isinstance(z, LatentSample) and z.z.requires_grad for z in (z1, z2)
    )
    a, b = _as_tensor(out1), _as_tensor(out2)
    za = _as_tensor(z1.z if isinstance(z1, LatentSample) else z1)
    zb = _as_tensor(z2.z if isinstance(z2, LatentSample) else z2)
    if a.shape != b.shape:
        raise ValueError(f"output shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")
    if za.shape != zb.shape:
        raise ValueError("latent shapes differ")
    if cap <= 0:
        raise ValueError("cap must be positive")
    dz = torch.linalg.vector_norm(za - zb, dim=-1)
    if (dz <= MIN_LATENT_DISTANCE).any():
        raise ValueError("coincident latent samples; the two draws must differ")
    dx = torch.linalg.vector_norm((a - b).flatten(start_dim=a.dim() - 2), dim=-1)
    return _out(torch.clamp(dx / dz, max=cap), keep)


def boundary_coherence(last_start, first_end, pred):
    """Squared distances across both splice points; ``pred`` is ``(..., gap, d)``."""
    head = ((pred[..., 0, :] - last_start) ** 2).sum(dim=-1)
    tail = ((pred[..., -1, :] - first_end) ** 2).sum(dim=-1)
    return head + tail


def coherence_loss(task: InterpolationTask, pred):
    keep = _any_tensor(pred)
    p = _as_tensor(pred)
    if p.dim() != 2 or p.shape != (task.gap_length, task.d):
        raise ValueError(f"prediction shape {tuple(p.shape)} does not match gap ({task.gap_length}, {task.d})")
    value = boundary_coherence(_as_tensor(task.last_start_pose), _as_tensor(task.first_end_pose), p)
    return _out(value, keep)


def combine(recon, kl, diversity, coherence, lam):
    return (recon + kl) - lam * diversity + coherence


@dataclass(frozen=True)
class LossBreakdown:
    reconstruction: float
    kl: float
    diversity: float
    coherence: float
    total: float
    lam: float = DEFAULT_LAMBDA


def total_loss(recon, kl, diversity, coherence, lam: float = DEFAULT_LAMBDA) -> LossBreakdown:
    terms = [float(v) for v in (recon, kl, diversity, coherence, lam)]
    if not all(math.isfinite(v) for v in terms):
        raise ValueError(f"non-finite loss term in {terms}")
    if terms[4] < 0:
        raise ValueError("lambda must be nonnegative")
    return LossBreakdown(*terms[:4], combine(*terms), terms[4])


LOG_COLUMNS = ("step", "reconstruction", "kl", "diversity", "coherence", "total")


def write_loss_log(log: Iterable[LossBreakdown], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for step, b in enumerate(log, start=1):
            w.writerow([step] + [repr(v) for v in astuple(b)[:5]])


def read_loss_log(path, lam: float = DEFAULT_LAMBDA) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    names = [f.name for f in fields(LossBreakdown)][:5]
    return [LossBreakdown(*(float(r[n]) for n in names), lam) for r in rows]
