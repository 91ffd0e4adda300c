"""Sampling K interpolations per task and scoring them with ADE / APD."""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch
from scipy.spatial.distance import pdist

from .data import Corpus, Normalizer, extract_windows
from .model import DTYPE, MotionCVAE
from .motion import InterpolationTask, MotionSequence, pose_distance, split_sequence


@dataclass(frozen=True)
class SampleSet:
    task: InterpolationTask
    samples: tuple
    seeds: tuple

    @property
    def k(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class EvaluationReport:
    ade: float
    apd: float
    mean_boundary_gap: float
    n_tasks: int
    k: int


@dataclass(frozen=True)
class TaskScore:
    index: int
    subject: str
    action: str
    start: int
    ade: float
    apd: float
    boundary_gap: float


def derive_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence([int(e) for e in entropy]).generate_state(1, np.uint64)[0] >> 1)


def _frames(x) -> np.ndarray:
    return x.frames if isinstance(x, MotionSequence) else np.asarray(x, dtype=np.float64)


@torch.no_grad()
def interpolate(model: MotionCVAE, task: InterpolationTask, k: int = 5, seed: int = 0,
                normalizer: Optional[Normalizer] = None) -> SampleSet:
    """Decode ``k`` independent prior draws under the task's condition.

    Draw ``i`` uses the seed ``derive_seed(seed, i)``. Samples come back in
    the task's (denormalized) units.
    """
    cfg = model.config
    if k < 1:
        raise ValueError("k must be at least 1")
    if task.d != cfg.d:
        raise ValueError(f"task has d={task.d} but the model was built for d={cfg.d}")
    norm = normalizer or Normalizer.identity(cfg.d)
    if norm.d != cfg.d:
        raise ValueError(f"normalizer has d={norm.d}, model has d={cfg.d}")
    x_s = torch.as_tensor(norm.apply(task.start.frames))[None]
    x_e = torch.as_tensor(norm.apply(task.end.frames))[None]
    cond = model.encode_condition(x_s, x_e)
    seeds = tuple(derive_seed(seed, i) for i in range(k))
    z = torch.stack([
        torch.randn(cfg.latent_size, generator=torch.Generator().manual_seed(s), dtype=DTYPE) for s in seeds
    ])
    out = model.decode(z, cond.expand(k, -1), x_s[:, -1].expand(k, -1), task.gap_length)
    rate = task.start.frame_rate_hz
    samples = tuple(MotionSequence(norm.invert(o.numpy()), rate) for o in out)
    return SampleSet(task, samples, seeds)


def ade(gt, samples: Sequence) -> float:
    """Best-of-K mean per-frame Euclidean error."""
    g = _frames(gt)
    if len(samples) == 0:
        raise ValueError("ade needs at least one sample")
    best = np.inf
    for s in samples:
        f = _frames(s)
        if f.shape != g.shape:
            raise ValueError(f"sample shape {f.shape} differs from ground truth {g.shape}")
        best = min(best, float(np.linalg.norm(f - g, axis=-1).mean()))
    return best


def apd(samples: Sequence) -> float:
    """Mean Euclidean distance over all ordered pairs of distinct samples (flattened)."""
    if len(samples) < 2:
        raise ValueError(f"apd needs K >= 2 samples, got {len(samples)}")
    frames = [_frames(s) for s in samples]
    if len({f.shape for f in frames}) != 1:
        raise ValueError("all samples must share one shape")
    flat = np.stack([f.reshape(-1) for f in frames])
    # unordered pairs counted once; the ordered-pair mean is identical
    return float(pdist(flat).mean())


def boundary_gap(task: InterpolationTask, sample) -> float:
    f = _frames(sample)
    if f.shape != (task.gap_length, task.d):
        raise ValueError(f"sample shape {f.shape} does not match gap ({task.gap_length}, {task.d})")
    return pose_distance(task.last_start_pose, f[0]) + pose_distance(f[-1], task.first_end_pose)


def evaluate_tasks(model: MotionCVAE, tasks: Sequence[InterpolationTask], k: int = 5, seed: int = 0,
                   normalizer: Optional[Normalizer] = None, labels: Optional[Sequence[tuple]] = None):
    """Score every task; task ``i`` samples with seed ``derive_seed(seed, i)``."""
    if not tasks:
        raise ValueError("no test tasks to evaluate")
    if k < 2:
        raise ValueError("evaluation needs k >= 2 because APD compares sample pairs")
    scores: List[TaskScore] = []
    for i, task in enumerate(tasks):
        if task.ground_truth is None:
            raise ValueError(f"task {i} has no ground truth; ADE cannot be computed")
        ss = interpolate(model, task, k, derive_seed(seed, i), normalizer)
        subject, action, start = labels[i] if labels is not None else ("", "", 0)
        scores.append(TaskScore(
            i, subject, action, start,
            ade(task.ground_truth, ss.samples),
            apd(ss.samples),
            float(np.mean([boundary_gap(task, s) for s in ss.samples])),
        ))
    report = EvaluationReport(
        float(np.mean([s.ade for s in scores])),
        float(np.mean([s.apd for s in scores])),
        float(np.mean([s.boundary_gap for s in scores])),
        len(scores),
        k,
    )
    return report, scores


def corpus_tasks(corpus: Corpus, window: int, t_s: int, t_e: int):
    """Non-overlapping windows split into tasks, with ``(subject, action, start)`` labels."""
    arr, keys = extract_windows(corpus, window, window)
    rate = corpus.items[0].sequence.frame_rate_hz if corpus.items else 50.0
    return [split_sequence(MotionSequence(w, rate), t_s, t_e) for w in arr], keys


def evaluate(model: MotionCVAE, test_corpus: Corpus, k: int = 5, seed: int = 0,
             normalizer: Optional[Normalizer] = None, t_s: Optional[int] = None, t_e: Optional[int] = None):
    cfg = model.config
    t_s = cfg.t_s if t_s is None else t_s
    t_e = cfg.t_e if t_e is None else t_e
    tasks, keys = corpus_tasks(test_corpus, cfg.window, t_s, t_e)
    if not tasks:
        raise ValueError(f"test corpus yields no {cfg.window}-frame window")
    return evaluate_tasks(model, tasks, k, seed, normalizer, keys)


def write_report(report: EvaluationReport, path) -> None:
    """One line: ``ade,apd,mean_boundary_gap,n_tasks,k``."""
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerow(
            [repr(report.ade), repr(report.apd), repr(report.mean_boundary_gap), report.n_tasks, report.k]
        )


def read_report(path) -> EvaluationReport:
    with open(path, newline="") as fh:
        row = next(csv.reader(fh))
    return EvaluationReport(float(row[0]), float(row[1]), float(row[2]), int(row[3]), int(row[4]))


def write_task_scores(scores: Sequence[TaskScore], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "subject", "action", "start", "ade", "apd", "boundary_gap"])
        for s in scores:
            row = list(astuple(s))
            w.writerow(row[:4] + [repr(v) for v in row[4:]])
