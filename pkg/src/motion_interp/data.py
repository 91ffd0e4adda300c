"""Corpus loading, synthetic motion generation, windowing and normalization."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .motion import MotionSequence, SkeletonSpec, read_motion

log = logging.getLogger(__name__)

TRAIN_SUBJECTS = ("S1", "S5", "S6", "S7", "S8")
TEST_SUBJECTS = ("S9", "S11")
SPLITS = {"train": TRAIN_SUBJECTS, "test": TEST_SUBJECTS}

STD_FLOOR = 1e-6
# slow root drift, Hz
DRIFT_FREQ_RANGE = (0.02, 0.1)


@dataclass(frozen=True)
class CorpusItem:
    subject: str
    action: str
    sequence: MotionSequence


@dataclass(frozen=True)
class Corpus:
    items: Tuple[CorpusItem, ...]
    split: str = "train"
    skeleton: Optional[SkeletonSpec] = None
    skipped: int = 0

    def __post_init__(self):
        items = tuple(sorted(self.items, key=lambda it: (it.subject, it.action)))
        object.__setattr__(self, "items", items)
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        dims = {it.sequence.d for it in items}
        if len(dims) > 1:
            raise ValueError(f"corpus mixes pose dimensions {sorted(dims)}")
        if self.skeleton is not None and dims and dims != {self.skeleton.d}:
            raise ValueError(f"skeleton has d={self.skeleton.d}, sequences have d={dims.pop()}")

    def __len__(self):
        return len(self.items)

    @property
    def subjects(self) -> set:
        return {it.subject for it in self.items}

    @property
    def d(self) -> int:
        if not self.items:
            raise ValueError("empty corpus has no pose dimension")
        return self.items[0].sequence.d


def load_corpus(root, split: str = "train", window: int = 125, subjects: Optional[Sequence[str]] = None) -> Corpus:
    """Load ``<root>/<subject>/<subject>_<action>.motion`` files for one split.

    Sequences shorter than ``window`` frames are dropped and counted.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"data directory not found: {root}")
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}")
    wanted = tuple(subjects) if subjects is not None else SPLITS[split]
    items: List[CorpusItem] = []
    skipped = 0
    for subject in wanted:
        subdir = root / subject
        if not subdir.is_dir():
            continue
        for path in sorted(subdir.glob(f"{subject}_*.motion")):
            seq = read_motion(path)
            if len(seq) < window:
                skipped += 1
                continue
            action = path.stem[len(subject) + 1:]
            items.append(CorpusItem(subject, action, seq))
    if skipped:
        log.info("skipped %d sequence(s) shorter than %d frames", skipped, window)
    if not items:
        log.warning("no usable sequences for split %r under %s", split, root)
    return Corpus(tuple(items), split, skipped=skipped)


def _rest_pose(spec: SkeletonSpec, rng: np.random.Generator) -> np.ndarray:
    k = spec.dims_per_joint
    pos = np.zeros((spec.joint_count, k))
    order = sorted(range(spec.joint_count), key=lambda j: _depth(spec, j))
    for j in order:
        p = spec.parent_index[j]
        if p >= 0:
            offset = rng.normal(0.0, 0.1, k)
            offset[min(1, k - 1)] += 0.2 * np.sign(rng.normal())
            pos[j] = pos[p] + offset
    # non-root joints are stored relative to the root
    return pos.reshape(-1)


def _depth(spec: SkeletonSpec, j: int) -> int:
    depth = 0
    while spec.parent_index[j] >= 0:
        j = spec.parent_index[j]
        depth += 1
    return depth


def generate_synthetic_corpus(
    spec: SkeletonSpec,
    n_sequences: int,
    T: int,
    seed: int,
    split: str = "train",
    amplitude: float = 0.1,
    freq_range: Tuple[float, float] = (0.25, 1.5),
    n_components: int = 2,
    frame_rate_hz: float = 50.0,
) -> Corpus:
    """Smooth sinusoidal motions on ``spec``, fully determined by ``seed``.

    Every dimension is a rest value plus ``n_components`` sinusoids whose
    amplitudes sum to at most ``amplitude`` and whose frequencies lie in
    ``freq_range`` (Hz). Root dimensions get one extra slow drift sinusoid of
    amplitude at most ``amplitude`` and frequency within ``DRIFT_FREQ_RANGE``.
    """
    if n_sequences < 1 or T < 3:
        raise ValueError(f"need n_sequences >= 1 and T >= 3, got {n_sequences}, {T}")
    if amplitude < 0 or n_components < 1:
        raise ValueError("amplitude must be >= 0 and n_components >= 1")
    lo, hi = freq_range
    if not 0 <= lo <= hi:
        raise ValueError("bad freq_range")
    rng = np.random.default_rng(seed)
    subjects = SPLITS[split]
    d = spec.d
    k = spec.dims_per_joint
    root_dims = np.arange(spec.root * k, spec.root * k + k)
    t = np.arange(T)[:, None] / frame_rate_hz
    items = []
    for i in range(n_sequences):
        rest = _rest_pose(spec, rng)
        amps = rng.uniform(0.0, amplitude / n_components, (n_components, d))
        freqs = rng.uniform(lo, hi, (n_components, d))
        phases = rng.uniform(0.0, 2 * np.pi, (n_components, d))
        frames = np.broadcast_to(rest, (T, d)).copy()
        for c in range(n_components):
            frames += amps[c] * np.sin(2 * np.pi * freqs[c] * t + phases[c])
        drift_amp = rng.uniform(0.0, amplitude, k)
        drift_freq = rng.uniform(*DRIFT_FREQ_RANGE, k)
        drift_phase = rng.uniform(0.0, 2 * np.pi, k)
        frames[:, root_dims] += drift_amp * np.sin(2 * np.pi * drift_freq * t + drift_phase)
        items.append(CorpusItem(subjects[i % len(subjects)], f"synth{i:03d}", MotionSequence(frames, frame_rate_hz)))
    return Corpus(tuple(items), split, spec)


def extract_windows(corpus: Corpus, window: int = 125, stride: int = 25):
    """Sliding windows over every sequence, as an ``(N, window, d)`` array plus keys.

    Keys are ``(subject, action, start_frame)`` with 0-based starts, in sorted order.
    """
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be positive")
    chunks, keys = [], []
    for it in corpus.items:
        frames = it.sequence.frames
        for s in range(0, len(frames) - window + 1, stride):
            chunks.append(frames[s:s + window])
            keys.append((it.subject, it.action, s))
    if not chunks:
        d = corpus.d if corpus.items else 0
        return np.empty((0, window, d)), keys
    return np.stack(chunks), keys


@dataclass(frozen=True)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        std = np.maximum(np.array(self.std, dtype=np.float64).reshape(-1), STD_FLOOR)
        if mean.shape != std.shape:
            raise ValueError("mean and std lengths differ")
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    def apply(self, x):
        if isinstance(x, MotionSequence):
            return x.with_frames(self.apply(x.frames))
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def invert(self, x):
        if isinstance(x, MotionSequence):
            return x.with_frames(self.invert(x.frames))
        return np.asarray(x, dtype=np.float64) * self.std + self.mean

    @classmethod
    def identity(cls, d: int) -> "Normalizer":
        return cls(np.zeros(d), np.ones(d))

    def save(self, path) -> None:
        rows = [" ".join(repr(float(v)) for v in vec) for vec in (self.mean, self.std)]
        Path(path).write_text("\n".join(rows) + "\n")

    @classmethod
    def load(cls, path) -> "Normalizer":
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
        if len(lines) != 2:
            raise ValueError(f"{path}: normalizer file needs exactly two lines")
        mean, std = ([float(v) for v in ln.split()] for ln in lines)
        if len(mean) != len(std):
            raise ValueError(f"{path}: mean and std lines differ in length")
        return cls(np.array(mean), np.array(std))


def fit_normalizer(data) -> Normalizer:
    """Per-dimension mean and population std over every frame of ``data``.

    ``data`` is a :class:`Corpus` or an array whose last axis is the pose dim.
    """
    if isinstance(data, Corpus):
        if not data.items:
            raise ValueError("cannot fit a normalizer on an empty corpus")
        frames = np.concatenate([it.sequence.frames for it in data.items])
    else:
        arr = np.asarray(data, dtype=np.float64)
        if arr.size == 0:
            raise ValueError("cannot fit a normalizer on empty data")
        frames = arr.reshape(-1, arr.shape[-1])
    return Normalizer(frames.mean(axis=0), frames.std(axis=0))
