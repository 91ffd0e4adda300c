"""Motion data model: skeletons, pose sequences and the start/gap/end split."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

ROOT = -1

# 17-joint Human3.6M subset, parents indexed into this list.
H36M_JOINTS = (
    "hip", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle",
    "spine", "thorax", "neck", "head", "l_shoulder", "l_elbow", "l_wrist",
    "r_shoulder", "r_elbow", "r_wrist",
)
H36M_PARENTS = (ROOT, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15)


class MotionFormatError(ValueError):
    """Raised for malformed ``.motion`` files."""


@dataclass(frozen=True)
class SkeletonSpec:
    joint_names: tuple
    parent_index: tuple
    dims_per_joint: int = 3

    def __post_init__(self):
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(self, "parent_index", tuple(int(p) for p in self.parent_index))
        n = len(self.joint_names)
        if n < 1 or len(self.parent_index) != n:
            raise ValueError("joint_names and parent_index must be nonempty and equally long")
        if self.dims_per_joint < 1:
            raise ValueError("dims_per_joint must be positive")
        roots = [j for j, p in enumerate(self.parent_index) if p == ROOT]
        if len(roots) != 1:
            raise ValueError(f"skeleton needs exactly one root, found {len(roots)}")
        for j in range(n):
            seen = set()
            k = j
            while self.parent_index[k] != ROOT:
                if k in seen or not 0 <= self.parent_index[k] < n:
                    raise ValueError(f"parent_index does not form a tree (joint {j})")
                seen.add(k)
                k = self.parent_index[k]

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    @property
    def d(self) -> int:
        return self.joint_count * self.dims_per_joint

    @property
    def root(self) -> int:
        return self.parent_index.index(ROOT)

    @property
    def bones(self) -> list:
        return [(p, j) for j, p in enumerate(self.parent_index) if p != ROOT]

    @classmethod
    def h36m17(cls) -> "SkeletonSpec":
        return cls(H36M_JOINTS, H36M_PARENTS, 3)

    @classmethod
    def chain(cls, joint_count: int, dims_per_joint: int = 3) -> "SkeletonSpec":
        """A simple kinematic chain, joint ``j`` parented to ``j - 1``."""
        return cls(
            tuple(f"j{j}" for j in range(joint_count)),
            (ROOT,) + tuple(range(joint_count - 1)),
            dims_per_joint,
        )

    @classmethod
    def for_dim(cls, d: int) -> "SkeletonSpec":
        """Best-guess skeleton for a bare pose dimension (files carry no skeleton)."""
        if d == 51:
            return cls.h36m17()
        if d % 3 == 0:
            return cls.chain(d // 3, 3)
        if d % 2 == 0:
            return cls.chain(d // 2, 2)
        return cls.chain(d, 1)


def _frozen(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MotionSequence:
    """``T`` frames of ``d``-dimensional poses, stored as a read-only (T, d) array."""

    frames: np.ndarray
    frame_rate_hz: float = 50.0

    def __post_init__(self):
        frames = _frozen(self.frames, 2)
        if frames.shape[0] < 1 or frames.shape[1] < 1:
            raise ValueError(f"motion needs at least one frame and one dim, got {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ValueError("motion contains non-finite values")
        if not self.frame_rate_hz > 0:
            raise ValueError("frame_rate_hz must be positive")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __eq__(self, other):
        if not isinstance(other, MotionSequence):
            return NotImplemented
        return self.frame_rate_hz == other.frame_rate_hz and np.array_equal(self.frames, other.frames)

    __hash__ = None

    @property
    def T(self) -> int:
        return self.frames.shape[0]

    @property
    def d(self) -> int:
        return self.frames.shape[1]

    def with_frames(self, frames) -> "MotionSequence":
        return MotionSequence(frames, self.frame_rate_hz)


@dataclass(frozen=True)
class InterpolationTask:
    """Condition ``(start, end)`` plus the optional ground-truth gap.

    ``t_s`` and ``t_e`` are 1-based: start holds frames ``1..t_s`` and end
    holds frames ``t_e..T`` of the source sequence.
    """

    start: MotionSequence
    end: MotionSequence
    gap_length: int
    ground_truth: Optional[MotionSequence] = None
    t_s: int = field(default=0)
    t_e: int = field(default=0)

    def __post_init__(self):
        if self.start.d != self.end.d:
            raise ValueError(f"start has d={self.start.d} but end has d={self.end.d}")
        if self.gap_length < 1:
            raise ValueError("gap_length must be at least 1")
        if self.ground_truth is not None:
            if len(self.ground_truth) != self.gap_length:
                raise ValueError(
                    f"ground truth has {len(self.ground_truth)} frames, gap_length is {self.gap_length}"
                )
            if self.ground_truth.d != self.start.d:
                raise ValueError("ground truth dimensionality differs from the condition")
        if self.t_s == 0 and self.t_e == 0:
            object.__setattr__(self, "t_s", len(self.start))
            object.__setattr__(self, "t_e", len(self.start) + self.gap_length + 1)
        if self.t_e - self.t_s - 1 != self.gap_length:
            raise ValueError("gap_length must equal t_e - t_s - 1")

    @property
    def d(self) -> int:
        return self.start.d

    @property
    def last_start_pose(self) -> np.ndarray:
        return self.start.frames[-1]

    @property
    def first_end_pose(self) -> np.ndarray:
        return self.end.frames[0]


def split_sequence(seq: MotionSequence, t_s: int, t_e: int) -> InterpolationTask:
    """Split ``seq`` into start ``1..t_s``, gap ``t_s+1..t_e-1`` and end ``t_e..T`` (1-based)."""
    T = len(seq)
    if not (1 <= t_s <= t_e <= T):
        raise IndexError(f"need 1 <= t_s < t_e <= T, got t_s={t_s}, t_e={t_e}, T={T}")
    if t_e - t_s < 2:
        raise ValueError(f"empty gap between t_s={t_s} and t_e={t_e}")
    f = seq.frames
    return InterpolationTask(
        start=seq.with_frames(f[:t_s]),
        end=seq.with_frames(f[t_e - 1:]),
        gap_length=t_e - t_s - 1,
        ground_truth=seq.with_frames(f[t_s:t_e - 1]),
        t_s=t_s,
        t_e=t_e,
    )


def _pose(p) -> np.ndarray:
    return np.asarray(p, dtype=np.float64).reshape(-1)


def pose_distance(a, b) -> float:
    a, b = _pose(a), _pose(b)
    if a.shape != b.shape:
        raise ValueError(f"pose dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.linalg.norm(a - b))


def flatten_motion(seq: Union[MotionSequence, np.ndarray]) -> np.ndarray:
    frames = seq.frames if isinstance(seq, MotionSequence) else np.asarray(seq, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise ValueError("cannot flatten an empty motion")
    return frames.reshape(-1).copy()


def unflatten_motion(vec, T: int, d: int, frame_rate_hz: float = 50.0) -> MotionSequence:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (T * d,):
        raise ValueError(f"vector of length {vec.size} cannot hold {T}x{d} frames")
    return MotionSequence(vec.reshape(T, d), frame_rate_hz)


def concat_motion(parts: Sequence[MotionSequence]) -> MotionSequence:
    return MotionSequence(np.concatenate([p.frames for p in parts]), parts[0].frame_rate_hz)


# .motion text format

def format_motion(seq: MotionSequence) -> str:
    lines = [f"{seq.T} {seq.d} {float(seq.frame_rate_hz)!r}"]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in seq.frames)
    return "\n".join(lines) + "\n"


def parse_motion(text: str, source: str = "<string>") -> MotionSequence:
    lines = text.splitlines()
    if not lines:
        raise MotionFormatError(f"{source}:1: empty file")
    header = lines[0].split()
    try:
        T, d, rate = int(header[0]), int(header[1]), float(header[2])
        if len(header) != 3:
            raise ValueError
    except (ValueError, IndexError):
        raise MotionFormatError(f"{source}:1: bad header {lines[0]!r}, expected 'T d frame_rate'") from None
    if T < 1 or d < 1 or not rate > 0:
        raise MotionFormatError(f"{source}:1: header values out of range")
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != T:
        raise MotionFormatError(f"{source}: header says {T} frames, found {len(body)}")
    frames = np.empty((T, d))
    for i, line in enumerate(body):
        fields = line.split()
        if len(fields) != d:
            raise MotionFormatError(f"{source}:{i + 2}: expected {d} values, found {len(fields)}")
        try:
            frames[i] = [float(v) for v in fields]
        except ValueError:
            raise MotionFormatError(f"{source}:{i + 2}: non-numeric value") from None
    if not np.all(np.isfinite(frames)):
        raise MotionFormatError(f"{source}: non-finite values")
    return MotionSequence(frames, rate)


def read_motion(path) -> MotionSequence:
    path = Path(path)
    return parse_motion(path.read_text(), str(path))


def write_motion(seq: MotionSequence, path) -> None:
    Path(path).write_text(format_motion(seq))
