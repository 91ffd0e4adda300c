"""Input checks shared by the estimator and the CLI."""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.utils import check_array

from .motion import MotionSequence


def check_windows(X, window: Optional[int] = None, d: Optional[int] = None) -> np.ndarray:
    """Validate a stack of motion windows, returning a float64 ``(N, T, d)`` array."""
    if isinstance(X, MotionSequence):
        X = X.frames[None]
    arr = check_array(X, allow_nd=True, dtype=np.float64, ensure_all_finite=True, ensure_min_samples=1)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"expected motion windows of shape (N, T, d), got {arr.shape}")
    if window is not None and arr.shape[1] != window:
        raise ValueError(f"windows have {arr.shape[1]} frames, expected {window}")
    if d is not None and arr.shape[2] != d:
        raise ValueError(f"windows have pose dimension {arr.shape[2]}, expected {d}")
    return arr


def check_clip(X, d: Optional[int] = None, what: str = "clip") -> np.ndarray:
    """Validate one ``(T, d)`` clip."""
    frames = X.frames if isinstance(X, MotionSequence) else X
    arr = check_array(frames, dtype=np.float64, ensure_all_finite=True, ensure_min_samples=1)
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"{what} has pose dimension {arr.shape[1]}, expected {d}")
    return arr


def check_k(k, minimum: int = 1) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise TypeError(f"k must be an integer, got {type(k).__name__}")
    if k < minimum:
        why = " (APD compares sample pairs)" if minimum == 2 else ""
        raise ValueError(f"k must be >= {minimum}{why}, got {k}")
    return int(k)
