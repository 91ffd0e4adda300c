"""Static stick-figure strips: one row per motion, one figure every ``stride`` frames."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .motion import MotionSequence, SkeletonSpec  # noqa: E402


def joint_positions(pose: np.ndarray, skeleton: SkeletonSpec) -> np.ndarray:
    """Absolute joint coordinates: non-root joints are stored relative to the root."""
    k = skeleton.dims_per_joint
    joints = np.asarray(pose, dtype=np.float64).reshape(skeleton.joint_count, k).copy()
    root = skeleton.root
    mask = np.arange(skeleton.joint_count) != root
    joints[mask] += joints[root]
    return joints


def _plane(joints: np.ndarray) -> np.ndarray:
    if joints.shape[1] == 1:
        return np.column_stack([np.zeros(len(joints)), joints[:, 0]])
    return joints[:, :2]


def render_strip(motions: Sequence[MotionSequence], path, stride: int = 10,
                 skeleton: Optional[SkeletonSpec] = None, labels: Optional[Sequence[str]] = None) -> int:
    """Draw every ``stride``-th frame of each motion as a row of stick figures.

    The output format follows the file suffix (``.svg`` by default); SVG
    output carries no timestamp so reruns are byte-identical. Returns the
    number of figures drawn.
    """
    if not motions:
        raise ValueError("nothing to render")
    if stride < 1:
        raise ValueError("stride must be positive")
    d = motions[0].d
    for i, m in enumerate(motions):
        if m.d != d:
            name = labels[i] if labels else f"motion {i}"
            raise ValueError(f"{name} has pose dimension {m.d}, expected {d}")
    skeleton = skeleton or SkeletonSpec.for_dim(d)
    if skeleton.d != d:
        raise ValueError(f"skeleton has d={skeleton.d}, motions have d={d}")

    rows = []
    for m in motions:
        rows.append([_plane(joint_positions(m.frames[t], skeleton)) for t in range(0, len(m), stride)])
    # each figure is centred on its own root, so the cell size is the largest extent
    spans = [fig - fig[skeleton.root] for row in rows for fig in row]
    ext = np.max([np.abs(s).max() for s in spans]) or 1.0
    cell = 2.4 * ext
    n_cols = max(len(r) for r in rows)

    fig, ax = plt.subplots(figsize=(max(2.0, 0.9 * n_cols), max(1.5, 1.2 * len(rows))))
    count = 0
    for r, row in enumerate(rows):
        y0 = -r * cell
        for c, joints in enumerate(row):
            pts = joints - joints[skeleton.root] + np.array([c * cell, y0])
            for p, j in skeleton.bones:
                ax.plot(pts[[p, j], 0], pts[[p, j], 1], color="k", linewidth=1.0)
            ax.plot(pts[:, 0], pts[:, 1], "o", color="tab:red", markersize=1.5)
            count += 1
        if labels:
            ax.text(-0.8 * cell, y0, labels[r], ha="right", va="center", fontsize=7)
    ax.set_aspect("equal")
    ax.axis("off")
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    metadata = {"Date": None} if fmt == "svg" else None
    with plt.rc_context({"svg.hashsalt": "motion-interp"}):
        fig.savefig(path, format=fmt, metadata=metadata, bbox_inches="tight")
    plt.close(fig)
    return count
