import numpy as np
import pytest

from motion_interp.motion import MotionSequence, SkeletonSpec
from motion_interp.render import joint_positions, render_strip


def test_joint_positions_add_root_offset():
    sk = SkeletonSpec.chain(3)
    pose = np.array([1.0, 2, 3, 0, 1, 0, 0, 2, 0])
    np.testing.assert_array_equal(joint_positions(pose, sk), [[1, 2, 3], [1, 3, 3], [1, 4, 3]])


def test_figure_count(tmp_path):
    seqs = [MotionSequence(np.zeros((25, 51))), MotionSequence(np.zeros((9, 51)))]
    # frames 0,10,20 and 0
    assert render_strip(seqs, tmp_path / "s.svg", stride=10) == 4


def test_png(tmp_path):
    render_strip([MotionSequence(np.zeros((3, 6)))], tmp_path / "s.png", stride=1)
    assert (tmp_path / "s.png").read_bytes()[:4] == b"\x89PNG"


def test_errors(tmp_path):
    with pytest.raises(ValueError):
        render_strip([], tmp_path / "s.svg")
    with pytest.raises(ValueError, match="b has pose dimension"):
        render_strip([MotionSequence(np.zeros((2, 6))), MotionSequence(np.zeros((2, 9)))], tmp_path / "s.svg",
                     labels=["a", "b"])
    with pytest.raises(ValueError):
        render_strip([MotionSequence(np.zeros((2, 6)))], tmp_path / "s.svg", stride=0)
