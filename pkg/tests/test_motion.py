import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motion_interp.motion import (
    InterpolationTask,
    MotionFormatError,
    MotionSequence,
    SkeletonSpec,
    concat_motion,
    flatten_motion,
    format_motion,
    parse_motion,
    pose_distance,
    read_motion,
    split_sequence,
    unflatten_motion,
    write_motion,
)


def _seq(T, d, seed=0):
    return MotionSequence(np.random.default_rng(seed).normal(size=(T, d)))


class TestSkeleton:
    def test_h36m(self):
        sk = SkeletonSpec.h36m17()
        assert sk.joint_count == 17
        assert sk.d == 51
        assert sk.root == 0
        assert len(sk.bones) == 16

    def test_single_joint_is_legal(self):
        sk = SkeletonSpec.chain(1)
        assert sk.d == 3 and sk.bones == []

    @pytest.mark.parametrize("parents", [(-1, -1), (1, 0), (-1, 5), (-1, 2, 1)])
    def test_rejects_non_trees(self, parents):
        with pytest.raises(ValueError):
            SkeletonSpec(tuple(f"j{i}" for i in range(len(parents))), parents)


class TestSplit:
    def test_standard_window(self):
        task = split_sequence(_seq(125, 6), 25, 101)
        assert len(task.start) == 25
        assert task.gap_length == 75 and len(task.ground_truth) == 75
        assert len(task.end) == 25

    def test_smallest_split(self):
        task = split_sequence(_seq(3, 2), 1, 3)
        assert (len(task.start), task.gap_length, len(task.end)) == (1, 1, 1)

    def test_empty_gap_rejected(self):
        with pytest.raises(ValueError):
            split_sequence(_seq(10, 2), 5, 5)
        with pytest.raises(ValueError):
            split_sequence(_seq(10, 2), 5, 6)

    @pytest.mark.parametrize("t_s,t_e", [(0, 5), (3, 11), (6, 4)])
    def test_out_of_range(self, t_s, t_e):
        with pytest.raises(IndexError):
            split_sequence(_seq(10, 2), t_s, t_e)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 30), st.data())
    def test_round_trip(self, T, data):
        t_s = data.draw(st.integers(1, T - 2))
        t_e = data.draw(st.integers(t_s + 2, T))
        seq = _seq(T, 3, seed=T)
        task = split_sequence(seq, t_s, t_e)
        assert concat_motion([task.start, task.ground_truth, task.end]) == seq

    def test_task_invariants(self):
        s = _seq(4, 3)
        with pytest.raises(ValueError):
            InterpolationTask(s, _seq(4, 2), 3)
        with pytest.raises(ValueError):
            InterpolationTask(s, s, 3, ground_truth=_seq(2, 3))
        task = InterpolationTask(s, s, 5)
        assert (task.t_s, task.t_e) == (4, 10)


class TestPoseDistance:
    def test_identity(self):
        a = np.random.default_rng(1).normal(size=7)
        assert pose_distance(a, a) == 0.0

    def test_three_four_five(self):
        assert pose_distance([0, 0, 0], [3, 4, 0]) == 5.0

    def test_mismatch(self):
        with pytest.raises(ValueError):
            pose_distance([0, 0], [0, 0, 0])

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b, c = rng.normal(size=(3, 9))
            assert pose_distance(a, b) == pose_distance(b, a)
            assert pose_distance(a, c) <= pose_distance(a, b) + pose_distance(b, c) + 1e-9


class TestFlatten:
    def test_single_frame(self):
        np.testing.assert_array_equal(flatten_motion(MotionSequence([[1.0, 2.0, 3.0]])), [1, 2, 3])

    def test_frame_major(self):
        np.testing.assert_array_equal(flatten_motion(MotionSequence([[1.0, 2.0], [3.0, 4.0]])), [1, 2, 3, 4])

    def test_empty(self):
        with pytest.raises(ValueError):
            flatten_motion(np.empty((0, 3)))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12))
    def test_bijection(self, T, d):
        seq = _seq(T, d, seed=T * 31 + d)
        assert unflatten_motion(flatten_motion(seq), T, d) == seq


class TestMotionFile:
    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        seq = MotionSequence(rng.normal(size=(7, 5)) * 10.0 ** rng.integers(-8, 8, size=(7, 5)), 50.0)
        path = tmp_path / "a.motion"
        write_motion(seq, path)
        back = read_motion(path)
        assert back == seq
        assert format_motion(back) == path.read_text()

    def test_header(self):
        text = format_motion(MotionSequence([[0.1, 0.2]], 50.0))
        assert text.splitlines()[0] == "1 2 50.0"

    def test_rejects_ragged_rows(self):
        with pytest.raises(MotionFormatError, match=":3:"):
            parse_motion("2 2 50\n1 2\n3\n")

    @pytest.mark.parametrize("text", ["", "x y z\n", "2 2 50\n1 2\n", "1 2 50\n1 nan\n", "1 2 50\n1 a\n"])
    def test_rejects_malformed(self, text):
        with pytest.raises(MotionFormatError):
            parse_motion(text)
