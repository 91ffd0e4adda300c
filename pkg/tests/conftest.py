import pytest

from motion_interp.data import generate_synthetic_corpus
from motion_interp.model import ModelConfig
from motion_interp.motion import SkeletonSpec


@pytest.fixture(scope="session")
def tiny_config():
    return ModelConfig(d=6, hidden_size=12, latent_size=4, gap_length=10, condition_length=5)


@pytest.fixture(scope="session")
def tiny_corpus():
    # 20-frame windows, stride 25 over 80 frames -> 3 windows per sequence
    return generate_synthetic_corpus(SkeletonSpec.chain(2), 6, 80, seed=11)


@pytest.fixture(scope="session")
def tiny_test_corpus():
    return generate_synthetic_corpus(SkeletonSpec.chain(2), 3, 60, seed=12, split="test")


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
