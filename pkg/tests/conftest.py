import numpy as np
import pytest

from antisparse_ann.lib.frames.projection import make_uniform_frame


@pytest.fixture
def line_matrix():
    """A = [1 1]: d=1, m=2, the hand-solvable instance."""
    return np.array([[1.0, 1.0]])


@pytest.fixture
def frame_16x64():
    return make_uniform_frame(16, 64, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def single_thread(monkeypatch):
    monkeypatch.setenv("ASANN_THREADS", "1")
