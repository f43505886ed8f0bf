import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from radonbarcode.dataset import generate_synthetic  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_small(tmp_path_factory):
    """Twelve synthetic images with their manifest."""
    out = tmp_path_factory.mktemp("synth_small")
    generate_synthetic(out, 12, seed=5)
    return out
