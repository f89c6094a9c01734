import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from neuroclean.model import Event, Recording


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_recording(rng):
    """4 channels x 4000 samples of seeded noise at 500 Hz with two events."""
    data = rng.standard_normal((4, 4000)) * 10.0
    return Recording(
        data=data,
        sampling_rate_hz=500.0,
        line_freq_hz=60.0,
        events=(Event(1000, "a"), Event(3000, "b")),
    )
