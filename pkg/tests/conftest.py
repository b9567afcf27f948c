import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", deadline=None, max_examples=25, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_ellipse(rng, radii=(20.0, 200.0), ratio=(0.3, 1.0), spread=300.0):
    from rimfit.geometry import Ellipse

    a = rng.uniform(*radii)
    b = a * rng.uniform(*ratio)
    return Ellipse.from_axes(rng.uniform(-spread, spread), rng.uniform(-spread, spread), a, b,
                             rng.uniform(0, math.pi))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
