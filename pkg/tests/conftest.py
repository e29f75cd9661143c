import numpy as np
import pytest
from hypothesis import settings

from micromacro.speed_law import SpeedLaw

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def law():
    return SpeedLaw.greenshields(1.0)


def rational_law():
    """v = (1 - rho) / (1 + rho): strictly decreasing, v(1) = 0, concave flux."""
    return SpeedLaw.analytic(
        v=lambda r: (1.0 - r) / (1.0 + r),
        dv=lambda r: -2.0 / (1.0 + r) ** 2,
        d2v=lambda r: 4.0 / (1.0 + r) ** 3,
        name="rational",
    )


@pytest.fixture
def rational():
    return rational_law()
