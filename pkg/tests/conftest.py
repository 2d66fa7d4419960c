import numpy as np
import pytest

from lmsampling import _backend


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def backends():
    """Backends available in this build, compiled first."""
    return ["compiled", "python"] if _backend._ext is not None else ["python"]
