import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def brute_sorted_sq(points, x):
    """Independent oracle: every squared distance, sorted."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    x = np.asarray(x, dtype=float).reshape(-1)
    d2 = [float(sum((p[j] - x[j]) ** 2 for j in range(len(x)))) for p in points]
    return np.array(sorted(d2))


def random_rotation(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
