import numpy as np
import pytest


def random_symmetric(rng, p, scale=1.0):
    a = rng.standard_normal((p, p)) * scale
    return 0.5 * (a + a.T)


def random_spd(rng, p, jitter=0.5):
    a = rng.standard_normal((2 * p, p))
    return a.T @ a / (2 * p) + jitter * np.eye(p)


def random_orthogonal(rng, p):
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))


def two_class_model(rng, p, n1=20, n2=30, jitter=0.5):
    from njgl import EmpiricalModel

    return EmpiricalModel(
        [random_spd(rng, p, jitter), random_spd(rng, p, jitter)], [n1, n2]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
