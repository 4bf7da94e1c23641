import numpy as np
import pytest

from trihybrid.geometry import build_dma_geometry, propagation_gains
from trihybrid.model import IsacProblem

CARRIER_HZ = 28e9
ATTENUATION = 0.6
WAVENUMBER = 827.67


def random_channel(rng, n):
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)


def random_phases(rng, n):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, n))


def dma_instance(n_w, n_u, seed=0, delta_c=0.5, power=10.0):
    """(problem, geometry, q, rng) for a random channel and steering vector."""
    rng = np.random.default_rng(seed)
    geo = build_dma_geometry(n_w, n_u, CARRIER_HZ)
    q = propagation_gains(geo, ATTENUATION, WAVENUMBER)
    n = geo.n_elements
    problem = IsacProblem.from_delta_c(random_channel(rng, n), random_phases(rng, n), delta_c, power)
    return problem, geo, q, rng


def dense_blockdiag(x, n_w, n_u):
    X = np.zeros((n_w * n_u, n_w), dtype=complex)
    for i in range(n_w):
        X[i * n_u:(i + 1) * n_u, i] = x[i * n_u:(i + 1) * n_u]
    return X


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
