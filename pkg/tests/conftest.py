import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from amgmatch.sparse import CsrMatrix

settings.register_profile("ci", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def lap1d_dense(n):
    return 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


def lap2d_dense(n):
    T = lap1d_dense(n)
    I = np.eye(n)
    return np.kron(T, I) + np.kron(I, T)


def csr(D):
    return CsrMatrix.from_dense(D)


def random_sparse_dense(rng, m, n, density=0.3):
    D = rng.standard_normal((m, n))
    D[rng.random((m, n)) > density] = 0.0
    return D


def random_spd_dense(rng, n, density=0.4, shift=0.5):
    B = random_sparse_dense(rng, n, n, density)
    A = B @ B.T + shift * np.eye(n)
    return A


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_diffusion(rng, side):
    """2D five-point diffusion with log-normal edge coefficients, as CsrMatrix."""
    from amgmatch.partition import make_partition, partial_row_assembly
    from amgmatch.problems import ElementSet, poisson_elements
    els = [ElementSet(e.nodes, e.local * np.exp(rng.normal(0, 1, (e.nodes.shape[0], 1, 1))))
           for e in poisson_elements(2, side)]
    return partial_row_assembly(els, make_partition(side * side, 1)).summed()
