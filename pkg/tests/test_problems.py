import numpy as np
import pytest

from amgmatch.config import PreconditionerConfig, StudySpec
from amgmatch.partition import make_partition, partial_row_assembly
from amgmatch.problems import exact_solution, gen_poisson, poisson_elements, smooth_perturbation


def test_poisson1d_spectrum():
    A, _ = gen_poisson(1, 3)
    np.testing.assert_array_equal(A.to_dense(), [[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
    ev = np.linalg.eigvalsh(A.to_dense())
    np.testing.assert_allclose(ev, [2 - np.sqrt(2), 2, 2 + np.sqrt(2)], rtol=1e-14)


def test_poisson2d_stencil():
    A, _ = gen_poisson(2, 3)
    D = A.to_dense()
    assert D.shape == (9, 9)
    np.testing.assert_array_equal(np.diag(D), 4)
    rs = D.sum(axis=1)
    assert rs[4] == 0            # the only interior row
    assert np.all(rs[[0, 1, 2, 3, 5, 6, 7, 8]] > 0)


def test_poisson3d_structure():
    A, b = gen_poisson(3, 16)
    assert A.nrows == 4096 and A.is_symmetric()
    counts = np.diff(A.row_offsets)
    assert counts.max() == 7
    interior = 1 * 256 + 1 * 16 + 1
    assert counts[interior] == 7 and counts[0] == 4
    np.testing.assert_allclose(b, A @ exact_solution(3, 16))


def test_guards():
    with pytest.raises(ValueError):
        gen_poisson(1, 1)
    with pytest.raises(ValueError):
        gen_poisson(4, 3)
    with pytest.raises(OverflowError):
        gen_poisson(3, 400)


@pytest.mark.parametrize("dim,n", [(1, 7), (2, 5), (3, 4)])
def test_elements_sum_to_matrix(dim, n):
    A, _ = gen_poisson(dim, n)
    S = partial_row_assembly(poisson_elements(dim, n), make_partition(n ** dim, 1)).summed()
    np.testing.assert_array_equal(S.to_dense(), A.to_dense())


def test_perturbation_is_seeded_and_unit():
    a = smooth_perturbation(2, 8, np.random.default_rng(5))
    b = smooth_perturbation(2, 8, np.random.default_rng(5))
    assert np.array_equal(a, b) and np.abs(a).max() == pytest.approx(1.0)


def test_config_defaults():
    assert PreconditionerConfig("mlvsmatch3").matching_sweeps == 3
    assert PreconditionerConfig("MLVSMATCH4").max_aggregate_size == 16
    assert PreconditionerConfig("MLVSBM").max_aggregate_size is None
    c = PreconditionerConfig("MLVSMATCH3")
    assert c.coarse_threshold(4) == 800
    assert c.with_overrides(coarse_size=50).coarse_threshold(4) == 50
    assert c.smoother.kind == "hybrid_fgs" and c.smoother.sweeps == 4
    with pytest.raises(ValueError):
        PreconditionerConfig("AMG")


def test_study_spec_weak_invariant():
    StudySpec(mode="weak", sizes=(16, 32), ranks=(1, 8))
    with pytest.raises(ValueError):
        StudySpec(mode="weak", sizes=(16, 32), ranks=(1, 4))
    with pytest.raises(ValueError):
        StudySpec(mode="weak", sizes=(16, 32), ranks=(1,))
    assert list(StudySpec(mode="strong", sizes=(8,), ranks=(1, 2)).cells()) == [(8, 1), (8, 2)]
