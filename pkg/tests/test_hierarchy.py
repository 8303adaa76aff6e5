import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from amgmatch.config import PreconditionerConfig
from amgmatch.hierarchy import (build_hierarchy, build_tentative_prolongator,
                                compose_pairwise, galerkin, smooth_prolongator,
                                smoothing_weight)
from amgmatch.matching import (Matching, build_edge_weights, half_approx_matching,
                               matching_to_aggregates)
from amgmatch.problems import gen_poisson
from amgmatch.sparse import NotSPDError

from conftest import csr, lap1d_dense


# -- tentative prolongator -----------------------------------------------------

def test_tentative_pair_and_singleton():
    P = build_tentative_prolongator(Matching(((0, 1),), (2,)), [1.0, 1.0, 5.0])
    r = 1 / np.sqrt(2)
    np.testing.assert_allclose(P.P.to_dense(), [[r, 0], [r, 0], [0, 1]], rtol=0, atol=1e-16)
    D = P.P.to_dense()
    np.testing.assert_allclose(D.T @ D, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(P.coarse_w, [np.sqrt(2), 5.0])


def test_tentative_all_singletons_is_identity():
    P = build_tentative_prolongator(Matching((), (0, 1, 2, 3)), np.ones(4))
    np.testing.assert_array_equal(P.P.to_dense(), np.eye(4))


def test_tentative_negative_singleton_sign():
    P = build_tentative_prolongator(Matching(((0, 1),), (2,)), [1.0, -2.0, -3.0])
    assert P.P.to_dense()[2, 1] == -1.0
    np.testing.assert_allclose(P.P.to_dense() @ P.coarse_w, [1.0, -2.0, -3.0], atol=1e-15)


def test_tentative_random_w_least_squares(rng):
    w = rng.standard_normal(6)
    P = build_tentative_prolongator(Matching(((0, 3), (1, 5), (2, 4)), ()), w)
    D = P.P.to_dense()
    np.testing.assert_allclose(D.T @ D, np.eye(3), atol=1e-14)
    c, *_ = np.linalg.lstsq(D, w, rcond=None)
    assert np.linalg.norm(D @ c - w) <= 1e-12
    np.testing.assert_allclose(c, P.coarse_w, rtol=1e-13)


def test_tentative_zero_w():
    with pytest.raises(ZeroDivisionError):
        build_tentative_prolongator(Matching(((0, 1),), (2,)), [1.0, 1.0, 0.0])
    with pytest.raises(ZeroDivisionError):
        build_tentative_prolongator(Matching(((0, 1),), (2,)), [0.0, 0.0, 1.0])


# -- smoothing -----------------------------------------------------------------

def test_smooth_1d_n4():
    A = lap1d_dense(4)
    Ph = build_tentative_prolongator(Matching(((0, 1), (2, 3)), ()), np.ones(4))
    assert smoothing_weight(csr(A)) == 0.5
    P = smooth_prolongator(csr(A), Ph)
    ref = (np.eye(4) - 0.5 * np.diag(1 / np.diag(A)) @ A) @ Ph.P.to_dense()
    np.testing.assert_allclose(P.P.to_dense(), ref, rtol=0, atol=1e-15)
    assert P.kind == "smoothed"


def test_smooth_diagonal_is_error():
    Ph = build_tentative_prolongator(Matching(((0, 1),), ()), np.ones(2))
    with pytest.raises(ValueError, match="identically zero"):
        smooth_prolongator(csr(2 * np.eye(2)), Ph)


def test_smooth_pass_through_row():
    A = np.zeros((4, 4))
    A[:3, :3] = lap1d_dense(3)
    A[3, 3] = 3.0
    Ph = build_tentative_prolongator(Matching(((0, 1),), (2, 3)), np.ones(4))
    P = smooth_prolongator(csr(A), Ph).P.to_dense()
    om = smoothing_weight(csr(A))
    np.testing.assert_allclose(P[3], (1 - om) * Ph.P.to_dense()[3], atol=1e-16)


# -- composition ---------------------------------------------------------------

def test_compose_one_sweep_is_single_round():
    A, _ = gen_poisson(2, 8)
    w = np.ones(64)
    comp = compose_pairwise(A, w, 1)
    single = build_tentative_prolongator(half_approx_matching(build_edge_weights(A, w)), w)
    np.testing.assert_array_equal(comp.prolongator.P.to_dense(), single.P.to_dense())


@pytest.mark.parametrize("sweeps", [3, 4])
def test_compose_size_bound(sweeps):
    A, _ = gen_poisson(1, 64)
    comp = compose_pairwise(A, np.ones(64), sweeps)
    amap = comp.prolongator.aggregates
    assert amap.n_coarse >= 64 // 2 ** sweeps
    assert amap.aggregate_sizes.max() <= 2 ** sweeps
    D = comp.prolongator.P.to_dense()
    np.testing.assert_allclose(D.T @ D, np.eye(amap.n_coarse), atol=1e-13)
    np.testing.assert_allclose(D @ comp.coarse_w, np.ones(64), atol=1e-12)


def test_compose_labels_match_columns():
    A, _ = gen_poisson(2, 10)
    comp = compose_pairwise(A, np.ones(100), 3)
    D = comp.prolongator.P.to_dense()
    assert np.array_equal(np.argmax(np.abs(D), axis=1), comp.prolongator.aggregates.assign)


def test_compose_stalls_without_eligible_edges():
    D = 2 * np.eye(4) + np.eye(4, k=1) + np.eye(4, k=-1)
    comp = compose_pairwise(csr(D), np.ones(4), 3)
    assert comp.stalled and comp.rounds == 0
    assert comp.prolongator.P.ncols == 4


@given(st.integers(0, 2 ** 16), st.integers(1, 4))
def test_composed_tentative_orthonormal(seed, sweeps):
    rng = np.random.default_rng(seed)
    A, _ = gen_poisson(2, 6)
    w = rng.uniform(0.5, 2.0, 36) * rng.choice([-1, 1], 36)
    comp = compose_pairwise(A, w, sweeps)
    D = comp.prolongator.P.to_dense()
    np.testing.assert_allclose(D.T @ D, np.eye(D.shape[1]), atol=1e-13)
    assert np.linalg.norm(D @ comp.coarse_w - w) <= 1e-12 * np.linalg.norm(w)


# -- hierarchy -----------------------------------------------------------------

def test_small_matrix_is_single_level():
    A, _ = gen_poisson(2, 10)
    h = build_hierarchy(A, PreconditionerConfig("MLVSMATCH3"))
    assert h.n_levels == 1 and h.coarsest_A is A


def test_poisson3d_16_galerkin_and_monotone():
    A, _ = gen_poisson(3, 16)
    h = build_hierarchy(A, PreconditionerConfig("MLVSMATCH3"))
    assert h.n_levels >= 3
    ops = h.operators()
    for l, lv in enumerate(h.levels):
        P = lv.P.P.scipy().toarray()
        ref = P.T @ lv.A.scipy().toarray() @ P
        nxt = ops[l + 1].to_dense()
        assert np.abs(nxt - ref).max() <= 1e-12 * np.abs(nxt).max()
        assert ops[l + 1].nrows < lv.A.nrows
        assert ops[l + 1].is_symmetric()
    assert h.coarsest_A.nrows <= 200


def test_match4_coarsens_at_least_as_fast():
    A, _ = gen_poisson(3, 16)
    h3 = build_hierarchy(A, PreconditionerConfig("MLVSMATCH3"))
    h4 = build_hierarchy(A, PreconditionerConfig("MLVSMATCH4"))
    r3 = h3.operators()[0].nrows / h3.operators()[1].nrows
    r4 = h4.operators()[0].nrows / h4.operators()[1].nrows
    assert r4 >= r3
    for h, bound in ((h3, 8), (h4, 16)):
        for lv in h.levels:
            assert lv.P.aggregates.aggregate_sizes.max() <= bound


@pytest.mark.parametrize("label", ["MLVSMATCH3", "MLVSMATCH4", "MLVSBM"])
def test_levels_spd_small(label):
    A, _ = gen_poisson(2, 32)
    h = build_hierarchy(A, PreconditionerConfig(label, coarse_size=20))
    assert h.n_levels >= 3
    for op in h.operators()[1:]:
        assert np.linalg.eigvalsh(op.to_dense()).min() > 0


def test_non_spd_rejected():
    D = lap1d_dense(300)
    D[5, 5] = -1.0
    with pytest.raises(NotSPDError):
        build_hierarchy(csr(D), PreconditionerConfig("MLVSMATCH3"))
    D = lap1d_dense(300)
    D[0, 1] = -0.5
    with pytest.raises(NotSPDError):
        build_hierarchy(csr(D), PreconditionerConfig("MLVSMATCH3"))


def test_jacobi_has_no_hierarchy():
    with pytest.raises(ValueError):
        build_hierarchy(csr(lap1d_dense(3)), PreconditionerConfig("JACOBI"))


def test_summary_json():
    A, _ = gen_poisson(3, 12)
    h = build_hierarchy(A, PreconditionerConfig("MLVSBM"), owner=np.arange(A.nrows) * 2 // A.nrows)
    s = json.loads(json.dumps(h.summary()))
    assert s["n_levels"] == h.n_levels == len(s["levels"])
    assert s["levels"][0]["size"] == 1728
    assert sum(int(k) * v for k, v in s["levels"][0]["aggregate_size_histogram"].items()) == 1728
    assert s["operator_complexity"] >= 1.0
    assert s["n_ranks"] == 2


def test_coarse_owner_stays_with_member_rank():
    A, _ = gen_poisson(2, 24)
    owner = (np.arange(A.nrows) * 4) // A.nrows
    h = build_hierarchy(A, PreconditionerConfig("MLVSMATCH3", coarse_size=30), owner)
    for lv, nxt in zip(h.levels, [l.owner for l in h.levels[1:]] + [h.coarsest_owner]):
        for p, m in enumerate(lv.P.aggregates.members()):
            assert nxt[p] == lv.owner[m].min()


def test_galerkin_helper():
    A = csr(lap1d_dense(4))
    P = build_tentative_prolongator(matching_to_aggregates(Matching(((0, 1), (2, 3)), ())),
                                    np.ones(4)).P
    ref = P.to_dense().T @ lap1d_dense(4) @ P.to_dense()
    np.testing.assert_allclose(galerkin(A, P).to_dense(), ref, atol=1e-15)
