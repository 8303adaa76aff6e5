import numpy as np
import pytest

from amgmatch.config import CoarsestSolverSpec, PreconditionerConfig
from amgmatch.hierarchy import build_hierarchy
from amgmatch.multigrid import CoarsestSolver, VCycle, make_preconditioner, solve, v_cycle_apply
from amgmatch.partition import make_partition
from amgmatch.problems import gen_poisson

from conftest import csr, lap1d_dense


def dense_operator(f, n):
    return np.column_stack([f(e) for e in np.eye(n)])


def two_level_1d(n):
    cfg = PreconditionerConfig("MLVSMATCH3", coarse_size=1, max_levels=2,
                               coarsest=CoarsestSolverSpec("direct"))
    return build_hierarchy(csr(lap1d_dense(n)), cfg)


def test_single_level_is_coarsest_solve(rng):
    A, _ = gen_poisson(2, 8)
    cfg = PreconditionerConfig("MLVSMATCH3", coarsest=CoarsestSolverSpec("direct"))
    h = build_hierarchy(A, cfg)
    assert h.n_levels == 1
    r = rng.standard_normal(64)
    np.testing.assert_allclose(v_cycle_apply(h, r), np.linalg.solve(A.to_dense(), r), rtol=1e-12)


def test_two_level_exact_coarse_is_spd(rng):
    h = two_level_1d(8)
    assert h.n_levels == 2
    B = dense_operator(VCycle(h), 8)
    assert np.abs(B - B.T).max() <= 1e-10
    assert np.linalg.eigvalsh((B + B.T) / 2).min() > 0


def test_two_level_contraction_n32(rng):
    h = two_level_1d(32)
    assert h.n_levels == 2
    B = dense_operator(VCycle(h), 32)
    E = np.eye(32) - B @ lap1d_dense(32)
    assert max(abs(np.linalg.eigvals(E))) < 1


def test_vcycle_dimension_check():
    h = two_level_1d(8)
    with pytest.raises(ValueError):
        VCycle(h)(np.ones(9))


def test_poisson3d_16_fcg():
    A, b = gen_poisson(3, 16)
    x, rep = solve(A, b, PreconditionerConfig("MLVSMATCH3"), tol=1e-6, max_iters=100)
    assert rep.converged and rep.iterations <= 20
    assert rep.config["preconditioner"] == "MLVSMATCH3"


@pytest.mark.parametrize("label", ["MLVSMATCH4", "MLVSBM"])
def test_other_recipes_converge(label):
    A, b = gen_poisson(3, 12)
    owner = make_partition(A.nrows, 2).owner
    _, rep = solve(A, b, PreconditionerConfig(label), tol=1e-6, max_iters=100, owner=owner)
    assert rep.converged and rep.iterations <= 20


def test_coarsest_contract(rng):
    A, _ = gen_poisson(2, 14)
    owner = make_partition(A.nrows, 2).owner
    cs = CoarsestSolver(A, owner, CoarsestSolverSpec())
    r = rng.standard_normal(A.nrows)
    x = cs(r)
    rep = cs.last_report
    assert rep.iterations <= 30
    res = np.linalg.norm(r - A.scipy() @ x) / np.linalg.norm(r)
    assert rep.converged == (res <= 1e-3 * (1 + 1e-8))


def test_make_preconditioner_baselines():
    A, _ = gen_poisson(1, 10)
    p, h, _ = make_preconditioner(A, PreconditionerConfig("JACOBI"))
    assert h is None
    np.testing.assert_allclose(p(np.ones(10)), 0.5)
    p, h, _ = make_preconditioner(A, PreconditionerConfig("NONE"))
    assert p is None and h is None


def test_jacobi_solve_uses_cg():
    A, b = gen_poisson(2, 10)
    _, rep = solve(A, b, PreconditionerConfig("JACOBI"), tol=1e-6)
    assert rep.converged and rep.config["method"] == "cg"
