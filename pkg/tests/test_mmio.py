import numpy as np
import pytest

from amgmatch.mmio import MatrixMarketError, read_mm, write_mm
from amgmatch.problems import gen_poisson

from conftest import csr, random_sparse_dense


def test_round_trip_general_is_exact(tmp_path, rng):
    D = random_sparse_dense(rng, 9, 6) * np.pi * 1e-7
    A = csr(D)
    write_mm(tmp_path / "a.mtx", A)
    B = read_mm(tmp_path / "a.mtx")
    assert np.array_equal(A.values, B.values)
    assert np.array_equal(A.col_indices, B.col_indices)


def test_round_trip_symmetric(tmp_path):
    A, _ = gen_poisson(2, 4)
    write_mm(tmp_path / "p.mtx", A, symmetric=True)
    text = (tmp_path / "p.mtx").read_text()
    assert "symmetric" in text.splitlines()[0]
    B = read_mm(tmp_path / "p.mtx")
    assert np.array_equal(B.to_dense(), A.to_dense())


def test_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.mtx"
    p.write_text("not a matrix\n")
    with pytest.raises(MatrixMarketError):
        read_mm(p)
    p.write_text("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n")
    with pytest.raises(MatrixMarketError):
        read_mm(p)
    p.write_text("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n")
    with pytest.raises(MatrixMarketError):
        read_mm(p)
    p.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n")
    with pytest.raises(MatrixMarketError):
        read_mm(p)
