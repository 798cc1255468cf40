import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gslh.core import LsaInstance, check_lsa_solution, project_and_solve, sigma_bounds, svd_parts
from gslh.errors import DimensionMismatch, EmptyRowOrColumn, NotIntegerMatrix, NotZeroRowSum
from gslh.preprocess import (GzInstance, check_gz2, is_power_of_two, mapback_gz, mapback_gz2,
                             positive_row_sums, reduce_g_to_gz, reduce_gz_to_gz2)

from conftest import random_g_instance


def inst(A, c, eps=0.5):
    return LsaInstance(sp.csr_matrix(np.asarray(A, dtype=float)), np.asarray(c, float), eps)


def test_gz_forced_column():
    gz, cert = reduce_g_to_gz(inst([[1, 2]], [3]))
    assert gz.inner.matrix.toarray().tolist() == [[1, 2, -3]]
    assert gz.inner.rhs.tolist() == [3]
    assert cert.stage == "g_to_gz" and cert.original_cols == 2


def test_gz_zero_column_rejected_or_kept():
    with pytest.raises(EmptyRowOrColumn):
        reduce_g_to_gz(inst([[1, -1]], [0]))
    gz, _ = reduce_g_to_gz(inst([[1, -1]], [1]), keep_zero_column=True)
    assert gz.inner.matrix.toarray().tolist() == [[1, -1, 0]]


def test_gz_diag_example():
    gz, _ = reduce_g_to_gz(inst([[2, 0], [0, 2]], [2, 4]))
    assert gz.inner.matrix.toarray().tolist() == [[2, 0, -2], [0, 2, -2]]
    assert mapback_gz(2, [1, 2, 0]).tolist() == [1, 2]
    x = project_and_solve(gz.inner).minimizer
    assert np.allclose(mapback_gz(2, x), [1, 2])


def test_gz_input_errors():
    with pytest.raises(NotIntegerMatrix):
        reduce_g_to_gz(inst([[1.5, 1]], [1]))
    with pytest.raises(EmptyRowOrColumn):
        reduce_g_to_gz(inst([[1, 0], [1, 0]], [1, 1]))


def test_mapback_gz_examples():
    assert mapback_gz(2, [1, 2, 1]).tolist() == [0, 1]
    assert np.all(mapback_gz(3, 7.5 * np.ones(4)) == 0)
    with pytest.raises(DimensionMismatch):
        mapback_gz(2, [1, 2])


def test_gz2_row_examples():
    gz = GzInstance(inst([[3, -3]], [1]))
    gz2, cert = reduce_gz_to_gz2(gz)
    A2 = gz2.inner.matrix.toarray()
    assert cert.k_star == 2 and cert.a_vec.tolist() == [1.0]
    assert A2[0].tolist() == [3, -3, 1, -1]
    assert positive_row_sums(gz2.inner.matrix)[0] == 4


def test_gz2_mixed_rows_share_k_star():
    gz = GzInstance(inst([[3, -3], [1, -1]], [1, 1]))
    gz2, cert = reduce_gz_to_gz2(gz)
    assert cert.k_star == 2 and cert.a_vec.tolist() == [1.0, 3.0]
    assert positive_row_sums(gz2.inner.matrix).tolist()[:2] == [4, 4]


def test_gz2_unit_row_has_zero_padding():
    gz = GzInstance(inst([[1, -1]], [1]))
    gz2, cert = reduce_gz_to_gz2(gz)
    assert cert.k_star == 0 and cert.a_vec.tolist() == [0.0]
    assert positive_row_sums(gz2.inner.matrix)[0] == 1


def test_gz2_w_formula():
    gz = GzInstance(inst([[1, -1]], [1], 0.5))
    gz2, cert = reduce_gz_to_gz2(gz)
    # 3/eps * sqrt(m) * sigma_hat * ||A||_inf * ||c||
    sig = sigma_bounds(gz.inner.matrix).sigma_max_upper
    raw = 3 / 0.5 * 1 * sig * 2 * 1
    assert cert.w >= raw and cert.w < 2 * raw and is_power_of_two(cert.w)
    last = gz2.inner.matrix.toarray()[-1]
    assert last.tolist() == [0, 0, cert.w, -cert.w]
    assert gz2.inner.rhs[-1] == 0
    assert cert.w >= np.linalg.norm(cert.a_vec) / cert.eps_out


def test_gz2_rejects_nonzero_sum():
    with pytest.raises(NotZeroRowSum):
        reduce_gz_to_gz2(GzInstance(inst([[1, 1]], [1])))


def test_mapback_gz2():
    A = sp.csr_matrix([[1.0, -1.0]])
    assert mapback_gz2(A, [1.0], [5, 3, 9, 9]).tolist() == [5, 3]
    assert mapback_gz2(A, [1.0], [5, 3, 9, 1]).tolist() == [5, 3]
    # A^T c = 0 branch
    A0 = sp.csr_matrix([[1.0, -1.0], [1.0, -1.0]])
    assert mapback_gz2(A0, [1.0, -1.0], [5, 3, 9, 9]).tolist() == [0, 0]
    with pytest.raises(DimensionMismatch):
        mapback_gz2(A, [1.0], [1, 2, 3])


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 5).flatmap(lambda m: st.tuples(
    arrays(np.int64, (m, 4), elements=st.integers(-20, 20)),
    arrays(np.int64, (m,), elements=st.integers(-5, 5)))))
def test_class_invariants_and_nnz(Ac):
    A, c = Ac
    A = A[A.any(axis=1)]
    c = c[:A.shape[0]]
    A = A[:, A.any(axis=0)] if A.size else A
    if A.size == 0 or not A.sum(axis=1).any():
        return
    I = inst(A, c)
    gz, _ = reduce_g_to_gz(I)
    AZ = gz.inner.matrix
    assert np.all(np.asarray(AZ.sum(axis=1)).ravel() == 0)
    assert AZ.nnz <= I.matrix.nnz + 2 * A.shape[0] + 2
    # rank preserved and constant vector in the null space
    assert svd_parts(AZ)[1].size == svd_parts(I.matrix)[1].size
    assert np.allclose(AZ @ np.ones(AZ.shape[1]), 0)
    gz2, cert = reduce_gz_to_gz2(gz)
    check_gz2(gz2.inner.matrix)
    assert gz2.inner.matrix.nnz <= AZ.nnz + 2 * AZ.shape[0] + 2
    assert np.all(cert.a_vec >= 0)
    assert cert.w >= np.linalg.norm(cert.a_vec) / cert.eps_out


def test_end_to_end_eps_front_stages(rng):
    """Oracle solution of the Gz2 system, perturbed to eps_out, maps back to
    an eps_in solution of the input (50 instances)."""
    from gslh.harness import certify_near_minimizer, perturbed_solution
    for k in range(50):
        I = random_g_instance(rng, 5, 5, 9, epsilon=float(rng.choice([0.1, 0.5, 0.9])))
        gz, _ = reduce_g_to_gz(I)
        gz2, _ = reduce_gz_to_gz2(gz)
        o = project_and_solve(gz2.inner)
        x = perturbed_solution(gz2.inner, 0.9 * gz2.inner.epsilon, k, o)
        assert certify_near_minimizer(gz2.inner, x, o) <= gz2.inner.epsilon
        x0 = mapback_gz(I.shape[1], mapback_gz2(gz.inner.matrix, gz.inner.rhs, x))
        ok, ratio = check_lsa_solution(I, x0)
        assert ok, ratio


def test_kappa_growth_gz(rng):
    worst = 0.0
    for _ in range(50):
        I = random_g_instance(rng, 6, 5, 9)
        gz, _ = reduce_g_to_gz(I)
        s = svd_parts(I.matrix)[1]
        sz = svd_parts(gz.inner.matrix)[1]
        n = I.shape[1]
        worst = max(worst, (sz[0] / sz[-1]) / ((n + 1) ** 1.5 * s[0] / s[-1]))
    assert worst <= 1.0


def test_power_of_two_helper():
    assert [is_power_of_two(v) for v in (1, 2, 3, 4, 0, -2, 2.5)] == \
        [True, True, False, True, False, False, False]
