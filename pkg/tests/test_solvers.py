import numpy as np
import pytest
import scipy.sparse as sp

from gslh.core import LsaInstance, check_lsa_solution, project_and_solve
from gslh.errors import MaxIterationsExceeded
from gslh.mc2 import materialize, reduce_gz2_to_mc2
from gslh.solvers import (bidiagonal_instance, bidiagonal_residual_closed_forms, iterative_solve,
                          lsd_decide)

from conftest import worked_example


def test_diagonal_converges_fast():
    B = sp.diags([1.0, 2.0, 3.0, 4.0])
    x, it = iterative_solve(B, np.ones(4), target=1e-12)
    assert it <= 4
    assert np.allclose(x, [1, 1 / 2, 1 / 3, 1 / 4])


def test_singular_consistent():
    B = sp.csr_matrix([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
    c = B @ np.array([3.0, 1.0, -2.0])
    x, _ = iterative_solve(B, c, target=1e-12)
    assert np.linalg.norm(B @ x - c) <= 1e-10


def test_iteration_cap():
    B = sp.csr_matrix(np.vander(np.linspace(0, 1, 30), 12))
    with pytest.raises(MaxIterationsExceeded):
        iterative_solve(B, np.ones(30), target=1e-30, max_iter=3)


def test_worked_example_iterative():
    system, _ = reduce_gz2_to_mc2(worked_example())
    B, c = materialize(system)
    x, it = iterative_solve(B, c, target=1e-8)
    ok, ratio = check_lsa_solution(LsaInstance(B, c, 1e-6), x)
    assert ok, ratio


def test_lsd_cases():
    I = LsaInstance(sp.eye(3), np.array([1.0, -2.0, 5.0]), 0.1)
    assert lsd_decide(I).answer == "yes"
    A = sp.csr_matrix([[1.0], [0.0]])
    assert lsd_decide(LsaInstance(A, np.array([0.0, 1.0]), 0.5)).answer == "no"
    assert lsd_decide(bidiagonal_instance(10, 1e-2)).answer == "yes"


def test_bidiagonal_closed_form():
    for n in (2, 5, 10):
        r = project_and_solve(bidiagonal_instance(n)).residual_norm
        forms = bidiagonal_residual_closed_forms(n)
        assert r == pytest.approx(forms["unit_normalized"], rel=1e-8)
        assert r != pytest.approx(forms["one_over_2^(n+2)-1"], rel=1e-3)
