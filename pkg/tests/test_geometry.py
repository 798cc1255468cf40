import numpy as np
import pytest

from gslh.core import norm_one
from gslh.errors import DegeneratePairing
from gslh.geometry import (assemble_tv, bitstring_disjointness_check, dyadic_vectors,
                           embed_truss, row_deviations, system_to_tv, tv_decompose_type12)
from gslh.mc2 import materialize, reduce_gz2_to_mc2

from conftest import random_gz2_instance, worked_example


def reduced(inst):
    system, cert = reduce_gz2_to_mc2(inst)
    return system, cert, norm_one(inst.inner.matrix)


def test_dyadic_vectors_worked_example():
    _, cert, _ = reduced(worked_example())
    vec = dyadic_vectors(cert)
    # the final paired variable averages (3, 5, 4, 4) / 16
    from fractions import Fraction
    assert vec[33] == {0: Fraction(3, 16), 1: Fraction(5, 16), 2: Fraction(4, 16),
                       3: Fraction(4, 16)}
    assert bitstring_disjointness_check(cert)


def test_bitstring_suite(rng):
    for _ in range(50):
        _, cert, _ = reduced(random_gz2_instance(rng))
        assert bitstring_disjointness_check(cert)


def test_gadget_rows_are_members(rng):
    """Every gadget row is realized exactly; only main rows can deviate."""
    for seed in range(20):
        system, cert, l1 = reduced(random_gz2_instance(rng, max_cols=10))
        geom = embed_truss(system, cert, seed, l1)
        dev = row_deviations(system, geom)
        starts = [g.t for g in cert.gadgets]
        in_gadget = np.array([r.role == "aux" and any(t <= max(r.i, r.j) < t + 7 for t in starts)
                              for r in system.rows])
        assert in_gadget.sum() == 10 * len(starts)
        assert np.all(dev[in_gadget] <= 1e-8)


def test_embedding_deterministic():
    system, cert, l1 = reduced(worked_example())
    a = embed_truss(system, cert, 7, l1).coords
    b = embed_truss(system, cert, 7, l1).coords
    assert np.array_equal(a, b)


def test_degenerate_pairing_raises():
    system, cert, l1 = reduced(worked_example())
    with pytest.raises(DegeneratePairing):
        embed_truss(system, cert, 0, 1e-9, precision=1.0)


def test_tv_type12_block():
    N, W, r = tv_decompose_type12(3.0)
    block = N.T @ (W - np.outer(r, r)) @ N
    # coordinate order (u_i, u_j, v_i, v_j); pattern u_i - v_i - u_j + v_j
    p = np.array([1, -1, -1, 1])
    assert np.allclose(block, 3.0 * np.outer(p, p))
    assert np.linalg.eigvalsh(W - np.outer(r, r)).min() >= -1e-12


def test_tv_matches_gram(rng):
    for _ in range(30):
        system, _, _ = reduced(random_gz2_instance(rng))
        B = materialize(system)[0]
        gram = (B.T @ B).toarray()
        tv = assemble_tv(system_to_tv(system), system.num_coords)
        assert np.abs(tv - gram).max() <= 1e-8 * max(1.0, np.abs(gram).max())
