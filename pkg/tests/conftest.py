"""Shared instance generators and the acceptance summary printer."""
from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp

from gslh.core import LsaInstance
from gslh.preprocess import Gz2Instance

# acceptance criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def random_g_instance(rng: np.random.Generator, max_rows: int = 4, max_cols: int = 4,
                      bound: int = 3, epsilon: float = 0.5) -> LsaInstance:
    """Random integer system with no empty row or column and A*1 != 0."""
    while True:
        m = int(rng.integers(1, max_rows + 1))
        n = int(rng.integers(1, max_cols + 1))
        A = rng.integers(-bound, bound + 1, (m, n)).astype(float)
        if A.any(axis=1).all() and A.any(axis=0).all() and A.sum(axis=1).any():
            break
    c = rng.integers(-bound, bound + 1, m).astype(float)
    if not c.any():
        c[0] = 1.0
    return LsaInstance(sp.csr_matrix(A), c, epsilon)


def _split_power(rng, total: int, parts: int) -> list[int]:
    """``parts`` positive integers summing to ``total``."""
    cuts = np.sort(rng.choice(np.arange(1, total), size=parts - 1, replace=False))
    return np.diff(np.concatenate([[0], cuts, [total]])).astype(int).tolist()


def random_gz2_row(rng, n: int, max_nnz: int = 8, max_exp: int = 6) -> dict[int, int]:
    while True:
        p = int(rng.integers(0, max_exp + 1))
        total = 2 ** p
        k_pos = int(rng.integers(1, min(total, max_nnz - 1) + 1))
        k_neg = int(rng.integers(1, min(total, max_nnz - k_pos) + 1))
        if k_pos + k_neg <= n:
            break
    cols = rng.choice(n, size=k_pos + k_neg, replace=False)
    vals = _split_power(rng, total, k_pos) + [-v for v in _split_power(rng, total, k_neg)]
    return {int(j): v for j, v in zip(cols, vals)}


def random_gz2_instance(rng: np.random.Generator, max_cols: int = 30, max_rows: int = 4,
                        max_nnz: int = 8, max_exp: int = 6,
                        epsilon: float = 0.5) -> Gz2Instance:
    """Random power-of-two zero-row-sum system; entries bounded by 2**max_exp;
    every column used."""
    n = int(rng.integers(2, max_cols + 1))
    rows: list[dict[int, int]] = []
    while True:
        rows = [random_gz2_row(rng, n, max_nnz, max_exp)
                for _ in range(int(rng.integers(1, max_rows + 1)))]
        used = set().union(*rows)
        if len(used) == n:
            break
        # shrink n to the used columns to keep every column nonempty
        remap = {j: k for k, j in enumerate(sorted(used))}
        rows = [{remap[j]: v for j, v in r.items()} for r in rows]
        n = len(used)
        break
    A = np.zeros((len(rows), n))
    for i, r in enumerate(rows):
        for j, v in r.items():
            A[i, j] = v
    c = rng.integers(-5, 6, len(rows)).astype(float)
    if not c.any():
        c[0] = 1.0
    return Gz2Instance(LsaInstance(sp.csr_matrix(A), c, epsilon))


def worked_example() -> Gz2Instance:
    A = sp.csr_matrix(np.array([[3.0, 5.0, 4.0, 4.0, -16.0]]))
    return Gz2Instance(LsaInstance(A, np.array([1.0]), 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
