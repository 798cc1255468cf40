"""Front of the chain: general integer systems to zero-row-sum systems, then to
systems whose positive coefficients in each row sum to a power of two."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import (DEFAULT_ORACLE_CAP, ConditionMode, LsaInstance, as_sparse,
                   empty_rows_and_cols, is_integer_matrix, norm_inf, sigma_range)
from .errors import DimensionMismatch, EmptyRowOrColumn, NotIntegerMatrix, NotZeroRowSum


@dataclass(frozen=True)
class GzInstance:
    inner: LsaInstance


@dataclass(frozen=True)
class Gz2Instance:
    inner: LsaInstance


@dataclass(frozen=True)
class PreprocessCertificate:
    stage: str
    original_cols: int
    eps_in: float
    eps_out: float
    w: float | None = None
    a_vec: np.ndarray | None = None
    k_star: int | None = None
    sigma_max_used: float | None = None
    sigma_min_used: float | None = None
    notes: list[str] = field(default_factory=list)


def is_power_of_two(value: float) -> bool:
    if value <= 0 or value != math.floor(value):
        return False
    v = int(value)
    return v & (v - 1) == 0


def check_zero_row_sums(A: sp.spmatrix) -> None:
    sums = np.asarray(sp.csr_matrix(A).sum(axis=1)).ravel()
    bad = np.flatnonzero(sums != 0)
    if bad.size:
        raise NotZeroRowSum(f"rows {bad[:5].tolist()} have nonzero sums")


def positive_row_sums(A: sp.spmatrix) -> np.ndarray:
    M = sp.csr_matrix(A)
    return np.asarray(M.multiply(M > 0).sum(axis=1)).ravel()


def check_gz2(A: sp.spmatrix) -> None:
    """Raise NotZeroRowSum unless every row sums to zero and its positive part
    sums to a power of two."""
    check_zero_row_sums(A)
    for i, s in enumerate(positive_row_sums(A)):
        if not is_power_of_two(s):
            raise NotZeroRowSum(f"row {i}: positive coefficients sum to {s}")


def reduce_g_to_gz(inst: LsaInstance, condition_mode: ConditionMode = "bound",
                   keep_zero_column: bool = False,
                   cap: int = DEFAULT_ORACLE_CAP) -> tuple[GzInstance, PreprocessCertificate]:
    """Append the column ``-A 1`` so every row sums to zero.

    A zero appended column (when ``A 1 = 0``) is rejected unless
    ``keep_zero_column`` is set, in which case it is carried along.
    """
    A = inst.matrix
    if not is_integer_matrix(A):
        raise NotIntegerMatrix("input matrix has non-integer entries")
    rows, cols = empty_rows_and_cols(A)
    if rows.size or cols.size:
        raise EmptyRowOrColumn(f"empty rows {rows[:5].tolist()}, empty cols {cols[:5].tolist()}")
    m, n = A.shape
    last = -np.asarray(A.sum(axis=1)).ravel()
    if not keep_zero_column and not np.any(last):
        raise EmptyRowOrColumn("appended column -A*1 is identically zero")
    AZ = as_sparse(sp.hstack([A, sp.csr_matrix(last.reshape(-1, 1))]))

    # ||Ax - Pc|| <= eps_z * smax(A)/smin(A_Z) * sqrt(n+1) * ||Pc||
    smax_a, _ = sigma_range(A, condition_mode, cap)
    _, smin_z = sigma_range(AZ, condition_mode, cap)
    eps_out = inst.epsilon * smin_z / (smax_a * math.sqrt(n + 1))
    eps_out = min(eps_out, inst.epsilon)
    cert = PreprocessCertificate(stage="g_to_gz", original_cols=n, eps_in=inst.epsilon,
                                 eps_out=eps_out, sigma_max_used=smax_a,
                                 sigma_min_used=smin_z)
    return GzInstance(LsaInstance(AZ, inst.rhs.copy(), eps_out)), cert


def mapback_gz(n: int, x_z) -> np.ndarray:
    x_z = np.asarray(x_z, dtype=np.float64).ravel()
    if x_z.shape[0] != n + 1:
        raise DimensionMismatch(f"expected {n + 1} coordinates, got {x_z.shape[0]}")
    return x_z[:n] - x_z[n]


def _ceil_pow2(x: float) -> float:
    if x <= 1:
        return 1.0
    return float(2 ** math.ceil(math.log2(x)))


def reduce_gz_to_gz2(inst: GzInstance, condition_mode: ConditionMode = "bound",
                     cap: int = DEFAULT_ORACLE_CAP) -> tuple[Gz2Instance, PreprocessCertificate]:
    """Pad each row with a balancing pair ``(a_i, -a_i)`` so the positive part
    sums to ``2**k_star``; tie the two new columns by a heavy row ``(w, -w)``."""
    lsa = inst.inner
    AZ, cZ = lsa.matrix, lsa.rhs
    check_zero_row_sums(AZ)
    m, n = AZ.shape
    half_l1 = np.asarray(abs(AZ).sum(axis=1)).ravel() / 2
    top = float(half_l1.max())
    k_star = max(0, math.ceil(math.log2(top))) if top > 0 else 0
    a = 2.0 ** k_star - half_l1
    assert np.all(a >= 0)

    eps1 = lsa.epsilon
    c_norm = float(np.linalg.norm(cZ))
    smax, _ = sigma_range(AZ, condition_mode, cap)
    w_raw = 3.0 / eps1 * math.sqrt(m) * smax * norm_inf(AZ) * max(c_norm, 1.0)
    w = _ceil_pow2(w_raw)
    a_norm = float(np.linalg.norm(a))
    if c_norm > 0:
        eps_out = eps1 / (3.0 * (1.0 + a_norm / w) * smax * c_norm)
        eps_out = min(eps_out, eps1)
    else:
        eps_out = eps1

    col = sp.csr_matrix(a.reshape(-1, 1))
    top_block = sp.hstack([AZ, col, -col])
    last = sp.csr_matrix(([w, -w], ([0, 0], [n, n + 1])), shape=(1, n + 2))
    A2 = as_sparse(sp.vstack([top_block, last]))
    c2 = np.concatenate([cZ, [0.0]])
    check_gz2(A2)
    cert = PreprocessCertificate(stage="gz_to_gz2", original_cols=n, eps_in=eps1,
                                 eps_out=eps_out, w=w, a_vec=a, k_star=k_star,
                                 sigma_max_used=smax,
                                 notes=[f"w rounded up from {w_raw!r} to a power of two"])
    return Gz2Instance(LsaInstance(A2, c2, eps_out)), cert


def mapback_gz2(A_z, c_z, x_z2) -> np.ndarray:
    A_z = sp.csr_matrix(A_z)
    n = A_z.shape[1]
    x_z2 = np.asarray(x_z2, dtype=np.float64).ravel()
    c_z = np.asarray(c_z, dtype=np.float64).ravel()
    if x_z2.shape[0] != n + 2 or c_z.shape[0] != A_z.shape[0]:
        raise DimensionMismatch("inconsistent lengths for Gz2 mapback")
    if not np.any(A_z.T @ c_z):
        return np.zeros(n)
    return x_z2[:n].copy()
