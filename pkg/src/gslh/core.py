"""Linear-algebra substrate: LSA instances, the dense SVD oracle, and
complexity accounting.

Matrices are ``scipy.sparse.csr_matrix`` with float64 storage. Integrality
of a matrix class is checked, never encoded in the dtype.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, OracleCapExceeded, ZeroMatrix

ORACLE_TOL = 1e-10
RANK_CUTOFF = 1e-12
DEFAULT_ORACLE_CAP = 2000
# bound mode shrinks the oracle's smallest singular value by this factor so the
# reported condition number is a strict over-estimate
BOUND_SAFETY = 1e-6


def as_sparse(A) -> sp.csr_matrix:
    """Return a canonical CSR copy: float64, duplicates summed, zeros dropped."""
    M = sp.csr_matrix(A, dtype=np.float64, copy=True)
    M.sum_duplicates()
    M.eliminate_zeros()
    return M


def is_integer_matrix(A: sp.spmatrix) -> bool:
    data = sp.csr_matrix(A).data
    return bool(np.all(np.isfinite(data)) and np.all(data == np.round(data)))


def empty_rows_and_cols(A: sp.spmatrix) -> tuple[np.ndarray, np.ndarray]:
    M = sp.csr_matrix(A)
    row_counts = np.diff(M.indptr)
    col_counts = np.bincount(M.indices, minlength=M.shape[1])
    return np.flatnonzero(row_counts == 0), np.flatnonzero(col_counts == 0)


def norm_inf(A: sp.spmatrix) -> float:
    """Induced infinity norm: largest absolute row sum."""
    M = abs(sp.csr_matrix(A))
    return float(M.sum(axis=1).max()) if M.nnz else 0.0


def norm_one(A: sp.spmatrix) -> float:
    """Induced one norm: largest absolute column sum."""
    M = abs(sp.csr_matrix(A))
    return float(M.sum(axis=0).max()) if M.nnz else 0.0


def norm_max(A: sp.spmatrix) -> float:
    M = sp.csr_matrix(A)
    return float(np.abs(M.data).max()) if M.nnz else 0.0


@dataclass(frozen=True)
class LsaInstance:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_sparse(self.matrix))
        rhs = np.asarray(self.rhs, dtype=np.float64).ravel()
        object.__setattr__(self, "rhs", rhs)
        if rhs.shape[0] != self.matrix.shape[0]:
            raise DimensionMismatch(
                f"rhs has length {rhs.shape[0]}, matrix has {self.matrix.shape[0]} rows")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class DenseOracleResult:
    minimizer: np.ndarray
    projection: np.ndarray
    residual_norm: float
    sigma_max: float
    sigma_min_nonzero: float
    rank: int
    # orthonormal bases, kept for tests that need to build perturbations
    left_basis: np.ndarray
    right_basis: np.ndarray
    singular_values: np.ndarray
    tol: float = ORACLE_TOL

    @property
    def condition(self) -> float:
        if self.rank == 0:
            return 1.0
        return self.sigma_max / self.sigma_min_nonzero


def _check_cap(shape, cap):
    if max(shape) > cap:
        raise OracleCapExceeded(f"matrix {shape[0]}x{shape[1]} exceeds oracle cap {cap}")


def svd_parts(A, cap: int = DEFAULT_ORACLE_CAP):
    """Thin SVD restricted to singular values above the rank cutoff."""
    _check_cap(A.shape, cap)
    D = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=np.float64)
    if D.size == 0:
        return np.zeros((D.shape[0], 0)), np.zeros(0), np.zeros((D.shape[1], 0))
    U, s, Vt = np.linalg.svd(D, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0], s[:0], Vt[:0].T
    keep = s > s[0] * RANK_CUTOFF
    return U[:, keep], s[keep], Vt[keep].T


def project_and_solve(inst: LsaInstance, cap: int = DEFAULT_ORACLE_CAP) -> DenseOracleResult:
    U, s, V = svd_parts(inst.matrix, cap)
    c = inst.rhs
    coeffs = U.T @ c
    x = V @ (coeffs / s) if s.size else np.zeros(inst.shape[1])
    proj = U @ coeffs
    smax = float(s[0]) if s.size else 0.0
    smin = float(s[-1]) if s.size else 0.0
    return DenseOracleResult(
        minimizer=x, projection=proj, residual_norm=float(np.linalg.norm(c - proj)),
        sigma_max=smax, sigma_min_nonzero=smin, rank=int(s.size),
        left_basis=U, right_basis=V, singular_values=s)


def check_lsa_solution(inst: LsaInstance, x, oracle: DenseOracleResult | None = None,
                       cap: int = DEFAULT_ORACLE_CAP) -> tuple[bool, float]:
    """Return (accepted, ratio) for ``||Ax - proj|| <= eps ||proj||``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != inst.shape[1]:
        raise DimensionMismatch(f"x has length {x.shape[0]}, expected {inst.shape[1]}")
    if oracle is None:
        oracle = project_and_solve(inst, cap)
    Ax = inst.matrix @ x
    pnorm = float(np.linalg.norm(oracle.projection))
    scale = max(float(np.linalg.norm(inst.rhs)), 1.0)
    if pnorm <= oracle.tol * scale:
        # zero projection: only a zero image is acceptable
        ok = float(np.linalg.norm(Ax)) <= oracle.tol * scale
        return ok, 0.0 if ok else float("inf")
    ratio = float(np.linalg.norm(Ax - oracle.projection)) / pnorm
    return ratio <= inst.epsilon, ratio


def error_metric_equivalence_check(inst: LsaInstance, x,
                                   cap: int = DEFAULT_ORACLE_CAP) -> tuple[float, float, float]:
    """Three ways of measuring the error of ``x``; equal in exact arithmetic.

    Returns (normal-equation residual in the pseudo-inverse norm,
    distance of Ax to the projection, distance of x to the minimizer in the
    Gram-matrix norm).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    oracle = project_and_solve(inst, cap)
    A = inst.matrix.toarray()
    gram = A.T @ A
    g = gram @ x - A.T @ inst.rhs
    V, s = oracle.right_basis, oracle.singular_values
    # (A^T A)^+ = V diag(1/s^2) V^T
    pinv_norm = float(np.sqrt(max(np.sum((V.T @ g) ** 2 / s ** 2), 0.0))) if s.size else 0.0
    image_err = float(np.linalg.norm(A @ x - oracle.projection))
    d = x - oracle.minimizer
    gram_err = float(np.sqrt(max(d @ gram @ d, 0.0)))
    return pinv_norm, image_err, gram_err


# -- condition accounting ----------------------------------------------------

ConditionMode = Union[str, tuple]


def parse_condition_mode(text: str) -> ConditionMode:
    text = text.strip()
    if text in ("exact", "bound"):
        return text
    if text.startswith("declared:"):
        K = float(text.split(":", 1)[1])
        if not K >= 1:
            raise ValueError("declared condition number must be >= 1")
        return ("declared", K)
    raise ValueError(f"unknown condition mode {text!r}")


@dataclass(frozen=True)
class SigmaBounds:
    sigma_max_upper: float
    lambda_max_lower: float

    @property
    def sigma_max_lower(self) -> float:
        return float(np.sqrt(self.lambda_max_lower))


def sigma_bounds(A) -> SigmaBounds:
    """Cheap bracket on the largest singular value."""
    M = as_sparse(A)
    if M.nnz == 0:
        raise ZeroMatrix("matrix has no nonzero entries")
    fro2 = float(np.sum(M.data ** 2))
    upper = min(np.sqrt(norm_one(M) * norm_inf(M)), np.sqrt(fro2))
    return SigmaBounds(float(upper), fro2 / min(M.shape))


def sigma_range(A, mode: ConditionMode = "bound",
                cap: int = DEFAULT_ORACLE_CAP) -> tuple[float, float]:
    """Return (upper estimate of sigma_max, lower estimate of sigma_min nonzero).

    exact   -> oracle values
    bound   -> norm bound above, oracle value shrunk by BOUND_SAFETY below
    declared-> norm bound above, upper / K below
    """
    M = as_sparse(A)
    if M.nnz == 0:
        raise ZeroMatrix("matrix has no nonzero entries")
    if isinstance(mode, tuple) and mode[0] == "declared":
        hi = sigma_bounds(M).sigma_max_upper
        return hi, hi / float(mode[1])
    _, s, _ = svd_parts(M, cap)
    if mode == "exact":
        return float(s[0]), float(s[-1])
    if mode == "bound":
        hi = max(sigma_bounds(M).sigma_max_upper, float(s[0]))
        return hi, float(s[-1]) * (1.0 - BOUND_SAFETY)
    raise ValueError(f"unknown condition mode {mode!r}")


@dataclass(frozen=True)
class SparseComplexity:
    nnz: int
    magnitude: float
    condition: float
    inv_epsilon: float

    def as_tuple(self):
        return (self.nnz, self.magnitude, self.condition, self.inv_epsilon)


def _anzmin(values: np.ndarray) -> float | None:
    nz = np.abs(values[values != 0])
    return float(nz.min()) if nz.size else None


def measure_complexity(inst: LsaInstance, condition_mode: ConditionMode = "exact",
                       cap: int = DEFAULT_ORACLE_CAP) -> SparseComplexity:
    A = inst.matrix
    if A.nnz == 0:
        raise ZeroMatrix("matrix has no nonzero entries")
    c = inst.rhs
    terms = [norm_max(A), float(np.abs(c).max()) if c.size else 0.0]
    for v in (_anzmin(A.data), _anzmin(c)):
        if v is not None:
            terms.append(1.0 / v)
    hi, lo = sigma_range(A, condition_mode, cap)
    return SparseComplexity(nnz=int(A.nnz), magnitude=float(max(terms)),
                            condition=hi / lo, inv_epsilon=1.0 / inst.epsilon)
