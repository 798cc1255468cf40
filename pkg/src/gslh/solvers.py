"""Least-squares iteration on the normal equations and the decision problem
"is c (approximately) in the image of A"."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import DEFAULT_ORACLE_CAP, LsaInstance, project_and_solve
from .errors import MaxIterationsExceeded


def iterative_solve(B, c, target: float = 1e-10, max_iter: int | None = None,
                    x0=None) -> tuple[np.ndarray, int]:
    """Conjugate gradients on ``B^T B x = B^T c`` in the CGLS arrangement.

    Stops once ``||B^T (c - Bx)|| <= target * ||B^T c||``; the iteration cap
    defaults to ``10 * cols + 1000``.
    """
    B = sp.csr_matrix(B)
    c = np.asarray(c, dtype=np.float64).ravel()
    n = B.shape[1]
    if max_iter is None:
        max_iter = 10 * n + 1000
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    r = c - B @ x
    s = B.T @ r
    ref = np.linalg.norm(B.T @ c)
    if ref == 0:
        return x, 0
    p = s.copy()
    gamma = s @ s
    for it in range(1, max_iter + 1):
        if np.sqrt(gamma) <= target * ref:
            return x, it - 1
        q = B @ p
        step = gamma / (q @ q)
        x += step * p
        r -= step * q
        s = B.T @ r
        gamma_new = s @ s
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    if np.sqrt(gamma) <= target * ref:
        return x, max_iter
    raise MaxIterationsExceeded(
        f"relative normal residual {np.sqrt(gamma) / ref:.3e} after {max_iter} iterations")


@dataclass(frozen=True)
class LsdVerdict:
    answer: str
    achieved_ratio: float


def lsd_decide(inst: LsaInstance, cap: int = DEFAULT_ORACLE_CAP) -> LsdVerdict:
    """Answer "yes" iff an epsilon-approximate least-squares solution ``x``
    has ``||Ax - c|| <= eps ||c||``."""
    c = inst.rhs
    if max(inst.shape) <= cap:
        x = project_and_solve(inst, cap).minimizer
    else:
        x, _ = iterative_solve(inst.matrix, c, target=min(1e-12, inst.epsilon * 1e-3))
    cn = float(np.linalg.norm(c))
    res = float(np.linalg.norm(inst.matrix @ x - c))
    ratio = res / cn if cn > 0 else (0.0 if res == 0 else float("inf"))
    return LsdVerdict("yes" if ratio <= inst.epsilon else "no", ratio)


def bidiagonal_instance(n: int, epsilon: float = 1e-2) -> LsaInstance:
    """The (n+1) x n matrix with 2 on the diagonal and -1 just below it, and
    c = e_1. Well conditioned, yet c is exponentially close to its image."""
    main = np.arange(n)
    rows = np.concatenate([main, main + 1])
    cols = np.concatenate([main, main])
    vals = np.concatenate([np.full(n, 2.0), np.full(n, -1.0)])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n))
    c = np.zeros(n + 1)
    c[0] = 1.0
    return LsaInstance(A, c, epsilon)


def bidiagonal_residual_closed_forms(n: int) -> dict[str, float]:
    """The two candidate closed forms for ``||(I - P)c||`` on the bidiagonal
    instance: the unit-normalized null vector and the unnormalized variant."""
    return {
        "unit_normalized": float(np.sqrt(3.0 / (4.0 ** (n + 1) - 1.0))),
        "one_over_2^(n+2)-1": 1.0 / (2.0 ** (n + 2) - 1.0),
    }
