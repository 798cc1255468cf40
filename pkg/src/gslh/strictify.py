"""Make a 2-commodity system strict: every joined block pair carries all three
edge types, the missing ones with a tiny weight ``delta``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import DEFAULT_ORACLE_CAP, ConditionMode, sigma_range
from .errors import DimensionMismatch, NotMc2
from .mc2 import KINDS, Mc2Row, Mc2System, materialize


@dataclass(frozen=True)
class StrictCertificate:
    delta: float
    added_rows: tuple[Mc2Row, ...]
    eps_in: float
    eps_out: float
    kappa_used: float
    sigma_used: float
    type12_pattern: str = "u_i - v_i - (u_j - v_j)"


def _pair(row: Mc2Row) -> tuple[int, int]:
    return (row.i, row.j) if row.i < row.j else (row.j, row.i)


def edge_types(system: Mc2System) -> dict[tuple[int, int], set[str]]:
    seen: dict[tuple[int, int], set[str]] = {}
    for row in system.rows:
        if row.weight_sq > 0:
            seen.setdefault(_pair(row), set()).add(row.kind)
    return seen


def strictness_predicate(system: Mc2System) -> bool:
    """True iff the three type-restricted adjacency supports coincide."""
    return all(len(kinds) == 3 for kinds in edge_types(system).values())


def _check_mc2(system: Mc2System) -> None:
    for row in system.rows:
        if not (0 <= row.i < system.num_blocks and 0 <= row.j < system.num_blocks):
            raise NotMc2(f"row {row} references a block outside the system")


def strictify(system: Mc2System, c_b, eps_in: float,
              condition_mode: ConditionMode = "bound",
              cap: int = DEFAULT_ORACLE_CAP,
              delta: float | None = None) -> tuple[Mc2System, StrictCertificate]:
    _check_mc2(system)
    c_b = np.asarray(c_b, dtype=np.float64).ravel()
    B, _ = materialize(system)
    if delta is None:
        hi, lo = sigma_range(B, condition_mode, cap)
        kappa = hi / lo
        c_norm = float(np.linalg.norm(c_b))
        delta = eps_in / (100 * kappa * hi * c_norm) if c_norm > 0 else 1.0
    else:
        hi = kappa = float("nan")

    added = []
    types = edge_types(system)
    for (i, j) in sorted(types):
        for kind in KINDS:
            if kind not in types[(i, j)]:
                added.append(Mc2Row(kind, i, j, 1.0, delta ** 2, 0.0, -1, "strict"))
    out = system.with_rows(list(system.rows) + added)
    cert = StrictCertificate(delta=float(delta), added_rows=tuple(added), eps_in=eps_in,
                             eps_out=eps_in / 100, kappa_used=float(kappa),
                             sigma_used=float(hi))
    return out, cert


def mapback_strict(B, c_b, x) -> np.ndarray:
    B = sp.csr_matrix(B)
    x = np.asarray(x, dtype=np.float64).ravel()
    c_b = np.asarray(c_b, dtype=np.float64).ravel()
    if x.shape[0] != B.shape[1] or c_b.shape[0] != B.shape[0]:
        raise DimensionMismatch("inconsistent lengths for strict mapback")
    if not np.any(B.T @ c_b):
        return np.zeros_like(x)
    return x.copy()

