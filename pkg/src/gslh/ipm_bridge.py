"""Strict 2-commodity systems as interior-point Newton systems of a min-cost
2-commodity flow problem.

Every underlying edge carries three weights (type 1, type 2, type 1+2). The
flows ``y1, y2`` and the residual capacity ``yr`` are chosen so the inverse of
the edge's 2x2 barrier Hessian block reproduces those weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import DEFAULT_ORACLE_CAP
from .errors import NonStrictEdge, OracleCapExceeded
from .mc2 import TYPE1, TYPE2, TYPE12, Mc2Row, Mc2System, materialize


@dataclass(frozen=True)
class FlowTriple:
    y1: float
    y2: float
    yr: float

    @property
    def alpha(self) -> float:
        return self.y1 ** 2 + self.y2 ** 2 + self.yr ** 2

    @property
    def capacity(self) -> float:
        return self.y1 + self.y2 + self.yr

    def hessian_block(self) -> np.ndarray:
        a, b, r = self.y1 ** -2, self.y2 ** -2, self.yr ** -2
        return np.array([[a + r, r], [r, b + r]])

    def hessian_inverse(self) -> np.ndarray:
        s1, s2, sr = self.y1 ** 2, self.y2 ** 2, self.yr ** 2
        return (np.diag([s1 * sr, s2 * sr]) + s1 * s2 * np.array([[1.0, -1.0], [-1.0, 1.0]])) \
            / self.alpha

    def weights(self) -> tuple[float, float, float]:
        """The (type 1, type 2, type 1+2) coefficients of the inverse block."""
        s1, s2, sr = self.y1 ** 2, self.y2 ** 2, self.yr ** 2
        a = self.alpha
        return s1 * sr / a, s2 * sr / a, s1 * s2 / a


def weights_to_flows(w1: float, w2: float, w12: float) -> FlowTriple:
    if not (w1 > 0 and w2 > 0 and w12 > 0):
        raise NonStrictEdge(f"weights must be positive, got {(w1, w2, w12)}")
    y1_sq = w1 * w12 / w2 + w1 + w12
    y2_sq = w2 * w12 / w1 + w2 + w12
    yr_sq = w1 * w2 / w12 + w1 + w2
    return FlowTriple(math.sqrt(y1_sq), math.sqrt(y2_sq), math.sqrt(yr_sq))


def _canonical(row: Mc2Row) -> tuple[tuple[str, int, int], float]:
    """Key for the unweighted row and the sign relating the row to it."""
    sign = 1.0 if row.magnitude > 0 else -1.0
    if row.i < row.j:
        return (row.kind, row.i, row.j), sign
    return (row.kind, row.j, row.i), -sign


def merge_duplicate_rows(system: Mc2System) -> tuple[Mc2System, dict[tuple, list[int]]]:
    """Combine rows with the same unweighted pattern into one row of summed
    weight. Normal equations ``B^T B`` and ``B^T c`` are unchanged.

    Output rows have magnitude 1 and orientation ``i < j``; the returned map
    sends each kept key to the input row indices merged into it.
    """
    order: list[tuple] = []
    weight: dict[tuple, float] = {}
    scaled_rhs: dict[tuple, float] = {}
    members: dict[tuple, list[int]] = {}
    meta: dict[tuple, Mc2Row] = {}
    for k, row in enumerate(system.rows):
        key, sign = _canonical(row)
        W = row.weight_sq * row.magnitude ** 2
        if key not in weight:
            order.append(key)
            weight[key] = 0.0
            scaled_rhs[key] = 0.0
            members[key] = []
            meta[key] = row
        weight[key] += W
        # materialized row = sign * sqrt(W) * pattern(key), rhs = row.rhs
        scaled_rhs[key] += math.sqrt(W) * sign * row.rhs
        members[key].append(k)
    rows = []
    for key in order:
        W = weight[key]
        rhs = scaled_rhs[key] / math.sqrt(W) if W > 0 else 0.0
        kind, i, j = key
        first = meta[key]
        role = first.role if len(members[key]) == 1 else "merged"
        rows.append(Mc2Row(kind, i, j, 1.0, W, rhs, first.source, role))
    return system.with_rows(rows), members


def edge_weights(system: Mc2System) -> dict[tuple[int, int], dict[str, float]]:
    """Total weight per (underlying edge, type)."""
    out: dict[tuple[int, int], dict[str, float]] = {}
    for row in system.rows:
        key = (min(row.i, row.j), max(row.i, row.j))
        slot = out.setdefault(key, {TYPE1: 0.0, TYPE2: 0.0, TYPE12: 0.0})
        slot[row.kind] += row.weight_sq * row.magnitude ** 2
    return out


def flows_for_system(system: Mc2System) -> dict[tuple[int, int], FlowTriple]:
    return {e: weights_to_flows(w[TYPE1], w[TYPE2], w[TYPE12])
            for e, w in edge_weights(system).items()}


def newton_matrix(system: Mc2System, flows: dict[tuple[int, int], FlowTriple]) -> np.ndarray:
    """``M H^{-1} M^T`` with one (u-flow, v-flow) column pair per edge."""
    edges = sorted(flows)
    n = system.num_coords
    rows, cols, vals = [], [], []
    for e, (i, j) in enumerate(edges):
        for comm in (0, 1):
            rows += [2 * i + comm, 2 * j + comm]
            cols += [2 * e + comm, 2 * e + comm]
            vals += [1.0, -1.0]
    M = sp.csr_matrix((vals, (rows, cols)), shape=(n, 2 * len(edges)))
    Hinv = sp.block_diag([flows[e].hessian_inverse() for e in edges], format="csr") \
        if edges else sp.csr_matrix((0, 0))
    return (M @ Hinv @ M.T).toarray()


def verify_newton_system(system: Mc2System, flows: dict[tuple[int, int], FlowTriple] | None = None,
                         cap: int = DEFAULT_ORACLE_CAP) -> float:
    """Max absolute deviation between ``M H^{-1} M^T`` and ``B^T B``."""
    if system.num_coords > cap:
        raise OracleCapExceeded(f"{system.num_coords} coordinates exceed oracle cap {cap}")
    if flows is None:
        flows = flows_for_system(system)
    B, _ = materialize(system)
    target = (B.T @ B).toarray()
    return float(np.abs(newton_matrix(system, flows) - target).max()) if target.size else 0.0


def large_weight_types(system: Mc2System, ratio: float = 1.0) -> dict[tuple[int, int], list[str]]:
    """Per underlying edge, the types whose weight is at least ``ratio``."""
    return {e: [k for k, v in w.items() if v >= ratio] for e, w in edge_weights(system).items()}


def bridge_report(system: Mc2System, cap: int = DEFAULT_ORACLE_CAP) -> dict:
    flows = flows_for_system(system)
    dev = verify_newton_system(system, flows, cap)
    return {
        "edges": [{"edge": list(e), "y1": f.y1, "y2": f.y2, "yr": f.yr,
                   "capacity": f.capacity} for e, f in sorted(flows.items())],
        "newton_deviation": dev,
        "out_of_scope": ["cost vector", "demands", "barrier parameter t", "lambda"],
    }

