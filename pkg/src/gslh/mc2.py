"""Reduction from power-of-two zero-row-sum systems to 2-commodity systems.

Each block ``b`` carries two coordinates, ``u_b`` and ``v_b``; materialized
matrices interleave them as ``(u_0, v_0, u_1, v_1, ...)``. Original column
``j`` of the input owns block ``j``.

A source row is rewritten by repeatedly pairing variables whose coefficient
has bit ``r`` set and replacing ``2^r (u_j + u_l)`` with ``2^(r+1) u_t``.
Each replacement is justified by a gadget of ten auxiliary equations whose
signed sum is ``2 u_t - u_j - u_l``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import DEFAULT_ORACLE_CAP, ConditionMode, as_sparse, sigma_range, svd_parts
from .errors import BlockCollision, DimensionMismatch, NotGz2, NotZeroRowSum, OddPairSet
from .preprocess import Gz2Instance, check_gz2

TYPE1, TYPE2, TYPE12 = "type1", "type2", "type12"
KINDS = (TYPE1, TYPE2, TYPE12)

# coefficient pattern over (u_i, v_i, u_j, v_j)
PATTERNS = {
    TYPE1: (1.0, 0.0, -1.0, 0.0),
    TYPE2: (0.0, 1.0, 0.0, -1.0),
    TYPE12: (1.0, -1.0, -1.0, 1.0),
}


@dataclass(frozen=True)
class Mc2Row:
    kind: str
    i: int
    j: int
    magnitude: float
    weight_sq: float = 1.0
    rhs: float = 0.0
    source: int = -1
    role: str = "main"  # "main", "aux" or "strict"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown row kind {self.kind!r}")
        if self.i == self.j:
            raise ValueError("row must join two distinct blocks")
        if self.magnitude == 0:
            raise ValueError("row magnitude must be nonzero")
        if self.weight_sq < 0:
            raise ValueError("weight must be nonnegative")

    def coefficients(self) -> list[tuple[int, float]]:
        """(coordinate, value) pairs of the materialized row."""
        scale = math.sqrt(self.weight_sq) * self.magnitude
        pu, pv, qu, qv = PATTERNS[self.kind]
        out = []
        for coord, val in ((2 * self.i, pu), (2 * self.i + 1, pv),
                           (2 * self.j, qu), (2 * self.j + 1, qv)):
            if val:
                out.append((coord, scale * val))
        return out


@dataclass(frozen=True)
class Mc2System:
    num_blocks: int
    rows: tuple[Mc2Row, ...]
    alpha: float = 1.0

    @property
    def num_coords(self) -> int:
        return 2 * self.num_blocks

    def rows_of(self, source: int) -> list[Mc2Row]:
        return [r for r in self.rows if r.source == source]

    def with_rows(self, rows) -> "Mc2System":
        return Mc2System(self.num_blocks, tuple(rows), self.alpha)


@dataclass(frozen=True)
class GadgetRecord:
    t: int
    j: int
    l: int
    scale: int       # s * 2^r: the gadget's rows carry magnitude -scale
    source: int
    round: int


@dataclass(frozen=True)
class SplitRecord:
    t: int
    j_pos: int
    j_neg: int
    coefficient: int
    source: int


@dataclass
class Mc2Certificate:
    n_original: int
    variable_map: list[int]
    gadgets: list[GadgetRecord]
    splits: list[SplitRecord]
    alpha: float
    eps_in: float
    eps_out: float
    aux_count: dict[int, int]
    positive_sum: dict[int, int]
    final_main: dict[int, tuple[int, int, int]] = field(default_factory=dict)
    sigma_max_used: float = 0.0


def mc2_gadget(j: int, l: int, t: int, used: set[int] | None = None) -> list[Mc2Row]:
    """The ten unweighted equations whose signed sum is ``2u_t - u_j - u_l``."""
    fresh = range(t, t + 7)
    if used is not None and any(b in used for b in fresh):
        raise BlockCollision(f"blocks {t}..{t + 6} are not fresh")
    if j in fresh or l in fresh:
        raise BlockCollision("paired blocks overlap the gadget's fresh blocks")
    layout = [
        (TYPE12, t + 3, t + 4),
        (TYPE1, t, t + 3),
        (TYPE1, t + 4, j),
        (TYPE2, t + 3, t + 1),
        (TYPE2, t + 2, t + 4),
        (TYPE12, t + 5, t + 6),
        (TYPE1, t, t + 5),
        (TYPE1, t + 6, l),
        (TYPE2, t + 5, t + 2),
        (TYPE2, t + 1, t + 6),
    ]
    return [Mc2Row(kind, a, b, 1.0, 1.0, 0.0, role="aux") for kind, a, b in layout]


def _pair_side(entries: list[list[int]], sign: int, next_block: int, source: int,
               gadgets: list[GadgetRecord]) -> tuple[list[list[int]], int]:
    """Run pairing rounds on one sign class of a row.

    ``entries`` is an ordered list of ``[block, |coef|]``. A new variable is
    inserted directly after the second member of its pair, which fixes the
    pairing order in later rounds.
    """
    r = 0
    while sum(1 for _, c in entries if c > 0) > 1:
        bit = 1 << r
        odd = [k for k, (_, c) in enumerate(entries) if c & bit]
        if len(odd) % 2:
            raise OddPairSet(f"row {source}: {len(odd)} coefficients with bit {r} set")
        inserts: dict[int, list[int]] = {}
        for a, b in zip(odd[0::2], odd[1::2]):
            j, l = entries[a][0], entries[b][0]
            t = next_block
            next_block += 7
            gadgets.append(GadgetRecord(t, j, l, sign * bit, source, r))
            entries[a][1] -= bit
            entries[b][1] -= bit
            inserts[b] = [t, 2 * bit]
        merged = []
        for k, e in enumerate(entries):
            merged.append(e)
            if k in inserts:
                merged.append(inserts[k])
        entries = [e for e in merged if e[1] > 0]
        r += 1
    return entries, next_block


def reduce_gz2_to_mc2(inst: Gz2Instance, alpha: float = 1.0,
                      condition_mode: ConditionMode = "bound",
                      cap: int = DEFAULT_ORACLE_CAP) -> tuple[Mc2System, Mc2Certificate]:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    lsa = inst.inner
    A, c = lsa.matrix, lsa.rhs
    try:
        check_gz2(A)
    except NotZeroRowSum as exc:
        raise NotGz2(str(exc)) from exc
    if np.any(A.data != np.round(A.data)):
        raise NotGz2("non-integer coefficients")
    m, n = A.shape

    rows: list[Mc2Row] = []
    gadgets: list[GadgetRecord] = []
    splits: list[SplitRecord] = []
    aux_count: dict[int, int] = {}
    positive_sum: dict[int, int] = {}
    final_main: dict[int, tuple[int, int, int]] = {}
    next_block = n

    for i in range(m):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        cols, vals = A.indices[lo:hi], A.data[lo:hi].astype(np.int64)
        order = np.argsort(cols, kind="stable")
        cols, vals = cols[order], vals[order]
        if cols.size < 2:
            raise NotGz2(f"row {i} has fewer than two nonzeros")
        pos = [[int(j), int(v)] for j, v in zip(cols, vals) if v > 0]
        neg = [[int(j), int(-v)] for j, v in zip(cols, vals) if v < 0]
        positive_sum[i] = sum(v for _, v in pos)

        if len(pos) == 1 and len(neg) == 1:
            (jp, cp), (jn, _) = pos[0], neg[0]
            t = next_block
            next_block += 1
            splits.append(SplitRecord(t, jp, jn, cp, i))
            rows.append(Mc2Row(TYPE1, t, jn, float(cp), 1.0, float(c[i]), i, "main"))
            rows.append(Mc2Row(TYPE1, jp, t, float(cp), float(alpha), 0.0, i, "aux"))
            aux_count[i] = 1
            final_main[i] = (t, jn, cp)
            continue

        first = len(gadgets)
        finals = {}
        for sign, side in ((-1, neg), (1, pos)):
            side, next_block = _pair_side(side, sign, next_block, i, gadgets)
            finals[sign] = side
        (jp, cp), = finals[1]
        (jn, cn) = finals[-1][0]
        if cp != cn or len(finals[-1]) != 1:
            raise NotGz2(f"row {i}: sides do not balance")
        row_gadgets = gadgets[first:]
        weight = float(alpha) * 10 * len(row_gadgets)
        rows.append(Mc2Row(TYPE1, jp, jn, float(cp), 1.0, float(c[i]), i, "main"))
        for g in row_gadgets:
            for eq in mc2_gadget(g.j, g.l, g.t):
                rows.append(Mc2Row(eq.kind, eq.i, eq.j, float(-g.scale), weight, 0.0, i, "aux"))
        aux_count[i] = 10 * len(row_gadgets)
        final_main[i] = (jp, jn, cp)

    smax, _ = sigma_range(A, condition_mode, cap)
    c_norm = float(np.linalg.norm(c))
    eps_out = (lsa.epsilon * (1 + 1 / alpha) ** -0.5
               * (1 + c_norm ** 2 * smax ** 2 / (alpha + 1)) ** -0.5)
    system = Mc2System(next_block, tuple(rows), float(alpha))
    cert = Mc2Certificate(n_original=n, variable_map=list(range(n)), gadgets=gadgets,
                          splits=splits, alpha=float(alpha), eps_in=lsa.epsilon,
                          eps_out=eps_out, aux_count=aux_count, positive_sum=positive_sum,
                          final_main=final_main, sigma_max_used=smax)
    return system, cert


def materialize(system: Mc2System) -> tuple[sp.csr_matrix, np.ndarray]:
    data, ri, ci = [], [], []
    rhs = np.zeros(len(system.rows))
    for k, row in enumerate(system.rows):
        for coord, val in row.coefficients():
            ri.append(k)
            ci.append(coord)
            data.append(val)
        rhs[k] = row.rhs
    B = sp.csr_matrix((data, (ri, ci)), shape=(len(system.rows), system.num_coords))
    return as_sparse(B), rhs


def mapback_mc2(A, c, x_b, n_blocks: int | None = None) -> np.ndarray:
    A = sp.csr_matrix(A)
    n = A.shape[1]
    x_b = np.asarray(x_b, dtype=np.float64).ravel()
    c = np.asarray(c, dtype=np.float64).ravel()
    if x_b.shape[0] % 2 or x_b.shape[0] < 2 * n:
        raise DimensionMismatch("x_b must hold interleaved (u, v) pairs for every block")
    if n_blocks is not None and x_b.shape[0] != 2 * n_blocks:
        raise DimensionMismatch(f"expected {2 * n_blocks} coordinates, got {x_b.shape[0]}")
    if not np.any(A.T @ c):
        return np.zeros(n)
    return x_b[0:2 * n:2].copy()


def row_sum_identity(system: Mc2System, A, c) -> list[int]:
    """Source rows whose main and unweighted aux rows do not sum to (A_i, c_i).

    Works in exact integer arithmetic on magnitudes (weights excluded).
    """
    A = sp.csr_matrix(A)
    bad = []
    for i in range(A.shape[0]):
        acc: dict[int, int] = {}
        rhs = 0.0
        for row in system.rows_of(i):
            pu, pv, qu, qv = PATTERNS[row.kind]
            mag = int(row.magnitude)
            if mag != row.magnitude:
                bad.append(i)
                break
            for coord, val in ((2 * row.i, pu), (2 * row.i + 1, pv),
                               (2 * row.j, qu), (2 * row.j + 1, qv)):
                if val:
                    acc[coord] = acc.get(coord, 0) + mag * int(val)
            if row.role == "main":
                rhs += row.rhs
        else:
            expect = {2 * int(j): int(v) for j, v in
                      zip(A.indices[A.indptr[i]:A.indptr[i + 1]],
                          A.data[A.indptr[i]:A.indptr[i + 1]])}
            got = {k: v for k, v in acc.items() if v != 0}
            if got != expect or rhs != float(c[i]):
                bad.append(i)
    return bad


def gadget_signed_sum(j: int, l: int, t: int) -> dict[int, int]:
    """Sum of the gadget's ten rows as an exact coordinate -> coefficient map."""
    acc: dict[int, int] = {}
    for row in mc2_gadget(j, l, t):
        pu, pv, qu, qv = PATTERNS[row.kind]
        for coord, val in ((2 * row.i, pu), (2 * row.i + 1, pv),
                           (2 * row.j, qu), (2 * row.j + 1, qv)):
            if val:
                acc[coord] = acc.get(coord, 0) + int(val)
    return {k: v for k, v in acc.items() if v}


def original_u_coords(n: int) -> np.ndarray:
    return np.arange(n) * 2


def schur_check(system: Mc2System, A, cap: int = DEFAULT_ORACLE_CAP) -> float:
    """Max-entry deviation of the Schur complement of B^T B onto the original
    u coordinates from ``alpha/(alpha+1) A^T A``."""
    B, _ = materialize(system)
    if max(B.shape) > cap:
        from .errors import OracleCapExceeded
        raise OracleCapExceeded(f"{B.shape} exceeds oracle cap {cap}")
    A = sp.csr_matrix(A)
    n = A.shape[1]
    M = (B.T @ B).toarray()
    keep = original_u_coords(n)
    rest = np.setdiff1d(np.arange(M.shape[0]), keep)
    M11 = M[np.ix_(keep, keep)]
    M12 = M[np.ix_(keep, rest)]
    M22 = M[np.ix_(rest, rest)]
    sc = M11 - M12 @ np.linalg.pinv(M22, rcond=1e-12, hermitian=True) @ M12.T
    target = system.alpha / (system.alpha + 1) * (A.T @ A).toarray()
    return float(np.abs(sc - target).max())


def zero_coordinates(system: Mc2System) -> np.ndarray:
    used = np.zeros(system.num_coords, dtype=bool)
    for row in system.rows:
        for coord, _ in row.coefficients():
            used[coord] = True
    return np.flatnonzero(~used)


def expected_null_dim(system: Mc2System, cert: Mc2Certificate, A,
                      cap: int = DEFAULT_ORACLE_CAP) -> int:
    """dim null(A) + one per gadget + one per untouched coordinate."""
    A = sp.csr_matrix(A)
    _, s, _ = svd_parts(A, cap)
    return (A.shape[1] - s.size) + len(cert.gadgets) + zero_coordinates(system).size


def nullspace_check(system: Mc2System, cert: Mc2Certificate, A,
                    cap: int = DEFAULT_ORACLE_CAP) -> tuple[int, int]:
    expected = expected_null_dim(system, cert, A, cap)
    B, _ = materialize(system)
    _, s, _ = svd_parts(B, cap)
    return expected, B.shape[1] - s.size
