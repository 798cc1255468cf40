"""Geometric realizations of 2-commodity systems.

Truss embedding: each block becomes a point ``(u, v)`` in the plane, and a row
is realizable when its pattern is a multiple of ``(s_i - s_j)`` applied to the
two blocks. Original blocks get random v-coordinates on a sphere; each gadget
is laid out with its shared vertex at the midpoint of its two parents' v.

TV decomposition: every row becomes a group ``N^T (W - r r^T) N`` over the
coordinates it touches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BitCollision, DegeneratePairing
from .mc2 import PATTERNS, TYPE1, TYPE12, Mc2Certificate, Mc2System

ROUND_PRECISION = 1e-10


@dataclass
class TrussGeometry:
    coords: np.ndarray          # shape (num_blocks, 2): columns u, v
    radius: float
    precision: float
    seed: int
    layout: str = "gadget offsets: unit columns, right isosceles diagonals"


def sphere_point(n: int, radius: float, rng: np.random.Generator,
                 precision: float = ROUND_PRECISION) -> tuple[np.ndarray, np.ndarray]:
    """Uniform point on the radius-``radius`` sphere in R^n, and its rounding
    to the nearest multiple of ``precision``."""
    g = rng.standard_normal(n)
    while not np.any(g):
        g = rng.standard_normal(n)
    raw = g / np.linalg.norm(g) * radius
    return raw, np.round(raw / precision) * precision


def embed_truss(system: Mc2System, cert: Mc2Certificate, seed: int,
                A_l1: float, precision: float = ROUND_PRECISION) -> TrussGeometry:
    """Place every block. ``A_l1`` is the induced 1-norm of the reduced matrix;
    the sphere radius is ``A_l1 * n**10``."""
    n = cert.n_original
    radius = float(A_l1) * float(n) ** 10
    rng = np.random.default_rng(seed)
    _, v_orig = sphere_point(n, radius, rng, precision)

    xy = np.full((system.num_blocks, 2), np.nan)
    xy[:n, 0] = np.arange(n, dtype=float)
    xy[:n, 1] = v_orig
    frontier = float(n)  # every later u-coordinate sits right of this

    events = sorted([("g", g.t, g) for g in cert.gadgets] +
                    [("s", s.t, s) for s in cert.splits], key=lambda e: e[1])
    for kind, _, rec in events:
        if kind == "s":
            # the main row u_t - u_{j-} is kept horizontal
            xy[rec.t] = (frontier + 1.0, xy[rec.j_neg, 1])
            frontier += 2.0
            continue
        t, j, l = rec.t, rec.j, rec.l
        v1, v2 = xy[j, 1], xy[l, 1]
        if v1 == v2:
            raise DegeneratePairing(f"blocks {j} and {l} share v-coordinate {v1!r}")
        vt = (v1 + v2) / 2
        d = v1 - vt                     # u_{t+3} - u_{t+4}
        base = frontier + 1.0
        right = base + 1.0 + abs(d)
        left = right + d
        xy[t] = (base, vt)
        xy[t + 3] = (left, vt)
        xy[t + 1] = (left, v1)
        xy[t + 6] = (left, v2)
        xy[t + 5] = (right, vt)
        xy[t + 4] = (right, v1)
        xy[t + 2] = (right, v2)
        frontier = max(left, right) + 1.0
    unset = np.isnan(xy[:, 0])
    if np.any(unset):
        # blocks that no row touches still get a position
        k = np.flatnonzero(unset)
        xy[k, 0] = frontier + 1.0 + np.arange(k.size)
        xy[k, 1] = 0.0
    return TrussGeometry(coords=xy, radius=radius, precision=precision, seed=seed)


def row_deviations(system: Mc2System, geometry: TrussGeometry) -> np.ndarray:
    """Per row: sine of the angle between its pattern and the member direction
    ``(s_i - s_j, s_j - s_i)``. Zero means the row is a truss member."""
    out = np.empty(len(system.rows))
    xy = geometry.coords
    for k, row in enumerate(system.rows):
        p = np.asarray(PATTERNS[row.kind])
        d = xy[row.i] - xy[row.j]
        q = np.concatenate([d, -d])
        nq = np.linalg.norm(q)
        if nq == 0:
            out[k] = 1.0
            continue
        ph, qh = p / np.linalg.norm(p), q / nq
        out[k] = float(np.linalg.norm(ph - (ph @ qh) * qh))
    return out


def verify_truss_rows(system: Mc2System, geometry: TrussGeometry) -> float:
    dev = row_deviations(system, geometry)
    return float(dev.max()) if dev.size else 0.0


def truss_member_weights(system: Mc2System, geometry: TrussGeometry) -> np.ndarray:
    """Member weight giving each realizable row exactly: |row scale| / |s_i - s_j|."""
    xy = geometry.coords
    w = np.empty(len(system.rows))
    for k, row in enumerate(system.rows):
        length = np.linalg.norm(xy[row.i] - xy[row.j])
        w[k] = math.sqrt(row.weight_sq) * abs(row.magnitude) * np.linalg.norm(
            PATTERNS[row.kind][:2]) / length if length else np.inf
    return w


def dyadic_vectors(cert: Mc2Certificate) -> dict[int, dict[int, Fraction]]:
    """Each paired block as an exact convex combination of original blocks."""
    vec: dict[int, dict[int, Fraction]] = {j: {j: Fraction(1)} for j in range(cert.n_original)}
    for g in sorted(cert.gadgets, key=lambda g: g.t):
        acc: dict[int, Fraction] = {}
        for parent in (g.j, g.l):
            for key, val in vec[parent].items():
                acc[key] = acc.get(key, Fraction(0)) + val / 2
        vec[g.t] = acc
    return vec


def bitstring_disjointness_check(cert: Mc2Certificate, raise_on_fail: bool = True) -> bool:
    """Every pairing joins vectors whose dyadic expansions share no set bit in
    any coordinate, and whose distance is at least ``2**-p`` where ``2**p`` is
    the row's positive coefficient sum."""
    vec = dyadic_vectors(cert)
    for g in cert.gadgets:
        a, b = vec[g.j], vec[g.l]
        p = int(cert.positive_sum[g.source]).bit_length() - 1
        denom = 1 << (p + 1)
        dist2 = Fraction(0)
        for key in set(a) | set(b):
            x, y = a.get(key, Fraction(0)), b.get(key, Fraction(0))
            xs, ys = x * denom, y * denom
            if xs.denominator != 1 or ys.denominator != 1:
                raise BitCollision(f"gadget at block {g.t}: non-dyadic weights")
            if int(xs) & int(ys):
                if raise_on_fail:
                    raise BitCollision(f"gadget at block {g.t}: shared bit in coordinate {key}")
                return False
            dist2 += (x - y) ** 2
        if dist2 < Fraction(1, 1 << (2 * p)):
            if raise_on_fail:
                raise BitCollision(f"gadget at block {g.t}: vectors closer than 2^-{p}")
            return False
    return True


# -- TV groups -----------------------------------------------------------------

@dataclass
class TvGroup:
    coords: tuple[int, ...]      # global coordinates the group touches
    N: np.ndarray                # incidence rows over ``coords``
    W: np.ndarray                # diagonal matrix
    r: np.ndarray

    def block(self) -> np.ndarray:
        return self.N.T @ (self.W - np.outer(self.r, self.r)) @ self.N


@dataclass
class TvDecomposition:
    groups: list[TvGroup] = field(default_factory=list)


def tv_decompose_type12(weight: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(N, W, r) with N^T (W - r r^T) N = weight * [[1,-1,-1,1], ...] over the
    coordinate order (u_i, u_j, v_i, v_j).

    The weight sits in N so that W - r r^T = [[1, -1], [-1, 1]] exactly.
    """
    if not weight > 0:
        raise ValueError("weight must be positive")
    N = math.sqrt(weight) * np.array([[1.0, -1.0, 0.0, 0.0],
                                      [0.0, 0.0, 1.0, -1.0]])
    return N, 2.0 * np.eye(2), np.ones(2)


def system_to_tv(system: Mc2System) -> TvDecomposition:
    out = TvDecomposition()
    for row in system.rows:
        weight = row.weight_sq * row.magnitude ** 2
        if weight == 0:
            continue
        i, j = row.i, row.j
        if row.kind == TYPE12:
            N, W, r = tv_decompose_type12(weight)
            out.groups.append(TvGroup((2 * i, 2 * j, 2 * i + 1, 2 * j + 1), N, W, r))
        else:
            off = 0 if row.kind == TYPE1 else 1
            out.groups.append(TvGroup((2 * i + off, 2 * j + off),
                                      math.sqrt(weight) * np.array([[1.0, -1.0]]),
                                      np.eye(1), np.zeros(1)))
    return out


def assemble_tv(decomp: TvDecomposition, num_coords: int) -> np.ndarray:
    M = np.zeros((num_coords, num_coords))
    for g in decomp.groups:
        idx = np.asarray(g.coords)
        M[np.ix_(idx, idx)] += g.block()
    return M

