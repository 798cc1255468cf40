"""Round a strict 2-commodity system to integer coefficients.

Rows are scaled by a power of two ``2**shift`` so the lightest row has norm
factor at least one, then by ``2**k``, and each row's magnitude is rounded up
with exact integer arithmetic. Rounding the magnitude (rather than each signed
entry) keeps every row in one of the three edge patterns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NonPositiveWeight, NotStrict
from .mc2 import Mc2Row, Mc2System, materialize
from .strictify import strictness_predicate


@dataclass(frozen=True)
class IntegerizeCertificate:
    k: int
    eps_in: float
    eps_out: float
    shift: int  # rows and rhs were multiplied by 2**shift before rounding

    @property
    def rescale(self) -> float:
        return 2.0 ** self.shift


def ceil_sqrt(value: Fraction) -> int:
    """Smallest integer N with N*N >= value, for value >= 0."""
    ceil_v = -((-value.numerator) // value.denominator)
    n = math.isqrt(ceil_v)
    if n * n < value:
        n += 1
    return n


def integerize(system: Mc2System, c_b, eps_in: float) -> tuple[Mc2System, np.ndarray,
                                                               IntegerizeCertificate]:
    if not strictness_predicate(system):
        raise NotStrict("input system is not strict")
    if any(row.weight_sq <= 0 for row in system.rows):
        raise NonPositiveWeight("every row must carry a positive weight")
    c_b = np.asarray(c_b, dtype=np.float64).ravel()

    norms = [math.sqrt(r.weight_sq) * abs(r.magnitude) for r in system.rows]
    lightest = min(norms) if norms else 1.0
    shift = max(0, math.ceil(-math.log2(lightest))) if lightest < 1 else 0
    B, _ = materialize(system)
    k = math.ceil(math.log2(B.nnz / eps_in)) + 2
    scale = Fraction(2) ** (shift + k)

    rows = []
    for row in system.rows:
        exact = Fraction(row.weight_sq) * Fraction(row.magnitude) ** 2 * scale ** 2
        # exact int: beyond 2**53 a float would lose the rounding guarantee
        mag = ceil_sqrt(exact)
        rows.append(Mc2Row(row.kind, row.i, row.j, mag if row.magnitude > 0 else -mag, 1.0,
                           row.rhs * float(scale), row.source, row.role))
    rhs = c_b * float(scale)
    cert = IntegerizeCertificate(k=k, eps_in=eps_in, eps_out=eps_in / 3, shift=shift)
    return system.with_rows(rows), rhs, cert


def scaled_reference(system: Mc2System, cert: IntegerizeCertificate) -> Mc2System:
    """The strict system multiplied by ``2**shift`` (the matrix the rounding
    bounds compare against)."""
    f = 4.0 ** cert.shift
    return system.with_rows(
        Mc2Row(r.kind, r.i, r.j, r.magnitude, r.weight_sq * f, r.rhs * 2.0 ** cert.shift,
               r.source, r.role) for r in system.rows)


def mapback_int(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).copy()
