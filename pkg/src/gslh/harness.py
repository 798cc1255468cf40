"""Verification harness: evaluate every checkable identity and bound on a
chain run and collect the results as table rows."""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import (ORACLE_TOL, LsaInstance, check_lsa_solution, norm_inf, project_and_solve,
                   svd_parts)
from .errors import ReductionError
from .integerize import scaled_reference
from .mc2 import materialize, nullspace_check, row_sum_identity, schur_check
from .pipeline import ChainResult, is_integer_valued
from .preprocess import check_gz2, check_zero_row_sums
from .strictify import strictness_predicate

# Constants instantiating the O(.) factors of the growth bounds. Chosen once
# from the measurement suite in tests/ and then frozen.
NNZ_GROWTH_C = 40.0
KAPPA_GZ_C = 1.0
KAPPA_GZ2_C = 10.0
KAPPA_MC2_C = 1.0
KAPPA_STRICT_C = 100.0
SCHUR_REL_TOL = 1e-8


@dataclass(frozen=True)
class ReportRow:
    name: str
    measured: float
    bound: float
    verdict: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "measured": self.measured, "bound": self.bound,
                "verdict": "pass" if self.verdict else "fail"}


def _row(name, measured, bound, ok=None) -> ReportRow:
    if ok is None:
        ok = bool(measured <= bound)
    return ReportRow(name, float(measured), float(bound), bool(ok))


def perturbed_solution(inst: LsaInstance, ratio: float, seed: int = 0, oracle=None) -> np.ndarray:
    """A solution whose image misses the projection by exactly ``ratio``
    relative, with the error direction drawn at random inside im(A)."""
    oracle = oracle or project_and_solve(inst)
    s, V = oracle.singular_values, oracle.right_basis
    if s.size == 0:
        return np.zeros(inst.shape[1])
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(s.size)
    g *= ratio * np.linalg.norm(oracle.projection) / np.linalg.norm(g)
    return oracle.minimizer + V @ (g / s)


def condition_exact(A, cap: int) -> float:
    _, s, _ = svd_parts(A, cap)
    return float(s[0] / s[-1]) if s.size else 1.0


def nnz_growth_constant(A, B) -> float:
    A = sp.csr_matrix(A)
    return sp.csr_matrix(B).nnz / (A.nnz * (1.0 + math.log2(max(norm_inf(A), 1.0))))


def kappa_bounds(result: ChainResult, cap: int) -> list[ReportRow]:
    """Measured condition number of each stage against its polynomial bound."""
    rows = []
    A = result.original.matrix
    kappa_prev = condition_exact(A, cap)
    names = [s.name for s in result.stages]
    if "gz" in names:
        AZ = result.stage("gz").instance.matrix
        n = A.shape[1]
        k_z = condition_exact(AZ, cap)
        rows.append(_row("kappa gz", k_z, KAPPA_GZ_C * (n + 1) ** 1.5 * kappa_prev))
    if "gz2" in names:
        st = result.stage("gz2")
        AZ = result.instance("gz")
        m = AZ.shape[0]
        s_z = svd_parts(AZ.matrix, cap)[1]
        k_z = s_z[0] / s_z[-1]
        eps1 = AZ.epsilon
        cz = max(float(np.linalg.norm(AZ.rhs)), 1.0)
        infn = norm_inf(AZ.matrix)
        bound = KAPPA_GZ2_C / eps1 * math.sqrt(m) * infn * cz * (s_z[0] + k_z * math.sqrt(m) * infn)
        rows.append(_row("kappa gz2", condition_exact(st.instance.matrix, cap), bound))
    if "mc2" in names:
        A2 = result.instance("gz2").matrix
        s2 = svd_parts(A2, cap)[1]
        infn = norm_inf(A2)
        bound = KAPPA_MC2_C * A2.nnz ** 2 * infn * (1 + math.log2(infn)) ** 2 / min(1.0, s2[-1])
        rows.append(_row("kappa mc2", condition_exact(result.stage("mc2").instance.matrix, cap),
                         bound))
    if "mc2_strict" in names:
        B = result.stage("mc2").instance.matrix
        sB = svd_parts(B, cap)[1]
        eps1 = result.stage("mc2").certificate.eps_out
        bound = KAPPA_STRICT_C / eps1 * sB[0] ** 2 * (sB[0] / sB[-1]) * B.shape[1]
        # the oracle cutoff can hide the delta-weighted directions, so the
        # measured value is a lower estimate at strict scale
        rows.append(_row("kappa mc2_strict",
                         condition_exact(result.stage("mc2_strict").instance.matrix, cap), bound))
    if "mc2_strict_int" in names:
        st = result.stage("mc2_strict_int")
        ref = scaled_reference(result.stage("mc2_strict").system, st.certificate)
        k_ref = condition_exact(materialize(ref)[0], cap)
        rows.append(_row("kappa mc2_strict_int", condition_exact(st.instance.matrix, cap),
                         math.sqrt(1 + 2.0 ** (-st.certificate.k + 2)) * k_ref * (1 + 1e-6)))
    return rows


def row_scale_range(result: ChainResult) -> tuple[Fraction, Fraction]:
    """Exact min and max of d_i^2, where rounded row i equals d_i times the
    scaled unrounded row (times 2**k). d_i >= 1 for all i proves the
    lambda_min inequality; max d_i^2 <= 1 + 2**(2-k) proves the lambda_max one."""
    st = result.stage("mc2_strict_int")
    cert = st.certificate
    scale = Fraction(4) ** (cert.shift + cert.k)
    ratios = [Fraction(r_int.magnitude) ** 2 /
              (Fraction(r.weight_sq) * Fraction(r.magnitude) ** 2 * scale)
              for r, r_int in zip(result.stage("mc2_strict").system.rows, st.system.rows)]
    return min(ratios), max(ratios)


def integerize_spectra(result: ChainResult, cap: int) -> list[ReportRow]:
    """Largest/smallest nonzero eigenvalue of the rounded normal matrix (scaled
    back by 4**k) against the unrounded one, plus the exact row-scale bounds.

    Oracle eigenvalues carry an absolute error of order ORACLE_TOL * sigma_max,
    so the lambda_min comparison allows that much slack in sigma units.
    """
    st = result.stage("mc2_strict_int")
    ref = scaled_reference(result.stage("mc2_strict").system, st.certificate)
    s_ref = svd_parts(materialize(ref)[0], cap)[1]
    s_int = svd_parts(st.instance.matrix, cap)[1] / 2.0 ** st.certificate.k
    grow = 1 + 2.0 ** (-st.certificate.k + 2)
    lo, hi = row_scale_range(result)
    # 1 + 2**(2-k) rounds to 1.0 in floats once k > 54; compare exactly
    grow_exact = 1 + Fraction(2) ** (2 - int(st.certificate.k))
    floor = (s_ref[-1] - ORACLE_TOL * s_ref[0]) ** 2 / s_ref[-1] ** 2
    return [
        _row("int row scale^2 min (exact, >= 1)", float(lo), 1.0, ok=lo >= 1),
        _row("int row scale^2 max (exact)", float(hi), grow, ok=hi <= grow_exact),
        _row("int lambda_max ratio", s_int[0] ** 2 / s_ref[0] ** 2, grow * (1 + ORACLE_TOL)),
        _row("int lambda_min ratio (>=)", s_int[-1] ** 2 / s_ref[-1] ** 2, floor,
             ok=s_int[-1] ** 2 / s_ref[-1] ** 2 >= floor),
    ]


def certify_near_minimizer(inst: LsaInstance, x, oracle) -> float:
    """LSA ratio of ``x`` measured as ``||A(x - x*)|| / ||proj||``.

    Equal to ``||Ax - proj|| / ||proj||`` in exact arithmetic; evaluating the
    difference first avoids the ``u * kappa`` cancellation floor that makes
    the direct form useless below roughly 1e-10.
    """
    pnorm = float(np.linalg.norm(oracle.projection))
    d = np.asarray(x, dtype=np.float64) - oracle.minimizer
    if pnorm == 0:
        return 0.0 if not np.any(inst.matrix @ d) else float("inf")
    return float(np.linalg.norm(inst.matrix @ d)) / pnorm


def back_map_rows(result: ChainResult, seed: int = 0) -> list[ReportRow]:
    """Certify a perturbed final-stage solution, pull it back, and measure the
    LSA ratio on the input with the direct oracle check."""
    final = result.final.instance
    oracle = project_and_solve(final)
    x = perturbed_solution(final, 0.5 * final.epsilon, seed, oracle)
    r_final = certify_near_minimizer(final, x, oracle)
    x0 = result.map_back(x)
    _, ratio = check_lsa_solution(result.original, x0)
    return [_row("final-stage ratio / eps_final", r_final / final.epsilon, 1.0),
            _row("eps back-map", ratio, result.original.epsilon)]


def harness_report(result: ChainResult, cap: int = 2000, seed: int = 0) -> list[ReportRow]:
    rows: list[ReportRow] = []
    names = [s.name for s in result.stages]

    def guarded(name, fn):
        try:
            out = fn()
            rows.extend(out if isinstance(out, list) else [out])
        except ReductionError as exc:
            rows.append(ReportRow(f"{name} ({type(exc).__name__})", float("nan"),
                                  float("nan"), False))

    def zero_sums():
        check_zero_row_sums(result.instance("gz").matrix)
        return _row("gz zero row sums", 0, 0)

    def gz2_class():
        check_gz2(result.instance("gz2").matrix)
        return _row("gz2 power-of-two rows", 0, 0)

    guarded("gz zero row sums", zero_sums)
    if "gz2" in names or "mc2" in names:
        guarded("gz2 power-of-two rows", gz2_class)
    if "mc2" in names:
        st = result.stage("mc2")
        gz2 = result.instance("gz2")
        bad = row_sum_identity(st.system, gz2.matrix, gz2.rhs)
        rows.append(_row("mc2 row-sum identity violations", len(bad), 0))
        rows.append(_row("nnz growth constant",
                         nnz_growth_constant(gz2.matrix, st.instance.matrix), NNZ_GROWTH_C))

        def schur():
            dev = schur_check(st.system, gz2.matrix, cap)
            ref = np.abs((gz2.matrix.T @ gz2.matrix).toarray()).max()
            return _row("schur deviation / max|A^T A|", dev / ref, SCHUR_REL_TOL)

        def nullspace():
            expected, measured = nullspace_check(st.system, st.certificate, gz2.matrix, cap)
            return _row("null-space dimension gap", abs(expected - measured), 0)

        guarded("schur deviation", schur)
        guarded("null-space dimension", nullspace)
    if "mc2_strict" in names:
        rows.append(_row("strictness", 0 if strictness_predicate(
            result.stage("mc2_strict").system) else 1, 0))
    if "mc2_strict_int" in names:
        rows.append(_row("integer entries", 0 if is_integer_valued(
            result.stage("mc2_strict_int").instance.matrix) else 1, 0))
        guarded("integerize spectra", lambda: integerize_spectra(result, cap))
    guarded("kappa bounds", lambda: kappa_bounds(result, cap))
    guarded("eps back-map", lambda: back_map_rows(result, seed))
    return rows


def report_passed(rows: list[ReportRow]) -> bool:
    return all(r.verdict for r in rows)


def format_table(rows: list[ReportRow]) -> str:
    width = max((len(r.name) for r in rows), default=10)
    lines = [f"{'check':<{width}}  {'measured':>12}  {'bound':>12}  verdict"]
    for r in rows:
        lines.append(f"{r.name:<{width}}  {r.measured:>12.4g}  {r.bound:>12.4g}  "
                     f"{'pass' if r.verdict else 'FAIL'}")
    return "\n".join(lines)
