"""Command-line driver for the reduction chain."""
from __future__ import annotations

import dataclasses
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from .core import (LsaInstance, measure_complexity, norm_one, parse_condition_mode)
from .errors import DegeneratePairing, OracleCapExceeded, ReductionError
from .geometry import (assemble_tv, bitstring_disjointness_check, embed_truss, system_to_tv,
                       verify_truss_rows)
from .harness import ReportRow, format_table, harness_report, report_passed
from .io import (SCHEMA_VERSION, read_matrix, read_vector, write_integer_rows, write_json,
                 write_matrix, write_vector)
from .ipm_bridge import verify_newton_system
from .mc2 import PATTERNS, Mc2System, materialize
from .pipeline import INPUT_CLASSES, TARGETS, ChainConfig, ChainResult, run_chain
from .solvers import lsd_decide

log = logging.getLogger("gslh")

EXIT_OK, EXIT_VERIFY_FAIL, EXIT_INPUT = 0, 1, 2
MAX_SEED_RETRIES = 100


def jsonable(obj):
    """Plain JSON-ready structure for certificates and records."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def exact_entries(system: Mc2System) -> list[tuple[int, int, int]]:
    """Matrix entries of an integerized system, kept as exact ints."""
    out = []
    for k, row in enumerate(system.rows):
        pu, pv, qu, qv = PATTERNS[row.kind]
        for coord, val in ((2 * row.i, pu), (2 * row.i + 1, pv),
                           (2 * row.j, qu), (2 * row.j + 1, qv)):
            if val:
                out.append((k, coord, int(row.magnitude) * int(val)))
    return out


def typed_edges(system: Mc2System) -> list[dict]:
    return [{"kind": r.kind, "i": r.i, "j": r.j, "magnitude": r.magnitude,
             "weight_sq": r.weight_sq, "rhs": r.rhs, "source": r.source, "role": r.role}
            for r in system.rows]


def _complexity(inst: LsaInstance, mode, cap: int):
    try:
        return dataclasses.asdict(measure_complexity(inst, mode, cap))
    except OracleCapExceeded:
        return None


def embed_with_retry(system, cert, seed: int, A_l1: float):
    """Embed, moving to the next seed whenever a pairing degenerates."""
    for attempt in range(MAX_SEED_RETRIES):
        try:
            return embed_truss(system, cert, seed + attempt, A_l1), attempt
        except DegeneratePairing as exc:
            log.warning("seed %d: %s; retrying with seed %d", seed + attempt, exc,
                        seed + attempt + 1)
    raise DegeneratePairing(f"no usable seed in {MAX_SEED_RETRIES} attempts from {seed}")


def write_outputs(result: ChainResult, config: ChainConfig, out: Path) -> list[ReportRow]:
    """Write every stage and return extra report rows for geometry and TV."""
    out.mkdir(parents=True, exist_ok=True)
    mode, cap = config.condition_mode, config.oracle_cap
    stages = []
    for st in result.stages:
        if st.name == "mc2_strict_int":
            write_integer_rows(out / f"{st.name}.mtx", st.instance.shape, exact_entries(st.system))
        else:
            write_matrix(out / f"{st.name}.mtx", st.instance.matrix)
        write_vector(out / f"{st.name}.rhs", st.instance.rhs)
        entry = {"name": st.name, "shape": list(st.instance.shape),
                 "nnz": int(st.instance.matrix.nnz), "epsilon": st.instance.epsilon,
                 "complexity": _complexity(st.instance, mode, cap),
                 "certificate": jsonable(st.certificate)}
        if st.system is not None:
            write_json(out / f"{st.name}.edges.json",
                       {"schema_version": SCHEMA_VERSION, "num_blocks": st.system.num_blocks,
                        "alpha": st.system.alpha, "edges": typed_edges(st.system)})
        stages.append(entry)
    write_json(out / "certificate.json", {
        "schema_version": SCHEMA_VERSION,
        "config": jsonable(config),
        "input": {"shape": list(result.original.shape),
                  "complexity": _complexity(result.original, mode, cap)},
        "stages": stages,
    })

    rows: list[ReportRow] = []
    if config.target in ("truss", "tv"):
        mc2 = result.stage("mc2")
        if config.target == "truss":
            A_l1 = norm_one(result.instance("gz2").matrix)
            geom, retries = embed_with_retry(mc2.system, mc2.certificate, config.seed, A_l1)
            write_json(out / "geometry.json", {
                "schema_version": SCHEMA_VERSION, "seed": geom.seed, "retries": retries,
                "radius": geom.radius, "precision": geom.precision, "layout": geom.layout,
                "coords": geom.coords})
            if config.verify:
                rows.append(ReportRow("truss row deviation", verify_truss_rows(mc2.system, geom),
                                      1e-8, verify_truss_rows(mc2.system, geom) <= 1e-8))
                ok = bitstring_disjointness_check(mc2.certificate, raise_on_fail=False)
                rows.append(ReportRow("bitstring disjointness", 0 if ok else 1, 0, ok))
        else:
            decomp = system_to_tv(mc2.system)
            write_json(out / "tv.json", {
                "schema_version": SCHEMA_VERSION,
                "groups": [{"coords": list(g.coords), "N": g.N, "W": np.diag(g.W),
                            "r": g.r} for g in decomp.groups]})
            if config.verify:
                B, _ = materialize(mc2.system)
                gram = (B.T @ B).toarray()
                dev = np.abs(assemble_tv(decomp, mc2.system.num_coords) - gram).max()
                rel = float(dev / max(np.abs(gram).max(), 1.0))
                rows.append(ReportRow("tv sum deviation / max|B^T B|", rel, 1e-8, rel <= 1e-8))
                min_eig = min((np.linalg.eigvalsh(g.W - np.outer(g.r, g.r)).min()
                               for g in decomp.groups), default=0.0)
                rows.append(ReportRow("tv min eig(W - rr^T)", float(min_eig), -1e-12,
                                      bool(min_eig >= -1e-12)))
    if config.verify and "mc2_strict" in [s.name for s in result.stages]:
        strict = result.stage("mc2_strict").system
        B, _ = materialize(strict)
        scale = max(float(abs(B.T @ B).max()), 1.0)
        try:
            rel = verify_newton_system(strict, cap=cap) / scale
            rows.append(ReportRow("newton system deviation / max|B^T B|", rel, 1e-8, rel <= 1e-8))
        except ReductionError as exc:
            rows.append(ReportRow(f"newton system ({type(exc).__name__})", float("nan"),
                                  1e-8, False))
    return rows


def _seed(seed: int) -> int:
    env = os.environ.get("GSLH_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise click.BadParameter(f"GSLH_SEED={env!r} is not an integer")
    return seed


def _load(matrix: str, rhs: str, epsilon: float) -> LsaInstance:
    return LsaInstance(read_matrix(matrix), read_vector(rhs), epsilon)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    """Reduce integer linear systems to 2-commodity Laplacian systems."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)


@main.command("run")
@click.argument("matrix", type=click.Path(dir_okay=False))
@click.argument("rhs", type=click.Path(dir_okay=False))
@click.option("--target", type=click.Choice(TARGETS), default="mc2", show_default=True)
@click.option("--epsilon", type=float, default=0.5, show_default=True)
@click.option("--alpha", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Random seed (GSLH_SEED overrides).")
@click.option("--condition-mode", default="bound", show_default=True,
              help="exact, bound or declared:<K>.")
@click.option("--verify", is_flag=True, help="Run the verification harness.")
@click.option("--oracle-cap", type=int, default=2000, show_default=True)
@click.option("--input-class", type=click.Choice(INPUT_CLASSES), default="g",
              show_default=True, help="Start the chain at a later class.")
@click.option("--keep-zero-column", is_flag=True,
              help="Allow an all-zero appended column in the zero-row-sum stage.")
@click.option("--out-dir", type=click.Path(file_okay=False), default="gslh_out",
              show_default=True)
def run_cmd(matrix, rhs, target, epsilon, alpha, seed, condition_mode, verify, oracle_cap,
            input_class, keep_zero_column, out_dir):
    """Run the chain up to TARGET and write systems, certificates and report."""
    try:
        config = ChainConfig(target=target, epsilon=epsilon, alpha=alpha, seed=_seed(seed),
                             condition_mode=parse_condition_mode(condition_mode),
                             verify=verify, oracle_cap=oracle_cap,
                             keep_zero_column=keep_zero_column, input_class=input_class)
        inst = _load(matrix, rhs, epsilon)
        result = run_chain(inst, config)
        out = Path(out_dir)
        extra = write_outputs(result, config, out)
    except (ReductionError, ValueError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INPUT)

    if not verify:
        click.echo(f"wrote {len(result.stages)} stage(s) to {out}")
        sys.exit(EXIT_OK)
    rows = harness_report(result, oracle_cap, config.seed) + extra
    passed = report_passed(rows)
    write_json(out / "report.json", {"schema_version": SCHEMA_VERSION, "passed": passed,
                                     "rows": [r.as_dict() for r in rows]})
    click.echo(format_table(rows))
    sys.exit(EXIT_OK if passed else EXIT_VERIFY_FAIL)


@main.command("lsd")
@click.argument("matrix", type=click.Path(dir_okay=False))
@click.argument("rhs", type=click.Path(dir_okay=False))
@click.option("--epsilon", type=float, default=0.5, show_default=True)
@click.option("--oracle-cap", type=int, default=2000, show_default=True)
def lsd_cmd(matrix, rhs, epsilon, oracle_cap):
    """Decide whether RHS lies (approximately) in the image of MATRIX."""
    try:
        verdict = lsd_decide(_load(matrix, rhs, epsilon), oracle_cap)
    except (ReductionError, ValueError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    click.echo(f"{verdict.answer} {verdict.achieved_ratio:.17g}")


if __name__ == "__main__":
    main()
