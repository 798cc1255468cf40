"""Compose the reduction stages and their solution maps."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import scipy.sparse as sp

from .core import DEFAULT_ORACLE_CAP, ConditionMode, LsaInstance
from .integerize import integerize, mapback_int
from .mc2 import Mc2System, mapback_mc2, materialize, reduce_gz2_to_mc2
from .preprocess import (Gz2Instance, GzInstance, check_gz2, check_zero_row_sums, mapback_gz,
                         mapback_gz2, reduce_g_to_gz, reduce_gz_to_gz2)
from .strictify import mapback_strict, strictify

INPUT_CLASSES = ("g", "gz", "gz2")
TARGETS = ("gz", "gz2", "mc2", "mc2_strict", "mc2_strict_int", "truss", "tv")
STAGE_ORDER = ("gz", "gz2", "mc2", "mc2_strict", "mc2_strict_int")


@dataclass
class ChainConfig:
    target: str = "mc2"
    epsilon: float = 0.5
    alpha: float = 1.0
    seed: int = 0
    condition_mode: ConditionMode = "bound"
    verify: bool = False
    oracle_cap: int = DEFAULT_ORACLE_CAP
    keep_zero_column: bool = False
    input_class: str = "g"   # start later in the chain when the input already qualifies

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if self.input_class not in INPUT_CLASSES:
            raise ValueError(f"unknown input class {self.input_class!r}")
        if self.target in STAGE_ORDER and \
                STAGE_ORDER.index(self.target) < INPUT_CLASSES.index(self.input_class):
            raise ValueError(f"target {self.target} precedes input class {self.input_class}")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.oracle_cap < 1:
            raise ValueError("oracle cap must be positive")


@dataclass
class Stage:
    name: str
    instance: LsaInstance
    certificate: Any
    mapback: Callable[[np.ndarray], np.ndarray]
    system: Mc2System | None = None


@dataclass
class ChainResult:
    original: LsaInstance
    stages: list[Stage] = field(default_factory=list)
    mc2_certificate: Any = None

    @property
    def final(self) -> Stage:
        return self.stages[-1]

    def stage(self, name: str) -> Stage:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def instance(self, name: str) -> LsaInstance:
        """Instance of stage ``name``, or the input when the chain started
        past that stage."""
        try:
            return self.stage(name).instance
        except KeyError:
            return self.original

    def map_back(self, x, upto: str | None = None) -> np.ndarray:
        """Pull a solution of stage ``upto`` (default: last) back to the input."""
        names = [s.name for s in self.stages]
        last = names.index(upto) if upto else len(names) - 1
        for s in reversed(self.stages[:last + 1]):
            x = s.mapback(x)
        return x


def _mc2_instance(system: Mc2System, eps: float) -> LsaInstance:
    B, rhs = materialize(system)
    return LsaInstance(B, rhs, eps)


def run_chain(inst: LsaInstance, config: ChainConfig) -> ChainResult:
    """Apply the stages G -> Gz -> Gz2 -> MC2 -> strict -> integer up to the
    configured target (truss and tv targets stop at MC2)."""
    mode, cap = config.condition_mode, config.oracle_cap
    stop = config.target if config.target in STAGE_ORDER else "mc2"
    result = ChainResult(original=inst)

    base = LsaInstance(inst.matrix, inst.rhs, config.epsilon)
    result.original = base
    if config.input_class == "g":
        gz, gz_cert = reduce_g_to_gz(base, mode, keep_zero_column=config.keep_zero_column,
                                     cap=cap)
        n = inst.shape[1]
        result.stages.append(Stage("gz", gz.inner, gz_cert, lambda x, n=n: mapback_gz(n, x)))
        if stop == "gz":
            return result
    else:
        check_zero_row_sums(base.matrix)
        gz = GzInstance(base)

    if config.input_class in ("g", "gz"):
        gz2, gz2_cert = reduce_gz_to_gz2(gz, mode, cap)
        AZ, cZ = gz.inner.matrix, gz.inner.rhs
        result.stages.append(Stage("gz2", gz2.inner, gz2_cert,
                                   lambda x, A=AZ, c=cZ: mapback_gz2(A, c, x)))
        if stop == "gz2":
            return result
    else:
        check_gz2(base.matrix)
        gz2 = Gz2Instance(base)

    system, mc2_cert = reduce_gz2_to_mc2(gz2, config.alpha, mode, cap)
    result.mc2_certificate = mc2_cert
    A2, c2 = gz2.inner.matrix, gz2.inner.rhs
    mc2_inst = _mc2_instance(system, mc2_cert.eps_out)
    result.stages.append(Stage("mc2", mc2_inst, mc2_cert,
                               lambda x, A=A2, c=c2, nb=system.num_blocks:
                               mapback_mc2(A, c, x, nb), system))
    if stop == "mc2":
        return result

    strict, strict_cert = strictify(system, mc2_inst.rhs, mc2_cert.eps_out, mode, cap)
    strict_inst = _mc2_instance(strict, strict_cert.eps_out)
    Bm, cm = mc2_inst.matrix, mc2_inst.rhs
    result.stages.append(Stage("mc2_strict", strict_inst, strict_cert,
                               lambda x, B=Bm, c=cm: mapback_strict(B, c, x), strict))
    if stop == "mc2_strict":
        return result

    int_system, int_rhs, int_cert = integerize(strict, strict_inst.rhs, strict_cert.eps_out)
    B_int, _ = materialize(int_system)
    int_inst = LsaInstance(B_int, int_rhs, int_cert.eps_out)
    result.stages.append(Stage("mc2_strict_int", int_inst, int_cert, mapback_int,
                               int_system))
    return result


def is_integer_valued(M: sp.spmatrix) -> bool:
    data = sp.csr_matrix(M).data
    return bool(np.all(data == np.round(data)))
