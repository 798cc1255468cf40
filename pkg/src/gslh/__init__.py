"""Reductions from integer linear systems to 2-commodity Laplacian systems,
with solution back-mapping and a verification harness."""
from .core import LsaInstance, check_lsa_solution, project_and_solve
from .pipeline import ChainConfig, ChainResult, run_chain

__version__ = "0.1.0"

__all__ = ["LsaInstance", "check_lsa_solution", "project_and_solve",
           "ChainConfig", "ChainResult", "run_chain"]
