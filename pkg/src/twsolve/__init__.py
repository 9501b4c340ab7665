"""twsolve: closed-form traveling-wave solutions for coupled evolution systems.

The pipeline reduces a coupled system to ODEs along xi = x + lambda*t,
expands the unknowns as polynomials in an auxiliary function phi with
phi' = phi^2 + k, balances the degrees, collects the coefficient
equations, solves them exactly over the rationals, and verifies every
assembled closed form symbolically and numerically.
"""

__version__ = "1.0.0"

from .pde_parser import ParseError, PDESystem, parse_system, render_expr
from .pipeline import (PipelineConfig, PipelineError, builtin_source,
                       run_balance, run_catalog, run_reduce, run_solve)
from .solutions import BranchKind

__all__ = [
    "__version__", "ParseError", "PDESystem", "parse_system", "render_expr",
    "PipelineConfig", "PipelineError", "builtin_source",
    "run_balance", "run_catalog", "run_reduce", "run_solve", "BranchKind",
]
