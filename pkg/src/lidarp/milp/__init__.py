from lidarp.milp.model import (
    BINARY,
    CONTINUOUS,
    LinearConstraint,
    MilpModel,
    MilpSolution,
    NameCollision,
    SolveStatus,
    Variable,
)
from lidarp.milp.lpio import export_lp, import_solution
from lidarp.milp.simplex import LpResult, solve_lp
from lidarp.milp.bnb import BnbConfig, solve_bb

__all__ = [
    "BINARY",
    "CONTINUOUS",
    "BnbConfig",
    "LinearConstraint",
    "LpResult",
    "MilpModel",
    "MilpSolution",
    "NameCollision",
    "SolveStatus",
    "Variable",
    "export_lp",
    "import_solution",
    "solve_bb",
    "solve_lp",
]
