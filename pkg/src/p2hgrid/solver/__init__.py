"""LP solving, interchange-file export and solver-independent auditing."""

from .audit import ResidualReport, check_solution
from .mps import read_mps, write_mps
from .simplex import LPSolution, LPStatus, SolverOptions, solve

export_interchange = write_mps

__all__ = [
    "LPSolution",
    "LPStatus",
    "ResidualReport",
    "SolverOptions",
    "check_solution",
    "export_interchange",
    "read_mps",
    "solve",
    "write_mps",
]
