"""Mass-lumped virtual element solver for the 2D heat equation."""

from ._core import (
    Error,
    InstabilityError,
    Mesh,
    MeshError,
    NumericalError,
    assemble,
    generate_mesh,
    lambda_max,
    lumped_weights,
    projectors,
    read_mesh,
    run_convergence,
    run_command,
    tableau,
    write_mesh,
)

__all__ = [
    "Error",
    "InstabilityError",
    "Mesh",
    "MeshError",
    "NumericalError",
    "assemble",
    "generate_mesh",
    "lambda_max",
    "lumped_weights",
    "projectors",
    "read_mesh",
    "run_convergence",
    "run_command",
    "tableau",
    "write_mesh",
]
