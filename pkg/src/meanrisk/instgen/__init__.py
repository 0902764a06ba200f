"""Grid instance generation and the instance/solution file formats."""

from meanrisk.instgen.fileio import (
    InstanceDocument,
    parse,
    read_instance,
    serialize,
    solution_record,
    write_instance,
    write_solution,
)
from meanrisk.instgen.grid import (
    Explicit,
    GridInstance,
    GridSpec,
    HalfRows,
    MeanCostScaled,
    generate_grid,
)


def grid_document(spec: GridSpec) -> InstanceDocument:
    g = generate_grid(spec)
    return InstanceDocument("interdiction", g.omega, g.cov, g.epsilon, network=g.network)


__all__ = [
    "Explicit",
    "GridInstance",
    "GridSpec",
    "HalfRows",
    "InstanceDocument",
    "MeanCostScaled",
    "generate_grid",
    "grid_document",
    "parse",
    "read_instance",
    "serialize",
    "solution_record",
    "write_instance",
    "write_solution",
]
