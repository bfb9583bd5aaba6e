"""Turn triangle meshes into brick layouts and layered build instructions."""
from .bricks import (
    BrickKind,
    CoverageMatrix,
    Gap,
    GapSet,
    Inventory,
    Placement,
    Strip,
    ValidationReport,
    coverage,
    enumerate_placements,
    validate_partition,
)
from .exact import ExactResult, RemainderTable, lp_int, solve_exact
from .matheuristic import (
    BuildList,
    CostParams,
    aligned_gap_pairs,
    gap_penalty,
    merge,
    multiplicity,
    optimize,
    place_strip,
    remainder_count,
    segment,
)
from .mesh import TriangleMesh, VoxelGrid, parse_mesh, voxelize

__version__ = "0.1.0"
