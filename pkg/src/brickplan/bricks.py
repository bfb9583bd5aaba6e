"""Brick kinds, placements, strips and the placement/voxel coverage relation."""
from __future__ import annotations

import bisect
import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .errors import ContractError, InventoryError
from .mesh import Cell, VoxelGrid

AXES = ("X", "Y")


@dataclass(frozen=True, order=True)
class BrickKind:
    width: int
    length: int

    def __post_init__(self):
        if self.width not in (1, 2):
            raise InventoryError(f"brick width must be 1 or 2, got {self.width}")
        if self.length < self.width:
            raise InventoryError(f"brick length {self.length} shorter than width {self.width}")

    @property
    def area(self) -> int:
        return self.width * self.length

    @property
    def square(self) -> bool:
        return self.width == self.length

    def __str__(self) -> str:
        return f"{self.width}x{self.length}"


DEFAULT_KINDS = tuple(
    BrickKind(w, l) for w, l in [(1, 1), (1, 2), (1, 3), (1, 4), (1, 6), (1, 8), (2, 2), (2, 4)]
)


@dataclass(frozen=True)
class Inventory:
    kinds: tuple[BrickKind, ...] = DEFAULT_KINDS

    def __post_init__(self):
        kinds = tuple(self.kinds)
        if not kinds:
            raise InventoryError("inventory is empty")
        if len(set(kinds)) != len(kinds):
            raise InventoryError("inventory lists a brick kind twice")
        if BrickKind(1, 1) not in kinds:
            raise InventoryError("inventory must contain a 1x1 brick")
        object.__setattr__(self, "kinds", kinds)

    @classmethod
    def of(cls, *sizes: tuple[int, int]) -> "Inventory":
        return cls(tuple(BrickKind(w, l) for w, l in sizes))

    @property
    def l0(self) -> int:
        return max(k.length for k in self.kinds)

    @property
    def strip_lengths(self) -> tuple[int, ...]:
        """Lengths of the 1-wide kinds, longest first."""
        return tuple(sorted((k.length for k in self.kinds if k.width == 1), reverse=True))

    @property
    def strip_l0(self) -> int:
        return self.strip_lengths[0]

    def index(self, kind: BrickKind) -> int:
        return self.kinds.index(kind)

    def find(self, width: int, length: int) -> BrickKind | None:
        for k in self.kinds:
            if k.width == width and k.length == length:
                return k
        return None

    def to_json(self) -> list:
        return [{"width": k.width, "length": k.length} for k in self.kinds]

    @classmethod
    def from_json(cls, doc) -> "Inventory":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        if not isinstance(doc, list):
            raise InventoryError("inventory file must hold a JSON list of {width, length}")
        try:
            return cls(tuple(BrickKind(int(d["width"]), int(d["length"])) for d in doc))
        except (KeyError, TypeError, ValueError) as exc:
            raise InventoryError(f"bad inventory entry: {exc}") from exc


@dataclass(frozen=True, order=True)
class Placement:
    """A brick at ``origin`` (its minimum corner) with length running along ``axis``.

    Square kinds are normalized to axis X so each footprint has one spelling.
    """

    origin: Cell
    kind: BrickKind
    axis: str = "X"

    def __post_init__(self):
        if self.axis not in AXES:
            raise ContractError(f"axis must be 'X' or 'Y', got {self.axis!r}")
        object.__setattr__(self, "origin", tuple(int(c) for c in self.origin))
        if self.kind.square and self.axis != "X":
            object.__setattr__(self, "axis", "X")

    @property
    def z(self) -> int:
        return self.origin[2]

    @property
    def extent(self) -> tuple[int, int]:
        """Footprint size as (dx, dy)."""
        if self.axis == "X":
            return self.kind.length, self.kind.width
        return self.kind.width, self.kind.length

    def cells(self) -> list[Cell]:
        x0, y0, z = self.origin
        dx, dy = self.extent
        return [(x0 + i, y0 + j, z) for j in range(dy) for i in range(dx)]

    def inside(self, dims) -> bool:
        x0, y0, z = self.origin
        dx, dy = self.extent
        return (
            x0 >= 0 and y0 >= 0 and 0 <= z < dims[2]
            and x0 + dx <= dims[0] and y0 + dy <= dims[1]
        )

    def sort_key(self, inv: Inventory | None = None):
        x, y, z = self.origin
        k = inv.index(self.kind) if inv is not None and self.kind in inv.kinds else (self.kind.width, self.kind.length)
        return (z, y, x, k, self.axis)

    def to_json(self) -> dict:
        x, y, z = self.origin
        return {"x": x, "y": y, "z": z, "axis": self.axis,
                "width": self.kind.width, "length": self.kind.length}

    @classmethod
    def from_json(cls, d: dict) -> "Placement":
        return cls((int(d["x"]), int(d["y"]), int(d["z"])),
                   BrickKind(int(d["width"]), int(d["length"])), str(d["axis"]))


@dataclass(frozen=True)
class Strip:
    """A maximal 1-wide run of occupied cells in one layer.

    ``row`` is the coordinate perpendicular to ``axis``; ``start`` is the
    lowest coordinate along the axis and ``length`` the run length.
    """

    layer: int
    axis: str
    row: int
    start: int
    length: int

    @property
    def anchor(self) -> Cell:
        return self.cell_at(self.start)

    @property
    def end(self) -> int:
        return self.start + self.length

    def cell_at(self, coord: int) -> Cell:
        if self.axis == "X":
            return (coord, self.row, self.layer)
        return (self.row, coord, self.layer)

    @property
    def run(self) -> list[Cell]:
        return [self.cell_at(c) for c in range(self.start, self.end)]


@dataclass(frozen=True, order=True)
class Gap:
    """Seam between two consecutive bricks of a strip, at ``coord`` along ``axis``."""

    layer: int
    axis: str
    row: int
    coord: int

    def segment(self) -> tuple[float, float, float, float]:
        """Plan-view extent as (x0, x1, y0, y1)."""
        if self.axis == "X":
            return (self.coord, self.coord, self.row, self.row + 1)
        return (self.row, self.row + 1, self.coord, self.coord)


def border_segment(layer_axis: str, row: int, coord: int) -> tuple[int, int, int, int]:
    """Plan-view segment (x0, x1, y0, y1) of a seam at ``coord`` in strip ``row``."""
    return Gap(0, layer_axis, row, coord).segment()


class GapSet:
    """Recorded seams, indexed for nearest-seam queries.

    A prospective seam in strip ``row`` of layer ``z`` is compared against
    the seams of the two neighbouring parallel strips in the same layer and
    against every seam of the closest lower layer whose strips run the same
    way (``z - 1`` if axes do not alternate, ``z - 2`` if they do). Distance
    is measured between plan-view seam segments.

    ``layer_axes`` maps layer to strip axis; layers missing from it take the
    axis of their recorded seams.
    """

    def __init__(self, gaps: Iterable[Gap] = (), layer_axes: dict[int, str] | None = None):
        self.layer_axes: dict[int, str] = dict(layer_axes or {})
        self._gaps: set[Gap] = set()
        self._rows: dict[tuple[int, str, int], list[int]] = {}
        self._layer_cache: dict[int, np.ndarray] = {}
        for g in gaps:
            self.add(g)

    def add(self, gap: Gap) -> None:
        if gap in self._gaps:
            return
        self._gaps.add(gap)
        self.layer_axes.setdefault(gap.layer, gap.axis)
        bisect.insort(self._rows.setdefault((gap.layer, gap.axis, gap.row), []), gap.coord)
        self._layer_cache.pop(gap.layer, None)

    def __len__(self) -> int:
        return len(self._gaps)

    def __iter__(self):
        return iter(sorted(self._gaps))

    def __contains__(self, gap) -> bool:
        return gap in self._gaps

    def __eq__(self, other) -> bool:
        return isinstance(other, GapSet) and self._gaps == other._gaps

    def in_layer(self, z: int) -> list[Gap]:
        return sorted(g for g in self._gaps if g.layer == z)

    def parallel_below(self, layer: int, axis: str) -> int | None:
        """Closest layer under ``layer`` laid along ``axis``."""
        for z in range(layer - 1, -1, -1):
            if self.layer_axes.get(z) == axis:
                return z
        return None

    def _layer_segments(self, z: int) -> np.ndarray:
        segs = self._layer_cache.get(z)
        if segs is None:
            segs = np.array([g.segment() for g in self.in_layer(z)], dtype=float).reshape(-1, 4)
            self._layer_cache[z] = segs
        return segs

    def distance(self, layer: int, axis: str, row: int, coord: int) -> float:
        """Distance from a prospective seam to the closest relevant recorded seam (inf if none)."""
        best = math.inf
        for r in (row - 1, row + 1):
            coords = self._rows.get((layer, axis, r))
            if coords:
                i = bisect.bisect_left(coords, coord)
                if i < len(coords):
                    best = min(best, coords[i] - coord)
                if i > 0:
                    best = min(best, coord - coords[i - 1])
        z = self.parallel_below(layer, axis)
        below = self._layer_segments(z) if z is not None else ()
        if len(below):
            x0, x1, y0, y1 = border_segment(axis, row, coord)
            dx = np.maximum(0.0, np.maximum(below[:, 0] - x1, x0 - below[:, 1]))
            dy = np.maximum(0.0, np.maximum(below[:, 2] - y1, y0 - below[:, 3]))
            best = min(best, float(np.sqrt(dx * dx + dy * dy).min()))
        return best


def enumerate_placements(grid: VoxelGrid, inv: Inventory) -> list[Placement]:
    """Every placement of every inventory kind that sits only on occupied cells.

    Ordered by (z, y, x, kind index, axis).
    """
    occ = grid.occupancy
    nx, ny, nz = occ.shape
    c = np.pad(occ.astype(np.int32), ((1, 0), (1, 0), (0, 0))).cumsum(0).cumsum(1)
    out: list[Placement] = []
    for k in inv.kinds:
        axes = ("X",) if k.square else AXES
        for axis in axes:
            dx, dy = (k.length, k.width) if axis == "X" else (k.width, k.length)
            if dx > nx or dy > ny:
                continue
            # a footprint fits where the box-sum of the occupancy equals its area
            s = c[dx:, dy:] - c[:-dx, dy:] - c[dx:, :-dy] + c[:-dx, :-dy]
            for x, y, z in np.argwhere(s == dx * dy):
                out.append(Placement((int(x), int(y), int(z)), k, axis))
    out.sort(key=lambda p: p.sort_key(inv))
    return out


@dataclass(frozen=True)
class CoverageMatrix:
    """Sparse 0/1 matrix with one row per placement and one column per voxel."""

    placements: tuple[Placement, ...]
    voxels: tuple[Cell, ...]
    matrix: sparse.csr_matrix

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()


def coverage(placements: Sequence[Placement], grid: VoxelGrid) -> CoverageMatrix:
    voxels = tuple(grid.cells())
    col = {v: i for i, v in enumerate(voxels)}
    rows, cols = [], []
    for r, p in enumerate(placements):
        if not p.inside(grid.dims):
            raise ContractError(f"placement {p} lies outside grid {grid.dims}")
        for cell in p.cells():
            if cell not in col:
                raise ContractError(f"placement {p} covers unoccupied cell {cell}")
            rows.append(r)
            cols.append(col[cell])
    data = np.ones(len(rows), dtype=np.int8)
    m = sparse.csr_matrix((data, (rows, cols)), shape=(len(placements), len(voxels)))
    return CoverageMatrix(tuple(placements), voxels, m)


@dataclass(frozen=True)
class ValidationReport:
    uncovered: tuple[Cell, ...] = ()
    doubly_covered: tuple[Cell, ...] = ()
    overhanging: tuple[Placement, ...] = ()

    @property
    def ok(self) -> bool:
        return not (self.uncovered or self.doubly_covered or self.overhanging)

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return not self.ok

    def summary(self) -> str:
        if self.ok:
            return "exact partition"
        return (f"{len(self.uncovered)} uncovered, {len(self.doubly_covered)} doubly covered, "
                f"{len(self.overhanging)} overhanging")

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "uncovered": [list(c) for c in self.uncovered],
            "doubly_covered": [list(c) for c in self.doubly_covered],
            "overhanging": [p.to_json() for p in self.overhanging],
        }


def validate_partition(placements: Iterable[Placement], grid: VoxelGrid) -> ValidationReport:
    """Check that every occupied voxel is covered exactly once and nothing hangs off it."""
    hits: Counter = Counter()
    overhanging = []
    for p in placements:
        cells = p.cells()
        if any(c not in grid for c in cells):
            overhanging.append(p)
        hits.update(c for c in cells if c in grid)
    zyx = lambda c: (c[2], c[1], c[0])
    uncovered = tuple(c for c in grid.cells() if hits[c] == 0)
    doubly = tuple(sorted((c for c, n in hits.items() if n > 1), key=zyx))
    return ValidationReport(uncovered, doubly, tuple(overhanging))
