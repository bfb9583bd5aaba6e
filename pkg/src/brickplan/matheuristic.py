"""Three-stage brick layout heuristic.

1. Cut every layer into maximal 1-wide strips, alternating the strip axis
   between layers so consecutive layers cross.
2. Fill each strip greedily: at the fill frontier, price every 1-wide brick
   that still fits and take the cheapest. The price adds a preference for long
   bricks, an estimate of how many bricks the rest of the strip will need
   (exact change-making below a threshold, a long-brick count above it), a
   penalty for putting a seam near an already recorded seam, and a small
   random jitter.
3. Merge side-by-side 1xN bricks of equal span into 2xN bricks.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bricks import BrickKind, Gap, GapSet, Inventory, Placement, Strip, validate_partition
from .errors import ContractError, PlanValidationError
from .exact import RemainderTable
from .mesh import VoxelGrid

Trace = Callable[[dict], None]


@dataclass(frozen=True)
class CostParams:
    rho: int = 8
    gamma1: float = 2.0
    gamma2: float = 1.0
    epsilon_scale: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.rho < 0:
            raise ContractError("rho must be >= 0")
        if self.gamma1 < 0:
            raise ContractError("gamma1 must be >= 0")
        if not self.gamma2 > 0:
            raise ContractError("gamma2 must be > 0")
        if self.epsilon_scale < 0:
            raise ContractError("epsilon_scale must be >= 0")

    @classmethod
    def from_json(cls, doc) -> "CostParams":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        if not isinstance(doc, dict):
            raise ContractError("params file must hold a JSON object")
        unknown = set(doc) - {"rho", "gamma1", "gamma2", "epsilon_scale", "seed"}
        if unknown:
            raise ContractError(f"unknown params: {sorted(unknown)}")
        try:
            kw = {k: (int(v) if k in ("rho", "seed") else float(v)) for k, v in doc.items()}
        except (TypeError, ValueError) as exc:
            raise ContractError(f"bad params value: {exc}") from exc
        return cls(**kw)

    def to_json(self) -> dict:
        return {"rho": self.rho, "gamma1": self.gamma1, "gamma2": self.gamma2,
                "epsilon_scale": self.epsilon_scale, "seed": self.seed}


@dataclass
class BuildList:
    placements: tuple[Placement, ...]
    gaps: GapSet | None = field(default=None, compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.placements)

    def __iter__(self):
        return iter(self.placements)


def layer_axis(z: int, rule: str | Callable[[int], str] = "alternate") -> str:
    if callable(rule):
        return rule(z)
    if rule == "alternate":
        return "X" if z % 2 == 0 else "Y"
    if rule == "alternate-y":
        return "Y" if z % 2 == 0 else "X"
    if rule in ("X", "Y"):
        return rule
    raise ContractError(f"unknown layer axis rule {rule!r}")


def segment(grid: VoxelGrid, layer_axis_rule: str | Callable[[int], str] = "alternate"):
    """Split every layer into maximal 1-wide runs along that layer's axis.

    Strips come bottom layer first, then by row (the coordinate across the
    axis), then by start. Returns the strips and an empty GapSet that knows
    each layer's axis.
    """
    strips: list[Strip] = []
    axes = {}
    for z in range(grid.dims[2]):
        axis = axes[z] = layer_axis(z, layer_axis_rule)
        plane = grid.layer(z)  # [x, y]
        # rows[r] is the occupancy along the axis for row r
        rows = plane.T if axis == "X" else plane
        for r, line in enumerate(rows):
            padded = np.concatenate(([False], line, [False])).astype(np.int8)
            edges = np.flatnonzero(np.diff(padded))
            for start, stop in zip(edges[::2], edges[1::2]):
                strips.append(Strip(z, axis, r, int(start), int(stop - start)))
    return strips, GapSet(layer_axes=axes)


def multiplicity(l_b: int, l0: int) -> float:
    """Relative cost of a brick of length ``l_b``: 1 for the longest brick, more for shorter."""
    if l_b < 1 or l0 < l_b:
        raise ContractError(f"need 1 <= l_b <= l0, got l_b={l_b}, l0={l0}")
    return l0 / l_b


def remainder_count(
    L: int,
    l0: int,
    rho: int,
    inv: Inventory | Sequence[int],
    table: RemainderTable | None = None,
) -> int:
    """Estimated bricks needed for ``L`` remaining cells.

    Below ``rho`` the count is exact. From ``rho`` up, the part beyond ``rho``
    is charged at one longest brick per ``l0`` cells and only the last ``rho``
    cells are solved exactly.
    """
    if L < 0:
        raise ContractError(f"remaining length must be >= 0, got {L}")
    if table is None:
        lengths = inv.strip_lengths if isinstance(inv, Inventory) else inv
        table = RemainderTable(lengths, max(L, rho))
    if L >= rho:
        return -(-(L - rho) // l0) + table(rho)
    return table(L)


def stagger_penalty(d: float, gamma1: float, gamma2: float) -> float:
    if math.isinf(d) or gamma1 == 0:
        return 0.0
    return gamma1 * math.exp(-gamma2 * d)


def gap_penalty(
    b: Placement,
    gaps: GapSet,
    gamma1: float,
    gamma2: float,
    strip_end: int | None = None,
) -> float:
    """Seam-alignment penalty for candidate ``b``.

    ``b`` creates a seam at its far end unless that end is the strip end
    (``strip_end``), in which case there is nothing to penalize.
    """
    x, y, z = b.origin
    start, row = (x, y) if b.axis == "X" else (y, x)
    border = start + b.kind.length
    if strip_end is not None and border >= strip_end:
        return 0.0
    return stagger_penalty(gaps.distance(z, b.axis, row, border), gamma1, gamma2)


def place_strip(
    strip: Strip,
    inv: Inventory,
    gaps: GapSet,
    params: CostParams,
    rng: random.Random,
    table: RemainderTable | None = None,
    trace: Trace | None = None,
) -> tuple[list[Placement], GapSet]:
    """Fill one strip from its low end, one cheapest brick at a time.

    Seams between consecutive bricks are added to ``gaps`` (in place) once
    the strip is done; the same object is returned.
    """
    if strip.length < 1:
        raise ContractError("strip must be non-empty")
    lengths = inv.strip_lengths
    l0 = lengths[0]
    if table is None:
        table = RemainderTable(lengths, max(strip.length, params.rho))

    placed: list[Placement] = []
    seams: list[int] = []
    frontier = strip.start
    while frontier < strip.end:
        L = strip.end - frontier
        best = None
        records = []
        for l in lengths:
            if l > L:
                continue
            M = multiplicity(l, l0)
            N = remainder_count(L - l, l0, params.rho, lengths, table)
            border = frontier + l
            if border < strip.end:
                d = gaps.distance(strip.layer, strip.axis, strip.row, border)
                D = stagger_penalty(d, params.gamma1, params.gamma2)
            else:
                d, D = math.inf, 0.0
            e = rng.uniform(0.0, params.epsilon_scale) if params.epsilon_scale > 0 else 0.0
            F = M + N + D + e
            if trace is not None:
                records.append({"length": l, "M": M, "N": N, "D": D, "e": e, "F": F,
                                "d": None if math.isinf(d) else d})
            if best is None or F < best[0]:
                best = (F, l)
        if best is None:
            raise AssertionError("no brick fits the strip; inventory lost its 1x1")
        l = best[1]
        if trace is not None:
            trace({"layer": strip.layer, "axis": strip.axis, "row": strip.row,
                   "start": strip.start, "frontier": frontier, "remaining": L,
                   "candidates": records, "chosen": l})
        placed.append(Placement(strip.cell_at(frontier), BrickKind(1, l), strip.axis))
        frontier += l
        if frontier < strip.end:
            seams.append(frontier)
    for c in seams:
        gaps.add(Gap(strip.layer, strip.axis, strip.row, c))
    return placed, gaps


def _rect(p: Placement) -> tuple[int, int, int, int]:
    x, y, _ = p.origin
    dx, dy = p.extent
    return x, y, dx, dy


def _fuse(a: Placement, b: Placement, inv: Inventory) -> Placement | None:
    """The single inventory brick covering exactly ``a`` and ``b``, if one exists."""
    if a.z != b.z:
        return None
    ax, ay, adx, ady = _rect(a)
    bx, by, bdx, bdy = _rect(b)
    if ax == bx and adx == bdx and (ay + ady == by or by + bdy == ay):
        x, y, dx, dy = ax, min(ay, by), adx, ady + bdy
    elif ay == by and ady == bdy and (ax + adx == bx or bx + bdx == ax):
        x, y, dx, dy = min(ax, bx), ay, adx + bdx, ady
    else:
        return None
    kind = inv.find(min(dx, dy), max(dx, dy))
    if kind is None:
        return None
    return Placement((x, y, a.z), kind, "X" if dx >= dy else "Y")


def merge(build_list: BuildList | Sequence[Placement], inv: Inventory) -> BuildList:
    """Fuse neighbouring bricks of a layer whose union is one inventory brick.

    Two end-aligned 1xN bricks in neighbouring strips become a 2xN; two
    bricks that continue each other end to end become one longer brick when
    the inventory has it. Bricks are visited by layer, row, then column; each
    brick first tries its neighbour across the strips, then its neighbour
    along them. Passes repeat until nothing changes, so the count never goes
    up and the covered cells never change.
    """
    placements = list(build_list.placements if isinstance(build_list, BuildList) else build_list)
    gaps = build_list.gaps if isinstance(build_list, BuildList) else None
    changed = True
    while changed:
        changed = False
        owner: dict[tuple, int] = {}
        for i, p in enumerate(placements):
            for c in p.cells():
                owner[c] = i
        alive = [True] * len(placements)
        order = sorted(range(len(placements)), key=lambda i: placements[i].sort_key())
        for i in order:
            if not alive[i]:
                continue
            p = placements[i]
            x, y, dx, dy = _rect(p)
            across = (x, y + dy, p.z) if p.axis == "X" else (x + dx, y, p.z)
            along = (x + dx, y, p.z) if p.axis == "X" else (x, y + dy, p.z)
            for probe in (across, along):
                j = owner.get(probe)
                if j is None or j == i or not alive[j]:
                    continue
                fused = _fuse(p, placements[j], inv)
                if fused is None:
                    continue
                placements[i] = fused
                alive[j] = False
                for c in fused.cells():
                    owner[c] = i
                changed = True
                break
        placements = [p for p, keep in zip(placements, alive) if keep]
    return BuildList(tuple(placements), gaps)


def optimize(
    grid: VoxelGrid,
    inv: Inventory | None = None,
    params: CostParams | None = None,
    layer_axis_rule: str | Callable[[int], str] = "alternate",
    trace: Trace | None = None,
    merge_stage: bool = True,
) -> BuildList:
    """Run segmentation, per-strip filling and merging over ``grid``."""
    inv = inv or Inventory()
    params = params or CostParams()
    if grid.count == 0:
        raise ContractError("grid has no occupied cells")
    strips, gaps = segment(grid, layer_axis_rule)
    rng = random.Random(params.seed)
    longest = max(s.length for s in strips)
    table = RemainderTable(inv.strip_lengths, max(longest, params.rho))

    placements: list[Placement] = []
    for sid, strip in enumerate(strips):
        hook = None
        if trace is not None:
            hook = lambda rec, sid=sid: trace({"strip": sid, **rec})
        placed, gaps = place_strip(strip, inv, gaps, params, rng, table, hook)
        placements.extend(placed)

    result = BuildList(tuple(placements), gaps)
    if merge_stage:
        result = merge(result, inv)
    report = validate_partition(result.placements, grid)
    if not report.ok:
        raise PlanValidationError(report)
    return result


def seam_segments(placements: Iterable[Placement], grid: VoxelGrid) -> dict[int, list[tuple]]:
    """Plan-view seams per layer, read off a finished layout.

    A seam is a brick end face that touches another occupied cell of the same
    layer along the brick's length axis; silhouette edges are not seams.
    """
    out: dict[int, set] = {}
    for p in placements:
        x, y, z = p.origin
        dx, dy = p.extent
        if p.axis == "X":
            ends = [(x, (x - 1, y)), (x + dx, (x + dx, y))]
            for c, (cx, cy) in ends:
                for j in range(dy):
                    if (cx, cy + j, z) in grid:
                        out.setdefault(z, set()).add((c, c, y + j, y + j + 1))
        else:
            ends = [(y, (x, y - 1)), (y + dy, (x, y + dy))]
            for c, (cx, cy) in ends:
                for i in range(dx):
                    if (cx + i, cy, z) in grid:
                        out.setdefault(z, set()).add((x + i, x + i + 1, c, c))
    return {z: sorted(s) for z, s in out.items()}


def aligned_gap_pairs(
    placements: Iterable[Placement],
    grid: VoxelGrid,
    layer_axis_rule: str | Callable[[int], str] = "alternate",
) -> int:
    """Count vertically aligned seam pairs.

    Each layer is paired with the closest lower layer laid along the same
    axis; a pair is aligned when the two plan-view seam segments touch.
    """
    seams = seam_segments(placements, grid)
    axes = {z: layer_axis(z, layer_axis_rule) for z in range(grid.dims[2])}
    below = GapSet(layer_axes=axes)
    total = 0
    for z in range(1, grid.dims[2]):
        zb = below.parallel_below(z, axes[z])
        if zb is None:
            continue
        a = np.array(seams.get(zb, []), dtype=float).reshape(-1, 4)
        b = np.array(seams.get(z, []), dtype=float).reshape(-1, 4)
        if not len(a) or not len(b):
            continue
        dx = np.maximum(0.0, np.maximum(b[None, :, 0] - a[:, None, 1], a[:, None, 0] - b[None, :, 1]))
        dy = np.maximum(0.0, np.maximum(b[None, :, 2] - a[:, None, 3], a[:, None, 2] - b[None, :, 3]))
        total += int(((dx == 0) & (dy == 0)).sum())
    return total
