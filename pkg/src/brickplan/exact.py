"""Exact solvers: minimum-brick set partitioning and the 1D remainder subproblem."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .bricks import AXES, Inventory, Placement, validate_partition
from .errors import ContractError, InstanceTooLargeError
from .mesh import VoxelGrid

DEFAULT_CELL_CAP = 512
DEFAULT_NODE_LIMIT = 2_000_000


class RemainderTable:
    """Minimum brick counts for every length 0..max_length, by change-making DP.

    ``count[L]`` is the fewest bricks whose lengths sum to exactly ``L``;
    ``pick[L]`` is the longest brick that starts some optimal decomposition.
    """

    def __init__(self, lengths: Sequence[int], max_length: int = 0):
        lengths = sorted({int(l) for l in lengths}, reverse=True)
        if not lengths or min(lengths) < 1:
            raise ContractError("lengths must be positive")
        if 1 not in lengths:
            raise ContractError("lengths must include 1")
        self.lengths = tuple(lengths)
        self.count = [0]
        self.pick = [0]
        self.extend(max_length)

    def extend(self, max_length: int) -> None:
        for L in range(len(self.count), max_length + 1):
            best, arg = None, 0
            for l in self.lengths:
                if l <= L and (best is None or self.count[L - l] + 1 < best):
                    best, arg = self.count[L - l] + 1, l
            self.count.append(best)
            self.pick.append(arg)

    def __call__(self, L: int) -> int:
        if L < 0:
            raise ContractError(f"length must be non-negative, got {L}")
        if L >= len(self.count):
            self.extend(L)
        return self.count[L]

    def witness(self, L: int) -> tuple[int, ...]:
        self(L)
        out = []
        while L > 0:
            out.append(self.pick[L])
            L -= self.pick[L]
        return tuple(out)


def lp_int(L: int, lengths: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Fewest bricks (and one multiset of lengths) tiling a run of exactly ``L`` cells."""
    table = RemainderTable(lengths, L)
    return table(L), table.witness(L)


@dataclass(frozen=True)
class ExactResult:
    placements: tuple[Placement, ...]
    optimal: bool
    nodes: int

    @property
    def count(self) -> int:
        return len(self.placements)


class _Component:
    """Exact cover search over one face-connected patch of a single layer."""

    def __init__(self, cells, z, inv: Inventory):
        # cells sorted by (y, x): the first uncovered cell is the lowest clear bit
        self.cells = sorted(cells, key=lambda c: (c[1], c[0]))
        index = {c: i for i, c in enumerate(self.cells)}
        self.full = (1 << len(self.cells)) - 1
        self.cands: list[list[tuple[int, Placement]]] = [[] for _ in self.cells]
        max_area = [1] * len(self.cells)
        for k in inv.kinds:
            for axis in (("X",) if k.square else AXES):
                for i, (x, y) in enumerate(self.cells):
                    p = Placement((x, y, z), k, axis)
                    mask = 0
                    for cx, cy, _ in p.cells():
                        j = index.get((cx, cy))
                        if j is None:
                            break
                        mask |= 1 << j
                    else:
                        self.cands[i].append((mask, p))
                        for cx, cy, _ in p.cells():
                            j = index[(cx, cy)]
                            max_area[j] = max(max_area[j], k.area)
        # integer weights: sum over uncovered cells of scale/max_area, rounded up, bounds the count
        self.scale = math.lcm(*{k.area for k in inv.kinds})
        self.weight = [self.scale // a for a in max_area]

    def _bound(self, mask: int) -> int:
        w = 0
        free = self.full & ~mask
        while free:
            low = free & -free
            w += self.weight[low.bit_length() - 1]
            free ^= low
        return -(-w // self.scale)

    def greedy(self) -> list[Placement]:
        mask, out = 0, []
        while mask != self.full:
            i = (~mask & (mask + 1)).bit_length() - 1
            best = max(
                (c for c in self.cands[i] if not c[0] & mask),
                key=lambda c: c[1].kind.area,
            )
            mask |= best[0]
            out.append(best[1])
        return out

    def solve(self, budget: int) -> tuple[list[Placement], bool, int]:
        incumbent = self.greedy()
        best: list | None = None
        best_n = len(incumbent) + 1
        nodes = 0
        exhausted = False
        # proven lower bounds on the remaining count from a given coverage mask
        floor: dict[int, int] = {}
        chosen: list[Placement] = []

        def dfs(mask: int) -> None:
            nonlocal best, best_n, nodes, exhausted
            if mask == self.full:
                if len(chosen) < best_n:
                    best, best_n = list(chosen), len(chosen)
                return
            if nodes >= budget:
                exhausted = True
                return
            nodes += 1
            allowance = best_n - len(chosen)
            lb = max(self._bound(mask), floor.get(mask, 0))
            if lb >= allowance:
                floor[mask] = lb
                return
            i = (~mask & (mask + 1)).bit_length() - 1
            for cmask, p in self.cands[i]:
                if cmask & mask:
                    continue
                chosen.append(p)
                dfs(mask | cmask)
                chosen.pop()
                if exhausted:
                    return
            if not exhausted:
                # no completion with fewer than `allowance` bricks exists below here
                floor[mask] = max(floor.get(mask, 0), best_n - len(chosen))

        dfs(0)
        if best is None:
            return incumbent, False, nodes
        return best, not exhausted, nodes


def _components(grid: VoxelGrid):
    for z in range(grid.dims[2]):
        layer = grid.layer(z)
        seen = set()
        for y in range(layer.shape[1]):
            for x in range(layer.shape[0]):
                if not layer[x, y] or (x, y) in seen:
                    continue
                comp, stack = [], [(x, y)]
                seen.add((x, y))
                while stack:
                    cx, cy = stack.pop()
                    comp.append((cx, cy))
                    for nx_, ny_ in ((cx + 1, cy), (cx - 1, cy), (cx, cy + 1), (cx, cy - 1)):
                        if (0 <= nx_ < layer.shape[0] and 0 <= ny_ < layer.shape[1]
                                and layer[nx_, ny_] and (nx_, ny_) not in seen):
                            seen.add((nx_, ny_))
                            stack.append((nx_, ny_))
                yield z, comp


def solve_exact(
    grid: VoxelGrid,
    inv: Inventory | None = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
    cap: int = DEFAULT_CELL_CAP,
) -> ExactResult:
    """Minimum-count exact partition of the occupied cells into placements.

    Bricks are one layer tall, so each face-connected patch of each layer is
    an independent subproblem, solved by depth-first branch and bound that
    branches on the placements anchored at the first uncovered cell. Among
    optimal tilings the first in (z, y, x, kind index, axis) order is kept.

    If ``node_limit`` runs out, the best tiling found is returned with
    ``optimal=False``.
    """
    inv = inv or Inventory()
    if grid.count > cap:
        raise InstanceTooLargeError(grid.count, cap)
    placements: list[Placement] = []
    optimal = True
    nodes = 0
    for z, cells in _components(grid):
        comp = _Component(cells, z, inv)
        found, opt, used = comp.solve(max(node_limit - nodes, 0))
        placements.extend(found)
        optimal &= opt
        nodes += used
    placements.sort(key=lambda p: p.sort_key(inv))
    assert validate_partition(placements, grid).ok
    return ExactResult(tuple(placements), optimal, nodes)
