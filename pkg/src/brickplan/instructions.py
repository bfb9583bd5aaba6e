"""Layered build steps, SVG top/side views, and the plan JSON format."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .bricks import BrickKind, Placement, validate_partition
from .errors import ContractError, PlanValidationError
from .matheuristic import BuildList
from .mesh import VoxelGrid

MODULE = 20  # SVG units per grid cell
MARGIN = 10
PRIOR_OPACITY = 0.3

_PALETTE = {
    (1, 1): "#d62728", (1, 2): "#1f77b4", (1, 3): "#2ca02c", (1, 4): "#ff7f0e",
    (1, 6): "#9467bd", (1, 8): "#8c564b", (2, 2): "#e377c2", (2, 4): "#17becf",
}


def kind_color(kind: BrickKind) -> str:
    c = _PALETTE.get((kind.width, kind.length))
    if c is None:
        # stable fallback for kinds outside the default inventory
        h = (kind.width * 97 + kind.length * 31) % 360
        c = f"hsl({h},65%,50%)"
    return c


@dataclass(frozen=True)
class BuildStep:
    index: int
    layer: int
    new_placements: tuple[Placement, ...]
    cumulative: tuple[Placement, ...]


@dataclass
class BuildPlan:
    grid_dims: tuple[int, int, int]
    inventory: tuple[tuple[BrickKind, int], ...]
    steps: tuple[BuildStep, ...]
    side: str = "front"
    top_views: list[str] = field(default_factory=list, repr=False)
    side_views: list[str] = field(default_factory=list, repr=False)

    @property
    def placements(self) -> tuple[Placement, ...]:
        return tuple(p for s in self.steps for p in s.new_placements)

    @property
    def count(self) -> int:
        return sum(n for _, n in self.inventory)


def _count_kinds(placements: Iterable[Placement]) -> tuple[tuple[BrickKind, int], ...]:
    counts = Counter(p.kind for p in placements)
    return tuple(sorted(counts.items()))


def _build_steps(placements: Sequence[Placement]) -> tuple[BuildStep, ...]:
    layers = sorted({p.z for p in placements})
    steps = []
    cumulative: list[Placement] = []
    for i, z in enumerate(layers, start=1):
        new = tuple(p for p in placements if p.z == z)
        cumulative.extend(new)
        steps.append(BuildStep(i, z, new, tuple(cumulative)))
    return tuple(steps)


def _attach_views(plan: BuildPlan) -> BuildPlan:
    plan.top_views = [render_top_view(s, plan.grid_dims) for s in plan.steps]
    plan.side_views = [render_side_view(plan, s.index, plan.side) for s in plan.steps]
    return plan


def plan(build_list: BuildList | Sequence[Placement], grid: VoxelGrid, side: str = "front") -> BuildPlan:
    """One step per occupied layer, bottom up, with a top and side view each."""
    placements = tuple(build_list.placements if isinstance(build_list, BuildList) else build_list)
    report = validate_partition(placements, grid)
    if not report.ok:
        raise PlanValidationError(report)
    ordered = tuple(sorted(placements, key=lambda p: p.z))  # stable: keeps in-layer order
    result = BuildPlan(grid.dims, _count_kinds(ordered), _build_steps(ordered), side)
    return _attach_views(result)


# -- SVG -------------------------------------------------------------------


def _svg(width: int, height: int, body: list[str], title: str) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    )
    lines = [head, f"<title>{title}</title>",
             f'<rect class="canvas" x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>']
    lines.extend(body)
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _rect(cls: str, x: int, y: int, w: int, h: int, **attrs) -> str:
    extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
    return f'<rect class="{cls}" x="{x}" y="{y}" width="{w}" height="{h}"{extra}/>'


def render_top_view(step: BuildStep, dims: Sequence[int]) -> str:
    """Plan view of one layer.

    Cells built in earlier steps are drawn faded underneath; this step's
    bricks are drawn in full colour with a heavy outline. The canvas size
    depends only on ``dims``, so every step of a plan has the same size.
    """
    if not step.new_placements:
        raise ContractError(f"step {step.index} places no bricks")
    nx, ny = int(dims[0]), int(dims[1])
    width, height = nx * MODULE + 2 * MARGIN, ny * MODULE + 2 * MARGIN

    def sy(y: int, dy: int = 1) -> int:
        # plan y grows upward on the page
        return MARGIN + (ny - y - dy) * MODULE

    body = []
    prior = sorted({(x, y) for p in step.cumulative if p.z < step.layer for x, y, _ in p.cells()})
    for x, y in prior:
        body.append(_rect("prior", MARGIN + x * MODULE, sy(y), MODULE, MODULE,
                          fill="#808080", fill_opacity=PRIOR_OPACITY))
    for p in step.new_placements:
        x, y, z = p.origin
        dx, dy = p.extent
        body.append(_rect(
            "new", MARGIN + x * MODULE, sy(y, dy), dx * MODULE, dy * MODULE,
            fill=kind_color(p.kind), stroke="#000000", stroke_width=3,
            data_kind=str(p.kind),
        ))
    return _svg(width, height, body, f"step {step.index} top (layer {step.layer})")


def render_side_view(plan: BuildPlan, through_step: int, direction: str | None = None) -> str:
    """Orthographic elevation of everything built through ``through_step``.

    ``front`` looks along +y (x across, z up); ``side`` looks along +x
    (y across). Only the nearest brick in each column of the view is drawn.
    """
    if not 1 <= through_step <= len(plan.steps):
        raise IndexError(f"through_step {through_step} outside 1..{len(plan.steps)}")
    direction = direction or plan.side
    if direction not in ("front", "side"):
        raise ContractError(f"direction must be 'front' or 'side', got {direction!r}")
    nx, ny, nz = plan.grid_dims
    across = nx if direction == "front" else ny
    width, height = across * MODULE + 2 * MARGIN, nz * MODULE + 2 * MARGIN
    placements = plan.steps[through_step - 1].cumulative

    # nearest placement per (u, z) module
    nearest: dict[tuple[int, int], tuple[int, int]] = {}
    for i, p in enumerate(placements):
        for x, y, z in p.cells():
            u, depth = (x, y) if direction == "front" else (y, x)
            cur = nearest.get((u, z))
            if cur is None or depth < cur[0]:
                nearest[(u, z)] = (depth, i)

    body = []
    top = max(z for _, z in nearest)
    for z in range(top + 1):
        u = 0
        while u < across:
            hit = nearest.get((u, z))
            if hit is None:
                u += 1
                continue
            start, idx = u, hit[1]
            while u < across and nearest.get((u, z), (None, None))[1] == idx:
                u += 1
            body.append(_rect(
                "brick", MARGIN + start * MODULE, MARGIN + (nz - z - 1) * MODULE,
                (u - start) * MODULE, MODULE,
                fill=kind_color(placements[idx].kind), stroke="#000000", stroke_width=1,
            ))
    for z in range(top + 2):
        y = MARGIN + (nz - z) * MODULE
        body.append(f'<line class="layer" x1="{MARGIN}" y1="{y}" x2="{width - MARGIN}" '
                    f'y2="{y}" stroke="#404040" stroke-width="1" stroke-dasharray="4 2"/>')
    return _svg(width, height, body, f"step {through_step} {direction} view")


# -- JSON ------------------------------------------------------------------


def export_plan(plan: BuildPlan) -> dict:
    return {
        "grid_dims": list(plan.grid_dims),
        "inventory": [{"width": k.width, "length": k.length, "count": n} for k, n in plan.inventory],
        "steps": [
            {"index": s.index, "layer": s.layer,
             "placements": [p.to_json() for p in s.new_placements]}
            for s in plan.steps
        ],
    }


def dumps_plan(plan: BuildPlan) -> str:
    return json.dumps(export_plan(plan), indent=2) + "\n"


def import_plan(doc, side: str = "front", strict: bool = True, views: bool = True) -> BuildPlan:
    """Rebuild a plan from its JSON form.

    The inventory block is derived data; with ``strict`` a block that
    disagrees with the placements is rejected, otherwise it is recomputed.
    """
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    try:
        dims = tuple(int(d) for d in doc["grid_dims"])
        placements = []
        for s in sorted(doc["steps"], key=lambda s: int(s["index"])):
            for rec in s["placements"]:
                p = Placement.from_json(rec)
                if p.z != int(s["layer"]):
                    raise ValueError(f"placement {rec} is not on step layer {s['layer']}")
                placements.append(p)
        declared = {(int(r["width"]), int(r["length"])): int(r["count"]) for r in doc["inventory"]}
    except (KeyError, TypeError, ValueError, AttributeError, ContractError) as exc:
        raise ValueError(f"malformed plan document: {exc}") from exc
    if len(dims) != 3:
        raise ValueError("malformed plan document: grid_dims needs 3 entries")
    inventory = _count_kinds(placements)
    if strict and {(k.width, k.length): n for k, n in inventory} != declared:
        raise ValueError("malformed plan document: inventory counts disagree with placements")
    result = BuildPlan(dims, inventory, _build_steps(placements), side)
    return _attach_views(result) if views else result


def inventory_matches(doc) -> bool:
    """Whether a plan document's inventory block agrees with its placements."""
    try:
        import_plan(doc, strict=True, views=False)
    except ValueError:
        return False
    return True
