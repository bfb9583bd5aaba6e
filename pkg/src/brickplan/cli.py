"""Command line front end.

Exit codes:

    0  success
    1  verify found the plan is not an exact partition
    2  parse or schema error in an input file
    3  I/O error (missing or unreadable file, unwritable output)
    4  invalid argument or configuration value
    5  grid too large for the exact solver
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .bricks import Inventory, validate_partition
from .errors import (
    BrickPlanError,
    ContractError,
    DegenerateMeshError,
    InstanceTooLargeError,
    MeshParseError,
)
from .exact import DEFAULT_CELL_CAP, DEFAULT_NODE_LIMIT, solve_exact
from .instructions import BuildPlan, dumps_plan, import_plan, inventory_matches, plan
from .matheuristic import BuildList, CostParams, optimize
from .mesh import VoxelGrid, parse_mesh, voxelize

EXIT_OK, EXIT_INVALID_PLAN, EXIT_PARSE, EXIT_IO, EXIT_VALIDATION, EXIT_TOO_LARGE = range(6)
DEFAULT_DIM = 16
DEFAULT_SEED = 0


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class RunConfig:
    input: Path
    out: Path
    target_max_dim: int = DEFAULT_DIM
    inventory: Inventory = Inventory()
    params: CostParams = CostParams()
    exact: bool = False
    trace: bool = False
    side: str = "front"
    node_limit: int = DEFAULT_NODE_LIMIT
    cap: int = DEFAULT_CELL_CAP


def _read(path: Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from exc


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from exc


def _load_json(path: Path):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"{path}: invalid JSON: {exc}") from exc


def _load_grid(path: Path, dim: int) -> VoxelGrid:
    if path.suffix.lower() == ".json":
        try:
            return VoxelGrid.from_json(_load_json(path))
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"{path}: {exc}") from exc
    try:
        mesh = parse_mesh(_read(path))
    except MeshParseError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from exc
    try:
        return voxelize(mesh, dim)
    except DegenerateMeshError as exc:
        raise CliError(EXIT_VALIDATION, f"{path}: {exc}") from exc


def _check_dim(dim: int) -> None:
    if dim < 1:
        raise CliError(EXIT_VALIDATION, f"--dim must be a positive integer, got {dim}")


def _load_inventory(path: Path | None) -> Inventory:
    if path is None:
        return Inventory()
    doc = _load_json(path)
    try:
        return Inventory.from_json(doc)
    except ContractError as exc:
        raise CliError(EXIT_VALIDATION, f"{path}: {exc}") from exc


def _load_params(path: Path | None, seed: int | None) -> CostParams:
    params = CostParams()
    if path is not None:
        try:
            params = CostParams.from_json(_load_json(path))
        except ContractError as exc:
            raise CliError(EXIT_VALIDATION, f"{path}: {exc}") from exc
    if seed is not None:
        params = replace(params, seed=seed)
    return params


def _summary(build: BuildPlan) -> str:
    kinds = ", ".join(f"{k}: {n}" for k, n in build.inventory)
    return f"{build.count} bricks in {len(build.steps)} steps ({kinds})"


def write_views(build, out: Path) -> None:
    for step, top, side in zip(build.steps, build.top_views, build.side_views):
        _write(out / f"step_{step.index}_top.svg", top)
        _write(out / f"step_{step.index}_side.svg", side)


def run_solve(cfg: RunConfig) -> str:
    grid = _load_grid(cfg.input, cfg.target_max_dim)
    trace_lines: list[str] = []
    note = ""
    if cfg.exact:
        try:
            result = solve_exact(grid, cfg.inventory, cfg.node_limit, cfg.cap)
        except InstanceTooLargeError as exc:
            raise CliError(EXIT_TOO_LARGE, f"{exc} (drop --exact)") from exc
        placements = result.placements
        if not result.optimal:
            note = " [node limit reached: best found, not proven optimal]"
    else:
        hook = (lambda rec: trace_lines.append(json.dumps(rec, sort_keys=True))) if cfg.trace else None
        placements = optimize(grid, cfg.inventory, cfg.params, trace=hook).placements
    build = plan(BuildList(tuple(placements)), grid, cfg.side)

    _write(cfg.out / "grid.json", json.dumps(grid.to_json()) + "\n")
    _write(cfg.out / "plan.json", dumps_plan(build))
    write_views(build, cfg.out)
    if cfg.trace:
        _write(cfg.out / "trace.jsonl", "".join(line + "\n" for line in trace_lines))
    return f"{cfg.input}: {_summary(build)}{note}"


def _run_solve_safe(cfg: RunConfig) -> tuple[int, str]:
    try:
        return EXIT_OK, run_solve(cfg)
    except CliError as exc:
        return exc.code, str(exc)


def cmd_voxelize(args) -> int:
    _check_dim(args.dim)
    grid = _load_grid(Path(args.input), args.dim)
    out = Path(args.out) if args.out else Path(args.input).with_suffix(".grid.json")
    _write(out, json.dumps(grid.to_json()) + "\n")
    nx, ny, nz = grid.dims
    print(f"{out}: {nx}x{ny}x{nz} grid, {grid.count} occupied cells")
    return EXIT_OK


def cmd_solve(args) -> int:
    _check_dim(args.dim)
    if args.jobs < 1:
        raise CliError(EXIT_VALIDATION, f"--jobs must be >= 1, got {args.jobs}")
    inventory = _load_inventory(Path(args.inventory) if args.inventory else None)
    params = _load_params(Path(args.params) if args.params else None, args.seed)
    out = Path(args.out)
    inputs = [Path(p) for p in args.input]
    configs = [
        RunConfig(
            input=p,
            out=out / p.stem if len(inputs) > 1 else out,
            target_max_dim=args.dim, inventory=inventory, params=params,
            exact=args.exact, trace=args.trace, side=args.side,
            node_limit=args.node_limit, cap=args.cap,
        )
        for p in inputs
    ]
    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_solve_safe, configs))
    else:
        results = [_run_solve_safe(c) for c in configs]
    worst = EXIT_OK
    for code, message in results:
        print(message, file=sys.stdout if code == EXIT_OK else sys.stderr)
        worst = max(worst, code)
    return worst


def cmd_verify(args) -> int:
    doc = _load_json(Path(args.plan))
    try:
        build = import_plan(doc, strict=False, views=False)
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"{args.plan}: {exc}") from exc
    try:
        grid = VoxelGrid.from_json(_load_json(Path(args.grid)))
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"{args.grid}: {exc}") from exc
    if tuple(build.grid_dims) != grid.dims:
        raise CliError(EXIT_PARSE, f"plan dims {build.grid_dims} do not match grid dims {grid.dims}")
    if not inventory_matches(doc):
        print("warning: plan inventory block disagrees with its placements", file=sys.stderr)
    report = validate_partition(build.placements, grid)
    if report.ok:
        print(f"OK: {len(build.placements)} bricks exactly partition {grid.count} cells")
        return EXIT_OK
    print(f"FAIL: {report.summary()}")
    print(json.dumps(report.to_json(), indent=2))
    return EXIT_INVALID_PLAN


def cmd_render(args) -> int:
    try:
        build = import_plan(_load_json(Path(args.plan)), side=args.side)
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"{args.plan}: {exc}") from exc
    out = Path(args.out)
    write_views(build, out)
    print(f"{out}: {2 * len(build.steps)} views for {_summary(build)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brickplan", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("voxelize", help="voxelize an OBJ mesh into grid JSON")
    p.add_argument("input")
    p.add_argument("--dim", type=int, default=DEFAULT_DIM, help="cells along the longest axis")
    p.add_argument("-o", "--out", help="output grid JSON (default: <input>.grid.json)")
    p.set_defaults(func=cmd_voxelize)

    p = sub.add_parser("solve", help="lay out bricks and write plan JSON plus views")
    p.add_argument("input", nargs="+", help="OBJ mesh or grid JSON")
    p.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p.add_argument("--inventory", help="JSON list of {width, length}")
    p.add_argument("--params", help="JSON {rho, gamma1, gamma2, epsilon_scale, seed}")
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed; overrides the params file (default {DEFAULT_SEED})")
    p.add_argument("--exact", action="store_true", help="use the exact branch-and-bound solver")
    p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    p.add_argument("--cap", type=int, default=DEFAULT_CELL_CAP,
                   help="largest occupied-cell count accepted by --exact")
    p.add_argument("--trace", action="store_true", help="write per-decision costs to trace.jsonl")
    p.add_argument("--side", choices=("front", "side"), default="front")
    p.add_argument("-o", "--out", default="out")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers across input files")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a plan exactly partitions a grid")
    p.add_argument("plan")
    p.add_argument("grid")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("render", help="re-render step views from plan JSON")
    p.add_argument("plan")
    p.add_argument("--side", choices=("front", "side"), default="front")
    p.add_argument("-o", "--out", default="out")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except BrickPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
