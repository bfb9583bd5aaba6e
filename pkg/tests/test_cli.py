import json
import subprocess
import sys

import numpy as np
import pytest

from brickplan import VoxelGrid
from brickplan.cli import main
from helpers import CUBE_OBJ


@pytest.fixture
def cube(tmp_path):
    path = tmp_path / "cube.obj"
    path.write_text(CUBE_OBJ)
    return path


def write_grid(path, occ):
    path.write_text(json.dumps(VoxelGrid(np.asarray(occ, dtype=bool)).to_json()))
    return path


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestVoxelize:
    def test_cube(self, cube, tmp_path, capsys):
        out = tmp_path / "g.json"
        assert main(["voxelize", str(cube), "--dim", "4", "-o", str(out)]) == 0
        assert VoxelGrid.from_json(json.loads(out.read_text())).count == 64
        assert "64 occupied" in capsys.readouterr().out

    def test_missing_file(self, tmp_path, capsys):
        assert main(["voxelize", str(tmp_path / "nope.obj")]) == 3
        assert "nope.obj" in capsys.readouterr().err

    def test_bad_dim(self, cube, capsys):
        assert main(["voxelize", str(cube), "--dim", "0"]) == 4
        assert "--dim" in capsys.readouterr().err

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.obj"
        bad.write_text("v 0 0 0\nf 1 2 3\n")
        assert main(["voxelize", str(bad)]) == 2
        assert "line 2" in capsys.readouterr().err


class TestSolve:
    def test_deterministic(self, cube, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["solve", str(cube), "--dim", "4", "--seed", "7", "-o", str(out)]) == 0
        assert tree(a) == tree(b)
        assert {"plan.json", "grid.json", "step_1_top.svg", "step_1_side.svg"} <= set(tree(a))

    def test_exact_plate(self, tmp_path, capsys):
        grid = write_grid(tmp_path / "plate.json", np.ones((2, 4, 1)))
        inv = tmp_path / "inv.json"
        inv.write_text(json.dumps([{"width": 1, "length": l} for l in (1, 2, 4)]))
        assert main(["solve", str(grid), "--exact", "--inventory", str(inv), "-o", str(tmp_path / "o")]) == 0
        assert "2 bricks" in capsys.readouterr().out

    def test_exact_cap(self, tmp_path, capsys):
        grid = write_grid(tmp_path / "big.json", np.ones((8, 8, 2)))
        assert main(["solve", str(grid), "--exact", "--cap", "64", "-o", str(tmp_path / "o")]) == 5
        assert "--exact" in capsys.readouterr().err

    def test_trace(self, cube, tmp_path):
        out = tmp_path / "o"
        assert main(["solve", str(cube), "--dim", "4", "--trace", "-o", str(out)]) == 0
        lines = (out / "trace.jsonl").read_text().splitlines()
        assert lines
        rec = json.loads(lines[0])
        assert {"strip", "candidates", "chosen"} <= set(rec)
        assert {"M", "N", "D", "e", "F"} <= set(rec["candidates"][0])

    def test_params_file(self, cube, tmp_path):
        params = tmp_path / "p.json"
        params.write_text(json.dumps({"gamma1": 0.0, "seed": 3}))
        assert main(["solve", str(cube), "--dim", "3", "--params", str(params), "-o", str(tmp_path / "o")]) == 0
        params.write_text(json.dumps({"gamma2": 0}))
        assert main(["solve", str(cube), "--params", str(params), "-o", str(tmp_path / "o")]) == 4

    def test_bad_inventory(self, cube, tmp_path):
        inv = tmp_path / "inv.json"
        inv.write_text(json.dumps([{"width": 1, "length": 2}]))
        assert main(["solve", str(cube), "--inventory", str(inv), "-o", str(tmp_path / "o")]) == 4

    def test_several_inputs(self, cube, tmp_path):
        other = write_grid(tmp_path / "row.json", np.ones((5, 1, 1)))
        out = tmp_path / "o"
        assert main(["solve", str(cube), str(other), "--dim", "3", "--jobs", "2", "-o", str(out)]) == 0
        assert (out / "cube" / "plan.json").exists() and (out / "row" / "plan.json").exists()


class TestVerify:
    @pytest.fixture
    def solved(self, tmp_path):
        grid = write_grid(tmp_path / "row.json", np.ones((5, 1, 1)))
        out = tmp_path / "o"
        assert main(["solve", str(grid), "-o", str(out)]) == 0
        return out / "plan.json", out / "grid.json"

    def test_solve_output_verifies(self, solved):
        plan, grid = solved
        assert main(["verify", str(plan), str(grid)]) == 0

    def test_deleted_placement(self, solved, capsys):
        plan, grid = solved
        doc = json.loads(plan.read_text())
        recs = doc["steps"][0]["placements"]
        single = next(i for i, r in enumerate(recs) if r["length"] == 1)
        del recs[single]
        plan.write_text(json.dumps(doc))
        capsys.readouterr()
        assert main(["verify", str(plan), str(grid)]) == 1
        out = capsys.readouterr().out
        report = json.loads(out[out.index("{"):])
        assert len(report["uncovered"]) == 1 and report["doubly_covered"] == []

    def test_duplicated_placement(self, solved, capsys):
        plan, grid = solved
        doc = json.loads(plan.read_text())
        recs = doc["steps"][0]["placements"]
        recs.append(dict(recs[0]))
        plan.write_text(json.dumps(doc))
        capsys.readouterr()
        assert main(["verify", str(plan), str(grid)]) == 1
        out = capsys.readouterr().out
        report = json.loads(out[out.index("{"):])
        assert len(report["doubly_covered"]) == recs[0]["length"] * recs[0]["width"]

    def test_schema_error(self, solved):
        plan, grid = solved
        plan.write_text(json.dumps({"steps": []}))
        assert main(["verify", str(plan), str(grid)]) == 2
        plan.write_text("{not json")
        assert main(["verify", str(plan), str(grid)]) == 2


def test_render(cube, tmp_path):
    out = tmp_path / "o"
    assert main(["solve", str(cube), "--dim", "4", "-o", str(out)]) == 0
    views = tmp_path / "views"
    assert main(["render", str(out / "plan.json"), "--side", "side", "-o", str(views)]) == 0
    assert sorted(p.name for p in views.iterdir()) == sorted(
        f"step_{k}_{v}.svg" for k in range(1, 5) for v in ("top", "side"))
    assert (views / "step_1_top.svg").read_bytes() == (out / "step_1_top.svg").read_bytes()


def test_module_entry_point(cube, tmp_path):
    res = subprocess.run([sys.executable, "-m", "brickplan", "voxelize", str(cube), "--dim", "2",
                          "-o", str(tmp_path / "g.json")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "8 occupied" in res.stdout
