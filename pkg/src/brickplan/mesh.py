"""OBJ ingestion and solid voxelization.

The voxelizer marks every cell whose (closed) box touches a triangle, then
treats any empty cell that cannot be reached from outside the grid through
face-adjacent empty cells as interior. Leaky meshes therefore still come out
solid wherever the surface rasterization closes the gaps.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import ndimage

from .errors import DegenerateMeshError, EmptyMeshError, MeshParseError

Cell = tuple[int, int, int]

# Slack on the cell half-size so that floating noise from scaling never flips
# a touching contact into a miss (or the reverse).
_BOX_SLACK = 1e-7


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (n, 3) float64
    triangles: np.ndarray  # (m, 3) int64, 0-based

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        tris = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
            raise ValueError("triangle references a vertex index out of range")
        verts.setflags(write=False)
        tris.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)

    def scaled(self, factor: float) -> "TriangleMesh":
        return TriangleMesh(self.vertices * factor, self.triangles)


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Boolean occupancy over an (nx, ny, nz) lattice of unit cells.

    ``occupancy[x, y, z]`` is True for cells of the solid. The layer index is
    ``z``; bricks are always one layer tall.
    """

    occupancy: np.ndarray

    def __post_init__(self):
        occ = np.array(self.occupancy, dtype=bool, copy=True)
        if occ.ndim != 3 or min(occ.shape) < 1:
            raise ValueError(f"occupancy must be a non-empty 3D array, got shape {occ.shape}")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)

    @classmethod
    def from_cells(cls, dims: tuple[int, int, int], cells) -> "VoxelGrid":
        occ = np.zeros(dims, dtype=bool)
        for x, y, z in cells:
            if not (0 <= x < dims[0] and 0 <= y < dims[1] and 0 <= z < dims[2]):
                raise ValueError(f"cell {(x, y, z)} outside grid {dims}")
            occ[x, y, z] = True
        return cls(occ)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.occupancy.shape)

    @property
    def count(self) -> int:
        return int(self.occupancy.sum())

    def __contains__(self, cell) -> bool:
        x, y, z = cell
        nx, ny, nz = self.occupancy.shape
        return 0 <= x < nx and 0 <= y < ny and 0 <= z < nz and bool(self.occupancy[x, y, z])

    def __eq__(self, other) -> bool:
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return self.dims == other.dims and bool(np.array_equal(self.occupancy, other.occupancy))

    def __hash__(self) -> int:
        return hash((self.dims, self.occupancy.tobytes()))

    def cells(self) -> Iterator[Cell]:
        """Occupied cells, layer by layer, then row (y), then column (x)."""
        zyx = np.argwhere(self.occupancy.transpose(2, 1, 0))
        for z, y, x in zyx:
            yield int(x), int(y), int(z)

    def layer(self, z: int) -> np.ndarray:
        """2D occupancy of layer ``z`` indexed ``[x, y]``."""
        return self.occupancy[:, :, z]

    def to_json(self) -> dict:
        return {"dims": list(self.dims), "occupied": [list(c) for c in self.cells()]}

    @classmethod
    def from_json(cls, doc) -> "VoxelGrid":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        try:
            dims = tuple(int(d) for d in doc["dims"])
            cells = [tuple(int(v) for v in c) for c in doc["occupied"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed voxel grid document: {exc}") from exc
        if len(dims) != 3 or any(len(c) != 3 for c in cells):
            raise ValueError("malformed voxel grid document: expected 3D coordinates")
        return cls.from_cells(dims, cells)


def parse_mesh(data: bytes | str) -> TriangleMesh:
    """Parse the ``v``/``f`` subset of Wavefront OBJ.

    Faces with more than three corners are fan-triangulated. Indices are
    1-based; negative (relative) indices are rejected. All other record
    types are skipped.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MeshParseError(f"not UTF-8 text: {exc}") from exc

    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, list[int]]] = []
    for lineno, raw in enumerate(data.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *fields = line.split()
        if tag == "v":
            if len(fields) < 3:
                raise MeshParseError("vertex record needs 3 coordinates", lineno)
            try:
                vertices.append(tuple(float(f) for f in fields[:3]))
            except ValueError:
                raise MeshParseError(f"bad vertex coordinate in {raw.strip()!r}", lineno) from None
            if not all(math.isfinite(c) for c in vertices[-1]):
                raise MeshParseError("non-finite vertex coordinate", lineno)
        elif tag == "f":
            if len(fields) < 3:
                raise MeshParseError("face record needs at least 3 vertices", lineno)
            idx = []
            for f in fields:
                head = f.split("/", 1)[0]
                try:
                    i = int(head)
                except ValueError:
                    raise MeshParseError(f"bad face index {f!r}", lineno) from None
                if i <= 0:
                    raise MeshParseError(f"face index {i} is not a positive 1-based index", lineno)
                idx.append(i)
            faces.append((lineno, idx))

    triangles = []
    for lineno, idx in faces:
        for i in idx:
            if i > len(vertices):
                raise MeshParseError(
                    f"face index {i} out of range ({len(vertices)} vertices)", lineno
                )
        for k in range(1, len(idx) - 1):
            triangles.append((idx[0] - 1, idx[k] - 1, idx[k + 1] - 1))
    if not triangles:
        raise EmptyMeshError("mesh contains no faces")
    return TriangleMesh(np.array(vertices, dtype=np.float64), np.array(triangles, dtype=np.int64))


def _separated(p0, p1, p2, radius):
    lo = np.minimum(np.minimum(p0, p1), p2)
    hi = np.maximum(np.maximum(p0, p1), p2)
    return (lo > radius) | (hi < -radius)


def triangle_box_overlap(tri: np.ndarray, centers: np.ndarray, half: float) -> np.ndarray:
    """Separating-axis test of one triangle against many cubes.

    ``tri`` is (3, 3); ``centers`` is (k, 3). Returns a (k,) boolean mask of
    cubes (half-size ``half``) that touch the triangle.
    """
    v0 = tri[0] - centers
    v1 = tri[1] - centers
    v2 = tri[2] - centers
    edges = (tri[1] - tri[0], tri[2] - tri[1], tri[0] - tri[2])
    hit = np.ones(len(centers), dtype=bool)

    # box face normals
    for ax in range(3):
        hit &= ~_separated(v0[:, ax], v1[:, ax], v2[:, ax], half)

    # edge x box-axis cross products
    for e in edges:
        for ax in range(3):
            a = np.zeros(3)
            a[ax] = 1.0
            axis = np.cross(e, a)
            if not axis.any():
                continue
            r = half * np.abs(axis).sum()
            hit &= ~_separated(v0 @ axis, v1 @ axis, v2 @ axis, r)

    # triangle plane
    normal = np.cross(edges[0], edges[1])
    if normal.any():
        d = v0 @ normal
        r = half * np.abs(normal).sum()
        hit &= np.abs(d) <= r
    return hit


def voxelize(mesh: TriangleMesh, target_max_dim: int = 16) -> VoxelGrid:
    """Scale ``mesh`` so its longest axis spans ``target_max_dim`` cells and fill it."""
    if isinstance(target_max_dim, bool) or int(target_max_dim) != target_max_dim or target_max_dim < 1:
        raise ValueError(f"target_max_dim must be a positive integer, got {target_max_dim!r}")
    if len(mesh.triangles) == 0:
        raise EmptyMeshError("mesh contains no triangles")

    used = mesh.vertices[np.unique(mesh.triangles)]
    lo = used.min(axis=0)
    extent = used.max(axis=0) - lo
    longest = float(extent.max())
    if longest <= 0.0:
        raise DegenerateMeshError("mesh bounding box has zero extent on every axis")

    scale = target_max_dim / longest
    verts = (mesh.vertices - lo) * scale
    dims = tuple(max(1, math.ceil(e * scale - 1e-9)) for e in extent)
    surface = np.zeros(dims, dtype=bool)
    half = 0.5 + _BOX_SLACK
    upper = np.array(dims) - 1

    for tri in verts[mesh.triangles]:
        cmin = np.clip(np.floor(tri.min(axis=0) - _BOX_SLACK).astype(int), 0, upper)
        cmax = np.clip(np.floor(tri.max(axis=0) + _BOX_SLACK).astype(int), 0, upper)
        ranges = [np.arange(cmin[a], cmax[a] + 1) for a in range(3)]
        idx = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, 3)
        hit = triangle_box_overlap(tri, idx + 0.5, half)
        if hit.any():
            h = idx[hit]
            surface[h[:, 0], h[:, 1], h[:, 2]] = True

    # Empty cells not face-connected to the outside are interior.
    solid = ndimage.binary_fill_holes(surface)
    return VoxelGrid(solid)
