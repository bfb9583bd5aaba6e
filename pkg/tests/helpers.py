"""Mesh builders, grid fuzzers and brute-force oracles used across the suite.

The oracles here deliberately avoid the package's own search code: they are
the independent side of each cross-check.
"""
from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np

from brickplan import VoxelGrid

CUBE_OBJ = """\
# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
"""


def to_obj(vertices, triangles) -> str:
    lines = [f"v {x:.9f} {y:.9f} {z:.9f}" for x, y, z in vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in triangles]
    return "\n".join(lines) + "\n"


def torus(major=1.0, minor=0.35, n=32, m=16):
    verts, tris = [], []
    for i in range(n):
        u = 2 * math.pi * i / n
        for j in range(m):
            v = 2 * math.pi * j / m
            r = major + minor * math.cos(v)
            verts.append((r * math.cos(u), r * math.sin(u), minor * math.sin(v)))
    for i in range(n):
        for j in range(m):
            a = i * m + j
            b = ((i + 1) % n) * m + j
            c = ((i + 1) % n) * m + (j + 1) % m
            d = i * m + (j + 1) % m
            tris += [(a, b, c), (a, c, d)]
    return np.array(verts), np.array(tris)


def uv_sphere(radius=1.0, n=48, m=24):
    verts = [(0.0, 0.0, radius), (0.0, 0.0, -radius)]
    for j in range(1, m):
        phi = math.pi * j / m
        for i in range(n):
            th = 2 * math.pi * i / n
            verts.append((radius * math.sin(phi) * math.cos(th),
                          radius * math.sin(phi) * math.sin(th), radius * math.cos(phi)))
    ring = lambda j, i: 2 + (j - 1) * n + (i % n)
    tris = []
    for i in range(n):
        tris.append((0, ring(1, i), ring(1, i + 1)))
        tris.append((1, ring(m - 1, i + 1), ring(m - 1, i)))
    for j in range(1, m - 1):
        for i in range(n):
            a, b = ring(j, i), ring(j, i + 1)
            c, d = ring(j + 1, i + 1), ring(j + 1, i)
            tris += [(a, d, c), (a, c, b)]
    return np.array(verts), np.array(tris)


def box(lo, hi):
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    verts = [(x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
             (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1)]
    tris = [(0, 2, 1), (0, 3, 2), (4, 5, 6), (4, 6, 7), (0, 1, 5), (0, 5, 4),
            (1, 2, 6), (1, 6, 5), (2, 3, 7), (2, 7, 6), (3, 0, 4), (3, 4, 7)]
    return np.array(verts, dtype=float), np.array(tris)


def union(*parts):
    verts, tris, off = [], [], 0
    for v, t in parts:
        verts.append(v)
        tris.append(t + off)
        off += len(v)
    return np.vstack(verts), np.vstack(tris)


# -- grids ---------------------------------------------------------------------


def blob(rng, nx, ny, fill):
    """Random 4-connected silhouette grown from one seed cell."""
    m = np.zeros((nx, ny), dtype=bool)
    m[rng.integers(nx), rng.integers(ny)] = True
    target = max(1, int(round(fill * nx * ny)))
    while m.sum() < target:
        cells = np.argwhere(m)
        cx, cy = cells[rng.integers(len(cells))]
        dx, dy = ((1, 0), (-1, 0), (0, 1), (0, -1))[rng.integers(4)]
        if 0 <= cx + dx < nx and 0 <= cy + dy < ny:
            m[cx + dx, cy + dy] = True
    return m


def extruded_grid(rng, max_xy=12, max_z=12, max_cells=None):
    """A random silhouette extruded through a random number of layers."""
    while True:
        nx, ny = int(rng.integers(1, max_xy + 1)), int(rng.integers(1, max_xy + 1))
        nz = int(rng.integers(1, max_z + 1))
        sil = blob(rng, nx, ny, rng.uniform(0.3, 1.0))
        g = VoxelGrid(np.repeat(sil[:, :, None], nz, axis=2))
        if max_cells is None or g.count <= max_cells:
            return g


# -- oracles -------------------------------------------------------------------


def partitions_min_count(L, lengths):
    """Fewest parts over every multiset of ``lengths`` summing to ``L`` (enumeration)."""
    lengths = sorted(set(lengths), reverse=True)
    best = None

    def rec(i, remaining, used):
        nonlocal best
        if remaining == 0:
            best = used if best is None else min(best, used)
            return
        if i == len(lengths):
            return
        l = lengths[i]
        for k in range(remaining // l, -1, -1):
            rec(i + 1, remaining - k * l, used + k)

    rec(0, L, 0)
    return best


def all_tilings_min(grid, placements):
    """Minimum size over all exact tilings, found by exhaustive enumeration."""
    cells = list(grid.cells())
    covers = {c: [] for c in cells}
    sets = [frozenset(p.cells()) for p in placements]
    for i, s in enumerate(sets):
        for c in s:
            covers[c].append(i)
    best = math.inf
    count = 0

    def rec(covered, used):
        nonlocal best, count
        free = next((c for c in cells if c not in covered), None)
        if free is None:
            count += 1
            best = min(best, used)
            return
        for i in covers[free]:
            if not sets[i] & covered:
                rec(covered | sets[i], used + 1)

    rec(frozenset(), 0)
    return best, count


def milp_min(matrix):
    """Minimum-cardinality exact cover via scipy's MILP (HiGHS)."""
    from scipy.optimize import LinearConstraint, milp

    A = matrix.matrix.T.toarray().astype(float)  # voxels x placements
    n = A.shape[1]
    res = milp(np.ones(n), constraints=LinearConstraint(A, 1, 1),
               integrality=np.ones(n), bounds=(0, 1))
    assert res.success, res.message
    return int(round(res.fun))


def inside_by_parity(vertices, triangles, point, direction=(0.5773, 0.5774, 0.5775)):
    """Point-in-mesh by counting ray crossings (Moller-Trumbore)."""
    d = np.asarray(direction, dtype=float)
    p = np.asarray(point, dtype=float)
    hits = 0
    for a, b, c in triangles:
        v0, v1, v2 = vertices[a], vertices[b], vertices[c]
        e1, e2 = v1 - v0, v2 - v0
        h = np.cross(d, e2)
        det = e1 @ h
        if abs(det) < 1e-12:
            continue
        f = 1.0 / det
        s = p - v0
        u = f * (s @ h)
        if u < 0 or u > 1:
            continue
        q = np.cross(s, e1)
        v = f * (d @ q)
        if v < 0 or u + v > 1:
            continue
        if f * (e2 @ q) > 1e-12:
            hits += 1
    return hits % 2 == 1


def exterior_reachable(occ):
    """Empty cells reachable from outside the grid by face steps (BFS)."""
    nx, ny, nz = occ.shape
    seen = np.zeros_like(occ)
    dq = deque()
    for x, y, z in itertools.product(range(nx), range(ny), range(nz)):
        if (x in (0, nx - 1) or y in (0, ny - 1) or z in (0, nz - 1)) and not occ[x, y, z]:
            seen[x, y, z] = True
            dq.append((x, y, z))
    while dq:
        x, y, z = dq.popleft()
        for dx, dy, dz in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            a, b, c = x + dx, y + dy, z + dz
            if 0 <= a < nx and 0 <= b < ny and 0 <= c < nz and not occ[a, b, c] and not seen[a, b, c]:
                seen[a, b, c] = True
                dq.append((a, b, c))
    return seen
