"""Sphere sampling nets: subdivided icosahedron and a padded cube-sphere grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_T = (1.0 + 5.0 ** 0.5) / 2.0
_ICO_VERTS = np.array([
    [-1, _T, 0], [1, _T, 0], [-1, -_T, 0], [1, -_T, 0],
    [0, -1, _T], [0, 1, _T], [0, -1, -_T], [0, 1, -_T],
    [_T, 0, -1], [_T, 0, 1], [-_T, 0, -1], [-_T, 0, 1],
], dtype=float)
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Icosphere:
    vertices: np.ndarray  # (n, 3) unit vectors, lexicographically sorted
    faces: np.ndarray     # (m, 3) counter-clockwise seen from outside

    @property
    def edges(self) -> np.ndarray:
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def neighbours(self) -> list[np.ndarray]:
        e = self.edges
        n = len(self.vertices)
        order = np.argsort(np.concatenate([e[:, 0], e[:, 1]]), kind="stable")
        other = np.concatenate([e[:, 1], e[:, 0]])[order]
        counts = np.bincount(np.concatenate([e[:, 0], e[:, 1]]), minlength=n)
        return np.split(other, np.cumsum(counts)[:-1])

    @property
    def spacing(self) -> float:
        """Longest edge, as a geodesic angle."""
        e = self.edges
        d = np.sum(self.vertices[e[:, 0]] * self.vertices[e[:, 1]], axis=1)
        return float(np.arccos(np.clip(d.min(), -1.0, 1.0)))


def vertex_count(subdivision: int) -> int:
    return 10 * 4 ** subdivision + 2


def icosphere(subdivision: int) -> Icosphere:
    """Subdivided icosahedron with ``10 * 4**n + 2`` vertices.

    Vertices are sorted lexicographically (x, then y, then z) so the ordering
    is a pure function of ``subdivision``.
    """
    if subdivision < 0:
        raise ValueError("subdivision must be >= 0")
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1, keepdims=True)
    faces = _ICO_FACES.copy()
    for _ in range(subdivision):
        n = len(verts)
        e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        e_sorted = np.sort(e, axis=1)
        uniq, inverse = np.unique(e_sorted, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        mids = verts[uniq[:, 0]] + verts[uniq[:, 1]]
        mids /= np.linalg.norm(mids, axis=1, keepdims=True)
        verts = np.concatenate([verts, mids])
        m = len(faces)
        ab, bc, ca = (inverse[:m] + n, inverse[m:2 * m] + n, inverse[2 * m:] + n)
        a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
        faces = np.concatenate([
            np.stack([a, ab, ca], axis=1),
            np.stack([b, bc, ab], axis=1),
            np.stack([c, ca, bc], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ])
    order = np.lexsort((verts[:, 2], verts[:, 1], verts[:, 0]))
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    verts = verts[order]
    faces = rank[faces]
    # orient faces outward
    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    flip = np.einsum("ij,ij->i", np.cross(b - a, c - a), a) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    verts.setflags(write=False)
    faces.setflags(write=False)
    return Icosphere(verts, faces)


# cube faces: centre, x-axis, y-axis (right-handed: x cross y = centre)
_CUBE = [
    (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])),
    (np.array([-1.0, 0, 0]), np.array([0, 0, 1.0]), np.array([0, 1.0, 0])),
    (np.array([0, 1.0, 0]), np.array([0, 0, 1.0]), np.array([1.0, 0, 0])),
    (np.array([0, -1.0, 0]), np.array([1.0, 0, 0]), np.array([0, 0, 1.0])),
    (np.array([0, 0, 1.0]), np.array([1.0, 0, 0]), np.array([0, 1.0, 0])),
    (np.array([0, 0, -1.0]), np.array([0, 1.0, 0]), np.array([1.0, 0, 0])),
]


@dataclass(frozen=True, eq=False)
class CubeSphereGrid:
    """Six gnomonic ``(n+1+2*pad)^2`` grids covering the sphere with overlap.

    ``points[k, i, j]`` is a unit vector; ``owned[i, j]`` marks the nodes with
    gnomonic coordinates inside ``[-1, 1]^2`` (each direction is owned by at
    least one face, edge nodes by two).  The padding supplies full 8-neighbour
    rings for every owned node.
    """

    points: np.ndarray
    owned: np.ndarray
    n: int

    @property
    def owned_count(self) -> int:
        return 6 * int(self.owned.sum())


def cube_sphere(n: int, pad: int = 2) -> CubeSphereGrid:
    h = 2.0 / n
    s = np.arange(-pad, n + pad + 1) * h - 1.0
    x, y = np.meshgrid(s, s, indexing="ij")
    pts = []
    for c, ex, ey in _CUBE:
        m = c + x[..., None] * ex + y[..., None] * ey
        pts.append(m / np.linalg.norm(m, axis=-1, keepdims=True))
    inside = (np.abs(x) <= 1.0 + 1e-12) & (np.abs(y) <= 1.0 + 1e-12)
    return CubeSphereGrid(np.stack(pts), inside, n)


# 8-neighbour ring in cyclic order
RING = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def ring_classify(values: np.ndarray, periodic_axis0: bool = False) -> np.ndarray:
    """Discrete critical-point pattern of a 2D grid function.

    Returns an int array: 0 regular, 1 local minimum, 2 saddle (4+ sign
    changes around the 8-ring), 3 local maximum, -1 undefined (border).
    Equal neighbour values are broken by index order (simulation of
    simplicity) so flat plateaus do not produce spurious patterns.
    """
    ni, nj = values.shape
    idx = np.arange(ni * nj).reshape(ni, nj)
    out = np.full(values.shape, -1, dtype=np.int8)
    if periodic_axis0:
        core_i = slice(0, ni)
    else:
        core_i = slice(1, ni - 1)
    core_j = slice(1, nj - 1)
    centre = values[core_i, core_j]
    cidx = idx[core_i, core_j]
    signs = []
    for di, dj in RING:
        if periodic_axis0:
            nb = np.roll(values, -di, axis=0)[:, 1 + dj:nj - 1 + dj]
            nbi = np.roll(idx, -di, axis=0)[:, 1 + dj:nj - 1 + dj]
        else:
            nb = values[1 + di:ni - 1 + di, 1 + dj:nj - 1 + dj]
            nbi = idx[1 + di:ni - 1 + di, 1 + dj:nj - 1 + dj]
        up = (nb > centre) | ((nb == centre) & (nbi > cidx))
        signs.append(up)
    s = np.stack(signs)
    changes = np.sum(s != np.roll(s, 1, axis=0), axis=0)
    cls = np.zeros(centre.shape, dtype=np.int8)
    cls[(changes == 0) & s[0]] = 1
    cls[(changes == 0) & ~s[0]] = 3
    cls[changes >= 4] = 2
    out[core_i, core_j] = cls
    return out
