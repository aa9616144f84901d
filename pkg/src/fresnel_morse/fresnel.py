"""Two-sheeted Fresnel surface: sampling, touching directions, gap order, mesh export.

Two radius laws are available per direction ``xi``:

``method="projected"``
    ``lambda_i(xi) ** -0.5`` from the eigenvalues of ``eps`` restricted to
    ``xi^perp``.  This is the classical two-sheet construction driven by the
    projected symbol and is the default.

``method="dispersion"``
    the positive roots ``tau`` of the reduced Maxwell quartic ``q(xi, tau)``,
    i.e. ``mu_i(xi) ** 0.5`` with ``mu_i`` the eigenvalues of ``eps^-1``
    restricted to ``xi^perp``.  Only these points annihilate ``det Q``.

Both laws agree on the principal axes and for isotropic media; for a
uniaxial or biaxial medium they differ elsewhere (the projected law is the
polar reciprocal surface of the dispersion law).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError
from .maxwell import adjugate
from .medium import CLASSIFY_RTOL, MediumClass, MediumKind, classify_medium  # noqa: F401  (re-export)
from .mesh import Icosphere, icosphere
from .sphere import DielectricTensor, as_dielectric, complete_frames, eigenvalue_arrays

SCHEMA_VERSION = 1
METHODS = ("projected", "dispersion")
FORMATS = ("obj", "csv", "json")


@dataclass(frozen=True, eq=False)
class FresnelSample:
    direction: np.ndarray
    sheet: int
    radius: float

    @property
    def point(self) -> np.ndarray:
        return self.radius * np.asarray(self.direction)


@dataclass(frozen=True, eq=False)
class FresnelSurface:
    """Radii on an icosphere net; ``radii[:, 0]`` is the outer sheet 1."""

    epsilon: DielectricTensor
    medium: MediumClass
    mesh: Icosphere
    radii: np.ndarray
    method: str = "projected"

    @property
    def directions(self) -> np.ndarray:
        return self.mesh.vertices

    @property
    def samples(self) -> list[FresnelSample]:
        out = []
        for d, (r1, r2) in zip(self.directions, self.radii):
            out.append(FresnelSample(d, 1, float(r1)))
            out.append(FresnelSample(d, 2, float(r2)))
        return out

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return 2 * len(self.directions)


def sheet_radii(eps, directions, method: str = "projected") -> np.ndarray:
    """``(n, 2)`` radii, outer sheet first, for unit ``directions``."""
    eps = as_dielectric(eps)
    d = np.asarray(directions, dtype=float)
    if method == "projected":
        lam1, lam2 = eigenvalue_arrays(eps.matrix, d)
        return np.stack([lam1 ** -0.5, lam2 ** -0.5], axis=-1)
    if method == "dispersion":
        # tau^2 roots of q are the projected eigenvalues of eps^-1; this avoids
        # the cancellation of the quartic discriminant near touching points
        mu1, mu2 = eigenvalue_arrays(np.linalg.inv(eps.matrix), d)
        return np.stack([np.sqrt(mu2), np.sqrt(mu1)], axis=-1)
    raise UsageError(f"unknown radius method {method!r}; expected one of {METHODS}")


def sample_surface(eps, subdivision: int, method: str = "projected") -> FresnelSurface:
    if subdivision < 1:
        raise DomainError("subdivision must be >= 1")
    eps = as_dielectric(eps)
    mesh = icosphere(subdivision)
    radii = sheet_radii(eps, mesh.vertices, method)
    radii.setflags(write=False)
    return FresnelSurface(eps, classify_medium(eps), mesh, radii, method)


def dispersion_residuals(surface: FresnelSurface) -> np.ndarray:
    """``|q(xi, r)| / (|c0| + |c2| r^2 + c4 r^4)`` for every sample, shape ``(n, 2)``."""
    m = surface.epsilon.matrix
    adj = adjugate(m)
    d = surface.directions
    c0 = np.einsum("ni,ij,nj->n", d, m, d)
    c2 = np.einsum("ni,ij,nj->n", d, adj, d) - np.trace(adj)
    c4 = np.linalg.det(m)
    t2 = surface.radii ** 2
    q = c0[:, None] + c2[:, None] * t2 + c4 * t2 * t2
    scale = np.abs(c0)[:, None] + np.abs(c2)[:, None] * t2 + c4 * t2 * t2
    return np.abs(q) / scale


def touching_directions(eps):
    """Directions where the two sheets meet (the multiple points)."""
    from .singularities import find_multiple_points

    return find_multiple_points(eps)


@dataclass(frozen=True)
class GapFit:
    exponent: float
    ray_exponents: tuple


def radial_gap(eps, directions, method: str = "projected") -> np.ndarray:
    r = sheet_radii(eps, directions, method)
    return r[..., 0] - r[..., 1]


def gap_exponent(eps, direction, distances=None, n_rays: int = 8, method: str = "projected") -> GapFit:
    """Order of contact of the sheets at ``direction``.

    The radial gap is sampled along ``n_rays`` geodesics leaving ``direction``
    at distances ``1e-2 ... 1e-4``; the exponent is the least-squares slope of
    ``log(gap)`` against ``log(distance)``, averaged over rays.
    """
    if distances is None:
        distances = np.logspace(-2, -4, 9)
    t = np.asarray(distances, dtype=float)
    p = np.asarray(direction, dtype=float)
    p = p / np.linalg.norm(p)
    u, v = complete_frames(p)
    slopes = []
    for k in range(n_rays):
        # irrational offset keeps rays off symmetry planes
        beta = 2 * math.pi * (k + 0.1234) / n_rays
        tdir = math.cos(beta) * u + math.sin(beta) * v
        q = np.cos(t)[:, None] * p + np.sin(t)[:, None] * tdir
        gap = radial_gap(eps, q, method)
        slopes.append(float(np.polyfit(np.log(t), np.log(np.abs(gap)), 1)[0]))
    return GapFit(float(np.mean(slopes)), tuple(slopes))


def _epsilon_json(eps: DielectricTensor) -> dict:
    if eps.is_diagonal:
        return {"epsilon": [float(x) for x in eps.diagonal_values]}
    return {"epsilon": [float(x) for x in eps.eigenvalues], "epsilon_matrix": eps.matrix.tolist()}


def _as_sample_list(samples):
    if isinstance(samples, FresnelSurface):
        return samples.samples
    return list(samples)


def _render_csv(samples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dir_x", "dir_y", "dir_z", "sheet", "radius", "x", "y", "z"])
    for s in samples:
        d = [float(c) for c in s.direction]
        pt = [float(c) for c in s.point]
        w.writerow([repr(d[0]), repr(d[1]), repr(d[2]), s.sheet, repr(float(s.radius)),
                     repr(pt[0]), repr(pt[1]), repr(pt[2])])
    return buf.getvalue()


def _render_json(samples, eps, medium) -> str:
    doc = {"schema_version": SCHEMA_VERSION}
    if eps is not None:
        doc.update(_epsilon_json(eps))
    doc["class"] = medium.kind.value if medium is not None else None
    doc["samples"] = [
        {"dir": [float(c) for c in s.direction], "sheet": int(s.sheet), "radius": float(s.radius)}
        for s in samples
    ]
    return json.dumps(doc, indent=1) + "\n"


def _triangulation(directions):
    from scipy.spatial import ConvexHull

    hull = ConvexHull(directions)
    faces = hull.simplices.copy()
    a, b, c = (directions[faces[:, i]] for i in range(3))
    flip = np.einsum("ij,ij->i", np.cross(b - a, c - a), a) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return faces[np.lexsort(faces.T[::-1])]


def _render_obj(samples, faces=None) -> str:
    by_sheet = {1: [], 2: []}
    for s in samples:
        by_sheet[int(s.sheet)].append(s)
    n = len(by_sheet[1])
    if n != len(by_sheet[2]) or n == 0:
        raise UsageError("OBJ export needs both sheets sampled on the same directions")
    dirs = np.array([s.direction for s in by_sheet[1]], dtype=float)
    if faces is None:
        faces = _triangulation(dirs)
    lines = []
    for sheet, offset in ((1, 0), (2, n)):
        lines.append(f"o sheet{sheet}")
        for s in by_sheet[sheet]:
            x, y, z = (float(c) for c in s.point)
            lines.append(f"v {x!r} {y!r} {z!r}")
        for f in faces:
            lines.append("f {} {} {}".format(*(int(i) + 1 + offset for i in f)))
    return "\n".join(lines) + "\n"


def render_mesh(samples, fmt: str) -> str:
    if fmt not in FORMATS:
        raise UsageError(f"unknown export format {fmt!r}; expected one of {FORMATS}")
    surface = samples if isinstance(samples, FresnelSurface) else None
    items = _as_sample_list(samples)
    if not items:
        raise DomainError("nothing to export: sample list is empty")
    if fmt == "csv":
        return _render_csv(items)
    if fmt == "json":
        eps = surface.epsilon if surface else None
        medium = surface.medium if surface else None
        return _render_json(items, eps, medium)
    faces = surface.mesh.faces if surface else None
    return _render_obj(items, faces)


def export_mesh(samples, fmt: str, path) -> str:
    """Write samples as OBJ, CSV or JSON; returns the path written.

    Unwritable paths raise ``OSError``; unknown formats raise ``UsageError``.
    """
    text = render_mesh(samples, fmt)
    path = os.fspath(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def load_json(path):
    """Read a JSON export back: ``(epsilon values or None, class, samples)``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    samples = [FresnelSample(np.array(s["dir"], dtype=float), int(s["sheet"]), float(s["radius"]))
               for s in doc["samples"]]
    return doc.get("epsilon"), doc.get("class"), samples
