"""Multiple points of the projected symbol: location, winding index, transversality.

A direction ``p`` is a multiple point when both eigenvalues of the projected
symbol coincide, i.e. when the traceless part ``(a, b)`` vanishes.  Zeros are
found by damped Newton on ``(a, b) = 0`` in gnomonic charts; each chart
carries a tangent frame transported from the previous iterate, so the
2-equation system is expressed in a trivialisation that is continuous along
the iteration and is defined at the poles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ChartError, DomainError, LoopThroughZeroError, NotBiaxialError, ResolutionError
from .medium import MediumKind, classify_medium
from .mesh import icosphere
from .sphere import (
    POLE_MARGIN,
    DielectricTensor,
    PolarPoint,
    as_dielectric,
    complete_frames,
    geodesic_distance,
    gnomonic,
    polar_frames,
    traceless_arrays,
    transport_frames,
)

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-12
MERGE_DIST = 1e-6
TRANSVERSAL_TOL = 1e-8
JACOBIAN_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class MultiplePoint:
    location: PolarPoint
    xyz: np.ndarray
    index: int
    transversal: bool
    jacobian_det: float
    jacobian_chart: str
    s0_norm: float

    def as_dict(self) -> dict:
        return {
            "theta": self.location.theta,
            "phi": self.location.phi,
            "xyz": [float(c) for c in self.xyz],
            "index": self.index,
            "jacobian_det": self.jacobian_det,
            "jacobian_chart": self.jacobian_chart,
            "transversal": self.transversal,
        }


class WholeSphere:
    """Multiple-point set of an isotropic medium: every direction."""

    description = "all of S^2"

    def __repr__(self):
        return "WholeSphere()"

    def __len__(self):
        raise TypeError("the multiple-point set is the whole sphere (uncountable)")


def _as_xyz(zero) -> np.ndarray:
    if isinstance(zero, MultiplePoint):
        return np.asarray(zero.xyz, dtype=float)
    if isinstance(zero, PolarPoint):
        return zero.xyz
    z = np.asarray(zero, dtype=float)
    if z.shape == (2,):
        return PolarPoint(*z).xyz
    return z / np.linalg.norm(z)


def _ab(m, q, u_ref):
    u, v = transport_frames(u_ref, q)
    a, b, _ = traceless_arrays(m, u, v)
    return np.stack([a, b], axis=-1)


def newton_zeros(eps, seeds, *, max_iter: int = NEWTON_MAX_ITER, tol: float = NEWTON_TOL, h: float = 1e-6):
    """Damped Newton on ``(a, b) = 0`` from each seed direction.

    Returns ``(points, residuals)``; residual is ``||s0||`` at the final iterate.
    """
    m = as_dielectric(eps).matrix
    q = np.array(seeds, dtype=float)
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    u_ref, _ = complete_frames(q)
    done = np.zeros(len(q), dtype=bool)
    for _ in range(max_iter):
        u, v = transport_frames(u_ref, q)
        f = _ab(m, q, u)
        fn = np.linalg.norm(f, axis=1)
        done |= fn < tol
        act = ~done
        if not act.any():
            break
        qa, ua, va, fa = q[act], u[act], v[act], f[act]
        jac = np.empty((len(qa), 2, 2))
        for k, (dx, dy) in enumerate(((h, 0.0), (0.0, h))):
            fp = _ab(m, gnomonic(qa, ua, va, dx, dy), ua)
            fm = _ab(m, gnomonic(qa, ua, va, -dx, -dy), ua)
            jac[:, :, k] = (fp - fm) / (2 * h)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        safe = np.abs(det) > 1e-300
        step = np.zeros_like(fa)
        inv_det = np.where(safe, 1.0 / np.where(safe, det, 1.0), 0.0)
        step[:, 0] = -(jac[:, 1, 1] * fa[:, 0] - jac[:, 0, 1] * fa[:, 1]) * inv_det
        step[:, 1] = -(-jac[:, 1, 0] * fa[:, 0] + jac[:, 0, 0] * fa[:, 1]) * inv_det
        # cap the chart step; gnomonic coordinates blow up near 90 degrees
        big = np.linalg.norm(step, axis=1)
        step *= np.minimum(1.0, 0.5 / np.maximum(big, 1e-300))[:, None]
        t = np.ones(len(qa))
        fa_n = np.linalg.norm(fa, axis=1)
        accepted = np.zeros(len(qa), dtype=bool)
        q_new = qa.copy()
        for _ in range(30):
            trial = gnomonic(qa, ua, va, t * step[:, 0], t * step[:, 1])
            ft = np.linalg.norm(_ab(m, trial, ua), axis=1)
            ok = (ft < fa_n) & ~accepted
            q_new[ok] = trial[ok]
            accepted |= ok
            if accepted.all():
                break
            t = np.where(accepted, t, 0.5 * t)
        stalled = ~accepted
        idx = np.flatnonzero(act)
        q[idx] = q_new
        u_ref[idx] = ua
        # no decrease possible: we are at roundoff level (or stuck); stop this seed
        done[idx[stalled]] = True
    u, v = transport_frames(u_ref, q)
    res = np.linalg.norm(_ab(m, q, u), axis=1)
    return q, res


def merge_directions(points, residuals, dist: float = MERGE_DIST):
    """Greedy deduplication; the lowest-residual representative wins."""
    order = np.lexsort((points[:, 2], points[:, 1], points[:, 0], residuals))
    kept: list[int] = []
    for i in order:
        if all(geodesic_distance(points[i], points[j]) > dist for j in kept):
            kept.append(i)
    return points[kept], residuals[kept]


def _polar_ok(p) -> bool:
    return abs(math.asin(max(-1.0, min(1.0, p[2])))) < math.pi / 2 - 1e-6


def find_multiple_points(eps, subdivision: int = 3, *, zero_tol: float = 1e-10):
    """Zeros of the traceless projected symbol.

    Isotropic media give :class:`WholeSphere`; uniaxial media give the two
    (non-transversal) directions along the distinct principal axis; biaxial
    media are scanned from every vertex of an icosphere and refined by Newton.
    """
    eps = as_dielectric(eps)
    medium = classify_medium(eps)
    if medium.kind is MediumKind.ISOTROPIC:
        return WholeSphere()
    if medium.kind is MediumKind.UNIAXIAL:
        w = eps.eigenvalues
        distinct = 0 if abs(w[1] - w[2]) <= abs(w[0] - w[1]) else 2
        axis = eps.principal_axes[:, distinct]
        pts = np.stack([axis, -axis])
    else:
        seeds = icosphere(subdivision).vertices
        pts, res = newton_zeros(eps, seeds)
        good = res < zero_tol
        pts, res = merge_directions(pts[good], res[good])
    pts = pts[np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))]
    out = []
    for p in pts:
        out.append(_describe_zero(eps, p))
    out.sort(key=lambda mp: (round(mp.location.theta, 9), round(mp.location.phi, 9)))
    return out


def _describe_zero(eps: DielectricTensor, p) -> MultiplePoint:
    u, v = complete_frames(p)
    a, b, _ = traceless_arrays(eps.matrix, u, v)
    chart = "polar" if _polar_ok(p) else "gnomonic"
    det, transversal = transversality_jacobian(eps, p, chart=chart)
    index = winding_index(eps, p, loop_radius=1e-3)
    return MultiplePoint(
        location=PolarPoint.from_xyz(p),
        xyz=np.array(p),
        index=index,
        transversal=transversal,
        jacobian_det=det,
        jacobian_chart=chart,
        s0_norm=float(math.hypot(a, b)),
    )


def optic_axis_angle(eps) -> float:
    """Latitude ``phi_m`` of the zeros ``(0, +/-phi_m)``, ``(pi, +/-phi_m)``.

    Requires a diagonal tensor with ``eps_1 < eps_2 < eps_3`` along x, y, z.
    """
    eps = as_dielectric(eps)
    if not eps.is_diagonal:
        raise DomainError("optic_axis_angle expects a diagonal tensor; rotate to principal axes first")
    e1, e2, e3 = eps.diagonal_values
    if not (e1 < e2 < e3):
        if e1 == e2 or e2 == e3 or e1 == e3:
            raise NotBiaxialError("not biaxial: principal permittivities must be distinct")
        raise DomainError("optic_axis_angle expects eps_1 < eps_2 < eps_3 along x, y, z")
    return math.atan(math.sqrt((e3 - e2) / (e2 - e1)))


def loop_winding_number(a, b, *, check: bool = True) -> int:
    """Winding number of the closed sampled curve ``(a_k, b_k)`` about the origin."""
    ang = np.arctan2(b, a)
    d = np.diff(np.append(ang, ang[0]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    if check and np.abs(d).max() > np.pi / 2:
        raise ResolutionError("loop sampling too coarse: angular increment exceeds pi/2")
    total = d.sum() / (2 * np.pi)
    k = int(round(total))
    if abs(total - k) > 1e-3:
        raise ResolutionError(f"accumulated angle {total:.6f} turns is not an integer")
    return k


def planar_winding_index(field, center=(0.0, 0.0), radius: float = 1e-2, n_samples: int = 256) -> int:
    """Index of a planar vector field ``field(x, y) -> (a, b)`` at ``center``."""
    t = 2 * np.pi * np.arange(n_samples) / n_samples
    x = center[0] + radius * np.cos(t)
    y = center[1] + radius * np.sin(t)
    a, b = field(x, y)
    a, b = np.asarray(a, float), np.asarray(b, float)
    if np.hypot(a, b).min() == 0.0:
        raise LoopThroughZeroError("field vanishes on the loop")
    return loop_winding_number(a, b)


def winding_index(eps, zero, loop_radius: float = 1e-3, n_samples: int = 512) -> int:
    """Index of the traceless symbol at an isolated zero.

    The loop is the geodesic circle of the given radius, traversed
    counter-clockwise with respect to the outward normal; ``(a, b)`` is read in
    the tangent frame transported from the centre, a trivialisation that is
    continuous over the enclosed disc.  The result is recomputed at half the
    radius and must agree.
    """
    if n_samples < 256:
        raise ValueError("winding_index needs at least 256 loop samples")
    m = as_dielectric(eps).matrix
    p = _as_xyz(zero)
    u0, v0 = complete_frames(p)
    scale = max(1.0, float(np.abs(m).max()))

    def wind(r):
        t = 2 * np.pi * np.arange(n_samples) / n_samples
        q = math.cos(r) * p + math.sin(r) * (np.cos(t)[:, None] * u0 + np.sin(t)[:, None] * v0)
        u, v = transport_frames(u0, q)
        a, b, _ = traceless_arrays(m, u, v)
        if np.hypot(a, b).min() <= 1e-13 * scale:
            raise LoopThroughZeroError(f"traceless symbol vanishes on the loop of radius {r}")
        return loop_winding_number(a, b)

    k = wind(loop_radius)
    if wind(loop_radius / 2) != k:
        raise ResolutionError("winding index changes under radius halving; zero not isolated at this scale")
    return k


def transversality_jacobian(eps, zero, *, chart: str = "polar", h: float = JACOBIAN_STEP):
    """Determinant of ``D(a, b)`` at a zero and the transversality verdict.

    ``chart="polar"`` differentiates with respect to ``(theta, phi)`` in the
    polar frame; ``chart="gnomonic"`` uses orthonormal tangent coordinates at
    the zero (they differ by the factor ``cos(phi)``).  Central differences
    with one Richardson step.
    """
    m = as_dielectric(eps).matrix
    p = _as_xyz(zero)
    if chart == "polar":
        theta, phi = PolarPoint.from_xyz(p)
        if abs(phi) >= math.pi / 2 - POLE_MARGIN:
            raise ChartError("zero sits at a pole; use chart='gnomonic'")

        def field(dx, dy):
            _, u, v = polar_frames(theta + dx, phi + dy)
            a, b, _ = traceless_arrays(m, u, v)
            return np.array([a, b])
    elif chart == "gnomonic":
        u0, v0 = complete_frames(p)

        def field(dx, dy):
            q = gnomonic(p, u0, v0, dx, dy)
            u, v = transport_frames(u0, q)
            a, b, _ = traceless_arrays(m, u, v)
            return np.array([a, b])
    else:
        raise ValueError(f"unknown chart {chart!r}")

    def central(step):
        cols = []
        for dx, dy in ((step, 0.0), (0.0, step)):
            cols.append((field(dx, dy) - field(-dx, -dy)) / (2 * step))
        return np.stack(cols, axis=1)

    jac = (4.0 * central(h / 2) - central(h)) / 3.0
    det = float(np.linalg.det(jac))
    return det, abs(det) > TRANSVERSAL_TOL


def total_index_check(eps) -> int:
    eps = as_dielectric(eps)
    if classify_medium(eps).kind is not MediumKind.BIAXIAL:
        raise NotBiaxialError("total index check needs a biaxial medium")
    return sum(mp.index for mp in find_multiple_points(eps))


def singularity_report(eps) -> dict:
    eps = as_dielectric(eps)
    medium = classify_medium(eps)
    zeros = find_multiple_points(eps)
    report = {
        "epsilon": eps.matrix.tolist(),
        "class": medium.kind.value,
    }
    if isinstance(zeros, WholeSphere):
        report.update(zeros=zeros.description, total_index=None)
    else:
        report.update(zeros=[z.as_dict() for z in zeros], total_index=sum(z.index for z in zeros))
    return report
