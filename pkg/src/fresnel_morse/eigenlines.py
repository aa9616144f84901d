"""Eigenline space: pairs (direction, eigenline of the projected symbol).

In polar coordinates with ``w(alpha) = cos(alpha) u + sin(alpha) v`` and
``w_perp = -sin(alpha) u + cos(alpha) v``::

    f(theta, phi, alpha) = <s w, w_perp> = b cos(2 alpha) - a sin(2 alpha)
    g(theta, phi, alpha) = <s w, w>      = tr/2 + a cos(2 alpha) + b sin(2 alpha)

``E = {f = 0}`` and ``g`` restricted to ``E`` is the eigenvalue function.
Away from the multiple points the two roots of ``f`` (mod pi) are
``atan2(b, a) / 2`` (upper eigenvalue, sheet 2) and that angle plus pi/2
(lower eigenvalue, sheet 1); over a multiple point every alpha is a root.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DesingularizationError, DomainError, NotBiaxialError
from .medium import MediumKind, classify_medium
from .singularities import MultiplePoint, find_multiple_points
from .sphere import as_dielectric, check_chart, polar_frames, traceless_arrays

MEMBERSHIP_TOL = 1e-10
GRAD_STEP = 1e-6
LAGRANGE_TOL = 1e-6


class EigenlinePoint(NamedTuple):
    theta: float
    phi: float
    alpha: float

    @classmethod
    def make(cls, theta, phi, alpha) -> "EigenlinePoint":
        return cls(float(theta), float(phi), float(np.mod(alpha, np.pi)))


def fg_arrays(eps_matrix, theta, phi, alpha):
    """Vectorised ``(f, g)``; no pole check."""
    _, u, v = polar_frames(theta, phi)
    a, b, h = traceless_arrays(eps_matrix, u, v)
    c2, s2 = np.cos(2 * np.asarray(alpha)), np.sin(2 * np.asarray(alpha))
    return b * c2 - a * s2, h + a * c2 + b * s2


def eval_fg(eps, theta, phi, alpha):
    check_chart(phi)
    f, g = fg_arrays(as_dielectric(eps).matrix, theta, phi, alpha)
    if np.ndim(f) == 0:
        return float(f), float(g)
    return f, g


def eigenline_angles(a, b):
    """``(alpha_low, alpha_high)`` in [0, pi): eigenlines of the lower / upper eigenvalue."""
    hi = np.mod(0.5 * np.arctan2(b, a), np.pi)
    lo = np.mod(hi + 0.5 * np.pi, np.pi)
    return lo, hi


def grad_fg(eps, theta, phi, alpha, h: float = GRAD_STEP):
    """Central-difference gradients of ``f`` and ``g`` in ``(theta, phi, alpha)``."""
    m = as_dielectric(eps).matrix
    x = np.array([theta, phi, alpha], dtype=float)
    gf, gg = np.empty(3), np.empty(3)
    for k in range(3):
        dx = np.zeros(3)
        dx[k] = h
        fp, gp = fg_arrays(m, *(x + dx))
        fm, gm = fg_arrays(m, *(x - dx))
        gf[k] = (fp - fm) / (2 * h)
        gg[k] = (gp - gm) / (2 * h)
    return gf, gg


def lagrange_residual(grad_f, grad_g) -> float:
    """Norm of the part of ``grad g`` orthogonal to ``grad f``.

    Zero exactly when ``(grad f, grad g)`` satisfy the Lagrange condition,
    i.e. when the point is critical for ``g`` restricted to ``{f = 0}``.
    """
    nf = float(grad_f @ grad_f)
    return float(np.linalg.norm(grad_g - (grad_g @ grad_f) / nf * grad_f))


@dataclass
class FiberCircle:
    base: MultiplePoint
    alphas: np.ndarray
    f: np.ndarray
    g: np.ndarray
    grad_f: np.ndarray
    grad_g: np.ndarray
    lagrange: np.ndarray
    critical_alphas: list = field(default_factory=list)

    @property
    def min_grad_f(self) -> float:
        return float(np.linalg.norm(self.grad_f, axis=1).min())

    @property
    def max_abs_f(self) -> float:
        return float(np.abs(self.f).max())

    @property
    def smooth(self) -> bool:
        return self.min_grad_f > 1e-3


def _golden_min(fun, lo, hi, tol=1e-12, max_iter=200):
    gr = (math.sqrt(5) - 1) / 2
    c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - gr * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + gr * (hi - lo)
            fd = fun(d)
    x = 0.5 * (lo + hi)
    return x, fun(x)


def fiber_circle_analysis(eps, mp: MultiplePoint, n_alpha: int = 720, *, lagrange_tol: float = LAGRANGE_TOL) -> FiberCircle:
    """Sample ``f, g`` and their gradients around the fibre over a multiple point.

    Candidate critical points of the eigenvalue function on the fibre are the
    local minima of the Lagrange residual, refined by golden-section search;
    those with residual below ``lagrange_tol`` (relative to the tensor scale)
    are reported in ``critical_alphas``.
    """
    eps = as_dielectric(eps)
    if not mp.transversal:
        raise DesingularizationError("desingularization theorem hypotheses violated: multiple point is not transversal")
    theta, phi = mp.location
    check_chart(phi)
    alphas = np.arange(n_alpha) * (np.pi / n_alpha)
    f, g = fg_arrays(eps.matrix, theta, phi, alphas)
    gf = np.empty((n_alpha, 3))
    gg = np.empty((n_alpha, 3))
    for i, al in enumerate(alphas):
        gf[i], gg[i] = grad_fg(eps, theta, phi, al)
    lag = np.array([lagrange_residual(a, b) for a, b in zip(gf, gg)])
    scale = float(np.abs(eps.matrix).max())

    def resid(al):
        a, b = grad_fg(eps, theta, phi, al)
        return lagrange_residual(a, b)

    crit = []
    for i in range(n_alpha):
        if lag[i] <= lag[i - 1] and lag[i] <= lag[(i + 1) % n_alpha]:
            step = np.pi / n_alpha
            al, r = _golden_min(resid, alphas[i] - step, alphas[i] + step)
            if lag[i] <= r:
                al, r = alphas[i], lag[i]
            if r < lagrange_tol * scale:
                al = float(np.mod(al, np.pi))
                if np.pi - al < 1e-9:
                    al = 0.0
                crit.append(al)
    return FiberCircle(mp, alphas, f, g, gf, gg, lag, sorted(set(round(c, 9) for c in crit)))


@dataclass
class EigenlineSample:
    points: list           # EigenlinePoint
    f: np.ndarray
    g: np.ndarray
    sheet: np.ndarray      # 1 lower, 2 upper, 0 on a fibre
    fibers: list           # FiberCircle per multiple point
    multiple_points: list

    def __len__(self):
        return len(self.points)


def _require_biaxial(eps):
    if classify_medium(eps).kind is not MediumKind.BIAXIAL:
        raise NotBiaxialError("eigenline space construction needs a biaxial medium")


def sample_eigenline_space(eps, resolution: int = 32, n_alpha: int = 64) -> EigenlineSample:
    """Both eigenlines over a cell-centred ``(2r) x r`` latitude/longitude grid plus the fibres.

    Roots of ``f`` come in closed form, so every returned point satisfies
    ``|f| < 1e-10`` without iteration; the check is still applied.
    """
    eps = as_dielectric(eps)
    _require_biaxial(eps)
    if resolution < 2:
        raise DomainError("resolution must be >= 2")
    nt, nph = 2 * resolution, resolution
    th = (np.arange(nt) + 0.5) * (2 * np.pi / nt)
    ph = -np.pi / 2 + (np.arange(nph) + 0.5) * (np.pi / nph)
    T, P = np.meshgrid(th, ph, indexing="ij")
    T, P = T.ravel(), P.ravel()
    _, u, v = polar_frames(T, P)
    a, b, h = traceless_arrays(eps.matrix, u, v)
    lo, hi = eigenline_angles(a, b)
    theta = np.concatenate([T, T])
    phi = np.concatenate([P, P])
    alpha = np.concatenate([lo, hi])
    sheet = np.concatenate([np.full(T.shape, 1), np.full(T.shape, 2)])
    mps = find_multiple_points(eps)
    fibers = []
    for mp in mps:
        fc = fiber_circle_analysis(eps, mp, n_alpha=n_alpha)
        fibers.append(fc)
        theta = np.concatenate([theta, np.full(n_alpha, mp.location.theta)])
        phi = np.concatenate([phi, np.full(n_alpha, mp.location.phi)])
        alpha = np.concatenate([alpha, fc.alphas])
        sheet = np.concatenate([sheet, np.zeros(n_alpha, dtype=int)])
    f, g = fg_arrays(eps.matrix, theta, phi, alpha)
    if np.abs(f).max() >= MEMBERSHIP_TOL:
        raise DesingularizationError(f"eigenline root not on the level set: |f| = {np.abs(f).max():.3e}")
    pts = [EigenlinePoint.make(t, p, al) for t, p, al in zip(theta, phi, alpha)]
    return EigenlineSample(pts, f, g, sheet, fibers, mps)


def line_embedding(theta, phi, alpha) -> np.ndarray:
    """``(p, w w^T)`` flattened to R^9 (using the 6 independent entries); invariant under alpha -> alpha + pi."""
    p, u, v = polar_frames(theta, phi)
    ca, sa = np.cos(alpha)[..., None], np.sin(alpha)[..., None]
    w = ca * u + sa * v
    ww = np.stack([w[..., 0] ** 2, w[..., 1] ** 2, w[..., 2] ** 2,
                   math.sqrt(2) * w[..., 0] * w[..., 1], math.sqrt(2) * w[..., 0] * w[..., 2],
                   math.sqrt(2) * w[..., 1] * w[..., 2]], axis=-1)
    return np.concatenate([p, ww], axis=-1)


def connected_components(sample: EigenlineSample, radius: float | None = None) -> int:
    """Number of components of the nearest-neighbour graph on the sample.

    Points are joined when their ``(p, w w^T)`` embeddings are closer than
    ``radius`` (default: 2.5 latitude steps).
    """
    from scipy.sparse.csgraph import connected_components as cc
    from scipy.spatial import cKDTree

    th = np.array([q.theta for q in sample.points])
    ph = np.array([q.phi for q in sample.points])
    al = np.array([q.alpha for q in sample.points])
    x = line_embedding(th, ph, al)
    if radius is None:
        n_lat = len(np.unique(np.round(ph[sample.sheet != 0], 12)))
        radius = 2.5 * math.pi / max(n_lat, 1)
    tree = cKDTree(x)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    from scipy.sparse import coo_matrix

    n = len(x)
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    k, _ = cc(adj, directed=False)
    return int(k)


def eigenline_report(eps, resolution: int = 32, n_alpha: int = 64) -> dict:
    eps = as_dielectric(eps)
    s = sample_eigenline_space(eps, resolution, n_alpha)
    return {
        "epsilon": eps.matrix.tolist(),
        "points": [
            {"theta": q.theta, "phi": q.phi, "alpha": q.alpha, "f": float(fv), "g": float(gv), "sheet": int(sh)}
            for q, fv, gv, sh in zip(s.points, s.f, s.g, s.sheet)
        ],
        "fibers": [
            {"base_index": i, "min_grad_f": fc.min_grad_f, "critical_alphas": fc.critical_alphas}
            for i, fc in enumerate(s.fibers)
        ],
        "components": connected_components(s),
    }


def dump_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=False) + "\n"
