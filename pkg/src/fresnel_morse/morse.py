"""Critical points of the eigenvalue functions and Morse counts on the eigenline surface.

Two independent enumerations are provided.

Sheet route
    Newton on the gradient of ``lambda_i`` (optionally tilted) in gnomonic
    charts of the sphere, seeded from an icosphere with discs around the
    multiple points removed.  The gradient is analytic (envelope formula
    ``grad lambda_i = -2 <p, eps w_i> w_i``); Hessians are Richardson central
    differences of the chart gradient.

Eigenline route
    Lagrange-Newton for ``g`` on ``{f = 0}`` in exponential charts of SO(3),
    where a point of the eigenline surface is the frame ``R = [p, w, p x w]``
    and ``f = <w, eps (p x w)>``, ``g = <w, eps w>``.  All derivatives are
    analytic; the Hessian of the Lagrangian is projected on ``ker df``.
    The charts are global, so fibres over multiple points need no special
    handling.

A *tilt* ``delta <c, p>`` may be added to the eigenvalue function.  The pure
eigenvalue function has degenerate critical circles (the great circles of
directions orthogonal to a principal axis carry a constant eigenvalue), so a
small generic tilt is how the Euler characteristic is read off by a Morse count.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotBiaxialError
from .medium import MediumKind, classify_medium
from .mesh import RING, cube_sphere, icosphere, ring_classify
from .singularities import find_multiple_points
from .sphere import (
    PolarPoint,
    as_dielectric,
    complete_frames,
    eigenvalue_arrays,
    geodesic_distance,
    gnomonic,
    traceless_arrays,
    transport_frames,
)

log = logging.getLogger(__name__)

GRAD_TOL = 1e-9
NONDEGENERATE_TOL = 1e-7
DISC_RADIUS = 0.05
ANNULUS_RADIUS = 0.02
MERGE_SHEET = 1e-5
HESS_STEP = 1e-4


@dataclass(frozen=True)
class Tilt:
    """Linear perturbation ``delta * <c, p>`` of the eigenvalue function."""

    delta: float = 0.0
    c: tuple = (0.0, 0.0, 0.0)

    @classmethod
    def generic(cls, delta: float = 0.02) -> "Tilt":
        c = np.array([0.31, 0.52, 0.79])
        c /= np.linalg.norm(c)
        return cls(float(delta), tuple(float(x) for x in c))

    @property
    def vector(self) -> np.ndarray:
        return self.delta * np.asarray(self.c, dtype=float)

    def __bool__(self):
        return self.delta != 0.0


NO_TILT = Tilt()


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    p: np.ndarray
    w: np.ndarray | None       # eigenline direction (None for sheet-only results)
    sheet: int                 # 1 lower, 2 upper, 0 on a fibre
    value: float
    morse_index: int
    hessian_eigs: tuple
    nondegenerate: bool
    grad_norm: float

    @property
    def location(self) -> PolarPoint:
        return PolarPoint.from_xyz(self.p)

    @property
    def alpha(self) -> float:
        if self.w is None:
            return float("nan")
        u, v = complete_frames(self.p)
        return float(np.mod(math.atan2(self.w @ v, self.w @ u), math.pi))

    def as_dict(self) -> dict:
        loc = self.location
        return {
            "theta": loc.theta,
            "phi": loc.phi,
            "alpha": self.alpha,
            "sheet": self.sheet,
            "value": self.value,
            "index": self.morse_index,
            "hessian_eigs": list(self.hessian_eigs),
        }


def _require_biaxial(eps):
    if classify_medium(eps).kind is not MediumKind.BIAXIAL:
        raise NotBiaxialError("Morse analysis needs a biaxial medium (three distinct permittivities)")


def _round(x, nd=10):
    # stable decimal output; kills -0.0 and last-bit noise in reports
    r = round(float(x), nd)
    return 0.0 if r == 0 else r


# ---------------------------------------------------------------- sheet route

def _sheet_w(m, p, sheet):
    u, v = complete_frames(p)
    a, b, _ = traceless_arrays(m, u, v)
    hi = 0.5 * np.arctan2(b, a)
    al = hi + (0.5 * np.pi if sheet == 1 else 0.0)
    return np.cos(al)[..., None] * u + np.sin(al)[..., None] * v


def sheet_value(eps_matrix, p, sheet, tilt=NO_TILT):
    lam = eigenvalue_arrays(eps_matrix, p)[sheet - 1]
    return lam + p @ tilt.vector


def sheet_gradient(eps_matrix, p, sheet, tilt=NO_TILT):
    """Ambient gradient (tangent to the sphere) of the tilted eigenvalue."""
    w = _sheet_w(eps_matrix, p, sheet)
    pew = np.sum((p @ eps_matrix) * w, axis=-1)
    c = tilt.vector
    return -2.0 * pew[..., None] * w + (c - (p @ c)[..., None] * p)


def _chart_gradient(m, p, u, v, x, y, sheet, tilt):
    q = gnomonic(p, u, v, x, y)
    gr = sheet_gradient(m, q, sheet, tilt)
    nrm = np.linalg.norm(p + np.asarray(x)[..., None] * u + np.asarray(y)[..., None] * v, axis=-1)
    # d q / dx = (u - <q, u> q) / |m|; gr is tangent so the q-term drops
    gx = np.sum(gr * u, axis=-1) / nrm
    gy = np.sum(gr * v, axis=-1) / nrm
    return np.stack([gx, gy], axis=-1)


def _chart_hessian(m, p, u, v, sheet, tilt, h=HESS_STEP):
    def central(s):
        cols = []
        for dx, dy in ((s, 0.0), (0.0, s)):
            gp = _chart_gradient(m, p, u, v, np.full(len(p), dx), np.full(len(p), dy), sheet, tilt)
            gm = _chart_gradient(m, p, u, v, np.full(len(p), -dx), np.full(len(p), -dy), sheet, tilt)
            cols.append((gp - gm) / (2 * s))
        return np.stack(cols, axis=-1)

    hs = (4.0 * central(h / 2) - central(h)) / 3.0
    return 0.5 * (hs + np.swapaxes(hs, -1, -2))


def _disc_mask(p, centres, radius):
    if len(centres) == 0:
        return np.zeros(len(p), dtype=bool)
    d = geodesic_distance(p[:, None, :], centres[None, :, :])
    return (d < radius).any(axis=1)


def _multiple_xyz(eps):
    return np.array([mp.xyz for mp in find_multiple_points(eps)])


def sheet_newton(eps, seeds, sheet, tilt=NO_TILT, max_iter: int = 60):
    """Batched damped Newton on the chart gradient; returns ``(points, grad_norms)``."""
    m = as_dielectric(eps).matrix
    p = np.array(seeds, dtype=float)
    zeros = np.zeros(len(p))
    scale = max(1.0, float(np.abs(m).max()))
    for _ in range(max_iter):
        u, v = complete_frames(p)
        g0 = _chart_gradient(m, p, u, v, zeros, zeros, sheet, tilt)
        gn = np.linalg.norm(g0, axis=1)
        act = gn > 1e-13 * scale
        if not act.any():
            break
        pa, ua, va, ga, gna = p[act], u[act], v[act], g0[act], gn[act]
        hs = _chart_hessian(m, pa, ua, va, sheet, tilt)
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(hs, rcond=1e-12), ga)
        big = np.linalg.norm(step, axis=1)
        step *= np.minimum(1.0, 0.2 / np.maximum(big, 1e-300))[:, None]
        t = np.ones(len(pa))
        new = pa.copy()
        ok_all = np.zeros(len(pa), dtype=bool)
        for _ in range(20):
            trial = gnomonic(pa, ua, va, t * step[:, 0], t * step[:, 1])
            ut, vt = complete_frames(trial)
            gt = np.linalg.norm(_chart_gradient(m, trial, ut, vt, np.zeros(len(pa)), np.zeros(len(pa)), sheet, tilt), axis=1)
            ok = (gt < gna) & ~ok_all
            new[ok] = trial[ok]
            ok_all |= ok
            if ok_all.all():
                break
            t = np.where(ok_all, t, 0.5 * t)
        # Newton heads to any critical point; when it cannot decrease |grad|
        # take a small gradient step in a descent or ascent direction instead
        stuck = ~ok_all
        if stuck.any():
            gdir = ga[stuck] / gna[stuck][:, None]
            new[stuck] = gnomonic(pa[stuck], ua[stuck], va[stuck], -1e-3 * gdir[:, 0], -1e-3 * gdir[:, 1])
        p[act] = new
    u, v = complete_frames(p)
    gn = np.linalg.norm(_chart_gradient(m, p, u, v, zeros, zeros, sheet, tilt), axis=1)
    return p, gn


def _merge_points(points, keys, dist):
    """Greedy merge in a fixed order; ``keys`` sorts candidates (best first)."""
    order = np.lexsort(keys)
    kept = []
    for i in order:
        if all(np.linalg.norm(points[i] - points[j]) > dist for j in kept):
            kept.append(i)
    return np.array(kept, dtype=int)


def _classify(hess_eigs):
    eig = np.sort(np.asarray(hess_eigs))
    nondeg = bool(np.all(np.abs(eig) > NONDEGENERATE_TOL))
    return int(np.sum(eig < 0)), tuple(float(x) for x in eig), nondeg


def critical_points_sheet(eps, sheet: int, tilt=NO_TILT, *, subdivision: int = 4,
                          disc_radius: float = DISC_RADIUS, seeds=None) -> list[CriticalPoint]:
    """Critical points of ``lambda_sheet`` (+ tilt) on the sphere minus discs around the multiple points."""
    eps = as_dielectric(eps)
    _require_biaxial(eps)
    if sheet not in (1, 2):
        raise ValueError("sheet must be 1 or 2")
    m = eps.matrix
    centres = _multiple_xyz(eps)
    if seeds is None:
        seeds = icosphere(subdivision).vertices
        seeds = seeds[~_disc_mask(seeds, centres, disc_radius)]
    pts, gn = sheet_newton(eps, seeds, sheet, tilt)
    good = gn < GRAD_TOL
    inside = _disc_mask(pts, centres, disc_radius)
    if (good & inside).any():
        log.info("sheet %d: %d seeds converged into excluded discs; left to the fibre analysis",
                 sheet, int((good & inside).sum()))
    pts, gn = pts[good & ~inside], gn[good & ~inside]
    if len(pts) == 0:
        return []
    keep = _merge_points(pts, (pts[:, 2], pts[:, 1], pts[:, 0], np.round(gn, 14)), MERGE_SHEET)
    pts, gn = pts[keep], gn[keep]
    u, v = complete_frames(pts)
    hs = _chart_hessian(m, pts, u, v, sheet, tilt)
    vals = sheet_value(m, pts, sheet, tilt)
    w = _sheet_w(m, pts, sheet)
    out = []
    for p, wi, val, hsi, g in zip(pts, w, vals, hs, gn):
        idx, eig, nd = _classify(np.linalg.eigvalsh(hsi))
        out.append(CriticalPoint(p, wi, sheet, float(val), idx, eig, nd, float(g)))
    return _sorted_cps(out)


def annulus_sweep(eps, sheet: int, tilt=NO_TILT, inner: float = ANNULUS_RADIUS,
                  outer: float = DISC_RADIUS, n_rings: int = 6, n_per_ring: int = 48):
    """Re-seed the annulus ``inner <= d < outer`` around each multiple point.

    Returns the critical points found with distance in that annulus (they
    would have been hidden by the excluded discs).
    """
    eps = as_dielectric(eps)
    centres = _multiple_xyz(eps)
    seeds = []
    for c in centres:
        u, v = complete_frames(c)
        for r in np.linspace(inner, outer, n_rings):
            t = 2 * np.pi * (np.arange(n_per_ring) + 0.5) / n_per_ring
            seeds.append(math.cos(r) * c + math.sin(r) * (np.cos(t)[:, None] * u + np.sin(t)[:, None] * v))
    seeds = np.concatenate(seeds)
    cps = critical_points_sheet(eps, sheet, tilt, disc_radius=inner, seeds=seeds)
    return [cp for cp in cps if _disc_mask(cp.p[None], centres, outer)[0]]


# ------------------------------------------------------------ eigenline route

_E = np.eye(3)
_K = [-np.array([[0.0, -e[2], e[1]], [e[2], 0.0, -e[0]], [-e[1], e[0], 0.0]]) for e in _E]


def so3_exp(omega):
    """Rodrigues formula, batched over leading axes."""
    omega = np.asarray(omega, dtype=float)
    th = np.linalg.norm(omega, axis=-1)
    k = np.zeros(omega.shape + (3,))
    k[..., 0, 1], k[..., 0, 2] = -omega[..., 2], omega[..., 1]
    k[..., 1, 0], k[..., 1, 2] = omega[..., 2], -omega[..., 0]
    k[..., 2, 0], k[..., 2, 1] = -omega[..., 1], omega[..., 0]
    small = th < 1e-8
    ths = np.where(small, 1.0, th)
    a = np.where(small, 1.0 - th ** 2 / 6.0, np.sin(ths) / ths)
    b = np.where(small, 0.5 - th ** 2 / 24.0, (1.0 - np.cos(ths)) / ths ** 2)
    return np.eye(3) + a[..., None, None] * k + b[..., None, None] * (k @ k)


def bilinear_derivs(ep, i, j):
    """Value, gradient and Hessian at ``omega = 0`` of ``(R e^omega e_i)^T eps (R e^omega e_j)``.

    ``ep`` is ``R^T eps R`` (batched).
    """
    vi, vj = ep[..., :, i], ep[..., :, j]
    ki, kj = _K[i], _K[j]
    grad = vj @ ki + vi @ kj          # K_i^T v_j + K_j^T v_i
    hess = ki.T @ ep @ kj + kj.T @ ep @ ki
    ei, ej = _E[i], _E[j]
    sym = (np.einsum("a,...b->...ab", ei, vj) + np.einsum("...a,b->...ab", vj, ei)
           + np.einsum("a,...b->...ab", ej, vi) + np.einsum("...a,b->...ab", vi, ej))
    hess = hess + 0.5 * sym - 2.0 * ep[..., i, j][..., None, None] * np.eye(3)
    return ep[..., i, j], grad, hess


def linear_derivs(cp):
    """Value, gradient, Hessian of ``c^T R e^omega e_0`` with ``cp = R^T c``."""
    grad = cp @ _K[0]
    hess = 0.5 * (np.einsum("...a,b->...ab", cp, _E[0]) + np.einsum("a,...b->...ab", _E[0], cp))
    hess = hess - cp[..., 0][..., None, None] * np.eye(3)
    return cp[..., 0], grad, hess


def _frames(p, w):
    return np.stack([p, w, np.cross(p, w)], axis=-1)


def lagrange_system(eps_matrix, frames, tilt=NO_TILT):
    """``(f, grad f, hess f, F, grad F, hess F)`` at the given frames."""
    ep = np.swapaxes(frames, -1, -2) @ eps_matrix @ frames
    f, gf, hf = bilinear_derivs(ep, 1, 2)
    g, gg, hg = bilinear_derivs(ep, 1, 1)
    if tilt:
        cp = tilt.vector @ frames
        t, gt, ht = linear_derivs(cp)
        g, gg, hg = g + t, gg + gt, hg + ht
    return f, gf, hf, g, gg, hg


def eigenline_newton(eps, frames, tilt=NO_TILT, max_iter: int = 80):
    """Batched Lagrange-Newton on ``[grad F + mu grad f; f] = 0``."""
    m = as_dielectric(eps).matrix
    r = np.array(frames, dtype=float)
    scale = max(1.0, float(np.abs(m).max()))
    n = len(r)

    def residual(rr):
        f, gf, _, _, gg, _ = lagrange_system(m, rr, tilt)
        mu = -np.sum(gg * gf, axis=-1) / np.sum(gf * gf, axis=-1)
        res = gg + mu[:, None] * gf
        return np.sqrt(np.sum(res * res, axis=-1) + f * f)

    for _ in range(max_iter):
        f, gf, hf, _, gg, hg = lagrange_system(m, r, tilt)
        nf2 = np.sum(gf * gf, axis=-1)
        mu = -np.sum(gg * gf, axis=-1) / nf2
        res = gg + mu[:, None] * gf
        rn = np.sqrt(np.sum(res * res, axis=-1) + f * f)
        act = rn > 1e-14 * scale
        if not act.any():
            break
        kkt = np.zeros((n, 4, 4))
        kkt[:, :3, :3] = hg + mu[:, None, None] * hf
        kkt[:, :3, 3] = gf
        kkt[:, 3, :3] = gf
        rhs = -np.concatenate([res, f[:, None]], axis=1)
        sol = np.einsum("nij,nj->ni", np.linalg.pinv(kkt[act], rcond=1e-13), rhs[act])
        step = sol[:, :3]
        big = np.linalg.norm(step, axis=1)
        step *= np.minimum(1.0, 0.3 / np.maximum(big, 1e-300))[:, None]
        ra = r[act]
        t = np.ones(len(ra))
        rna = rn[act]
        new = ra.copy()
        ok_all = np.zeros(len(ra), dtype=bool)
        for _ in range(20):
            trial = ra @ so3_exp(t[:, None] * step)
            ok = (residual(trial) < rna) & ~ok_all
            new[ok] = trial[ok]
            ok_all |= ok
            if ok_all.all():
                break
            t = np.where(ok_all, t, 0.5 * t)
        r[act] = new
    f, gf, _, _, gg, _ = lagrange_system(m, r, tilt)
    mu = -np.sum(gg * gf, axis=-1) / np.sum(gf * gf, axis=-1)
    grad_norm = np.linalg.norm(gg + mu[:, None] * gf, axis=-1)
    return r, grad_norm, np.abs(f)


def projected_hessian(eps_matrix, frames, tilt=NO_TILT):
    """Hessian of the Lagrangian restricted to ``ker df``, in orthonormal coordinates."""
    _, gf, hf, _, gg, hg = lagrange_system(eps_matrix, frames, tilt)
    mu = -np.sum(gg * gf, axis=-1) / np.sum(gf * gf, axis=-1)
    hl = hg + mu[:, None, None] * hf
    nrm = gf / np.linalg.norm(gf, axis=-1, keepdims=True)
    # orthonormal basis of the plane orthogonal to grad f
    helper = np.where(np.abs(nrm[:, :1]) < 0.9, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    z1 = np.cross(nrm, helper)
    z1 /= np.linalg.norm(z1, axis=-1, keepdims=True)
    z2 = np.cross(nrm, z1)
    z = np.stack([z1, z2], axis=-1)
    return np.swapaxes(z, -1, -2) @ hl @ z


def line_key(p, w):
    """Embedding ``(p, w w^T)``; identifies ``w`` and ``-w``."""
    ww = np.einsum("...i,...j->...ij", w, w).reshape(w.shape[:-1] + (9,))
    return np.concatenate([p, ww], axis=-1)


def eigenline_seeds(eps, subdivision: int = 4, fiber_rings=(0.0, 0.01, 0.03, 0.06), n_fiber_alpha: int = 24):
    """Frames over an icosphere (both eigenlines) and around every fibre."""
    m = as_dielectric(eps).matrix
    p = icosphere(subdivision).vertices
    w1, w2 = _sheet_w(m, p, 1), _sheet_w(m, p, 2)
    frames = [_frames(p, w1), _frames(p, w2)]
    for c in _multiple_xyz(eps):
        u, v = complete_frames(c)
        for r in fiber_rings:
            for k in range(max(1, 8 if r else 1)):
                t = 2 * np.pi * k / 8
                q = math.cos(r) * c + math.sin(r) * (math.cos(t) * u + math.sin(t) * v)
                uq, vq = transport_frames(u, q)
                al = np.pi * np.arange(n_fiber_alpha) / n_fiber_alpha
                w = np.cos(al)[:, None] * uq + np.sin(al)[:, None] * vq
                frames.append(_frames(np.repeat(q[None], len(al), 0), w))
    return np.concatenate(frames)


def _sheet_of(m, p, w, value_tol=1e-8):
    lam1, lam2 = eigenvalue_arrays(m, p)
    g = np.einsum("...i,ij,...j->...", w, m, w)
    sheet = np.where(np.abs(g - lam1) <= np.abs(g - lam2), 1, 2)
    return np.where(lam2 - lam1 < value_tol, 0, sheet)


def critical_points_eigenline(eps, tilt=NO_TILT, *, subdivision: int = 4) -> list[CriticalPoint]:
    """Critical points of the (tilted) eigenvalue function on the eigenline surface."""
    eps = as_dielectric(eps)
    _require_biaxial(eps)
    m = eps.matrix
    frames = eigenline_seeds(eps, subdivision)
    r, gn, fa = eigenline_newton(eps, frames, tilt)
    scale = max(1.0, float(np.abs(m).max()))
    good = (gn < GRAD_TOL) & (fa < 1e-12 * scale)
    r, gn = r[good], gn[good]
    p, w = r[..., 0], r[..., 1]
    keys = line_key(p, w)
    keep = _merge_points(keys, (keys[:, 2], keys[:, 1], keys[:, 0], np.round(gn, 14)), MERGE_SHEET)
    r, gn = r[keep], gn[keep]
    p, w = r[..., 0], r[..., 1]
    # canonical sign of w: first component of magnitude > 1e-9 positive
    lead = np.argmax(np.abs(w) > 1e-9, axis=1)
    sgn = np.sign(w[np.arange(len(w)), lead])
    w = w * sgn[:, None]
    hs = projected_hessian(m, _frames(p, w), tilt)
    vals = np.einsum("ni,ij,nj->n", w, m, w) + p @ tilt.vector
    sheets = _sheet_of(m, p, w)
    out = []
    for pi, wi, sh, val, hsi, g in zip(p, w, sheets, vals, hs, gn):
        idx, eig, nd = _classify(np.linalg.eigvalsh(0.5 * (hsi + hsi.T)))
        out.append(CriticalPoint(pi, wi, int(sh), float(val), idx, eig, nd, float(g)))
    return _sorted_cps(out)


def _sorted_cps(cps):
    return sorted(cps, key=lambda c: (c.sheet, round(c.value, 9), round(c.p[0], 9), round(c.p[1], 9), round(c.p[2], 9)))


def match_sheet_points(sheet_cps, eigen_cps, tol: float = 1e-6):
    """Pair each sheet-route point with an eigenline-route point (same p and line)."""
    if not eigen_cps:
        return [None] * len(sheet_cps)
    keys = np.array([line_key(c.p, c.w) for c in eigen_cps])
    out = []
    for c in sheet_cps:
        d = np.linalg.norm(keys - line_key(c.p, c.w), axis=1)
        j = int(np.argmin(d))
        out.append(j if d[j] < tol else None)
    return out


# -------------------------------------------------------------- Morse report

@dataclass
class MorseReport:
    C0: int
    C1: int
    C2: int
    alternating_sum: int
    inequalities_ok: bool
    all_nondegenerate: bool
    weak_ok: bool
    strong_ok: bool
    critical_points: list = field(default_factory=list)
    tilt: Tilt = NO_TILT
    reason: str = ""

    @property
    def euler_characteristic(self):
        return self.alternating_sum if self.all_nondegenerate else None


def morse_report(eps, tilt=NO_TILT, *, subdivision: int = 4) -> MorseReport:
    """Morse counts of the eigenvalue function on the eigenline surface.

    The inequality verdict is declined (``inequalities_ok = False`` with a
    reason) when some critical point is degenerate.
    """
    eps = as_dielectric(eps)
    cps = critical_points_eigenline(eps, tilt, subdivision=subdivision)
    c = [sum(1 for cp in cps if cp.morse_index == k) for k in range(3)]
    alt = c[0] - c[1] + c[2]
    nondeg = all(cp.nondegenerate for cp in cps)
    weak = c[0] >= 1 and c[1] >= 3 and c[2] >= 1
    strong = c[0] >= 1 and c[1] >= 6 and c[2] >= 1
    reason = ""
    if not nondeg:
        bad = sum(1 for cp in cps if not cp.nondegenerate)
        reason = (f"{bad} degenerate critical point(s): the eigenvalue function is not Morse here; "
                  "inequality verdict declined (try a tilt)")
    ok = nondeg and weak and alt == -4
    return MorseReport(c[0], c[1], c[2], alt, ok, nondeg, weak, strong, cps, tilt, reason)


def report_json(eps, rep: MorseReport) -> dict:
    eps = as_dielectric(eps)
    return {
        "epsilon": [[_round(x) for x in row] for row in eps.matrix],
        "tilt": {"delta": rep.tilt.delta, "c": list(rep.tilt.c)},
        "critical_points": [
            {k: (_round(v) if isinstance(v, float) else ([_round(x, 8) for x in v] if isinstance(v, list) else v))
             for k, v in cp.as_dict().items()}
            for cp in rep.critical_points
        ],
        "counts": {"C0": rep.C0, "C1": rep.C1, "C2": rep.C2},
        "euler_characteristic": rep.euler_characteristic,
        "alternating_sum": rep.alternating_sum,
        "all_nondegenerate": rep.all_nondegenerate,
        "inequalities": {"weak_ok": rep.weak_ok and rep.all_nondegenerate,
                         "strong_ok": rep.strong_ok and rep.all_nondegenerate},
        "inequalities_ok": rep.inequalities_ok,
        "reason": rep.reason,
    }


# ------------------------------------------------------- brute-force oracle

@dataclass
class OracleCandidate:
    p: np.ndarray
    w: np.ndarray | None
    sheet: int
    kind: int          # 1 min, 2 saddle, 3 max
    spacing: float


def grid_oracle(eps, tilt=NO_TILT, *, n: int = 410, disc_radius: float = DISC_RADIUS,
                n_alpha: int = 256, n_t: int = 96) -> list[OracleCandidate]:
    """Discrete critical patterns of the (tilted) eigenvalue function.

    Sheets are sampled on a cube-sphere grid (``6 (n+1)^2`` directions);
    each owned node whose 8-neighbour ring shows a minimum, maximum or saddle
    pattern is a candidate.  Inside the discs around the multiple points the
    sheets are not smooth, so there the surface is sampled in blown-up
    coordinates ``(alpha, t)``: the base point solves
    ``(a, b) = t (cos 2 alpha, sin 2 alpha)`` and the line is ``alpha``.
    """
    eps = as_dielectric(eps)
    m = eps.matrix
    centres = _multiple_xyz(eps)
    grid = cube_sphere(n)
    pts = grid.points
    spacing = 2.0 / n
    out = []
    flat = pts.reshape(-1, 3)
    in_disc = _disc_mask_chunked(flat, centres, disc_radius).reshape(pts.shape[:-1])
    for sheet in (1, 2):
        vals = sheet_value(m, flat, sheet, tilt).reshape(pts.shape[:-1])
        for face in range(6):
            cls = ring_classify(vals[face])
            # every ring member must lie outside the discs (the sheets are smooth there)
            bad = in_disc[face].copy()
            for di, dj in RING:
                bad |= np.roll(np.roll(in_disc[face], -di, axis=0), -dj, axis=1)
            hit = (cls > 0) & grid.owned & ~bad
            for i, j in zip(*np.nonzero(hit)):
                out.append(OracleCandidate(pts[face, i, j], None, sheet, int(cls[i, j]), spacing))
    out.extend(_fiber_oracle(eps, tilt, centres, disc_radius, n_alpha, n_t))
    return out


def _disc_mask_chunked(p, centres, radius, chunk=200_000):
    res = np.zeros(len(p), dtype=bool)
    for s in range(0, len(p), chunk):
        res[s:s + chunk] = _disc_mask(p[s:s + chunk], centres, radius)
    return res


def _fiber_oracle(eps, tilt, centres, disc_radius, n_alpha, n_t):
    m = eps.matrix
    out = []
    for c in centres:
        u, v = complete_frames(c)

        def ab(x, y):
            q = gnomonic(c, u, v, x, y)
            uq, vq = transport_frames(u, q)
            a, b, _ = traceless_arrays(m, uq, vq)
            return np.stack([a, b], axis=-1), q, uq, vq

        h = 1e-6
        jac = np.stack([(ab(h, 0)[0] - ab(-h, 0)[0]) / (2 * h), (ab(0, h)[0] - ab(0, -h)[0]) / (2 * h)], axis=1)
        smax = np.linalg.svd(jac, compute_uv=False)[0]
        tmax = 1.5 * smax * math.tan(disc_radius)
        al = np.pi * np.arange(n_alpha) / n_alpha
        tt = np.linspace(-tmax, tmax, n_t)
        A, T = np.meshgrid(al, tt, indexing="ij")
        target = T[..., None] * np.stack([np.cos(2 * A), np.sin(2 * A)], axis=-1)
        xy = target @ np.linalg.inv(jac).T
        for _ in range(8):
            cur, _, _, _ = ab(xy[..., 0], xy[..., 1])
            xy = xy - (cur - target) @ np.linalg.inv(jac).T
        _, q, uq, vq = ab(xy[..., 0], xy[..., 1])
        w = np.cos(A)[..., None] * uq + np.sin(A)[..., None] * vq
        vals = np.einsum("...i,ij,...j->...", w, m, w) + q @ tilt.vector
        # alpha + pi is the same line with the same target (a, b): plain periodicity
        cls = ring_classify(vals, periodic_axis0=True)
        hit = cls > 0
        dstep = max(np.pi / n_alpha, (tt[1] - tt[0]) / smax)
        for i, j in zip(*np.nonzero(hit)):
            out.append(OracleCandidate(q[i, j], w[i, j], 0, int(cls[i, j]), float(dstep)))
    return out


def oracle_misses(candidates, cps, tol: float = 1e-3):
    """Candidates farther than ``tol + spacing`` from every enumerated critical point.

    Sheet candidates are compared by base direction among critical points of
    the same sheet; blown-up candidates by the ``(p, w w^T)`` embedding.
    """
    misses = []
    for cand in candidates:
        best = np.inf
        for cp in cps:
            if cand.w is None:
                if cp.sheet not in (cand.sheet, 0):
                    continue
                d = float(geodesic_distance(cand.p, cp.p))
            else:
                d = float(np.linalg.norm(line_key(cand.p, cand.w) - line_key(cp.p, cp.w)))
            best = min(best, d)
        if best > tol + 2 * cand.spacing:
            misses.append((cand, best))
    return misses


def morse_lemma_exponent(eps, cp: CriticalPoint, tilt=NO_TILT, radii=None) -> float:
    """Slope of ``log|lambda - value|`` against ``log r`` along the stiffest Hessian direction."""
    if radii is None:
        radii = np.logspace(-3, -2, 7)
    m = as_dielectric(eps).matrix
    p = cp.p[None]
    u, v = complete_frames(p)
    hs = _chart_hessian(m, p, u, v, cp.sheet, tilt)[0]
    ev, vec = np.linalg.eigh(hs)
    d = vec[:, np.argmax(np.abs(ev))]
    r = np.asarray(radii)
    q = gnomonic(np.repeat(p, len(r), 0), np.repeat(u, len(r), 0), np.repeat(v, len(r), 0), r * d[0], r * d[1])
    diff = np.abs(sheet_value(m, q, cp.sheet, tilt) - cp.value)
    return float(np.polyfit(np.log(r), np.log(diff), 1)[0])
