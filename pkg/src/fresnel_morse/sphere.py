"""Tangent-plane geometry of the unit sphere and the projected dielectric symbol.

For a unit direction ``p`` the dielectric tensor restricted to the tangent
plane ``p^perp`` is a symmetric 2x2 operator ``s(p)``.  In an orthonormal
tangent frame ``(u, v)`` it reads::

    s = [[<eps u, u>, <eps u, v>],
         [<eps u, v>, <eps v, v>]]

and its traceless part is encoded by ``(a, b) = ((s11 - s22) / 2, s12)`` so
that ``s = tr(s)/2 * I + [[a, b], [b, -a]]``.  Eigenvalues are
``tr(s)/2 -/+ sqrt(a**2 + b**2)``.

Scalar helpers work on plain floats; the ``*_arrays`` helpers broadcast over
leading axes and are what the heavier modules use internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import ChartError, DomainError

#: polar-chart operations reject |phi| >= pi/2 - POLE_MARGIN
POLE_MARGIN = 1e-9
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DielectricTensor:
    """Symmetric positive-definite 3x3 relative permittivity."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise DomainError(f"dielectric tensor must be a finite 3x3 matrix, got shape {m.shape}")
        scale = max(np.abs(m).max(), 1.0)
        if np.abs(m - m.T).max() > SYMMETRY_TOL * scale:
            raise DomainError("dielectric tensor is not symmetric")
        m = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(m)[0] <= 0.0:
            raise DomainError("dielectric tensor is not positive definite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def diagonal(cls, e1: float, e2: float, e3: float) -> "DielectricTensor":
        return cls(np.diag([float(e1), float(e2), float(e3)]))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Principal permittivities, ascending."""
        w = np.linalg.eigvalsh(self.matrix)
        w.setflags(write=False)
        return w

    @cached_property
    def principal_axes(self) -> np.ndarray:
        """Rotation ``R`` (det +1) with ``R.T @ eps @ R`` diagonal and ascending."""
        _, vecs = np.linalg.eigh(self.matrix)
        if np.linalg.det(vecs) < 0:
            vecs[:, 2] *= -1.0
        vecs.setflags(write=False)
        return vecs

    @property
    def is_diagonal(self) -> bool:
        m = self.matrix
        return bool(np.all(m[~np.eye(3, dtype=bool)] == 0.0))

    @property
    def diagonal_values(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    def inverse(self) -> "DielectricTensor":
        return DielectricTensor(np.linalg.inv(self.matrix))

    def rotated(self, rotation) -> "DielectricTensor":
        """Tensor expressed in the frame whose axes are the columns of ``rotation``."""
        r = np.asarray(rotation, dtype=float)
        return DielectricTensor(r.T @ self.matrix @ r)

    def principal(self) -> "DielectricTensor":
        return DielectricTensor(np.diag(self.eigenvalues))

    def __repr__(self):
        if self.is_diagonal:
            return "DielectricTensor.diagonal({}, {}, {})".format(*(repr(float(x)) for x in self.diagonal_values))
        return f"DielectricTensor({self.matrix.tolist()!r})"


def as_dielectric(eps) -> DielectricTensor:
    """Coerce a tensor, three principal values, or a 3x3 array."""
    if isinstance(eps, DielectricTensor):
        return eps
    arr = np.asarray(eps, dtype=float)
    if arr.shape == (3,):
        return DielectricTensor(np.diag(arr))
    return DielectricTensor(arr)


class PolarPoint(NamedTuple):
    theta: float
    phi: float

    @property
    def xyz(self) -> np.ndarray:
        return polar_to_xyz(self.theta, self.phi)

    @classmethod
    def from_xyz(cls, p) -> "PolarPoint":
        theta, phi = xyz_to_polar(p)
        return cls(float(theta), float(phi))


class TangentFrame(NamedTuple):
    p: np.ndarray
    u: np.ndarray
    v: np.ndarray


class Sym2(NamedTuple):
    s11: float
    s12: float
    s22: float

    @property
    def trace(self) -> float:
        return self.s11 + self.s22

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])


def polar_to_xyz(theta, phi):
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    return np.stack(np.broadcast_arrays(ct * cp, st * cp, sp), axis=-1)


def xyz_to_polar(p):
    """(theta, phi) with theta in [0, 2pi); theta = 0 at the poles by convention."""
    p = np.asarray(p, dtype=float)
    theta = np.mod(np.arctan2(p[..., 1], p[..., 0]), 2 * np.pi)
    # tiny negative y rounds up to exactly 2 pi
    theta = np.where(theta >= 2 * np.pi, 0.0, theta)
    phi = np.arctan2(p[..., 2], np.hypot(p[..., 0], p[..., 1]))
    return theta, phi


def check_chart(phi) -> None:
    if np.any(np.abs(phi) >= np.pi / 2 - POLE_MARGIN):
        raise ChartError("polar chart undefined at the poles (0, 0, +/-1); |phi| must be < pi/2")


def polar_frames(theta, phi):
    """Vectorised polar frame ``(p, u, v)``; no pole check."""
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    ct, st, cp, sp = np.broadcast_arrays(ct, st, cp, sp)
    zero = np.zeros_like(ct)
    p = np.stack([ct * cp, st * cp, sp], axis=-1)
    u = np.stack([-st, ct, zero], axis=-1)
    v = np.stack([-ct * sp, -st * sp, cp], axis=-1)
    return p, u, v


def tangent_frame(pt: PolarPoint) -> TangentFrame:
    theta, phi = pt
    check_chart(phi)
    p, u, v = polar_frames(float(theta), float(phi))
    return TangentFrame(p, u, v)


def complete_frames(p):
    """Right-handed orthonormal completion ``(u, v)`` of unit vectors ``p``.

    Agrees with the polar frame away from the poles and stays defined on them.
    """
    p = np.asarray(p, dtype=float)
    rho = np.hypot(p[..., 0], p[..., 1])
    near_pole = rho < 0.1
    u_polar = np.stack([-p[..., 1], p[..., 0], np.zeros_like(rho)], axis=-1)
    ex = np.zeros_like(p)
    ex[..., 1] = 1.0
    u_pole = ex - p[..., 1:2] * p
    u = np.where(near_pole[..., None], u_pole, u_polar)
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    v = np.cross(p, u)
    return u, v


def frame_at(p) -> TangentFrame:
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p)
    u, v = complete_frames(p)
    return TangentFrame(p, u, v)


def transport_frames(u0, q):
    """Project a reference tangent vector onto ``T_q`` and complete it.

    Continuous in ``q`` near the base point of ``u0``; used for local
    trivialisations (winding loops, Newton charts).
    """
    u = u0 - np.sum(u0 * q, axis=-1, keepdims=True) * q
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    return u, np.cross(q, u)


def gnomonic(p, u, v, x, y):
    """Gnomonic chart centred at ``p``: ``normalize(p + x u + y v)``."""
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    m = p + x * u + y * v
    return m / np.linalg.norm(m, axis=-1, keepdims=True)


def geodesic_distance(p, q):
    """Angle between unit vectors (stable for tiny and near-pi separations)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    c = np.linalg.norm(np.cross(p, q), axis=-1)
    d = np.sum(p * q, axis=-1)
    return np.arctan2(c, d)


def symbol_arrays(eps_matrix, u, v):
    """Components ``(s11, s12, s22)`` of the projected symbol in frames ``(u, v)``."""
    eu = u @ eps_matrix.T
    ev = v @ eps_matrix.T
    return np.sum(eu * u, axis=-1), np.sum(eu * v, axis=-1), np.sum(ev * v, axis=-1)


def traceless_arrays(eps_matrix, u, v):
    """``(a, b, half_trace)`` of the projected symbol in frames ``(u, v)``."""
    s11, s12, s22 = symbol_arrays(eps_matrix, u, v)
    return 0.5 * (s11 - s22), s12, 0.5 * (s11 + s22)


def eigenvalue_arrays(eps_matrix, p):
    """Ordered eigenvalues ``(lam1, lam2)`` of the projected symbol at unit ``p``."""
    u, v = complete_frames(p)
    a, b, h = traceless_arrays(eps_matrix, u, v)
    r = np.hypot(a, b)
    return h - r, h + r


def project_symbol(eps, frame: TangentFrame) -> Sym2:
    m = as_dielectric(eps).matrix
    s11, s12, s22 = symbol_arrays(m, np.asarray(frame.u, float), np.asarray(frame.v, float))
    return Sym2(float(s11), float(s12), float(s22))


def traceless(s: Sym2) -> tuple[float, float]:
    return 0.5 * (s.s11 - s.s22), s.s12


def eigen_split(s: Sym2) -> tuple[float, float]:
    a, b = traceless(s)
    r = math.hypot(a, b)
    h = 0.5 * s.trace
    return h - r, h + r


def s0_closed_form(eps, pt: PolarPoint) -> tuple[float, float]:
    """Traceless coordinates in the polar frame for a diagonal tensor, in closed form."""
    eps = as_dielectric(eps)
    if not eps.is_diagonal:
        raise DomainError("closed form requires a diagonal dielectric tensor; rotate to principal axes first")
    check_chart(pt.phi)
    e1, e2, e3 = eps.diagonal_values
    ct2, st2 = math.cos(pt.theta) ** 2, math.sin(pt.theta) ** 2
    sp = math.sin(pt.phi)
    sp2, cp2 = sp * sp, math.cos(pt.phi) ** 2
    a = 0.5 * ((e2 - e1 * sp2) * ct2 + (e1 - e2 * sp2) * st2 - e3 * cp2)
    b = (e1 - e2) * math.cos(pt.theta) * math.sin(pt.theta) * sp
    return a, b


def rotate_traceless(a, b, beta):
    """Traceless coordinates after rotating the tangent frame by ``beta``.

    Frame ``(u', v') = (cos(beta) u + sin(beta) v, -sin(beta) u + cos(beta) v)``
    turns ``(a, b)`` by ``-2 beta``.
    """
    c, s = math.cos(2 * beta), math.sin(2 * beta)
    return c * a + s * b, -s * a + c * b
