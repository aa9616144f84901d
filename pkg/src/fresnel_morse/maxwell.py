"""Plane-wave symbol of Maxwell's equations in an anisotropic dielectric.

    Q(xi, tau) = [[tau * eps,  P(xi)],
                  [-P(xi),     tau * I]],      P(xi) w = xi x w

``det Q = tau**2 * q(xi, tau)`` with the quartic

    q = c0 + c2 tau**2 + c4 tau**4
    c0 = |xi|**2 <xi, eps xi>
    c2 = <xi, adj(eps) xi> - |xi|**2 tr(adj(eps))
    c4 = det(eps)

obtained from ``det Q = det(tau**2 eps + P(xi)**2)`` and the expansion of
``det(s A + B)`` with ``B = xi xi^T - |xi|**2 I`` (``det B = 0``,
``adj B = |xi|**2 xi xi^T``).  The coefficients are basis-free, so no
principal-axis rotation is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotCharacteristicError
from .sphere import as_dielectric

#: singular values below KERNEL_RTOL * sigma_max count as zero
KERNEL_RTOL = 1e-8


def cross_matrix(xi) -> np.ndarray:
    x1, x2, x3 = np.asarray(xi, dtype=float)
    return np.array([[0.0, -x3, x2], [x3, 0.0, -x1], [-x2, x1, 0.0]])


def assemble_symbol(eps, xi, tau: float) -> np.ndarray:
    """The 6x6 real symbol matrix acting on stacked ``(E0, H0)``."""
    m = as_dielectric(eps).matrix
    p = cross_matrix(xi)
    q = np.empty((6, 6))
    q[:3, :3] = tau * m
    q[:3, 3:] = p
    q[3:, :3] = -p
    q[3:, 3:] = tau * np.eye(3)
    return q


def det_oracle(eps, xi, tau: float) -> float:
    """Determinant of the assembled symbol by LU with partial pivoting."""
    return float(np.linalg.det(assemble_symbol(eps, xi, tau)))


def adjugate(m: np.ndarray) -> np.ndarray:
    """Classical adjoint of a 3x3 matrix (cofactor transpose)."""
    c = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            c[j, i] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return c


@dataclass(frozen=True)
class QuarticDispersion:
    """``q(tau) = c0 + c2 tau^2 + c4 tau^4`` at a fixed wave vector."""

    c0: float
    c2: float
    c4: float

    def __call__(self, tau):
        t2 = np.asarray(tau, dtype=float) ** 2
        return self.c0 + t2 * (self.c2 + t2 * self.c4)

    def tau_squared_roots(self) -> tuple[float, float]:
        """Roots in ``tau**2``, ascending; the discriminant is clipped at 0."""
        a, b, c = self.c4, self.c2, self.c0
        disc = max(b * b - 4.0 * a * c, 0.0)
        sq = math.sqrt(disc)
        # numerically stable pair
        big = -(b - sq) / 2.0 if b < 0 else -(b + sq) / 2.0
        if big == 0.0:
            return 0.0, 0.0
        r1, r2 = big / a, c / big
        return (r1, r2) if r1 <= r2 else (r2, r1)

    def positive_roots(self) -> tuple[float, float]:
        """Positive roots in ``tau``, ascending."""
        s1, s2 = self.tau_squared_roots()
        return math.sqrt(max(s1, 0.0)), math.sqrt(max(s2, 0.0))


def q_coefficients(eps, xi) -> QuarticDispersion:
    eps = as_dielectric(eps)
    xi = np.asarray(xi, dtype=float)
    n2 = float(xi @ xi)
    if n2 == 0.0:
        raise DomainError("q is undefined for the zero wave vector")
    m = eps.matrix
    adj = adjugate(m)
    c0 = n2 * float(xi @ m @ xi)
    c2 = float(xi @ adj @ xi) - n2 * float(np.trace(adj))
    c4 = float(np.linalg.det(m))
    return QuarticDispersion(c0, c2, c4)


def dispersion_speeds(eps, xi) -> tuple[float, float]:
    """Positive roots ``tau`` of ``q`` for unit ``xi`` (phase speeds), ascending."""
    return q_coefficients(eps, xi).positive_roots()


def polarization_kernel(eps, xi, tau: float, *, rtol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (columns) of ``ker Q(xi, tau)`` in R^6.

    ``rtol`` is the relative residual ``|q| / (|c0| + |c2| tau^2 + c4 tau^4)``
    below which ``(xi, tau)`` counts as characteristic.
    """
    eps = as_dielectric(eps)
    if tau == 0.0:
        raise DomainError("tau = 0 is the static branch, excluded from characteristic queries")
    qd = q_coefficients(eps, xi)
    t2 = tau * tau
    scale = abs(qd.c0) + abs(qd.c2) * t2 + abs(qd.c4) * t2 * t2
    if abs(qd(tau)) > rtol * scale:
        raise NotCharacteristicError(f"(xi={list(np.asarray(xi, float))}, tau={tau}) is not on Fresnel surface")
    q = assemble_symbol(eps, xi, tau)
    _, sv, vt = np.linalg.svd(q)
    null = sv < KERNEL_RTOL * sv[0]
    basis = vt[null].T
    if basis.shape[1] == 0:
        raise NotCharacteristicError("symbol has trivial kernel: not on Fresnel surface")
    return basis


def divergence_residuals(eps, xi, kernel: np.ndarray) -> np.ndarray:
    """``(<xi, eps E0>, <xi, H0>)`` for each kernel column."""
    m = as_dielectric(eps).matrix
    xi = np.asarray(xi, dtype=float)
    e0, h0 = kernel[:3], kernel[3:]
    return np.stack([xi @ m @ e0, xi @ h0], axis=0)
