"""Hyperbolicity of dispersion polynomials ``p(tau) = det(sum_i sigma_i(xi) tau^(d-i))``.

Symbols are supplied directly as matrix-valued functions at a fixed base
point.  Coefficients are recovered by interpolation at Chebyshev nodes;
real-root counting uses Sturm sequences on the square-free factors of a
repeated-gcd chain, so roots are counted with multiplicity.
"""
from __future__ import annotations

import functools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NonHyperbolicError, UsageError
from .maxwell import cross_matrix
from .mesh import icosphere
from .sphere import as_dielectric, complete_frames, gnomonic

GAP_TOL = 1e-6
GCD_TOL = 1e-9
CERTIFY_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class SymbolFamily:
    """``evaluator(x, xi)`` returns ``[sigma_0, ..., sigma_d]``, each ``rank x rank``."""

    rank: int
    degree: int
    evaluator: Callable
    family_id: str = "custom"
    pencil: bool = False   # degree 1 with sigma_0 positive definite: roots via symmetric eigenproblem

    def __call__(self, x, xi):
        sig = [np.asarray(s, dtype=float).reshape(self.rank, self.rank) for s in self.evaluator(x, xi)]
        if len(sig) != self.degree + 1:
            raise DomainError(f"family {self.family_id!r} returned {len(sig)} matrices, expected {self.degree + 1}")
        return sig

    def check(self, x, xi, rng=None, n_scale: int = 3):
        """Symmetry and homogeneity spot checks; raises ``DomainError`` on failure."""
        rng = np.random.default_rng(0) if rng is None else rng
        xi = np.asarray(xi, dtype=float)
        sig = self(x, xi)
        for i, s in enumerate(sig):
            if np.abs(s - s.T).max() > 1e-12 * max(1.0, np.abs(s).max()):
                raise DomainError(f"sigma_{i} is not symmetric")
        for _ in range(n_scale):
            t = float(rng.uniform(0.5, 2.0))
            st = self(x, t * xi)
            for i, (a, b) in enumerate(zip(sig, st)):
                ref = t ** i * a
                if np.abs(b - ref).max() > 1e-9 * max(1e-300, np.abs(ref).max(), np.abs(b).max()):
                    raise DomainError(f"sigma_{i} is not homogeneous of degree {i}")


def maxwell_family(eps) -> SymbolFamily:
    """``sigma_0 = diag(eps, I)``, ``sigma_1 = [[0, P(xi)], [-P(xi), 0]]``; ``p = det Q``."""
    m = as_dielectric(eps).matrix
    s0 = np.zeros((6, 6))
    s0[:3, :3] = m
    s0[3:, 3:] = np.eye(3)

    def ev(x, xi):
        p = cross_matrix(xi)
        s1 = np.zeros((6, 6))
        s1[:3, 3:] = p
        s1[3:, :3] = -p
        return [s0, s1]

    return SymbolFamily(6, 1, ev, "maxwell", pencil=True)


def scalar_wave_family() -> SymbolFamily:
    def ev(x, xi):
        xi = np.asarray(xi, dtype=float)
        return [np.eye(1), np.zeros((1, 1)), -np.array([[xi @ xi]])]

    return SymbolFamily(1, 2, ev, "scalar_wave")


def table_family(spec: dict) -> SymbolFamily:
    """Family from monomial tables.

    ``spec = {"family_id", "rank", "degree", "sigma": [[{"monomial": [a, b, c],
    "matrix": [[...]]}, ...], ...]}``; ``sigma[i]`` is the sum of
    ``xi1^a xi2^b xi3^c * matrix`` with ``a + b + c = i``.
    """
    try:
        rank, degree = int(spec["rank"]), int(spec["degree"])
        terms = spec["sigma"]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed family spec: {exc}") from None
    if len(terms) != degree + 1:
        raise UsageError("family spec needs degree + 1 entries in 'sigma'")
    parsed = []
    for i, lst in enumerate(terms):
        cur = []
        for t in lst:
            mono = tuple(int(k) for k in t["monomial"])
            if len(mono) != 3 or sum(mono) != i or min(mono) < 0:
                raise UsageError(f"sigma_{i}: monomial {mono} is not of degree {i}")
            mat = np.array(t["matrix"], dtype=float)
            if mat.shape != (rank, rank):
                raise UsageError(f"sigma_{i}: matrix shape {mat.shape} != ({rank}, {rank})")
            cur.append((mono, mat))
        parsed.append(cur)

    def ev(x, xi):
        xi = np.asarray(xi, dtype=float)
        out = []
        for cur in parsed:
            s = np.zeros((rank, rank))
            for (a, b, c), mat in cur:
                s = s + xi[0] ** a * xi[1] ** b * xi[2] ** c * mat
            out.append(s)
        return out

    return SymbolFamily(rank, degree, ev, str(spec.get("family_id", "table")))


def load_family(source, eps=None) -> SymbolFamily:
    """``"maxwell"`` (needs ``eps``), ``"scalar_wave"``, or a path to a JSON table."""
    if source == "maxwell":
        if eps is None:
            raise UsageError("the maxwell family needs a dielectric tensor")
        return maxwell_family(eps)
    if source == "scalar_wave":
        return scalar_wave_family()
    with open(source, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"family spec is not valid JSON: {exc}") from None
    return table_family(spec)


# ------------------------------------------------------------- polynomials

@dataclass(frozen=True, eq=False)
class DispersionPolynomial:
    """Coefficients, highest degree first (``numpy.polyval`` order)."""

    coeffs: np.ndarray
    nominal_degree: int
    certified_rtol: float = 0.0

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def degree_drop(self) -> int:
        return self.nominal_degree - self.degree

    def __call__(self, tau):
        return np.polyval(self.coeffs, tau)


def _trim(c, tol):
    c = np.atleast_1d(np.asarray(c, dtype=float))
    scale = np.abs(c).max() if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1)
    nz = np.flatnonzero(np.abs(c) > tol * scale)
    return c[nz[0]:] if nz.size else np.zeros(1)


def eval_det(fam, x, xi, taus):
    """Direct ``det(sum sigma_i tau^(d-i))`` at each ``tau``."""
    sig = fam(x, xi)
    d = fam.degree
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    mats = sum(np.multiply.outer(taus ** (d - i), s) for i, s in enumerate(sig))
    return np.linalg.det(mats)


@functools.lru_cache(maxsize=None)
def _cheb_solver(n):
    k = np.arange(n + 1)
    t = np.cos((2 * k + 1) * np.pi / (2 * n + 2))
    inv = np.linalg.inv(np.vander(t, n + 1))
    t.setflags(write=False)
    inv.setflags(write=False)
    return t, inv


# fixed off-node certification abscissae (fractions of the root bound)
_CERT_T = np.array([-0.8137, 0.2718, 0.6931])


def dispersion_poly(fam: SymbolFamily, x, xi, *, rng=None) -> DispersionPolynomial:
    """Interpolate ``det(sum sigma_i tau^(d-i))`` at ``k d + 1`` Chebyshev nodes.

    Nodes are scaled to a root bound so the Vandermonde system stays well
    conditioned.  The result is certified against direct determinants at
    three further abscissae (fixed by default, drawn from ``rng`` if given).
    """
    n = fam.rank * fam.degree
    sig = fam(x, xi)
    norms = [np.linalg.norm(s, 2) for s in sig]
    # a singular sigma_0 (degree drop) must not blow the bound up
    s0n = max(norms[0], 1e-3 * max(norms), 1e-300)
    # crude bound on the size of the roots: 1 + max_i (|sigma_i| / |sigma_0|)^(1/i)
    radius = 1.0 + max([(nm / s0n) ** (1.0 / i) for i, nm in enumerate(norms) if i > 0] or [0.0])
    t, vinv = _cheb_solver(n)
    cert = _CERT_T if rng is None else rng.uniform(-1.0, 1.0, 3)
    taus = radius * np.concatenate([t, cert])
    d = fam.degree
    mats = sum(np.multiply.outer(taus ** (d - i), s) for i, s in enumerate(sig))
    vals = np.linalg.det(mats)
    c = vinv @ vals[:n + 1]
    c = c / radius ** np.arange(n, -1, -1)
    direct = vals[n + 1:]
    tc = taus[n + 1:]
    scale = np.polyval(np.abs(c), np.abs(tc)) + 1e-300
    err = float(np.max(np.abs(np.polyval(c, tc) - direct) / scale))
    if not err <= CERTIFY_RTOL:
        raise DomainError(f"interpolated dispersion polynomial failed certification (rel err {err:.2e})")
    return DispersionPolynomial(_trim(c, 1e-12), n, err)


def strip_zero_roots(p: DispersionPolynomial, tol: float = 1e-10):
    """Remove the factor ``tau^m``; returns ``(reduced polynomial, m)``."""
    c = np.asarray(p.coeffs, dtype=float)
    scale = np.abs(c).max()
    m = 0
    while len(c) > 1 and abs(c[-1]) <= tol * scale:
        c = c[:-1]
        m += 1
    return DispersionPolynomial(c, p.nominal_degree - m, p.certified_rtol), m


# Internal polynomial algebra works on plain lists of floats, highest degree
# first: the polynomials are tiny and numpy call overhead would dominate.

def _ltrim(c, tol):
    scale = max((abs(x) for x in c), default=0.0)
    if scale == 0.0:
        return [0.0]
    cut = tol * scale
    for i, x in enumerate(c):
        if abs(x) > cut:
            return c[i:]
    return [0.0]


def _lnorm(c):
    scale = max(abs(x) for x in c)
    return [x / scale for x in c]


def _lder(c):
    n = len(c) - 1
    return [x * (n - i) for i, x in enumerate(c[:-1])] or [0.0]


def _polydiv(a, b):
    """Quotient and remainder by synthetic division."""
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    nb = len(b)
    if len(a) < nb:
        return [0.0], a
    lead = b[0]
    q = []
    for i in range(len(a) - nb + 1):
        f = a[i] / lead
        q.append(f)
        if f != 0.0:
            for j in range(1, nb):
                a[i + j] -= f * b[j]
    return q, (a[len(a) - nb + 1:] or [0.0])


def _as_list(c):
    if isinstance(c, DispersionPolynomial):
        c = c.coeffs
    return [float(x) for x in np.atleast_1d(np.asarray(c, dtype=float))]


def _gcd(a, b, tol):
    a = _ltrim(a, 1e-14)
    b = _ltrim(b, 1e-14)
    if not any(a):
        b = _lnorm(b) if any(b) else [1.0]
        return [x / b[0] for x in b]
    if not any(b):
        return [x / a[0] for x in a]
    a, b = _lnorm(a), _lnorm(b)
    if len(a) < len(b):
        a, b = b, a
    while True:
        if len(b) == 1:
            return [1.0]
        _, r = _polydiv(a, b)
        if max(abs(x) for x in r) <= tol:
            return [x / b[0] for x in b]
        a, b = b, _lnorm(_ltrim(r, 1e-14))


def poly_gcd(a, b, tol: float = GCD_TOL) -> np.ndarray:
    """Monic numerical gcd by the Euclidean algorithm.

    Inputs are scaled to unit max-coefficient; a remainder whose coefficients
    are all below ``tol`` counts as zero.
    """
    return np.array(_gcd(_as_list(a), _as_list(b), tol))


def _sturm(c, tol=1e-12):
    c = _ltrim(c, 1e-14)
    if len(c) <= 1:
        return 0
    seq = [_lnorm(c), _lnorm(_lder(c))]
    while len(seq[-1]) > 1:
        _, r = _polydiv(seq[-2], seq[-1])
        if max(abs(x) for x in r) <= tol:
            break
        seq.append([-x for x in _lnorm(_ltrim(r, 1e-14))])

    def changes(signs):
        s = [x for x in signs if x != 0]
        return sum(1 for u, v in zip(s[:-1], s[1:]) if u != v)

    at_pos = [math.copysign(1.0, q[0]) for q in seq]
    at_neg = [math.copysign(1.0, q[0]) * (-1) ** (len(q) - 1) for q in seq]
    return changes(at_neg) - changes(at_pos)


def sturm_count(c, tol: float = 1e-12) -> int:
    """Number of distinct real roots of a square-free polynomial (Sturm's theorem)."""
    return _sturm(_as_list(c), tol)


def _chain(c, tol):
    g_prev = _ltrim(c, 1e-14)
    out = []
    while len(g_prev) > 1:
        g = _gcd(g_prev, _lder(g_prev), tol)
        h, _ = _polydiv(g_prev, g)
        out.append(_ltrim(h, 1e-14))
        g_prev = g
    return out


def squarefree_chain(c, tol: float = GCD_TOL):
    """``[h_1, h_2, ...]``: ``h_j`` is square-free with the roots of multiplicity >= j."""
    return [np.array(h) for h in _chain(_as_list(c), tol)]


def real_root_count(p, tol: float = GCD_TOL) -> int:
    """Real roots counted with multiplicity."""
    return sum(_sturm(h) for h in _chain(_as_list(p), tol))


def is_hyperbolic(p, tol: float = GCD_TOL) -> bool:
    c = _ltrim(_as_list(p), 1e-14)
    if not any(c):
        raise DomainError("the zero polynomial has no root count")
    return real_root_count(c, tol) == len(c) - 1


def companion_real_count(c, imag_tol: float = 1e-7) -> int:
    c = _trim(np.asarray(c, dtype=float), 1e-14)
    if len(c) <= 1:
        return 0
    r = np.roots(c)
    return int(np.sum(np.abs(r.imag) <= imag_tol * np.maximum(1.0, np.abs(r))))


def is_strictly_hyperbolic(p, tol: float = GCD_TOL) -> bool:
    """Hyperbolic with simple roots: trivial gcd with the derivative, and
    companion-matrix root gaps above 1e-8 as a cross-check."""
    c = _ltrim(_as_list(p), 1e-14)
    if not is_hyperbolic(c, tol):
        return False
    if len(c) <= 2:
        return True
    squarefree = len(_gcd(c, _lder(c), tol)) == 1
    r = np.sort(np.roots(c).real)
    return squarefree and float(np.diff(r).min()) > 1e-8


# ---------------------------------------------------------------- scanning

def sorted_roots(fam: SymbolFamily, x, xi, zero_tol: float = 1e-10):
    """Sorted nonzero roots and the stripped zero multiplicity.

    Degree-1 families with positive-definite ``sigma_0`` use the symmetric
    eigenproblem ``sigma_0^(-1/2) sigma_1 sigma_0^(-1/2)`` (absolute accuracy
    near collisions); everything else uses companion-matrix roots.
    """
    if fam.pencil:
        s0, s1 = fam(x, xi)
        w, v = np.linalg.eigh(s0)
        isq = (v / np.sqrt(w)) @ v.T
        r = np.sort(-np.linalg.eigvalsh(isq @ s1 @ isq))
        scale = max(1.0, np.abs(r).max())
        nz = np.abs(r) > zero_tol * scale
        return r[nz], int((~nz).sum())
    p = dispersion_poly(fam, x, xi)
    q, m = strip_zero_roots(p, zero_tol)
    return np.sort(np.roots(q.coeffs).real), m


def root_gap(fam, x, xi) -> float:
    r, _ = sorted_roots(fam, x, xi)
    if len(r) < 2:
        return math.inf
    return float(np.diff(r).min())


def _check_hyperbolic(fam, x, xi):
    p = dispersion_poly(fam, x, xi)
    if not is_hyperbolic(p):
        raise NonHyperbolicError(f"dispersion polynomial not hyperbolic at direction {list(map(float, xi))}",
                                 direction=np.asarray(xi, dtype=float))
    return p


def _golden(fun, lo, hi, iters=40):
    gr = (math.sqrt(5) - 1) / 2
    c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - gr * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + gr * (hi - lo)
            fd = fun(d)
    return 0.5 * (lo + hi)


def refine_gap_minimum(fam, x, xi0, radius: float = 0.05, rounds: int = 45):
    """Cyclic golden-section search of ``gap^2`` along two tangent directions."""
    p = np.asarray(xi0, dtype=float)
    p = p / np.linalg.norm(p)
    h = radius
    for _ in range(rounds):
        u, v = complete_frames(p)
        for e in (u, v):
            def fun(s):
                return root_gap(fam, x, gnomonic(p, e, np.cross(p, e), s, 0.0)) ** 2
            s = _golden(fun, -h, h)
            p = gnomonic(p, e, np.cross(p, e), s, 0.0)
        h = max(0.5 * h, 1e-13)
    return p, root_gap(fam, x, p)


def scan_threads() -> int:
    """Worker count for the direction scan, capped by ``FML_THREADS`` (default 1)."""
    try:
        n = int(os.environ.get("FML_THREADS", "1"))
    except ValueError:
        raise UsageError("FML_THREADS must be an integer") from None
    return max(1, n)


@dataclass
class ScanResult:
    family_id: str
    directions: np.ndarray
    hyperbolic: np.ndarray
    min_gaps: np.ndarray
    multiplicity_directions: list
    whole_sphere: bool = False

    def as_dict(self) -> dict:
        return {
            "family_id": self.family_id,
            "hyperbolic": [bool(h) for h in self.hyperbolic],
            "multiplicity_directions": [[round(float(c), 12) + 0.0 for c in d] for d in self.multiplicity_directions],
            "min_gaps": [float(g) for g in self.min_gaps],
            "whole_sphere": self.whole_sphere,
        }


def scan_multiplicity_set(fam: SymbolFamily, x=None, direction_grid=3, *, tol: float = GAP_TOL,
                          merge: float = 1e-5) -> ScanResult:
    """Directions where two nonzero roots of the dispersion polynomial collide.

    ``direction_grid`` is an icosphere subdivision level or an ``(n, 3)``
    array.  Every grid direction is checked for hyperbolicity; gap local
    minima over the grid adjacency are refined and kept when the refined gap
    is below ``tol``.  If every grid direction already has gap below ``tol``
    (e.g. an isotropic medium) the whole grid is returned.
    """
    if isinstance(direction_grid, (int, np.integer)):
        mesh = icosphere(int(direction_grid))
        dirs = mesh.vertices
        nbrs = mesh.neighbours()
    else:
        dirs = np.asarray(direction_grid, dtype=float)
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        from scipy.spatial import cKDTree

        tree = cKDTree(dirs)
        _, idx = tree.query(dirs, k=min(7, len(dirs)))
        nbrs = [row[1:] for row in idx]
    hyper = np.ones(len(dirs), dtype=bool)

    def probe(d):
        _check_hyperbolic(fam, x, d)
        return root_gap(fam, x, d)

    workers = scan_threads()
    if workers > 1:
        # map preserves order, so the first non-hyperbolic direction raised is deterministic
        with ThreadPoolExecutor(max_workers=workers) as pool:
            gaps = np.array(list(pool.map(probe, dirs)))
    else:
        gaps = np.array([probe(d) for d in dirs])
    if np.all(gaps < tol):
        return ScanResult(fam.family_id, dirs, hyper, gaps, [d.copy() for d in dirs], whole_sphere=True)
    # a collision within one grid spacing of vertex i forces gap_i <= L * spacing,
    # with L the largest gap slope seen along grid edges
    edges = [(i, j) for i in range(len(dirs)) for j in nbrs[i] if j > i]
    ei = np.array([e[0] for e in edges])
    ej = np.array([e[1] for e in edges])
    elen = np.arccos(np.clip(np.sum(dirs[ei] * dirs[ej], axis=1), -1.0, 1.0))
    finite = np.isfinite(gaps[ei]) & np.isfinite(gaps[ej])
    slope = float(np.max(np.abs(gaps[ei] - gaps[ej])[finite] / elen[finite])) if finite.any() else 0.0
    bound = 1.5 * slope * float(elen.max()) + tol
    found, found_gaps = [], []
    for i in range(len(dirs)):
        if not (np.isfinite(gaps[i]) and gaps[i] <= bound and np.all(gaps[i] <= gaps[nbrs[i]])):
            continue
        p, g = refine_gap_minimum(fam, x, dirs[i], radius=2.0 * float(elen.max()))
        if g < tol and all(np.linalg.norm(p - q) > merge for q in found):
            found.append(p)
            found_gaps.append(g)
    order = sorted(range(len(found)), key=lambda k: tuple(np.round(found[k], 9)))
    found = [found[k] for k in order]
    return ScanResult(fam.family_id, dirs, hyper, np.array([found_gaps[k] for k in order]), found)
