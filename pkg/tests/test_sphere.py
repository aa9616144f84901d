import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FIG2, random_spd
from fresnel_morse.errors import ChartError, DomainError
from fresnel_morse.sphere import (
    DielectricTensor,
    PolarPoint,
    Sym2,
    TangentFrame,
    as_dielectric,
    check_chart,
    eigen_split,
    eigenvalue_arrays,
    polar_frames,
    project_symbol,
    rotate_traceless,
    s0_closed_form,
    tangent_frame,
    traceless,
    xyz_to_polar,
)

angles = st.floats(0.0, 2 * math.pi, exclude_max=True)
lats = st.floats(-1.5, 1.5)
perm = st.floats(0.2, 30.0)


def test_tensor_rejects_asymmetric_and_indefinite():
    with pytest.raises(DomainError):
        DielectricTensor(np.array([[1.0, 0.1, 0], [0, 1, 0], [0, 0, 1]]))
    with pytest.raises(DomainError):
        DielectricTensor.diagonal(1.0, -2.0, 3.0)
    with pytest.raises(DomainError):
        DielectricTensor(np.eye(2))


def test_eigenvalues_sorted():
    assert list(DielectricTensor.diagonal(15, 1, 2).eigenvalues) == [1.0, 2.0, 15.0]


@given(angles, lats)
def test_frame_right_handed_orthonormal(theta, phi):
    fr = tangent_frame(PolarPoint(theta, phi))
    m = np.stack([fr.p, fr.u, fr.v], axis=1)
    assert np.allclose(m.T @ m, np.eye(3), atol=1e-14)
    assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-14)


def test_pole_rejected():
    with pytest.raises(ChartError):
        check_chart(math.pi / 2)
    with pytest.raises(ChartError):
        tangent_frame(PolarPoint(0.3, -math.pi / 2 + 1e-12))


def test_polar_roundtrip_wraps_theta():
    th, ph = xyz_to_polar(np.array([1.0, -1e-18, 0.0]))
    assert 0.0 <= th < 2 * math.pi and ph == 0.0


def test_project_symbol_at_pole_explicit_frame():
    fr = TangentFrame(np.array([0.0, 0, 1]), np.array([1.0, 0, 0]), np.array([0.0, 1, 0]))
    assert project_symbol(DielectricTensor.diagonal(*FIG2), fr) == Sym2(1.0, 0.0, 2.0)


def test_traceless_examples():
    eps = DielectricTensor.diagonal(*FIG2)
    s = project_symbol(eps, tangent_frame(PolarPoint(0.0, 0.0)))
    assert traceless(s) == pytest.approx((-6.5, 0.0))
    for phi in (-1.0, 0.2, 1.3):
        _, b = s0_closed_form(eps, PolarPoint(math.pi / 2, phi))
        assert abs(b) < 1e-15


def test_closed_form_matches_projection_oracle(rng):
    eps = DielectricTensor.diagonal(*FIG2)
    th = rng.uniform(0, 2 * math.pi, 1000)
    ph = rng.uniform(-1.55, 1.55, 1000)
    err = 0.0
    for t, p in zip(th, ph):
        pt = PolarPoint(t, p)
        ref = traceless(project_symbol(eps, tangent_frame(pt)))
        err = max(err, np.abs(np.subtract(s0_closed_form(eps, pt), ref)).max())
    assert err < 1e-12


def test_closed_form_requires_diagonal(rng):
    with pytest.raises(DomainError):
        s0_closed_form(random_spd(rng), PolarPoint(0.1, 0.2))


@given(angles, lats, st.floats(-math.pi, math.pi))
def test_frame_covariance(theta, phi, beta):
    eps = DielectricTensor.diagonal(*FIG2)
    fr = tangent_frame(PolarPoint(theta, phi))
    c, s = math.cos(beta), math.sin(beta)
    rot = TangentFrame(fr.p, c * fr.u + s * fr.v, -s * fr.u + c * fr.v)
    a, b = traceless(project_symbol(eps, fr))
    got = traceless(project_symbol(eps, rot))
    assert np.allclose(got, rotate_traceless(a, b, beta), atol=1e-12)
    # the traceless pair turns through twice the frame angle
    assert math.hypot(*got) == pytest.approx(math.hypot(a, b), abs=1e-12)
    if math.hypot(a, b) > 1e-6:
        turn = math.atan2(got[1], got[0]) - math.atan2(b, a)
        assert math.remainder(turn + 2 * beta, 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


@given(perm, perm, perm, angles, lats)
def test_pinching_and_ordering(e1, e2, e3, theta, phi):
    eps = DielectricTensor.diagonal(e1, e2, e3)
    s = project_symbol(eps, tangent_frame(PolarPoint(theta, phi)))
    lo, hi = eigen_split(s)
    w = np.linalg.eigvalsh(s.as_matrix())
    assert lo <= hi
    assert np.allclose([lo, hi], w, atol=1e-12 * max(e1, e2, e3))
    assert min(e1, e2, e3) - 1e-12 * max(e1, e2, e3) <= lo
    assert hi <= max(e1, e2, e3) * (1 + 1e-12)


def test_eigenvalue_arrays_vectorised(rng):
    eps = as_dielectric(random_spd(rng))
    p = rng.normal(size=(50, 3))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    lo, hi = eigenvalue_arrays(eps.matrix, p)
    for k in range(50):
        basis = np.linalg.svd(p[k][None])[2][1:]
        w = np.linalg.eigvalsh(basis @ eps.matrix @ basis.T)
        assert np.allclose([lo[k], hi[k]], w, atol=1e-12)


def test_conic_gap_at_multiple_point():
    eps = DielectricTensor.diagonal(*FIG2)
    phim = math.atan(math.sqrt(13))
    p0, u, v = (np.asarray(x) for x in polar_frames(0.0, phim))
    d = (u + 2 * v) / math.sqrt(5)
    slopes = []
    for t in (1e-3, -1e-3, 1e-4, -1e-4):
        q = math.cos(t) * p0 + math.sin(t) * d
        lo, hi = eigenvalue_arrays(eps.matrix, q)
        slopes.append(float(hi - lo) / abs(t))
    assert min(slopes) > 0
    assert max(slopes) / min(slopes) < 1.05
