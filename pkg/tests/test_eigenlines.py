import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FIG1, FIG2, GENERIC, ISO
from fresnel_morse.eigenlines import (
    EigenlinePoint,
    connected_components,
    dump_json,
    eigenline_angles,
    eigenline_report,
    eval_fg,
    fiber_circle_analysis,
    grad_fg,
    lagrange_residual,
    sample_eigenline_space,
)
from fresnel_morse.errors import ChartError, DesingularizationError, NotBiaxialError
from fresnel_morse.singularities import find_multiple_points
from fresnel_morse.sphere import PolarPoint, eigen_split, project_symbol, tangent_frame

angles = st.floats(0.0, 2 * math.pi, exclude_max=True)
lats = st.floats(-1.5, 1.5)


def test_alpha_stored_mod_pi():
    assert EigenlinePoint.make(0.1, 0.2, math.pi + 0.3).alpha == pytest.approx(0.3)


def test_coordinate_eigenline():
    # at theta = 0, phi = 0 the frame is (e2, e3): s = diag(2, 15), b = 0
    f, g = eval_fg(FIG2, 0.0, 0.0, 0.0)
    assert f == 0.0 and g == pytest.approx(2.0)


def test_pole_rejected():
    with pytest.raises(ChartError):
        eval_fg(FIG2, 0.0, math.pi / 2, 0.3)


@given(angles, lats, st.floats(0, math.pi))
def test_orthogonal_pair(theta, phi, alpha):
    f1, g1 = eval_fg(FIG2, theta, phi, alpha)
    f2, g2 = eval_fg(FIG2, theta, phi, alpha + math.pi / 2)
    s = project_symbol(FIG2, tangent_frame(PolarPoint(theta, phi)))
    assert f2 == pytest.approx(-f1, abs=1e-12)
    assert g1 + g2 == pytest.approx(s.trace, abs=1e-12)
    lo, hi = eigen_split(s)
    assert lo - 1e-12 <= g1 <= hi + 1e-12


@given(angles, lats)
def test_roots_give_eigenvalues(theta, phi):
    s = project_symbol(FIG2, tangent_frame(PolarPoint(theta, phi)))
    a, b = 0.5 * (s.s11 - s.s22), s.s12
    lo_al, hi_al = eigenline_angles(a, b)
    f_lo, g_lo = eval_fg(FIG2, theta, phi, lo_al)
    f_hi, g_hi = eval_fg(FIG2, theta, phi, hi_al)
    oracle = np.linalg.eigvalsh(s.as_matrix())
    assert abs(f_lo) < 1e-12 and abs(f_hi) < 1e-12
    assert g_lo == pytest.approx(oracle[0], abs=1e-12)
    assert g_hi == pytest.approx(oracle[1], abs=1e-12)


def test_sample_membership_and_rayleigh():
    s = sample_eigenline_space(FIG2, resolution=16, n_alpha=32)
    assert np.abs(s.f).max() < 1e-10
    th = np.array([q.theta for q in s.points])
    ph = np.array([q.phi for q in s.points])
    for k in np.flatnonzero(s.sheet > 0)[::37]:
        lo, hi = eigen_split(project_symbol(FIG2, tangent_frame(PolarPoint(th[k], ph[k]))))
        assert s.g[k] == pytest.approx([lo, hi][s.sheet[k] - 1], abs=1e-10)
    assert (s.sheet == 0).sum() == 4 * 32


def test_near_e3_values():
    # the grid point closest to the north pole: projected tensor close to diag(1, 2)
    s = sample_eigenline_space(FIG2, resolution=64)
    ph = np.array([q.phi for q in s.points])
    top = np.flatnonzero((s.sheet > 0) & (ph == ph.max()))
    vals = np.sort(s.g[top])
    assert vals[0] == pytest.approx(1.0, abs=2e-3) and vals[-1] == pytest.approx(2.0, abs=2e-2)


def test_two_roots_distinct_off_fibres():
    s = sample_eigenline_space(GENERIC, resolution=12)
    n = (s.sheet == 1).sum()
    assert n == (s.sheet == 2).sum()
    assert np.all(s.g[s.sheet == 2] - s.g[s.sheet == 1] > 0)


def test_labels_stable_under_refinement():
    a = sample_eigenline_space(FIG2, resolution=8)
    b = sample_eigenline_space(FIG2, resolution=16)
    assert a.g[a.sheet == 1].max() <= b.g[b.sheet == 2].max()
    assert set(np.unique(a.sheet)) == set(np.unique(b.sheet)) == {0, 1, 2}


def test_connected():
    s = sample_eigenline_space(FIG2, resolution=32)
    assert connected_components(s) == 1


def test_refusals():
    with pytest.raises(NotBiaxialError):
        sample_eigenline_space(FIG1)
    with pytest.raises(NotBiaxialError):
        sample_eigenline_space(ISO)
    uni = find_multiple_points(FIG1)[0]
    with pytest.raises(DesingularizationError, match="hypotheses violated"):
        fiber_circle_analysis(FIG1, uni)


def test_fibre_f_vanishes_and_gradient_formula():
    phim = math.atan(math.sqrt(13))
    mp = [m for m in find_multiple_points(FIG2) if m.location.theta < 1 and m.location.phi > 0][0]
    fc = fiber_circle_analysis(FIG2, mp, n_alpha=180)
    assert fc.max_abs_f < 1e-12
    assert fc.min_grad_f > 1e-3
    # on the fibre grad f is linear in (cos 2 alpha, sin 2 alpha) with no alpha component
    g0 = grad_fg(FIG2, 0.0, phim, 0.0)[0]
    g1 = grad_fg(FIG2, 0.0, phim, math.pi / 4)[0]
    assert abs(g0[2]) < 1e-8 and abs(g1[2]) < 1e-8
    for al in (0.3, 1.1, 2.0):
        g = grad_fg(FIG2, 0.0, phim, al)[0]
        assert np.allclose(g, math.cos(2 * al) * g0 + math.sin(2 * al) * g1, atol=1e-8)


def test_no_critical_points_on_fibres():
    """Eigenvalue function has no Lagrange-critical alpha on any fibre circle."""
    for mp in find_multiple_points(FIG2):
        fc = fiber_circle_analysis(FIG2, mp, n_alpha=360)
        assert fc.critical_alphas == []


def test_fibre_critical_point_at_alpha_zero_is_genuine():
    # the line along the polar-frame u (= e2 at theta = 0) is Lagrange-critical:
    # independent check: central differences at several steps, residual shrinking like h^2
    mp = find_multiple_points(FIG2)[0]
    th, ph = mp.location
    for h in (1e-3, 1e-4, 1e-5):
        gf, gg = grad_fg(FIG2, th, ph, 0.0, h=h)
        assert lagrange_residual(gf, gg) < 50 * h * h


def test_lagrange_residual():
    assert lagrange_residual(np.array([1.0, 0, 0]), np.array([2.0, 0, 0])) == 0.0
    assert lagrange_residual(np.array([1.0, 0, 0]), np.array([0.0, 3.0, 0])) == pytest.approx(3.0)


def test_report_schema():
    rep = eigenline_report(FIG2, resolution=8, n_alpha=16)
    doc = json.loads(dump_json(rep))
    assert set(doc) == {"epsilon", "points", "fibers", "components"}
    assert set(doc["points"][0]) == {"theta", "phi", "alpha", "f", "g", "sheet"}
    assert set(doc["fibers"][0]) == {"base_index", "min_grad_f", "critical_alphas"}
