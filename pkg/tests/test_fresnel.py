import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FIG1, FIG2, GENERIC, ISO, random_unit
from fresnel_morse.errors import DomainError, UsageError
from fresnel_morse.fresnel import (
    FresnelSample,
    dispersion_residuals,
    export_mesh,
    gap_exponent,
    load_json,
    render_mesh,
    sample_surface,
    sheet_radii,
    touching_directions,
)
from fresnel_morse.medium import MediumKind, classify_medium
from fresnel_morse.mesh import icosphere, vertex_count
from fresnel_morse.sphere import DielectricTensor


@pytest.mark.parametrize("eps, kind", [(ISO, MediumKind.ISOTROPIC), (FIG1, MediumKind.UNIAXIAL),
                                       (FIG2, MediumKind.BIAXIAL), ((1, 1 + 1e-13, 2), MediumKind.UNIAXIAL)])
def test_classify(eps, kind):
    assert classify_medium(eps).kind is kind


def test_classify_rejects_indefinite():
    with pytest.raises(DomainError):
        classify_medium((1, 0, 2))


def test_icosphere_counts():
    for n in range(4):
        mesh = icosphere(n)
        assert len(mesh.vertices) == vertex_count(n) == 10 * 4 ** n + 2
        assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0)
        assert len(mesh.faces) == 20 * 4 ** n


def test_isotropic_sphere():
    surf = sample_surface(ISO, 3)
    assert np.abs(surf.radii - 0.5).max() < 1e-12


def test_axis_radii_and_crossing():
    r = sheet_radii(FIG2, np.array([[0, 0, 1.0]]))[0]
    assert r == pytest.approx([1.0, 2 ** -0.5], rel=1e-14)
    for mp in touching_directions(FIG2):
        r1, r2 = sheet_radii(FIG2, mp.xyz[None])[0]
        assert r1 == pytest.approx(r2, rel=1e-7)


def test_sample_surface_structure():
    surf = sample_surface(FIG2, 2)
    assert len(surf) == 2 * 162
    assert np.all(surf.radii[:, 0] >= surf.radii[:, 1])
    assert np.all(surf.radii > 0)
    assert surf.samples[0].sheet == 1 and surf.samples[1].sheet == 2
    with pytest.raises(DomainError):
        sample_surface(FIG2, 0)


def test_dispersion_method_lies_on_quartic():
    surf = sample_surface(GENERIC, 3, "dispersion")
    assert dispersion_residuals(surf).max() < 1e-8


def test_methods_agree_on_axes_only():
    axes = np.eye(3)
    a = sheet_radii(FIG2, axes, "projected")
    b = sheet_radii(FIG2, axes, "dispersion")
    assert np.allclose(np.sort(a, axis=1), np.sort(b, axis=1), rtol=1e-14)
    off = np.array([[0.6, 0.0, 0.8]])
    assert not np.allclose(sheet_radii(FIG2, off, "projected"), sheet_radii(FIG2, off, "dispersion"))
    with pytest.raises(UsageError):
        sheet_radii(FIG2, axes, "bogus")


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_antipodal_symmetry(x, y, z):
    d = np.array([x, y, z])
    if np.linalg.norm(d) < 1e-3:
        return
    d /= np.linalg.norm(d)
    for method in ("projected", "dispersion"):
        r = sheet_radii(FIG2, np.stack([d, -d]), method)
        assert np.allclose(r[0], r[1], rtol=1e-13)


def test_sheet_ordering_equality_only_at_touching(rng):
    d = random_unit(rng, 5000)
    r = sheet_radii(FIG2, d)
    assert np.all(r[:, 0] >= r[:, 1])
    close = np.isclose(r[:, 0], r[:, 1], rtol=1e-6)
    assert not close.any()


def test_gap_orders():
    uni = touching_directions(FIG1)
    assert len(uni) == 2
    assert np.allclose(uni[0].xyz, -uni[1].xyz)
    assert 1.8 <= gap_exponent(FIG1, uni[0].xyz).exponent <= 2.2
    bi = touching_directions(FIG2)
    assert len(bi) == 4
    for mp in bi:
        assert 0.9 <= gap_exponent(FIG2, mp.xyz).exponent <= 1.1


def test_export_csv_single(tmp_path):
    s = FresnelSample(np.array([0.0, 0.0, 1.0]), 1, 1.0)
    path = export_mesh([s], "csv", tmp_path / "one.csv")
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["dir_x", "dir_y", "dir_z", "sheet", "radius", "x", "y", "z"]
    assert len(rows) == 2
    assert float(rows[1][4]) == 1.0


def test_csv_shortest_roundtrip(tmp_path):
    surf = sample_surface(FIG2, 1)
    rows = list(csv.reader(open(export_mesh(surf, "csv", tmp_path / "s.csv"))))[1:]
    got = np.array([[float(r[4])] for r in rows]).reshape(-1, 2)
    assert np.array_equal(got, surf.radii)


def test_obj_vertex_count(tmp_path):
    surf = sample_surface(FIG2, 2)
    text = open(export_mesh(surf, "obj", tmp_path / "s.obj")).read()
    lines = text.splitlines()
    assert sum(1 for ln in lines if ln.startswith("v ")) == 2 * 162
    assert [ln for ln in lines if ln.startswith("o ")] == ["o sheet1", "o sheet2"]
    assert sum(1 for ln in lines if ln.startswith("f ")) == 2 * 320


def test_obj_from_sample_list_uses_hull(tmp_path):
    surf = sample_surface(GENERIC, 1)
    a = render_mesh(surf.samples, "obj")
    assert sum(1 for ln in a.splitlines() if ln.startswith("f ")) == 2 * 80


def test_json_roundtrip(tmp_path):
    surf = sample_surface(FIG2, 2)
    eps, cls, samples = load_json(export_mesh(surf, "json", tmp_path / "s.json"))
    assert eps == [1.0, 2.0, 15.0] and cls == "Biaxial"
    for a, b in zip(surf.samples, samples):
        assert a.sheet == b.sheet
        assert abs(a.radius - b.radius) <= 1e-15 * a.radius
        assert np.abs(a.direction - b.direction).max() <= 1e-15


def test_json_nondiagonal_epsilon(tmp_path, rng):
    from conftest import random_spd

    m = random_spd(rng)
    doc = json.loads(render_mesh(sample_surface(m, 1), "json"))
    assert "epsilon_matrix" in doc and len(doc["epsilon"]) == 3


def test_export_deterministic(tmp_path):
    a = render_mesh(sample_surface(FIG2, 2), "obj")
    b = render_mesh(sample_surface(FIG2, 2), "obj")
    assert a == b


def test_export_errors(tmp_path):
    surf = sample_surface(FIG2, 1)
    with pytest.raises(UsageError):
        export_mesh(surf, "ply", tmp_path / "x.ply")
    with pytest.raises(DomainError):
        export_mesh([], "csv", tmp_path / "x.csv")
    with pytest.raises(OSError):
        export_mesh(surf, "csv", tmp_path / "missing" / "x.csv")


def test_rotated_medium_same_radii(rng):
    from conftest import random_spd

    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    eps = DielectricTensor.diagonal(*FIG2)
    rot = DielectricTensor(q @ eps.matrix @ q.T)
    d = random_unit(rng, 100)
    assert np.allclose(sheet_radii(rot, d @ q.T), sheet_radii(eps, d), rtol=1e-12)
    assert math.isfinite(sheet_radii(random_spd(rng), d).sum())
