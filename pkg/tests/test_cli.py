import json
import os
import subprocess
import sys

import numpy as np
import pytest

from fresnel_morse.cli import EXIT_IDENTITY, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from test_hyperbolic import INDEFINITE


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_fresnel_uniaxial_obj(capsys, tmp_path):
    code, rep, _ = run(capsys, "fresnel", "--epsilon", "3,15,3", "--out", str(tmp_path))
    assert code == EXIT_OK and rep["class"] == "Uniaxial"
    obj = (tmp_path / "fresnel.obj").read_text().splitlines()
    assert [ln for ln in obj if ln.startswith("o ")] == ["o sheet1", "o sheet2"]
    assert json.loads((tmp_path / "fresnel_report.json").read_text()) == rep


def test_fresnel_biaxial_and_isotropic(capsys):
    code, rep, _ = run(capsys, "fresnel", "--epsilon", "1,2,15")
    assert code == EXIT_OK and rep["class"] == "Biaxial"
    code, rep, _ = run(capsys, "fresnel", "--epsilon", "4,4,4")
    assert rep["class"] == "Isotropic"
    assert rep["radius_range"] == pytest.approx([0.5, 0.5], abs=1e-12)
    assert rep["sphere_radius"] == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_fresnel_formats(capsys, tmp_path, fmt):
    code, rep, _ = run(capsys, "fresnel", "--epsilon", "1,2,15", "--format", fmt, "--subdivision", "2",
                       "--out", str(tmp_path))
    assert code == EXIT_OK and (tmp_path / f"fresnel.{fmt}").exists()


def test_report_schema_and_tolerances(capsys):
    code, rep, _ = run(capsys, "singular", "--epsilon", "1,2,15", "--tol", "gap=1e-7", "--tol", "zero=1e-11")
    assert rep["schema_version"] == 1 and rep["command"] == "singular"
    assert rep["tolerances"]["gap"] == 1e-7 and rep["tolerances"]["zero"] == 1e-11


@pytest.mark.parametrize("argv", [
    ["fresnel", "--epsilon", "1,-2,3"],
    ["fresnel", "--epsilon", "1,2"],
    ["fresnel", "--epsilon", "a,b,c"],
    ["fresnel"],
    ["fresnel", "--epsilon", "1,2,3", "--subdivision", "8"],
    ["fresnel", "--epsilon", "1,2,3", "--tol", "bogus=1"],
    ["fresnel", "--epsilon", "1,2,3", "--tol", "gap"],
    ["eigenline", "--epsilon", "1,2,15", "--grid", "1"],
    ["morse", "--epsilon", "3,3,3"],
])
def test_usage_errors(capsys, argv):
    code, rep, err = run(capsys, *argv)
    assert code == EXIT_USAGE and rep is None and err.startswith("fml:")


def test_morse_refusal_message(capsys):
    code, _, err = run(capsys, "morse", "--epsilon", "3,3,3")
    assert "biaxial" in err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["fresnel", "--format", "ply", "--epsilon", "1,2,3"])
    assert exc.value.code == 2


def test_io_errors(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, _ = run(capsys, "fresnel", "--epsilon", "1,2,15", "--out", str(blocker / "sub"))
    assert code == EXIT_IO
    code, _, _ = run(capsys, "fresnel", "--epsilon-matrix", str(tmp_path / "missing.json"))
    assert code == EXIT_IO


def test_epsilon_matrix_file(capsys, tmp_path, rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    m = q @ np.diag([1.0, 2.0, 15.0]) @ q.T
    m = 0.5 * (m + m.T)
    (tmp_path / "eps.json").write_text(json.dumps(m.tolist()))
    code, rep, _ = run(capsys, "singular", "--epsilon-matrix", str(tmp_path / "eps.json"))
    assert code == EXIT_OK and rep["total_index"] == 4 and len(rep["zeros"]) == 4
    (tmp_path / "eps.txt").write_text("\n".join(" ".join(repr(x) for x in row) for row in m.tolist()))
    code, rep2, _ = run(capsys, "singular", "--epsilon-matrix", str(tmp_path / "eps.txt"))
    assert code == EXIT_OK and rep2["total_index"] == 4
    code, _, _ = run(capsys, "singular", "--epsilon", "1,2,3", "--epsilon-matrix", str(tmp_path / "eps.txt"))
    assert code == EXIT_USAGE


def test_singular_paths(capsys):
    code, rep, _ = run(capsys, "singular", "--epsilon", "1,2,15")
    assert code == EXIT_OK and rep["total_index"] == 4 and rep["identity_ok"]
    code, rep, _ = run(capsys, "singular", "--epsilon", "4,4,4")
    assert code == EXIT_OK and "isotropic" in rep["message"]
    code, rep, _ = run(capsys, "singular", "--epsilon", "3,15,3")
    assert code == EXIT_OK and "warning" in rep
    assert all(not z["transversal"] for z in rep["zeros"])


def test_eigenline(capsys):
    code, rep, _ = run(capsys, "eigenline", "--epsilon", "1,2,15", "--grid", "12")
    assert code == EXIT_OK and rep["components"] == 1 and rep["smooth"]


def test_morse_with_tilt(capsys):
    code, rep, _ = run(capsys, "morse", "--epsilon", "2,3,4", "--tilt", "0.02")
    assert code == EXIT_OK
    assert rep["euler_characteristic"] == -4 and rep["inequalities"]["weak_ok"]


def test_morse_untilted_identity(capsys):
    """``morse --epsilon 1,2,15`` reports inequalities_ok and chi = -4 with exit 0."""
    code, rep, _ = run(capsys, "morse", "--epsilon", "1,2,15")
    assert rep["inequalities_ok"] and rep["euler_characteristic"] == -4
    assert code == EXIT_OK


def test_morse_untilted_exit_code_is_identity_violation(capsys):
    code, rep, _ = run(capsys, "morse", "--epsilon", "1,2,15", "--subdivision", "2")
    assert code == EXIT_IDENTITY and rep["reason"]


def test_hyperbolic_maxwell(capsys):
    code, rep, _ = run(capsys, "hyperbolic", "--epsilon", "1,2,15")
    assert code == EXIT_OK and rep["strictly_hyperbolic_except"] == 4 and rep["hyperbolic_everywhere"]


def test_hyperbolic_scalar_wave(capsys):
    code, rep, _ = run(capsys, "hyperbolic", "--family", "scalar_wave", "--subdivision", "2")
    assert code == EXIT_OK and rep["multiplicity_directions"] == [] and rep["hyperbolic_everywhere"]


def test_hyperbolic_counterexample(capsys, tmp_path):
    path = tmp_path / "fam.json"
    path.write_text(json.dumps(INDEFINITE))
    code, rep, _ = run(capsys, "hyperbolic", "--family", str(path), "--subdivision", "1")
    assert code == EXIT_IDENTITY and rep["hyperbolic"] is False and len(rep["direction"]) == 3


def test_module_entry_point_thread_count_invariant():
    env = dict(os.environ, FML_THREADS="2")
    cmd = [sys.executable, "-m", "fresnel_morse", "hyperbolic", "--epsilon", "1,2,15", "--subdivision", "2"]
    a = subprocess.run(cmd, capture_output=True, env=env, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a.decode("utf-8").startswith("{")
