"""Command-line interface: verbs, exit codes, deterministic artifacts."""

import numpy as np
import pytest

from stokeslab.cli import main
from stokeslab.vtk_io import read_vtk


def _parse_kv(text):
    out = {}
    for line in text.splitlines():
        if "=" in line:
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def test_run_patch_writes_artifacts(tmp_path, capsys):
    vtk = tmp_path / "field.vtk"
    csv = tmp_path / "summary.csv"
    code = main([
        "run", "--case", "patch", "--formulation", "svm",
        "--mesh", "grid:Q4:10x10", "--out", str(vtk), "--csv", str(csv),
    ])
    assert code == 0
    kv = _parse_kv(capsys.readouterr().out)
    assert kv["n_elements"] == "100"
    assert float(kv["checkerboard_amplitude"]) < 1e-8
    points, cells, cell_type, data = read_vtk(vtk)
    assert cell_type == 9
    assert np.allclose(data["velocity"][:, 0], 10.0, atol=1e-8)
    assert csv.exists()


def test_run_csv_byte_determinism(tmp_path):
    csvs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert main(["run", "--case", "patch", "--formulation", "wvm",
                     "--mesh", "grid:T3:6x6", "--csv", str(path)]) == 0
        csvs.append(path.read_bytes())
    assert csvs[0] == csvs[1]


def test_run_cavity_reports_vortex(capsys):
    code = main(["run", "--case", "cavity", "--formulation", "svm",
                 "--mesh", "grid:Q4:10x10"])
    assert code == 0
    kv = _parse_kv(capsys.readouterr().out)
    assert 0.6 < float(kv["vortex_y"]) < 0.9


def test_unknown_formulation_is_usage_error(capsys):
    code = main(["run", "--case", "patch", "--formulation", "nope",
                 "--mesh", "grid:Q4:4x4"])
    assert code == 2
    assert "nope" in capsys.readouterr().err


def test_unknown_case_is_usage_error():
    assert main(["run", "--case", "nope", "--mesh", "grid:Q4:4x4"]) == 2


def test_bad_mesh_spec_is_usage_error():
    assert main(["run", "--case", "patch", "--formulation", "svm",
                 "--mesh", "grid:Q4:4"]) == 2
    assert main(["run", "--case", "patch", "--formulation", "svm",
                 "--mesh", "grid:Z9:4x4"]) == 2
    assert main(["run", "--case", "patch", "--formulation", "svm",
                 "--mesh", "/no/such/file.mesh"]) == 2


def test_singular_solve_is_numerical_failure(capsys):
    # equal-order Galerkin on a square grid retains a checkerboard mode:
    # the pinned system is singular
    code = main(["run", "--case", "patch", "--formulation", "galerkin",
                 "--mesh", "grid:Q4:6x6"])
    assert code == 1
    assert "singular" in capsys.readouterr().err.lower()


def test_convergence_emits_levels_and_slope(tmp_path, capsys):
    csv = tmp_path / "conv.csv"
    code = main(["convergence", "--case", "bodyforce", "--formulation", "svm",
                 "--element", "q4", "--levels", "4,6,8", "--csv", str(csv)])
    assert code == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l]
    assert len(lines) == 4
    assert lines[-1].startswith("slope,")
    slope_v = float(lines[-1].split(",")[1])
    assert 1.5 < slope_v < 2.5
    assert csv.read_text().splitlines()[0] == "h,velocity_l2,pressure_h1semi"


def test_convergence_needs_three_levels():
    assert main(["convergence", "--case", "bodyforce", "--formulation", "svm",
                 "--element", "q4", "--levels", "8"]) == 2


def test_eigen_element_suffix_selects_scheme(tmp_path, capsys):
    csv = tmp_path / "eig.csv"
    code = main(["eigen", "--element", "q4-svm", "--n", "5", "--csv", str(csv)])
    assert code == 0
    out = capsys.readouterr().out
    assert "# zero_count = 1" in out
    assert "# checkerboard_present = False" in out
    assert csv.read_text().startswith("# zero_count = 1")


def test_eigen_single_element_is_usage_error():
    assert main(["eigen", "--element", "q4-svm", "--n", "1"]) == 2


def test_mesh_info_reports_statistics(capsys):
    code = main(["mesh-info", "--mesh", "grid:B8:2x2x2"])
    assert code == 0
    kv = _parse_kv(capsys.readouterr().out)
    assert kv["kind"] == "B8"
    assert kv["n_elements"] == "8"
    assert float(kv["volume"]) == pytest.approx(1.0)
    assert "top" in kv["nodesets"]


def test_mesh_info_on_shipped_fixture(capsys):
    from stokeslab.mesh import wct_fixture_path

    code = main(["mesh-info", "--mesh", str(wct_fixture_path())])
    assert code == 0
    kv = _parse_kv(capsys.readouterr().out)
    assert kv["kind"] == "T3"
    assert int(kv["n_elements"]) >= 300
