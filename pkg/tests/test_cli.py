"""
Tests for the command-line front end.
"""

import json

import pytest

from robin_spectra.cli import EXIT_CONFIG, EXIT_OK, main
from robin_spectra.data_io import read_polylines_csv, save_potential
from robin_spectra.enclosure import refine_boundary_point
from robin_spectra.lattice import Potential


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_green_point(capsys):
    """Test g_a and the (1,1) entry at z = 2.5 for a = 0."""
    assert main(["green", "--z", "2.5"]) == EXIT_OK
    report = _json_out(capsys)
    assert report["g_a"] == pytest.approx(1.0)
    assert report["gamma_a"] == pytest.approx(2 / 3)
    assert report["entry"]["value"]["re"] == pytest.approx(-0.5)


def test_green_matrix(capsys):
    """Test the --size section output."""
    assert main(["green", "--a", "0.5", "--k", "0.3+0.4i", "--size", "3"]) == EXIT_OK
    report = _json_out(capsys)
    assert len(report["matrix"]) == 3
    assert report["matrix"][0][1] == report["matrix"][1][0]


def test_stability_command(tmp_path, capsys):
    """Test verdict JSON for V = 0.3 P_1."""
    path = save_potential(tmp_path / "v.json", Potential.single_site(0.3, 1))
    assert main(["stability", "--a", "0", "--potential", str(path)]) == EXIT_OK
    report = _json_out(capsys)
    assert report["level"] == "PurelyContinuous"
    assert [e["condition"] for e in report["evidence"]][0] == "weighted_l1"


def test_stability_writes_file(tmp_path, capsys):
    """Test --output writes the report and prints a confirmation."""
    path = save_potential(tmp_path / "v.json", Potential.single_site(1.5, 1))
    out = tmp_path / "verdict.json"
    assert main(["stability", "--potential", str(path), "--output", str(out)]) == EXIT_OK
    assert "✓" in capsys.readouterr().out
    assert json.loads(out.read_text(encoding="utf-8"))["level"] == "Inconclusive"


def test_stability_tolerance_flags(tmp_path, capsys):
    """Test --q, --c, --section-cap and --tail-target reach the verdict stages."""
    path = save_potential(tmp_path / "v.json", Potential({1: 0.3, 2: 0.03}))

    def evidence(report, condition):
        return next(e for e in report["evidence"] if e["condition"] == condition)

    assert main(["stability", "--potential", str(path)]) == EXIT_OK
    full = _json_out(capsys)
    assert evidence(full, "operator_norm")["value"] == pytest.approx((0.36 + 0.0936 ** 0.5) / 2)
    assert full["hardy_condition"] == {"q": 0.5, "c": 1.0, "holds": True}

    assert main(["stability", "--potential", str(path), "--section-cap", "1", "--tail-target", "1e-6"]) == EXIT_OK
    capped = _json_out(capsys)
    assert evidence(capped, "operator_norm")["value"] == pytest.approx(0.3 + 0.0216 ** 0.5)
    assert capped["level"] == "PurelyContinuous"

    # |v_1| / w_1(1/2) = 0.3 / (2 - sqrt 2) ~ 0.512
    assert main(["stability", "--potential", str(path), "--c", "0.6"]) == EXIT_OK
    assert _json_out(capsys)["hardy_condition"]["holds"] is True
    assert main(["stability", "--potential", str(path), "--c", "0.5"]) == EXIT_OK
    assert _json_out(capsys)["hardy_condition"]["holds"] is False

    assert main(["stability", "--potential", str(path), "--q", "0.3", "--power-tol", "1e-12"]) == EXIT_OK
    report = _json_out(capsys)
    assert report["hardy_condition"]["q"] == 0.3
    assert evidence(report, "hardy_pointwise")["note"] == "q=0.3"

    assert main(["stability", "--potential", str(path), "--q", "0.6"]) == EXIT_CONFIG
    assert main(["stability", "--potential", str(path), "--power-tol", "0"]) == EXIT_CONFIG
    assert main(["stability", "--potential", str(path), "--c", "-1"]) == EXIT_CONFIG
    capsys.readouterr()


def test_input_errors(tmp_path, capsys):
    """Test exit code 2 for missing files, bad values and bad arguments."""
    assert main(["stability", "--potential", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["green", "--a", "abc", "--z", "3"]) == EXIT_CONFIG
    assert main(["green", "--z", "0.5"]) == EXIT_CONFIG
    assert main(["stability", "--a", "1.5", "--potential", str(save_potential(tmp_path / "v.json",
                                                                                 Potential.zero()))]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG
    assert main(["figures"]) == EXIT_CONFIG
    capsys.readouterr()


def test_eigen_counts(capsys):
    """Test both eigenvalue oracles report the eigenvalue 2.5 of J_2."""
    assert main(["eigen", "--a", "2", "--N", "100", "--margin", "0.1"]) == EXIT_OK
    report = _json_out(capsys)
    assert report["N"] == 100
    assert report["outside_band"] == 1
    assert report["outside_band_winding"] == 1


def test_witness_snaps_to_boundary(capsys):
    """Test a point off the boundary is moved along its k-ray and verified."""
    assert main(["witness", "--a", "0", "--Q", "1", "--z", "0.5+1.2i"]) == EXIT_OK
    report = _json_out(capsys)
    assert report["snapped"] is True
    assert report["exact_distance"] <= 1e-10
    assert report["characteristic_residual"] <= 1e-12
    truncation = report["truncation"]
    if truncation["N"] is None:
        assert truncation["k_modulus"] > 0.99
    else:
        assert truncation["distance"] <= 1e-6
    omega = complex(report["omega"]["re"], report["omega"]["im"])
    assert abs(omega) == pytest.approx(1.0)


def test_witness_truncation_size_from_decay(capsys):
    """Test a fast-decaying witness is confirmed on a section sized from |k|."""
    z = refine_boundary_point(0, 2.0, 1.3).z
    assert main(["witness", "--a", "0", "--Q", "2", "--z", f"{z.real:.6f}{z.imag:+.6f}i"]) == EXIT_OK
    truncation = _json_out(capsys)["truncation"]
    assert 64 <= truncation["N"] <= 200
    assert truncation["distance"] <= 1e-6


def test_witness_exact_refuses(capsys):
    """Test --exact reports off-boundary points as input errors."""
    assert main(["witness", "--z", "0.5+1.2i", "--exact"]) == EXIT_CONFIG
    assert main(["witness", "--z", "3"]) == EXIT_CONFIG
    capsys.readouterr()


def test_hardy_weights_stdout(capsys):
    """Test the n,w_n listing of the optimal weight."""
    assert main(["hardy", "weights", "--n-max", "3"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n,w_n"
    assert lines[1].startswith("1,0.585786")
    assert len(lines) == 4


def test_hardy_reports(capsys):
    """Test certify, identity and critical-neumann outputs."""
    assert main(["hardy", "certify", "--N", "10,100"]) == EXIT_OK
    certs = _json_out(capsys)["certificates"]
    assert [c["N"] for c in certs] == [10, 100]
    assert all(c["S"] <= c["bound"] for c in certs)

    assert main(["hardy", "identity", "--q", "0.3", "--samples", "10", "--support", "20"]) == EXIT_OK
    assert _json_out(capsys)["max_residual"] <= 1e-12 * 100

    assert main(["hardy", "critical-neumann", "--N", "1,10"]) == EXIT_OK
    ramps = _json_out(capsys)["ramps"]
    assert [r["form"] for r in ramps] == pytest.approx([1.0, 0.1])


def test_enclosure_files(tmp_path, capsys):
    """Test the enclosure command writes one CSV and one SVG per budget."""
    assert main(["enclosure", "--a", "2", "--q", "0.5,1", "--grid", "64", "--out-dir", str(tmp_path)]) == EXIT_OK
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "enclosure_Q0.5.csv", "enclosure_Q0.5.svg", "enclosure_Q1.csv", "enclosure_Q1.svg",
    ]
    assert read_polylines_csv(tmp_path / "enclosure_Q0.5.csv")
    svg = (tmp_path / "enclosure_Q0.5.svg").read_text(encoding="utf-8")
    assert 'id="pole' in svg
    assert "Q = 0.5" in svg and "Q = 1" not in svg
    assert capsys.readouterr().out.count("Figure saved") == 2


def test_figures_command(tmp_path, capsys):
    """Test a preset figure and its summary file."""
    assert main(["figures", "--names", "fig4", "--grid", "64", "--out-dir", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "fig4.svg").exists()
    summary = json.loads((tmp_path / "figures.json").read_text(encoding="utf-8"))
    assert summary[0]["has_pole_dot"] is True
    assert "red dot" in capsys.readouterr().out
    assert main(["figures", "--names", "nope", "--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_explore_commands(capsys):
    """Test the critical-operator comparison and the window search."""
    assert main(["explore", "critical", "--N", "20"]) == EXIT_OK
    assert _json_out(capsys)["max_mismatch"] < 1e-10
    assert main(["explore", "opt3", "--site", "2", "--lengths", "10,20"]) == EXIT_OK
    rows = _json_out(capsys)
    assert [r["L"] for r in rows] == [10, 20]
    assert main(["explore", "real-boundary", "--a", "2", "--Q", "0.5", "--n-max", "2"]) == EXIT_OK
    assert len(_json_out(capsys)["points"]) >= 2
