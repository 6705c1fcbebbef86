import json

import pytest

from main import main
from src import __version__


def _run(*args):
    return main([*args, "--jobs", "1", "--quiet"])


def test_no_command_prints_help(capsys):
    assert main([]) == 1
    assert "Quick start" in capsys.readouterr().out


def test_peaks_csv(tmp_path):
    out = tmp_path / "peaks.csv"
    assert _run("peaks", "--K", "1", "--eps", "0.002,0.070", "--output", str(out)) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith(f"# evans-ep {__version__} | ")
    assert "K=1.0" in lines[0]
    assert lines[1] == "eps,n_s,n_star,u_star,phi_star"
    assert len(lines) == 4


def test_output_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (first, second):
        assert _run("criterion", "--K", "1", "--eps", "0.01,0.02", "--no-derivative", "--output", str(path)) == 0
    assert first.read_bytes() == second.read_bytes()


def test_evans_constant_state_json(tmp_path):
    out = tmp_path / "evans.json"
    assert _run("evans", "--K", "1", "--eps", "0", "--lambdas", "0.1,0.2+0.1j", "--format", "json",
                "--output", str(out)) == 0
    data = json.loads(out.read_text())
    assert data["tool"] == "evans-ep"
    assert data["command"] == "evans"
    assert data["diagnostics"] == []
    assert [row["re_D"] for row in data["rows"]] == [1.0, 1.0]
    assert [row["method"] for row in data["rows"]] == ["constant_state", "constant_state"]


def test_spectrum_rows(tmp_path):
    out = tmp_path / "spectrum.json"
    assert _run("spectrum", "--K", "1", "--eps", "0.05", "--k", "lin:-1:1:5", "--format", "json",
                "--output", str(out)) == 0
    data = json.loads(out.read_text())
    assert len(data["rows"]) == 10
    assert data["summary"]["curves"][0]["beta"] == 0.0


def test_amplitude_beyond_range_is_a_diagnostic(tmp_path):
    out = tmp_path / "peaks.csv"
    assert _run("peaks", "--K", "1", "--eps", "0.2", "--output", str(out)) == 2
    assert not out.exists()
    report = json.loads((tmp_path / "peaks.diagnostics.json").read_text())
    assert report["diagnostics"][0]["tag"] == "beyond_existence_range"
    assert report["parameters"]["eps"] == [0.2]


def test_usage_errors_exit_one(tmp_path):
    assert _run("peaks", "--K", "-1", "--eps", "0.01") == 1
    assert _run("threshold", "--K", "1", "--eps", "0.1") == 1
    assert _run("peaks", "--K", "1", "--eps", "log:0:1:3") == 1
    assert _run("evans", "--K", "1", "--eps", "0.05") == 1


def test_config_file_is_read(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("K = 10\neps = 0.002\n")
    out = tmp_path / "peaks.csv"
    assert _run("peaks", "--config", str(cfg), "--output", str(out)) == 0
    assert "K=10.0" in out.read_text().splitlines()[0]


@pytest.mark.slow
def test_zero_count_near_origin(tmp_path):
    out = tmp_path / "zeros.json"
    assert _run("zeros", "--K", "1", "--eps", "0.05", "--circle", "0,0:r=auto", "--format", "json",
                "--output", str(out)) == 0
    assert json.loads(out.read_text())["summary"]["count"] == 2


def test_dispersion_rows(tmp_path):
    out = tmp_path / "dispersion.json"
    assert _run("dispersion", "--K", "1", "--eps", "0.05", "--k", "lin:-1:1:5", "--format", "json",
                "--output", str(out)) == 0
    data = json.loads(out.read_text())
    assert len(data["rows"]) == 5
    assert set(data["rows"][0]) == {"k", "omega_plus", "omega_minus", "group_plus", "group_minus"}
    assert data["summary"]["group_minus_at_0"] == pytest.approx(-0.05)
    assert data["summary"]["max_group_plus"] <= -data["summary"]["c"]


def test_s1_reports_largest_nonnegative_amplitude(tmp_path):
    out = tmp_path / "s1.json"
    assert _run("s1", "--K", "1", "--eps", "0.02,0.05", "--format", "json", "--output", str(out)) == 0
    summary = json.loads(out.read_text())["summary"]
    assert summary["largest_nonnegative_eps"] == 0.02
    assert [w["nonnegative"] for w in summary["waves"]] == [True, False]
    assert 0.09 < summary["waves"][1]["crossover"] < 0.10


def test_s1_requires_positive_K():
    assert _run("s1", "--K", "0", "--eps", "0.1") == 1


def test_splitting_summary(tmp_path):
    out = tmp_path / "splitting.json"
    assert _run("splitting", "--K", "1", "--eps", "0.01,0.02,0.05", "--lambdas", "1,1j,-1j,2+2j",
                "--format", "json", "--output", str(out)) == 0
    data = json.loads(out.read_text())
    assert data["summary"]["largest_split_eps"] == 0.05
    assert all(row["split_ok"] for row in data["rows"])
    assert [row["max_left"] for row in data["rows"]] == [1, 1, 1]


def test_wave_with_c_derivative(tmp_path):
    out = tmp_path / "wave.csv"
    assert _run("wave", "--K", "1", "--eps", "0.05", "--c-derivative", "--output", str(out)) == 0
    header = out.read_text().splitlines()[1].split(",")
    assert header[-3:] == ["dn_dc", "du_dc", "dphi_dc"]
