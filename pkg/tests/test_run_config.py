import pytest
from pydantic import ValidationError

from src.run_config import (
    CircleSpec, Command, OutputFormat, RunConfig, build_run_config, parse_complex_list, parse_grid,
    read_config_file,
)


def test_parse_grid_variants():
    assert parse_grid("0.002,0.070,0.1550") == [0.002, 0.07, 0.155]
    assert parse_grid("lin:0:1:5") == [0.0, 0.25, 0.5, 0.75, 1.0]
    log = parse_grid("log:1e-3:1e-1:3")
    assert log == pytest.approx([1e-3, 1e-2, 1e-1])
    assert parse_grid("auto") is None
    assert parse_grid(0.05) == [0.05]


@pytest.mark.parametrize("bad", ["lin:0:1", "log:0:1:3", "lin:0:1:0", "a,b"])
def test_parse_grid_errors(bad):
    with pytest.raises(ValueError):
        parse_grid(bad)


def test_parse_complex_list():
    assert parse_complex_list("0.1+0.2j, 1, -0.5j") == [(0.1, 0.2), (1.0, 0.0), (0.0, -0.5)]
    assert parse_complex_list([(1.0, 2.0)]) == [(1.0, 2.0)]


def test_circle_spec():
    circle = CircleSpec.parse("0,0:r=auto")
    assert circle.radius is None
    assert circle.resolve_radius(0.04) == pytest.approx(0.5 * 0.008)
    fixed = CircleSpec.parse("0.1,-0.2:r=0.01")
    assert fixed.center == (0.1, -0.2)
    assert fixed.resolve_radius(0.04) == 0.01
    with pytest.raises(ValueError):
        CircleSpec.parse("0,0:s=1")


def test_run_config_defaults():
    run = RunConfig(command="peaks", eps="0.01,0.02")
    assert run.command is Command.PEAKS
    assert run.format is OutputFormat.CSV
    assert run.K is None
    assert run.eps == [0.01, 0.02]
    assert run.lambda_values is None


def test_run_config_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        RunConfig(command="wave", colour="blue")


@pytest.mark.parametrize("field, value", [
    ("ode_tol", 1e-3), ("profile_tol", 0.0), ("tail_tol", 0.1), ("K", -1.0), ("jobs", 0), ("nodes", 4),
])
def test_run_config_rejects_out_of_range(field, value):
    with pytest.raises(ValidationError):
        RunConfig(command="evans", **{field: value})


def test_real_and_imaginary_grids_go_together():
    with pytest.raises(ValidationError):
        RunConfig(command="evans", re="0,1")
    run = RunConfig(command="evans", re="0.1,0.2", im="-1,1")
    assert run.lambda_values == [0.1 - 1j, 0.2 - 1j, 0.1 + 1j, 0.2 + 1j]


def test_annulus_and_grid_checks():
    assert RunConfig(command="zeros", annulus="0.1,5").annulus == (0.1, 5.0)
    with pytest.raises(ValidationError):
        RunConfig(command="zeros", annulus="5,0.1")
    with pytest.raises(ValidationError):
        RunConfig(command="peaks", eps="-0.1,0.2")


def test_metadata_omits_output_settings():
    meta = RunConfig(command="peaks", K=1.0, eps="0.01", output="x.csv", jobs=3).metadata()
    assert meta["command"] == "peaks"
    assert meta["K"] == 1.0
    assert "output" not in meta and "jobs" not in meta


def test_config_file_and_flag_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# sweep\nK = 10\neps = 0.002,0.03   # amplitudes\node-tol = 1e-9\n")
    assert read_config_file(str(path)) == {"K": "10", "eps": "0.002,0.03", "ode_tol": "1e-9"}
    run = build_run_config("peaks", {"K": 1.0, "eps": None}, str(path))
    assert run.K == 1.0
    assert run.eps == [0.002, 0.03]
    assert run.ode_tol == 1e-9


def test_config_file_rejects_bare_lines(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("K 10\n")
    with pytest.raises(ValueError):
        read_config_file(str(path))
