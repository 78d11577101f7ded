import json

import numpy as np
import pytest

from src.cli import build_parser, run_command
from src.core.sampling import halton_ball
from src.fields import field_from_dict, make_singular_solution


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_synth_writes_constant(tmp_path, capsys):
    code = run_command(["synth", "--n", "5", "--p", "2.5", "--m", "0", "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "synth.json").read_text())
    assert report["c0"] == pytest.approx((20.0 / 9.0) ** (2.0 / 3.0), rel=1e-12)
    assert report["config"]["n"] == 5
    assert (tmp_path / "field.json").exists()
    assert json.loads(capsys.readouterr().out)["command"] == "synth"


def test_density_scan_of_zero_field(tmp_path):
    code = run_command([
        "density-scan", "--kind", "zero", "--n", "5", "--p", "2.5",
        "--radii", "0.1,0.2", "--radial-nodes", "8", "--angular-order", "4",
        "--out", str(tmp_path),
    ])
    assert code == 0
    report = json.loads((tmp_path / "density-scan.json").read_text())
    assert report["scan"]["vartheta"] == [0.0, 0.0]
    assert (tmp_path / "density_scan.csv").exists()


def test_cover_with_scales_out_of_order_is_an_input_error(tmp_path, capsys):
    code = run_command(["cover", "--r", "0.5", "--R", "0.25", "--out", str(tmp_path)])
    assert code == 2
    assert "scales out of order" in capsys.readouterr().err


def test_subcritical_exponent_is_an_input_error(tmp_path, capsys):
    code = run_command(["synth", "--n", "5", "--p", "2.0", "--out", str(tmp_path)])
    assert code == 2
    assert "SupercriticalityViolated" in capsys.readouterr().err


def test_bad_flag_value_exits_two(tmp_path):
    assert run_command(["synth", "--radii", "a,b", "--out", str(tmp_path)]) == 2


def test_config_file_with_flag_override(tmp_path):
    config_file = tmp_path / "run.cfg"
    config_file.write_text("n=6\np=3.0\nm=1\n")
    code = run_command(["synth", "--config", str(config_file), "--p", "3.5", "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "synth.json").read_text())
    assert report["config"]["n"] == 6
    assert report["config"]["p"] == 3.5
    assert report["m"] == 1


@pytest.fixture
def line_measure_file(tmp_path):
    rng = np.random.default_rng(3)
    t = np.linspace(-0.8, 0.8, 17)
    points = np.column_stack([t, 0.5 * t, np.zeros_like(t)]) + 0.02 * rng.normal(size=(17, 3))
    path = tmp_path / "measure.json"
    path.write_text(json.dumps({"points": points.tolist(), "weights": rng.uniform(0.5, 1.5, 17).tolist()}))
    return path


def test_synth_field_reingests_exactly(tmp_path):
    assert run_command(["synth", "--n", "5", "--p", "2.5", "--m", "0", "--out", str(tmp_path)]) == 0
    reloaded = field_from_dict(json.loads((tmp_path / "field.json").read_text()))
    direct = make_singular_solution(5, 2.5, 0)
    points = halton_ball(5, 50)
    assert reloaded.value(points) == pytest.approx(direct.value(points), rel=1e-15)
    assert reloaded.gradient(points) == pytest.approx(direct.gradient(points), rel=1e-15)


def test_repeated_runs_write_identical_reports(tmp_path, line_measure_file):
    commands = [
        ["synth", "--n", "6", "--p", "3.5", "--m", "1", "--out", str(tmp_path)],
        ["fit-plane", "--measure", str(line_measure_file), "--k", "1", "--R", "1.5", "--seed", "5", "--out", str(tmp_path)],
    ]
    for argv in commands:
        assert run_command(argv) == 0
        first = (tmp_path / f"{argv[0]}.json").read_bytes()
        assert run_command(argv) == 0
        assert (tmp_path / f"{argv[0]}.json").read_bytes() == first


def test_fit_plane_records_seeded_cross_check(tmp_path, line_measure_file):
    code = run_command([
        "fit-plane", "--measure", str(line_measure_file), "--k", "1", "--R", "1.5", "--seed", "7", "--out", str(tmp_path),
    ])
    assert code == 0
    report = json.loads((tmp_path / "fit-plane.json").read_text())
    assert report["config"]["seed"] == 7
    assert report["bruteforce"]["seed"] == 7
    assert report["bruteforce"]["value"] >= report["displacement"] * (1.0 - 1e-9)
