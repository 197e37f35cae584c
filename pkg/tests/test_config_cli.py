import json
import subprocess
import sys
from importlib import resources

import pytest
import yaml

from glscatter.cli import main, run
from glscatter.config import ConfigError, load_config, parse_config
from glscatter.report import canonical_json, csv_text


def _write(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def test_default_config():
    cfg = load_config()
    assert cfg.dim == 2 and cfg.model.mass == 1.0 and cfg.model.kappa == 1.0
    assert cfg.mode_momenta().shape == (4, 1)
    assert cfg.modes.n_max == 4
    assert cfg.warping().matrix.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    assert len(cfg.packet_solutions()) == 3


@pytest.mark.parametrize(
    "data,field",
    [
        ({"model": {"dimension": 2, "eta": 1.0}}, "model.eta"),
        ({"model": {"mass": -1.0}}, "model.mass"),
        ({"model": {"dimension": 5}}, "model.dimension"),
        ({"modes": {"momenta": [0.1, 0.1]}}, "modes.momenta"),
        ({"model": {"dimension": 3}, "modes": {"momenta": [0.1, 0.2]}}, "modes.momenta"),
        ({"wedge": {"rotation": 0.3}}, "wedge.rotation"),
        ({"model": {"colour": "red"}}, "model.colour"),
        ({"decay": {"t_min": 50.0, "t_max": 10.0}}, "t_max"),
    ],
)
def test_config_errors_name_field(data, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(data)


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: [unclosed")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_four_dimensional_config():
    cfg = parse_config({"model": {"dimension": 4, "kappa": 2.0, "eta": 3.0}, "modes": {"momenta": [[0.1, 0, 0], [0, 0.2, 0]]},
                        "decay": {"center": [0, 0, 0], "outside_velocity": [3, 0, 0], "inside_velocity": [0, 0, 0]}})
    assert cfg.warping().matrix[2, 3] == 3.0


def test_canonical_json_format():
    text = canonical_json({"b": 0.1, "a": [1, 2.5, float("nan")], "c": {"z": True, "y": None}, "d": 1 + 2j})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert "0.10000000000000001" in text
    assert '"nan"' in text
    assert json.loads(text)["d"] == [1.0, 2.0]
    assert canonical_json({"x": 1}) == canonical_json({"x": 1})


def test_csv_text():
    assert csv_text(("a", "b"), [[1, 0.5]]) == "a,b\n1,0.5\n"


def test_cli_config_error_exit_2(tmp_path, capsys):
    cfg = _write(tmp_path, {"model": {"dimension": 2, "eta": 1.0}})
    code = main(["geometry", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "model.eta" in capsys.readouterr().err


def test_cli_geometry_passes(tmp_path, capsys):
    code = main(["geometry", "--out", str(tmp_path), "--json"])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["passed"] and summary["sections"] == {"geometry": True}
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["sections"]["geometry"]["checks"]["warping_exact"]["value"] == 0.0


def test_cli_smatrix_ordering_gate(tmp_path, capsys):
    data = yaml.safe_load(resources.files("glscatter").joinpath("data/default.yaml").read_text())
    data["packets"] = [data["packets"][1], data["packets"][0], data["packets"][2]]
    cfg = _write(tmp_path, data)
    code = main(["smatrix", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 1
    out = capsys.readouterr().out
    assert "ordering_gate" in out


def test_cli_packet_writes_csv(tmp_path):
    code, report = run("packet", None, tmp_path, 0)
    assert code == 0
    assert (tmp_path / "decay_outside.csv").read_text().startswith("tau,abs_f\n")
    assert report["sections"]["packet"]["checks"]["decay_slope_outside"]["value"] <= -4.0


def test_cli_seed_validation(capsys):
    assert main(["geometry", "--seed", "-1"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "glscatter", "geometry", "--out", str(tmp_path), "--json"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["passed"]
