import csv
import hashlib
import json

import numpy as np
import pytest

from cutoffqed import cli
from cutoffqed.params import CircuitParams


def _rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.reader(lines))


def test_config_round_trip():
    cfg = cli.RunConfig(params=CircuitParams(chi_g=0.02, x0=0.2), task="sweep", N=300,
                        omega_j_grid=(1.0, 2.0, 3.0), jobs=2, include_vacuum=False)
    assert cli.RunConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize("bad", [
    {"task": "nope"},
    {"N": 0},
    {"format": "xml"},
    {"omega_j_grid": (2.0, 1.0)},
    {"omega_j_grid": ()},
    {"dt": 0.0},
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        cli.RunConfig(**bad)


def test_unknown_config_key():
    with pytest.raises(ValueError):
        cli.RunConfig.from_dict({"task": "modes", "colour": "red"})


def test_parse_grid():
    assert cli.parse_grid("1,2.5,3") == (1.0, 2.5, 3.0)
    assert cli.parse_grid("linspace:0:1:5") == (0.0, 0.25, 0.5, 0.75, 1.0)
    with pytest.raises(ValueError):
        cli.parse_grid("linspace:0:1")


def test_modes_rows_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["modes", "--N", "50", "--chi-g", "0.01", "--out", str(out)]) == 0
    rows = _rows(a / "modes.csv")
    assert rows[0] == ["n", "omega_n", "phi_x0", "g_n"] and len(rows) == 51
    digest = [hashlib.sha256((d / "modes.csv").read_bytes()).hexdigest() for d in (a, b)]
    assert digest[0] == digest[1]
    doc = json.loads((a / "modes.json").read_text())
    assert doc["config"]["params"]["chi_g"] == 0.01 and len(doc["rows"]) == 50


def test_config_file_env_and_flag_precedence(tmp_path, monkeypatch):
    cfg = cli.RunConfig(params=CircuitParams(chi_g=0.03), task="modes", N=7)
    path = tmp_path / "run.json"
    path.write_text(cfg.to_json())
    monkeypatch.setenv(cli.CONFIG_ENV, str(path))
    ns = cli.build_parser().parse_args(["modes", "--N", "9"])
    merged = cli.config_from_args(ns)
    assert merged.N == 9 and merged.params.chi_g == 0.03


def test_dispersive_one_table_per_chi_s(tmp_path):
    assert cli.main(["dispersive", "--N", "200", "--chi-s-list", "0,0.001,0.01,0.1", "--out", str(tmp_path)]) == 0
    tables = sorted(p.name for p in tmp_path.glob("dispersive_*.csv"))
    assert len(tables) == 4
    assert "# meta.tail_verdict=divergent" in (tmp_path / "dispersive_chis=0.csv").read_text()


def test_sweep_finite_and_parallel_identical(tmp_path):
    args = ["sweep", "--N", "200", "--chi-g", "0.01", "--omega-j-grid", "linspace:1.5:4.5:13"]
    assert cli.main(args + ["--out", str(tmp_path / "s")]) == 0
    assert cli.main(args + ["--jobs", "2", "--out", str(tmp_path / "p")]) == 0
    rows = _rows(tmp_path / "s" / "sweep.csv")[1:]
    assert len(rows) == 13
    assert np.all(np.isfinite(np.array(rows, dtype=float)))
    assert (tmp_path / "s" / "sweep.csv").read_bytes() == (tmp_path / "p" / "sweep.csv").read_bytes()
    assert not (tmp_path / "s" / "sweep.errors.log").exists()


def test_errors_are_logged(tmp_path):
    # without a series capacitance D_j(0) < 0: every pole search fails
    code = cli.main(["poles", "--N", "50", "--chi-g", "0.1", "--chi-s-override", "0", "--M", "2",
                     "--out", str(tmp_path)])
    text = (tmp_path / "poles.errors.log").read_text()
    assert "qubit: TruncationError" in text and "resonators:" in text
    assert code == 1  # nothing succeeded
    assert cli.main(["poles", "--N", "50", "--M", "2", "--out", str(tmp_path)]) == 0
    assert not (tmp_path / "poles.errors.log").exists()
    assert len(_rows(tmp_path / "poles.csv")) == 4


def test_validate_and_ww_flat(tmp_path):
    assert cli.main(["validate", "--out", str(tmp_path)]) == 0
    assert all(r[-1] == "true" for r in _rows(tmp_path / "validate.csv")[1:])
    assert cli.main(["ww", "--profile", "flat", "--chi-g", "0.1", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "ww_divergence.json").read_text())
    assert report["divergent"] and report["K0_doubled"] == pytest.approx(4 * report["K0"], rel=1e-9)


def test_mspt_and_green_tasks(tmp_path):
    assert cli.main(["mspt", "--N", "30", "--chi-g", "0.05", "--occupation", "0.5", "--out", str(tmp_path)]) == 0
    row = _rows(tmp_path / "mspt.csv")[1]
    assert float(row[3]) < 0
    assert cli.main(["green", "--chi-R", "0", "--chi-L", "0", "--N", "500", "--omega-grid", "1.1,2.2",
                     "--out", str(tmp_path)]) == 0
    g = np.array(_rows(tmp_path / "green.csv")[1:], dtype=float)
    np.testing.assert_allclose(g[:, 3], g[:, 1], rtol=1e-3)


def test_stdout_json(capsys):
    assert cli.main(["resonances", "--N", "3", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["columns"][0] == "n" and len(doc["rows"]) == 4


def test_bad_flag_exits():
    with pytest.raises(SystemExit):
        cli.main(["modes", "--N", "0"])
