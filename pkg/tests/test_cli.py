import json

import numpy as np
import pytest

from euler_geom import cli
from euler_geom.checks import Check, table
from euler_geom.errors import ConfigError


def write_config(tmp_path, **fields):
    cfg = {"schema_version": 1, "law": {"gamma": 5 / 3}, "output": "out"}
    cfg.update(fields)
    p = tmp_path / "run.json"
    p.write_text(json.dumps(cfg))
    return p


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], lines[1].split(","), np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])


def test_rest_preset_keeps_mass(tmp_path):
    p = write_config(tmp_path, initial_data={"preset": "rest"}, t_end=0.2, diagnostics=["mass", "energy"])
    assert cli.main(["solve", "--config", str(p)]) == 0
    header, cols, rows = read_csv(tmp_path / "out" / "mass.csv")
    assert header.startswith("# mass") and cols == ["time", "value"]
    assert np.all(rows[:, 1] == rows[0, 1])
    snaps = sorted((tmp_path / "out" / "snapshots").glob("snapshot_*.csv"))
    assert snaps and snaps[0].read_text().splitlines()[0] == "x,rho,u"


def test_missing_config_is_a_config_error(tmp_path, capsys):
    assert cli.main(["solve", "--config", str(tmp_path / "nope.json")]) == 3
    assert "config error" in capsys.readouterr().err


def test_cfl_out_of_range(tmp_path):
    p = write_config(tmp_path, initial_data={"preset": "sod"}, cfl=2.0)
    assert cli.main(["solve", "--config", str(p)]) == 3


@pytest.mark.parametrize(
    "fields, message",
    [
        ({"initial_data": {"preset": "inflow-spherical"}}, "approximation index"),
        ({"initial_data": {"preset": "sod"}, "geometry": {"family": "spherical", "alpha": 2.0}}, "approximation index"),
        ({"initial_data": {"preset": "rest"}, "diagnostics": ["tail_energy"]}, "constant cross section"),
        ({"initial_data": {"preset": "sod"}, "grid": {"x_left": 1.0, "x_right": 0.0, "n_cells": 10}}, "x_left"),
        ({"initial_data": {"preset": "sod"}, "schema_version": 2}, "schema_version"),
        ({"initial_data": {"preset": "sod"}, "colour": "red"}, "colour"),
        ({"initial_data": {"preset": "sod"}, "diagnostics": ["vorticity"]}, "diagnostics"),
    ],
)
def test_cross_field_validation(tmp_path, fields, message):
    with pytest.raises(ConfigError, match=message):
        cli.load_config(write_config(tmp_path, **fields))


def test_table_initial_data_and_geometry(tmp_path):
    x = np.linspace(-0.5, 0.5, 11)
    (tmp_path / "init.csv").write_text("x,rho,u\n" + "".join(f"{float(a)!r},1.0,0.0\n" for a in x))
    (tmp_path / "area.csv").write_text("x,A\n-1,1.0\n0,1.5\n1,1.0\n")
    p = write_config(
        tmp_path,
        initial_data={"table": "init.csv"},
        geometry={"family": "nozzle", "table": "area.csv"},
        grid={"x_left": -1.0, "x_right": 1.0, "n_cells": 100},
        t_end=0.05,
        n=50,
        diagnostics=["mass", "entropy", "flux_profile"],
    )
    assert cli.main(["solve", "--config", str(p)]) == 0
    _, _, m = read_csv(tmp_path / "out" / "mass.csv")
    assert np.max(np.abs(m[:, 1] / m[0, 1] - 1)) <= 1e-12
    _, cols, q = read_csv(tmp_path / "out" / "flux_profile.csv")
    assert cols == ["y", "Q"] and q.shape == (100, 2)
    (tmp_path / "bad.csv").write_text("x,rho\n0,1\n1,1\n")
    p = write_config(tmp_path, initial_data={"table": "bad.csv"}, geometry={"family": "nozzle", "A0": 1.0},
                     grid={"x_left": -1.0, "x_right": 1.0, "n_cells": 10}, t_end=0.1)
    assert cli.main(["solve", "--config", str(p)]) == 3


def test_output_is_byte_identical(tmp_path):
    p = write_config(tmp_path, initial_data={"preset": "sod"}, grid={"x_left": -1.0, "x_right": 1.0, "n_cells": 100},
                     t_end=0.05, diagnostics=["mass", "energy", "hoelder", "tail_energy", "higher_integrability"])
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert cli.main(["solve", "--config", str(p), "--out", str(d), "--seed", "4"]) == 0
        outs.append({f.relative_to(d): f.read_bytes() for f in sorted(d.rglob("*.csv"))})
    assert outs[0] == outs[1] and len(outs[0]) > 5


def test_csv_numbers_round_trip(tmp_path):
    p = write_config(tmp_path, initial_data={"preset": "sod"}, grid={"x_left": -1.0, "x_right": 1.0, "n_cells": 50},
                     t_end=0.05, diagnostics=["energy"])
    assert cli.main(["solve", "--config", str(p)]) == 0
    for ln in (tmp_path / "out" / "energy.csv").read_text().splitlines()[2:]:
        for v in ln.split(","):
            assert repr(float(v)) == v


def test_verify_table_and_exit_codes(capsys):
    assert cli.main(["verify", "--suite", "kernels"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "check,anchor,value,bound,pass"
    assert all(ln.endswith(",true") for ln in out[1:])
    assert cli.main(["verify", "--suite", "nonsense"]) == 3
    assert table([Check("x", "y", 2.0, 1.0, False)]).splitlines()[1] == "x,y,2.0,1.0,false"


def test_verify_exit_one_on_failure(monkeypatch):
    monkeypatch.setitem(cli.SUITES, "kernels", [lambda seed=0: [Check("x", "y", 2.0, 1.0, False)]])
    assert cli.main(["verify", "--suite", "kernels"]) == 1


def test_ym_verdicts(tmp_path, capsys):
    dirac = tmp_path / "dirac.txt"
    dirac.write_text("1.0 1.0 0.0\n")
    assert cli.main(["ym", "--measure", str(dirac), "--gamma", "1.6666666666666667"]) == 0
    out = capsys.readouterr().out
    assert "verdict: AdmissibleDiracOrVacuum" in out
    edges = out.splitlines()[0].removeprefix("support: [").removesuffix("]").split(", ")
    assert [float(e) for e in edges] == pytest.approx([-1.0, 1.0], abs=1e-12)
    two = tmp_path / "two.txt"
    two.write_text("0.5 1.0 0.0\n0.5 2.0 0.4\n")
    assert cli.main(["ym", "--measure", str(two), "--gamma", "1.6666666666666667"]) == 0
    assert "verdict: Violates" in capsys.readouterr().out
    bad = tmp_path / "bad.txt"
    bad.write_text("0.5 1.0\n")
    assert cli.main(["ym", "--measure", str(bad), "--gamma", "1.4"]) == 3
    assert cli.main(["ym", "--measure", str(tmp_path / "none.txt"), "--gamma", "1.4"]) == 3


def test_usage_errors_exit_three():
    with pytest.raises(SystemExit) as exc:
        cli.main(["solve"])
    assert exc.value.code == 3


def test_schema_is_packaged():
    s = cli.schema()
    assert s["properties"]["schema_version"] == {"const": 1}
