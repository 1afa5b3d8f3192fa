import csv
import io

import pytest

from oocluster.cli import main, parse_list, sweep_params
from oocluster.simulation import InvalidParams, SimParams, UnknownParam, csv_header


def _config(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return str(path)


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_run_prints_header_and_row(tmp_path, capsys):
    cfg = _config(tmp_path, "INOBJ = 60\nSIMTIME = 300\nALGORITHM = ck\n")
    assert main(["run", "-c", cfg]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0] == csv_header() and len(rows) == 2
    rec = dict(zip(rows[0], rows[1]))
    assert rec["ALGORITHM"] == "ck" and rec["INOBJ"] == "60"


def test_bad_pt_config_names_keys(tmp_path, capsys):
    cfg = _config(tmp_path, "PT1 = 0.5\n")
    assert main(["run", "-c", cfg]) != 0
    err = capsys.readouterr().err
    assert "PT1" in err and "PT15" in err


def test_unknown_key(tmp_path, capsys):
    cfg = _config(tmp_path, "INOBJ = 60\n")
    assert main(["sweep", "-c", cfg, "--vary", "BOGUS", "--values", "1"]) == 2
    assert "BOGUS" in capsys.readouterr().err


def test_missing_config(capsys):
    assert main(["run", "-c", "/nonexistent/cfg"]) == 2
    assert capsys.readouterr().err.startswith("error:")


@pytest.mark.parametrize("name", ["cactis", "ck_on", "ck_off"])
def test_golden(name, capsys):
    assert main(["golden", name]) == 0
    assert f"{name}: PASS" in capsys.readouterr().out


def test_sweep_rows_ordered(tmp_path, capsys):
    cfg = _config(tmp_path, "SIMTIME = 120\n")
    assert main(["sweep", "-c", cfg, "--vary", "INOBJ", "--values", "30,40", "--seeds", "2,1", "-j", "2"]) == 0
    rows = _rows(capsys.readouterr().out)
    header, body = rows[0], rows[1:]
    assert len(body) == 3 * 2 * 2
    keys = [(r[header.index("ALGORITHM")], r[header.index("INOBJ")], r[header.index("SEED")]) for r in body]
    assert keys == [(a, v, s) for a in ("cactis", "orion", "ck") for v in ("30", "40") for s in ("2", "1")]


def test_sweep_parallel_matches_serial(tmp_path, capsys):
    cfg = _config(tmp_path, "SIMTIME = 120\nINOBJ = 30\n")
    args = ["sweep", "-c", cfg, "--vary", "IBUFF", "--values", "5,20"]
    main(args)
    serial = capsys.readouterr().out
    main(args + ["-j", "3"])
    assert capsys.readouterr().out == serial


def test_parse_list():
    assert parse_list("1, 2,3") == ["1", "2", "3"]
    assert parse_list("100:400:100") == ["100", "200", "300", "400"]
    assert parse_list("0.5:1.0:0.25") == ["0.5", "0.75", "1"]
    with pytest.raises(ValueError):
        parse_list("1:2")
    with pytest.raises(ValueError):
        parse_list(" , ")


def test_sweep_params_guards():
    with pytest.raises(UnknownParam):
        sweep_params(SimParams(), "NOPE", ["1"], [0])
    with pytest.raises(InvalidParams):
        sweep_params(SimParams(), "SEED", ["1"], [0])
    ps = sweep_params(SimParams(), "readpct", ["90"], [0])
    assert [p.ALGORITHM for p in ps] == ["cactis", "orion", "ck"]
