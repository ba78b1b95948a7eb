import csv
import json

import numpy as np
import pytest

from ctrlcap import config as cfgio
from ctrlcap.cli import CSV_COLUMNS, main
from ctrlcap.errors import ConfigError, SpecError
from ctrlcap.reference import data_path, load_reference


def run(argv):
    import io
    buf = io.StringIO()
    code = main(argv, out=buf)
    return code, buf.getvalue()


def test_reference_config_loads():
    spec, budget = load_reference("ref3")
    assert (spec.n, spec.p) == (3, 2)
    assert budget.M1 == 0.5


def test_missing_block_is_named():
    text = cfgio.dumps(*load_reference("ref2"))
    cut = text.replace("[A] 2 x 2\n-1.0 0.0\n0.0 -2.0\n", "")
    with pytest.raises(ConfigError, match=r"missing \[A\] block"):
        cfgio.loads(cut)


def test_dimension_error_is_verbatim():
    text = cfgio.dumps(*load_reference("ref3"))
    bad = text.replace("[B1] 3 x 2\n0.0 1.0\n1.0 1.0\n1.0 -1.0\n", "[B1] 2 x 2\n0.0 1.0\n1.0 1.0\n")
    with pytest.raises(SpecError, match="B1"):
        cfgio.loads(bad)


@pytest.mark.parametrize(
    "text, line",
    [
        ("[A] 1 x 1\nabc\n", 2),
        ("[A] 1 x 2\n1.0\n", 2),
        ("[Q] 1 x 1\n1\n", 1),
        ("junk\n", 1),
        ("# c\n[h] 1 2\n", 2),
        ("[A] 2 x 1\n1\n[B1] 1 x 1\n", 3),
        ("[A] one\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        cfgio.loads(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_duplicate_block():
    with pytest.raises(ConfigError, match="duplicate"):
        cfgio.loads("[h] 1\n[h] 2\n")


def test_round_trip_is_exact(tmp_path, rng):
    spec, budget = load_reference("ref3")
    spec = spec.with_(A=spec.A + rng.standard_normal((3, 3)) * 1e-3)
    path = tmp_path / "x.cfg"
    cfgio.dump(path, spec, budget)
    again, b2 = cfgio.load(path)
    assert again == spec and b2 == budget


def test_cli_capacity(tmp_path):
    out_json = tmp_path / "r.json"
    code, text = run(["capacity", "--config", data_path("ref3.cfg"), "--json", str(out_json)])
    assert code == 0
    assert "controllable: true" in text
    payload = json.loads(out_json.read_text())
    assert payload["controllable"] is True
    cap = payload["capacity_nats"]
    assert f"capacity: {cap:.6g} nats" in text
    code, bits = run(["capacity", "--config", data_path("ref3.cfg"), "--bits"])
    assert f"capacity: {cap / np.log(2):.6g} bits" in bits


def _write(tmp_path, name, **changes):
    spec, budget = load_reference("ref3")
    spec = spec.with_(**{k: v for k, v in changes.items() if k not in ("M1", "M2")})
    from ctrlcap.model import PowerBudget
    budget = PowerBudget(changes.get("M1", budget.M1), changes.get("M2", budget.M2))
    path = tmp_path / name
    cfgio.dump(path, spec, budget)
    return str(path)


def test_cli_zero_budget(tmp_path):
    code, text = run(["capacity", "--config", _write(tmp_path, "z.cfg", M1=0.0, M2=0.0)])
    assert code == 0 and "capacity: 0 nats" in text


def test_cli_uncontrollable(tmp_path):
    path = _write(tmp_path, "u.cfg", B1=np.zeros((3, 2)), B2=np.zeros((3, 2)))
    code, text = run(["capacity", "--config", path])
    assert code == 0
    assert "controllable: false" in text and "capacity: 0 nats" in text


def test_cli_sweep_single_point_matches_capacity(tmp_path):
    out = tmp_path / "s.csv"
    code, _ = run(["sweep", "--config", data_path("ref2.cfg"), "--param", "T", "--from", "1.0",
                   "--to", "1.0", "--points", "1", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == CSV_COLUMNS and len(rows) == 2
    _, text = run(["capacity", "--config", data_path("ref2.cfg")])
    assert f"capacity: {float(rows[1][1]):.6g} nats" in text


def test_cli_sweep_budget_monotone(tmp_path):
    out = tmp_path / "m.csv"
    code, _ = run(["sweep", "--config", data_path("ref2.cfg"), "--param", "M1", "--from", "0",
                   "--to", "3", "--points", "7", "--out", str(out)])
    assert code == 0
    caps = [float(r[1]) for r in list(csv.reader(out.open()))[1:]]
    assert all(b >= a - 1e-12 for a, b in zip(caps, caps[1:]))


def test_cli_sweep_rejects_bad_grid(tmp_path):
    code, _ = run(["sweep", "--config", data_path("ref2.cfg"), "--param", "T", "--from", "0.1",
                   "--to", "2", "--points", "3", "--out", str(tmp_path / "b.csv")])
    assert code == 2


def test_cli_asymptotic(tmp_path):
    code, text = run(["asymptotic", "--config", data_path("ref2.cfg"), "--regime", "stable"])
    assert code == 0 and "capacity_limit" in text
    code, _ = run(["asymptotic", "--config", data_path("ref2.cfg"), "--regime", "unstable"])
    assert code == 2
    code, text = run(["asymptotic", "--config", data_path("scalar_noisy.cfg"), "--regime", "small-t",
                      "--json", str(tmp_path / "a.json")])
    assert code == 0 and "trace_Q: 0.333333" in text
    payload = json.loads((tmp_path / "a.json").read_text())
    assert payload["capacity_linear_law"] == pytest.approx(1 / 3)
    assert payload["capacity_full"] > 0


def test_cli_validate_quick_and_forced_failure(tmp_path):
    args = ["validate", "--config", data_path("scalar_desk.cfg"), "--paths", "4000", "--step", "0.0625",
            "--seed", "3"]
    code, text = run(args + ["--tol", "0.2", "--cap-tol", "0.1"])
    assert code == 0 and text.count("PASS") == 3
    code2, text2 = run(args + ["--tol", "0.2", "--cap-tol", "0.1"])
    assert text2 == text
    code, text = run(args + ["--tol", "0", "--cap-tol", "0"])
    assert code == 2 and "FAIL" in text


def test_cli_dump_round_trip(tmp_path):
    out = tmp_path / "d.cfg"
    assert run(["dump", "--config", data_path("ref3.cfg"), "--out", str(out)])[0] == 0
    assert cfgio.load(out)[0] == load_reference("ref3")[0]


@pytest.mark.parametrize("argv", [["nope"], ["capacity"], ["sweep", "--config", "x", "--param", "Q"]])
def test_cli_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 1


def test_cli_missing_file():
    assert run(["capacity", "--config", "/nonexistent.cfg"])[0] == 1


def test_cli_numeric_failure(tmp_path):
    path = _write(tmp_path, "s.cfg", G=np.zeros((3, 3)), sigma1=np.zeros((3, 3)),
                  sigma2=np.zeros((3, 3)), Cx0=np.zeros((3, 3)))
    assert run(["capacity", "--config", path])[0] == 3
