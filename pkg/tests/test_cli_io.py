import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grover_dephasing import cli, full_sim
from grover_dephasing.io import (
    ConfigError,
    ExperimentConfig,
    NumericalError,
    format_value,
    parse_grid,
    write_csv,
)
from grover_dephasing.trace import EvolutionTrace


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


# --- config -----------------------------------------------------------------

@given(
    st.sampled_from(["simulate", "compare", "walk"]),
    st.integers(4, 600),
    st.floats(0, 1),
    st.integers(0, 500),
    st.integers(0, 2**63 - 1),
)
def test_config_round_trip(command, n, p, steps, seed):
    cfg = ExperimentConfig(command, n=n, k=0, p=p, steps=steps, seed=seed)
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        ExperimentConfig.from_dict({"command": "simulate", "n": 8, "bogus": 1})


@pytest.mark.parametrize(
    "data, field",
    [
        ({"command": "simulate", "n": 3}, "n"),
        ({"command": "simulate", "n": 8, "k": 8}, "k"),
        ({"command": "simulate", "n": 8, "p": 1.5}, "p"),
        ({"command": "simulate", "n": 8, "kind": "weird"}, "kind"),
        ({"command": "fly", "n": 8}, "command"),
        ({"command": "scaling", "grid": "2^6..3^9"}, "grid"),
        ({"command": "scaling", "mode": "best"}, "mode"),
        ({"command": "simulate", "n": 8, "k": 2, "p": 0.1, "q": 0.2}, "q"),
        ({"command": "walk", "n": 8, "a": 0.0}, "a"),
    ],
)
def test_validation_names_field(data, field):
    with pytest.raises(ConfigError, match=rf"^{field}\b|{field}:"):
        ExperimentConfig.from_dict(data)


def test_parse_grid():
    assert parse_grid("2^6..2^8") == [64, 128, 256]
    assert parse_grid("64, 100,500") == [64, 100, 500]
    with pytest.raises(ConfigError):
        parse_grid("2^1..2^3")
    with pytest.raises(ConfigError):
        parse_grid("abc")


# --- writers ----------------------------------------------------------------

def test_format_value_shortest_round_trip():
    assert format_value(0.1) == "0.1"
    assert format_value(np.float64(1 / 3)) == repr(1 / 3)
    assert float(format_value(0.1 + 0.2)) == 0.1 + 0.2
    assert format_value(np.int64(7)) == "7"
    with pytest.raises(NumericalError):
        format_value(float("nan"))


def test_empty_trace_writes_header_only(tmp_path):
    tr = EvolutionTrace(np.arange(0), {"p_reduced": np.array([]), "p_full": np.array([])})
    write_csv(tr, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_bytes() == b"m,p_full,p_reduced\n"


def test_nan_rejected_and_no_file(tmp_path):
    tr = EvolutionTrace(np.arange(2), {"p_reduced": np.array([0.1, np.nan])})
    with pytest.raises(NumericalError):
        write_csv(tr, tmp_path / "n.csv")
    assert not (tmp_path / "n.csv").exists()


def test_csv_uses_lf(tmp_path):
    tr = EvolutionTrace(np.arange(3), {"p_reduced": np.array([0.1, 0.2, 0.3])})
    write_csv(tr, tmp_path / "x.csv")
    raw = (tmp_path / "x.csv").read_bytes()
    assert b"\r" not in raw and raw.count(b"\n") == 4


# --- commands ---------------------------------------------------------------

def test_compare_example(tmp_path):
    out = tmp_path / "c.csv"
    rc = cli.main(["compare", "--n", "64", "--k", "5", "--kind", "decoupled", "--p", "0.3",
                   "--steps", "200", "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["m", "p_full", "p_reduced", "p_analytic"]
    assert len(rows) == 202
    meta = json.loads((tmp_path / "c.csv.meta.json").read_text())
    assert meta["summary"]["max_full_vs_reduced"] < 1e-10
    assert meta["config"]["n"] == 64 and meta["config"]["seed"] == 0
    assert meta["version"]


def test_simulate_example(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["simulate", "--n", "500", "--k", "10", "--kind", "coupled", "--p", "0.1",
                     "--steps", "100", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["m", "p_reduced", "p_analytic"]
    p = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    assert np.max(np.abs(p[:37, 0] - p[:37, 1])) < 0.02
    assert float(rows[19][1]) == pytest.approx(0.9563570772594595, abs=1e-13)


def test_simulate_to_stdout(capsys):
    assert cli.main(["simulate", "--n", "8", "--steps", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "m,p_reduced,p_analytic" and len(lines) == 4


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 32, "k": 3, "kind": "decoupled", "p": 0.2, "steps": 5}))
    out = tmp_path / "o.csv"
    assert cli.main(["simulate", "--config", str(cfg), "--steps", "7", "--out", str(out)]) == 0
    meta = json.loads((tmp_path / "o.csv.meta.json").read_text())
    assert meta["config"]["steps"] == 7 and meta["config"]["n"] == 32
    assert len(read_csv(out)) == 9


def test_config_file_unknown_key_exit_2(tmp_path, caplog):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 32, "colour": "red"}))
    assert cli.main(["simulate", "--config", str(cfg)]) == 2
    assert "colour" in caplog.text


def test_bad_rate_exit_2(caplog):
    assert cli.main(["simulate", "--n", "8", "--p", "1.5"]) == 2
    assert "p:" in caplog.text


def test_resource_cap_exit_3(monkeypatch, tmp_path):
    monkeypatch.setenv(full_sim.MAX_N_ENV, "16")
    assert cli.main(["compare", "--n", "64", "--steps", "2", "--out", str(tmp_path / "x.csv")]) == 3


def test_nan_exit_4(monkeypatch, tmp_path):
    def bad_evolve(spec, noise, steps):
        return EvolutionTrace(np.arange(steps + 1), {"p_reduced": np.full(steps + 1, np.nan)})

    monkeypatch.setattr(cli, "evolve", bad_evolve)
    out = tmp_path / "nan.csv"
    assert cli.main(["simulate", "--n", "8", "--steps", "3", "--out", str(out)]) == 4
    assert not out.exists()


def test_spectrum_json(tmp_path):
    out = tmp_path / "sp.json"
    assert cli.main(["spectrum", "--n", "1000", "--p", "0.001", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["spectrum"]["max_abs_error"] < 1e-5
    assert data["config"]["command"] == "spectrum"


def test_scaling_csv_and_fit(tmp_path):
    out = tmp_path / "sc.csv"
    assert cli.main(["scaling", "--grid", "2^6..2^12", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["N", "k", "p", "q", "kind", "mode", "m_used", "mbar"]
    assert len(rows) == 8
    fit = json.loads((tmp_path / "sc.csv.meta.json").read_text())["fit"]
    assert fit["beta"] == pytest.approx(0.5, abs=0.05)


def test_scaling_mu_flag(tmp_path):
    out = tmp_path / "mu.csv"
    assert cli.main(["scaling", "--grid", "256,1024", "--mu", "0.5", "--p", "0.1",
                     "--kind", "decoupled", "--out", str(out)]) == 0
    assert [r[1] for r in read_csv(out)[1:]] == ["16", "32"]


def test_walk_deterministic_bytes(tmp_path):
    args = ["walk", "--n", "16", "--k", "3", "--a", "1.0", "--steps", "6", "--shots", "200", "--seed", "9"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert read_csv(a)[0] == ["m", "p_reduced", "p_walk", "p_mc", "stderr"]
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["config"]["seed"] == 9
