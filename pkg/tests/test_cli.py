import csv
import json
import math

import pytest
import yaml

from qndwork.cli import SWEEP_COLUMNS, main
from qndwork.config import load_config, parse_config, recipe_names
from qndwork.errors import ConfigError
from qndwork.exactsim.dynamics import TRACE_COLUMNS

BASE = {
    "bath": {"eta": 0.05, "omega0": 1.4285714285714286, "tc": 10.0, "beta": 3.74},
    "drive": {"omega_a": 1.0, "delta": 0.25, "Omega": 2.5, "t_start": 1.0},
    "kernels": {"points_per_period": 200},
    "exact": {"n_modes": 2, "fock_cutoff": 1, "convergence": False},
}


def write_cfg(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return str(p)


def with_(base, **sections):
    out = {k: dict(v) if isinstance(v, dict) else v for k, v in base.items()}
    for k, v in sections.items():
        out[k] = v if not isinstance(v, dict) else {**out.get(k, {}), **v}
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("name", recipe_names())
def test_shipped_recipes_parse(name):
    cfg = load_config(name)
    assert cfg.bath.tc == 10.0


def test_recipe_names():
    assert set(recipe_names()) >= {"fig1_main", "fig1_inset", "fig2", "fig3"}


def test_infinite_beta_spellings():
    for v in (math.inf, "inf", ".inf"):
        cfg = parse_config(with_(BASE, bath={"beta": v}))
        assert math.isinf(cfg.bath.beta)


@pytest.mark.parametrize("patch, match", [
    ({"bath": {"colour": 1}}, "unknown"),
    ({"extra": 1}, "unknown"),
    ({"bath": {"tc": -1.0}}, "tc"),
    ({"drive": {"delta": 1.5}}, "delta"),
    ({"exact": {"probe_d": 2.0}}, "probe_d"),
    ({"exact": {"include_probe": True}}, "pulse"),
    ({"sweep": {"variable": "eta", "start": 0, "stop": 1, "points": 3}}, "variable"),
    ({"sweep": {"variable": "Omega", "start": 0, "stop": 1, "points": 3}}, "Omega"),
    ({"kernels": {"points_per_period": 2.5}}, "integer"),
    ({"seed": True}, "integer"),
])
def test_strict_config(patch, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(with_(BASE, **patch))


def test_physical_parameters_have_no_defaults():
    data = with_(BASE)
    del data["bath"]["eta"]
    with pytest.raises(ConfigError, match="required"):
        parse_config(data)
    with pytest.raises(ConfigError, match="required"):
        parse_config({"bath": BASE["bath"]})


def test_config_error_exit_code_and_no_output(tmp_path, capsys):
    out = tmp_path / "k.csv"
    cfg = write_cfg(tmp_path, with_(BASE, bath={"tc": -1.0}))
    assert main(["kernels", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()
    assert "config error" in capsys.readouterr().err
    assert main(["kernels", "--config", "no-such-recipe", "--out", str(out)]) == 2


def test_numerical_failure_exit_code(tmp_path):
    out = tmp_path / "run.csv"
    cfg = write_cfg(tmp_path, with_(BASE, tolerances={"step_tol": 1e-300}))
    assert main(["exact", "--config", cfg, "--out", str(out)]) == 3
    assert not out.exists()
    assert list(tmp_path.iterdir()) == [tmp_path / "cfg.yaml"]


def test_uncoupled_kernels_are_zero(tmp_path):
    out = tmp_path / "k.csv"
    cfg = write_cfg(tmp_path, with_(BASE, bath={"eta": 0.0}))
    assert main(["kernels", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["t", "J_e", "J_g", "dJ", "s"]
    assert all(float(x) == 0.0 for r in rows[1:] for x in r[1:4])


def test_empty_sweep_writes_header_only(tmp_path):
    out = tmp_path / "w.csv"
    cfg = write_cfg(tmp_path, with_(BASE, sweep={"variable": "Omega", "start": 1, "stop": 2, "points": 0}))
    assert main(["work-sweep", "--config", cfg, "--out", str(out)]) == 0
    assert read_csv(out) == [list(SWEEP_COLUMNS)]


def test_sweep_is_identical_across_thread_counts(tmp_path):
    cfg = write_cfg(tmp_path, with_(BASE, sweep={"variable": "T", "start": 0.0, "stop": 0.5, "points": 2}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["work-sweep", "--config", cfg, "--out", str(a)]) == 0
    assert main(["work-sweep", "--config", cfg, "--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read_csv(a)
    assert rows[1][2] != "nan" and rows[2][2] == "nan"  # closed form only at T = 0


def test_markovian_output_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, with_(BASE, markovian={"mode": "campaign", "n_trajectories": 3}, seed=7))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["markovian", "--config", cfg, "--out", str(a)]) == 0
    assert main(["markovian", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["W"] <= 1e-8 and rep["max_entropy_violation"] <= 1e-10


def test_exact_run_writes_trace_and_ledger(tmp_path):
    out = tmp_path / "run.csv"
    cfg = write_cfg(tmp_path, BASE)
    assert main(["exact", "--config", cfg, "--out", str(out)]) == 0
    assert read_csv(out)[0] == list(TRACE_COLUMNS)
    ledger = json.loads(out.with_suffix(".json").read_text())
    assert ledger["W_tot"] < 0
    assert ledger["W_tot"] == pytest.approx(ledger["W_cycle"] - ledger["dE_meas"], abs=1e-15)


def test_exact_rejects_json_out(tmp_path):
    assert main(["exact", "--config", write_cfg(tmp_path, BASE), "--out", str(tmp_path / "x.json")]) == 2


def test_dimension_cap_refusal_exit_code(tmp_path):
    out = tmp_path / "run.csv"
    cfg = write_cfg(tmp_path, with_(BASE, exact={"n_modes": 8, "fock_cutoff": 2, "dim_cap": 100}))
    assert main(["exact", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()


def test_threads_must_be_positive(tmp_path):
    assert main(["kernels", "--config", write_cfg(tmp_path, BASE), "--out", str(tmp_path / "k.csv"), "--threads", "0"]) == 2
