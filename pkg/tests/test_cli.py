import json

import numpy as np
import pytest

from moment_forge.cli import load_config, main
from moment_forge.errors import ConfigError
from moment_forge.records import read_records

_FAST_KMM = {
    "divergence": "chi2", "reference": "empirical", "instrument": "const",
    "n_rff": 16, "batch_n1": 80, "batch_n2": 80, "lr_theta": 0.1, "lr_beta": 0.1,
    "max_iters": 300, "update": "ogda", "eval_every": 100, "metric": "moment_norm",
    "anneal_start": None, "anneal_gamma": 1.0, "theta_init": "zeros",
    "epsilon": 1.0, "lam": 0.0,
}


def test_load_config_yaml_and_json(tmp_path):
    y = tmp_path / "c.yaml"
    y.write_text("design: mean\nseeds: [0, 1]\n")
    assert load_config(str(y)) == {"design": "mean", "seeds": [0, 1]}
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"design": "mean"}))
    assert load_config(str(j)) == {"design": "mean"}


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "missing.yaml"))
    bad = tmp_path / "bad.yaml"
    bad.write_text("design: [unclosed\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(str(bad))
    badj = tmp_path / "bad.json"
    badj.write_text("{broken")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(str(badj))
    lst = tmp_path / "list.yaml"
    lst.write_text("- a\n- b\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(str(lst))


def test_fit_writes_parseable_record(tmp_path, capsys):
    out = tmp_path / "rec.jsonl"
    code = main(["fit", "--design", "mean", "--estimator", "ols", "--n-train", "100",
                 "--seed", "2", "--n-test", "500", "--out", str(out)])
    assert code == 0
    recs = read_records(out)
    assert len(recs) == 1 and recs[0].estimator == "ols"
    assert "wrote 1 records" in capsys.readouterr().out


def test_fit_stdout_is_jsonl(capsys):
    code = main(["fit", "--design", "mean", "--estimator", "ols", "--n-train", "50",
                 "--seed", "0", "--n-test", "200"])
    assert code == 0
    line = capsys.readouterr().out.strip()
    assert json.loads(line)["design"] == "mean"


def test_unknown_design_exits_1(capsys):
    code = main(["fit", "--design", "panel", "--estimator", "ols"])
    assert code == 1
    assert "config error" in capsys.readouterr().err


def test_benchmark_round_trip(tmp_path, capsys):
    cfg = tmp_path / "bench.yaml"
    cfg.write_text(
        "design: mean\nestimators: [ols, kmm]\nseeds: [0, 1]\nn_train: 80\nn_test: 500\n"
        "kmm:\n" + "".join(f"  {k}: {json.dumps(v)}\n" for k, v in _FAST_KMM.items())
    )
    out = tmp_path / "bench.jsonl"
    assert main(["benchmark", "--config", str(cfg), "--out", str(out)]) == 0
    recs = read_records(out)
    assert [(r.estimator, r.seed) for r in recs] == [("kmm", 0), ("kmm", 1), ("ols", 0), ("ols", 1)]
    # CLI seed override wins over the config list
    assert main(["benchmark", "--config", str(cfg), "--seeds", "7", "--out", str(out)]) == 0
    assert {r.seed for r in read_records(out)} == {7}
    capsys.readouterr()


def test_benchmark_determinism(tmp_path, capsys):
    cfg = tmp_path / "bench.yaml"
    cfg.write_text(
        "design: mean\nestimator: kmm\nseeds: [3]\nn_train: 80\nn_test: 500\n"
        "kmm:\n" + "".join(f"  {k}: {json.dumps(v)}\n" for k, v in _FAST_KMM.items())
    )
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["benchmark", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["benchmark", "--config", str(cfg), "--out", str(b)]) == 0
    pays = [[r.canonical_payload() for r in read_records(p)] for p in (a, b)]
    assert pays[0] == pays[1]
    capsys.readouterr()


def test_table_text_and_csv(tmp_path, capsys):
    out = tmp_path / "recs.jsonl"
    main(["fit", "--design", "mean", "--estimator", "ols", "--n-train", "60",
          "--seed", "0", "--n-test", "200", "--out", str(out)])
    capsys.readouterr()
    assert main(["table", str(out)]) == 0
    assert "ols" in capsys.readouterr().out
    assert main(["table", str(out), "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("design,estimator")
    dest = tmp_path / "table.txt"
    assert main(["table", str(out), "--out", str(dest)]) == 0
    assert "ols" in dest.read_text()
    capsys.readouterr()


def test_table_no_records_exits_1(tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["table", str(empty)]) == 1
    assert "config error" in capsys.readouterr().err


def test_datagen_writes_npz(tmp_path, capsys):
    out = tmp_path / "d.npz"
    assert main(["datagen", "--design", "network_iv_abs", "--n", "40", "--seed", "1",
                 "--out", str(out)]) == 0
    data = np.load(out)
    assert data["x"].shape == (40, 2) and data["z"].shape == (40, 1)
    out2 = tmp_path / "m.npz"
    assert main(["datagen", "--design", "mean", "--n", "25", "--out", str(out2)]) == 0
    assert "z" not in np.load(out2)
    capsys.readouterr()


def test_check_passes(capsys):
    assert main(["check"]) == 0
    assert "self-check passed" in capsys.readouterr().out


def test_jobs_env_validation(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "bench.yaml"
    cfg.write_text("design: mean\nestimator: ols\nseeds: [0]\nn_train: 50\nn_test: 200\n")
    monkeypatch.setenv("MOMENT_FORGE_THREADS", "two")
    assert main(["benchmark", "--config", str(cfg)]) == 1
    assert "MOMENT_FORGE_THREADS" in capsys.readouterr().err
    monkeypatch.setenv("MOMENT_FORGE_THREADS", "2")
    assert main(["benchmark", "--config", str(cfg)]) == 0
    capsys.readouterr()
