import csv
import json

import numpy as np
import pytest

from hidim.cli import main, read_csv_matrix
from hidim.errors import InputError


def _write(path, x, header=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        w.writerows(x.tolist())
    return str(path)


def test_two_rows_exit_degenerate(tmp_path, capsys):
    path = _write(tmp_path / "a.csv", np.array([[0.1, 0.2], [0.3, 0.5]]))
    assert main(["test", "--input", path, "--m", "2"]) == 2
    assert "error" in capsys.readouterr().err


def test_identical_columns_rejected(tmp_path, capsys):
    x = np.random.default_rng(0).random(64)
    path = _write(tmp_path / "b.csv", np.column_stack([x, x]), header=["u", "v"])
    assert main(["test", "--input", path, "--m", "2"]) == 0
    assert "decision: reject" in capsys.readouterr().out


def test_json_report_keys(tmp_path, capsys):
    path = _write(tmp_path / "c.csv", np.random.default_rng(1).random((30, 4)))
    assert main(["test", "--input", path, "--m", "3", "--format", "json", "--scaling", "paper"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) >= {"n", "d", "m", "t", "nu", "scale", "z", "t_bar", "p_value", "alpha", "reject", "scaling"}
    assert report["n"] == 30 and len(report["z"]) == 2


def test_column_permutation_gives_same_output(tmp_path, capsys):
    x = np.random.default_rng(2).random((25, 5))
    a = _write(tmp_path / "a.csv", x)
    b = _write(tmp_path / "b.csv", x[:, [3, 0, 4, 1, 2]])
    main(["test", "--input", a, "--m", "3"])
    out_a = capsys.readouterr().out
    main(["test", "--input", b, "--m", "3"])
    assert capsys.readouterr().out == out_a


def test_ties_policy(tmp_path, capsys):
    x = np.random.default_rng(3).random((20, 3))
    x[1, 0] = x[0, 0]
    path = _write(tmp_path / "t.csv", x)
    assert main(["test", "--input", path]) == 1
    assert main(["test", "--input", path, "--ties", "by-index"]) == 0


def test_malformed_csv(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3,x\n")
    assert main(["test", "--input", str(p)]) == 1
    p.write_text("1,2\n3\n")
    with pytest.raises(InputError):
        read_csv_matrix(p)
    assert main(["test", "--input", str(tmp_path / "missing.csv")]) == 1


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["test"])
    assert info.value.code == 1


def test_simulate_preset_to_stdout(capsys, monkeypatch):
    import hidim.harness as harness

    small = harness.preset("table1", replications=2)
    small.grid = {"n": [16], "d": [4, 8]}
    monkeypatch.setattr(harness, "preset", lambda name, replications, seed: small)
    assert main(["simulate", "--preset", "table1", "--reps", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "model,test,scaling,n,d,replications,reject_rate,seed"
    assert len(lines) == 1 + 2 * len(small.tests)


def test_simulate_config_file(tmp_path, capsys):
    cfg = {
        "models": [{"variant": "romano_siegel"}],
        "grid": {"n": [16], "d": [6]},
        "tests": [{"statistic": "S", "order": 3, "scaling": "asymptotic"}],
        "replications": 5,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out.json"
    assert main(["simulate", "--config", str(path), "--format", "json", "--out", str(out), "--seed", "4"]) == 0
    obj = json.loads(out.read_text())
    assert obj["seed"] == 4 and obj["cells"][0]["d_actual"] == 6
    path.write_text("{not json")
    assert main(["simulate", "--config", str(path)]) == 1
    path.write_text(json.dumps({"models": [{"variant": "nope"}]}))
    assert main(["simulate", "--config", str(path)]) == 1


def test_null_quantile(capsys):
    assert main(["null-quantile", "--n", "16", "--d", "4", "--reps", "120", "--levels", "0.5,0.9,0.95"]) == 0
    values = [float(line.split("\t")[1]) for line in capsys.readouterr().out.strip().splitlines()]
    assert values == sorted(values)
    assert main(["null-quantile", "--n", "16", "--d", "4", "--reps", "10"]) == 1


@pytest.mark.parametrize(
    "argv, prefix",
    [
        (["--id", "B12", "--n", "7"], "2/3 (0.666667)"),
        (["--id", "Mu", "--n", "4", "--k", "2"], "1/48 (0.020833"),
        (["--id", "Phi2_size4", "--n", "3"], "1/405 (0.0024691"),
    ],
)
def test_moments_examples(argv, prefix, capsys):
    assert main(["moments", *argv]) == 0
    assert capsys.readouterr().out.startswith(prefix)


def test_moments_list_and_errors(capsys):
    assert main(["moments", "--list"]) == 0
    assert "Sigma2" in capsys.readouterr().out.split()
    assert main(["moments", "--id", "Phi2_size4", "--n", "2"]) == 1
    assert main(["moments", "--id", "B1"]) == 1
