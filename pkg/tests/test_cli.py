import csv
import json
from pathlib import Path

import numpy as np
import pytest

from modl.cli import main
from modl.synthetic import generate_accidents


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("accidents")
    fx = generate_accidents(300, seed=9)
    return fx.write(out)


def data_args(paths):
    args = []
    for name, path in paths.files.items():
        args += ["--data", f"{name}={path}"]
    return args


def train_args(paths, out, extra=()):
    return [
        "train",
        "--schema",
        str(paths.schema),
        *data_args(paths),
        "--target",
        paths.target,
        "--n-features",
        "20",
        "--seed",
        "5",
        "--out",
        str(out),
        *extra,
    ]


@pytest.fixture(scope="module")
def trained(fixture_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    code = main(train_args(fixture_dir, out))
    assert code == 0
    return out


def test_train_produces_artifacts(trained):
    assert (trained / "model.json").exists()
    assert (trained / "report.json").exists()
    assert (trained / "timing.json").exists()
    report = json.loads((trained / "report.json").read_text())
    assert set(report["evaluation"]) == {"train", "test"}
    assert report["evaluation"]["test"]["auc"] is not None
    levels = [e["level"] for e in report["preparation"]]
    assert levels == sorted(levels, reverse=True)


def test_train_no_features_native_only(fixture_dir, tmp_path):
    out = tmp_path / "nofeat"
    code = main(train_args(fixture_dir, out, extra=()))
    assert code == 0
    out2 = tmp_path / "zero"
    args = train_args(fixture_dir, out2)
    args[args.index("--n-features") + 1] = "0"
    assert main(args) == 0
    model = json.loads((out2 / "model.json").read_text())
    assert all(not v["constructed"] for v in model["variables"])


def test_train_deterministic_across_threads(fixture_dir, tmp_path):
    blobs = {}
    for threads in (1, 2, 4, 8):
        out = tmp_path / f"t{threads}"
        code = main(train_args(fixture_dir, out, extra=("--threads", str(threads))))
        assert code == 0
        blobs[threads] = (
            (out / "model.json").read_bytes(),
            (out / "report.json").read_bytes(),
        )
    reference = blobs[1]
    for threads, blob in blobs.items():
        assert blob == reference, f"threads={threads} differs"


def test_predict_outputs_and_key_join_oracle(fixture_dir, trained, tmp_path):
    out = tmp_path / "pred"
    code = main(
        [
            "predict",
            "--schema",
            str(fixture_dir.schema),
            *data_args(fixture_dir),
            "--model",
            str(trained / "model.json"),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    with open(out / "predictions.csv", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 300
    assert all(abs(float(r["ProbGravityLethal"]) + float(r["ProbGravityNonLethal"]) - 1) < 1e-9 for r in rows)

    # Shuffle the root rows; per-key outputs must be identical.
    acc = fixture_dir.files["Accidents"].read_text().splitlines(keepends=True)
    header, body = acc[0], acc[1:]
    rng = np.random.default_rng(0)
    shuffled = [body[i] for i in rng.permutation(len(body))]
    shuffled_path = tmp_path / "acc_shuffled.csv"
    shuffled_path.write_text(header + "".join(shuffled))
    files = dict(fixture_dir.files)
    files["Accidents"] = shuffled_path
    out2 = tmp_path / "pred2"
    args = ["predict", "--schema", str(fixture_dir.schema), "--model",
            str(trained / "model.json"), "--out", str(out2)]
    for name, path in files.items():
        args += ["--data", f"{name}={path}"]
    assert main(args) == 0
    with open(out2 / "predictions.csv", newline="") as handle:
        rows2 = list(csv.DictReader(handle))
    by_key = {r["AccidentId"]: r for r in rows}
    assert len(rows2) == len(rows)
    for r in rows2:
        assert by_key[r["AccidentId"]] == r


def test_predict_without_target_column(fixture_dir, trained, tmp_path):
    # Deployment data usually has no target column at all.
    acc = fixture_dir.files["Accidents"].read_text().splitlines(keepends=True)
    rows = [line.rsplit(",", 1)[0] + "\n" for line in acc]
    stripped = tmp_path / "acc_notarget.csv"
    stripped.write_text("".join(rows))
    files = dict(fixture_dir.files)
    files["Accidents"] = stripped
    out = tmp_path / "pred3"
    args = ["predict", "--schema", str(fixture_dir.schema), "--model",
            str(trained / "model.json"), "--out", str(out)]
    for name, path in files.items():
        args += ["--data", f"{name}={path}"]
    assert main(args) == 0
    assert (out / "predictions.csv").exists()


def test_evaluate_subcommand(fixture_dir, trained, tmp_path):
    out = tmp_path / "eval"
    code = main(
        [
            "evaluate",
            "--schema",
            str(fixture_dir.schema),
            *data_args(fixture_dir),
            "--target",
            "Gravity",
            "--model",
            str(trained / "model.json"),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    doc = json.loads((out / "evaluation.json").read_text())
    assert 0.0 <= doc["accuracy"] <= 1.0
    assert doc["instances"] == 300


def test_explain_csv_shape_and_order(fixture_dir, trained, tmp_path):
    out = tmp_path / "xai"
    code = main(
        [
            "explain",
            "--schema",
            str(fixture_dir.schema),
            *data_args(fixture_dir),
            "--model",
            str(trained / "model.json"),
            "--class-of-interest",
            "Lethal",
            "-k",
            "2",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    with open(out / "shapley.csv", newline="") as handle:
        rows = list(csv.reader(handle))
    header, body = rows[0], rows[1:]
    assert len(header) == 1 + 2 * 3  # posterior + 2 triplets
    assert header[0] == "ProbGravityLethal"
    posteriors = [float(r[0]) for r in body]
    assert posteriors == sorted(posteriors, reverse=True)
    values = [float(r[3]) for r in body if r[3] != ""]
    later = [float(r[6]) for r in body if r[6] != ""]
    assert all(a >= b - 1e-12 for a, b in zip(values, later))
    assert (out / "reinforcement.csv").exists()
    assert (out / "shapley.json").exists()


def test_explain_k_larger_than_variables_pads(fixture_dir, trained, tmp_path):
    out = tmp_path / "xai_pad"
    model = json.loads((trained / "model.json").read_text())
    k = len(model["variables"]) + 3
    code = main(
        [
            "explain",
            "--schema",
            str(fixture_dir.schema),
            *data_args(fixture_dir),
            "--model",
            str(trained / "model.json"),
            "--class-of-interest",
            "Lethal",
            "-k",
            str(k),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    with open(out / "shapley.csv", newline="") as handle:
        rows = list(csv.reader(handle))
    assert len(rows[0]) == 1 + 3 * k
    assert rows[1][-1] == ""  # padded triplets stay empty


def test_explain_unknown_class_is_data_error(fixture_dir, trained, tmp_path, capsys):
    code = main(
        [
            "explain",
            "--schema",
            str(fixture_dir.schema),
            *data_args(fixture_dir),
            "--model",
            str(trained / "model.json"),
            "--class-of-interest",
            "NoSuchClass",
            "--out",
            str(tmp_path / "x"),
        ]
    )
    assert code == 3
    assert "error:data:" in capsys.readouterr().err


def test_sample_features_subcommand(fixture_dir, tmp_path):
    out = tmp_path / "feat"
    code = main(
        [
            "sample-features",
            "--schema",
            str(fixture_dir.schema),
            "--target",
            "Gravity",
            "--n-features",
            "30",
            "--seed",
            "3",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    with open(out / "features.csv", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert 0 < len(rows) <= 30
    assert all(float(r["PriorNats"]) > 0 for r in rows)


def test_data_error_exit_code(fixture_dir, tmp_path, capsys):
    args = train_args(fixture_dir, tmp_path / "bad")
    idx = args.index("--target")
    args[idx + 1] = "NoSuchColumn"
    code = main(args)
    assert code == 3
    assert "error:data:" in capsys.readouterr().err


def test_usage_error_exit_code(fixture_dir, tmp_path, capsys):
    args = [
        "train",
        "--schema",
        str(fixture_dir.schema),
        "--data",
        "bogus-no-equals",
        "--target",
        "Gravity",
        "--out",
        str(tmp_path / "u"),
    ]
    code = main(args)
    assert code == 2
    assert "error:usage:" in capsys.readouterr().err


def test_orphan_flag(fixture_dir, tmp_path, capsys):
    veh = fixture_dir.files["Vehicles"].read_text()
    broken = tmp_path / "veh_orphan.csv"
    broken.write_text(veh + "zzz,v0,Car,100\n")
    files = dict(fixture_dir.files)
    files["Vehicles"] = broken
    base = ["train", "--schema", str(fixture_dir.schema), "--target", "Gravity",
            "--n-features", "5", "--seed", "1"]
    for name, path in files.items():
        base += ["--data", f"{name}={path}"]
    code = main(base + ["--out", str(tmp_path / "o1")])
    assert code == 3
    capsys.readouterr()
    code = main(base + ["--allow-orphans", "--out", str(tmp_path / "o2")])
    assert code == 0
