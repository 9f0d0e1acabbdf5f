"""The fit/predict wrapper over the CLI."""

from __future__ import annotations

import csv
import json
import subprocess
import sys
import tempfile
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataFormatError, InternalError, NotFittedError, UsageError
from .spec import MAIN_TABLE_NAME, spec_to_schema

_EXIT_ERRORS = {2: UsageError, 3: DataFormatError, 4: InternalError}


def _run_cli(args: list[str]) -> None:
    cmd = [sys.executable, "-m", "modl", *args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode == 0:
        return
    exc = _EXIT_ERRORS.get(proc.returncode, InternalError)
    message = proc.stderr.strip().splitlines()[-1] if proc.stderr.strip() else ""
    raise exc(f"modl exited with {proc.returncode}: {message}")


def _write_tables(
    frames: Mapping[str, pd.DataFrame],
    schema: dict,
    directory: Path,
    main_extra: pd.DataFrame | None = None,
) -> list[str]:
    """Write one CSV per table (children sorted by key); returns --data args."""
    keys_by_path = {}
    for table in schema["tables"]:
        keys_by_path[table["name"]] = table["key"]
    data_args = []
    for path, frame in frames.items():
        name = MAIN_TABLE_NAME if path == MAIN_TABLE_NAME else path.rpartition("/")[2]
        out = directory / f"{name}.csv"
        if path == MAIN_TABLE_NAME:
            table = frame if main_extra is None else pd.concat([frame, main_extra], axis=1)
        else:
            table = frame.sort_values(keys_by_path[name], kind="stable")
        table.to_csv(out, index=False)
        data_args += ["--data", f"{path if path != MAIN_TABLE_NAME else name}={out}"]
    return data_args


class MultiTableClassifier:
    """Multi-table classifier with automatic aggregate construction.

    Parameters mirror the scripting interface: ``n_features`` counts the
    aggregates to construct, ``max_cores`` sizes the worker pool, and
    ``n_trees`` is accepted for compatibility but must stay 0 (tree
    variables are not part of this pipeline).
    """

    def __init__(
        self,
        n_trees: int = 0,
        n_features: int = 100,
        max_cores: int = 1,
        seed: int = 1,
        max_depth: int = 2,
        train_fraction: float = 0.7,
        work_dir: str | Path | None = None,
    ):
        if n_trees != 0:
            raise UsageError("n_trees must be 0: tree variables are unsupported")
        self.n_trees = n_trees
        self.n_features = n_features
        self.max_cores = max_cores
        self.seed = seed
        self.max_depth = max_depth
        self.train_fraction = train_fraction
        self.work_dir = work_dir
        self._fitted: dict[str, Any] | None = None

    # -- sklearn-style surface -------------------------------------------

    def get_params(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "n_features": self.n_features,
            "max_cores": self.max_cores,
            "seed": self.seed,
            "max_depth": self.max_depth,
            "train_fraction": self.train_fraction,
            "work_dir": self.work_dir,
        }

    def set_params(self, **params) -> "MultiTableClassifier":
        for key, value in params.items():
            if not hasattr(self, key):
                raise UsageError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X: Mapping[str, Any], y: Sequence) -> "MultiTableClassifier":
        y = pd.Series(y)
        target = y.name if y.name else "Target"
        schema, frames = spec_to_schema(X, target)
        main_frame = frames[MAIN_TABLE_NAME]
        if len(y) != len(main_frame):
            raise UsageError(
                f"target length {len(y)} != main table rows {len(main_frame)}"
            )
        if y.isna().any():
            raise UsageError("target contains missing values")

        base = Path(self.work_dir) if self.work_dir else Path(tempfile.mkdtemp(prefix="modl_skl_"))
        base.mkdir(parents=True, exist_ok=True)
        train_dir = base / "train"
        train_dir.mkdir(exist_ok=True)
        schema_path = train_dir / "schema.json"
        schema_path.write_text(json.dumps(schema, indent=2), encoding="utf-8")
        target_col = pd.DataFrame({target: y.astype(str).values}, index=main_frame.index)
        data_args = _write_tables(frames, schema, train_dir, main_extra=target_col)
        out_dir = train_dir / "out"
        _run_cli(
            [
                "train",
                "--schema", str(schema_path),
                *data_args,
                "--target", target,
                "--n-features", str(self.n_features),
                "--max-depth", str(self.max_depth),
                "--train-fraction", str(self.train_fraction),
                "--seed", str(self.seed),
                "--threads", str(self.max_cores),
                "--out", str(out_dir),
            ]
        )
        model_doc = json.loads((out_dir / "model.json").read_text(encoding="utf-8"))
        self._fitted = {
            "target": target,
            "schema": schema,
            "schema_path": schema_path,
            "base": base,
            "model_path": out_dir / "model.json",
            "report_path": out_dir / "report.json",
            "classes": model_doc["classes"],
            "deploys": 0,
        }
        return self

    @property
    def classes_(self) -> np.ndarray:
        self._check_fitted()
        return np.asarray(self._fitted["classes"])

    @property
    def work_dir_(self) -> Path:
        self._check_fitted()
        return self._fitted["base"]

    @property
    def model_path_(self) -> Path:
        self._check_fitted()
        return self._fitted["model_path"]

    @property
    def report_path_(self) -> Path:
        self._check_fitted()
        return self._fitted["report_path"]

    def report_(self) -> dict:
        self._check_fitted()
        return json.loads(self._fitted["report_path"].read_text(encoding="utf-8"))

    def _check_fitted(self) -> None:
        if self._fitted is None:
            raise NotFittedError("call fit before predict")

    def _deploy(self, X: Mapping[str, Any]) -> Path:
        """Run the CLI on a spec and return the predictions CSV path."""
        self._check_fitted()
        state = self._fitted
        schema, frames = spec_to_schema(X, state["target"])
        if schema != state["schema"]:
            raise UsageError("deployment spec does not match the fitted schema")
        state["deploys"] += 1
        deploy_dir = state["base"] / f"deploy{state['deploys']:03d}"
        deploy_dir.mkdir(exist_ok=True)
        data_args = _write_tables(frames, schema, deploy_dir)
        out_dir = deploy_dir / "out"
        _run_cli(
            [
                "predict",
                "--schema", str(state["schema_path"]),
                *data_args,
                "--model", str(state["model_path"]),
                "--threads", str(self.max_cores),
                "--out", str(out_dir),
            ]
        )
        return out_dir / "predictions.csv"

    def predict(self, X: Mapping[str, Any]) -> np.ndarray:
        """Predicted labels, aligned with the main table's row order."""
        path = self._deploy(X)
        target = self._fitted["target"]
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        return np.asarray([r[f"Predicted{target}"] for r in rows])

    def predict_proba(self, X: Mapping[str, Any]) -> np.ndarray:
        """Class-probability matrix; columns follow ``classes_`` order.

        Values are parsed from the CLI's CSV verbatim, never recomputed.
        """
        path = self._deploy(X)
        target = self._fitted["target"]
        classes = self._fitted["classes"]
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        return np.asarray(
            [[float(r[f"Prob{target}{c}"]) for c in classes] for r in rows]
        )
