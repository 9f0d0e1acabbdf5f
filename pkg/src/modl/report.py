"""Evaluation metrics and the JSON analysis report.

The report is one self-contained JSON document with a preparation panel
(per-variable partitions and importance, sorted by decreasing Level), a
modeling panel (selected variables, weights, costs), and an evaluation
panel (train/test accuracy, AUC, confusion matrix).  Wall-clock timings
are deliberately written to a separate file so that reports stay
byte-identical across worker counts and repeated runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from . import __version__, coding
from .classifier import SnbModel, predict_log_proba_table
from .errors import DataError, InvalidArgument
from .features import FlatTable
from .preparation import PreparedVariable


class UndefinedMetricError(InvalidArgument):
    """The metric is undefined for this input (not a neutral 0.5)."""


def auc(scored: list[tuple[float, bool]]) -> float:
    """Rank-statistic AUC with midrank tie handling.

    ``scored`` pairs a score with a positive/negative flag.  Raises
    UndefinedMetricError when either class is absent.
    """
    if not scored:
        raise UndefinedMetricError("auc needs at least one scored instance")
    scores = np.asarray([s for s, _ in scored], dtype=np.float64)
    positive = np.asarray([bool(p) for _, p in scored])
    n_pos = int(positive.sum())
    n_neg = len(scored) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("auc undefined without both classes")
    ranks = rankdata(scores)  # average method = midranks
    rank_sum = float(ranks[positive].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


@dataclass
class EvaluationResult:
    role: str  # "train" | "test"
    instances: int
    accuracy: float
    auc: float | None  # one-vs-rest macro average; None when undefined
    confusion: np.ndarray  # (J, J); rows = true class, columns = predicted

    def to_json_dict(self) -> dict:
        return {
            "role": self.role,
            "instances": self.instances,
            "accuracy": self.accuracy,
            "auc": self.auc,
            "confusion": [[int(c) for c in row] for row in self.confusion],
        }


def evaluate(model: SnbModel, flat: FlatTable, role: str = "test") -> EvaluationResult:
    """Accuracy, macro one-vs-rest AUC, and confusion counts on a table."""
    if flat.n_rows == 0:
        raise DataError("cannot evaluate an empty table")
    if flat.y is None:
        raise DataError("evaluation table has no target")
    class_index = {c: i for i, c in enumerate(model.classes)}
    try:
        remap = np.asarray(
            [class_index[label] for label in flat.class_labels], dtype=np.int64
        )
    except KeyError as exc:
        raise DataError(f"target label {exc.args[0]!r} unseen at training time") from exc
    if np.any(flat.y < 0):
        raise DataError("missing target value in evaluation data")
    y = remap[flat.y]

    log_proba = predict_log_proba_table(model, flat)
    proba = np.exp(log_proba)
    predicted = np.argmax(log_proba, axis=1)

    j = model.n_classes
    confusion = np.zeros((j, j), dtype=np.int64)
    np.add.at(confusion, (y, predicted), 1)
    accuracy = float(np.trace(confusion) / flat.n_rows)

    aucs = []
    for ci in range(j):
        positive = y == ci
        if positive.any() and (~positive).any():
            aucs.append(
                auc(list(zip(proba[:, ci].tolist(), positive.tolist())))
            )
    macro_auc = float(np.mean(aucs)) if aucs else None
    return EvaluationResult(role, flat.n_rows, accuracy, macro_auc, confusion)


@dataclass
class AnalysisReport:
    """Everything a run produced, ready to serialize as one JSON file."""

    schema_summary: dict
    preparation: list[dict]  # per variable, sorted by decreasing level
    modeling: dict
    evaluation: dict[str, dict]
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "tool": {"name": "modl", "version": __version__, "format": "report-1"},
            "metadata": self.metadata,
            "schema": self.schema_summary,
            "preparation": self.preparation,
            "modeling": self.modeling,
            "evaluation": self.evaluation,
        }


def preparation_entry(pv: PreparedVariable) -> dict:
    model = pv.model
    return {
        "name": pv.name,
        "kind": model.kind,
        "level": pv.level,
        "parts": [p.label(model.kind) for p in model.parts],
        "part_counts": [[int(c) for c in p.counts] for p in model.parts],
        "prior_nats": model.prior_nats,
        "likelihood_nats": model.likelihood_nats,
        "null_nats": pv.null_nats,
    }


def build_report(
    schema_summary: dict,
    prepared: list[PreparedVariable],
    model: SnbModel,
    evaluations: list[EvaluationResult],
    metadata: dict | None = None,
) -> AnalysisReport:
    entries = [preparation_entry(pv) for pv in prepared]
    entries.sort(key=lambda e: (-e["level"], e["name"]))
    modeling = {
        "classes": list(model.classes),
        "class_prior_log": [float(x) for x in model.class_prior_log],
        "considered": model.considered,
        "selected": len(model.active_variables()),
        "selection_nats": model.cost.selection_nats if model.cost else 0.0,
        "preparation_nats": model.cost.preparation_nats if model.cost else 0.0,
        "likelihood_nats": model.cost.likelihood_nats if model.cost else 0.0,
        "total_nats": model.cost.total_nats if model.cost else 0.0,
        "total_bits": coding.nats_to_bits(model.cost.total_nats) if model.cost else 0.0,
        "variables": [
            {
                "name": v.name,
                "weight": v.weight,
                "level": v.level,
                "constructed": v.constructed,
                "construction_nats": v.construction_nats,
            }
            for v in sorted(model.variables, key=lambda v: (-v.weight, v.name))
        ],
    }
    return AnalysisReport(
        schema_summary=schema_summary,
        preparation=entries,
        modeling=modeling,
        evaluation={e.role: e.to_json_dict() for e in evaluations},
        metadata=metadata or {},
    )


def write_report(report: AnalysisReport, path: str | Path) -> None:
    """Serialize with stable key order; reloading loses nothing."""
    text = json.dumps(report.to_json_dict(), indent=1, sort_keys=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
