"""Selective naive Bayes with per-variable weights.

Training prepares every column of the flat table, drops uninformative
variables (importance 0), then selects a subset and learns a weight in
[0, 1] per variable by minimizing one global coding length::

    ln(F+1) + ln C(F, K)             # which K of the F candidates are in
    + sum_selected (partition prior + construction cost)
    + NLL(train targets | weighted naive Bayes)

Selection runs forward/backward sweeps with unit weights; weights are then
refined by cyclic coordinate descent over the grid {0, 1/16, ..., 1},
where picking 0 deselects the variable (its selection and preparation
terms leave the cost with it).  Every accepted step strictly decreases
the total, so the procedure terminates and is fully deterministic.

Prediction: score(c) = class log-prior + sum_j w_j ln P(part_j(x) | c),
normalized by log-sum-exp.  Conditional probabilities are smoothed as
(n_pc + 1/P) / (n_c + 1) with P the variable's part count, which keeps
each per-class distribution exactly normalized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import coding
from .dataset import CategoricalColumn, Cell, Column, NumericColumn
from .errors import DataError, InvalidArgument
from .features import FeatureSet, FlatTable
from .preparation import (
    GROUPS,
    INTERVALS,
    PartitionModel,
    PreparedVariable,
    model_from_json_dict,
    prepare_columns,
)

MODEL_FORMAT = "snb-1"

WEIGHT_GRID = np.linspace(0.0, 1.0, 17)

_MIN_GAIN = 1e-6  # nats; convergence threshold for weight refinement
_STEP_EPS = 1e-9


@dataclass
class SelectionCost:
    """The three-way decomposition of the classifier's coding length."""

    selection_nats: float
    preparation_nats: float
    likelihood_nats: float

    @property
    def total_nats(self) -> float:
        return self.selection_nats + self.preparation_nats + self.likelihood_nats


@dataclass
class SnbVariable:
    name: str
    partition: PartitionModel
    weight: float
    level: float
    construction_nats: float
    constructed: bool
    log_cond: np.ndarray  # (parts, classes) ln P(part | class)
    part_frequencies: np.ndarray  # (parts,) training marginals

    def part_index_cell(self, cell: Cell) -> int:
        return self.partition.part_index_cell(cell)

    def part_index_column(self, column: Column) -> np.ndarray:
        if self.partition.kind == INTERVALS:
            if not isinstance(column, NumericColumn):
                raise DataError(f"variable {self.name!r} expects numerical values")
            return self.partition.part_index_numeric(column.values)
        if not isinstance(column, CategoricalColumn):
            raise DataError(f"variable {self.name!r} expects categorical values")
        cells = [
            None if column.codes[i] < 0 else column.categories[column.codes[i]]
            for i in range(len(column))
        ]
        return self.partition.part_index_categorical(cells)


@dataclass
class SnbModel:
    classes: list[str]
    class_prior_log: np.ndarray
    target: str | None
    variables: list[SnbVariable]
    n_train: int = 0
    considered: int = 0
    cost: SelectionCost | None = None
    feature_meta: dict = field(default_factory=dict)
    fit_trace: list[float] = field(default_factory=list, repr=False)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def active_variables(self) -> list[SnbVariable]:
        return [v for v in self.variables if v.weight > 0.0]

    def variable(self, name: str) -> SnbVariable:
        for v in self.variables:
            if v.name == name:
                return v
        raise InvalidArgument(f"unknown variable {name!r}")


def _smoothed_log_cond(counts: np.ndarray, class_totals: np.ndarray) -> np.ndarray:
    p = counts.shape[0]
    return np.log((counts + 1.0 / p) / (class_totals + 1.0)[None, :])


def _log_softmax(scores: np.ndarray) -> np.ndarray:
    m = scores.max(axis=-1, keepdims=True)
    return scores - (m + np.log(np.exp(scores - m).sum(axis=-1, keepdims=True)))


def _nll(scores: np.ndarray, y: np.ndarray) -> float:
    ls = _log_softmax(scores)
    return float(-ls[np.arange(len(y)), y].sum())


@dataclass
class _Candidate:
    name: str
    prepared: PreparedVariable
    construction_nats: float
    constructed: bool
    part_idx: np.ndarray
    log_cond: np.ndarray
    part_freq: np.ndarray

    @property
    def prep_nats(self) -> float:
        return self.prepared.model.prior_nats + self.construction_nats


def fit(
    flat: FlatTable,
    feature_set: FeatureSet | None = None,
    workers: int = 1,
    prepared: list[PreparedVariable] | None = None,
) -> SnbModel:
    """Train on a flat table whose target codes are already attached.

    ``prepared`` lets callers reuse an existing per-column preparation
    (it must cover exactly ``flat.names`` in order).
    """
    if flat.y is None:
        raise InvalidArgument("flat table has no target")
    if flat.n_rows == 0 or not flat.names:
        raise DataError("empty training table")
    y = flat.y
    if np.any(y < 0):
        raise DataError("missing target value in training data")
    labels = flat.class_labels
    j = len(labels)
    present = np.unique(y)
    if len(present) < 2:
        raise DataError("training target has a single class")
    n = flat.n_rows
    class_totals = np.bincount(y, minlength=j).astype(np.int64)
    prior_log = np.log(class_totals / n)

    construction = {f.name: f.prior_nats for f in (feature_set.features if feature_set else [])}

    if prepared is None:
        named_columns = [(name, flat.columns[name]) for name in flat.names]
        prepared = prepare_columns(named_columns, y, labels, workers=workers)
    elif [pv.name for pv in prepared] != list(flat.names):
        raise InvalidArgument("prepared variables must match the flat table columns")

    candidates: list[_Candidate] = []
    for pv in prepared:
        if pv.level <= 0.0:
            continue
        counts = pv.model.counts_matrix()
        log_cond = _smoothed_log_cond(counts, class_totals)
        freq = counts.sum(axis=1) / n
        var = _Candidate(
            name=pv.name,
            prepared=pv,
            construction_nats=construction.get(pv.name, 0.0),
            constructed=pv.name in construction,
            part_idx=_assign_column(pv.model, flat.columns[pv.name]),
            log_cond=log_cond,
            part_freq=freq,
        )
        candidates.append(var)
    candidates.sort(key=lambda c: (-c.prepared.level, c.name))
    f_count = len(candidates)

    def selection_nats(k: int) -> float:
        return math.log(f_count + 1) + coding.log_binomial(f_count, k)

    scores = np.broadcast_to(prior_log, (n, j)).copy()
    weights = np.zeros(f_count)
    prep_sum = 0.0
    k_sel = 0
    nll = _nll(scores, y)
    total = selection_nats(0) + prep_sum + nll
    trace = [total]

    contrib = [c.log_cond[c.part_idx] for c in candidates]  # (n, j) each

    # Forward/backward selection at unit weights.
    for _ in range(f_count + 2):
        changed = False
        for ci, cand in enumerate(candidates):
            if weights[ci] > 0.0:
                continue
            trial = scores + contrib[ci]
            t = selection_nats(k_sel + 1) + prep_sum + cand.prep_nats + _nll(trial, y)
            if t < total - _STEP_EPS:
                scores = trial
                weights[ci] = 1.0
                prep_sum += cand.prep_nats
                k_sel += 1
                total = t
                trace.append(t)
                changed = True
        for ci, cand in enumerate(candidates):
            if weights[ci] == 0.0:
                continue
            trial = scores - weights[ci] * contrib[ci]
            t = selection_nats(k_sel - 1) + prep_sum - cand.prep_nats + _nll(trial, y)
            if t < total - _STEP_EPS:
                scores = trial
                weights[ci] = 0.0
                prep_sum -= cand.prep_nats
                k_sel -= 1
                total = t
                trace.append(t)
                changed = True
        if not changed:
            break

    # Cyclic per-variable weight refinement over the grid; weight 0 means
    # the variable leaves the selection entirely.
    for _ in range(500):
        best_cycle_gain = 0.0
        for ci, cand in enumerate(candidates):
            w = weights[ci]
            without = scores - w * contrib[ci] if w > 0 else scores
            in_model = w > 0
            base_sel = k_sel - 1 if in_model else k_sel
            base_prep = prep_sum - cand.prep_nats if in_model else prep_sum
            best_w, best_t = w, total
            for g in WEIGHT_GRID:
                if g == 0.0:
                    t = selection_nats(base_sel) + base_prep + _nll(without, y)
                else:
                    t = (
                        selection_nats(base_sel + 1)
                        + base_prep
                        + cand.prep_nats
                        + _nll(without + g * contrib[ci], y)
                    )
                if t < best_t - _STEP_EPS:
                    best_w, best_t = float(g), t
            if best_w != w:
                gain = total - best_t
                scores = without if best_w == 0.0 else without + best_w * contrib[ci]
                if (best_w > 0) != in_model:
                    k_sel += 1 if best_w > 0 else -1
                    prep_sum += cand.prep_nats if best_w > 0 else -cand.prep_nats
                weights[ci] = best_w
                total = best_t
                trace.append(best_t)
                best_cycle_gain = max(best_cycle_gain, gain)
        if best_cycle_gain <= _MIN_GAIN:
            break

    final_nll = _nll(scores, y)
    cost = SelectionCost(
        selection_nats=selection_nats(k_sel),
        preparation_nats=prep_sum,
        likelihood_nats=final_nll,
    )

    variables = [
        SnbVariable(
            name=cand.name,
            partition=cand.prepared.model,
            weight=float(weights[ci]),
            level=cand.prepared.level,
            construction_nats=cand.construction_nats,
            constructed=cand.constructed,
            log_cond=cand.log_cond,
            part_frequencies=cand.part_freq,
        )
        for ci, cand in enumerate(candidates)
        if weights[ci] > 0.0
    ]
    variables.sort(key=lambda v: v.name)

    meta = {}
    if feature_set is not None:
        meta = {
            "requested_features": feature_set.requested,
            "sampled_features": len(feature_set.features),
            "seed": feature_set.seed,
            "max_depth": feature_set.max_depth,
        }
    model = SnbModel(
        classes=list(labels),
        class_prior_log=prior_log,
        target=flat.target_name,
        variables=variables,
        n_train=n,
        considered=f_count,
        cost=cost,
        feature_meta=meta,
        fit_trace=trace,
    )
    return model


def _assign_column(model: PartitionModel, column: Column) -> np.ndarray:
    if model.kind == INTERVALS:
        if not isinstance(column, NumericColumn):
            raise DataError(f"variable {model.variable!r} expects numerical values")
        return model.part_index_numeric(column.values)
    if not isinstance(column, CategoricalColumn):
        raise DataError(f"variable {model.variable!r} expects categorical values")
    cells = [
        None if column.codes[i] < 0 else column.categories[column.codes[i]]
        for i in range(len(column))
    ]
    return model.part_index_categorical(cells)


# -- prediction ----------------------------------------------------------------


def score_row(model: SnbModel, row: dict[str, Cell]) -> np.ndarray:
    """Unnormalized per-class log scores for one instance."""
    scores = model.class_prior_log.copy()
    for var in model.variables:
        if var.weight <= 0.0:
            continue
        if var.name not in row:
            raise InvalidArgument(f"row lacks variable {var.name!r}")
        part = var.part_index_cell(row[var.name])
        scores = scores + var.weight * var.log_cond[part]
    return scores


def predict_log_proba(model: SnbModel, row: dict[str, Cell]) -> np.ndarray:
    """Normalized per-class log probabilities for one instance."""
    return _log_softmax(score_row(model, row))


def predict(model: SnbModel, row: dict[str, Cell]) -> str:
    log_proba = predict_log_proba(model, row)
    return model.classes[int(np.argmax(log_proba))]


def scores_table(model: SnbModel, flat: FlatTable) -> np.ndarray:
    """Unnormalized (n, J) log scores for a whole flat table."""
    n = flat.n_rows
    scores = np.broadcast_to(model.class_prior_log, (n, model.n_classes)).copy()
    for var in model.variables:
        if var.weight <= 0.0:
            continue
        if var.name not in flat.columns:
            raise InvalidArgument(f"flat table lacks variable {var.name!r}")
        idx = var.part_index_column(flat.columns[var.name])
        scores += var.weight * var.log_cond[idx]
    return scores


def predict_log_proba_table(model: SnbModel, flat: FlatTable) -> np.ndarray:
    return _log_softmax(scores_table(model, flat))


def predict_table(model: SnbModel, flat: FlatTable) -> list[str]:
    lp = predict_log_proba_table(model, flat)
    return [model.classes[int(i)] for i in np.argmax(lp, axis=1)]


# -- serialization ---------------------------------------------------------------


def model_to_json_dict(model: SnbModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "target": model.target,
        "classes": list(model.classes),
        "class_prior_log": [float(x) for x in model.class_prior_log],
        "n_train": model.n_train,
        "selection": {
            "considered": model.considered,
            "selected": len(model.active_variables()),
            "selection_nats": model.cost.selection_nats if model.cost else 0.0,
            "preparation_nats": model.cost.preparation_nats if model.cost else 0.0,
            "likelihood_nats": model.cost.likelihood_nats if model.cost else 0.0,
            "total_nats": model.cost.total_nats if model.cost else 0.0,
        },
        "feature_meta": model.feature_meta,
        "variables": [
            {
                "name": v.name,
                "constructed": v.constructed,
                "weight": v.weight,
                "level": v.level,
                "construction_nats": v.construction_nats,
                "part_frequencies": [float(x) for x in v.part_frequencies],
                "log_cond": [[float(x) for x in row] for row in v.log_cond],
                "partition": v.partition.to_json_dict(),
            }
            for v in model.variables
        ],
    }


def save_model(model: SnbModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_json_dict(model), indent=1) + "\n", encoding="utf-8"
    )


def model_from_json(doc: dict | str | Path) -> SnbModel:
    if isinstance(doc, Path):
        doc = json.loads(doc.read_text(encoding="utf-8"))
    elif isinstance(doc, str):
        doc = json.loads(doc)
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"unsupported model format {doc.get('format')!r}")
    variables = [
        SnbVariable(
            name=v["name"],
            partition=model_from_json_dict(v["partition"]),
            weight=float(v["weight"]),
            level=float(v["level"]),
            construction_nats=float(v["construction_nats"]),
            constructed=bool(v["constructed"]),
            log_cond=np.asarray(v["log_cond"], dtype=np.float64),
            part_frequencies=np.asarray(v["part_frequencies"], dtype=np.float64),
        )
        for v in doc["variables"]
    ]
    sel = doc.get("selection", {})
    cost = SelectionCost(
        selection_nats=float(sel.get("selection_nats", 0.0)),
        preparation_nats=float(sel.get("preparation_nats", 0.0)),
        likelihood_nats=float(sel.get("likelihood_nats", 0.0)),
    )
    return SnbModel(
        classes=list(doc["classes"]),
        class_prior_log=np.asarray(doc["class_prior_log"], dtype=np.float64),
        target=doc.get("target"),
        variables=variables,
        n_train=int(doc.get("n_train", 0)),
        considered=int(sel.get("considered", 0)),
        cost=cost,
        feature_meta=doc.get("feature_meta", {}),
    )
