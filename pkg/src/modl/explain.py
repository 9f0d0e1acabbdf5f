"""Per-instance explanations of the weighted naive Bayes score.

The classifier's per-class log score is additive across variables, so the
Shapley value of variable j for class c collapses to a closed form: its
observed contribution minus its training-marginal expectation::

    phi_j(x, c) = w_j * ( ln P(part_j(x) | c) - sum_p q_jp ln P(p | c) )

with q_jp the training frequency of part p.  The per-class baseline is
the class log-prior plus every variable's expected contribution, which
makes the efficiency identity  sum_j phi_j = score - baseline  exact.

Reinforcements are ranked univariate part changes: for a class of
interest, each active variable is swapped through its alternative parts
and the best strictly-improving switch per variable is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import SnbModel, predict_log_proba, score_row
from .dataset import Cell
from .errors import InvalidArgument


@dataclass
class AttributionEntry:
    variable: str
    part_label: str
    value: float


@dataclass
class Attribution:
    """Shapley-style attribution of one instance's score for one class."""

    class_label: str
    posterior: float
    entries: list[AttributionEntry]  # sorted by decreasing value
    score: float
    baseline: float


@dataclass
class Suggestion:
    variable: str
    current_part: str
    proposed_part: str
    new_posterior: float


@dataclass
class Reinforcement:
    """Ranked single-variable changes that raise a class's posterior."""

    class_label: str
    current_posterior: float
    suggestions: list[Suggestion]  # sorted by decreasing new posterior


def baseline_scores(model: SnbModel) -> np.ndarray:
    """Per-class expected log score under the training part marginals."""
    base = model.class_prior_log.copy()
    for var in model.active_variables():
        base = base + var.weight * (var.part_frequencies @ var.log_cond)
    return base


def shapley_values(model: SnbModel, row: dict[str, Cell]) -> list[Attribution]:
    """One Attribution per class, entries sorted by decreasing value."""
    active = model.active_variables()
    scores = score_row(model, row)
    log_proba = predict_log_proba(model, row)
    base = baseline_scores(model)
    out: list[Attribution] = []
    for ci, label in enumerate(model.classes):
        entries = []
        for var in active:
            part = var.part_index_cell(row[var.name])
            expected = float(var.part_frequencies @ var.log_cond[:, ci])
            phi = var.weight * (float(var.log_cond[part, ci]) - expected)
            entries.append(
                AttributionEntry(var.name, var.partition.parts[part].label(var.partition.kind), phi)
            )
        entries.sort(key=lambda e: (-e.value, e.variable))
        out.append(
            Attribution(
                class_label=label,
                posterior=float(np.exp(log_proba[ci])),
                entries=entries,
                score=float(scores[ci]),
                baseline=float(base[ci]),
            )
        )
    return out


def reinforce(model: SnbModel, row: dict[str, Cell], target_class: str,
              k: int) -> Reinforcement:
    """Best part switch per variable toward ``target_class``, top-k overall."""
    if target_class not in model.classes:
        raise InvalidArgument(f"unknown class {target_class!r}")
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    ci = model.classes.index(target_class)
    scores = score_row(model, row)
    current_posterior = float(np.exp(_log_softmax_1d(scores)[ci]))

    suggestions: list[Suggestion] = []
    for var in model.active_variables():
        part = var.part_index_cell(row[var.name])
        best: Suggestion | None = None
        for alt in range(len(var.partition.parts)):
            if alt == part:
                continue
            delta = var.weight * (var.log_cond[alt] - var.log_cond[part])
            posterior = float(np.exp(_log_softmax_1d(scores + delta)[ci]))
            if posterior > current_posterior + 1e-15 and (
                best is None or posterior > best.new_posterior
            ):
                best = Suggestion(
                    variable=var.name,
                    current_part=var.partition.parts[part].label(var.partition.kind),
                    proposed_part=var.partition.parts[alt].label(var.partition.kind),
                    new_posterior=posterior,
                )
        if best is not None:
            suggestions.append(best)
    suggestions.sort(key=lambda s: (-s.new_posterior, s.variable))
    return Reinforcement(
        class_label=target_class,
        current_posterior=current_posterior,
        suggestions=suggestions[:k],
    )


def _log_softmax_1d(scores: np.ndarray) -> np.ndarray:
    m = scores.max()
    return scores - (m + np.log(np.exp(scores - m).sum()))
