import json
import math

import numpy as np
import pytest

from modl import classifier as clf
from modl.dataset import CategoricalColumn, NumericColumn
from modl.errors import DataError, InvalidArgument
from modl.features import FlatTable
from modl.preparation import GROUPS, INTERVALS, Part, PartitionModel


def make_flat(columns, y, labels, feature_names=()):
    names = list(columns)
    return FlatTable(
        names=names,
        columns=columns,
        class_labels=labels,
        y=np.asarray(y, dtype=np.int64),
        target_name="T",
        keys=[(str(i),) for i in range(len(y))],
        feature_names=list(feature_names),
    )


def binary_variable_model(p1_c1=0.9, p1_c2=0.1, weight=1.0, priors=(0.5, 0.5)):
    """Hand-built model: one grouped variable with parts p1/p2."""
    partition = PartitionModel(
        "x",
        GROUPS,
        [
            Part(np.array([9, 1]), values=("p1",)),
            Part(np.array([1, 9]), values=("p2",), is_catchall=True),
        ],
        ["c1", "c2"],
        20,
        v_distinct=2,
    )
    log_cond = np.log(np.array([[p1_c1, p1_c2], [1 - p1_c1, 1 - p1_c2]]))
    var = clf.SnbVariable(
        name="x",
        partition=partition,
        weight=weight,
        level=0.5,
        construction_nats=0.0,
        constructed=False,
        log_cond=log_cond,
        part_frequencies=np.array([0.5, 0.5]),
    )
    return clf.SnbModel(
        classes=["c1", "c2"],
        class_prior_log=np.log(np.asarray(priors)),
        target="T",
        variables=[var],
        n_train=20,
        considered=1,
        cost=clf.SelectionCost(0.0, 0.0, 0.0),
    )


def test_predict_zero_variable_model_returns_priors():
    model = clf.SnbModel(
        classes=["a", "b"],
        class_prior_log=np.log([0.7, 0.3]),
        target="T",
        variables=[],
        cost=clf.SelectionCost(0.0, 0.0, 0.0),
    )
    lp = clf.predict_log_proba(model, {})
    assert np.exp(lp) == pytest.approx([0.7, 0.3], abs=1e-12)


def test_predict_single_binary_variable_by_hand():
    model = binary_variable_model()
    lp = clf.predict_log_proba(model, {"x": "p1"})
    assert np.exp(lp) == pytest.approx([0.9, 0.1], abs=1e-12)


def test_predict_half_weight_square_root():
    model = binary_variable_model(weight=0.5)
    lp = clf.predict_log_proba(model, {"x": "p1"})
    r1, r2 = math.sqrt(0.9), math.sqrt(0.1)
    assert np.exp(lp) == pytest.approx([r1 / (r1 + r2), r2 / (r1 + r2)], abs=1e-12)
    assert np.exp(lp)[0] == pytest.approx(0.75, abs=0.01)


def test_predict_tie_breaks_to_first_class():
    model = binary_variable_model(p1_c1=0.5, p1_c2=0.5)
    assert clf.predict(model, {"x": "p1"}) == "c1"


def test_predict_argmax_invariant_to_common_shift():
    model = binary_variable_model()
    row = {"x": "p2"}
    base = clf.score_row(model, row)
    shifted = base + 12.3
    assert np.argmax(base) == np.argmax(shifted)
    assert clf.predict(model, row) == "c2"


def test_predict_unknown_variable_errors():
    model = binary_variable_model()
    with pytest.raises(InvalidArgument, match="x"):
        clf.predict_log_proba(model, {"other": "p1"})


def test_posterior_normalization_random_rows():
    rng = np.random.default_rng(3)
    model = binary_variable_model(weight=0.6875)
    for _ in range(50):
        row = {"x": "p1" if rng.random() < 0.5 else "p2"}
        lp = clf.predict_log_proba(model, row)
        assert np.exp(lp).sum() == pytest.approx(1.0, abs=1e-9)


def planted_flat(n=500, noise_vars=9, seed=0, labels=("a", "b")):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n)
    columns = {"signal": CategoricalColumn(y.astype(np.int32), ["zero", "one"])}
    for i in range(noise_vars):
        columns[f"noise{i}"] = NumericColumn(rng.normal(size=n))
    return make_flat(columns, y, list(labels))


def test_fit_planted_signal_selected_and_accurate():
    flat = planted_flat()
    model = clf.fit(flat)
    active = {v.name for v in model.active_variables()}
    assert "signal" in active
    sig = model.variable("signal")
    assert sig.weight > 0
    predictions = clf.predict_table(model, flat)
    accuracy = np.mean([p == flat.class_labels[c] for p, c in zip(predictions, flat.y)])
    assert accuracy >= 0.99


def test_fit_random_labels_selects_nothing():
    zero_selected = 0
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        y = rng.integers(0, 2, size=500)
        columns = {f"n{i}": NumericColumn(rng.normal(size=500)) for i in range(10)}
        flat = make_flat(columns, y, ["a", "b"])
        model = clf.fit(flat)
        if not model.active_variables():
            zero_selected += 1
    assert zero_selected >= 19  # >= 95% of 20 seeds


def test_fit_duplicated_variable_shares_weight():
    flat = planted_flat(n=500, noise_vars=0)
    dup = make_flat(
        {
            "signal": flat.columns["signal"],
            "signal_copy": CategoricalColumn(
                flat.columns["signal"].codes.copy(), list(flat.columns["signal"].categories)
            ),
        },
        flat.y,
        flat.class_labels,
    )
    model = clf.fit(dup)
    total_weight = sum(v.weight for v in model.variables)
    assert total_weight <= 1.0 + 1.0 / 16.0 + 1e-9


def test_fit_cost_trace_monotone():
    flat = planted_flat(n=300, noise_vars=5, seed=7)
    model = clf.fit(flat)
    trace = model.fit_trace
    assert len(trace) >= 2
    assert all(b < a + 1e-12 for a, b in zip(trace, trace[1:]))


def test_fit_errors():
    flat = planted_flat(n=50)
    flat.y[:] = 0
    with pytest.raises(DataError, match="single class"):
        clf.fit(flat)


def test_fit_deterministic_serialization(tmp_path):
    flat = planted_flat(n=200, noise_vars=4, seed=11)
    m1 = clf.fit(flat)
    m2 = clf.fit(flat)
    p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
    clf.save_model(m1, p1)
    clf.save_model(m2, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_model_json_round_trip(tmp_path):
    flat = planted_flat(n=200, noise_vars=3, seed=13)
    model = clf.fit(flat)
    path = tmp_path / "model.json"
    clf.save_model(model, path)
    again = clf.model_from_json(path)
    assert again.classes == model.classes
    assert [v.name for v in again.variables] == [v.name for v in model.variables]
    lp1 = clf.predict_log_proba_table(model, flat)
    lp2 = clf.predict_log_proba_table(again, flat)
    assert np.array_equal(lp1, lp2)


def test_zero_weight_variables_removable():
    model = binary_variable_model()
    dummy_partition = PartitionModel(
        "z", GROUPS,
        [Part(np.array([5, 5]), values=("q1",)), Part(np.array([5, 5]), values=("q2",), is_catchall=True)],
        ["c1", "c2"], 20, v_distinct=2,
    )
    zero_var = clf.SnbVariable(
        name="z", partition=dummy_partition, weight=0.0, level=0.1,
        construction_nats=0.0, constructed=False,
        log_cond=np.log(np.full((2, 2), 0.5)), part_frequencies=np.array([0.5, 0.5]),
    )
    model.variables.append(zero_var)
    with_zero = clf.predict_log_proba(model, {"x": "p1", "z": "q1"})
    model.variables.pop()
    without = clf.predict_log_proba(model, {"x": "p1"})
    assert np.array_equal(with_zero, without)


def test_batch_predict_matches_rowwise():
    flat = planted_flat(n=80, noise_vars=2, seed=17)
    model = clf.fit(flat)
    batch = clf.predict_log_proba_table(model, flat)
    for row in range(0, 80, 7):
        single = clf.predict_log_proba(model, flat.row_cells(row))
        assert batch[row] == pytest.approx(single, abs=1e-12)
