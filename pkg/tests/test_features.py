import json
import math

import numpy as np
import pytest
from scipy import stats

from modl import features as feat
from modl.dataset import dataset_from_csv_texts
from modl.errors import InvalidArgument
from modl.schema import parse_schema

from test_schema_dataset import ACCIDENTS_SCHEMA, CSV_TEXTS


@pytest.fixture(scope="module")
def schema():
    return parse_schema(json.dumps(ACCIDENTS_SCHEMA))


@pytest.fixture(scope="module")
def dataset(schema):
    return dataset_from_csv_texts(schema, dict(CSV_TEXTS), target="Gravity")


def test_prior_count_vehicles(schema):
    # Both native and constructed variables are possible (ln 2); all nine
    # aggregates are applicable at the root; Count can aggregate both
    # child tables (ln 2).
    expr = feat.Aggregate("Count", ("Vehicles",), None)
    prior = feat.feature_prior_nats(expr, schema, target="Gravity")
    assert prior == pytest.approx(math.log(2) + math.log(9) + math.log(2), abs=1e-12)


def test_prior_native_column(schema):
    expr = feat.ColumnRef((), "Light")
    prior = feat.feature_prior_nats(expr, schema, target="Gravity")
    # Root natives: Light, Hour (the target is excluded).
    assert prior == pytest.approx(math.log(2) + math.log(2), abs=1e-12)


def test_prior_grows_with_depth(schema):
    shallow = feat.Aggregate(
        "Min", ("Vehicles",),
        feat.Aggregate("Min", ("Vehicles", "Users"),
                       feat.ColumnRef(("Vehicles", "Users"), "BirthYear")),
    )
    inner = feat.Aggregate("Count", ("Vehicles",), None)
    assert feat.feature_prior_nats(shallow, schema, target="Gravity") > (
        feat.feature_prior_nats(inner, schema, target="Gravity")
    )


def test_prior_rejects_invalid(schema):
    with pytest.raises(InvalidArgument):
        feat.feature_prior_nats(
            feat.Aggregate("Mean", ("Places",), feat.ColumnRef(("Places",), "RoadType")),
            schema,
            target="Gravity",
        )
    with pytest.raises(InvalidArgument):
        feat.feature_prior_nats(feat.ColumnRef((), "Gravity"), schema, target="Gravity")


def test_sample_zero_features(schema):
    fs = feat.sample_features(schema, 0, seed=1, target="Gravity")
    assert fs.features == []


def test_sample_exhausts_depth1_space():
    doc = {
        "root": "R",
        "tables": [
            {"name": "R", "key": ["Id"], "columns": [{"name": "T", "type": "Categorical"}]},
            {
                "name": "C",
                "parent": "R",
                "relation": "0n",
                "key": ["Id", "Sub"],
                "columns": [{"name": "X", "type": "Numerical"}],
            },
        ],
    }
    schema = parse_schema(json.dumps(doc))
    fs = feat.sample_features(schema, 50, seed=7, max_depth=1, target="T")
    names = set(fs.names())
    expected = {
        "Count(C)",
        "Mean(C, X)",
        "Median(C, X)",
        "Min(C, X)",
        "Max(C, X)",
        "Sum(C, X)",
        "StdDev(C, X)",
    }
    assert names == expected


def test_sample_deterministic_and_nested(schema):
    runs = [
        feat.sample_features(schema, 100, seed=s, max_depth=2, target="Gravity")
        for s in range(5)
    ]
    again = feat.sample_features(schema, 100, seed=0, max_depth=2, target="Gravity")
    assert runs[0].names() == again.names()
    for fs in runs:
        nested = [
            f
            for f in fs.features
            if isinstance(f.expr, feat.Aggregate)
            and isinstance(f.expr.operand, feat.Aggregate)
            and f.expr.operand.table_path == ("Vehicles", "Users")
        ]
        assert nested, "expected at least one nested Vehicles/Users aggregate"


def test_sample_priors_match_recomputation(schema):
    fs = feat.sample_features(schema, 40, seed=3, target="Gravity")
    for f in fs.features:
        assert f.prior_nats == pytest.approx(
            feat.feature_prior_nats(f.expr, schema, target="Gravity"), abs=1e-12
        )


def test_canonical_round_trip(schema):
    fs = feat.sample_features(schema, 60, seed=11, target="Gravity")
    for f in fs.features:
        again = feat.parse_feature(f.name, schema)
        assert again == f.expr
        assert feat.display_name(again) == f.name


def test_parse_accepts_relative_paths(schema):
    compact = feat.parse_feature("Max(Vehicles, Min(Users, BirthYear))", schema)
    full = feat.parse_feature("Max(Vehicles, Min(Vehicles/Users, BirthYear))", schema)
    assert compact == full
    assert feat.display_name(full) == "Max(Vehicles, Min(Vehicles/Users, BirthYear))"


def test_no_target_leakage(schema):
    for seed in range(5):
        fs = feat.sample_features(schema, 100, seed=seed, target="Gravity")
        for f in fs.features:
            assert not feat.uses_column(f.expr, (), "Gravity")


def test_prior_anticorrelated_with_frequency():
    doc = {
        "root": "R",
        "tables": [
            {"name": "R", "key": ["Id"], "columns": [{"name": "T", "type": "Categorical"}]},
            {
                "name": "C",
                "parent": "R",
                "relation": "0n",
                "key": ["Id", "Sub"],
                "columns": [
                    {"name": "X", "type": "Numerical"},
                    {"name": "Y", "type": "Numerical"},
                    {"name": "G", "type": "Categorical"},
                ],
            },
        ],
    }
    schema = parse_schema(json.dumps(doc))
    counts: dict[str, int] = {}
    priors: dict[str, float] = {}
    for seed in range(10_000):
        fs = feat.sample_features(schema, 1, seed=seed, max_depth=1, target="T")
        if not fs.features:
            continue
        f = fs.features[0]
        counts[f.name] = counts.get(f.name, 0) + 1
        priors[f.name] = f.prior_nats
    names = sorted(counts)
    freq = [counts[n] for n in names]
    cost = [priors[n] for n in names]
    rho = stats.spearmanr(freq, cost).statistic
    assert rho < 0


def test_evaluate_count_empty(dataset):
    expr = feat.parse_feature("Count(Vehicles)", dataset.schema)
    assert feat.evaluate_feature(expr, dataset, ("a3",)) == 0.0


def test_evaluate_mean(dataset):
    expr = feat.parse_feature("Mean(Vehicles, Min(Users, BirthYear))", dataset.schema)
    # a2 has one vehicle with one user born 1933.
    assert feat.evaluate_feature(expr, dataset, ("a2",)) == 1933.0


def test_evaluate_nested_max_min(schema):
    texts = dict(CSV_TEXTS)
    texts["Vehicles"] = (
        "AccidentId,VehicleId,Category\n"
        "a1,v1,Car\n"
        "a1,v2,Bike\n"
    )
    texts["Vehicles/Users"] = (
        "AccidentId,VehicleId,BirthYear,Sex\n"
        "a1,v1,1960,M\n"
        "a1,v1,1990,F\n"
        "a1,v2,1933,M\n"
        "a1,v2,2001,F\n"
    )
    ds = dataset_from_csv_texts(schema, texts, target="Gravity")
    expr = feat.parse_feature("Max(Vehicles, Min(Vehicles/Users, BirthYear))", schema)
    assert feat.evaluate_feature(expr, ds, ("a1",)) == 1960.0


def test_evaluate_empty_set_semantics(dataset):
    # a3 has no vehicles: Count -> 0, everything else -> missing.
    for text in ("Mean(Vehicles, Min(Users, BirthYear))", "Mode(Vehicles, Category)"):
        expr = feat.parse_feature(text, dataset.schema)
        assert feat.evaluate_feature(expr, dataset, ("a3",)) is None
    count = feat.parse_feature("Count(Vehicles)", dataset.schema)
    assert feat.evaluate_feature(count, dataset, ("a3",)) == 0.0


def test_evaluate_mode_tie_lexicographic(dataset):
    # a1 has one Car and one Bike: frequency tie, smallest value wins.
    expr = feat.parse_feature("Mode(Vehicles, Category)", dataset.schema)
    assert feat.evaluate_feature(expr, dataset, ("a1",)) == "Bike"


def test_evaluate_median_and_stddev(schema):
    texts = dict(CSV_TEXTS)
    texts["Vehicles"] = (
        "AccidentId,VehicleId,Category\n"
        "a1,v1,Car\n"
        "a2,v1,Car\n"
    )
    texts["Vehicles/Users"] = (
        "AccidentId,VehicleId,BirthYear,Sex\n"
        "a1,v1,1960,M\n"
        "a1,v1,1990,F\n"
        "a1,v1,2000,F\n"
        "a1,v1,1970,M\n"
    )
    ds = dataset_from_csv_texts(schema, texts, target="Gravity")
    median = feat.parse_feature("Median(Vehicles, Median(Users, BirthYear))", schema)
    # Single vehicle; inner median of {1960,1970,1990,2000} = 1980.
    assert feat.evaluate_feature(median, ds, ("a1",)) == 1980.0
    one = feat.parse_feature("StdDev(Vehicles, Count(Users))", schema)
    # Singleton set: population standard deviation is 0.
    assert feat.evaluate_feature(one, ds, ("a1",)) == 0.0


def test_flatten_matches_reference(schema):
    rng = np.random.default_rng(0)
    n = 60
    acc_rows, veh_rows, usr_rows, plc_rows = [], [], [], []
    for i in range(n):
        a = f"a{i:03d}"
        acc_rows.append(f"{a},{'Day' if i % 2 else 'Night'},{i % 24},"
                        f"{'Lethal' if i % 5 == 0 else 'NonLethal'}\n")
        if rng.random() < 0.9:
            plc_rows.append(f"{a},{'Urban' if i % 3 else 'Highway'}\n")
        for v in range(int(rng.integers(0, 4))):
            veh_rows.append(f"{a},v{v},{'Car' if (i + v) % 2 else 'Bike'}\n")
            for u in range(int(rng.integers(0, 3))):
                by = "" if rng.random() < 0.1 else str(1930 + int(rng.integers(0, 70)))
                usr_rows.append(f"{a},v{v},{by},{'M' if u % 2 else 'F'}\n")
    texts = {
        "Accidents": "AccidentId,Light,Hour,Gravity\n" + "".join(acc_rows),
        "Vehicles": "AccidentId,VehicleId,Category\n" + "".join(veh_rows),
        "Vehicles/Users": "AccidentId,VehicleId,BirthYear,Sex\n" + "".join(usr_rows),
        "Places": "AccidentId,RoadType\n" + "".join(plc_rows),
    }
    ds = dataset_from_csv_texts(schema, texts, target="Gravity")
    fs = feat.sample_features(schema, 40, seed=5, target="Gravity")
    flat = feat.flatten(ds, fs, workers=1)
    assert flat.n_rows == n
    assert len(flat.names) == 2 + len(fs.features)  # Light, Hour + features

    rng2 = np.random.default_rng(1)
    by_name = {f.name: f.expr for f in fs.features}
    for _ in range(100):
        row = int(rng2.integers(n))
        name = fs.names()[int(rng2.integers(len(fs.features)))]
        got = flat.columns[name].cell(row)
        want = feat.evaluate_feature(by_name[name], ds, row)
        if want is None:
            assert got is None
        elif isinstance(want, str):
            assert got == want
        else:
            assert got == pytest.approx(want, rel=1e-12, abs=1e-9)

    flat2 = feat.flatten(ds, fs, workers=3)
    for name in flat.names:
        a, b = flat.columns[name], flat2.columns[name]
        if hasattr(a, "values"):
            assert np.array_equal(a.values, b.values, equal_nan=True)
        else:
            assert np.array_equal(a.codes, b.codes) and a.categories == b.categories


def test_flatten_empty_feature_set(dataset):
    fs = feat.FeatureSet([], seed=0, requested=0)
    flat = feat.flatten(dataset, fs)
    assert flat.names == ["Light", "Hour"]
    assert flat.y is not None and flat.class_labels == ["Lethal", "NonLethal"]
