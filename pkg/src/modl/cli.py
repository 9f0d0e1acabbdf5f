"""Command-line entry point: train, predict, evaluate, explain, sample-features.

All outputs land under ``--out``.  Exit codes: 0 success, 2 usage error,
3 data error, 4 broken internal invariant.  Errors print one
machine-parseable line to stderr: ``error:<category>: <message>``.

Every random phase derives its stream from the single ``--seed``, and all
parallel sections merge results in declared order, so identical inputs and
seed produce byte-identical artifacts for any ``--threads`` value.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import classifier as clf
from . import explain as xai
from . import report as rpt
from .dataset import DEFAULT_CHUNK_ROWS, Dataset, load_dataset, split
from .errors import DataError, InvalidArgument, ModlError, SchemaError
from .features import (
    DEFAULT_MAX_DEPTH,
    Feature,
    FeatureSet,
    FlatTable,
    flatten,
    parse_feature,
    sample_features,
)
from .preparation import prepare_columns
from .schema import Schema, parse_schema


class _Timer:
    def __init__(self):
        self.phases: dict[str, float] = {}

    def run(self, name: str, fn, *args, **kwargs):
        start = time.perf_counter()
        out = fn(*args, **kwargs)
        self.phases[name] = round(time.perf_counter() - start, 6)
        return out


def _parse_data_args(pairs: list[str]) -> dict[str, str]:
    files: dict[str, str] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise InvalidArgument(f"--data expects NAME=PATH, got {pair!r}")
        name, path = pair.split("=", 1)
        if name in files:
            raise InvalidArgument(f"--data given twice for {name!r}")
        files[name] = path
    if not files:
        raise InvalidArgument("at least one --data NAME=PATH is required")
    return files


def _load(args, schema: Schema, target: str | None, optional=None) -> Dataset:
    return load_dataset(
        schema,
        _parse_data_args(args.data),
        target=target,
        allow_orphans=args.allow_orphans,
        chunk_rows=args.chunk_rows,
        optional_columns=optional,
    )


def _schema_summary(schema: Schema, dataset: Dataset) -> dict:
    return {
        "root": schema.root,
        "tables": [
            {
                "name": t.name,
                "path": "/".join(schema.path_of(t.name)) or t.name,
                "relation": t.relation,
                "rows": dataset.tables[t.name].n_rows,
            }
            for t in schema.tables
        ],
    }


def _write_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _fmt_cell(value) -> str:
    return repr(float(value))


def cmd_train(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timer = _Timer()
    schema = parse_schema(Path(args.schema))
    dataset = timer.run("load", _load, args, schema, args.target)
    summary = _schema_summary(schema, dataset)
    train_ds, test_ds = timer.run("split", split, dataset, args.train_fraction, args.seed)
    del dataset  # keep peak memory at the split copies, not 3x the data
    features = timer.run(
        "sample_features",
        sample_features,
        schema,
        args.n_features,
        args.seed,
        args.max_depth,
        args.target,
    )
    flat_train = timer.run("flatten_train", flatten, train_ds, features, args.threads)
    flat_test = timer.run("flatten_test", flatten, test_ds, features, args.threads)

    def prep():
        cols = [(name, flat_train.columns[name]) for name in flat_train.names]
        return prepare_columns(cols, flat_train.y, flat_train.class_labels, args.threads)

    prepared = timer.run("prepare", prep)
    model = timer.run("fit", clf.fit, flat_train, features, args.threads, prepared)
    eval_train = timer.run("evaluate_train", rpt.evaluate, model, flat_train, "train")
    eval_test = timer.run("evaluate_test", rpt.evaluate, model, flat_test, "test")

    report = rpt.build_report(
        summary,
        prepared,
        model,
        [eval_train, eval_test],
        metadata={
            "target": args.target,
            "seed": args.seed,
            "n_features": args.n_features,
            "max_depth": args.max_depth,
            "train_fraction": args.train_fraction,
            "train_instances": flat_train.n_rows,
            "test_instances": flat_test.n_rows,
        },
    )
    clf.save_model(model, out / "model.json")
    rpt.write_report(report, out / "report.json")
    _write_json(
        {"threads": args.threads, "phases": timer.phases}, out / "timing.json"
    )
    print(
        f"trained on {flat_train.n_rows} instances: "
        f"{len(model.active_variables())}/{model.considered} variables selected, "
        f"test accuracy {eval_test.accuracy:.4f}, test AUC "
        f"{'n/a' if eval_test.auc is None else f'{eval_test.auc:.4f}'}"
    )
    return 0


def _model_feature_set(model: clf.SnbModel, schema: Schema) -> FeatureSet:
    features = [
        Feature(parse_feature(v.name, schema), v.name, v.construction_nats)
        for v in model.variables
        if v.constructed
    ]
    return FeatureSet(
        features,
        seed=model.feature_meta.get("seed", 0),
        requested=len(features),
        max_depth=model.feature_meta.get("max_depth", DEFAULT_MAX_DEPTH),
    )


def _flat_for_model(model, schema, dataset, threads) -> FlatTable:
    return flatten(dataset, _model_feature_set(model, schema), threads)


def cmd_predict(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = clf.model_from_json(Path(args.model))
    schema = parse_schema(Path(args.schema))
    dataset = _load(args, schema, target=None, optional={model.target})
    flat = _flat_for_model(model, schema, dataset, args.threads)
    log_proba = clf.predict_log_proba_table(model, flat)
    proba = np.exp(log_proba)
    predicted = np.argmax(log_proba, axis=1)

    key_cols = list(schema.table(schema.root).key)
    path = out / "predictions.csv"
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            key_cols
            + [f"Predicted{model.target}"]
            + [f"Prob{model.target}{c}" for c in model.classes]
        )
        for row in range(flat.n_rows):
            writer.writerow(
                list(flat.keys[row])
                + [model.classes[int(predicted[row])]]
                + [_fmt_cell(p) for p in proba[row]]
            )
    print(f"wrote {flat.n_rows} predictions to {path}")
    return 0


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = clf.model_from_json(Path(args.model))
    schema = parse_schema(Path(args.schema))
    target = args.target or model.target
    dataset = _load(args, schema, target=target)
    flat = _flat_for_model(model, schema, dataset, args.threads)
    result = rpt.evaluate(model, flat, role="evaluation")
    _write_json(result.to_json_dict(), out / "evaluation.json")
    print(
        f"accuracy {result.accuracy:.4f}, AUC "
        f"{'n/a' if result.auc is None else f'{result.auc:.4f}'} "
        f"on {result.instances} instances"
    )
    return 0


def cmd_explain(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = clf.model_from_json(Path(args.model))
    schema = parse_schema(Path(args.schema))
    dataset = _load(args, schema, target=None, optional={model.target})
    flat = _flat_for_model(model, schema, dataset, args.threads)
    cls = args.class_of_interest
    if cls not in model.classes:
        raise DataError(f"class {cls!r} is not in the model ({model.classes})")
    ci = model.classes.index(cls)
    k = args.k

    rows = []
    for row in range(flat.n_rows):
        cells = flat.row_cells(row)
        atts = xai.shapley_values(model, cells)
        reinforcement = xai.reinforce(model, cells, cls, k)
        rows.append((flat.keys[row], atts, reinforcement))
    rows.sort(key=lambda r: -r[1][ci].posterior)

    shapley_path = out / "shapley.csv"
    with open(shapley_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        header = [f"Prob{model.target}{cls}"]
        for i in range(1, k + 1):
            header += [
                f"ShapleyVariable_{cls}_{i}",
                f"ShapleyPart_{cls}_{i}",
                f"ShapleyValue_{cls}_{i}",
            ]
        writer.writerow(header)
        for _, atts, _ in rows:
            att = atts[ci]
            record = [_fmt_cell(att.posterior)]
            for i in range(k):
                if i < len(att.entries):
                    e = att.entries[i]
                    record += [e.variable, e.part_label, _fmt_cell(e.value)]
                else:
                    record += ["", "", ""]  # fewer variables than k: padded
            writer.writerow(record)

    reinforcement_path = out / "reinforcement.csv"
    key_cols = list(schema.table(schema.root).key)
    with open(reinforcement_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        header = key_cols + [f"Prob{model.target}{cls}"]
        for i in range(1, k + 1):
            header += [
                f"ReinforceVariable_{cls}_{i}",
                f"ReinforceFromPart_{cls}_{i}",
                f"ReinforceToPart_{cls}_{i}",
                f"ReinforceProb_{cls}_{i}",
            ]
        writer.writerow(header)
        for key, atts, reinforcement in rows:
            record = list(key) + [_fmt_cell(atts[ci].posterior)]
            for i in range(k):
                if i < len(reinforcement.suggestions):
                    s = reinforcement.suggestions[i]
                    record += [
                        s.variable,
                        s.current_part,
                        s.proposed_part,
                        _fmt_cell(s.new_posterior),
                    ]
                else:
                    record += ["", "", "", ""]
            writer.writerow(record)

    full = {
        "classes": list(model.classes),
        "variables": [v.name for v in model.active_variables()],
        "class_of_interest": cls,
        "rows": [
            {
                "key": list(key),
                "posteriors": {a.class_label: a.posterior for a in atts},
                "shapley": {
                    a.class_label: {e.variable: e.value for e in a.entries}
                    for a in atts
                },
            }
            for key, atts, _ in rows
        ],
    }
    _write_json(full, out / "shapley.json")
    print(f"explained {flat.n_rows} instances toward class {cls!r}")
    return 0


def cmd_sample_features(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    schema = parse_schema(Path(args.schema))
    features = sample_features(
        schema, args.n_features, args.seed, args.max_depth, args.target
    )
    path = out / "features.csv"
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["Name", "PriorNats"])
        for f in features.features:
            writer.writerow([f.name, _fmt_cell(f.prior_nats)])
    print(f"sampled {len(features.features)} features into {path}")
    return 0


def _add_common(parser: argparse.ArgumentParser, with_target: bool = True) -> None:
    parser.add_argument("--schema", required=True, help="schema JSON path")
    parser.add_argument(
        "--data",
        action="append",
        metavar="NAME=PATH",
        help="table data file; repeat per table (name or path like Vehicles/Users)",
    )
    if with_target:
        parser.add_argument("--target", help="target column in the root table")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker count for parallel sections (0 = auto)")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--allow-orphans", action="store_true",
                        help="drop child rows without a parent instead of failing")
    parser.add_argument("--chunk-rows", type=int, default=DEFAULT_CHUNK_ROWS,
                        help="CSV ingestion chunk size in rows")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modl",
        description="MDL-driven multi-table AutoML: train, deploy, and explain "
        "a selective naive Bayes classifier over a star or snowflake schema.",
    )
    parser.add_argument("--version", action="version", version=f"modl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a classifier end to end")
    _add_common(p)
    p.add_argument("--n-features", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.set_defaults(handler=cmd_train, requires_target=True)

    p = sub.add_parser("predict", help="deploy a model on raw tables")
    _add_common(p, with_target=False)
    p.add_argument("--model", required=True)
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("evaluate", help="evaluate a model on labeled tables")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("explain", help="per-instance attributions and reinforcements")
    _add_common(p, with_target=False)
    p.add_argument("--model", required=True)
    p.add_argument("--class-of-interest", required=True)
    p.add_argument("-k", type=int, default=2, help="entries per instance")
    p.set_defaults(handler=cmd_explain)

    p = sub.add_parser("sample-features", help="draw constructed variables only")
    p.add_argument("--schema", required=True)
    p.add_argument("--target", default=None)
    p.add_argument("--n-features", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="out")
    p.set_defaults(handler=cmd_sample_features)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "requires_target", False) and not args.target:
        parser.error("train requires --target")
    try:
        return args.handler(args)
    except (SchemaError, DataError) as exc:
        print(f"error:data: {exc}", file=sys.stderr)
        return 3
    except InvalidArgument as exc:
        print(f"error:usage: {exc}", file=sys.stderr)
        return 2
    except ModlError as exc:
        print(f"error:internal: {exc}", file=sys.stderr)
        return 4
    except AssertionError as exc:
        print(f"error:internal: invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
