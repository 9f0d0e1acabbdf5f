"""Prior-driven construction of aggregate variables over a table tree.

A constructed variable is an expression tree: an aggregate applied to a
child table, whose operand is either a column of that table or a nested
aggregate over a grandchild table.  Examples (canonical names)::

    Count(Vehicles)
    Mode(Places, RoadType)
    Max(Vehicles, Min(Vehicles/Users, BirthYear))

The prior over expressions is hierarchical and uniform at each decision:
pick "native column" versus "construct" (ln 2 when both are possible),
pick the rule among applicable aggregates, pick the child table among
those where the rule applies, then pick the operand uniformly among the
applicable columns plus one recursion slot.  An expression's coding
length is the sum of ln(#choices) along its derivation, and sampling
walks the same decision tree with a seeded generator, so frequently drawn
shapes are exactly the cheap ones.

Aggregate semantics over the matching child rows: ``Count`` is the row
count; every other aggregate skips missing operand cells and returns
missing when nothing remains (and over an empty row set).  ``Mode``
breaks frequency ties by lexicographically smallest value, ``Median`` of
an even-sized set averages the middle values, and ``StdDev`` is the
population deviation (0 for a singleton).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .dataset import (
    STREAM_FEATURES,
    CategoricalColumn,
    Cell,
    Column,
    Dataset,
    NumericColumn,
    TableData,
)
from .errors import DataError, InvalidArgument
from .parallel import run_ordered
from .schema import CATEGORICAL, NUMERICAL, Schema

AGG_OPS = (
    "Count",
    "CountDistinct",
    "Mode",
    "Mean",
    "Median",
    "Min",
    "Max",
    "Sum",
    "StdDev",
)

#: Operand type required by each aggregate (None: no operand).
_OPERAND_TYPE = {
    "Count": None,
    "CountDistinct": CATEGORICAL,
    "Mode": CATEGORICAL,
    "Mean": NUMERICAL,
    "Median": NUMERICAL,
    "Min": NUMERICAL,
    "Max": NUMERICAL,
    "Sum": NUMERICAL,
    "StdDev": NUMERICAL,
}

#: Result type produced by each aggregate.
_RESULT_TYPE = {op: (CATEGORICAL if op == "Mode" else NUMERICAL) for op in AGG_OPS}

DEFAULT_MAX_DEPTH = 2


@dataclass(frozen=True)
class ColumnRef:
    """A column of the table at ``table_path`` (empty path = root)."""

    table_path: tuple[str, ...]
    column: str


@dataclass(frozen=True)
class Aggregate:
    op: str
    table_path: tuple[str, ...]
    operand: "FeatureExpr | None" = None


FeatureExpr = Union[ColumnRef, Aggregate]


def display_name(expr: FeatureExpr) -> str:
    """Canonical name; nested table paths are emitted in full."""
    if isinstance(expr, ColumnRef):
        if not expr.table_path:
            return expr.column
        return f"{'/'.join(expr.table_path)}.{expr.column}"
    path = "/".join(expr.table_path)
    if expr.operand is None:
        return f"{expr.op}({path})"
    operand = expr.operand
    if isinstance(operand, ColumnRef) and operand.table_path == expr.table_path:
        inner = operand.column
    else:
        inner = display_name(operand)
    return f"{expr.op}({path}, {inner})"


def result_type(expr: FeatureExpr, schema: Schema) -> str:
    if isinstance(expr, ColumnRef):
        return schema.resolve_path(expr.table_path).column_type(expr.column)
    return _RESULT_TYPE[expr.op]


def expr_depth(expr: FeatureExpr) -> int:
    if isinstance(expr, ColumnRef):
        return len(expr.table_path)
    inner = expr_depth(expr.operand) if expr.operand is not None else 0
    return max(len(expr.table_path), inner)


def uses_column(expr: FeatureExpr, table_path: tuple[str, ...], column: str) -> bool:
    if isinstance(expr, ColumnRef):
        return expr.table_path == table_path and expr.column == column
    if expr.operand is None:
        return False
    return uses_column(expr.operand, table_path, column)


# -- choice sets -------------------------------------------------------------


class _ChoiceContext:
    """Memoized applicability queries shared by prior and sampler."""

    def __init__(self, schema: Schema, target: str | None, max_depth: int):
        self.schema = schema
        self.target = target
        self.max_depth = max_depth
        self._memo: dict = {}

    def native_columns(self) -> list[str]:
        root = self.schema.table(self.schema.root)
        return [n for n, _ in root.value_columns() if n != self.target]

    def operand_columns(self, table_name: str, need: str) -> list[str]:
        spec = self.schema.table(table_name)
        return [n for n, t in spec.value_columns() if t == need]

    def result_ops(self, need: str | None) -> tuple[str, ...]:
        if need is None:
            return AGG_OPS
        return tuple(op for op in AGG_OPS if _RESULT_TYPE[op] == need)

    def op_applicable(self, op: str, table_name: str, depth: int) -> bool:
        """Can ``op`` aggregate over ``table_name`` entered at ``depth``?"""
        key = (op, table_name, depth)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        need = _OPERAND_TYPE[op]
        if need is None:
            ok = True
        else:
            ok = bool(self.operand_columns(table_name, need))
            if not ok and depth < self.max_depth:
                ok = any(
                    self.op_applicable(inner_op, child.name, depth + 1)
                    for child in self.schema.children(table_name)
                    for inner_op in self.result_ops(need)
                )
        self._memo[key] = ok
        return ok

    def applicable_ops(self, context_table: str, depth: int,
                       need: str | None) -> list[str]:
        """Aggregates usable from ``context_table`` (over some child)."""
        if depth > self.max_depth:
            return []
        children = self.schema.children(context_table)
        return [
            op
            for op in self.result_ops(need)
            if any(self.op_applicable(op, c.name, depth) for c in children)
        ]

    def applicable_tables(self, context_table: str, op: str, depth: int) -> list[str]:
        return [
            c.name
            for c in self.schema.children(context_table)
            if self.op_applicable(op, c.name, depth)
        ]

    def recursion_possible(self, table_name: str, depth: int, need: str) -> bool:
        return depth < self.max_depth and bool(
            self.applicable_ops(table_name, depth + 1, need)
        )


def _ln(count: int) -> float:
    return float(np.log(count)) if count > 1 else 0.0


def feature_prior_nats(
    expr: FeatureExpr,
    schema: Schema,
    target: str | None = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> float:
    """Coding length of one expression under the hierarchical prior.

    Raises InvalidArgument when the expression cannot be derived in the
    stated schema and depth budget.
    """
    ctx = _ChoiceContext(schema, target, max_depth)
    natives = ctx.native_columns()
    root_ops = ctx.applicable_ops(schema.root, 1, None)
    total = _ln(2) if natives and root_ops else 0.0

    if isinstance(expr, ColumnRef):
        if expr.table_path:
            raise InvalidArgument("a native reference must point at the root table")
        if expr.column not in natives:
            raise InvalidArgument(f"{expr.column!r} is not a usable native column")
        return total + _ln(len(natives))

    def walk(agg: Aggregate, context_table: str, context_path: tuple[str, ...],
             depth: int, need: str | None) -> float:
        if not isinstance(agg, Aggregate) or agg.op not in AGG_OPS:
            raise InvalidArgument(f"invalid aggregate node: {agg!r}")
        ops = ctx.applicable_ops(context_table, depth, need)
        if agg.op not in ops:
            raise InvalidArgument(
                f"{agg.op} is not applicable under {context_table!r} at depth {depth}"
            )
        if agg.table_path[:-1] != context_path or len(agg.table_path) != depth:
            raise InvalidArgument(
                f"aggregate path {agg.table_path} must descend one level from "
                f"{context_path}"
            )
        tables = ctx.applicable_tables(context_table, agg.op, depth)
        table_name = agg.table_path[-1]
        if table_name not in tables:
            raise InvalidArgument(
                f"table {table_name!r} not applicable for {agg.op} here"
            )
        cost = _ln(len(ops)) + _ln(len(tables))
        need_inner = _OPERAND_TYPE[agg.op]
        if need_inner is None:
            if agg.operand is not None:
                raise InvalidArgument("Count takes no operand")
            return cost
        columns = ctx.operand_columns(table_name, need_inner)
        recurse = ctx.recursion_possible(table_name, depth, need_inner)
        n_options = len(columns) + (1 if recurse else 0)
        if n_options == 0:
            raise InvalidArgument(f"no operands of type {need_inner} in {table_name!r}")
        cost += _ln(n_options)
        operand = agg.operand
        if isinstance(operand, ColumnRef):
            if operand.table_path != agg.table_path or operand.column not in columns:
                raise InvalidArgument(
                    f"operand column {operand!r} is not usable under {agg.table_path}"
                )
            return cost
        if not recurse:
            raise InvalidArgument("recursion not available at this depth")
        return cost + walk(operand, table_name, agg.table_path, depth + 1, need_inner)

    return total + walk(expr, schema.root, (), 1, None)


# -- sampling ----------------------------------------------------------------


@dataclass(frozen=True)
class Feature:
    expr: FeatureExpr
    name: str
    prior_nats: float


@dataclass
class FeatureSet:
    features: list[Feature]
    seed: int
    requested: int
    max_depth: int = DEFAULT_MAX_DEPTH

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise InvalidArgument("duplicate canonical names in feature set")

    def names(self) -> list[str]:
        return [f.name for f in self.features]


def _sample_expr(ctx: _ChoiceContext, rng: np.random.Generator) -> FeatureExpr:
    natives = ctx.native_columns()
    root_ops = ctx.applicable_ops(ctx.schema.root, 1, None)
    if not natives and not root_ops:
        raise InvalidArgument("schema admits no variables at all")
    if natives and root_ops:
        go_native = bool(rng.integers(2))
    else:
        go_native = bool(natives)
    if go_native:
        return ColumnRef((), natives[int(rng.integers(len(natives)))])

    def draw(context_table: str, context_path: tuple[str, ...], depth: int,
             need: str | None) -> Aggregate:
        ops = ctx.applicable_ops(context_table, depth, need)
        op = ops[int(rng.integers(len(ops)))]
        tables = ctx.applicable_tables(context_table, op, depth)
        table_name = tables[int(rng.integers(len(tables)))]
        path = context_path + (table_name,)
        need_inner = _OPERAND_TYPE[op]
        if need_inner is None:
            return Aggregate(op, path, None)
        columns = ctx.operand_columns(table_name, need_inner)
        recurse = ctx.recursion_possible(table_name, depth, need_inner)
        pick = int(rng.integers(len(columns) + (1 if recurse else 0)))
        if pick < len(columns):
            return Aggregate(op, path, ColumnRef(path, columns[pick]))
        return Aggregate(op, path, draw(table_name, path, depth + 1, need_inner))

    return draw(ctx.schema.root, (), 1, None)


def sample_features(
    schema: Schema,
    n: int,
    seed: int,
    max_depth: int = DEFAULT_MAX_DEPTH,
    target: str | None = None,
) -> FeatureSet:
    """Draw up to ``n`` distinct constructed variables from the prior.

    Duplicates (including redraws of native columns, which are already in
    the flat table) are rejected; sampling stops after ``n`` distinct
    features or 10*n consecutive rejections.  Deterministic per
    (schema, n, seed, max_depth).
    """
    if n < 0:
        raise InvalidArgument("feature count must be >= 0")
    ctx = _ChoiceContext(schema, target, max_depth)
    rng = np.random.default_rng([seed, STREAM_FEATURES])
    taken = set(ctx.native_columns())
    features: list[Feature] = []
    budget = 10 * n
    consecutive = 0
    if n > 0 and ctx.applicable_ops(schema.root, 1, None):
        while len(features) < n and consecutive < budget:
            expr = _sample_expr(ctx, rng)
            name = display_name(expr)
            if name in taken:
                consecutive += 1
                continue
            consecutive = 0
            taken.add(name)
            features.append(
                Feature(expr, name, feature_prior_nats(expr, schema, target, max_depth))
            )
    return FeatureSet(features, seed=seed, requested=n, max_depth=max_depth)


# -- canonical-name parsing ---------------------------------------------------


def _split_top_level(text: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise InvalidArgument(f"unbalanced parentheses in {text!r}")
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    if depth != 0:
        raise InvalidArgument(f"unbalanced parentheses in {text!r}")
    parts.append(text[start:])
    return [p.strip() for p in parts]


def parse_feature(text: str, schema: Schema) -> FeatureExpr:
    """Parse a canonical name back into an expression.

    Nested table paths are accepted either in full from the root or
    relative to the enclosing table (the compact form used in reports).
    """

    def resolve(path_text: str, context_path: tuple[str, ...]) -> tuple[str, ...]:
        parts = tuple(p for p in path_text.split("/") if p)
        candidates = [parts, context_path + parts]
        for cand in candidates:
            try:
                spec = schema.resolve_path("/".join(cand))
                if schema.path_of(spec.name) == cand:
                    return cand
            except Exception:
                continue
        # Last resort: a unique table name anywhere in the tree.
        if len(parts) == 1:
            try:
                return schema.path_of(parts[0])
            except Exception:
                pass
        raise InvalidArgument(f"cannot resolve table path {path_text!r}")

    def rec(body: str, context_path: tuple[str, ...]) -> FeatureExpr:
        body = body.strip()
        if "(" not in body:
            if "." in body:
                path_text, col = body.rsplit(".", 1)
                return ColumnRef(resolve(path_text, context_path), col)
            context = (
                schema.resolve_path("/".join(context_path)).name
                if context_path
                else schema.root
            )
            spec = schema.table(context)
            if body not in spec.column_names:
                raise InvalidArgument(
                    f"unknown column {body!r} in table {context!r}"
                )
            return ColumnRef(context_path, body)
        op, rest = body.split("(", 1)
        op = op.strip()
        if op not in AGG_OPS:
            raise InvalidArgument(f"unknown aggregate {op!r}")
        if not rest.endswith(")"):
            raise InvalidArgument(f"malformed expression {body!r}")
        args = _split_top_level(rest[:-1])
        path = resolve(args[0], context_path)
        if path[: len(context_path)] != context_path or len(path) != len(context_path) + 1:
            raise InvalidArgument(
                f"{op}: table {args[0]!r} must be a direct child of "
                f"{'/'.join(context_path) or 'the root'}"
            )
        if _OPERAND_TYPE[op] is None:
            if len(args) != 1:
                raise InvalidArgument(f"{op} takes no operand")
            return Aggregate(op, path, None)
        if len(args) != 2:
            raise InvalidArgument(f"{op} needs exactly one operand")
        operand = rec(args[1], path)
        need = _OPERAND_TYPE[op]
        got = result_type(operand, schema)
        if got != need:
            raise InvalidArgument(f"{op} needs a {need} operand, got {got}")
        return Aggregate(op, path, operand)

    expr = rec(text, ())
    return expr


# -- evaluation ---------------------------------------------------------------


def _operand_column(operand: FeatureExpr, table: TableData,
                    dataset: Dataset) -> Column:
    if isinstance(operand, ColumnRef):
        return table.columns[operand.column]
    return _aggregate_column(operand, dataset)


def _mode_pick(codes: np.ndarray, categories: list[str]) -> int:
    """Most frequent non-missing code; ties to the smallest value string."""
    present = codes[codes >= 0]
    if present.size == 0:
        return -1
    freq = np.bincount(present)
    best = np.flatnonzero(freq == freq.max())
    return int(min(best, key=lambda c: categories[c]))


def _aggregate_column(agg: Aggregate, dataset: Dataset) -> Column:
    """Aggregate values aligned to the parent-table rows.

    For a path of length 1 the parent is the root (file order); deeper
    aggregates align to the sorted rows of the intermediate table.
    """
    child = dataset.tables[agg.table_path[-1]]
    if len(agg.table_path) == 1:
        parent_links = dataset.root.key_bytes
    else:
        parent_links = dataset.tables[agg.table_path[-2]].key_bytes
    n_parent = len(parent_links)

    run_starts = child.run_starts
    n_runs = len(child.run_links)
    starts, ends = run_starts[:-1], run_starts[1:]

    # Map each parent row to its run (or -1).
    if n_runs:
        ri = np.searchsorted(child.run_links, parent_links)
        ri_c = np.minimum(ri, n_runs - 1)
        has = child.run_links[ri_c] == parent_links
        run_of_parent = np.where(has, ri_c, -1)
    else:
        run_of_parent = np.full(n_parent, -1, dtype=np.int64)

    if agg.op == "Count":
        lengths = (ends - starts) if n_runs else np.zeros(0, dtype=np.int64)
        out = np.zeros(n_parent, dtype=np.float64)
        hit = run_of_parent >= 0
        out[hit] = lengths[run_of_parent[hit]]
        return NumericColumn(out)

    operand = _operand_column(agg.operand, child, dataset)

    if agg.op in ("Mode", "CountDistinct"):
        assert isinstance(operand, CategoricalColumn)
        codes = operand.codes
        if agg.op == "Mode":
            per_run = np.array(
                [
                    _mode_pick(codes[s:e], operand.categories)
                    for s, e in zip(starts, ends)
                ],
                dtype=np.int32,
            ) if n_runs else np.zeros(0, dtype=np.int32)
            out_codes = np.full(n_parent, -1, dtype=np.int32)
            hit = run_of_parent >= 0
            out_codes[hit] = per_run[run_of_parent[hit]]
            return CategoricalColumn(out_codes, operand.categories)
        per_run = np.array(
            [
                len(np.unique(codes[s:e][codes[s:e] >= 0])) or np.nan
                for s, e in zip(starts, ends)
            ],
            dtype=np.float64,
        ) if n_runs else np.zeros(0, dtype=np.float64)
        out = np.full(n_parent, np.nan)
        hit = run_of_parent >= 0
        out[hit] = per_run[run_of_parent[hit]]
        return NumericColumn(out)

    assert isinstance(operand, NumericColumn)
    x = operand.values
    if n_runs:
        present = ~np.isnan(x)
        cnt = np.add.reduceat(present.astype(np.float64), starts)
        if agg.op in ("Sum", "Mean", "StdDev"):
            filled = np.where(present, x, 0.0)
            sums = np.add.reduceat(filled, starts)
            if agg.op == "Sum":
                per_run = np.where(cnt > 0, sums, np.nan)
            elif agg.op == "Mean":
                with np.errstate(invalid="ignore", divide="ignore"):
                    per_run = np.where(cnt > 0, sums / cnt, np.nan)
            else:
                sq = np.add.reduceat(filled * filled, starts)
                with np.errstate(invalid="ignore", divide="ignore"):
                    mean = sums / cnt
                    var = np.maximum(sq / cnt - mean * mean, 0.0)
                    per_run = np.where(cnt > 0, np.sqrt(var), np.nan)
        elif agg.op == "Min":
            per_run = np.fmin.reduceat(x, starts)
        elif agg.op == "Max":
            per_run = np.fmax.reduceat(x, starts)
        elif agg.op == "Median":
            per_run = np.array(
                [
                    np.median(x[s:e][present[s:e]]) if cnt[i] > 0 else np.nan
                    for i, (s, e) in enumerate(zip(starts, ends))
                ],
                dtype=np.float64,
            )
        else:
            raise InvalidArgument(f"unknown aggregate {agg.op!r}")
    else:
        per_run = np.zeros(0, dtype=np.float64)
    out = np.full(n_parent, np.nan)
    hit = run_of_parent >= 0
    out[hit] = per_run[run_of_parent[hit]]
    return NumericColumn(out)


def feature_column(expr: FeatureExpr, dataset: Dataset) -> Column:
    """Evaluate one feature for every root instance (vectorized)."""
    if isinstance(expr, ColumnRef):
        if expr.table_path:
            raise InvalidArgument("only root columns can be referenced directly")
        return dataset.root.columns[expr.column]
    return _aggregate_column(expr, dataset)


def evaluate_feature(expr: FeatureExpr, dataset: Dataset, instance) -> Cell:
    """Reference evaluation for a single instance (by root row or key).

    Kept deliberately independent of the vectorized path: plain recursion
    over row slices.
    """
    if isinstance(instance, (int, np.integer)):
        row = int(instance)
    else:
        key = np.asarray([KEY_JOIN(instance)])
        matches = np.flatnonzero(dataset.root.key_bytes == key)
        if len(matches) != 1:
            raise InvalidArgument(f"unknown instance key {instance!r}")
        row = int(matches[0])

    if isinstance(expr, ColumnRef):
        if expr.table_path:
            raise InvalidArgument("only root columns can be referenced directly")
        return dataset.root.columns[expr.column].cell(row)

    def eval_rows(agg: Aggregate, parent_key: bytes) -> Cell:
        child = dataset.tables[agg.table_path[-1]]
        starts, ends = child.ranges_for(np.asarray([parent_key]))
        s, e = int(starts[0]), int(ends[0])
        if agg.op == "Count":
            return float(e - s)
        cells: list = []
        for r in range(s, e):
            if isinstance(agg.operand, ColumnRef):
                cell = child.columns[agg.operand.column].cell(r)
            else:
                cell = eval_rows(agg.operand, bytes(child.key_bytes[r]))
            if cell is not None:
                cells.append(cell)
        if not cells:
            return None
        if agg.op == "Mode":
            freq: dict[str, int] = {}
            for c in cells:
                freq[c] = freq.get(c, 0) + 1
            top = max(freq.values())
            return min(v for v, f in freq.items() if f == top)
        if agg.op == "CountDistinct":
            return float(len(set(cells)))
        vals = sorted(float(c) for c in cells)
        m = len(vals)
        if agg.op == "Min":
            return vals[0]
        if agg.op == "Max":
            return vals[-1]
        if agg.op == "Sum":
            return float(sum(vals))
        if agg.op == "Mean":
            return float(sum(vals) / m)
        if agg.op == "Median":
            mid = m // 2
            return float(vals[mid]) if m % 2 else float((vals[mid - 1] + vals[mid]) / 2)
        if agg.op == "StdDev":
            mean = sum(vals) / m
            return float(np.sqrt(max(sum((v - mean) ** 2 for v in vals) / m, 0.0)))
        raise InvalidArgument(f"unknown aggregate {agg.op!r}")

    return eval_rows(expr, bytes(dataset.root.key_bytes[row]))


def KEY_JOIN(parts) -> bytes:
    return b"\x1f".join(str(p).encode("utf-8") for p in parts)


# -- flat table ----------------------------------------------------------------


@dataclass
class FlatTable:
    """One row per root instance: native columns plus evaluated features."""

    names: list[str]
    columns: dict[str, Column]
    class_labels: list[str]
    y: np.ndarray | None  # class code per row, -1 when missing
    target_name: str | None
    keys: list[tuple[str, ...]]
    feature_names: list[str]  # subset of names that are constructed

    @property
    def n_rows(self) -> int:
        return len(self.keys)

    def row_cells(self, row: int) -> dict[str, Cell]:
        return {name: self.columns[name].cell(row) for name in self.names}


_SHARED: dict = {}


def _flatten_task(expr: FeatureExpr) -> Column:
    return feature_column(expr, _SHARED["dataset"])


def flatten(dataset: Dataset, feature_set: FeatureSet, workers: int = 1) -> FlatTable:
    """Evaluate every feature for every instance into a flat table.

    Columns are evaluated independently (parallelizable); output order is
    native root variables first, then features in declared order.
    """
    root_spec = dataset.schema.table(dataset.schema.root)
    natives = [n for n, _ in root_spec.value_columns() if n != dataset.target]
    names: list[str] = list(natives)
    columns: dict[str, Column] = {n: dataset.root.columns[n] for n in natives}

    exprs = [f.expr for f in feature_set.features]
    _SHARED["dataset"] = dataset
    try:
        results = run_ordered(_flatten_task, exprs, workers)
    finally:
        _SHARED.pop("dataset", None)
    for feature, col in zip(feature_set.features, results):
        if feature.name in columns:
            raise InvalidArgument(f"feature name {feature.name!r} collides")
        names.append(feature.name)
        columns[feature.name] = col

    if dataset.target is not None:
        target_col = dataset.target_column()
        class_labels = dataset.class_labels()
        remap = {target_col.categories.index(lbl): i for i, lbl in enumerate(class_labels)
                 if lbl in target_col.categories}
        y = np.array(
            [remap.get(int(c), -1) for c in target_col.codes], dtype=np.int64
        )
    else:
        class_labels = []
        y = None

    keys = [dataset.root_key_strings(r) for r in range(dataset.n_instances)]
    return FlatTable(
        names=names,
        columns=columns,
        class_labels=class_labels,
        y=y,
        target_name=dataset.target,
        keys=keys,
        feature_names=[f.name for f in feature_set.features],
    )
