"""Typed columnar storage for multi-table datasets.

Tables are stored column-wise: Numerical columns as float64 arrays (NaN
marks a missing cell), Categorical and Key columns as int32 codes into a
per-column value list.  CSV files are ingested in bounded-size chunks so
peak memory stays proportional to chunk size plus the final compact
arrays, never to the raw text size.

Child tables are sorted by their full key at load; rows sharing the same
parent-link value then form one contiguous run, and the per-parent row
range is found by binary search.  A loaded Dataset is immutable and safe
to share across parallel workers.

A cell value is represented as ``float`` (Numerical), ``str``
(Categorical), or ``None`` (missing).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .errors import DataError, InvalidArgument, SchemaError
from .schema import CATEGORICAL, KEY, NUMERICAL, REL_ONE_TO_ONE, Schema, TableSpec

Cell = Union[float, str, None]

#: Joins multi-column key parts into one comparable byte string.  Neither
#: RFC-4180 text nor sane identifiers contain the unit separator.
KEY_SEP = b"\x1f"

DEFAULT_CHUNK_ROWS = 65536

#: Seeded substream tags: every phase derives its generator from
#: (master seed, tag) so adding a phase never perturbs another stream.
STREAM_SPLIT = 1
STREAM_FEATURES = 2


@dataclass
class NumericColumn:
    values: np.ndarray  # float64, NaN = missing

    def __len__(self) -> int:
        return len(self.values)

    def cell(self, row: int) -> Cell:
        v = float(self.values[row])
        return None if np.isnan(v) else v

    def take(self, idx: np.ndarray) -> "NumericColumn":
        return NumericColumn(self.values[idx])

    def text(self, row: int) -> str:
        v = self.values[row]
        return "" if np.isnan(v) else repr(float(v))


@dataclass
class CategoricalColumn:
    codes: np.ndarray  # int32, -1 = missing
    categories: list[str]

    def __len__(self) -> int:
        return len(self.codes)

    def cell(self, row: int) -> Cell:
        c = int(self.codes[row])
        return None if c < 0 else self.categories[c]

    def take(self, idx: np.ndarray) -> "CategoricalColumn":
        return CategoricalColumn(self.codes[idx], self.categories)

    def text(self, row: int) -> str:
        c = int(self.codes[row])
        return "" if c < 0 else self.categories[c]


Column = Union[NumericColumn, CategoricalColumn]


def _join_key_bytes(parts: list[np.ndarray]) -> np.ndarray:
    """Join per-column S-dtype arrays into one comparable key per row."""
    out = parts[0]
    for nxt in parts[1:]:
        out = np.char.add(np.char.add(out, KEY_SEP), nxt)
    return out


class TableData:
    """One loaded table: typed columns plus key/index structures."""

    def __init__(self, spec: TableSpec, columns: dict[str, Column], n_rows: int):
        self.spec = spec
        self.columns = columns
        self.n_rows = n_rows
        self.key_bytes: np.ndarray | None = None  # full key, joined
        self.link_bytes: np.ndarray | None = None  # parent-key prefix, joined
        self.root_prefix_bytes: np.ndarray | None = None  # root-key prefix, joined
        self.run_starts: np.ndarray | None = None
        self.run_links: np.ndarray | None = None

    def key_part_arrays(self, names: Iterable[str]) -> list[np.ndarray]:
        parts = []
        for name in names:
            col = self.columns[name]
            if not isinstance(col, CategoricalColumn):
                raise DataError(f"key column {name!r} must be categorical-coded")
            if np.any(col.codes < 0):
                row = int(np.argmax(col.codes < 0))
                raise DataError(
                    f"table {self.spec.name!r}, row {row + 1}: empty key cell in {name!r}"
                )
            raw = [s.encode("utf-8") for s in col.categories] or [b""]
            cats = np.asarray(raw, dtype="S")
            parts.append(cats[col.codes])
        return parts

    def build_keys(self, parent_key: tuple[str, ...], root_key: tuple[str, ...]) -> None:
        self.key_bytes = _join_key_bytes(self.key_part_arrays(self.spec.key))
        self.link_bytes = _join_key_bytes(self.key_part_arrays(parent_key))
        self.root_prefix_bytes = _join_key_bytes(self.key_part_arrays(root_key))

    def sort_by_key(self) -> None:
        order = np.argsort(self.key_bytes, kind="stable")
        self.reorder(order)

    def reorder(self, order: np.ndarray) -> None:
        self.columns = {n: c.take(order) for n, c in self.columns.items()}
        self.key_bytes = self.key_bytes[order]
        self.link_bytes = self.link_bytes[order]
        self.root_prefix_bytes = self.root_prefix_bytes[order]
        self.n_rows = len(order)

    def build_runs(self) -> None:
        """Index contiguous runs of equal parent-link values (post sort)."""
        link = self.link_bytes
        if self.n_rows == 0:
            self.run_starts = np.zeros(1, dtype=np.int64)
            self.run_links = np.asarray([], dtype=link.dtype if link is not None else "S1")
            return
        change = np.flatnonzero(link[1:] != link[:-1]) + 1
        self.run_starts = np.concatenate(([0], change, [self.n_rows])).astype(np.int64)
        self.run_links = link[self.run_starts[:-1]]

    def ranges_for(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(start, end) row range per query link value; empty when absent."""
        if self.run_links is None:
            raise InvalidArgument("table index not built")
        queries = np.asarray(queries)
        if len(self.run_links) == 0:
            z = np.zeros(len(queries), dtype=np.int64)
            return z, z.copy()
        links = self.run_links
        if queries.dtype != links.dtype:
            # Promote to the wider byte width; a narrowing cast would
            # silently truncate and could produce false matches.
            width = max(links.dtype.itemsize, queries.dtype.itemsize)
            links = links.astype(f"S{width}")
            queries = queries.astype(f"S{width}")
        idx = np.searchsorted(links, queries)
        idx_c = np.minimum(idx, len(links) - 1)
        hit = links[idx_c] == queries
        starts = np.where(hit, self.run_starts[:-1][idx_c], 0)
        ends = np.where(hit, self.run_starts[1:][idx_c], 0)
        return starts.astype(np.int64), ends.astype(np.int64)

    def row_cells(self, row: int) -> dict[str, Cell]:
        return {name: col.cell(row) for name, col in self.columns.items()}

    def subset(self, mask: np.ndarray) -> "TableData":
        idx = np.flatnonzero(mask)
        out = TableData(self.spec, {n: c.take(idx) for n, c in self.columns.items()}, len(idx))
        out.key_bytes = self.key_bytes[idx]
        out.link_bytes = self.link_bytes[idx]
        out.root_prefix_bytes = self.root_prefix_bytes[idx]
        out.build_runs()
        return out


class _ColumnBuilder:
    """Accumulates one column across chunks and finalizes a typed array."""

    def __init__(self, table: str, name: str, ctype: str):
        self.table = table
        self.name = name
        self.ctype = ctype
        self.chunks: list[np.ndarray] = []
        self.vocab: dict[str, int] = {}
        self.categories: list[str] = []

    def add_chunk(self, cells: list[str], first_row: int) -> None:
        if self.ctype == NUMERICAL:
            try:
                arr = np.array(
                    [c if c != "" else "nan" for c in cells], dtype=np.float64
                )
            except ValueError:
                arr = self._parse_slow(cells, first_row)
            bad = np.isinf(arr)
            if bad.any():
                row = first_row + int(np.argmax(bad)) + 1
                raise DataError(
                    f"table {self.table!r}, row {row}, column {self.name!r}: "
                    f"non-finite numerical value"
                )
            self.chunks.append(arr)
        else:
            codes = np.empty(len(cells), dtype=np.int32)
            vocab = self.vocab
            for i, c in enumerate(cells):
                if c == "":
                    codes[i] = -1
                    continue
                code = vocab.get(c)
                if code is None:
                    code = len(self.categories)
                    vocab[c] = code
                    self.categories.append(c)
                codes[i] = code
            self.chunks.append(codes)

    def _parse_slow(self, cells: list[str], first_row: int) -> np.ndarray:
        arr = np.empty(len(cells), dtype=np.float64)
        for i, c in enumerate(cells):
            if c == "":
                arr[i] = np.nan
                continue
            try:
                arr[i] = float(c)
            except ValueError:
                raise DataError(
                    f"table {self.table!r}, row {first_row + i + 1}, column "
                    f"{self.name!r}: cannot parse {c!r} as a number"
                ) from None
        return arr

    def finish(self) -> Column:
        if self.ctype == NUMERICAL:
            values = np.concatenate(self.chunks) if self.chunks else np.empty(0)
            return NumericColumn(values)
        codes = (
            np.concatenate(self.chunks) if self.chunks else np.empty(0, dtype=np.int32)
        )
        return CategoricalColumn(codes, self.categories)


def _load_table(
    spec: TableSpec, path: Path, chunk_rows: int,
    optional_columns: frozenset[str] = frozenset(),
) -> TableData:
    if not path.exists():
        raise DataError(f"table {spec.name!r}: file not found: {path}")
    declared = list(spec.column_names)
    builders: dict[str, _ColumnBuilder] = {}
    for name, ctype in spec.columns:
        builders[name] = _ColumnBuilder(
            spec.name, name, NUMERICAL if ctype == NUMERICAL else CATEGORICAL
        )
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"table {spec.name!r}: {path} is empty (no header)") from None
        unknown = [h for h in header if h not in builders]
        if unknown:
            raise DataError(f"table {spec.name!r}: unknown header columns {unknown}")
        absent = [c for c in declared if c not in header]
        missing = [c for c in absent if c not in optional_columns]
        if missing:
            raise DataError(f"table {spec.name!r}: header lacks declared columns {missing}")
        declared = [c for c in declared if c in header]
        positions = {name: header.index(name) for name in declared}
        width = len(header)

        n_rows = 0
        pending: list[list[str]] = []

        def flush():
            nonlocal pending
            if not pending:
                return
            cols = list(zip(*pending))
            first = n_rows - len(pending)
            for name in declared:
                builders[name].add_chunk(list(cols[positions[name]]), first)
            pending = []

        for row in reader:
            if len(row) != width:
                raise DataError(
                    f"table {spec.name!r}, row {n_rows + 1}: expected {width} fields, "
                    f"got {len(row)}"
                )
            pending.append(row)
            n_rows += 1
            if len(pending) >= chunk_rows:
                flush()
        flush()

    columns = {name: builders[name].finish() for name in declared}
    for name in spec.column_names:
        if name not in columns:  # optional column absent: all missing
            ctype = spec.column_type(name)
            if ctype == NUMERICAL:
                columns[name] = NumericColumn(np.full(n_rows, np.nan))
            else:
                columns[name] = CategoricalColumn(
                    np.full(n_rows, -1, dtype=np.int32), []
                )
    return TableData(spec, columns, n_rows)


@dataclass
class Dataset:
    """A loaded multi-table dataset keyed and indexed for analysis."""

    schema: Schema
    tables: dict[str, TableData]
    target: str | None = None
    orphan_drops: dict[str, int] = field(default_factory=dict)

    @property
    def root(self) -> TableData:
        return self.tables[self.schema.root]

    @property
    def n_instances(self) -> int:
        return self.root.n_rows

    def root_keys(self) -> np.ndarray:
        return self.root.key_bytes

    def root_key_strings(self, row: int) -> tuple[str, ...]:
        return tuple(
            self.root.columns[k].cell(row) for k in self.root.spec.key
        )

    def target_column(self) -> CategoricalColumn:
        if self.target is None:
            raise InvalidArgument("dataset has no target column")
        col = self.root.columns[self.target]
        if not isinstance(col, CategoricalColumn):
            raise DataError(f"target column {self.target!r} must be Categorical")
        return col

    def class_labels(self) -> list[str]:
        col = self.target_column()
        return sorted(set(col.categories[c] for c in col.codes if c >= 0))

    def subset_by_root_rows(self, rows: np.ndarray) -> "Dataset":
        rows = np.asarray(rows)
        root = self.root
        keep_keys = np.sort(root.key_bytes[rows])
        new_tables: dict[str, TableData] = {}
        for name, table in self.tables.items():
            if name == self.schema.root:
                sub = TableData(
                    table.spec,
                    {n: c.take(rows) for n, c in table.columns.items()},
                    len(rows),
                )
                sub.key_bytes = table.key_bytes[rows]
                sub.link_bytes = table.link_bytes[rows]
                sub.root_prefix_bytes = table.root_prefix_bytes[rows]
                sub.build_runs()
                new_tables[name] = sub
            else:
                idx = np.searchsorted(keep_keys, table.root_prefix_bytes)
                idx_c = np.minimum(idx, max(len(keep_keys) - 1, 0))
                mask = (
                    (keep_keys[idx_c] == table.root_prefix_bytes)
                    if len(keep_keys)
                    else np.zeros(table.n_rows, dtype=bool)
                )
                new_tables[name] = table.subset(mask)
        return Dataset(self.schema, new_tables, self.target, dict(self.orphan_drops))

    def write_csv(self, out_dir: str | Path) -> dict[str, Path]:
        """Write every table back to CSV (header + typed cells).

        Reloading the written files yields cell-identical tables; numbers
        are emitted with shortest round-trip formatting.
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths: dict[str, Path] = {}
        for name, table in self.tables.items():
            path = out_dir / f"{name.replace('/', '_')}.csv"
            with open(path, "w", encoding="utf-8", newline="") as handle:
                writer = csv.writer(handle)
                names = list(table.spec.column_names)
                writer.writerow(names)
                cols = [table.columns[n] for n in names]
                for row in range(table.n_rows):
                    writer.writerow([c.text(row) for c in cols])
            paths[name] = path
        return paths


def load_dataset(
    schema: Schema,
    files: dict[str, str | Path],
    target: str | None = None,
    allow_orphans: bool = False,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    optional_columns: set[str] | None = None,
) -> Dataset:
    """Load, type, sort, and index all tables of a multi-table dataset.

    ``files`` maps table names (or full paths like 'Vehicles/Users') to CSV
    paths.  Orphan child rows (no matching parent) raise unless
    ``allow_orphans`` is set, in which case they are dropped and counted.
    ``optional_columns`` may be absent from the headers (e.g. the target
    column at deployment time); they load as all-missing.
    """
    resolved: dict[str, Path] = {}
    for name, path in files.items():
        spec = schema.resolve_path(name)
        if spec.name in resolved:
            raise InvalidArgument(f"table {spec.name!r} given twice in the file map")
        resolved[spec.name] = Path(path)
    for table in schema.tables:
        if table.name not in resolved:
            raise InvalidArgument(f"no data file for table {table.name!r}")
    if target is not None:
        root_spec = schema.table(schema.root)
        if target not in root_spec.column_names:
            raise SchemaError(f"target {target!r} is not a root-table column")
        if root_spec.column_type(target) != CATEGORICAL:
            raise SchemaError(f"target {target!r} must be Categorical")

    optional = frozenset(optional_columns or ())
    root_key = schema.table(schema.root).key
    # Parents first, so orphan filtering cascades down the tree.
    by_depth = sorted(schema.tables, key=lambda t: (len(schema.path_of(t.name)), t.name))
    tables: dict[str, TableData] = {}
    orphan_drops: dict[str, int] = {}
    for spec in by_depth:
        data = _load_table(spec, resolved[spec.name], chunk_rows, optional - set(spec.key))
        parent_key = schema.table(spec.parent).key if spec.parent else spec.key
        data.build_keys(parent_key, root_key)
        if spec.parent is not None:
            data.sort_by_key()
        data.build_runs()
        tables[spec.name] = data

    root = tables[schema.root]
    if root.n_rows == 0:
        raise DataError(f"root table {schema.root!r} has no rows")
    sorted_root = np.sort(root.key_bytes)
    if len(sorted_root) > 1 and np.any(sorted_root[1:] == sorted_root[:-1]):
        dup = sorted_root[np.flatnonzero(sorted_root[1:] == sorted_root[:-1])[0]]
        raise DataError(
            f"root table {schema.root!r}: duplicate instance key "
            f"{dup.decode(errors='replace')!r}"
        )

    for spec in by_depth:
        if spec.parent is None:
            continue
        table = tables[spec.name]
        parent = tables[spec.parent]
        parent_keys = (
            sorted_root if spec.parent == schema.root else parent.key_bytes
        )
        idx = np.searchsorted(parent_keys, table.link_bytes)
        idx_c = np.minimum(idx, max(len(parent_keys) - 1, 0))
        matched = (
            (parent_keys[idx_c] == table.link_bytes)
            if len(parent_keys)
            else np.zeros(table.n_rows, dtype=bool)
        )
        if not matched.all():
            count = int((~matched).sum())
            if not allow_orphans:
                row = int(np.argmax(~matched))
                raise DataError(
                    f"table {spec.name!r}: {count} orphan row(s) without a parent, "
                    f"first key {table.key_bytes[row].decode(errors='replace')!r} "
                    f"(use allow_orphans to drop them)"
                )
            table = table.subset(matched)
            tables[spec.name] = table
            orphan_drops[spec.name] = count
        if spec.relation == REL_ONE_TO_ONE and table.n_rows > 1:
            dup_link = table.link_bytes[1:] == table.link_bytes[:-1]
            if np.any(dup_link):
                key = table.link_bytes[int(np.argmax(dup_link))]
                raise DataError(
                    f"table {spec.name!r}: duplicate 0:1 child for parent key "
                    f"{key.decode(errors='replace')!r}"
                )
        if schema.children(spec.name) and table.n_rows > 1:
            dup_full = table.key_bytes[1:] == table.key_bytes[:-1]
            if np.any(dup_full):
                key = table.key_bytes[int(np.argmax(dup_full))]
                raise DataError(
                    f"table {spec.name!r}: duplicate key "
                    f"{key.decode(errors='replace')!r} but the table has children"
                )

    return Dataset(schema, tables, target, orphan_drops)


def split(
    dataset: Dataset, train_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Seeded instance-level split; child rows follow their root instance."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidArgument(f"train fraction must be in (0, 1), got {train_fraction}")
    n = dataset.n_instances
    rng = np.random.default_rng([seed, STREAM_SPLIT])
    perm = rng.permutation(n)
    n_train = int(round(n * train_fraction))
    n_train = min(max(n_train, 1), n - 1) if n > 1 else n_train
    train_rows = np.sort(perm[:n_train])
    test_rows = np.sort(perm[n_train:])
    return (
        dataset.subset_by_root_rows(train_rows),
        dataset.subset_by_root_rows(test_rows),
    )


def dataset_from_csv_texts(
    schema: Schema, texts: dict[str, str], target: str | None = None, **kwargs
) -> Dataset:
    """Test helper: load a dataset from in-memory CSV strings."""
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        files = {}
        for name, text in texts.items():
            p = Path(tmp) / f"{name.replace('/', '_')}.csv"
            p.write_text(text, encoding="utf-8")
            files[name] = p
        return load_dataset(schema, files, target=target, **kwargs)
