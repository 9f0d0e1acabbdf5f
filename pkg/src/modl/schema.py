"""Multi-table schema description and validation.

A schema is a tree of tables: one root holding the instances to analyze,
and secondary/tertiary tables in 0:1 or 0:n relation to their parent.
Every non-root table's key must extend its parent's key as a prefix; a
child row is linked to the parent row matching it on the parent's key
columns.

The normative on-disk form is a single JSON document::

    {"root": "Accidents",
     "tables": [
       {"name": "Accidents", "key": ["AccidentId"],
        "columns": [{"name": "Light", "type": "Categorical"}, ...]},
       {"name": "Vehicles", "parent": "Accidents", "relation": "0n",
        "key": ["AccidentId", "VehicleId"], "columns": [...]},
       ...]}

Key columns may be listed with type "Key" or omitted; they are always
treated as identifiers, never as analysis variables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError

NUMERICAL = "Numerical"
CATEGORICAL = "Categorical"
KEY = "Key"

REL_ROOT = "root"
REL_ZERO_TO_MANY = "0n"
REL_ONE_TO_ONE = "01"

_VALUE_TYPES = (NUMERICAL, CATEGORICAL)


@dataclass(frozen=True)
class TableSpec:
    """One table: its key, its typed columns, and its relation to the parent."""

    name: str
    key: tuple[str, ...]
    columns: tuple[tuple[str, str], ...]  # (name, type) pairs, keys included
    parent: str | None = None
    relation: str = REL_ROOT

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns)

    def column_type(self, name: str) -> str:
        for col, ctype in self.columns:
            if col == name:
                return ctype
        raise SchemaError(f"table {self.name!r}: unknown column {name!r}")

    def value_columns(self) -> tuple[tuple[str, str], ...]:
        """Analysis columns: everything typed Numerical or Categorical."""
        return tuple((n, t) for n, t in self.columns if t in _VALUE_TYPES)


@dataclass(frozen=True)
class Schema:
    """A validated star or snowflake of tables."""

    root: str
    tables: tuple[TableSpec, ...]
    _by_name: dict[str, TableSpec] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {t.name: t for t in self.tables})

    def table(self, name: str) -> TableSpec:
        spec = self._by_name.get(name)
        if spec is None:
            raise SchemaError(f"unknown table {name!r}")
        return spec

    def children(self, name: str) -> tuple[TableSpec, ...]:
        return tuple(t for t in self.tables if t.parent == name)

    def path_of(self, name: str) -> tuple[str, ...]:
        """Root-to-table chain of table names, root excluded.

        The root itself maps to the empty path.
        """
        chain: list[str] = []
        spec = self.table(name)
        while spec.parent is not None:
            chain.append(spec.name)
            spec = self.table(spec.parent)
        if spec.name != self.root:
            raise SchemaError(f"table {name!r} does not descend from the root")
        return tuple(reversed(chain))

    def resolve_path(self, path: str | tuple[str, ...]) -> TableSpec:
        """Resolve 'Vehicles/Users' (or a bare unique table name) to its spec."""
        if isinstance(path, str):
            parts = tuple(p for p in path.split("/") if p)
        else:
            parts = tuple(path)
        if not parts:
            return self.table(self.root)
        if len(parts) == 1:
            return self.table(parts[0])  # table names are unique
        spec = self.table(parts[-1])
        if self.path_of(parts[-1]) != parts:
            raise SchemaError(f"path {'/'.join(parts)!r} does not match the schema tree")
        return spec

    @property
    def depth(self) -> int:
        return max((len(self.path_of(t.name)) for t in self.tables), default=0)

    def to_json_dict(self) -> dict:
        tables = []
        for t in self.tables:
            entry: dict = {
                "name": t.name,
                "key": list(t.key),
                "columns": [{"name": n, "type": ty} for n, ty in t.columns],
            }
            if t.parent is not None:
                entry["parent"] = t.parent
                entry["relation"] = t.relation
            tables.append(entry)
        return {"root": self.root, "tables": tables}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _parse_table_entry(entry: dict, root_name: str) -> TableSpec:
    name = entry.get("name")
    if not name or not isinstance(name, str):
        raise SchemaError("table entry without a valid 'name'")
    where = f"table {name!r}"
    key = entry.get("key")
    if not key or not isinstance(key, list) or not all(isinstance(k, str) for k in key):
        raise SchemaError(f"{where}: 'key' must be a nonempty list of column names")
    declared: list[tuple[str, str]] = []
    seen: set[str] = set()
    for col in entry.get("columns", []):
        cname, ctype = col.get("name"), col.get("type")
        if not cname:
            raise SchemaError(f"{where}: column entry without a name")
        if ctype not in (NUMERICAL, CATEGORICAL, KEY):
            raise SchemaError(f"{where}, column {cname!r}: unknown type {ctype!r}")
        if cname in seen:
            raise SchemaError(f"{where}: duplicate column name {cname!r}")
        seen.add(cname)
        declared.append((cname, ctype))
    for cname, ctype in declared:
        if ctype == KEY and cname not in key:
            raise SchemaError(f"{where}: column {cname!r} typed 'Key' must appear in the key")
        if ctype != KEY and cname in key:
            raise SchemaError(f"{where}: key column {cname!r} must have type 'Key'")
    # Canonical order: key columns first (in key order), then value columns.
    ordered = [(k, KEY) for k in key] + [(n, t) for n, t in declared if t != KEY]

    parent = entry.get("parent")
    relation = entry.get("relation")
    if name == root_name:
        if parent is not None or relation not in (None, REL_ROOT):
            raise SchemaError(f"{where}: the root table cannot declare a parent")
        return TableSpec(name, tuple(key), tuple(ordered))
    if parent is None:
        raise SchemaError(f"{where}: non-root table must declare a parent")
    if relation not in (REL_ZERO_TO_MANY, REL_ONE_TO_ONE):
        raise SchemaError(
            f"{where}: relation must be '0n' or '01', got {relation!r}"
        )
    return TableSpec(name, tuple(key), tuple(ordered), parent=parent, relation=relation)


def parse_schema(document: str | dict | Path) -> Schema:
    """Parse and validate a schema JSON document (text, path, or dict)."""
    if isinstance(document, Path):
        document = document.read_text(encoding="utf-8")
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise SchemaError("schema document must be a JSON object")
    root_name = document.get("root")
    if not root_name:
        raise SchemaError("schema must name a 'root' table")
    entries = document.get("tables")
    if not isinstance(entries, list) or not entries:
        raise SchemaError("schema must list its tables under 'tables'")

    specs = [_parse_table_entry(entry, root_name) for entry in entries]
    by_name: dict[str, TableSpec] = {}
    for spec in specs:
        if spec.name in by_name:
            raise SchemaError(f"duplicate table name {spec.name!r}")
        by_name[spec.name] = spec
    if root_name not in by_name:
        raise SchemaError(f"root table {root_name!r} is not defined")
    roots = [s for s in specs if s.parent is None]
    if len(roots) != 1:
        raise SchemaError(f"exactly one root table required, found {[s.name for s in roots]}")

    for spec in specs:
        if spec.parent is None:
            continue
        parent = by_name.get(spec.parent)
        if parent is None:
            raise SchemaError(f"table {spec.name!r}: unknown parent {spec.parent!r}")
        if spec.key[: len(parent.key)] != parent.key:
            raise SchemaError(
                f"table {spec.name!r}: key {list(spec.key)} must extend its parent's "
                f"key {list(parent.key)} as a prefix"
            )
        # Cycle check: walk to the root, bounded by the table count.
        seen = {spec.name}
        cursor = parent
        while cursor.parent is not None:
            if cursor.name in seen:
                raise SchemaError(f"cycle in table relations at {cursor.name!r}")
            seen.add(cursor.name)
            cursor = by_name.get(cursor.parent)
            if cursor is None:
                raise SchemaError(f"table {spec.name!r}: broken parent chain")
        if cursor.name != root_name:
            raise SchemaError(f"table {spec.name!r} does not descend from the root")

    return Schema(root=root_name, tables=tuple(specs))
