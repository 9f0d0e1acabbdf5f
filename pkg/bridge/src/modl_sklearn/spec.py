"""Dict-based multi-table specification <-> schema JSON.

The dict form pairs each table with its key column list; additional
tables are keyed by their path ("Vehicles", "Vehicles/Users", "Places"),
and a trailing ``True`` marks a 0:1 relationship instead of 0:n.
"""

from __future__ import annotations

from typing import Any, Mapping

import pandas as pd
from pandas.api.types import is_numeric_dtype

from .errors import UsageError

MAIN_TABLE_NAME = "Main"


def _columns_for(frame: pd.DataFrame, keys: list[str], exclude=()) -> list[dict]:
    columns = []
    for name in frame.columns:
        if name in exclude:
            continue
        if name in keys:
            columns.append({"name": name, "type": "Key"})
        elif is_numeric_dtype(frame[name]):
            columns.append({"name": name, "type": "Numerical"})
        else:
            columns.append({"name": name, "type": "Categorical"})
    return columns


def _unpack_entry(path: str, entry: Any) -> tuple[pd.DataFrame, list[str], bool]:
    if not isinstance(entry, tuple) or len(entry) not in (2, 3):
        raise UsageError(
            f"table {path!r}: expected (frame, keys) or (frame, keys, True)"
        )
    frame, keys = entry[0], entry[1]
    one_to_one = bool(entry[2]) if len(entry) == 3 else False
    if not isinstance(frame, pd.DataFrame):
        raise UsageError(f"table {path!r}: first element must be a DataFrame")
    keys = list(keys)
    missing = [k for k in keys if k not in frame.columns]
    if missing:
        raise UsageError(f"table {path!r}: key columns missing from frame: {missing}")
    return frame, keys, one_to_one


def spec_to_schema(spec: Mapping[str, Any], target: str) -> tuple[dict, dict[str, pd.DataFrame]]:
    """Convert the dict spec into (schema JSON dict, path -> frame map).

    The main table is named 'Main' in the schema; additional tables take
    the last component of their path as table name.
    """
    if "main_table" not in spec:
        raise UsageError("spec lacks 'main_table'")
    main_frame, main_keys, _ = _unpack_entry("main_table", spec["main_table"])
    if target in main_frame.columns:
        raise UsageError(f"main table must not contain the target column {target!r}")

    tables = [
        {
            "name": MAIN_TABLE_NAME,
            "key": main_keys,
            "columns": _columns_for(main_frame, main_keys)
            + [{"name": target, "type": "Categorical"}],
        }
    ]
    frames: dict[str, pd.DataFrame] = {MAIN_TABLE_NAME: main_frame}

    additional = spec.get("additional_data_tables", {}) or {}
    paths = sorted(additional, key=lambda p: (p.count("/"), p))
    known_paths = {"": MAIN_TABLE_NAME}
    for path in paths:
        frame, keys, one_to_one = _unpack_entry(path, additional[path])
        parent_path, _, name = path.rpartition("/")
        if parent_path not in known_paths:
            raise UsageError(f"table {path!r}: parent path {parent_path!r} not declared")
        parent_keys = (
            main_keys if parent_path == "" else list(additional[parent_path][1])
        )
        if keys[: len(parent_keys)] != parent_keys:
            raise UsageError(
                f"table {path!r}: keys {keys} must extend the parent keys {parent_keys}"
            )
        tables.append(
            {
                "name": name,
                "parent": known_paths[parent_path],
                "relation": "01" if one_to_one else "0n",
                "key": keys,
                "columns": _columns_for(frame, keys),
            }
        )
        known_paths[path] = name
        frames[path] = frame
    return {"root": MAIN_TABLE_NAME, "tables": tables}, frames


def schema_to_spec(schema: Mapping[str, Any]) -> dict:
    """Reconstruct the dict-spec structure (frames become None placeholders)."""
    by_name = {t["name"]: t for t in schema["tables"]}
    root = by_name[schema["root"]]

    def path_of(name: str) -> str:
        chain: list[str] = []
        cursor = by_name[name]
        while "parent" in cursor:
            chain.append(cursor["name"])
            cursor = by_name[cursor["parent"]]
        return "/".join(reversed(chain))

    additional: dict[str, tuple] = {}
    for table in schema["tables"]:
        if table["name"] == schema["root"]:
            continue
        path = path_of(table["name"])
        entry: tuple = (None, list(table["key"]))
        if table.get("relation") == "01":
            entry = (None, list(table["key"]), True)
        additional[path] = entry
    return {
        "main_table": (None, list(root["key"])),
        "additional_data_tables": additional,
    }
