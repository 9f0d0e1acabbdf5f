"""Synthetic multi-table fixtures with a known Bayes-optimal signal.

The snowflake generator plants one ground-truth dependency: the chance of
a lethal accident is a probit of the oldest occupant's birth year (the
minimum over all users), every other column being pure noise.  The noise
scale is calibrated so that scoring by the planted quantity reaches a
requested AUC (the generator's oracle), which gives pipeline tests an
absolute yardstick that no model can beat.

The wide-table generator streams a root-only CSV of a requested size for
memory and thread-scaling runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .report import auc

_GEN_STREAM = 77
_LABEL_STREAM = 78

ACCIDENTS_SCHEMA_DICT = {
    "root": "Accidents",
    "tables": [
        {
            "name": "Accidents",
            "key": ["AccidentId"],
            "columns": [
                {"name": "Light", "type": "Categorical"},
                {"name": "InAgglomeration", "type": "Categorical"},
                {"name": "Hour", "type": "Numerical"},
                {"name": "Gravity", "type": "Categorical"},
            ],
        },
        {
            "name": "Vehicles",
            "parent": "Accidents",
            "relation": "0n",
            "key": ["AccidentId", "VehicleId"],
            "columns": [
                {"name": "Category", "type": "Categorical"},
                {"name": "Power", "type": "Numerical"},
            ],
        },
        {
            "name": "Users",
            "parent": "Vehicles",
            "relation": "0n",
            "key": ["AccidentId", "VehicleId"],
            "columns": [
                {"name": "BirthYear", "type": "Numerical"},
                {"name": "Sex", "type": "Categorical"},
            ],
        },
        {
            "name": "Places",
            "parent": "Accidents",
            "relation": "01",
            "key": ["AccidentId"],
            "columns": [
                {"name": "RoadType", "type": "Categorical"},
                {"name": "Lanes", "type": "Numerical"},
            ],
        },
    ],
}

_LIGHTS = ["Day", "Dusk", "Night", "NightNoStreetLight"]
_CATEGORIES = ["Car", "Truck", "Bike", "Scooter"]
_ROADS = ["Urban", "Rural", "Highway"]


@dataclass
class AccidentsFixture:
    texts: dict[str, str]
    schema_dict: dict
    target: str
    oracle_auc: float
    labels: np.ndarray
    min_birth: np.ndarray
    noise_scale: float

    def write(self, out_dir: str | Path) -> "FixturePaths":
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        schema_path = out_dir / "schema.json"
        schema_path.write_text(json.dumps(self.schema_dict, indent=2), encoding="utf-8")
        files = {}
        for name, text in self.texts.items():
            path = out_dir / f"{name.replace('/', '_')}.csv"
            path.write_text(text, encoding="utf-8")
            files[name] = path
        return FixturePaths(schema_path, files, self.target, self.oracle_auc)


@dataclass
class FixturePaths:
    schema: Path
    files: dict[str, Path]
    target: str
    oracle_auc: float


def generate_accidents(
    n_accidents: int,
    seed: int,
    bayes_auc: float = 0.90,
    missing_rate: float = 0.03,
) -> AccidentsFixture:
    """Accidents-like snowflake with a planted min-birth-year signal."""
    rng = np.random.default_rng([seed, _GEN_STREAM])
    veh_counts = rng.integers(1, 4, size=n_accidents)
    acc_rows, veh_rows, usr_rows, plc_rows = [], [], [], []
    min_birth = np.full(n_accidents, np.inf)

    for i in range(n_accidents):
        a = f"a{i:06d}"
        light = _LIGHTS[int(rng.integers(len(_LIGHTS)))]
        agglo = "Yes" if rng.random() < 0.6 else "No"
        hour = int(rng.integers(0, 24))
        acc_rows.append((a, light, agglo, hour))
        for v in range(int(veh_counts[i])):
            vid = f"v{v}"
            cat = _CATEGORIES[int(rng.integers(len(_CATEGORIES)))]
            power = round(float(rng.uniform(40, 300)), 1)
            veh_rows.append(f"{a},{vid},{cat},{power}\n")
            n_users = int(rng.integers(1, 4))
            for u in range(n_users):
                first = v == 0 and u == 0
                if not first and rng.random() < missing_rate:
                    birth = ""
                else:
                    year = int(rng.integers(1930, 2005))
                    min_birth[i] = min(min_birth[i], year)
                    birth = str(year)
                sex = "M" if rng.random() < 0.55 else "F"
                usr_rows.append(f"{a},{vid},{birth},{sex}\n")
        if rng.random() < 0.92:
            road = _ROADS[int(rng.integers(len(_ROADS)))]
            lanes = int(rng.integers(1, 5))
            plc_rows.append(f"{a},{road},{lanes}\n")

    theta = float(np.quantile(min_birth, 0.35))

    def draw_labels(scale: float, trial: int) -> tuple[np.ndarray, float]:
        p_lethal = ndtr((theta - min_birth) / scale)
        lrng = np.random.default_rng([seed, _LABEL_STREAM, trial])
        labels = lrng.random(n_accidents) < p_lethal
        if labels.all() or not labels.any():
            labels[0] = not labels[0]
        scored = list(zip((-min_birth).tolist(), labels.tolist()))
        return labels, auc(scored)

    # Oracle AUC decreases as the noise scale grows; bisect to the target.
    lo, hi = 0.5, 400.0
    best = None
    for trial in range(40):
        mid = (lo + hi) / 2.0
        labels, got = draw_labels(mid, trial)
        if best is None or abs(got - bayes_auc) < abs(best[2] - bayes_auc):
            best = (mid, labels, got)
        if abs(got - bayes_auc) <= 0.004:
            break
        if got > bayes_auc:
            lo = mid
        else:
            hi = mid
    scale, labels, oracle = best

    acc_csv = ["AccidentId,Light,InAgglomeration,Hour,Gravity\n"]
    for (a, light, agglo, hour), lethal in zip(acc_rows, labels):
        grav = "Lethal" if lethal else "NonLethal"
        acc_csv.append(f"{a},{light},{agglo},{hour},{grav}\n")

    texts = {
        "Accidents": "".join(acc_csv),
        "Vehicles": "AccidentId,VehicleId,Category,Power\n" + "".join(veh_rows),
        "Vehicles/Users": "AccidentId,VehicleId,BirthYear,Sex\n" + "".join(usr_rows),
        "Places": "AccidentId,RoadType,Lanes\n" + "".join(plc_rows),
    }
    return AccidentsFixture(
        texts=texts,
        schema_dict=ACCIDENTS_SCHEMA_DICT,
        target="Gravity",
        oracle_auc=float(oracle),
        labels=np.asarray(labels),
        min_birth=min_birth,
        noise_scale=float(scale),
    )


WIDE_SCHEMA_TEMPLATE = {
    "root": "Rows",
    "tables": [
        {
            "name": "Rows",
            "key": ["Id"],
            "columns": [],
        }
    ],
}


def write_wide_table(
    path: str | Path,
    n_rows: int,
    n_numeric: int,
    seed: int,
    chunk: int = 20_000,
) -> dict:
    """Stream a root-only numeric CSV of about n_rows x n_numeric cells.

    Returns the matching schema dict.  The first column carries a weak
    signal for the binary target; everything else is noise.
    """
    rng = np.random.default_rng([seed, _GEN_STREAM, 2])
    path = Path(path)
    cols = [f"X{i:03d}" for i in range(n_numeric)]
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("Id," + ",".join(cols) + ",Label\n")
        written = 0
        while written < n_rows:
            m = min(chunk, n_rows - written)
            block = rng.uniform(0, 1000, size=(m, n_numeric)).round(3)
            y = (block[:, 0] + rng.normal(0, 300, size=m) > 500).astype(int)
            lines = []
            for r in range(m):
                row_id = written + r
                cells = ",".join(repr(float(x)) for x in block[r])
                lines.append(f"r{row_id:07d},{cells},{'pos' if y[r] else 'neg'}\n")
            handle.write("".join(lines))
            written += m
    schema = json.loads(json.dumps(WIDE_SCHEMA_TEMPLATE))
    schema["tables"][0]["columns"] = [
        {"name": c, "type": "Numerical"} for c in cols
    ] + [{"name": "Label", "type": "Categorical"}]
    return schema
