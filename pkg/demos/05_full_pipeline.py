"""End to end: generate a snowflake, train, read the report, explain.

Everything here goes through the same entry points the CLI uses, so the
artifacts in ./demo_out match what `modl train` would produce.
"""

import csv
import json
import shutil
from pathlib import Path

from modl.cli import main
from modl.synthetic import generate_accidents

work = Path("demo_out")
shutil.rmtree(work, ignore_errors=True)
fixture = generate_accidents(600, seed=3)
paths = fixture.write(work / "data")
print(f"Generated 600 accidents; the generator's oracle AUC is "
      f"{fixture.oracle_auc:.3f} (no model can beat it on average).")

args = [
    "train",
    "--schema", str(paths.schema),
    "--target", "Gravity",
    "--n-features", "50",
    "--seed", "3",
    "--out", str(work / "run"),
]
for name, path in paths.files.items():
    args += ["--data", f"{name}={path}"]
assert main(args) == 0

report = json.loads((work / "run" / "report.json").read_text())
print("\nTop of the preparation panel (variable, Level):")
for entry in report["preparation"][:5]:
    print(f"  {entry['level']:.4f}  {entry['name']}")
print("\nSelected variables and weights:")
for var in report["modeling"]["variables"]:
    print(f"  w={var['weight']:.4f}  {var['name']}")
print(f"\nTest accuracy {report['evaluation']['test']['accuracy']:.3f}, "
      f"test AUC {report['evaluation']['test']['auc']:.3f}")

xai_args = [
    "explain",
    "--schema", str(paths.schema),
    "--model", str(work / "run" / "model.json"),
    "--class-of-interest", "Lethal",
    "-k", "2",
    "--out", str(work / "xai"),
]
for name, path in paths.files.items():
    xai_args += ["--data", f"{name}={path}"]
assert main(xai_args) == 0

print("\nMost at-risk instances and what drives them:")
with open(work / "xai" / "shapley.csv", newline="") as handle:
    rows = list(csv.reader(handle))
print(" ", " | ".join(rows[0][:4]))
for row in rows[1:4]:
    print(" ", " | ".join(row[:4]))
print("\nArtifacts: demo_out/run/{model,report,timing}.json, demo_out/xai/*.csv")
