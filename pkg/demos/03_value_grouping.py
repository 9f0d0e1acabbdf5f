"""Supervised grouping of categorical values.

Same coding-length game as discretization, but the model family is the
set partitions of the observed values, priced by ln V + ln B(V, K).
"""

import numpy as np

from modl import preparation as prep

print("Four values; a/b lean class x, c/d lean class y (n=200):")
rng = np.random.default_rng(1)
values, classes = [], []
for v, lean in (("a", 0), ("b", 0), ("c", 1), ("d", 1)):
    for _ in range(50):
        values.append(v)
        classes.append(lean if rng.random() < 0.85 else 1 - lean)
model = prep.optimize_grouping(values, classes, ["x", "y"])
null = prep.null_grouping_cost(np.bincount(classes), model.v_distinct)
for part in model.parts:
    flag = "  <- catch-all for unseen values" if part.is_catchall else ""
    print(f"  {part.label(model.kind):>10}  counts {part.counts.tolist()}{flag}")
print(f"  cost {model.total_nats:.4f} vs null {null:.4f}, "
      f"Level {prep.level(model, null):.4f}")

print("\nPerfectly predictive pair of values (3 of each):")
tiny = prep.optimize_grouping(
    ["u", "u", "u", "w", "w", "w"], [0, 0, 0, 1, 1, 1], ["x", "y"]
)
print(f"  groups: {[p.label(tiny.kind) for p in tiny.parts]}, "
      f"cost {tiny.total_nats:.4f} nats")

print("\nShuffled labels over 12 values: everything merges back together")
noise = prep.optimize_grouping(
    [f"v{int(i)}" for i in rng.integers(0, 12, size=400)],
    rng.integers(0, 2, size=400),
    ["x", "y"],
)
print(f"  groups: {noise.part_count} (null model)")

print("\nMissing cells act as one more value; deployment sends unseen")
print("values to the catch-all group, so the model never refuses a row.")
