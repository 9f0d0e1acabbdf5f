"""Constructing aggregate variables over a snowflake schema.

Variables are drawn from a hierarchical-uniform prior over expression
trees; cheap (shallow) shapes come up often, deep ones rarely, and every
variable knows its own construction cost in nats.
"""

import json

from modl import features as feat
from modl.dataset import dataset_from_csv_texts
from modl.schema import parse_schema
from modl.synthetic import generate_accidents

fixture = generate_accidents(200, seed=11)
schema = parse_schema(json.dumps(fixture.schema_dict))
print("Schema:", schema.root, "->", [t.name for t in schema.tables[1:]])

fs = feat.sample_features(schema, 15, seed=2, max_depth=2, target="Gravity")
print(f"\n{len(fs.features)} sampled features (name, prior nats):")
for f in sorted(fs.features, key=lambda f: f.prior_nats):
    print(f"  {f.prior_nats:7.4f}  {f.name}")

print("\nCanonical names parse back to the same expression:")
name = fs.features[0].name
print(" ", name, "->", feat.parse_feature(name, schema) == fs.features[0].expr)

dataset = dataset_from_csv_texts(schema, fixture.texts, target="Gravity")
expr = feat.parse_feature("Min(Vehicles, Min(Vehicles/Users, BirthYear))", schema)
print("\nEvaluating the planted signal for three instances:")
for row in range(3):
    key = dataset.root_key_strings(row)
    print(f"  {key[0]}: oldest occupant born", feat.evaluate_feature(expr, dataset, row))

flat = feat.flatten(dataset, fs, workers=1)
print(f"\nFlat table: {flat.n_rows} instances x {len(flat.names)} columns")
print("  (native root variables first, then the constructed aggregates)")
