"""MDL-driven multi-table AutoML.

The package covers the full pipeline: schema-described multi-table data,
prior-driven aggregate construction, optimal supervised discretization and
value grouping, a weight-learning selective naive Bayes classifier,
per-instance additive explanations, and a JSON analysis report.
"""

__version__ = "0.1.0"

from .errors import DataError, InvalidArgument, ModlError, SchemaError

__all__ = [
    "DataError",
    "InvalidArgument",
    "ModlError",
    "SchemaError",
    "__version__",
]
