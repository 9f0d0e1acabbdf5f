"""Scikit-learn-style front end for the ``modl`` command-line pipeline.

The estimator accepts the dict-based multi-table specification::

    X = {
        "main_table": (accidents_df, ["AccidentId"]),
        "additional_data_tables": {
            "Vehicles": (vehicles_df, ["AccidentId", "VehicleId"]),
            "Vehicles/Users": (users_df, ["AccidentId", "VehicleId"]),
            "Places": (places_df, ["AccidentId"], True),   # True = 0:1
        },
    }

materializes it as CSV files plus a schema JSON, and drives the CLI via a
subprocess.  All numbers returned by the wrapper are parsed straight from
the CLI's output files, never recomputed.
"""

from .errors import BridgeError, DataFormatError, InternalError, NotFittedError, UsageError
from .estimator import MultiTableClassifier
from .spec import schema_to_spec, spec_to_schema

__all__ = [
    "BridgeError",
    "DataFormatError",
    "InternalError",
    "MultiTableClassifier",
    "NotFittedError",
    "UsageError",
    "schema_to_spec",
    "spec_to_schema",
]
