"""Fidelity and utility evaluation of synthetic relational databases."""

from .aggregation import AggregatedTable, AggregationSpec, child_row_counts, relational_aggregation
from .detection import (
    DetectionResult,
    binomial_detection_test,
    data_copying_diagnostic,
    discriminative_detection,
    discriminative_detection_with_aggregation,
    logistic_detection,
    parent_child_detection,
)
from .learners import LearnerSpec
from .metrics import BootstrapSpec, MetricResult
from .ranking import rank_correlation
from .relational import (
    ColumnMeta,
    Database,
    ForeignKey,
    Relationship,
    Schema,
    Table,
    TableMeta,
    denormalize,
    load_database,
    save_database,
    validate,
)
from .utility import UtilityResult, UtilityTask, tstr

__version__ = "0.1.0"

__all__ = [
    "AggregatedTable",
    "AggregationSpec",
    "BootstrapSpec",
    "ColumnMeta",
    "Database",
    "DetectionResult",
    "ForeignKey",
    "LearnerSpec",
    "MetricResult",
    "Relationship",
    "Schema",
    "Table",
    "TableMeta",
    "UtilityResult",
    "UtilityTask",
    "binomial_detection_test",
    "child_row_counts",
    "data_copying_diagnostic",
    "denormalize",
    "discriminative_detection",
    "discriminative_detection_with_aggregation",
    "load_database",
    "logistic_detection",
    "parent_child_detection",
    "rank_correlation",
    "relational_aggregation",
    "save_database",
    "tstr",
    "validate",
]
