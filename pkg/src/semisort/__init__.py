"""Parallel semisort, histogram and collect-reduce.

Reorders records so equal-keyed records become contiguous — without
sorting — using sampling-based heavy/light bucketing, exact-count blocked
distribution and recursive refinement. Stable, race-free, deterministic
for a fixed seed.
"""

from .adapters import (
    BytesKeyAdapter,
    KeyAdapter,
    UInt128KeyAdapter,
    UIntKeyAdapter,
    adapter_for,
)
from .aggregate import KeyedResult, ReduceSpec, collect_reduce, histogram
from .core import (
    BucketPlan,
    HeavyTable,
    Telemetry,
    WorkBuffers,
    assign_bucket_ids,
    base_case_eq,
    base_case_lt,
    column_major_exclusive_scan,
    count_into_matrix,
    distribute,
    get_bucket_id,
    local_refine,
    sample_and_bucket,
    semisort,
)
from .datagen import DistributionSpec, InputStats, compute_stats, generate
from .errors import (
    ConfigurationError,
    ContractError,
    InputFormatError,
    SemisortError,
)
from .oracle import (
    ValidationReport,
    multiset_equal,
    oracle_collect_reduce,
    validate_semisort,
)
from .params import TuningParams
from .parallel import get_default_workers, set_default_workers
from .records import RecordArray, read_records, write_records

__version__ = "0.1.0"

__all__ = [
    "BucketPlan",
    "BytesKeyAdapter",
    "ConfigurationError",
    "ContractError",
    "DistributionSpec",
    "HeavyTable",
    "InputFormatError",
    "InputStats",
    "KeyAdapter",
    "KeyedResult",
    "RecordArray",
    "ReduceSpec",
    "SemisortError",
    "Telemetry",
    "TuningParams",
    "UInt128KeyAdapter",
    "UIntKeyAdapter",
    "ValidationReport",
    "WorkBuffers",
    "adapter_for",
    "assign_bucket_ids",
    "base_case_eq",
    "base_case_lt",
    "collect_reduce",
    "column_major_exclusive_scan",
    "compute_stats",
    "count_into_matrix",
    "distribute",
    "generate",
    "get_bucket_id",
    "get_default_workers",
    "histogram",
    "local_refine",
    "multiset_equal",
    "oracle_collect_reduce",
    "read_records",
    "sample_and_bucket",
    "semisort",
    "set_default_workers",
    "validate_semisort",
    "write_records",
]
