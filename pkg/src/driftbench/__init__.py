"""driftbench: streaming image classification under fixed memory budgets.

Four methods over one stream contract: a Hoeffding tree and an adaptive
random forest consuming embeddings, and two reservoir methods consuming
raw images — uniform stratified sampling (RBC) and per-batch dataset
distillation (DBC). The bench subpackage runs them side by side and
reports comparative accuracy/time tables.
"""

from .data import (
    EmbeddingTable,
    ImageDataset,
    LookupEmbedder,
    RandomProjectionEmbedder,
    StreamBatch,
    concat_datasets,
    load_cifar10_binary,
    load_embeddings,
    stream_batches,
    write_embeddings,
)
from .dbc import DbcConfig, DistillationClassifier, TrainingTrace, run_dbc
from .distill import (
    DistilledReservoir,
    DistillStepReport,
    distill_step,
    export_distilled,
    init_distilled,
    matcher_reinit,
)
from .errors import ConfigError, FormatError, InitializationError, MissingEmbeddingError
from .forest import AdaptiveRandomForestClassifier, weighted_vote
from .hoeffding import (
    HoeffdingTreeClassifier,
    SplitRecord,
    hoeffding_epsilon,
    info_gain,
    split_condition,
)
from .metrics import (
    LogicalClock,
    RunEvent,
    RunMetrics,
    WallClock,
    read_events_jsonl,
    summarize_events,
    write_events_jsonl,
)
from .reservoir import (
    ClassReservoir,
    RbcConfig,
    ReservoirSamplingClassifier,
    StratifiedReservoir,
    run_rbc,
    split_capacity,
)
from .training import RisingLossStop, train_model_on_reservoir, validate

__version__ = "0.1.0"

__all__ = [
    "AdaptiveRandomForestClassifier",
    "ClassReservoir",
    "ConfigError",
    "DbcConfig",
    "DistillStepReport",
    "DistillationClassifier",
    "DistilledReservoir",
    "EmbeddingTable",
    "FormatError",
    "HoeffdingTreeClassifier",
    "ImageDataset",
    "InitializationError",
    "LogicalClock",
    "LookupEmbedder",
    "MissingEmbeddingError",
    "RandomProjectionEmbedder",
    "RbcConfig",
    "ReservoirSamplingClassifier",
    "RisingLossStop",
    "RunEvent",
    "RunMetrics",
    "SplitRecord",
    "StratifiedReservoir",
    "StreamBatch",
    "TrainingTrace",
    "WallClock",
    "concat_datasets",
    "distill_step",
    "export_distilled",
    "hoeffding_epsilon",
    "info_gain",
    "init_distilled",
    "load_cifar10_binary",
    "load_embeddings",
    "matcher_reinit",
    "read_events_jsonl",
    "run_dbc",
    "run_rbc",
    "split_capacity",
    "split_condition",
    "stream_batches",
    "summarize_events",
    "train_model_on_reservoir",
    "validate",
    "weighted_vote",
    "write_embeddings",
    "write_events_jsonl",
]
