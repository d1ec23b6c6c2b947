from .config import METHOD_IDS, BenchConfig, canonical_method, load_config, parse_config
from .report import format_report, load_summary, summarize_rows, write_summary
from .runners import make_embedder, prepare_data, run_benchmark, run_one, run_tree_method
from .synth import SyntheticSpec, make_synthetic_stream

__all__ = [
    "METHOD_IDS",
    "BenchConfig",
    "SyntheticSpec",
    "canonical_method",
    "format_report",
    "load_config",
    "load_summary",
    "make_embedder",
    "make_synthetic_stream",
    "parse_config",
    "prepare_data",
    "run_benchmark",
    "run_one",
    "run_tree_method",
    "summarize_rows",
    "write_summary",
]
