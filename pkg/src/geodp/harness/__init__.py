"""Experiment harness: benchmarks, the shape pipeline, the DP audit and file I/O."""

from .audit import AuditReport, PolarGrid, dp_ratio_audit, worst_case_pair
from .bench import BenchmarkConfig, ResultRow, replicate_rng, run_benchmark, utility_distance
from .io import load_landmarks, read_results, summarize, write_landmarks, write_results, write_summary
from .shapes import ShapeOptions, ShapeOutputs, gen_synthetic_corpus, run_shape_pipeline

__all__ = [
    "AuditReport",
    "BenchmarkConfig",
    "PolarGrid",
    "ResultRow",
    "ShapeOptions",
    "ShapeOutputs",
    "dp_ratio_audit",
    "gen_synthetic_corpus",
    "load_landmarks",
    "read_results",
    "replicate_rng",
    "run_benchmark",
    "run_shape_pipeline",
    "summarize",
    "utility_distance",
    "worst_case_pair",
    "write_landmarks",
    "write_results",
    "write_summary",
]
