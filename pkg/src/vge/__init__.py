"""Volume entropy of metric graphs and square-tiled translation surfaces."""
from .errors import (
    ConvergenceError,
    DisconnectedTruncation,
    EntropyDivergence,
    HypothesisViolation,
    InputFormatError,
    NoSingularities,
    ResourceLimitError,
    TailConditionError,
    VGEError,
)
from .graph import HeadEdge, MetricGraph, TailFamily, merged_edge_order
from .kernels import BACKEND

__version__ = "0.1.0"
