"""Physics-guided, non-parametric phase-space embeddings for time series."""

from .core import (
    EmbeddingConfig,
    TimeSeries,
    TokenMatrix,
    Trajectory,
    char_poly,
    invert,
    jacobi_eigh,
    validate_series,
)
from .dynamics import DynamicsReport, analyze, cc_method, dominant_period, select_tau
from .embed import embed_series, hd_embed, id_embed, pad_and_unfold, pc_embed, td_embed

__version__ = "0.1.0"

__all__ = [
    "DynamicsReport",
    "EmbeddingConfig",
    "TimeSeries",
    "TokenMatrix",
    "Trajectory",
    "analyze",
    "cc_method",
    "char_poly",
    "dominant_period",
    "embed_series",
    "hd_embed",
    "id_embed",
    "invert",
    "jacobi_eigh",
    "pad_and_unfold",
    "pc_embed",
    "select_tau",
    "td_embed",
    "validate_series",
]
