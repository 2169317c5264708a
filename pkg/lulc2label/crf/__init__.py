from .bruteforce import gaussian_filter_bruteforce
from .inference import (
    InferenceMode,
    argmax_labels,
    crf_features,
    mean_field_infer,
    refine_lulc,
    refine_lulc_with_marginals,
    softmax_bands,
)
from .permutohedral import PermutohedralLattice, permutohedral_filter

__all__ = [
    "InferenceMode",
    "PermutohedralLattice",
    "argmax_labels",
    "crf_features",
    "gaussian_filter_bruteforce",
    "mean_field_infer",
    "permutohedral_filter",
    "refine_lulc",
    "refine_lulc_with_marginals",
    "softmax_bands",
]
