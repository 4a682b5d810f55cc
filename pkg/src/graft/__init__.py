"""Gradient-aware fast max-volume data subset selection.

Core pieces: low-rank feature extraction (`features`), greedy and
swap-based max-volume row sampling (`maxvol`), gradient-alignment driven
subset-size selection (`alignment`), a desk-scale training harness
(`harness`), and efficiency/emissions analytics (`metrics`).
"""

from .alignment import (
    GradientBundle,
    RankDecision,
    angular_error,
    cosine_alignment,
    gradient_approx_bound,
    projection_error,
    select_rank,
)
from .features import (
    Extractor,
    FeatureMatrix,
    extract_svd_features,
    extract_variance_features,
    from_embedding,
)
from .harness import RunTrace, TrainConfig, train
from .linalg import (
    ThinSvd,
    orthonormal_basis,
    project_onto_span,
    subspace_similarity,
    thin_svd,
)
from .maxvol import SelectionResult, brute_force_maxvol, conventional_maxvol, fast_maxvol
from .metrics import (
    EfficiencyCurve,
    EmissionsEstimate,
    emissions,
    emissions_integrated,
    export_trace,
    fidelity_and_utilization,
    fit_gain_curve,
    load_trace,
    proxy_emissions,
    utilization_gain_reference,
)

__all__ = [
    "Extractor",
    "FeatureMatrix",
    "GradientBundle",
    "RankDecision",
    "RunTrace",
    "SelectionResult",
    "ThinSvd",
    "TrainConfig",
    "EfficiencyCurve",
    "EmissionsEstimate",
    "angular_error",
    "brute_force_maxvol",
    "conventional_maxvol",
    "cosine_alignment",
    "emissions",
    "emissions_integrated",
    "export_trace",
    "extract_svd_features",
    "extract_variance_features",
    "fast_maxvol",
    "fidelity_and_utilization",
    "fit_gain_curve",
    "from_embedding",
    "gradient_approx_bound",
    "load_trace",
    "orthonormal_basis",
    "project_onto_span",
    "projection_error",
    "proxy_emissions",
    "select_rank",
    "subspace_similarity",
    "thin_svd",
    "train",
    "utilization_gain_reference",
]

__version__ = "0.1.0"
