"""Compare the information content of probabilistic representation spaces.

Spaces are fingerprinted by the pairwise Bhattacharyya coefficients of a
data sample's posteriors; information bounds, generalized NMI/VI, channel
grouping across ensembles, and differentiable model fusion all operate on
those fingerprints (or on Monte Carlo / exact-discrete estimates).
"""

from .core import (
    DiscreteSoftClustering,
    Fingerprint,
    GaussianPosterior,
    HardClustering,
    PosteriorSet,
    bc_gaussian,
    fingerprint_discrete_soft,
    fingerprint_gaussian,
    fingerprint_hard,
    fingerprint_product,
    marginal_channel,
)
from .estimators import (
    InfoEstimate,
    McConfig,
    entropy_dataset,
    info_exact_discrete,
    info_kt,
    info_mc,
    info_mc_joint,
    propagate_vi_error,
    weighted_mean,
)
from .similarity import (
    SimilarityValue,
    cka_bc,
    nmi,
    nmi_exact,
    nmi_hard,
    nmi_mc,
    to_distance,
    to_similarity,
    vi,
    vi_exact,
    vi_hard,
    vi_mc,
)
from .channels import (
    ChannelRef,
    OpticsResult,
    SimilarityMatrix,
    collect_channels,
    extract_groups,
    factor_info_column,
    filter_informative,
    optics_order,
    pairwise_similarity,
    representative,
    run_pipeline,
    to_distance_matrix,
)
from .fusion import FusionConfig, FusionState, fuse, objective_grad, objective_value
from .bench import (
    ContinuityResult,
    GeneratorSpec,
    continuity,
    gen_coin_mixture_trio,
    gen_nine_space_suite,
    gen_planted_channels,
    gen_separated_gaussians,
    gen_so2_weak,
    group_agreement,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
