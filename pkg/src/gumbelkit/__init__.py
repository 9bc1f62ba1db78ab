"""Gumbel-max sampling, top-down conditional sampling, sampling without
replacement and Gumbel-Softmax gradient estimators on a counter-based RNG."""

__version__ = "0.1.0"

from .distributions import (
    EULER_GAMMA,
    CategoricalParams,
    DomainError,
    GumbelParams,
    GumbelSoftmaxParams,
    TruncGumbelParams,
    exponential_icdf,
    gumbel_cdf,
    gumbel_icdf,
    gumbel_moments,
    gumbel_pdf,
    trunc_gumbel_cdf,
    trunc_gumbel_icdf,
)
from .estimators import (
    EstimatorReport,
    Objective,
    VarianceConfig,
    analytic_grad,
    gs_grad,
    reinforce_grad,
    st_gs_grad,
    variance_report,
)
from .relax import (
    SoftSample,
    binary_gs_weight,
    effective_gs_temperature,
    gs_sample,
    log_convexity_bound,
    st_gs_sample,
)
from .rng import RngState, fork_stream, next_uniform, uniforms
from .sampling import (
    DrawResult,
    IndexSubset,
    PerturbedLogits,
    exponential_race,
    gumbel_max,
    gumbel_max_scaled,
    gumbel_max_subdomain,
    inverse_transform_sample,
    perturb,
)
from .stats import GofResult, chi_square_gof, entropy, ks_one_sample, ks_two_sample, moment_check
from .topdown import (
    TopDownCondition,
    TopDownNode,
    TreeNode,
    assemble_perturbed_logits,
    conditional_perturbed_logits,
    lazy_tree_topk,
    top_down_construction,
    transform_to_truncated,
)
from .wor import (
    ProposalBudgetExceeded,
    TopKResult,
    gumbel_topk,
    plackett_luce_prob,
    rejection_wor,
    sequential_wor,
    unordered_set_prob,
)
