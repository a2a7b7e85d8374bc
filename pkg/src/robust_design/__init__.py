"""Robust D-optimal experimental design for simulation meta-models.

Builds weighted or exact designs that stay efficient when errors are
heteroscedastic or correlated, including joint optimization of design
points and pseudo-random-number stream assignment, and tools to gauge
how much a misspecified correlation structure costs.
"""

__version__ = "0.1.0"

from .covariance import (
    KernelSpec,
    PrnAssignment,
    PrnCorrelationSpec,
    assignment_matrix,
    build_correlation,
    prn_block_matrix,
    prn_covariance,
)
from .criteria import (
    CriterionValue,
    ModelConfig,
    criterion_logdets,
    j_functional,
    j_terms,
    log_det_psd,
    misspec_efficiency,
    misspec_efficiency_stats,
    prn_criterion_batch,
    prn_quadrature_criterion,
    robust_log_d,
    var_log_det,
)
from .exceptions import (
    ConfigError,
    DegenerateReferenceError,
    EnumerationBudgetError,
    RobustDesignError,
    SingularStructureError,
)
from .fisher import (
    InfoMatrix,
    info_gee,
    info_glm_weighted,
    info_hetero_alpha,
    info_hetero_beta,
    ols_variance,
)
from .model import (
    BasisSpec,
    Design,
    DesignPoint,
    LinkSpec,
    VarianceModel,
    expand_basis,
    expand_coords,
    inverse_logit,
    mean_response,
    model_matrix,
    variance_function,
)
from .optimize import (
    AnnealingSchedule,
    GridSpec,
    OptimizationResult,
    PrnAssignmentSearch,
    anneal_weighted_design,
    best_prn_assignment,
    coordinate_exchange,
    joint_optimize,
    prune_weights,
    random_grid_design,
    random_weighted_design,
    simulated_annealing,
)
from .priors import PriorSpec, QuadratureGrid, gauss_legendre_grid, sample_prior
