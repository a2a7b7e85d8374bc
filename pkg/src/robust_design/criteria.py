"""Scalar design objectives built on the information matrices.

Log-determinants are always computed through factorizations in
log-space; raw determinant products overflow already at moderate
dimensions.  Singular evaluations follow two deliberate conventions:
on the log scale a single singular draw makes the whole average -inf
(the design is infeasible), while on the d-th-root scale a singular
draw contributes 0.

Monte Carlo reductions use exact summation (math.fsum) so results do
not depend on evaluation order.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .covariance import KernelSpec, prn_block_matrix, build_correlation
from .exceptions import DegenerateReferenceError, SingularStructureError
from .model import (
    BasisSpec,
    Design,
    LinkSpec,
    inverse_logit,
    model_matrix,
    variance_multipliers,
)
from .priors import QuadratureGrid

CRITERION_KINDS = ("glm_weighted", "hetero_beta", "hetero_alpha", "gee")

# Minimum admissible Cholesky pivot before a matrix counts as singular.
PIVOT_FLOOR = 1e-300

# Relative slack when testing whether a reduced PRN covariance is still
# positive definite at a quadrature node.
PD_EIG_TOL = 1e-10


@dataclass(frozen=True)
class CriterionValue:
    """A criterion estimate with its averaging metadata.

    ``std_error`` is present exactly when Monte Carlo averaging was
    used; it is NaN when the value degenerated to -inf.
    """

    value: float
    M: int
    std_error: float | None = None


@dataclass(frozen=True, eq=False)
class ModelConfig:
    """Selects which information matrix a robust criterion averages.

    ``draws`` passed alongside a config hold regression coefficients for
    the glm_weighted and gee kinds, and variance-direction vectors for
    the hetero kinds.
    """

    kind: str
    basis: BasisSpec | None = None
    link: LinkSpec = LinkSpec("identity")
    sigma2: float = 1.0
    kernel: KernelSpec | None = None
    q: int | None = None  # raw-coordinate dimension, hetero_alpha only

    def __post_init__(self):
        if self.kind not in CRITERION_KINDS:
            raise ValueError(f"unknown criterion kind {self.kind!r}")
        if self.kind != "hetero_alpha" and self.basis is None:
            raise ValueError(f"{self.kind} needs a basis")
        if self.kind == "hetero_alpha" and self.basis is None and self.q is None:
            raise ValueError("hetero_alpha needs q (or a basis to infer it from)")
        if self.kind == "gee" and self.kernel is None:
            raise ValueError("gee needs a correlation kernel")
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def info_dim(self) -> int:
        """Order of the information matrix this config produces."""
        if self.kind == "hetero_alpha":
            return self.q if self.q is not None else self.basis.q
        return self.basis.d

    @property
    def draw_dim(self) -> int:
        """Length of one parameter draw for this config."""
        if self.kind in ("glm_weighted", "gee"):
            return self.basis.d
        if self.kind == "hetero_beta":
            return self.basis.q
        return self.info_dim


def log_det_psd(m: np.ndarray) -> float:
    """Log-determinant of a symmetric PSD matrix; -inf if singular.

    Computed as twice the sum of log Cholesky pivots; any failed
    factorization or pivot at the underflow floor maps to -inf.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > 1e-8 * scale:
        raise ValueError("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return -math.inf
    piv = np.diag(L)
    if np.any(piv <= math.sqrt(PIVOT_FLOOR)):
        return -math.inf
    return float(2.0 * np.sum(np.log(piv)))


def _logdet_stack(stack: np.ndarray) -> np.ndarray:
    """Batched log-determinants of symmetric PSD matrices; -inf if not PD.

    The inputs here are Gram matrices (PSD by construction), so a
    non-positive slogdet sign can only mean numerically singular.
    """
    sign, logabs = np.linalg.slogdet(stack)
    out = np.where(sign > 0, logabs, -np.inf)
    return out


def _weighted_diagonals(design: Design, config: ModelConfig, draws: np.ndarray):
    """Per-draw diagonal weights and the matrix they act on.

    Returns (X, wp) with X (n, p) and wp (n, M) such that the
    information for draw m is X^T diag(wp[:, m]) X.  The gee kind is
    handled separately because of the correlation solve.
    """
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    if draws.shape[1] != config.draw_dim:
        raise ValueError(
            f"draws have width {draws.shape[1]}, config expects {config.draw_dim}"
        )
    w = design.weights()
    if config.kind == "glm_weighted":
        F = model_matrix(design, config.basis)
        if config.link.kind == "identity":
            wp = np.repeat(w[:, None], draws.shape[0], axis=1)
        else:
            p = inverse_logit(F @ draws.T)
            wp = w[:, None] * p * (1.0 - p)
        return F, wp
    if config.kind == "hetero_beta":
        F = model_matrix(design, config.basis)
        v = variance_multipliers_stack(design.coords_matrix(), draws)
        wp = w[:, None] / (config.sigma2 * v)
        return F, wp
    if config.kind == "hetero_alpha":
        x = design.coords_matrix()
        s = x @ draws.T
        wq = w[:, None] * 0.5 * (1.0 + 4.0 * s) ** 2
        return x, wq
    raise ValueError(f"no diagonal form for kind {config.kind!r}")


def variance_multipliers_stack(coords: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """(n, M) heteroscedastic multipliers for M direction draws."""
    s = coords @ alphas.T
    return np.exp(s * (1.0 + 2.0 * s))


def criterion_logdets(
    design: Design, config: ModelConfig, draws: np.ndarray, R: np.ndarray | None = None
) -> np.ndarray:
    """Per-draw log|I(theta_m)| for the configured information matrix.

    For the gee kind the working correlation defaults to the config
    kernel evaluated over the design; pass ``R`` to override it (the
    misspecification study evaluates designs under foreign structures).
    """
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    if config.kind != "gee":
        X, wp = _weighted_diagonals(design, config, draws)
        stack = np.einsum("nm,nd,ne->mde", wp, X, X, optimize=True)
        return _logdet_stack(stack)
    if draws.shape[1] != config.basis.d:
        raise ValueError(
            f"draws have width {draws.shape[1]}, config expects {config.basis.d}"
        )
    if R is None:
        R = build_correlation(design, config.kernel)
    F = model_matrix(design, config.basis)
    n, d = F.shape
    try:
        L = np.linalg.cholesky(np.asarray(R, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise SingularStructureError("R is not positive definite") from exc
    p = inverse_logit(F @ draws.T)
    wp = design.weights()[:, None] * p * (1.0 - p)  # (n, M)
    M = wp.shape[1]
    half = np.sqrt(wp)[:, :, None] * F[:, None, :]  # (n, M, d)
    sol = solve_triangular(L, half.reshape(n, M * d), lower=True)
    sol = sol.reshape(n, M, d)
    stack = np.einsum("nmd,nme->mde", sol, sol, optimize=True)
    return _logdet_stack(stack)


def robust_log_d(
    design: Design, config: ModelConfig, draws: np.ndarray
) -> CriterionValue:
    """Prior-averaged log-determinant criterion (to be maximized).

    Any singular draw makes the design infeasible: the value is -inf.
    """
    logdets = criterion_logdets(design, config, draws)
    M = logdets.shape[0]
    if np.any(np.isneginf(logdets)):
        return CriterionValue(-math.inf, M, math.nan)
    mean = math.fsum(logdets.tolist()) / M
    se = 0.0 if M == 1 else float(np.std(logdets, ddof=1) / math.sqrt(M))
    return CriterionValue(mean, M, se)


def j_terms(
    design: Design, config: ModelConfig, draws: np.ndarray, R: np.ndarray | None = None
) -> np.ndarray:
    """Per-draw d-th roots of information determinants; 0 where singular."""
    d = config.info_dim
    logdets = criterion_logdets(design, config, draws, R=R)
    out = np.zeros_like(logdets)
    finite = np.isfinite(logdets)
    out[finite] = np.exp(logdets[finite] / d)
    return out


def j_functional(
    design: Design, config: ModelConfig, draws: np.ndarray, R: np.ndarray | None = None
) -> float:
    """Mean d-th-root determinant, the fair-comparison design criterion."""
    terms = j_terms(design, config, draws, R=R)
    return math.fsum(terms.tolist()) / terms.shape[0]


def misspec_efficiency(
    design_assumed: Design,
    design_true: Design,
    true_kernel: KernelSpec,
    config: ModelConfig,
    draws: np.ndarray,
) -> float:
    """Efficiency of a design optimized under the wrong correlation.

    Both the numerator (assumed design) and denominator (design that
    assumed the true structure) are evaluated under the true kernel and
    on the same draw set.  The true kernel is re-materialized over each
    design because distance-based structures depend on the coordinates.
    """
    eff, _ = misspec_efficiency_stats(
        design_assumed, design_true, true_kernel, config, draws
    )
    return eff


def misspec_efficiency_stats(
    design_assumed: Design,
    design_true: Design,
    true_kernel: KernelSpec,
    config: ModelConfig,
    draws: np.ndarray,
) -> tuple[float, float]:
    """Misspecification efficiency with its paired-draw standard error."""
    r_num = build_correlation(design_assumed, true_kernel)
    r_den = build_correlation(design_true, true_kernel)
    a = j_terms(design_assumed, config, draws, R=r_num)
    b = j_terms(design_true, config, draws, R=r_den)
    M = a.shape[0]
    b_mean = math.fsum(b.tolist()) / M
    if b_mean <= 0.0:
        raise DegenerateReferenceError(
            "reference design has zero d-th-root criterion"
        )
    a_mean = math.fsum(a.tolist()) / M
    eff = a_mean / b_mean
    # delta method for a ratio of paired means
    resid = a - eff * b
    var = float(np.var(resid, ddof=1)) / M if M > 1 else 0.0
    se = math.sqrt(max(var, 0.0)) / b_mean
    return eff, se


def var_log_det(
    design: Design, basis: BasisSpec, V: np.ndarray, sigma2: float = 1.0
) -> float:
    """log|Var(beta_hat)| of the OLS sandwich, including the sigma2 term.

    Equals d log(sigma2) + log|F^T V F| - 2 log|F^T F|; -inf when the
    middle factor is singular.
    """
    F = model_matrix(design, basis)
    if F.shape[0] < basis.d:
        raise SingularStructureError(
            f"n = {F.shape[0]} runs cannot identify d = {basis.d} parameters"
        )
    base = log_det_psd(F.T @ F)
    if not np.isfinite(base):
        raise SingularStructureError("F is rank deficient")
    V = np.asarray(V, dtype=float)
    mid = log_det_psd(_sym(F.T @ V @ F))
    return basis.d * math.log(sigma2) + mid - 2.0 * base


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


# ---------------------------------------------------------------------------
# PRN quadrature criterion
# ---------------------------------------------------------------------------
#
# Quadrature nodes are (rho_minus, rho_plus) pairs: column 0 of the grid
# is the antithetic correlation, column 1 the common-stream correlation.
#
# A node is admissible for an assignment only if the implied covariance
# V = (1 - rho_plus) I + Z C Z^T is positive definite there; V's
# nontrivial spectrum is (1 - rho_plus) + eig(N^{1/2} C N^{1/2}) where N
# counts points per stream, which keeps the check at 2g x 2g.  An
# assignment with any inadmissible node is infeasible (+inf), because
# the block-effect model has no valid covariance at that node.


def _node_blocks(g: int, grid: QuadratureGrid) -> np.ndarray:
    """(M, 2g, 2g) correlation-scale block matrices, one per node."""
    if grid.dim != 2:
        raise ValueError("PRN quadrature grids must be 2-dimensional")
    return np.stack(
        [prn_block_matrix(g, rp, rm) for rm, rp in grid.nodes]
    )


def _stream_counts(k_batch: np.ndarray, g: int) -> np.ndarray:
    """(K, 2g) counts of points per stream for a batch of assignments."""
    K, _ = k_batch.shape
    counts = np.zeros((K, 2 * g), dtype=np.int64)
    for h in range(2 * g):
        counts[:, h] = np.sum(k_batch == h + 1, axis=1)
    return counts


def _node_validity(counts: np.ndarray, blocks: np.ndarray, rho_plus: np.ndarray):
    """(K, M) mask of nodes where V is positive definite.

    Computed on unique count vectors only; validity depends on the
    assignment through its stream counts alone.
    """
    uniq, inverse = np.unique(counts, axis=0, return_inverse=True)
    sqrt_n = np.sqrt(uniq.astype(float))  # (U, 2g)
    reduced = sqrt_n[:, None, :, None] * blocks[None, :, :, :] * sqrt_n[:, None, None, :]
    eigs = np.linalg.eigvalsh(reduced)  # (U, M, 2g)
    lam_min = eigs[..., 0]
    ok = (1.0 - rho_plus)[None, :] + lam_min > PD_EIG_TOL
    ok &= (1.0 - rho_plus)[None, :] > PD_EIG_TOL
    return ok[inverse]


def _prn_values_feasible(
    F: np.ndarray,
    ftf: np.ndarray,
    base_logdet: float,
    kb: np.ndarray,
    g: int,
    blocks: np.ndarray,
    rho_plus: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """Criterion values for assignments already known to be admissible."""
    h = np.zeros((kb.shape[0], 2 * g, F.shape[1]))
    for s in range(2 * g):
        h[:, s, :] = (kb == s + 1).astype(float) @ F
    acc = np.zeros(kb.shape[0])
    for m in range(blocks.shape[0]):
        a = (1.0 - rho_plus[m]) * ftf[None, :, :] + np.einsum(
            "khd,hg,kge->kde", h, blocks[m], h, optimize=True
        )
        sgn, logabs = np.linalg.slogdet(a)
        if np.any(sgn <= 0):
            # cannot happen for admissible nodes unless numerics degenerate
            logabs = np.where(sgn <= 0, np.nan, logabs)
        acc = acc + weights[m] * logabs
    vals = acc - 2.0 * base_logdet
    return np.where(np.isnan(vals), np.inf, vals)


def prn_criterion_batch(
    F: np.ndarray,
    k_batch: np.ndarray,
    g: int,
    grid: QuadratureGrid,
) -> np.ndarray:
    """Quadrature criterion values for a batch of stream assignments.

    Returns one value per assignment row; +inf marks infeasibility
    (rank-deficient F, or an inadmissible covariance node).
    """
    F = np.asarray(F, dtype=float)
    k_batch = np.atleast_2d(np.asarray(k_batch, dtype=np.int64))
    K, n = k_batch.shape
    if F.shape[0] != n:
        raise ValueError(f"F has {F.shape[0]} rows, assignments cover {n}")
    d = F.shape[1]
    values = np.full(K, np.inf)
    if n < d:
        return values
    ftf = F.T @ F
    sign, base = np.linalg.slogdet(ftf)
    if sign <= 0:
        return values
    blocks = _node_blocks(g, grid)
    rho_plus = grid.nodes[:, 1]
    counts = _stream_counts(k_batch, g)
    valid = _node_validity(counts, blocks, rho_plus)  # (K, M)
    feasible = valid.all(axis=1)
    if not feasible.any():
        return values
    values[feasible] = _prn_values_feasible(
        F, ftf, float(base), k_batch[feasible], g, blocks, rho_plus, grid.weights
    )
    return values


def prn_quadrature_criterion(
    design: Design,
    assignment,
    basis: BasisSpec,
    grid: QuadratureGrid,
) -> float:
    """Quadrature-averaged log|F^T V F| minus 2 log|F^T F| (minimize).

    Infeasible configurations return +inf rather than raising, so
    optimizers can traverse them.
    """
    F = model_matrix(design, basis)
    k = np.asarray(assignment.k, dtype=np.int64)[None, :]
    return float(prn_criterion_batch(F, k, assignment.g, grid)[0])
