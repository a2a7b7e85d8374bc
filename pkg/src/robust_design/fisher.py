"""Expected information matrices and estimator covariances.

Every inversion goes through a symmetric positive-definite
factorization.  A failed factorization raises
:class:`SingularStructureError` instead of silently regularizing, so
criterion code can map it to an infeasibility sentinel.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from .exceptions import SingularStructureError
from .model import (
    BasisSpec,
    Design,
    LinkSpec,
    VarianceModel,
    inverse_logit,
    model_matrix,
    variance_multipliers,
)

INFO_KINDS = ("beta_block", "alpha_block", "gee", "ols_sandwich")

SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class InfoMatrix:
    """A symmetric information or covariance matrix with its provenance."""

    m: np.ndarray
    d: int
    kind: str

    def __post_init__(self):
        if self.kind not in INFO_KINDS:
            raise ValueError(f"unknown info kind {self.kind!r}")
        if self.m.shape != (self.d, self.d):
            raise ValueError(f"matrix shape {self.m.shape} != ({self.d}, {self.d})")


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _check_symmetric(m: np.ndarray, what: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > 1e-8 * scale:
        raise ValueError(f"{what} is not symmetric")
    return m


def glm_weights(F: np.ndarray, beta, link: LinkSpec) -> np.ndarray:
    """Diagonal of P: 1 / [g'(mu)^2 Var(Y | x)] per observation.

    Identity link with unit variance gives ones; logit gives p(1-p).
    """
    if link.kind == "identity":
        return np.ones(F.shape[0])
    if link.kind == "logit":
        p = inverse_logit(F @ np.asarray(beta, dtype=float))
        return p * (1.0 - p)
    raise ValueError(f"unsupported link {link.kind!r}")


def info_glm_weighted(
    design: Design, basis: BasisSpec, link: LinkSpec, beta
) -> InfoMatrix:
    """Weighted GLM information F^T W P F."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (basis.d,):
        raise ValueError(f"beta must have length {basis.d}, got {beta.shape}")
    F = model_matrix(design, basis)
    wp = design.weights() * glm_weights(F, beta, link)
    m = _symmetrize(F.T @ (wp[:, None] * F))
    return InfoMatrix(m, basis.d, "beta_block")


def info_hetero_beta(design: Design, basis: BasisSpec, vm: VarianceModel) -> InfoMatrix:
    """Mean-parameter information under heteroscedastic normal errors.

    F^T W P F with P_ii = 1 / (sigma2 * v(x_i)); independent of beta.
    """
    F = model_matrix(design, basis)
    v = variance_multipliers(design.coords_matrix(), np.asarray(vm.alpha))
    wp = design.weights() / (vm.sigma2 * v)
    m = _symmetrize(F.T @ (wp[:, None] * F))
    return InfoMatrix(m, basis.d, "beta_block")


def info_hetero_alpha(design: Design, vm: VarianceModel) -> InfoMatrix:
    """Variance-parameter information X^T W Q X on raw coordinates.

    Q_ii = (1 + 4 x_i . alpha)^2 / 2; independent of beta and sigma2.
    """
    x = design.coords_matrix()
    alpha = np.asarray(vm.alpha, dtype=float)
    if alpha.shape != (design.q,):
        raise ValueError(f"alpha must have length {design.q}, got {alpha.shape}")
    qdiag = 0.5 * (1.0 + 4.0 * (x @ alpha)) ** 2
    wq = design.weights() * qdiag
    m = _symmetrize(x.T @ (wq[:, None] * x))
    return InfoMatrix(m, design.q, "alpha_block")


def info_gee(design: Design, basis: BasisSpec, beta, R: np.ndarray) -> InfoMatrix:
    """Working-correlation information F^T (WP)^{1/2} R^{-1} (WP)^{1/2} F.

    R must be symmetric positive definite; the solve goes through its
    Cholesky factor, never an explicit inverse.
    """
    R = _check_symmetric(R, "R")
    if R.shape[0] != design.n:
        raise ValueError(f"R has order {R.shape[0]}, design has {design.n} points")
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (basis.d,):
        raise ValueError(f"beta must have length {basis.d}, got {beta.shape}")
    F = model_matrix(design, basis)
    wp = design.weights() * glm_weights(F, beta, LinkSpec("logit"))
    try:
        L = np.linalg.cholesky(R)
    except np.linalg.LinAlgError as exc:
        raise SingularStructureError("R is not positive definite") from exc
    half = np.sqrt(wp)[:, None] * F
    a = solve_triangular(L, half, lower=True)
    return InfoMatrix(_symmetrize(a.T @ a), basis.d, "gee")


def ols_variance(
    design: Design, basis: BasisSpec, V: np.ndarray, sigma2: float = 1.0
) -> InfoMatrix:
    """Sandwich covariance sigma2 (F^T F)^{-1} F^T V F (F^T F)^{-1}.

    The design's weights are ignored: this is the exact-design OLS
    estimator, where every point is one experimental run.
    """
    V = _check_symmetric(V, "V")
    if V.shape[0] != design.n:
        raise ValueError(f"V has order {V.shape[0]}, design has {design.n} points")
    F = model_matrix(design, basis)
    if F.shape[0] < basis.d:
        raise SingularStructureError(
            f"n = {F.shape[0]} runs cannot identify d = {basis.d} parameters"
        )
    try:
        c = cho_factor(F.T @ F)
    except LinAlgError as exc:
        raise SingularStructureError("F is rank deficient") from exc
    meat = F.T @ V @ F
    gm = cho_solve(c, meat)
    m = sigma2 * cho_solve(c, gm.T)
    return InfoMatrix(_symmetrize(m), basis.d, "ols_sandwich")
