"""Covariance and correlation matrices over a design.

Two families live here: stationary kernels indexed by a single
correlation parameter (independent, constant, auto-regressive,
distance), and the block-effect covariance induced by assigning
pseudo-random-number (PRN) streams and their antitheses to design
points.

Convention for the PRN structure: the block matrix ``C`` is kept on the
correlation scale (entries rho_plus / -rho_minus), so the returned
covariance ``V`` has unit diagonal and the sigma2 factor enters exactly
once, in the OLS sandwich.
"""

from dataclasses import dataclass

import numpy as np

from .model import Design

KERNEL_KINDS = ("independent", "constant", "auto_regressive", "distance_kernel")


@dataclass(frozen=True)
class KernelSpec:
    """A stationary correlation structure with scale sigma2.

    ``rho`` is ignored by the independent kind.
    """

    kind: str
    sigma2: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "rho", float(self.rho))
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")


def build_correlation(design: Design, spec: KernelSpec) -> np.ndarray:
    """n x n covariance matrix of the kernel over the design points.

    Diagonal entries are sigma2.  Off-diagonals: 0 (independent),
    sigma2*rho (constant), sigma2*rho^|i-j| (auto-regressive, point
    order is the time index), or sigma2*rho*exp(-||xi-xj||^2 / 4)
    (distance kernel).
    """
    n = design.n
    s2, rho = spec.sigma2, spec.rho
    if spec.kind == "independent":
        return s2 * np.eye(n)
    if spec.kind == "constant":
        r = np.full((n, n), s2 * rho)
        np.fill_diagonal(r, s2)
        return r
    if spec.kind == "auto_regressive":
        idx = np.arange(n)
        r = s2 * rho ** np.abs(idx[:, None] - idx[None, :])
        np.fill_diagonal(r, s2)
        return r
    # distance_kernel
    x = design.coords_matrix()
    sq = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=2)
    r = s2 * rho * np.exp(-0.25 * sq)
    np.fill_diagonal(r, s2)
    return r


@dataclass(frozen=True)
class PrnAssignment:
    """Which of the 2g streams each design point consumes.

    Streams 1..g are base streams; stream j+g is the antithesis of
    stream j.  ``k`` is indexed by design-point position.
    """

    g: int
    k: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "g", int(self.g))
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        if self.g < 1:
            raise ValueError("g must be a positive stream count")
        if len(self.k) == 0:
            raise ValueError("assignment must cover at least one point")
        bad = [v for v in self.k if not 1 <= v <= 2 * self.g]
        if bad:
            raise ValueError(f"stream indices {bad} outside 1..{2 * self.g}")

    @property
    def n(self) -> int:
        return len(self.k)


@dataclass(frozen=True)
class PrnCorrelationSpec:
    """Correlations induced by sharing a stream (+) or its antithesis (-)."""

    rho_plus: float
    rho_minus: float
    sigma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rho_plus", float(self.rho_plus))
        object.__setattr__(self, "rho_minus", float(self.rho_minus))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if not 0.0 <= self.rho_plus <= 1.0:
            raise ValueError(f"rho_plus must lie in [0, 1], got {self.rho_plus}")
        if not 0.0 <= self.rho_minus <= 1.0:
            raise ValueError(f"rho_minus must lie in [0, 1], got {self.rho_minus}")
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")


def assignment_matrix(a: PrnAssignment, n: int) -> np.ndarray:
    """0/1 incidence matrix Z with Z[i, h] = 1 iff point i uses stream h+1."""
    if a.n != n:
        raise ValueError(f"assignment covers {a.n} points, design has {n}")
    z = np.zeros((n, 2 * a.g))
    z[np.arange(n), np.asarray(a.k) - 1] = 1.0
    return z


def prn_block_matrix(g: int, rho_plus: float, rho_minus: float) -> np.ndarray:
    """Correlation-scale block matrix C over the 2g streams.

    Diagonal rho_plus; entry (j, j+g) and (j+g, j) is -rho_minus; all
    other pairs are uncorrelated.
    """
    c = np.zeros((2 * g, 2 * g))
    np.fill_diagonal(c, rho_plus)
    for j in range(g):
        c[j, j + g] = -rho_minus
        c[j + g, j] = -rho_minus
    return c


def prn_covariance(a: PrnAssignment, spec: PrnCorrelationSpec) -> np.ndarray:
    """Unit-diagonal covariance V = (1 - rho_plus) I + Z C Z^T.

    The sigma2 factor deliberately stays outside V; it is applied once
    by the OLS sandwich.
    """
    n = a.n
    z = assignment_matrix(a, n)
    c = prn_block_matrix(a.g, spec.rho_plus, spec.rho_minus)
    v = (1.0 - spec.rho_plus) * np.eye(n) + z @ c @ z.T
    np.fill_diagonal(v, 1.0)
    return v
