"""Prior distributions over unknown parameters and quadrature grids.

Draw lists are generated once per optimization run and then held fixed
across all candidate designs, so annealing compares designs on a
consistent Monte Carlo surface.
"""

from dataclasses import dataclass

import numpy as np

MASS_TOL = 1e-12

PRIOR_KINDS = ("discrete_atoms", "product_uniform", "product_normal")


@dataclass(frozen=True, eq=False)
class PriorSpec:
    """A prior over a parameter vector.

    Exactly one parameter block is used per kind: ``atoms`` for
    discrete_atoms, ``bounds`` for product_uniform, ``means``/``sds``
    for product_normal.
    """

    kind: str
    dim: int
    atoms: tuple[tuple[tuple[float, ...], float], ...] | None = None
    bounds: tuple[tuple[float, float], ...] | None = None
    means: tuple[float, ...] | None = None
    sds: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("prior dimension must be >= 1")
        if self.kind == "discrete_atoms":
            if not self.atoms:
                raise ValueError("discrete_atoms prior needs atoms")
            atoms = tuple(
                (tuple(float(v) for v in vec), float(mass)) for vec, mass in self.atoms
            )
            object.__setattr__(self, "atoms", atoms)
            if any(len(vec) != self.dim for vec, _ in atoms):
                raise ValueError("every atom must match the prior dimension")
            masses = np.array([m for _, m in atoms])
            if np.any(masses <= 0):
                raise ValueError("atom masses must be positive")
            if abs(masses.sum() - 1.0) > MASS_TOL:
                raise ValueError(f"atom masses must sum to 1 (got {masses.sum()!r})")
        elif self.kind == "product_uniform":
            if not self.bounds:
                raise ValueError("product_uniform prior needs bounds")
            bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            object.__setattr__(self, "bounds", bounds)
            if len(bounds) != self.dim:
                raise ValueError("need one bound pair per dimension")
            if any(lo >= hi for lo, hi in bounds):
                raise ValueError("each bound pair needs lo < hi")
        else:  # product_normal
            if self.means is None or self.sds is None:
                raise ValueError("product_normal prior needs means and sds")
            means = tuple(float(m) for m in self.means)
            sds = tuple(float(s) for s in self.sds)
            object.__setattr__(self, "means", means)
            object.__setattr__(self, "sds", sds)
            if len(means) != self.dim or len(sds) != self.dim:
                raise ValueError("means and sds must match the prior dimension")
            if any(s <= 0 for s in sds):
                raise ValueError("sds must be positive")

    @classmethod
    def atom(cls, vec) -> "PriorSpec":
        """Point mass at a single parameter value (a local-design prior)."""
        vec = tuple(float(v) for v in vec)
        return cls("discrete_atoms", len(vec), atoms=((vec, 1.0),))

    @classmethod
    def uniform_box(cls, bounds) -> "PriorSpec":
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        return cls("product_uniform", len(bounds), bounds=bounds)


def sample_prior(spec: PriorSpec, M: int, seed: int) -> np.ndarray:
    """Draw an (M, dim) array of iid prior samples, deterministic in seed."""
    if M < 1:
        raise ValueError("M must be >= 1")
    rng = np.random.default_rng(seed)
    if spec.kind == "discrete_atoms":
        vecs = np.array([vec for vec, _ in spec.atoms])
        masses = np.array([m for _, m in spec.atoms])
        masses = masses / masses.sum()
        idx = rng.choice(len(vecs), size=M, p=masses)
        return vecs[idx]
    if spec.kind == "product_uniform":
        lo = np.array([b[0] for b in spec.bounds])
        hi = np.array([b[1] for b in spec.bounds])
        return rng.uniform(lo, hi, size=(M, spec.dim))
    return rng.normal(np.array(spec.means), np.array(spec.sds), size=(M, spec.dim))


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and weights of a tensor-product rule on a box."""

    nodes: np.ndarray  # (M, dim)
    weights: np.ndarray  # (M,)

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.shape[0] != weights.shape[0]:
            raise ValueError("node and weight counts differ")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")

    @property
    def M(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]


def gauss_legendre_grid(nodes_per_dim: int, bounds) -> QuadratureGrid:
    """Tensor-product Gauss-Legendre rule on a box.

    Weights sum to the box volume; an m-point rule integrates monomials
    of degree <= 2m - 1 exactly in each dimension.
    """
    if nodes_per_dim < 1:
        raise ValueError("nodes_per_dim must be >= 1")
    bounds = [(float(lo), float(hi)) for lo, hi in bounds]
    if any(lo >= hi for lo, hi in bounds):
        raise ValueError("each bound pair needs lo < hi")
    xi, wi = np.polynomial.legendre.leggauss(nodes_per_dim)
    axes, axis_weights = [], []
    for lo, hi in bounds:
        half = 0.5 * (hi - lo)
        axes.append(lo + half * (xi + 1.0))
        axis_weights.append(half * wi)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.column_stack([m.ravel() for m in mesh])
    wmesh = np.meshgrid(*axis_weights, indexing="ij")
    weights = np.ones(nodes.shape[0])
    for wm in wmesh:
        weights = weights * wm.ravel()
    return QuadratureGrid(nodes, weights)
