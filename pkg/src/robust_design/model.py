"""Design points, weighted designs, monomial regression bases, link
functions, and the heteroscedastic variance function.

All types are immutable after construction and all operations are pure,
so they are safe to share across concurrent criterion evaluations.
"""

from dataclasses import dataclass, field

import numpy as np

WEIGHT_SUM_TOL = 1e-10

DEFAULT_BOUNDS = (-1.0, 1.0)


@dataclass(frozen=True)
class DesignPoint:
    """A single input setting with its share of the sampling effort."""

    coords: tuple[float, ...]
    weight: float = 1.0

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "weight", float(self.weight))
        if len(coords) == 0:
            raise ValueError("design point needs at least one coordinate")
        if not all(np.isfinite(coords)):
            raise ValueError(f"non-finite coordinate in {coords}")
        if not np.isfinite(self.weight) or self.weight < 0.0:
            raise ValueError(f"weight must be finite and >= 0, got {self.weight}")

    @property
    def q(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class Design:
    """An ordered, weighted collection of design points.

    Point order is semantically significant: the auto-regressive kernel
    and PRN stream assignments index points by position.  Weights are
    kept in normalized form (sum one within ``WEIGHT_SUM_TOL``).
    """

    points: tuple[DesignPoint, ...]
    bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        points = tuple(self.points)
        object.__setattr__(self, "points", points)
        if len(points) == 0:
            raise ValueError("a design needs at least one point")
        q = points[0].q
        if any(p.q != q for p in points):
            raise ValueError("all design points must share one dimension")
        bounds = tuple(
            (float(lo), float(hi)) for lo, hi in (self.bounds or [DEFAULT_BOUNDS] * q)
        )
        object.__setattr__(self, "bounds", bounds)
        if len(bounds) != q:
            raise ValueError(f"expected {q} bound pairs, got {len(bounds)}")
        if any(lo >= hi for lo, hi in bounds):
            raise ValueError("each bound pair needs lo < hi")
        for p in points:
            for c, (lo, hi) in zip(p.coords, bounds):
                if c < lo or c > hi:
                    raise ValueError(f"coordinate {c} outside bounds [{lo}, {hi}]")
        total = sum(p.weight for p in points)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {total!r})")

    @classmethod
    def from_arrays(cls, coords, weights=None, bounds=()) -> "Design":
        """Build a design from an (n, q) coordinate array.

        Omitting ``weights`` yields the uniform exact design, the form
        used by the discrete-grid optimizers.
        """
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        n = coords.shape[0]
        if weights is None:
            weights = np.full(n, 1.0 / n)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (n,):
            raise ValueError("weights must align with the coordinate rows")
        points = tuple(
            DesignPoint(tuple(row), w) for row, w in zip(coords, weights)
        )
        return cls(points, bounds)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def q(self) -> int:
        return self.points[0].q

    def coords_matrix(self) -> np.ndarray:
        """Raw coordinates as an (n, q) array."""
        return np.array([p.coords for p in self.points], dtype=float)

    def weights(self) -> np.ndarray:
        return np.array([p.weight for p in self.points], dtype=float)


@dataclass(frozen=True)
class BasisSpec:
    """Regression terms as monomial exponent vectors.

    Each term is a length-``q`` tuple of nonnegative integer exponents;
    term order fixes the column order of every model matrix.
    """

    q: int
    terms: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        terms = tuple(tuple(int(e) for e in t) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if len(terms) == 0:
            raise ValueError("basis needs at least one term")
        if any(len(t) != self.q for t in terms):
            raise ValueError("every exponent vector must have length q")
        if any(e < 0 for t in terms for e in t):
            raise ValueError("exponents must be nonnegative")
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate basis terms")

    @property
    def d(self) -> int:
        return len(self.terms)

    @classmethod
    def full_quadratic(cls, q: int) -> "BasisSpec":
        """Intercept, main effects, pairwise interactions, squares."""
        terms = [tuple([0] * q)]
        terms += [_unit(q, i) for i in range(q)]
        terms += [
            _add(_unit(q, i), _unit(q, j)) for i in range(q) for j in range(i + 1, q)
        ]
        terms += [_add(_unit(q, i), _unit(q, i)) for i in range(q)]
        return cls(q, tuple(terms))

    @classmethod
    def main_effects_with_interactions(cls, q: int) -> "BasisSpec":
        """Intercept, main effects, and pairwise interactions (no squares)."""
        terms = [tuple([0] * q)]
        terms += [_unit(q, i) for i in range(q)]
        terms += [
            _add(_unit(q, i), _unit(q, j)) for i in range(q) for j in range(i + 1, q)
        ]
        return cls(q, tuple(terms))


def _unit(q: int, i: int) -> tuple[int, ...]:
    e = [0] * q
    e[i] = 1
    return tuple(e)


def _add(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b))


@dataclass(frozen=True)
class LinkSpec:
    """Link function for the meta-model mean; identity or logit."""

    kind: str = "identity"

    def __post_init__(self):
        if self.kind not in ("identity", "logit"):
            raise ValueError(f"unsupported link {self.kind!r}")


@dataclass(frozen=True)
class VarianceModel:
    """Log-variance direction ``alpha`` and scale ``sigma2``.

    The response variance at x is ``sigma2 * exp(s * (1 + 2 s))`` with
    ``s = x . alpha``.
    """

    alpha: tuple[float, ...]
    sigma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if self.sigma2 <= 0 or not np.isfinite(self.sigma2):
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")


def expand_basis(point: DesignPoint, basis: BasisSpec) -> np.ndarray:
    """Evaluate every monomial of ``basis`` at a single point."""
    if point.q != basis.q:
        raise ValueError(f"point has dimension {point.q}, basis expects {basis.q}")
    x = np.asarray(point.coords, dtype=float)
    return np.array([np.prod(x**np.array(t)) for t in basis.terms])


def expand_coords(coords: np.ndarray, basis: BasisSpec) -> np.ndarray:
    """Vectorized basis expansion of an (n, q) coordinate array.

    Array-level twin of :func:`model_matrix`, used by the optimizer hot
    loops where building Design objects per proposal would dominate.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if coords.shape[1] != basis.q:
        raise ValueError(
            f"coordinates have dimension {coords.shape[1]}, basis expects {basis.q}"
        )
    exponents = np.array(basis.terms)  # (d, q)
    # power broadcast: (n, 1, q) ** (d, q) -> (n, d, q); product over q
    return np.prod(coords[:, None, :] ** exponents[None, :, :], axis=2)


def model_matrix(design: Design, basis: BasisSpec) -> np.ndarray:
    """Stack basis expansions of all design points into an (n, d) matrix."""
    return expand_coords(design.coords_matrix(), basis)


def variance_function(point, vm: VarianceModel) -> float:
    """Heteroscedastic variance multiplier exp(s (1 + 2 s)), s = x . alpha."""
    coords = point.coords if isinstance(point, DesignPoint) else point
    x = np.asarray(coords, dtype=float)
    alpha = np.asarray(vm.alpha, dtype=float)
    if x.shape != alpha.shape:
        raise ValueError(f"point dimension {x.shape} != alpha dimension {alpha.shape}")
    s = float(x @ alpha)
    return float(np.exp(s * (1.0 + 2.0 * s)))


def variance_multipliers(coords: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Vectorized variance multipliers for an (n, q) coordinate array."""
    s = np.asarray(coords, dtype=float) @ np.asarray(alpha, dtype=float)
    return np.exp(s * (1.0 + 2.0 * s))


def inverse_logit(eta):
    """Numerically stable logistic mean; saturates without overflow."""
    eta = np.asarray(eta, dtype=float)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    expe = np.exp(eta[~pos])
    out[~pos] = expe / (1.0 + expe)
    return out


def mean_response(
    point: DesignPoint, basis: BasisSpec, beta, link: LinkSpec
) -> float:
    """Model mean at a point: g^{-1}(f(x) . beta)."""
    beta = np.asarray(beta, dtype=float)
    f = expand_basis(point, basis)
    if beta.shape != (basis.d,):
        raise ValueError(f"beta must have length {basis.d}, got {beta.shape}")
    eta = float(f @ beta)
    if link.kind == "identity":
        return eta
    return float(inverse_logit(eta))
