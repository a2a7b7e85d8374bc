"""Design-space search.

Simulated annealing handles continuous weighted designs (weights ride a
softmax reparameterization so the simplex constraint holds exactly);
coordinate exchange handles exact designs on discrete grids; PRN stream
assignments are found by exhaustive enumeration; and the joint
optimizer nests the enumeration inside coordinate exchange.

A single optimizer run is a sequential state machine; everything it
evaluates is a pure function, so restarts and per-draw work can run
concurrently at a higher level without changing results.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .covariance import PrnAssignment
from .criteria import (
    _node_blocks,
    _node_validity,
    _prn_values_feasible,
    _stream_counts,
)
from .exceptions import EnumerationBudgetError
from .model import BasisSpec, Design, expand_coords

# Largest assignment batch materialized at once during enumeration.
ENUM_CHUNK = 1 << 16


@dataclass(frozen=True)
class AnnealingSchedule:
    """Geometric cooling schedule and proposal scaling.

    ``proposal_scale`` is the coordinate step size as a fraction of the
    coordinate range; steps shrink with sqrt(T / initial_temp).  Setting
    ``min_temp`` equal to ``initial_temp`` yields a greedy search that
    accepts improvements only.
    """

    initial_temp: float
    cooling_factor: float = 0.95
    iters_per_temp: int = 200
    min_temp: float | None = None
    proposal_scale: float = 0.15
    weight_prune_threshold: float = 1e-3

    def __post_init__(self):
        if self.min_temp is None:
            object.__setattr__(self, "min_temp", 1e-4 * self.initial_temp)
        if self.initial_temp <= 0 or self.min_temp <= 0:
            raise ValueError("temperatures must be positive")
        if not 0.0 < self.cooling_factor < 1.0:
            raise ValueError("cooling_factor must lie in (0, 1)")
        if self.iters_per_temp < 1:
            raise ValueError("iters_per_temp must be >= 1")
        if self.proposal_scale <= 0:
            raise ValueError("proposal_scale must be positive")
        if not 0.0 <= self.weight_prune_threshold < 1.0:
            raise ValueError("weight_prune_threshold must lie in [0, 1)")

    @classmethod
    def auto(cls, objective_samples, **overrides) -> "AnnealingSchedule":
        """Self-scaling schedule: initial temperature from the sample
        standard deviation of the objective over random designs."""
        values = np.asarray(
            [v for v in objective_samples if math.isfinite(v)], dtype=float
        )
        spread = float(np.std(values)) if values.size > 1 else 0.0
        initial = max(spread, 1e-3)
        return cls(initial_temp=initial, **overrides)

    @property
    def greedy(self) -> bool:
        return self.min_temp >= self.initial_temp


@dataclass(frozen=True)
class GridSpec:
    """Allowed coordinate values per dimension for exact-design search."""

    levels: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        levels = tuple(tuple(sorted(float(v) for v in lv)) for lv in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) == 0:
            raise ValueError("grid needs at least one dimension")
        for lv in levels:
            if len(set(lv)) != len(lv) or len(lv) < 2:
                raise ValueError("each dimension needs >= 2 distinct levels")

    @property
    def q(self) -> int:
        return len(self.levels)

    @classmethod
    def regular(cls, q: int, lo: float = -1.0, hi: float = 1.0, num: int = 21):
        """Evenly spaced levels, rounded to 12 decimals so values like
        0.1 steps are canonical doubles."""
        lv = tuple(np.round(np.linspace(lo, hi, num), 12))
        return cls(tuple(lv for _ in range(q)))

    def snap(self, coords: np.ndarray) -> np.ndarray:
        """Map near-grid coordinates onto exact level values.

        Raises ValueError when any coordinate is farther than 1e-9 from
        every level of its dimension.
        """
        coords = np.array(coords, dtype=float)
        for j, lv in enumerate(self.levels):
            arr = np.asarray(lv)
            idx = np.abs(coords[:, j][:, None] - arr[None, :]).argmin(axis=1)
            nearest = arr[idx]
            if np.any(np.abs(coords[:, j] - nearest) > 1e-9):
                raise ValueError(f"coordinate off the grid in dimension {j}")
            coords[:, j] = nearest
        return coords


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Best design found, with provenance for reproducibility."""

    design: Design
    criterion: float
    trace: tuple[tuple[int, float], ...]
    seed: int
    assignment: PrnAssignment | None = None
    config_echo: dict = field(default_factory=dict)


def prune_weights(design: Design, threshold: float) -> Design:
    """Drop points whose weight fell below threshold and renormalize.

    If every weight is below threshold the heaviest point survives with
    weight one.
    """
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must lie in [0, 1)")
    if design.n * threshold >= 1.0:
        raise ValueError("threshold must be below 1/n")
    w = design.weights()
    keep = w >= threshold
    if not keep.any():
        keep = np.zeros_like(w, dtype=bool)
        keep[int(np.argmax(w))] = True
    if keep.all():
        return design
    coords = design.coords_matrix()[keep]
    kept = w[keep]
    return Design.from_arrays(coords, kept / kept.sum(), design.bounds)


def random_weighted_design(n: int, bounds, rng: np.random.Generator) -> Design:
    """Uniform random support points with Dirichlet(1) weights."""
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    coords = rng.uniform(lo, hi, size=(n, len(bounds)))
    weights = rng.dirichlet(np.ones(n))
    return Design.from_arrays(coords, weights, bounds)


def _softmax(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - logits.max())
    return e / e.sum()


def simulated_annealing(
    objective,
    initial: Design,
    schedule: AnnealingSchedule,
    seed: int,
    maximize: bool = True,
) -> OptimizationResult:
    """Anneal one weighted design against a deterministic objective.

    Each proposal perturbs a single point's coordinate or weight logit
    with a Gaussian step scaled by the proposal factor and the current
    temperature; weights are renormalized implicitly by the softmax.
    Weight pruning runs at every temperature drop so transiently small
    weights can recover within a level.
    """
    rng = np.random.default_rng(seed)
    bounds = initial.bounds
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    coords = initial.coords_matrix()
    weights = initial.weights()
    logits = np.log(np.maximum(weights, 1e-12))
    sign = 1.0 if maximize else -1.0

    def evaluate(c, l):
        return sign * objective(Design.from_arrays(c, _softmax(l), bounds))

    cur_val = evaluate(coords, logits)
    best = (coords.copy(), logits.copy(), cur_val)
    trace = [(0, sign * cur_val)]
    iteration = 0
    t = schedule.initial_temp
    q = coords.shape[1]
    while True:
        factor = math.sqrt(t / schedule.initial_temp)
        coord_sd = schedule.proposal_scale * (hi - lo) * factor
        logit_sd = 10.0 * schedule.proposal_scale * factor
        for _ in range(schedule.iters_per_temp):
            iteration += 1
            n = coords.shape[0]
            i = int(rng.integers(n))
            j = int(rng.integers(q + 1))
            if j < q:
                old = coords[i, j]
                coords[i, j] = float(
                    np.clip(old + rng.normal() * coord_sd[j], lo[j], hi[j])
                )
                new_val = evaluate(coords, logits)
                accept = _metropolis(new_val, cur_val, t, schedule.greedy, rng)
                if accept:
                    cur_val = new_val
                else:
                    coords[i, j] = old
            else:
                old = logits[i]
                logits[i] = old + rng.normal() * logit_sd
                new_val = evaluate(coords, logits)
                accept = _metropolis(new_val, cur_val, t, schedule.greedy, rng)
                if accept:
                    cur_val = new_val
                else:
                    logits[i] = old
            if cur_val > best[2]:
                best = (coords.copy(), logits.copy(), cur_val)
                trace.append((iteration, sign * cur_val))
        # weight pruning at the temperature drop
        thr = schedule.weight_prune_threshold
        if thr > 0.0 and coords.shape[0] > 1 and coords.shape[0] * thr < 1.0:
            w = _softmax(logits)
            keep = w >= thr
            if not keep.any():
                keep[int(np.argmax(w))] = True
            if not keep.all():
                coords = coords[keep]
                logits = logits[keep]
                cur_val = evaluate(coords, logits)
                if cur_val > best[2]:
                    best = (coords.copy(), logits.copy(), cur_val)
                    trace.append((iteration, sign * cur_val))
        t *= schedule.cooling_factor
        if t < schedule.min_temp:
            break

    best_design = Design.from_arrays(best[0], _softmax(best[1]), bounds)
    thr = schedule.weight_prune_threshold
    if thr > 0.0 and best_design.n * thr < 1.0:
        best_design = prune_weights(best_design, thr)
    criterion = objective(best_design)
    return OptimizationResult(
        design=best_design,
        criterion=criterion,
        trace=tuple(trace),
        seed=seed,
        config_echo={
            "optimizer": "simulated_annealing",
            "maximize": maximize,
            "schedule": {
                "initial_temp": schedule.initial_temp,
                "cooling_factor": schedule.cooling_factor,
                "iters_per_temp": schedule.iters_per_temp,
                "min_temp": schedule.min_temp,
                "proposal_scale": schedule.proposal_scale,
                "weight_prune_threshold": schedule.weight_prune_threshold,
            },
        },
    )


def _metropolis(new_val, cur_val, t, greedy, rng) -> bool:
    if new_val >= cur_val:
        return True
    if greedy:
        return False
    delta = new_val - cur_val  # finite negative or -inf
    return bool(rng.random() < math.exp(delta / t))


def anneal_weighted_design(
    objective,
    n_init: int,
    bounds,
    seed: int,
    schedule: AnnealingSchedule | None = None,
    restarts: int = 5,
    maximize: bool = True,
    schedule_samples: int = 50,
) -> OptimizationResult:
    """Multistart annealing from random weighted designs.

    When no schedule is given, the initial temperature is set to the
    sample standard deviation of the objective over ``schedule_samples``
    random designs.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    if schedule is None:
        probes = [
            objective(random_weighted_design(n_init, bounds, rng))
            for _ in range(schedule_samples)
        ]
        schedule = AnnealingSchedule.auto(probes)
    runs = []
    for _ in range(restarts):
        sub_seed = int(rng.integers(2**63 - 1))
        initial = random_weighted_design(n_init, bounds, rng)
        runs.append(
            simulated_annealing(objective, initial, schedule, sub_seed, maximize)
        )
    best = runs[0]
    for r in runs[1:]:
        improved = r.criterion > best.criterion if maximize else r.criterion < best.criterion
        if improved:
            best = r
    trace = _merge_traces([r.trace for r in runs], maximize)
    echo = dict(best.config_echo)
    echo.update({"restarts": restarts, "n_init": n_init})
    return OptimizationResult(
        design=best.design,
        criterion=best.criterion,
        trace=trace,
        seed=seed,
        config_echo=echo,
    )


def _merge_traces(traces, maximize: bool) -> tuple[tuple[int, float], ...]:
    """Concatenate restart traces into one best-so-far monotone trace."""
    merged = []
    offset = 0
    best = -math.inf if maximize else math.inf
    for tr in traces:
        last = 0
        for it, val in tr:
            if (maximize and val > best) or (not maximize and val < best):
                best = val
                merged.append((offset + it, best))
            last = it
        offset += last + 1
    return tuple(merged)


def coordinate_exchange(
    objective,
    initial: Design,
    grid: GridSpec,
    max_passes: int = 50,
    seed: int = 0,
) -> OptimizationResult:
    """Minimize an objective by sweeping point coordinates over a grid.

    Sweeps are deterministic (points in order, coordinates in order,
    candidate levels ascending); ties go to the current value first,
    then to the smaller level.  Terminates after a pass with no change
    or at ``max_passes``.  The seed does not influence the sweep and is
    only echoed into the result.
    """
    if initial.q != grid.q:
        raise ValueError(f"design has dimension {initial.q}, grid has {grid.q}")
    coords = grid.snap(initial.coords_matrix())
    weights = initial.weights()
    bounds = initial.bounds
    n, q = coords.shape

    def make(c):
        return Design.from_arrays(c, weights, bounds)

    cur_val = objective(make(coords))
    evals = 1
    trace = [(evals, cur_val)]
    for _ in range(max_passes):
        changed = False
        for i in range(n):
            for j in range(q):
                cur_level = coords[i, j]
                best_level, best_val = cur_level, cur_val
                for level in grid.levels[j]:
                    if level == cur_level:
                        continue
                    coords[i, j] = level
                    val = objective(make(coords))
                    evals += 1
                    if val < best_val:
                        best_level, best_val = level, val
                    # exact tie keeps the earlier (current, then smaller) level
                coords[i, j] = best_level
                if best_level != cur_level:
                    cur_val = best_val
                    changed = True
                    trace.append((evals, cur_val))
        if not changed:
            break
    design = make(coords)
    criterion = objective(design)
    return OptimizationResult(
        design=design,
        criterion=criterion,
        trace=tuple(trace),
        seed=seed,
        config_echo={"optimizer": "coordinate_exchange", "max_passes": max_passes},
    )


# ---------------------------------------------------------------------------
# PRN assignment enumeration
# ---------------------------------------------------------------------------


def _decode_assignments(idx: np.ndarray, n: int, g: int) -> np.ndarray:
    """Assignment rows for enumeration indices, k(1) fixed to stream 1.

    Index digits are big-endian base-2g over positions 2..n, so rows
    come out in lexicographic order.
    """
    width = 2 * g
    k = np.empty((idx.shape[0], n), dtype=np.int64)
    k[:, 0] = 1
    rem = idx.copy()
    for pos in range(n - 1, 0, -1):
        k[:, pos] = rem % width + 1
        rem //= width
    return k


class PrnAssignmentSearch:
    """Exhaustive inner minimization over stream assignments.

    Fixing k(1) = 1 exploits the stream-relabeling symmetry and cuts
    the raw (2g)^n space 2g-fold.  Node admissibility depends on an
    assignment only through its per-stream counts, so it is computed
    once per unique count vector and reused across designs.
    """

    def __init__(self, n: int, g: int, grid, budget: int = 1 << 24):
        self.n, self.g, self.grid = n, int(g), grid
        if self.g < 1:
            raise ValueError("g must be >= 1")
        self.count = (2 * self.g) ** (n - 1)
        if self.count > budget:
            raise EnumerationBudgetError(
                f"{self.count} candidate assignments exceed the budget of {budget}"
            )
        self.blocks = _node_blocks(self.g, grid)
        self.rho_plus = grid.nodes[:, 1]
        self._materialized = self.count <= ENUM_CHUNK
        if self._materialized:
            self._k = _decode_assignments(np.arange(self.count), n, self.g)
            counts = _stream_counts(self._k, self.g)
            valid = _node_validity(counts, self.blocks, self.rho_plus)
            self._feasible = valid.all(axis=1)

    def _chunks(self):
        if self._materialized:
            yield self._k, self._feasible
            return
        for start in range(0, self.count, ENUM_CHUNK):
            idx = np.arange(start, min(start + ENUM_CHUNK, self.count))
            k = _decode_assignments(idx, self.n, self.g)
            counts = _stream_counts(k, self.g)
            valid = _node_validity(counts, self.blocks, self.rho_plus)
            yield k, valid.all(axis=1)

    def best(self, F: np.ndarray) -> tuple[np.ndarray, float]:
        """Minimizing assignment and value; lexicographically smallest
        k wins exact ties.  Returns (all-ones, +inf) when nothing is
        feasible (rank-deficient F)."""
        F = np.asarray(F, dtype=float)
        ftf = F.T @ F
        sign, base = np.linalg.slogdet(ftf)
        best_val = math.inf
        best_k = np.ones(self.n, dtype=np.int64)
        if F.shape[0] < F.shape[1] or sign <= 0:
            return best_k, best_val
        for k, feasible in self._chunks():
            if not feasible.any():
                continue
            vals = _prn_values_feasible(
                F,
                ftf,
                float(base),
                k[feasible],
                self.g,
                self.blocks,
                self.rho_plus,
                self.grid.weights,
            )
            i = int(np.argmin(vals))
            if vals[i] < best_val:
                best_val = float(vals[i])
                best_k = k[feasible][i].copy()
        return best_k, best_val

    def value(self, F: np.ndarray) -> float:
        return self.best(F)[1]


def best_prn_assignment(
    design: Design,
    basis: BasisSpec,
    grid,
    g: int,
    budget: int = 1 << 24,
) -> tuple[PrnAssignment, float]:
    """Exhaustive minimum of the PRN quadrature criterion over assignments."""
    search = PrnAssignmentSearch(design.n, g, grid, budget)
    F = expand_coords(design.coords_matrix(), basis)
    k, value = search.best(F)
    return PrnAssignment(g, tuple(int(v) for v in k)), value


def random_grid_design(grid: GridSpec, n: int, rng: np.random.Generator) -> Design:
    """Uniform exact design with coordinates drawn from the grid levels."""
    cols = [rng.choice(np.asarray(lv), size=n) for lv in grid.levels]
    coords = np.column_stack(cols)
    bounds = tuple((lv[0], lv[-1]) for lv in grid.levels)
    return Design.from_arrays(coords, None, bounds)


def joint_optimize(
    basis: BasisSpec,
    grid_spec: GridSpec,
    quad_grid,
    n: int,
    g: int,
    seed: int,
    restarts: int = 5,
    max_passes: int = 50,
    budget: int = 1 << 24,
) -> OptimizationResult:
    """Joint search over design coordinates and PRN stream assignment.

    Coordinate exchange moves the points; every objective evaluation
    runs the exhaustive inner assignment minimization.
    """
    if grid_spec.q != basis.q:
        raise ValueError("grid and basis dimensions differ")
    rng = np.random.default_rng(seed)
    echo = {
        "optimizer": "joint_prn",
        "n": n,
        "g": g,
        "restarts": restarts,
        "quad_nodes": int(quad_grid.M),
    }
    if basis.d > n:
        design = random_grid_design(grid_spec, n, rng)
        return OptimizationResult(
            design=design,
            criterion=math.inf,
            trace=((0, math.inf),),
            seed=seed,
            config_echo=dict(echo, infeasible="d > n"),
        )
    search = PrnAssignmentSearch(n, g, quad_grid, budget)

    def inner_value(design: Design) -> float:
        return search.value(expand_coords(design.coords_matrix(), basis))

    best_run = None
    traces = []
    for _ in range(restarts):
        sub_seed = int(rng.integers(2**63 - 1))
        initial = random_grid_design(grid_spec, n, rng)
        run = coordinate_exchange(
            inner_value, initial, grid_spec, max_passes, seed=sub_seed
        )
        traces.append(run.trace)
        if best_run is None or run.criterion < best_run.criterion:
            best_run = run
    k, value = search.best(expand_coords(best_run.design.coords_matrix(), basis))
    assignment = PrnAssignment(g, tuple(int(v) for v in k))
    return OptimizationResult(
        design=best_run.design,
        criterion=value,
        trace=_merge_traces(traces, maximize=False),
        seed=seed,
        assignment=assignment,
        config_echo=echo,
    )
