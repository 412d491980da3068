"""Reference-point multi-objective genetic algorithm (minimization).

A from-scratch implementation of the NSGA-III generational loop: uniform
initialisation within gene bounds, binary tournament selection, simulated
binary crossover, bounded polynomial mutation, and environmental selection
by non-dominated sorting plus reference-point niching on the unit simplex.

Every stochastic step draws from a single `numpy.random.Generator` in a
documented, fixed order, so a (config, seed, deterministic callback)
triple fully determines the run.  Evaluation callbacks receive a
`(generation, index)` seed tag and may be dispatched through any
order-preserving `map_fn` (the builtin `map`, or a process pool's `.map`),
which must not change results, only wall-clock time.

All tie-breaks are deterministic and documented where they occur:
 - association: lowest reference-point index (argmin convention)
 - niching: lowest reference index, then lowest candidate index
   (empty niches pick their closest candidate first)
 - tournament: rank, then niche count, then an explicit coin flip
"""

from __future__ import annotations

import copy
import functools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeneSpec",
    "Individual",
    "ReferencePointSet",
    "GAConfig",
    "EvaluationError",
    "das_dennis",
    "reference_partitions",
    "reference_points_for",
    "dominates",
    "nondominated_sort",
    "normalize_objectives",
    "associate",
    "associate_and_niche",
    "tournament_select",
    "sbx_spread_factor",
    "sbx_crossover",
    "polynomial_mutation",
    "evolve",
    "write_population_csv",
]


@dataclass(frozen=True)
class GeneSpec:
    """One real-valued gene with closed bounds in semantic units."""

    name: str
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError(f"gene {self.name!r}: bounds must be finite")
        if not self.lower < self.upper:
            raise ValueError(
                f"gene {self.name!r}: lower bound {self.lower} must be < upper {self.upper}"
            )


@dataclass
class Individual:
    """A candidate solution: gene vector plus evaluation/survival bookkeeping.

    `rank` is the non-domination front index within the population the
    individual was last sorted in; `niche` the associated reference-point
    index; `niche_count` how many members of that population share the
    niche (itself included).  `eval_seed_tag` is the (generation, index)
    pair handed to the evaluation callback, recorded for reproducibility.
    """

    genes: np.ndarray
    objectives: np.ndarray | None = None
    rank: int = -1
    niche: int = -1
    niche_count: int = 0
    eval_seed_tag: tuple[int, int] | None = None

    @property
    def evaluated(self) -> bool:
        return self.objectives is not None


@dataclass(frozen=True)
class ReferencePointSet:
    """Simplex-lattice reference directions: every coordinate a multiple of 1/p."""

    points: np.ndarray  # (count, M), rows sum to 1
    M: int
    p: int

    def __post_init__(self) -> None:
        expected = math.comb(self.M + self.p - 1, self.p)
        if self.points.shape != (expected, self.M):
            raise ValueError(
                f"reference set shape {self.points.shape} != ({expected}, {self.M}) for M={self.M}, p={self.p}"
            )

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class GAConfig:
    """Generational-loop configuration; operator constants are overridable."""

    genes: tuple[GeneSpec, ...]
    population_size: int = 25
    generations: int = 50
    eta_c: float = 30.0
    p_c: float = 1.0
    eta_m: float = 20.0
    p_m: float | None = None  # None -> 1 / number of genes
    reevaluate_survivors: bool = False

    def __post_init__(self) -> None:
        if not self.genes:
            raise ValueError("at least one gene is required")
        if self.population_size < 2:
            raise ValueError("population size must be >= 2 (tournament needs distinct candidates)")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0.0 <= self.p_c <= 1.0:
            raise ValueError(f"p_c must be in [0, 1], got {self.p_c}")
        if self.p_m is not None and not 0.0 <= self.p_m <= 1.0:
            raise ValueError(f"p_m must be in [0, 1], got {self.p_m}")
        if self.eta_c <= 0 or self.eta_m <= 0:
            raise ValueError("distribution indices must be positive")

    @property
    def resolved_p_m(self) -> float:
        return self.p_m if self.p_m is not None else 1.0 / len(self.genes)

    @property
    def lower(self) -> np.ndarray:
        return np.array([g.lower for g in self.genes])

    @property
    def upper(self) -> np.ndarray:
        return np.array([g.upper for g in self.genes])

    @property
    def gene_names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.genes)


class EvaluationError(RuntimeError):
    """An evaluation callback failed; carries the (generation, index) context."""

    def __init__(self, message: str, generation: int = -1, index: int = -1):
        super().__init__(message, generation, index)
        self.generation = generation
        self.index = index

    def __str__(self) -> str:
        return f"{self.args[0]} (generation {self.generation}, individual {self.index})"


def _compositions(total: int, parts: int):
    """All ways to write `total` as an ordered sum of `parts` non-negatives, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def das_dennis(M: int, p: int) -> ReferencePointSet:
    """Simplex-lattice directions with denominator p, in lexicographic order."""
    if M < 2:
        raise ValueError(f"need at least 2 objectives, got {M}")
    if p < 1:
        raise ValueError(f"need at least 1 partition, got {p}")
    grid = np.array(list(_compositions(p, M)), dtype=float)
    return ReferencePointSet(points=grid / p, M=M, p=p)


def reference_partitions(M: int, N: int) -> int:
    """Smallest p whose lattice has at least N points."""
    p = 1
    while math.comb(M + p - 1, p) < N:
        p += 1
    return p


def reference_points_for(M: int, N: int) -> ReferencePointSet:
    return das_dennis(M, reference_partitions(M, N))


def dominates(a, b) -> bool:
    """True iff a is no worse than b everywhere and strictly better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors differ in shape: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_sort(objectives) -> list[list[int]]:
    """Partition row indices into successive non-dominated fronts.

    Front k is the non-dominated set after removing fronts < k; within a
    front, indices keep input order.  Pairwise dominance is materialised
    as an (n, n) boolean matrix, fine for the population sizes used here.
    """
    F = np.asarray(objectives, dtype=float)
    if F.ndim != 2:
        raise ValueError(f"expected an (n, M) objective matrix, got shape {F.shape}")
    n = F.shape[0]
    if n == 0:
        return []
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0).astype(int)
    assigned = np.zeros(n, dtype=bool)
    fronts: list[list[int]] = []
    while not assigned.all():
        current = np.nonzero(~assigned & (counts == 0))[0]
        fronts.append(current.tolist())
        assigned[current] = True
        counts -= dom[current].sum(axis=0)
    return fronts


_ASF_EPS = 1e-6
_INTERCEPT_FLOOR = 1e-12


def normalize_objectives(objectives, ideal: np.ndarray | None = None):
    """Translate by the (running) ideal point and scale by hyperplane intercepts.

    Per-axis extreme points minimise the achievement scalarizing function
    max_m(translated_m / w_m) with w = unit axis, off-axis weights 1e-6.
    The hyperplane through the extremes gives the intercepts; a singular
    system, non-positive or non-finite intercepts fall back to the
    per-objective max of the translated values, floored at 1e-12.

    Returns (normalized matrix, updated ideal).
    """
    F = np.asarray(objectives, dtype=float)
    batch_min = F.min(axis=0)
    ideal = batch_min if ideal is None else np.minimum(np.asarray(ideal, dtype=float), batch_min)
    T = F - ideal
    M = F.shape[1]

    weights = np.full((M, M), _ASF_EPS)
    np.fill_diagonal(weights, 1.0)
    extreme_idx = [int(np.argmin((T / weights[j]).max(axis=1))) for j in range(M)]

    intercepts = None
    try:
        sol = np.linalg.solve(T[extreme_idx], np.ones(M))
    except np.linalg.LinAlgError:
        sol = None
    if sol is not None and np.all(np.isfinite(sol)) and np.all(sol > _INTERCEPT_FLOOR):
        cand = 1.0 / sol
        if np.all(np.isfinite(cand)) and np.all(cand > _INTERCEPT_FLOOR):
            intercepts = cand
    if intercepts is None:
        intercepts = T.max(axis=0)
    intercepts = np.maximum(intercepts, _INTERCEPT_FLOOR)
    return T / intercepts, ideal


def associate(normalized: np.ndarray, ref_points) -> tuple[np.ndarray, np.ndarray]:
    """Per row: (closest reference index, perpendicular distance to its direction).

    Distance is from the point to the line through the origin along the
    reference direction; argmin breaks ties toward the lowest index.
    `ref_points` may be a ReferencePointSet or a plain (R, M) array.
    """
    if isinstance(ref_points, ReferencePointSet):
        ref_points = ref_points.points
    W = np.asarray(ref_points, dtype=float)
    scale = (W * W).sum(axis=1)
    proj = (normalized @ W.T) / scale  # (n, R) projection coefficients
    residual = normalized[:, None, :] - proj[:, :, None] * W[None, :, :]
    dist = np.sqrt((residual * residual).sum(axis=2))
    niche = dist.argmin(axis=1)
    return niche, dist[np.arange(dist.shape[0]), niche]


def associate_and_niche(
    fronts: list[list[int]],
    normalized: np.ndarray,
    refs,
    N: int,
):
    """NSGA-III environmental selection: whole fronts, then niching on the split front.

    Returns (survivor indices, niche index per row, distance per row); the
    niche/distance arrays cover every row of `normalized` (survivors use
    them for bookkeeping).  Survivor order: accepted fronts in input
    order, then niched picks in pick order.  Tie rules: least-crowded
    niche, lowest reference index; within a niche, minimum distance when
    the niche is empty, else lowest candidate index.  `refs` may be a
    ReferencePointSet or a plain (R, M) array.
    """
    total = sum(len(f) for f in fronts)
    if total < N:
        raise ValueError(f"cannot select {N} survivors from {total} candidates")
    points = refs.points if isinstance(refs, ReferencePointSet) else np.asarray(refs, dtype=float)
    niche, dist = associate(normalized, points)

    survivors: list[int] = []
    k = 0
    while k < len(fronts) and len(survivors) + len(fronts[k]) <= N:
        survivors.extend(fronts[k])
        k += 1
    if len(survivors) == N:
        return survivors, niche, dist

    rho = np.zeros(points.shape[0], dtype=int)
    for i in survivors:
        rho[niche[i]] += 1
    pending: dict[int, list[int]] = {}
    for i in fronts[k]:
        pending.setdefault(int(niche[i]), []).append(i)

    while len(survivors) < N:
        live = [r for r, cands in pending.items() if cands]
        r_min = min(rho[r] for r in live)
        j = min(r for r in live if rho[r] == r_min)
        cands = pending[j]
        if rho[j] == 0:
            pick = min(cands, key=lambda i: (dist[i], i))
        else:
            pick = min(cands)
        cands.remove(pick)
        if not cands:
            del pending[j]
        survivors.append(pick)
        rho[j] += 1
    return survivors, niche, dist


def tournament_select(pop: list[Individual], rng: np.random.Generator) -> int:
    """Binary tournament over two uniformly drawn distinct indices.

    Lower rank wins; equal ranks, smaller niche count wins; still tied,
    a coin flip decides.  Returns the winning population index.
    """
    n = len(pop)
    if n < 2:
        raise ValueError("tournament needs at least 2 individuals")
    i = int(rng.integers(n))
    j = int(rng.integers(n - 1))
    if j >= i:
        j += 1
    a, b = pop[i], pop[j]
    if a.rank != b.rank:
        return i if a.rank < b.rank else j
    if a.niche_count != b.niche_count:
        return i if a.niche_count < b.niche_count else j
    return i if rng.random() < 0.5 else j


def sbx_spread_factor(u, eta_c: float):
    """Spread factor beta from u in [0, 1): contracting for u < 0.5, expanding above.

    u = 0.5 gives beta = 1 exactly (children coincide with parents).
    """
    u = np.asarray(u, dtype=float)
    exponent = 1.0 / (eta_c + 1.0)
    return np.where(u <= 0.5, (2.0 * u) ** exponent, (2.0 * (1.0 - u)) ** -exponent)


def sbx_crossover(
    p1: np.ndarray,
    p2: np.ndarray,
    eta_c: float,
    p_c: float,
    rng: np.random.Generator,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
):
    """Simulated binary crossover; returns two children.

    Draw order: one uniform for the whole-pair gate (skip crossover with
    probability 1 - p_c, children are copies); then a per-gene gate
    vector and a per-gene spread vector.  Genes whose gate is >= 0.5 are
    copied from the parents.  Children are p1 + t and p2 - t with the
    shared correction t = (1 - beta)(p2 - p1) / 2: the corrections cancel
    before the final roundings, so the pair sum equals p1 + p2 up to one
    rounding per child, and beta = 1 (or p1 == p2) reproduces the parents
    bit for bit.  Bounds, when given, clip the result.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if rng.random() > p_c:
        return p1.copy(), p2.copy()
    gate = rng.random(p1.size)
    u = rng.random(p1.size)
    beta = sbx_spread_factor(u, eta_c)
    t = 0.5 * (1.0 - beta) * (p2 - p1)
    cross = gate < 0.5
    c1 = np.where(cross, p1 + t, p1)
    c2 = np.where(cross, p2 - t, p2)
    if lower is not None:
        c1 = np.clip(c1, lower, upper)
        c2 = np.clip(c2, lower, upper)
    return c1, c2


def polynomial_mutation(
    genes: np.ndarray,
    eta_m: float,
    p_m: float,
    lower: np.ndarray,
    upper: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Bounded polynomial mutation; returns a new gene vector.

    Draw order: a per-gene gate vector, then a per-gene u vector (both
    always drawn, so the stream advances identically whatever mutates).
    u = 0.5 leaves a gene exactly unchanged; a gene sitting on a bound
    cannot move toward the outside.
    """
    x = np.asarray(genes, dtype=float)
    gate = rng.random(x.size)
    u = rng.random(x.size)
    apply = gate < p_m
    if not apply.any():
        return x.copy()
    span = upper - lower
    d1 = (x - lower) / span
    d2 = (upper - x) / span
    exp_hi = eta_m + 1.0
    exp_lo = 1.0 / exp_hi
    val_lo = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** exp_hi
    val_hi = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** exp_hi
    dq = np.where(
        u <= 0.5,
        np.maximum(val_lo, 0.0) ** exp_lo - 1.0,
        1.0 - np.maximum(val_hi, 0.0) ** exp_lo,
    )
    mutated = np.clip(x + dq * span, lower, upper)
    return np.where(apply, mutated, x)


def _call_problem(problem, task):
    """Top-level evaluation wrapper so process pools can pickle the work items."""
    genes, tag = task
    try:
        objectives = problem(genes, tag)
    except Exception as exc:  # noqa: BLE001 - context is the point
        raise EvaluationError(
            f"evaluation callback raised {exc!r}", generation=tag[0], index=tag[1]
        ) from exc
    out = np.asarray(objectives, dtype=float)
    if out.ndim != 1 or out.size == 0:
        raise EvaluationError(
            f"callback returned shape {out.shape}, expected a flat objective vector",
            generation=tag[0],
            index=tag[1],
        )
    if not np.all(np.isfinite(out)):
        raise EvaluationError(
            f"callback returned non-finite objectives {out!r}", generation=tag[0], index=tag[1]
        )
    return out


def _evaluate(pop, generation, map_fn, problem, index_offset=0):
    tasks = []
    targets = []
    for i, ind in enumerate(pop):
        if ind.evaluated:
            continue
        tag = (generation, index_offset + len(tasks))
        ind.eval_seed_tag = tag
        tasks.append((ind.genes, tag))
        targets.append(ind)
    if not tasks:
        return
    for ind, objectives in zip(targets, map_fn(functools.partial(_call_problem, problem), tasks)):
        ind.objectives = objectives


def _annotate(pop, refs, ideal):
    """Assign rank/niche/niche_count within `pop`; returns the updated ideal."""
    F = np.array([ind.objectives for ind in pop])
    for rank, front in enumerate(nondominated_sort(F)):
        for i in front:
            pop[i].rank = rank
    normalized, ideal = normalize_objectives(F, ideal)
    niche, _dist = associate(normalized, refs.points)
    counts = np.bincount(niche, minlength=len(refs))
    for i, ind in enumerate(pop):
        ind.niche = int(niche[i])
        ind.niche_count = int(counts[niche[i]])
    return ideal


def evolve(
    problem,
    config: GAConfig,
    seed,
    map_fn=map,
    refs: ReferencePointSet | None = None,
) -> list[list[Individual]]:
    """Run the generational loop; returns one evaluated population per generation.

    `problem(genes, (generation, index)) -> objective vector` must be pure
    given its arguments.  `seed` feeds `numpy.random.default_rng` (ints,
    SeedSequences and Generators all work).  `map_fn` dispatches the
    evaluations of one batch and must preserve order.

    history[g] holds the N survivors of generation g (g=0: the initial
    population), annotated with rank/niche within that population; the
    snapshots are independent copies, safe to keep.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    N = config.population_size
    lower, upper = config.lower, config.upper
    n_genes = len(config.genes)

    init = lower + rng.random((N, n_genes)) * (upper - lower)
    pop = [Individual(genes=init[i]) for i in range(N)]
    _evaluate(pop, 0, map_fn, problem)

    M = pop[0].objectives.size
    for ind in pop:
        if ind.objectives.size != M:
            raise EvaluationError(
                f"inconsistent objective count: {ind.objectives.size} vs {M}",
                generation=0,
                index=pop.index(ind),
            )
    if refs is None:
        refs = reference_points_for(M, N)
    elif refs.M != M:
        raise ValueError(f"reference set has M={refs.M} but problem returned {M} objectives")

    ideal = _annotate(pop, refs, None)
    history = [[copy.copy(ind) for ind in pop]]

    for gen in range(1, config.generations + 1):
        offspring: list[Individual] = []
        while len(offspring) < N:
            pa = pop[tournament_select(pop, rng)]
            pb = pop[tournament_select(pop, rng)]
            c1, c2 = sbx_crossover(
                pa.genes, pb.genes, config.eta_c, config.p_c, rng, lower, upper
            )
            for child in (c1, c2):
                mutated = polynomial_mutation(
                    child, config.eta_m, config.resolved_p_m, lower, upper, rng
                )
                offspring.append(Individual(genes=mutated))
        del offspring[N:]  # odd N: drop the last pair's second child

        _evaluate(offspring, gen, map_fn, problem)
        if config.reevaluate_survivors:
            for ind in pop:
                ind.objectives = None
            _evaluate(pop, gen, map_fn, problem, index_offset=N)

        merged = pop + offspring
        F = np.array([ind.objectives for ind in merged])
        fronts = nondominated_sort(F)
        for rank, front in enumerate(fronts):
            for i in front:
                merged[i].rank = rank
        normalized, ideal = normalize_objectives(F, ideal)
        survivor_idx, _niche, _dist = associate_and_niche(fronts, normalized, refs, N)
        pop = [merged[i] for i in survivor_idx]
        ideal = _annotate(pop, refs, ideal)
        history.append([copy.copy(ind) for ind in pop])

    return history


def write_population_csv(history, gene_names, objective_names, path) -> None:
    """Dump every generation as CSV: generation,index,rank,<genes>,<objectives>."""
    header = ["generation", "index", "rank", *gene_names, *objective_names]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for gen, pop in enumerate(history):
            for idx, ind in enumerate(pop):
                cells = [str(gen), str(idx), str(ind.rank)]
                cells += [repr(float(g)) for g in ind.genes]
                cells += [repr(float(o)) for o in ind.objectives]
                fh.write(",".join(cells) + "\n")
