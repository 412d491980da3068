"""Genetic-engine unit tests: lattice, sorting, normalization, niching, operators, loop.

Sorting and niching are checked against small independent re-implementations
written directly from their published definitions; the variation operators
are checked at their algebraic fixed points with scripted uniforms, and
statistically against closed-form expectations where sampling is involved.
"""

import concurrent.futures
import itertools
import math
import pickle
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from snnfit.analysis import load_population_csv
from snnfit.nsga3 import (
    EvaluationError,
    GAConfig,
    GeneSpec,
    Individual,
    ReferencePointSet,
    associate,
    associate_and_niche,
    das_dennis,
    dominates,
    evolve,
    nondominated_sort,
    normalize_objectives,
    polynomial_mutation,
    reference_partitions,
    reference_points_for,
    sbx_crossover,
    sbx_spread_factor,
    tournament_select,
    write_population_csv,
)


def sphere_pair(genes, tag):
    """Two convex bowls with minima at 0 and 2; the front is x in [0, 2]."""
    x = genes[0]
    return np.array([x * x, (x - 2.0) ** 2])


class ScriptedRng:
    """Feeds predetermined uniforms to the operators, mimicking Generator.random."""

    def __init__(self, values):
        self.values = list(values)

    def random(self, size=None):
        v = self.values.pop(0)
        if size is None:
            return float(v)
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 0:
            arr = np.full(size, float(arr))
        assert arr.size == size
        return arr


def oracle_fronts(F):
    """Quadratic repeated-removal front peeling, straight from the definition."""
    F = np.asarray(F, dtype=float)
    remaining = list(range(len(F)))
    fronts = []
    while remaining:
        front = []
        for i in remaining:
            dominated = False
            for j in remaining:
                if j == i:
                    continue
                if (F[j] <= F[i]).all() and (F[j] < F[i]).any():
                    dominated = True
                    break
            if not dominated:
                front.append(i)
        fronts.append(front)
        remaining = [i for i in remaining if i not in front]
    return fronts


def reference_niching(fronts, normalized, ref_points, N):
    """Published niche-preservation loop, re-derived independently."""
    survivors = []
    split = None
    for fr in fronts:
        if len(survivors) + len(fr) <= N:
            survivors.extend(fr)
        else:
            split = fr
            break
    if split is None:
        return survivors
    R = len(ref_points)
    niche = np.empty(len(normalized), dtype=int)
    dmat = np.empty(len(normalized))
    for i, z in enumerate(normalized):
        best = None
        for j, wdir in enumerate(ref_points):
            wn = wdir / np.linalg.norm(wdir)
            proj = float(z @ wn)
            d = float(np.linalg.norm(z - proj * wn))
            if best is None or d < best[0]:
                best = (d, j)
        dmat[i] = best[0]
        niche[i] = best[1]
    rho = np.zeros(R, dtype=int)
    for i in survivors:
        rho[niche[i]] += 1
    pending = {j: [i for i in split if niche[i] == j] for j in range(R)}
    while len(survivors) < N:
        live = [j for j in range(R) if pending[j]]
        rmin = min(rho[j] for j in live)
        j = min(jj for jj in live if rho[jj] == rmin)
        cands = pending[j]
        if rho[j] == 0:
            pick = min(cands, key=lambda i: (dmat[i], i))
        else:
            pick = min(cands)
        cands.remove(pick)
        survivors.append(pick)
        rho[j] += 1
    return survivors


# ------------------------------------------------------------------ lattice


def test_das_dennis_edge_lattice():
    refs = das_dennis(2, 1)
    assert refs.points.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    assert refs.M == 2 and refs.p == 1


def test_das_dennis_axis_sweep_is_lexicographic():
    refs = das_dennis(2, 24)
    assert len(refs) == 25
    expected = np.array([[k, 24 - k] for k in range(25)], dtype=float) / 24.0
    assert (refs.points == expected).all()


def test_das_dennis_three_objective_quarters():
    refs = das_dennis(3, 4)
    assert len(refs) == 15
    expected = [
        (i, j, 4 - i - j)
        for i in range(5)
        for j in range(5 - i)
    ]
    assert (refs.points == np.array(expected, dtype=float) / 4.0).all()
    assert (refs.points.sum(axis=1) == 1.0).all()  # quarters are dyadic, sums exact


def test_reference_partition_choice():
    assert reference_partitions(2, 25) == 24
    assert reference_partitions(3, 25) == 6
    assert len(reference_points_for(2, 25)) == 25
    assert len(reference_points_for(3, 25)) == 28


def test_reference_point_set_validates_count():
    with pytest.raises(ValueError):
        ReferencePointSet(points=np.zeros((3, 2)), M=2, p=24)


# ---------------------------------------------------------------- dominance


def test_dominates_basics():
    assert dominates(np.array([1.0, 2.0]), np.array([2.0, 3.0]))
    assert dominates(np.array([1.0, 2.0]), np.array([1.0, 3.0]))
    assert not dominates(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    assert not dominates(np.array([1.0, 3.0]), np.array([2.0, 2.0]))
    assert not dominates(np.array([2.0, 3.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        dominates(np.array([1.0, 2.0]), np.array([1.0, 2.0, 3.0]))


def test_sort_identical_points_share_front_zero():
    F = np.full((6, 3), 2.5)
    assert nondominated_sort(F) == [list(range(6))]


def test_sort_trade_off_chain_is_one_front():
    F = np.array([[1.0, 4.0], [2.0, 3.0], [3.0, 2.0], [4.0, 1.0]])
    assert nondominated_sort(F) == [[0, 1, 2, 3]]


def test_sort_strict_chain_peels_one_per_front():
    F = np.array([[3.0, 3.0], [2.0, 2.0], [1.0, 1.0]])
    assert nondominated_sort(F) == [[2], [1], [0]]


def test_sort_matches_definition_on_random_instances():
    rng = np.random.default_rng(31)
    for _ in range(20):
        n = int(rng.integers(1, 64))
        M = int(rng.integers(2, 4))
        if rng.random() < 0.5:
            F = rng.integers(0, 6, size=(n, M)).astype(float)  # ties on purpose
        else:
            F = rng.random((n, M))
        assert nondominated_sort(F) == oracle_fronts(F)


# ------------------------------------------------------------ normalization


def test_normalize_is_identity_on_the_unit_square():
    F = np.array([[0.0, 1.0], [1.0, 0.0], [0.25, 0.25]])
    normalized, ideal = normalize_objectives(F)
    assert (normalized == F).all()
    assert ideal.tolist() == [0.0, 0.0]


def test_normalize_collapses_identical_points_to_zero():
    F = np.full((4, 2), 2.0)
    normalized, ideal = normalize_objectives(F)
    assert (normalized == 0.0).all()
    assert ideal.tolist() == [2.0, 2.0]
    assert np.isfinite(normalized).all()


def test_normalize_puts_extreme_hyperplane_at_unit_intercepts():
    rng = np.random.default_rng(3)
    cloud = rng.uniform(0.5, 4.0, size=(64, 2))
    normalized, ideal = normalize_objectives(cloud)
    # recompute the achievement-scalarized extremes independently
    T = cloud - cloud.min(axis=0)
    W = np.full((2, 2), 1e-6)
    np.fill_diagonal(W, 1.0)
    extreme = [int(np.argmin((T / W[j]).max(axis=1))) for j in range(2)]
    sol = np.linalg.solve(normalized[extreme], np.ones(2))
    np.testing.assert_allclose(1.0 / sol, [1.0, 1.0], rtol=1e-9)
    assert ideal.tolist() == cloud.min(axis=0).tolist()


def test_normalize_keeps_running_ideal():
    _, ideal = normalize_objectives(np.array([[1.0, 3.0], [3.0, 1.0]]))
    assert ideal.tolist() == [1.0, 1.0]
    B = np.array([[2.0, 5.0], [5.0, 0.5]])
    normalized, new_ideal = normalize_objectives(B, ideal=ideal)
    assert new_ideal.tolist() == [1.0, 0.5]
    # translation happens against the running ideal, not the batch minimum
    assert (normalized >= 0.0).all()
    assert normalized[0, 0] > 0.0


# ------------------------------------------------------------- association


def test_associate_perpendicular_distance_and_tie():
    refs = das_dennis(2, 1)  # directions (0,1) and (1,0)
    niche, dist = associate(np.array([[2.0, 0.1], [0.3, 0.3]]), refs)
    assert niche.tolist() == [1, 0]  # equidistant diagonal point takes the lower index
    assert dist[0] == pytest.approx(0.1, abs=1e-12)
    assert dist[1] == pytest.approx(0.3, abs=1e-12)


def test_whole_fronts_that_fit_skip_niching():
    normalized = np.array([[0.1, 0.9], [0.9, 0.1], [0.5, 0.6], [0.7, 0.7]])
    refs = das_dennis(2, 4)
    survivors, _, _ = associate_and_niche([[0, 1], [2], [3]], normalized, refs, 3)
    assert survivors == [0, 1, 2]


def test_single_survivor_is_closest_in_lowest_live_niche():
    pts = np.array([[0.05, 0.9], [0.5, 0.5], [0.9, 0.1]])
    fronts = nondominated_sort(pts)
    normalized, _ = normalize_objectives(pts)
    refs = das_dennis(2, 1)
    survivors, niche, dist = associate_and_niche(fronts, normalized, refs, 1)
    assert survivors == [0]


def test_niching_needs_enough_candidates():
    with pytest.raises(ValueError):
        associate_and_niche([[0]], np.array([[0.5, 0.5]]), das_dennis(2, 1), 2)


def test_niching_matches_published_loop_on_well_spread_front():
    lattice = np.array([[k / 24.0, 1.0 - k / 24.0] for k in range(25)])
    extra = np.array([[(k + 0.5) / 24.0, 1.0 - (k + 0.5) / 24.0] for k in [2, 7, 12, 17, 22]])
    pts = np.vstack([lattice, extra])
    fronts = nondominated_sort(pts)
    assert [len(f) for f in fronts] == [30]
    normalized, _ = normalize_objectives(pts)
    refs = das_dennis(2, 24)
    survivors, niche, _ = associate_and_niche(fronts, normalized, refs, 25)
    expected = reference_niching(fronts, normalized, refs.points, 25)
    assert sorted(survivors) == sorted(expected)
    counts = {}
    for i in survivors:
        counts[niche[i]] = counts.get(niche[i], 0) + 1
    assert max(counts.values()) - min(counts.values()) <= 1


def test_niching_matches_published_loop_on_random_front():
    rng = np.random.default_rng(99)
    theta = np.sort(rng.uniform(0.05, np.pi / 2 - 0.05, 30))
    pts = np.column_stack([np.cos(theta), np.sin(theta)])  # mutually non-dominated
    fronts = nondominated_sort(pts)
    assert [len(f) for f in fronts] == [30]
    normalized, _ = normalize_objectives(pts)
    refs = das_dennis(2, 24)
    survivors, _, _ = associate_and_niche(fronts, normalized, refs, 25)
    expected = reference_niching(fronts, normalized, refs.points, 25)
    assert sorted(survivors) == sorted(expected)


# --------------------------------------------------------------- tournament


def make_pop(ranks, niche_counts):
    pop = []
    for r, nc in zip(ranks, niche_counts):
        ind = Individual(genes=np.zeros(1))
        ind.rank = r
        ind.niche_count = nc
        pop.append(ind)
    return pop


def test_tournament_rank_always_wins():
    pop = make_pop([0, 2], [5, 1])
    rng = np.random.default_rng(0)
    assert all(tournament_select(pop, rng) == 0 for _ in range(200))


def test_tournament_niche_count_breaks_rank_ties():
    pop = make_pop([1, 1], [1, 5])
    rng = np.random.default_rng(0)
    assert all(tournament_select(pop, rng) == 0 for _ in range(200))


def test_tournament_needs_two():
    with pytest.raises(ValueError):
        tournament_select(make_pop([0], [1]), np.random.default_rng(0))


def test_tournament_distribution_matches_enumeration():
    pop = make_pop([0, 0, 1, 1], [1, 2, 1, 1])
    wins = np.zeros(4)
    pairs = 0
    for i in range(4):
        for j in range(4):
            if i == j:
                continue
            pairs += 1
            a, b = pop[i], pop[j]
            if (a.rank, a.niche_count) < (b.rank, b.niche_count):
                wins[i] += 1.0
            elif (b.rank, b.niche_count) < (a.rank, a.niche_count):
                wins[j] += 1.0
            else:
                wins[i] += 0.5
                wins[j] += 0.5
    analytic = wins / pairs
    assert analytic.tolist() == [0.5, 1.0 / 3.0, 1.0 / 12.0, 1.0 / 12.0]

    rng = np.random.default_rng(7)
    draws = 100_000
    counts = np.zeros(4)
    for _ in range(draws):
        counts[tournament_select(pop, rng)] += 1
    emp = counts / draws
    sigma = np.sqrt(analytic * (1.0 - analytic) / draws)
    assert (np.abs(emp - analytic) <= 3.0 * sigma).all()


# ---------------------------------------------------------------- crossover


def test_spread_factor_fixed_point_and_monotonicity():
    assert sbx_spread_factor(0.5, 30.0) == 1.0
    assert sbx_spread_factor(0.0, 30.0) == 0.0
    u = np.linspace(0.0, 0.999, 500)
    beta = sbx_spread_factor(u, 30.0)
    assert (np.diff(beta) >= 0.0).all()
    assert beta[-1] > 1.0


def test_sbx_u_half_reproduces_parents_bitwise():
    p1 = np.array([0.1, -2.3, 7.5])
    p2 = np.array([0.9, 1.1, -4.2])
    rng = ScriptedRng([0.0, np.zeros(3), np.full(3, 0.5)])
    c1, c2 = sbx_crossover(p1, p2, 30.0, 1.0, rng)
    assert (c1 == p1).all()
    assert (c2 == p2).all()


def test_sbx_identical_parents_are_a_fixed_point():
    p = np.random.default_rng(1).uniform(-5, 5, 6)
    for seed in range(20):
        c1, c2 = sbx_crossover(p, p.copy(), 30.0, 1.0, np.random.default_rng(seed))
        assert (c1 == p).all()
        assert (c2 == p).all()


def test_sbx_skipped_pair_returns_independent_copies():
    p1 = np.array([1.0, 2.0])
    p2 = np.array([3.0, 4.0])
    c1, c2 = sbx_crossover(p1, p2, 30.0, 0.0, np.random.default_rng(0))
    assert (c1 == p1).all() and (c2 == p2).all()
    c1[0] = 99.0
    assert p1[0] == 1.0


def test_sbx_gene_gate_copies_unmixed_slots():
    p1 = np.array([10.0, -1.0])
    p2 = np.array([20.0, 1.0])
    rng = ScriptedRng([0.0, np.array([0.9, 0.1]), np.full(2, 0.25)])
    c1, c2 = sbx_crossover(p1, p2, 30.0, 1.0, rng)
    assert c1[0] == 10.0 and c2[0] == 20.0  # gate >= 0.5: copied verbatim
    assert c1[1] != -1.0 and c2[1] != 1.0


def test_sbx_children_share_one_correction_term():
    # replaying the documented draw order must reconstruct both children
    # from a single t, so the pair sum is exact before the final roundings
    master = np.random.default_rng(2718)
    for _ in range(200):
        p1 = master.uniform(-3.0, 3.0, 5)
        p2 = master.uniform(-3.0, 3.0, 5)
        seed = int(master.integers(0, 2**31))
        c1, c2 = sbx_crossover(p1, p2, 30.0, 1.0, np.random.default_rng(seed))
        replay = np.random.default_rng(seed)
        replay.random()  # pair gate, always passes at p_c = 1
        gate = replay.random(5)
        u = replay.random(5)
        beta = sbx_spread_factor(u, 30.0)
        t = 0.5 * (1.0 - beta) * (p2 - p1)
        cross = gate < 0.5
        assert (c1 == np.where(cross, p1 + t, p1)).all()
        assert (c2 == np.where(cross, p2 - t, p2)).all()
        for a, b, s1, s2 in zip(c1, c2, p1, p2):
            err = (Fraction(a) + Fraction(b)) - (Fraction(s1) + Fraction(s2))
            half_ulp = Fraction(float(np.spacing(abs(a)))) / 2 + Fraction(
                float(np.spacing(abs(b)))
            ) / 2
            assert abs(err) <= half_ulp


def test_sbx_pair_sum_closure_within_two_child_roundings():
    n = 10_000
    rng = np.random.default_rng(555)
    p1 = rng.uniform(-10.0, 10.0, n)
    p2 = rng.uniform(-10.0, 10.0, n)
    c1, c2 = sbx_crossover(p1, p2, 30.0, 1.0, np.random.default_rng(556))
    err = np.abs((c1 + c2) - (p1 + p2))
    # each child is one rounding away from an exactly-cancelling pair
    bound = 0.5 * (np.spacing(np.abs(c1)) + np.spacing(np.abs(c2))) + np.spacing(
        np.abs(p1 + p2)
    )
    assert (err <= bound).all()


def test_sbx_child_mean_tracks_spread_expectation():
    # E[beta] = (eta+1)^2 / (eta (eta+2)) > 1, so crossed children sit
    # slightly outside the parents on average; the naive "children average
    # to the parents" reading fails at Monte Carlo precision
    n = 100_000
    p1 = np.full(n, 0.2)
    p2 = np.full(n, 0.8)
    c1, _ = sbx_crossover(p1, p2, 30.0, 1.0, np.random.default_rng(2024))
    mean_beta = 31.0**2 / (30.0 * 32.0)
    expected = 0.2 + 0.5 * 0.5 * (1.0 - mean_beta) * 0.6
    se = c1.std(ddof=1) / math.sqrt(n)
    assert abs(c1.mean() - expected) <= 3.0 * se
    assert abs(c1.mean() - 0.2) > 3.0 * se


def test_sbx_respects_bounds():
    lower = np.zeros(4)
    upper = np.ones(4)
    rng = np.random.default_rng(13)
    for _ in range(200):
        p1 = rng.random(4)
        p2 = rng.random(4)
        c1, c2 = sbx_crossover(p1, p2, 2.0, 1.0, rng, lower=lower, upper=upper)
        assert (c1 >= 0.0).all() and (c1 <= 1.0).all()
        assert (c2 >= 0.0).all() and (c2 <= 1.0).all()


# ----------------------------------------------------------------- mutation


def test_mutation_u_half_is_identity_bitwise():
    x = np.array([0.3, 0.7, 0.123456789])
    rng = ScriptedRng([np.zeros(3), np.full(3, 0.5)])
    out = polynomial_mutation(x, 20.0, 1.0, np.zeros(3), np.ones(3), rng)
    assert (out == x).all()


@pytest.mark.parametrize("u", [0.01, 0.25, 0.49])
def test_mutation_cannot_push_below_a_lower_bound(u):
    x = np.array([0.0, 0.0])
    rng = ScriptedRng([np.zeros(2), np.full(2, u)])
    out = polynomial_mutation(x, 20.0, 1.0, np.zeros(2), np.ones(2), rng)
    assert (out == 0.0).all()


@pytest.mark.parametrize("u", [0.51, 0.75, 0.99])
def test_mutation_cannot_push_above_an_upper_bound(u):
    x = np.array([1.0, 1.0])
    rng = ScriptedRng([np.zeros(2), np.full(2, u)])
    out = polynomial_mutation(x, 20.0, 1.0, np.zeros(2), np.ones(2), rng)
    assert (out == 1.0).all()


def test_mutation_stays_within_bounds():
    rng = np.random.default_rng(3)
    lower = np.full(100_000, -1.5)
    upper = np.full(100_000, 2.5)
    x = rng.uniform(-1.5, 2.5, 100_000)
    out = polynomial_mutation(x, 20.0, 1.0, lower, upper, rng)
    assert (out >= -1.5).all() and (out <= 2.5).all()
    assert (out != x).any()


def test_mutation_is_symmetric_at_midrange():
    rng = np.random.default_rng(5)
    x = np.full(200_000, 0.5)
    out = polynomial_mutation(x, 20.0, 1.0, np.zeros(x.size), np.ones(x.size), rng)
    d = out - 0.5
    se = d.std(ddof=1) / math.sqrt(d.size)
    assert abs(d.mean()) <= 3.0 * se


def test_mutation_advances_the_stream_even_when_silent():
    x = np.array([0.25, 0.75, 0.5])
    a = np.random.default_rng(17)
    polynomial_mutation(x, 20.0, 0.0, np.zeros(3), np.ones(3), a)
    b = np.random.default_rng(17)
    b.random(3)
    b.random(3)
    assert a.random() == b.random()


def test_mutation_probability_zero_is_identity():
    x = np.array([0.25, 0.75])
    out = polynomial_mutation(x, 20.0, 0.0, np.zeros(2), np.ones(2), np.random.default_rng(0))
    assert (out == x).all()
    assert out is not x


# ------------------------------------------------------------ configuration


def test_gene_spec_validation():
    with pytest.raises(ValueError):
        GeneSpec("x", 1.0, 1.0)
    with pytest.raises(ValueError):
        GeneSpec("x", 0.0, float("inf"))


def test_ga_config_validation():
    genes = (GeneSpec("x", 0.0, 1.0),)
    with pytest.raises(ValueError):
        GAConfig(genes=genes, population_size=1)
    with pytest.raises(ValueError):
        GAConfig(genes=genes, generations=-1)
    with pytest.raises(ValueError):
        GAConfig(genes=genes, p_c=1.5)
    with pytest.raises(ValueError):
        GAConfig(genes=genes, eta_m=0.0)
    with pytest.raises(ValueError):
        GAConfig(genes=(), population_size=4)
    cfg = GAConfig(genes=(GeneSpec("x", 0.0, 1.0), GeneSpec("y", 0.0, 2.0)))
    assert cfg.resolved_p_m == 0.5
    assert cfg.lower.tolist() == [0.0, 0.0]
    assert cfg.upper.tolist() == [1.0, 2.0]
    assert cfg.gene_names == ("x", "y")


def test_evaluation_error_context_survives_pickling():
    err = EvaluationError("boom", generation=3, index=7)
    back = pickle.loads(pickle.dumps(err))
    assert back.generation == 3 and back.index == 7
    assert "generation 3" in str(back)


# -------------------------------------------------------------------- loop


def ga_config(N=8, G=3, **kw):
    return GAConfig(genes=(GeneSpec("x", -5.0, 5.0),), population_size=N, generations=G, **kw)


def test_generation_zero_returns_evaluated_initial_population():
    hist = evolve(sphere_pair, ga_config(G=0), np.random.default_rng(0))
    assert len(hist) == 1
    assert len(hist[0]) == 8
    for ind in hist[0]:
        assert ind.evaluated
        assert ind.rank >= 0
        assert ind.niche_count >= 1
        assert ind.eval_seed_tag[0] == 0


def test_evolution_is_deterministic():
    a = evolve(sphere_pair, ga_config(), np.random.default_rng(42))
    b = evolve(sphere_pair, ga_config(), np.random.default_rng(42))
    for pa, pb in zip(a, b):
        for ia, ib in zip(pa, pb):
            assert (ia.genes == ib.genes).all()
            assert (ia.objectives == ib.objectives).all()
            assert ia.rank == ib.rank


def test_every_generation_has_population_size_survivors():
    hist = evolve(sphere_pair, ga_config(N=10, G=5), np.random.default_rng(3))
    assert [len(pop) for pop in hist] == [10] * 6


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_population_stays_inside_gene_bounds(seed):
    hist = evolve(sphere_pair, ga_config(N=6, G=3), np.random.default_rng(seed))
    for pop in hist:
        for ind in pop:
            assert (-5.0 <= ind.genes).all() and (ind.genes <= 5.0).all()


def test_front_minima_never_regress_with_deterministic_objectives():
    for seed in range(5):
        hist = evolve(sphere_pair, ga_config(N=12, G=15), np.random.default_rng(seed))
        best = None
        for pop in hist:
            F = np.array([ind.objectives for ind in pop])
            front0 = [i for i, ind in enumerate(pop) if ind.rank == 0]
            mins = F[front0].min(axis=0)
            if best is not None:
                assert (mins <= best + 1e-12).all()
            best = mins if best is None else np.minimum(best, mins)


def test_callback_failures_carry_generation_and_index():
    def flaky(genes, tag):
        if tag == (1, 2):
            raise ValueError("sensor offline")
        return sphere_pair(genes, tag)

    with pytest.raises(EvaluationError) as exc:
        evolve(flaky, ga_config(), np.random.default_rng(0))
    assert exc.value.generation == 1
    assert exc.value.index == 2
    assert "sensor offline" in str(exc.value)


def test_non_finite_objectives_are_rejected():
    def nanny(genes, tag):
        return np.array([float("nan"), 1.0])

    with pytest.raises(EvaluationError) as exc:
        evolve(nanny, ga_config(G=0), np.random.default_rng(0))
    assert "non-finite" in str(exc.value)
    assert exc.value.generation == 0


def test_inconsistent_objective_count_is_rejected():
    def shapeshifter(genes, tag):
        if tag[1] % 2:
            return np.array([1.0, 2.0, 3.0])
        return np.array([1.0, 2.0])

    with pytest.raises(EvaluationError):
        evolve(shapeshifter, ga_config(G=0), np.random.default_rng(0))


def test_reference_points_must_match_objective_count():
    with pytest.raises(ValueError):
        evolve(
            sphere_pair,
            ga_config(G=0),
            np.random.default_rng(0),
            refs=reference_points_for(3, 8),
        )


def test_process_pool_map_reproduces_builtin_map():
    serial = evolve(sphere_pair, ga_config(), np.random.default_rng(11))
    with concurrent.futures.ProcessPoolExecutor(max_workers=2) as pool:
        parallel = evolve(sphere_pair, ga_config(), np.random.default_rng(11), map_fn=pool.map)
    for pa, pb in zip(serial, parallel):
        for ia, ib in zip(pa, pb):
            assert (ia.genes == ib.genes).all()
            assert (ia.objectives == ib.objectives).all()


def test_reevaluate_survivors_doubles_steady_state_evaluations():
    calls = []

    def counting(genes, tag):
        calls.append(tag)
        return sphere_pair(genes, tag)

    evolve(counting, ga_config(N=8, G=3), np.random.default_rng(0))
    assert len(calls) == 8 + 3 * 8

    calls.clear()
    evolve(counting, ga_config(N=8, G=3, reevaluate_survivors=True), np.random.default_rng(0))
    assert len(calls) == 8 + 3 * 16


# ----------------------------------------------------------------- history


def test_population_csv_round_trip(tmp_path):
    hist = evolve(sphere_pair, ga_config(N=6, G=2), np.random.default_rng(9))
    path = tmp_path / "population.csv"
    write_population_csv(hist, ("x",), ("f0", "f1"), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "generation,index,rank,x,f0,f1"
    assert len(lines) == 1 + 3 * 6
    back = load_population_csv(path, ("x",), ("f0", "f1"))
    assert len(back) == 3
    for orig_pop, back_pop in zip(hist, back):
        for a, b in zip(orig_pop, back_pop):
            assert (a.genes == b.genes).all()
            assert (a.objectives == b.objectives).all()
            assert a.rank == b.rank
