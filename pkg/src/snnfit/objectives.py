"""Fitness callbacks: simulate a genome's network, score rate errors.

Two study families share one evaluation core.  The two-objective family
optimises the weight scales (g_e, g_i) at a frozen connectivity fraction
and thalamic offset, scoring absolute distances of the population rates
from their targets.  The three-objective family frees the thalamic offset
and the connectivity fraction and adds f itself as a minimised objective,
so the front trades rate accuracy against wiring cost.

Callbacks are pure given (genes, seed tag): network build and noise
streams are re-derived from (master seed, generation, index, repeat)
every call, never cached, so parallel dispatch cannot reorder results.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import seeds
from .network import NetworkGenome, regenerate_for_evaluation
from .neuron import NumericalDivergenceError
from .nsga3 import GeneSpec
from .simulator import mean_rates, run_simulation

log = logging.getLogger(__name__)

TWO_OBJECTIVE = "two_objective"
THREE_OBJECTIVE = "three_objective"

# Worst-case objective assigned to a numerically divergent simulation so the
# optimiser routes around the region instead of aborting the run.
DIVERGENCE_SENTINEL_HZ = 1.0e6

_DEFAULT_GENE_BOUNDS = {
    "g_e": (0.0, 1.0),
    "g_i": (0.0, 2.0),
    "mu": (-10.0, 10.0),
    "mu_exc": (-10.0, 10.0),
    "mu_inh": (-10.0, 10.0),
    "f": (0.0, 1.0),
}


@dataclass(frozen=True)
class RateTargets:
    """Target population rates in Hz."""

    target_exc: float
    target_inh: float

    def __post_init__(self) -> None:
        for name in ("target_exc", "target_inh"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite rate >= 0 Hz, got {value}")


@dataclass(frozen=True)
class StudySpec:
    """One optimisation study: mode, targets, frozen/free structure knobs.

    study_index is the study's position in its experiment grid; the run
    master seed mixes it in so sibling studies never share streams.
    n_repeats > 1 averages the objective distances over independently
    rebuilt networks (default 1: one simulation per evaluation).
    """

    name: str
    mode: str
    targets: RateTargets
    fixed_f: float | None = None    # two-objective mode only
    frozen_mu: float = 0.0          # two-objective mode only
    split_mu: bool = False          # three-objective: separate exc/inh offsets
    study_index: int = 0
    n_exc: int = 800
    n_inh: int = 200
    duration: int = 1000
    n_repeats: int = 1
    divergence_sentinel: float = DIVERGENCE_SENTINEL_HZ

    def __post_init__(self) -> None:
        if self.mode not in (TWO_OBJECTIVE, THREE_OBJECTIVE):
            raise ValueError(f"unknown study mode {self.mode!r}")
        if self.mode == TWO_OBJECTIVE:
            if self.fixed_f is None or not 0.0 <= self.fixed_f <= 1.0:
                raise ValueError(
                    f"two-objective mode needs fixed_f in [0, 1], got {self.fixed_f}"
                )
            if self.split_mu:
                raise ValueError("split_mu only applies to the three-objective mode")
        elif self.fixed_f is not None:
            raise ValueError("three-objective mode optimises f; do not set fixed_f")
        if self.n_repeats < 1:
            raise ValueError(f"n_repeats must be >= 1, got {self.n_repeats}")
        if self.duration < 1:
            raise ValueError(f"duration must be >= 1 ms, got {self.duration}")
        if self.divergence_sentinel <= 0 or not np.isfinite(self.divergence_sentinel):
            raise ValueError("divergence sentinel must be a positive finite rate")

    @property
    def gene_names(self) -> tuple[str, ...]:
        if self.mode == TWO_OBJECTIVE:
            return ("g_e", "g_i")
        if self.split_mu:
            return ("mu_exc", "mu_inh", "g_e", "g_i", "f")
        return ("mu", "g_e", "g_i", "f")

    @property
    def objective_names(self) -> tuple[str, ...]:
        if self.mode == TWO_OBJECTIVE:
            return ("d_exc", "d_inh")
        return ("d_exc", "d_inh", "sparsity")

    def genome_from_genes(self, genes) -> NetworkGenome:
        genes = np.asarray(genes, dtype=float)
        if genes.size != len(self.gene_names):
            raise ValueError(
                f"study {self.name!r} expects {len(self.gene_names)} genes, got {genes.size}"
            )
        if self.mode == TWO_OBJECTIVE:
            return NetworkGenome.shared_mu(
                g_e=float(genes[0]), g_i=float(genes[1]), f=float(self.fixed_f), mu=self.frozen_mu
            )
        if self.split_mu:
            return NetworkGenome(
                g_e=float(genes[2]), g_i=float(genes[3]), f=float(genes[4]),
                mu_exc=float(genes[0]), mu_inh=float(genes[1]),
            )
        return NetworkGenome.shared_mu(
            g_e=float(genes[1]), g_i=float(genes[2]), f=float(genes[3]), mu=float(genes[0])
        )


def default_gene_specs(spec: StudySpec) -> tuple[GeneSpec, ...]:
    """Bounds for a study's genes when the experiment file does not override them."""
    return tuple(GeneSpec(name, *_DEFAULT_GENE_BOUNDS[name]) for name in spec.gene_names)


def _rate_errors(
    genome: NetworkGenome, spec: StudySpec, master_seed: int, seed_tag
) -> tuple[float, float] | None:
    """Mean absolute rate errors over n_repeats simulations; None on divergence."""
    generation, index = int(seed_tag[0]), int(seed_tag[1])
    d_exc = 0.0
    d_inh = 0.0
    for repeat in range(spec.n_repeats):
        instance = regenerate_for_evaluation(
            genome, master_seed, generation, index,
            n_exc=spec.n_exc, n_inh=spec.n_inh, repeat=repeat,
        )
        noise = seeds.noise_rng(master_seed, generation, index, repeat)
        try:
            record = run_simulation(instance, genome, duration=spec.duration, noise_seed=noise)
        except NumericalDivergenceError as err:
            log.warning(
                "divergent simulation in study %s (gen %d, ind %d, repeat %d): %s; genome=%r",
                spec.name, generation, index, repeat, err, genome,
            )
            return None
        rates = mean_rates(record)
        d_exc += abs(rates.r_exc - spec.targets.target_exc)
        d_inh += abs(rates.r_inh - spec.targets.target_inh)
    return d_exc / spec.n_repeats, d_inh / spec.n_repeats


def evaluate_two_objective(genes, spec: StudySpec, master_seed: int, seed_tag) -> np.ndarray:
    """(|r_exc - target_exc|, |r_inh - target_inh|) for a (g_e, g_i) gene pair."""
    if spec.mode != TWO_OBJECTIVE:
        raise ValueError(f"study {spec.name!r} is not a two-objective study")
    genome = spec.genome_from_genes(genes)
    errors = _rate_errors(genome, spec, master_seed, seed_tag)
    if errors is None:
        return np.array([spec.divergence_sentinel, spec.divergence_sentinel])
    return np.array(errors)


def evaluate_three_objective(genes, spec: StudySpec, master_seed: int, seed_tag) -> np.ndarray:
    """(d_exc, d_inh, f): rate errors plus the connectivity fraction, all minimised.

    The third component is the f gene verbatim, so the front's sparsity
    axis reads directly in connection-probability units.
    """
    if spec.mode != THREE_OBJECTIVE:
        raise ValueError(f"study {spec.name!r} is not a three-objective study")
    genes = np.asarray(genes, dtype=float)
    genome = spec.genome_from_genes(genes)
    errors = _rate_errors(genome, spec, master_seed, seed_tag)
    f_gene = float(genes[-1])
    if errors is None:
        return np.array([spec.divergence_sentinel, spec.divergence_sentinel, f_gene])
    return np.array([errors[0], errors[1], f_gene])


@dataclass(frozen=True)
class StudyEvaluator:
    """Picklable callback binding a StudySpec and master seed for the optimiser."""

    spec: StudySpec
    master_seed: int

    def __call__(self, genes, seed_tag) -> np.ndarray:
        if self.spec.mode == TWO_OBJECTIVE:
            return evaluate_two_objective(genes, self.spec, self.master_seed, seed_tag)
        return evaluate_three_objective(genes, self.spec, self.master_seed, seed_tag)


def experiment_grid(
    targets,
    f_values=None,
    mode: str = TWO_OBJECTIVE,
    split_mu: bool = False,
    **common,
) -> list[StudySpec]:
    """Cross targets with connectivity fractions into an indexed study list.

    Two-objective mode iterates targets in the outer loop and f in the
    inner loop; three-objective mode takes targets only.  Extra keyword
    arguments become StudySpec fields shared by every study.
    """
    targets = list(targets)
    if not targets:
        raise ValueError("at least one target pair is required")
    specs: list[StudySpec] = []
    if mode == TWO_OBJECTIVE:
        if split_mu:
            raise ValueError("split_mu only applies to the three-objective mode")
        f_values = list(f_values) if f_values is not None else []
        if not f_values:
            raise ValueError("two-objective grids need at least one f value")
        for t_exc, t_inh in targets:
            for f in f_values:
                specs.append(
                    StudySpec(
                        name=f"t{t_exc:g}x{t_inh:g}-f{f:g}",
                        mode=TWO_OBJECTIVE,
                        targets=RateTargets(float(t_exc), float(t_inh)),
                        fixed_f=float(f),
                        study_index=len(specs),
                        **common,
                    )
                )
    elif mode == THREE_OBJECTIVE:
        if f_values:
            raise ValueError("three-objective grids optimise f; do not pass f_values")
        for t_exc, t_inh in targets:
            specs.append(
                StudySpec(
                    name=f"t{t_exc:g}x{t_inh:g}-free",
                    mode=THREE_OBJECTIVE,
                    targets=RateTargets(float(t_exc), float(t_inh)),
                    split_mu=split_mu,
                    study_index=len(specs),
                    **common,
                )
            )
    else:
        raise ValueError(f"unknown study mode {mode!r}")
    return specs
