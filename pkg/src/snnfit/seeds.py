"""Deterministic RNG stream derivation.

Every random decision in a run is drawn from a numpy Generator whose
SeedSequence entropy is a tuple of non-negative integers: the run's master
seed plus structural indices (generation, individual) plus a stream tag.
Tuples never collide across streams, so parallel evaluations cannot
contend and any single evaluation can be reproduced in isolation.
"""

from __future__ import annotations

import numpy as np

STREAM_BUILD = 0   # network realisation: neuron params, weights, mask
STREAM_NOISE = 1   # thalamic noise during simulation
STREAM_GA = 2      # genetic-operator draws of the optimiser


def _check_nonneg(**kwargs: int) -> None:
    for name, value in kwargs.items():
        if value < 0:
            raise ValueError(f"{name} must be >= 0, got {value}")


def evaluation_entropy(
    master_seed: int, generation: int, individual: int, stream: int, repeat: int = 0
) -> list[int]:
    """Entropy tuple for one fitness evaluation's build or noise stream."""
    _check_nonneg(
        master_seed=master_seed,
        generation=generation,
        individual=individual,
        stream=stream,
        repeat=repeat,
    )
    return [master_seed, generation, individual, stream, repeat]


def build_rng(master_seed: int, generation: int, individual: int, repeat: int = 0) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(evaluation_entropy(master_seed, generation, individual, STREAM_BUILD, repeat))
    )


def noise_rng(master_seed: int, generation: int, individual: int, repeat: int = 0) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(evaluation_entropy(master_seed, generation, individual, STREAM_NOISE, repeat))
    )


def ga_rng(master_seed: int) -> np.random.Generator:
    _check_nonneg(master_seed=master_seed)
    return np.random.default_rng(np.random.SeedSequence([master_seed, STREAM_GA]))


def run_master_seed(global_seed: int, study_index: int, repeat_seed: int) -> int:
    """Mix (global seed, study position, repeat seed) into one run-level master seed."""
    _check_nonneg(global_seed=global_seed, study_index=study_index, repeat_seed=repeat_seed)
    ss = np.random.SeedSequence([global_seed, study_index, repeat_seed])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
