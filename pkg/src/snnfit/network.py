"""Realised network instances: populations, weight matrix, thalamic drive.

A genome (weight scales g_e/g_i, connectivity fraction f, thalamic offset)
plus a seed deterministically fixes one concrete network: per-neuron
Izhikevich coefficients, a dense n x n weight matrix S (row = postsynaptic,
column = presynaptic) with an independent-Bernoulli(f) presence mask, and
the per-tick Gaussian thalamic input parameters.

Draw order inside build_network is part of the contract: neuron uniforms
first (excitatory block, then inhibitory), then one uniform per matrix
entry for weight magnitudes, then - only when 0 < f < 1 - one uniform per
entry for the mask.  Weight magnitudes are scaled by g_e / -g_i after
drawing, so the same seed gives the same mask and proportionally scaled
weights when only the scales change, and masks for growing f are nested.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import seeds
from .neuron import NeuronParams

THALAMIC_STD_EXC = 5.0
THALAMIC_STD_INH = 2.0


@dataclass(frozen=True)
class NetworkGenome:
    """Connectivity genes: weight scales, sparsity fraction, thalamic offsets.

    mu_exc/mu_inh are the mean thalamic currents per population; the usual
    configuration drives both from one shared gene (mu_exc == mu_inh).
    """

    g_e: float
    g_i: float
    f: float
    mu_exc: float = 0.0
    mu_inh: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.f <= 1.0:
            raise ValueError(f"connectivity fraction f must lie in [0, 1], got {self.f}")
        if self.g_e < 0 or self.g_i < 0:
            raise ValueError(f"weight scales must be >= 0, got g_e={self.g_e}, g_i={self.g_i}")
        for name in ("g_e", "g_i", "f", "mu_exc", "mu_inh"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"genome field {name} is not finite")

    @classmethod
    def shared_mu(cls, g_e: float, g_i: float, f: float, mu: float = 0.0) -> "NetworkGenome":
        return cls(g_e=g_e, g_i=g_i, f=f, mu_exc=mu, mu_inh=mu)


@dataclass(frozen=True)
class NetworkInstance:
    """One realised network: coefficient vectors, weights, and its seed entropy."""

    n_exc: int
    n_inh: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    weights: np.ndarray            # S[post, pre], current units
    seed_entropy: tuple[int, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.n_exc + self.n_inh

    def neuron_params(self, i: int) -> NeuronParams:
        return NeuronParams(a=float(self.a[i]), b=float(self.b[i]), c=float(self.c[i]), d=float(self.d[i]))

    def noise_std(self) -> np.ndarray:
        """Per-neuron thalamic noise std: 5 for excitatory, 2 for inhibitory."""
        out = np.empty(self.n)
        out[: self.n_exc] = THALAMIC_STD_EXC
        out[self.n_exc :] = THALAMIC_STD_INH
        return out

    def mu_vector(self, genome: NetworkGenome) -> np.ndarray:
        out = np.empty(self.n)
        out[: self.n_exc] = genome.mu_exc
        out[self.n_exc :] = genome.mu_inh
        return out


def build_network(
    genome: NetworkGenome,
    seed: int | np.random.SeedSequence | np.random.Generator,
    n_exc: int = 800,
    n_inh: int = 200,
) -> NetworkInstance:
    """Realise a network from a genome and a seed.

    Each directed connection j->i exists independently with probability f;
    present excitatory weights are uniform in [0, g_e), inhibitory uniform
    in (-g_i, 0]; absent entries are exactly zero.  Neuron coefficients come
    from one uniform draw per neuron through the heterogeneity maps.
    """
    if n_exc <= 0 or n_inh < 0 or n_exc + n_inh < 1:
        raise ValueError(f"population sizes must be positive, got n_exc={n_exc}, n_inh={n_inh}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    entropy: tuple[int, ...] = ()
    if isinstance(seed, (int, np.integer)):
        entropy = (int(seed),)
    elif isinstance(seed, np.random.SeedSequence):
        ent = seed.entropy
        entropy = tuple(ent) if isinstance(ent, (list, tuple)) else (int(ent),)

    n = n_exc + n_inh
    r_exc = rng.random(n_exc)
    r_inh = rng.random(n_inh)

    a = np.concatenate([np.full(n_exc, 0.02), 0.02 + 0.08 * r_inh])
    b = np.concatenate([np.full(n_exc, 0.2), 0.25 - 0.05 * r_inh])
    c = np.concatenate([-65.0 + 15.0 * r_exc**2, np.full(n_inh, -65.0)])
    d = np.concatenate([8.0 - 6.0 * r_exc**2, np.full(n_inh, 2.0)])

    S = rng.random((n, n))
    S[:, :n_exc] *= genome.g_e
    S[:, n_exc:] *= -genome.g_i
    if genome.f <= 0.0:
        S[:] = 0.0
    elif genome.f < 1.0:
        S *= rng.random((n, n)) < genome.f

    return NetworkInstance(
        n_exc=n_exc, n_inh=n_inh, a=a, b=b, c=c, d=d, weights=S, seed_entropy=entropy
    )


def thalamic_input(population_type: str, mu_thal: float, z: float) -> float:
    """External drive for one neuron on one tick given a standard-normal draw z."""
    if population_type == "excitatory":
        return mu_thal + THALAMIC_STD_EXC * z
    if population_type == "inhibitory":
        return mu_thal + THALAMIC_STD_INH * z
    raise ValueError(f"unknown population type {population_type!r}")


def recurrent_current(S: np.ndarray, fired: np.ndarray, i: int) -> float:
    """Summed instantaneous synaptic pulse onto neuron i from this tick's spikes."""
    fired = np.asarray(fired, dtype=np.intp)
    if fired.size == 0:
        return 0.0
    return float(S[i, fired].sum())


def regenerate_for_evaluation(
    genome: NetworkGenome,
    global_seed: int,
    generation: int,
    individual: int,
    n_exc: int = 800,
    n_inh: int = 200,
    repeat: int = 0,
) -> NetworkInstance:
    """Build the instance for one fitness evaluation from its derived stream.

    Mixing (global_seed, generation, individual, repeat) fixes the build
    stream, so identical arguments give bit-identical instances and
    distinct indices give independent ones.
    """
    ss = np.random.SeedSequence(
        seeds.evaluation_entropy(global_seed, generation, individual, seeds.STREAM_BUILD, repeat)
    )
    inst = build_network(genome, ss, n_exc=n_exc, n_inh=n_inh)
    return inst


def dump_weights_csv(instance: NetworkInstance, path) -> None:
    """Write nonzero weights as (row, col, weight) triplets for debugging."""
    S = instance.weights
    rows, cols = np.nonzero(S)
    with open(path, "w", newline="") as fh:
        fh.write("row,col,weight\n")
        for r_, c_ in zip(rows.tolist(), cols.tolist()):
            fh.write(f"{r_},{c_},{float(S[r_, c_])!r}\n")
