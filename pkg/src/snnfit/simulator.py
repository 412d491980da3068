"""Clock-driven network simulation and firing-rate metrics.

Each 1 ms tick runs three phases in a fixed order: (1) detect spikes on the
state the previous tick left behind and reset those neurons, (2) assemble
per-neuron input currents - thalamic mean + Gaussian noise plus the
instantaneous synaptic pulses of the spikes detected *this* tick, (3)
integrate all neurons (two 0.5 ms half-steps for v, one 1 ms step for w).
The whole tick's noise vector is materialised before any neuron updates,
in fixed neuron order, so results never depend on update scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import NetworkGenome, NetworkInstance
from .neuron import SPIKE_PEAK_MV, NumericalDivergenceError

# Above this many simultaneous spikes a BLAS matvec against a 0/1 indicator
# beats slicing fired columns out of S; both paths are deterministic
# functions of the state, so the branch never costs reproducibility.
_GEMV_THRESHOLD = 64


@dataclass(frozen=True)
class SpikeRecord:
    """Spike events of one simulation, sorted by (tick, neuron index)."""

    ticks: np.ndarray      # int32, event times in ms
    neurons: np.ndarray    # int32, event neuron indices
    duration: int
    n_exc: int
    n_inh: int

    def __post_init__(self) -> None:
        if self.ticks.shape != self.neurons.shape:
            raise ValueError("ticks and neurons must have matching shapes")

    @property
    def n(self) -> int:
        return self.n_exc + self.n_inh

    @property
    def n_events(self) -> int:
        return int(self.ticks.size)

    def events(self) -> list[tuple[int, int]]:
        """Event list as (neuron index, tick) pairs."""
        return list(zip(self.neurons.tolist(), self.ticks.tolist()))


@dataclass(frozen=True)
class RateSummary:
    """Population- and time-averaged rates in Hz."""

    r_exc: float
    r_inh: float
    r_all: float


def run_simulation(
    instance: NetworkInstance,
    genome: NetworkGenome,
    duration: int = 1000,
    noise_seed: int | np.random.SeedSequence | np.random.Generator | None = 0,
    noise_enabled: bool = True,
    probe_neurons: tuple[int, ...] = (),
) -> SpikeRecord | tuple[SpikeRecord, dict[int, np.ndarray]]:
    """Simulate `duration` ticks and record spikes.

    noise_enabled=False is a unit-test hook that zeroes the thalamic noise
    (the mean offsets still apply); every production path draws noise.
    probe_neurons requests per-tick membrane traces for up to 10 neurons,
    returned alongside the record.
    """
    if duration < 1:
        raise ValueError(f"duration must be >= 1 tick, got {duration}")
    if len(probe_neurons) > 10:
        raise ValueError("at most 10 neurons can be probed")

    n = instance.n
    S = instance.weights
    a, b, c, d = instance.a, instance.b, instance.c, instance.d
    mu = instance.mu_vector(genome)
    noise_std = instance.noise_std()

    if noise_enabled:
        rng = noise_seed if isinstance(noise_seed, np.random.Generator) else np.random.default_rng(noise_seed)
        noise = rng.standard_normal((duration, n))
    else:
        noise = None

    v = np.full(n, -65.0)
    w = b * v
    I = np.empty(n)
    dv = np.empty(n)
    lin = np.empty(n)
    indicator = np.empty(n)

    spike_ticks: list[np.ndarray] = []
    spike_neurons: list[np.ndarray] = []
    traces = {i: np.empty(duration) for i in probe_neurons}

    # Overflow is not an error here: the finite guard below turns any
    # non-finite state into a NumericalDivergenceError with context.
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(duration):
            fired = np.nonzero(v >= SPIKE_PEAK_MV)[0]
            if fired.size:
                spike_ticks.append(np.full(fired.size, t, dtype=np.int32))
                spike_neurons.append(fired.astype(np.int32))
                v[fired] = c[fired]
                w[fired] += d[fired]

            if noise is not None:
                np.multiply(noise_std, noise[t], out=I)
                I += mu
            else:
                I[:] = mu

            if fired.size:
                if fired.size <= _GEMV_THRESHOLD:
                    I += S[:, fired].sum(axis=1)
                else:
                    indicator[:] = 0.0
                    indicator[fired] = 1.0
                    I += S @ indicator

            # dv = 0.04 v^2 + 5 v + 140 - w + I, applied as two half-steps.
            # Operation order mirrors neuron.integrate_tick term by term so a
            # one-neuron network reproduces the scalar path bit for bit.
            for _ in range(2):
                np.multiply(v, 0.04, out=dv)
                dv *= v
                np.multiply(v, 5.0, out=lin)
                dv += lin
                dv += 140.0
                dv -= w
                dv += I
                dv *= 0.5
                v += dv
            w += a * (b * v - w)

            for i in probe_neurons:
                traces[i][t] = v[i]

            if not np.isfinite(v).all() or not np.isfinite(w).all():
                bad = np.nonzero(~(np.isfinite(v) & np.isfinite(w)))[0]
                raise NumericalDivergenceError(
                    f"non-finite membrane state at tick {t}, neuron {int(bad[0])}",
                    tick=t,
                    neuron=int(bad[0]),
                )

    if spike_ticks:
        ticks = np.concatenate(spike_ticks)
        neurons = np.concatenate(spike_neurons)
    else:
        ticks = np.empty(0, dtype=np.int32)
        neurons = np.empty(0, dtype=np.int32)
    record = SpikeRecord(
        ticks=ticks, neurons=neurons, duration=duration, n_exc=instance.n_exc, n_inh=instance.n_inh
    )
    if probe_neurons:
        return record, traces
    return record


def _population_counts(record: SpikeRecord) -> tuple[int, int]:
    exc = int((record.neurons < record.n_exc).sum())
    return exc, record.n_events - exc


def mean_rates(record: SpikeRecord) -> RateSummary:
    """Population- and time-averaged rates: spikes / (population size * seconds)."""
    if record.duration <= 0:
        raise ValueError("record duration must be positive")
    seconds = record.duration / 1000.0
    exc_count, inh_count = _population_counts(record)
    r_exc = exc_count / (record.n_exc * seconds) if record.n_exc else 0.0
    r_inh = inh_count / (record.n_inh * seconds) if record.n_inh else 0.0
    r_all = record.n_events / (record.n * seconds)
    return RateSummary(r_exc=r_exc, r_inh=r_inh, r_all=r_all)


def instantaneous_rates(record: SpikeRecord, bin_ticks: int = 1) -> dict[str, np.ndarray]:
    """Per-bin population rates in Hz; series length is ceil(duration / bin).

    Each bin is normalised by its nominal width (a trailing partial bin is
    treated as full width, understating its rate).  Returns arrays under
    keys "bin_start_ms", "r_exc", "r_inh", "r_all".
    """
    if bin_ticks < 1:
        raise ValueError(f"bin must be >= 1 tick, got {bin_ticks}")
    n_bins = -(-record.duration // bin_ticks)
    bin_seconds = bin_ticks / 1000.0
    bins = record.ticks // bin_ticks
    is_exc = record.neurons < record.n_exc
    exc_counts = np.bincount(bins[is_exc], minlength=n_bins).astype(float)
    inh_counts = np.bincount(bins[~is_exc], minlength=n_bins).astype(float)
    all_counts = exc_counts + inh_counts
    return {
        "bin_start_ms": np.arange(n_bins) * bin_ticks,
        "r_exc": exc_counts / (record.n_exc * bin_seconds) if record.n_exc else np.zeros(n_bins),
        "r_inh": inh_counts / (record.n_inh * bin_seconds) if record.n_inh else np.zeros(n_bins),
        "r_all": all_counts / (record.n * bin_seconds),
    }


def export_raster(record: SpikeRecord, path) -> None:
    """Write the spike raster as CSV: tick,neuron,population (exc|inh)."""
    with open(path, "w", newline="") as fh:
        fh.write("tick,neuron,population\n")
        for t, i in zip(record.ticks.tolist(), record.neurons.tolist()):
            pop = "exc" if i < record.n_exc else "inh"
            fh.write(f"{t},{i},{pop}\n")


def load_raster(path, duration: int, n_exc: int, n_inh: int) -> SpikeRecord:
    """Read a raster CSV back into a SpikeRecord (shape metadata supplied by caller)."""
    ticks: list[int] = []
    neurons: list[int] = []
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != "tick,neuron,population":
            raise ValueError(f"unexpected raster header {header!r} in {path}")
        for line in fh:
            t_s, i_s, _pop = line.rstrip("\n").split(",")
            ticks.append(int(t_s))
            neurons.append(int(i_s))
    return SpikeRecord(
        ticks=np.asarray(ticks, dtype=np.int32),
        neurons=np.asarray(neurons, dtype=np.int32),
        duration=duration,
        n_exc=n_exc,
        n_inh=n_inh,
    )


def export_rate_series(record: SpikeRecord, path, bin_ticks: int = 1) -> None:
    """Write per-bin rates as CSV: bin_start_ms,r_exc,r_inh,r_all."""
    series = instantaneous_rates(record, bin_ticks)
    with open(path, "w", newline="") as fh:
        fh.write("bin_start_ms,r_exc,r_inh,r_all\n")
        for k in range(series["bin_start_ms"].size):
            fh.write(
                f"{int(series['bin_start_ms'][k])},"
                f"{float(series['r_exc'][k])!r},"
                f"{float(series['r_inh'][k])!r},"
                f"{float(series['r_all'][k])!r}\n"
            )
