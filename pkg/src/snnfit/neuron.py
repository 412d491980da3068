"""Izhikevich single-neuron dynamics: integration, spike detection, reset.

The membrane model is the two-variable quadratic one,

    dv/dt = 0.04 v^2 + 5 v + 140 - w + I
    dw/dt = a (b v - w)

with a spike emitted when v reaches the 30 mV peak, after which v is reset
to c and the recovery variable w is bumped by d.  One tick is 1 ms of
simulated time, advanced with the classic discretisation this model family
ships with: two 0.5 ms forward-Euler half-steps for v followed by a single
1 ms Euler step for w evaluated at the updated v.  The peak check happens
at the *start* of a tick on the state the previous tick produced, so v is
never clamped and raw overshoot values feed the w update of the spike tick.
That overshoot coupling is part of the scheme, not an accident; callers
that want the continuous-time behaviour should integrate at a fine step
themselves (the test suite carries such a reference integrator).
"""

from __future__ import annotations

from dataclasses import dataclass

import math


SPIKE_PEAK_MV = 30.0


class NumericalDivergenceError(RuntimeError):
    """Membrane state left the finite range; simulation cannot continue.

    Carries optional ``tick`` and ``neuron`` attributes when raised from a
    network simulation so the offending update can be located.
    """

    def __init__(self, message: str, tick: int | None = None, neuron: int | None = None):
        super().__init__(message)
        self.tick = tick
        self.neuron = neuron


@dataclass(frozen=True)
class NeuronParams:
    """Coefficients (a, b, c, d) of one neuron.

    a: recovery decay rate (1/ms), > 0
    b: recovery sensitivity to v (dimensionless)
    c: post-spike reset potential (mV), below the 30 mV peak
    d: post-spike recovery increment, >= 0
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not self.c < SPIKE_PEAK_MV:
            raise ValueError(f"reset potential c must sit below the {SPIKE_PEAK_MV} mV peak, got {self.c}")
        if self.d < 0:
            raise ValueError(f"recovery increment d must be >= 0, got {self.d}")


@dataclass(frozen=True)
class NeuronState:
    """Membrane potential v (mV) and recovery variable w."""

    v: float
    w: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.v) and math.isfinite(self.w)


def initial_state(params: NeuronParams, v0: float = -65.0) -> NeuronState:
    """Resting start state: v at v0 and w on the recovery nullcline (w = b v0)."""
    return NeuronState(v=v0, w=params.b * v0)


def integrate_tick(
    state: NeuronState,
    params: NeuronParams,
    I: float,
    substeps: int = 2,
) -> NeuronState:
    """Advance one 1 ms tick: v via `substeps` Euler sub-steps, w via one full step.

    The input current I is held constant across the tick.  ``substeps=2``
    is the reference scheme; other values exist for convergence probing.
    Raises NumericalDivergenceError if the updated state is non-finite.
    """
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    v, w = state.v, state.w
    h = 1.0 / substeps
    for _ in range(substeps):
        v = v + h * (0.04 * v * v + 5.0 * v + 140.0 - w + I)
    w = w + params.a * (params.b * v - w)
    if not (math.isfinite(v) and math.isfinite(w)):
        raise NumericalDivergenceError(f"non-finite state after tick: v={v}, w={w}")
    return NeuronState(v=v, w=w)


def detect_and_reset(state: NeuronState, params: NeuronParams) -> tuple[NeuronState, bool]:
    """Apply the peak rule: v >= 30 mV fires, resetting v to c and adding d to w.

    Called once per tick before integration, on the state the previous tick
    produced.  Any overshoot beyond the peak still counts as a single spike.
    """
    if state.v >= SPIKE_PEAK_MV:
        return NeuronState(v=params.c, w=state.w + params.d), True
    return state, False


def sample_heterogeneous_params(population_type: str, r: float) -> NeuronParams:
    """Map one uniform draw r in [0, 1] to per-neuron coefficients.

    Excitatory neurons interpolate from regular-spiking (r=0) to chattering
    (r=1) via (0.02, 0.2, -65 + 15 r^2, 8 - 6 r^2); inhibitory ones from
    low-threshold to fast-spiking via (0.02 + 0.08 r, 0.25 - 0.05 r, -65, 2).
    The same r always produces the same parameters.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    if population_type == "excitatory":
        return NeuronParams(a=0.02, b=0.2, c=-65.0 + 15.0 * r * r, d=8.0 - 6.0 * r * r)
    if population_type == "inhibitory":
        return NeuronParams(a=0.02 + 0.08 * r, b=0.25 - 0.05 * r, c=-65.0, d=2.0)
    raise ValueError(f"unknown population type {population_type!r}")


def run_single_neuron(
    params: NeuronParams,
    I: float,
    ticks: int,
    state: NeuronState | None = None,
    substeps: int = 2,
) -> list[int]:
    """Drive one neuron under constant current, returning spike-detection ticks."""
    st = initial_state(params) if state is None else state
    spikes: list[int] = []
    for t in range(ticks):
        st, fired = detect_and_reset(st, params)
        if fired:
            spikes.append(t)
        st = integrate_tick(st, params, I, substeps=substeps)
    return spikes
