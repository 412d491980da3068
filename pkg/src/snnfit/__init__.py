"""snnfit: fit spiking-network connectivity to target firing rates.

A two-population (excitatory/inhibitory) quadratic integrate-and-reset
network simulator plus a from-scratch reference-point multi-objective
genetic algorithm, wired together so network parameters (weight scales,
connectivity fraction, thalamic drive) can be fitted to population-rate
targets along a Pareto front.
"""

from .analysis import (
    FrontMember,
    ParetoFront,
    export_front,
    extract_front,
    front_summary,
    load_front_csv,
    load_front_json,
    render_activity_plot,
    render_front_plot,
)
from .config import ConfigError, ExperimentConfig, build_config, config_digest, load_config
from .network import (
    NetworkGenome,
    NetworkInstance,
    build_network,
    recurrent_current,
    regenerate_for_evaluation,
    thalamic_input,
)
from .neuron import (
    SPIKE_PEAK_MV,
    NeuronParams,
    NeuronState,
    NumericalDivergenceError,
    detect_and_reset,
    initial_state,
    integrate_tick,
    run_single_neuron,
    sample_heterogeneous_params,
)
from .nsga3 import (
    EvaluationError,
    GAConfig,
    GeneSpec,
    Individual,
    ReferencePointSet,
    associate_and_niche,
    das_dennis,
    dominates,
    evolve,
    nondominated_sort,
    normalize_objectives,
    polynomial_mutation,
    sbx_crossover,
    tournament_select,
)
from .objectives import (
    DIVERGENCE_SENTINEL_HZ,
    THREE_OBJECTIVE,
    TWO_OBJECTIVE,
    RateTargets,
    StudyEvaluator,
    StudySpec,
    evaluate_three_objective,
    evaluate_two_objective,
    experiment_grid,
)
from .simulator import (
    RateSummary,
    SpikeRecord,
    export_raster,
    export_rate_series,
    instantaneous_rates,
    load_raster,
    mean_rates,
    run_simulation,
)

__version__ = "0.1.0"
