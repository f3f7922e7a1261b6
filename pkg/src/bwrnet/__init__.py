"""Bayesian-without-recall social learning on directed networks.

Simulation and exact analysis of two memoryless update families: binary
weighted-majority action dynamics, studied as a Markov chain on the Boolean
cube, and log-linear belief dynamics, studied through the spectral structure
of the network and KL-divergence learning rates.
"""

__version__ = "0.1.0"

from .actions import (
    ActionSimResult,
    IsingConstants,
    initial_action,
    ising_constants,
    signal_dichotomy,
    simulate_actions,
    step_actions,
)
from .beliefs import (
    BeliefSimResult,
    GlobalStats,
    LearningVerdict,
    RateReport,
    bayes_initial_belief,
    belief_probabilities,
    bwr_belief_step,
    circle_step,
    detect_learning,
    global_stats,
    learning_rates,
    random_neighbor_step,
    simulate_beliefs,
    single_agent_bayes_step,
    time_one_oracle,
)
from .chain import (
    ChainAnalysis,
    absorption_analysis,
    activation_probability,
    analyze_chain,
    classify_states,
    consensus_equilibrium_check,
    equilibria_by_inequality,
    initial_profile_distribution,
    stationary_distribution,
    transition_kernel,
)
from .errors import CapacityError, PreconditionError, ToolkitError, ValidationError
from .graphs import (
    SpectralData,
    Topology,
    classify_topology,
    is_directed_circle,
    perron,
    root_circle,
    strongly_connected,
)
from .harness import Scenario, builtin_scenario, load_scenario, run, summarize
from .model import (
    ModelSpec,
    Network,
    Prior,
    SignalStructure,
    StateSpace,
    kl_divergence,
    load_model,
    log_likelihood_ratio,
    make_model,
    sample_signal,
    save_model,
    validate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
