"""Robust removal of suspected-malicious nodes from networks.

The library solves the nominal removal problem and its distributionally
robust counterpart through a shared semidefinite relaxation, using a
built-in first-order conic solver, and ships an experiment harness that
compares the two methods under controlled estimation error.
"""

from .conic import ConicProgram, ConicSolution, SolverOptions, solve
from .decisions import (
    EvaluationReport,
    RemovalDecision,
    brute_force_binary,
    brute_force_robust,
    evaluate,
    round_randomized,
    round_sign,
)
from .eigen import jacobi_eigen, project_psd
from .experiments import ExperimentConfig, GraphSpec, run_experiment
from .graphs import (
    Graph,
    GraphStats,
    generate_ba,
    generate_ws,
    greedy_strategic_nodes,
    load_edge_list,
    stats,
    subsample_nodes,
)
from .loss import (
    LossMatrices,
    TradeoffWeights,
    build_matrices,
    expected_loss,
    interpretable_loss,
    monte_carlo_loss,
)
from .moments import (
    Configuration,
    MomentModel,
    configuration_moments,
    load_probability_csv,
    perturb,
    sample_configuration,
    simulate_moments,
)
from .robust import (
    AmbiguityParams,
    CalibrationInput,
    DroSdp,
    QuadraticInMu,
    build_dro_sdp,
    build_mint_sdp,
    calibrate_gamma1,
    calibrate_gamma2,
    failure_probability,
    inner_worst_case,
    quadratic_in_mu,
    trace_relations_check,
)

__version__ = "0.1.0"
