"""Mirror-descent equilibrium solvers for block-discretized graphon games."""

from .core import (
    AggregateProfile,
    FlowProfile,
    GraphonSpec,
    ModelSpec,
    PolicyProfile,
    PopulationGrid,
    TrajectoryStep,
    ValueTables,
    best_response_dp,
    compute_aggregates,
    induce_flow,
    policy_return,
    regularized_value_iteration,
    sample_trajectory,
)
from .environments import (
    ENVIRONMENT_NAMES,
    EnvironmentParams,
    make_environment,
    make_linear_synthetic,
)
from .estimators import (
    BanditValueState,
    LinearModelSpec,
    RidgeState,
    VisitCounter,
    bandit_value_update,
    ix_gradient,
    linear_q_backup,
    linear_q_table,
    ridge_solve,
    ridge_update,
)
from .harness import (
    ExperimentConfig,
    PRESETS,
    build_reference,
    load_config,
    load_reference,
    preset,
    run_experiment,
    run_single,
    save_config,
    save_reference,
)
from .metrics import (
    ReferenceSolution,
    exploitability,
    kl_metric,
    monotonicity_probe,
)
from .solvers import (
    Rule,
    RunRecord,
    Schedules,
    SolverConfig,
    bandit_decay,
    constant,
    full_info_decay,
    horizon_harmonic,
    linear_decay,
    mirror_descent_step,
    power,
    solve_bandit,
    solve_fictitious_play,
    solve_full_info,
    solve_linear,
)

__version__ = "0.1.0"
