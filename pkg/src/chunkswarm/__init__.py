"""Peer-to-peer chunk dissemination: simulator, analytic models, harness."""

__version__ = "0.1.0"

from .core import (
    ChunkSet,
    ConfigurationError,
    DistributionVector,
    PeerState,
    Scenario,
    ScenarioConfig,
    binom,
    delta,
    delta_matrix,
    useful_chunks,
)
from .engine import (
    Seeding,
    SeedingKind,
    TrialReport,
    check_network_alive,
    initial_state,
    run_distributed_optimistic_round,
    run_matching_round,
    run_spreading_round,
    run_trial,
)
from .analytic import (
    BoundsReport,
    MeanFieldModel,
    SpreadingTrajectory,
    bernoulli_model_bounds,
    deterministic_model_bounds,
    expected_undispatched_step,
    extinction_curve,
    extinction_step,
    full_bounds_report,
    loss_and_creation,
    luck_value,
    matching_survival_threshold,
    mean_field_transition,
    spreading_ratio_step,
    spreading_succeeds,
    spreading_threshold,
    spreading_trajectory,
    steady_state_solve,
    survival_time_scale,
)
from .harness import (
    Estimate,
    SweepResult,
    estimate_event,
    meanfield_vs_simulation,
    oracle_bernoulli_missing,
    oracle_staircase_missing,
    success_sweep,
    survival_sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
