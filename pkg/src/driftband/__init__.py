"""Linear stochastic bandits under drifting rewards.

Windowed ridge estimation with UCB scoring, drifting-environment
generators, sliding-window and adaptive-window policies, a dynamic-regret
harness, and numerical property checks for the theory they rest on.
"""
from .checks import (
    CheckReport,
    check_bias_bound,
    check_block_reward_bound,
    check_deviation_bound,
    check_norm_monotonicity,
)
from .config import ExperimentConfig, load_config, load_preset, parse_config
from .environments import (
    DriftingEnvironment,
    EnvSpec,
    make_budgeted_random_walk,
    make_constant,
    make_lower_bound_blocks,
    make_sinusoidal,
    variation,
)
from .errors import (
    ConfigurationError,
    DomainError,
    DriftbandError,
    InternalError,
    ProtocolError,
)
from .estimator import EstimatorConfig, SlidingWindowRidge, confidence_radius
from .harness import (
    RegretTrace,
    SlopeFit,
    SweepCell,
    SweepResult,
    loglog_slope,
    replicate,
    run_episode,
    sweep,
    write_summary_json,
    write_sweep_csv,
    write_trace_csv,
)
from .policies import (
    AdaptiveWindowPolicy,
    Exp3SPolicy,
    Policy,
    PolicySpec,
    RandomPolicy,
    SwUcbPolicy,
    adaptive_window_policy,
    exp3s_baseline,
    meta_schedule,
    stationary_ucb_baseline,
    swucb_known_budget,
    swucb_unknown_budget,
    window_for_known_budget,
    window_for_unknown_budget,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveWindowPolicy",
    "CheckReport",
    "ConfigurationError",
    "DomainError",
    "DriftbandError",
    "DriftingEnvironment",
    "EnvSpec",
    "EstimatorConfig",
    "Exp3SPolicy",
    "ExperimentConfig",
    "InternalError",
    "Policy",
    "PolicySpec",
    "ProtocolError",
    "RandomPolicy",
    "RegretTrace",
    "SlidingWindowRidge",
    "SlopeFit",
    "SwUcbPolicy",
    "SweepCell",
    "SweepResult",
    "adaptive_window_policy",
    "check_bias_bound",
    "check_block_reward_bound",
    "check_deviation_bound",
    "check_norm_monotonicity",
    "confidence_radius",
    "exp3s_baseline",
    "load_config",
    "load_preset",
    "loglog_slope",
    "make_budgeted_random_walk",
    "make_constant",
    "make_lower_bound_blocks",
    "make_sinusoidal",
    "meta_schedule",
    "parse_config",
    "replicate",
    "run_episode",
    "stationary_ucb_baseline",
    "sweep",
    "swucb_known_budget",
    "swucb_unknown_budget",
    "variation",
    "window_for_known_budget",
    "window_for_unknown_budget",
    "write_summary_json",
    "write_sweep_csv",
    "write_trace_csv",
    "__version__",
]
