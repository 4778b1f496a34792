"""Property suites validating the estimator math against dense linear algebra.

Each check evaluates an inequality that the windowed-ridge analysis relies on,
with both sides computed by explicit dense operations (including explicit
matrix inverses) so the verdict does not depend on the estimator's own solve
path.  Reports carry the worst observed margin and an empirical violation
rate; a suite passes when the worst case stays inside its tolerance.
"""

import math
from dataclasses import dataclass

import numpy as np

from .environments import EnvSpec
from .errors import DomainError
from .estimator import SlidingWindowRidge, EstimatorConfig, confidence_radius
from .harness import run_episode
from .policies import adaptive_window_policy, meta_schedule

DEFAULT_TOLERANCE = 1e-9
_RIDGE_GRID = (0.1, 1.0, 10.0)


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one property suite."""

    name: str
    instances: int
    worst: float
    rate: float
    tolerance: float
    passed: bool
    notes: str = ""

    def summary_line(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"{self.name}: {verdict} "
            f"(instances={self.instances}, worst={self.worst:.3e}, "
            f"rate={self.rate:.4g}, tol={self.tolerance:.3g})"
        )


def _unit_ball_points(rng, count, dim):
    # rejection-free: scale a gaussian direction by a radius with interior mass
    raw = rng.normal(size=(count, dim))
    norms = np.linalg.norm(raw, axis=1)
    norms[norms == 0.0] = 1.0
    radii = rng.random(count) ** (1.0 / dim)
    return raw * (radii / norms)[:, None]


def check_bias_bound(n_instances=1000, rng=None) -> CheckReport:
    """Drift-bias inequality for the windowed ridge estimate.

    For window observations X_1..X_m with Gram V = lam*I + sum X_s X_s^T and a
    parameter path theta_1..theta_{m+1}, the matrix-weighted drift term
    ||V^{-1} sum_s X_s X_s^T (theta_s - theta_{m+1})|| never exceeds the path
    variation sum_s ||theta_s - theta_{s+1}||.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    worst = -math.inf
    violations = 0
    for k in range(n_instances):
        dim = int(rng.integers(1, 6))
        window = int(rng.integers(1, 51))
        ridge = float(_RIDGE_GRID[int(rng.integers(0, len(_RIDGE_GRID)))])
        count = int(rng.integers(1, window + 1))
        actions = _unit_ball_points(rng, count, dim)
        path = _unit_ball_points(rng, count + 1, dim)
        gram = ridge * np.eye(dim)
        drift = np.zeros(dim)
        for s in range(count):
            gram += np.outer(actions[s], actions[s])
            drift += actions[s] * float(actions[s] @ (path[s] - path[count]))
        left = float(np.linalg.norm(np.linalg.inv(gram) @ drift))
        right = float(np.linalg.norm(np.diff(path, axis=0), axis=1).sum())
        margin = left - right
        worst = max(worst, margin)
        if margin > DEFAULT_TOLERANCE:
            violations += 1
    return CheckReport(
        name="bias",
        instances=n_instances,
        worst=worst,
        rate=violations / n_instances,
        tolerance=DEFAULT_TOLERANCE,
        passed=violations == 0,
    )


def _deviation_instance():
    # one fixed drifting instance; only the noise is resampled across trials
    rng = np.random.default_rng(20240)
    dim = 2
    window = 30
    ridge = 1.0
    noise_scale = 0.1
    actions = _unit_ball_points(rng, window, dim)
    steps = rng.normal(size=(window, dim))
    steps *= (0.01 / np.linalg.norm(steps, axis=1))[:, None]
    path = np.empty((window + 1, dim))
    path[0] = np.array([0.4, 0.3])
    for s in range(window):
        path[s + 1] = path[s] + steps[s]
    decision_set = np.vstack([np.eye(dim), _unit_ball_points(rng, 14, dim)])
    return dim, window, ridge, noise_scale, actions, path, decision_set


def check_deviation_bound(n_trials=10000, delta=0.1, noise_scale=None) -> CheckReport:
    """Confidence-interval coverage for the windowed ridge estimate.

    Resamples the reward noise of a fixed drifting instance and counts trials
    where some decision-set action's estimated mean strays beyond the drift
    term plus the confidence radius times the Gram-inverse norm.  The rate
    must stay below the nominal failure probability.  noise_scale overrides
    the instance's noise level (0.0 makes the check deterministic).
    """
    dim, window, ridge, default_scale, actions, path, dset = _deviation_instance()
    noise_scale = default_scale if noise_scale is None else float(noise_scale)
    cfg = EstimatorConfig(
        dim=dim,
        window=window,
        ridge=ridge,
        noise_scale=noise_scale,
        action_bound=1.0,
        param_bound=1.0,
        delta=delta,
    )
    beta = confidence_radius(cfg)
    target = path[-1]
    drift_term = float(np.linalg.norm(np.diff(path, axis=0), axis=1).sum())
    gram = ridge * np.eye(dim)
    for s in range(window):
        gram += np.outer(actions[s], actions[s])
    inv_norms = np.sqrt(np.einsum("ij,jk,ik->i", dset, np.linalg.inv(gram), dset))
    bounds = drift_term + beta * inv_norms
    mean_per_obs = np.einsum("ij,ij->i", actions, path[:-1])
    noise_rng = np.random.default_rng(77)
    worst = -math.inf
    violations = 0
    for _ in range(n_trials):
        est = SlidingWindowRidge(cfg)
        noise = noise_rng.normal(0.0, noise_scale, size=window)
        for s in range(window):
            est.push(actions[s], mean_per_obs[s] + noise[s])
        errors = np.abs(dset @ (est.estimate() - target))
        margin = float(np.max(errors - bounds))
        worst = max(worst, margin)
        if margin > 0.0:
            violations += 1
    rate = violations / n_trials
    return CheckReport(
        name="deviation",
        instances=n_trials,
        worst=worst,
        rate=rate,
        tolerance=delta,
        passed=rate <= delta,
        notes=f"delta={delta}",
    )


def check_norm_monotonicity(n_instances=1000, rng=None) -> CheckReport:
    """Gram-inverse norms grow when the Gram is truncated at a block boundary.

    Within a block starting mid-stream, the windowed Gram contains every
    observation the block-truncated Gram does, so the capped inverse norm
    min(1, ||x||^2_{V^{-1}}) of each action is no larger under the windowed
    Gram than under the truncated one.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    worst = -math.inf
    violations = 0
    for k in range(n_instances):
        dim = int(rng.integers(1, 6))
        window = int(rng.integers(2, 16))
        block_index = int(rng.integers(1, 4))
        ridge = float(_RIDGE_GRID[int(rng.integers(0, len(_RIDGE_GRID)))])
        horizon = (block_index + 1) * window
        actions = _unit_ball_points(rng, horizon, dim)
        block_start = block_index * window  # 0-based round index
        instance_worst = -math.inf
        for t in range(block_start, horizon):
            windowed = ridge * np.eye(dim)
            for s in range(max(0, t - window), t):
                windowed += np.outer(actions[s], actions[s])
            truncated = ridge * np.eye(dim)
            for s in range(block_start, t):
                truncated += np.outer(actions[s], actions[s])
            x = actions[t]
            lhs = min(1.0, float(x @ np.linalg.inv(windowed) @ x))
            rhs = min(1.0, float(x @ np.linalg.inv(truncated) @ x))
            instance_worst = max(instance_worst, lhs - rhs)
        worst = max(worst, instance_worst)
        if instance_worst > DEFAULT_TOLERANCE:
            violations += 1
    return CheckReport(
        name="monotonicity",
        instances=n_instances,
        worst=worst,
        rate=violations / n_instances,
        tolerance=DEFAULT_TOLERANCE,
        passed=violations == 0,
    )


def check_block_reward_bound(env_spec=None, n_runs=200, master_seed=0) -> CheckReport:
    """High-probability cap on per-block reward sums under the meta-policy.

    Runs full meta-policy episodes and compares the maximum absolute
    block-reward sum of each run against the threshold the meta-schedule
    budgets for; exceedances must stay at most as frequent as 2/T.
    """
    if env_spec is None:
        env_spec = EnvSpec(kind="sinusoidal", horizon=10000, dim=2, budget=1.0)
    if n_runs < 1:
        raise DomainError("n_runs must be positive")
    env = env_spec.build()
    schedule = meta_schedule(env_spec.dim, env_spec.horizon, env_spec.noise_scale)
    block_len = schedule.block_len
    starts = np.arange(0, env_spec.horizon, block_len)
    worst = -math.inf
    exceedances = 0
    for seed in range(n_runs):
        policy = adaptive_window_policy()
        trace = run_episode(env, policy, seed, master_seed=master_seed)
        sums = np.add.reduceat(trace.rewards, starts)
        peak = float(np.max(np.abs(sums)))
        margin = peak - schedule.block_reward_threshold
        worst = max(worst, margin)
        if margin > 0.0:
            exceedances += 1
    rate = exceedances / n_runs
    allowed = 2.0 / env_spec.horizon
    return CheckReport(
        name="blockreward",
        instances=n_runs,
        worst=worst,
        rate=rate,
        tolerance=allowed,
        passed=rate <= allowed,
        notes=f"threshold={schedule.block_reward_threshold:.6g}",
    )


CHECK_SUITES = ("bias", "deviation", "monotonicity", "blockreward")


def run_suite(name: str, **overrides) -> CheckReport:
    """Dispatch one named suite with its default workload."""
    if name == "bias":
        return check_bias_bound(**overrides)
    if name == "deviation":
        return check_deviation_bound(**overrides)
    if name == "monotonicity":
        return check_norm_monotonicity(**overrides)
    if name == "blockreward":
        return check_block_reward_bound(**overrides)
    raise DomainError(f"unknown check suite: {name!r}")
