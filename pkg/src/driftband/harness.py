"""Episode runner, seed replication, sweeps, and growth-rate fits.

The runner has two execution paths: a generic interpreted loop that drives
any Policy object, and compiled kernels for the windowed-UCB family.  Both
paths draw noise and sampler uniforms from the same generator streams and
route the float math through shared primitives, so for the windowed-UCB and
adaptive policies they produce bit-identical traces.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _episodes
from .environments import DriftingEnvironment, EnvSpec
from .errors import ConfigurationError, DomainError, InternalError
from .estimator import REFRESH_EVERY
from .policies import (
    AdaptivePlan,
    Exp3State,
    Exp3sPlan,
    Policy,
    PolicySpec,
    SwUcbPlan,
)


def episode_rngs(master_seed: int, episode_seed: int):
    """Independent (noise, policy) generator pair for one episode."""
    ss = np.random.SeedSequence((int(master_seed), int(episode_seed)))
    noise_seq, policy_seq = ss.spawn(2)
    return np.random.default_rng(noise_seq), np.random.default_rng(policy_seq)


@dataclass
class RegretTrace:
    """Per-round record of one episode.

    cum_regret is the prefix sum of inst_regret; regret is measured against
    the per-round best action under the true parameter, which the policy
    never sees.
    """

    policy: str
    seed: int
    master_seed: int
    config_digest: str
    actions: np.ndarray
    rewards: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.actions)

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1])


def _digest(env: DriftingEnvironment, policy: Policy, seed, master_seed) -> str:
    payload = {
        "env": env.kind,
        "horizon": env.horizon,
        "dim": env.dim,
        "declared_budget": env.declared_budget,
        "noise_scale": env.bounds.noise_scale,
        "policy": policy.name,
        "plan": repr(policy.fast_plan()),
        "seed": int(seed),
        "master_seed": int(master_seed),
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _is_basis_env(env: DriftingEnvironment) -> bool:
    sets3d, sizes, set_idx = env.stacked_sets()
    if set_idx.max() != set_idx.min():
        return False
    si = int(set_idx[0])
    s0 = sets3d[si, : sizes[si], :]
    return s0.shape[0] == env.dim and np.array_equal(s0, np.eye(env.dim))


def _class_loop(env, policy, noise, actions, rewards, inst):
    for t in range(1, env.horizon + 1):
        dset = env.decision_set(t)
        i = policy.choose(dset)
        x = dset[i]
        mean = env.mean_reward(t, x)
        y = mean + noise[t - 1]
        policy.observe(x, y)
        bi = env.best_index(t)
        actions[t - 1] = i
        rewards[t - 1] = y
        inst[t - 1] = env.mean_reward(t, dset[bi]) - mean


def run_episode(env: DriftingEnvironment, policy: Policy, seed: int,
                master_seed: int = 0, use_fast: bool = True) -> RegretTrace:
    """One full choose/observe episode; returns the regret trace.

    With use_fast the runner dispatches to a compiled kernel when the
    policy publishes an execution plan; the interpreted loop is the
    fallback and the reference.
    """
    horizon, d = env.horizon, env.dim
    noise_rng, policy_rng = episode_rngs(master_seed, seed)
    policy.reset(horizon, d, env.bounds, policy_rng)
    digest = _digest(env, policy, seed, master_seed)
    noise = noise_rng.normal(0.0, env.bounds.noise_scale, size=horizon)
    actions = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon)
    inst = np.empty(horizon)

    plan = policy.fast_plan() if use_fast else None
    if isinstance(plan, SwUcbPlan):
        sets3d, sizes, set_idx = env.stacked_sets()
        total = _episodes.swucb_span(
            env.thetas, sets3d, sizes, set_idx, noise, 0, horizon,
            plan.window, plan.ridge, plan.beta, REFRESH_EVERY,
            actions, rewards, inst)
        if math.isnan(total):
            raise InternalError("gram factorization failed during episode")
    elif isinstance(plan, AdaptivePlan):
        sched = plan.schedule
        sets3d, sizes, set_idx = env.stacked_sets()
        sampler = Exp3State(len(sched.windows), sched.explore_rate)
        start = 0
        while start < horizon:
            length = min(sched.block_len, horizon - start)
            probs = sampler.probabilities()
            u = policy_rng.random()
            j = sampler.sample_index(u, probs)
            total = _episodes.swucb_span(
                env.thetas, sets3d, sizes, set_idx, noise, start, length,
                sched.windows[j], plan.ridge, plan.betas[j], REFRESH_EVERY,
                actions, rewards, inst)
            if math.isnan(total):
                raise InternalError("gram factorization failed during episode")
            sampler.gain_update(j, float(probs[j]),
                                0.5 + total / sched.reward_scale)
            start += length
    elif isinstance(plan, Exp3sPlan) and _is_basis_env(env):
        uniforms = policy_rng.random(size=horizon)
        _episodes.exp3s_episode(env.thetas, noise, uniforms,
                                plan.explore_rate, plan.mix_rate,
                                actions, rewards, inst)
    else:
        _class_loop(env, policy, noise, actions, rewards, inst)

    return RegretTrace(policy=policy.name, seed=int(seed),
                       master_seed=int(master_seed), config_digest=digest,
                       actions=actions, rewards=rewards, inst_regret=inst,
                       cum_regret=np.cumsum(inst))


@dataclass
class SweepCell:
    """Aggregate of one (policy, horizon) grid point over seeds."""

    policy: str
    horizon: int
    seeds: tuple
    finals: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.finals.mean())

    @property
    def stderr(self) -> float:
        n = len(self.finals)
        if n < 2:
            return 0.0
        return float(self.finals.std(ddof=1) / math.sqrt(n))


def replicate(env_spec: EnvSpec, policy_spec: PolicySpec, n_seeds: int,
              master_seed: int = 0, use_fast: bool = True) -> SweepCell:
    """Run n_seeds independent episodes of one policy on one environment.

    Episode k draws its streams from (master_seed, k); the environment is
    built once and shared, which is safe because episodes never mutate it.
    """
    n = int(n_seeds)
    if n < 1:
        raise DomainError("n_seeds must be positive")
    env = env_spec.build()
    policy = policy_spec.build(default_budget=env_spec.budget)
    finals = np.empty(n)
    for k in range(n):
        trace = run_episode(env, policy, seed=k, master_seed=master_seed,
                            use_fast=use_fast)
        finals[k] = trace.final_regret
    return SweepCell(policy=policy.name, horizon=env.horizon,
                     seeds=tuple(range(n)), finals=finals)


def _replicate_star(args):
    return replicate(*args)


@dataclass
class SweepResult:
    cells: list
    master_seed: int
    n_seeds: int

    def policies(self):
        seen = []
        for c in self.cells:
            if c.policy not in seen:
                seen.append(c.policy)
        return seen

    def _cells_for(self, policy: str):
        got = sorted((c for c in self.cells if c.policy == policy),
                     key=lambda c: c.horizon)
        if not got:
            raise DomainError(f"no cells for policy {policy!r}")
        return got

    def horizons(self, policy: str):
        return [c.horizon for c in self._cells_for(policy)]

    def means(self, policy: str):
        return np.array([c.mean for c in self._cells_for(policy)])

    def stderrs(self, policy: str):
        return np.array([c.stderr for c in self._cells_for(policy)])

    def slope(self, policy: str) -> "SlopeFit":
        return loglog_slope(self.horizons(policy), self.means(policy))


def sweep(env_specs: Sequence[EnvSpec], policy_specs: Sequence[PolicySpec],
          n_seeds: int, master_seed: int = 0, workers: int = 1,
          use_fast: bool = True) -> SweepResult:
    """Full grid of environments x policies, n_seeds episodes per cell.

    Cells are independent work units; with workers > 1 they run in a
    process pool.  Results keep plan order, so the schedule cannot change
    the output.
    """
    plan = [(es, ps, n_seeds, master_seed, use_fast)
            for es in env_specs for ps in policy_specs]
    if int(workers) > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            cells = list(pool.map(_replicate_star, plan))
    else:
        cells = [_replicate_star(args) for args in plan]
    return SweepResult(cells=cells, master_seed=int(master_seed),
                       n_seeds=int(n_seeds))


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares fit of log(value) against log(horizon)."""

    slope: float
    intercept: float
    residual: float


def loglog_slope(horizons, values) -> SlopeFit:
    xs = np.asarray(horizons, dtype=np.float64)
    ys = np.asarray(values, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
        raise DomainError("need at least two (horizon, value) pairs")
    if not ((xs > 0).all() and (ys > 0).all()):
        raise DomainError("log-log fit needs positive horizons and values")
    lx, ly = np.log(xs), np.log(ys)
    a = np.stack([lx, np.ones_like(lx)], axis=1)
    sol, *_ = np.linalg.lstsq(a, ly, rcond=None)
    residual = float(((a @ sol - ly) ** 2).sum())
    return SlopeFit(slope=float(sol[0]), intercept=float(sol[1]),
                    residual=residual)


def write_sweep_csv(result: SweepResult, path) -> None:
    lines = ["policy,T,seed,final_regret"]
    for cell in result.cells:
        for k, v in zip(cell.seeds, cell.finals):
            lines.append(f"{cell.policy},{cell.horizon},{k},{float(v)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_trace_csv(trace: RegretTrace, path) -> None:
    lines = ["t,action,reward,inst_regret,cum_regret"]
    for t in range(trace.horizon):
        lines.append(f"{t + 1},{int(trace.actions[t])},"
                     f"{float(trace.rewards[t])!r},"
                     f"{float(trace.inst_regret[t])!r},"
                     f"{float(trace.cum_regret[t])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def summary_dict(result: SweepResult) -> dict:
    out = {"master_seed": result.master_seed, "n_seeds": result.n_seeds,
           "policies": {}}
    for name in result.policies():
        horizons = result.horizons(name)
        entry = {
            "horizons": horizons,
            "mean_regret": [float(v) for v in result.means(name)],
            "stderr": [float(v) for v in result.stderrs(name)],
        }
        if len(horizons) >= 2:
            fit = result.slope(name)
            entry["slope"] = {"slope": fit.slope, "intercept": fit.intercept,
                              "residual": fit.residual}
        else:
            entry["slope"] = None
        out["policies"][name] = entry
    return out


def write_summary_json(result: SweepResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary_dict(result), fh, indent=2, sort_keys=True)
        fh.write("\n")
