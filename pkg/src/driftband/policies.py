"""Decision policies for drifting linear bandit environments.

The main learner is a sliding-window UCB rule on top of the windowed ridge
estimator.  When the drift budget is unknown, an adaptive meta-policy splits
the horizon into blocks and runs an exponential-weights sampler over candidate
window lengths, with a fresh windowed learner inside every block.  Finite-arm
baselines (exponential-weights forecaster with weight sharing, uniform random)
share the same sequential interface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError, ProtocolError
from .estimator import EstimatorConfig, SlidingWindowRidge, confidence_radius

WINDOW_MODES = ("fixed", "known_budget", "unknown_budget", "horizon")
POLICY_KINDS = ("swucb", "adaptive_window", "exp3s", "stationary_ucb", "random")


def _largest_cube_root(num: int) -> int:
    """Largest k >= 0 with k**3 <= num, by exact integer comparison."""
    if num <= 0:
        return 0
    k = max(int(round(num ** (1.0 / 3.0))), 0)
    while k > 0 and k * k * k > num:
        k -= 1
    while (k + 1) ** 3 <= num:
        k += 1
    return k


def window_for_unknown_budget(dim: int, horizon: int) -> int:
    """Window tuning that needs no drift budget: floor((dim*horizon)^(2/3)),
    clamped to [1, horizon]."""
    d, t = int(dim), int(horizon)
    if d < 1 or t < 1:
        raise DomainError("dim and horizon must be positive")
    k = _largest_cube_root((d * t) ** 2)
    return max(1, min(k, t))


def window_for_known_budget(dim: int, horizon: int, budget: float) -> int:
    """Window tuning for a known drift budget b:
    floor((dim*horizon)^(2/3) * (b+1)^(-2/3)), clamped to [1, horizon].

    The floor is evaluated with exact rational arithmetic so boundary cases
    do not depend on floating-point rounding of the 2/3 power.
    """
    d, t = int(dim), int(horizon)
    if d < 1 or t < 1:
        raise DomainError("dim and horizon must be positive")
    b = float(budget)
    if not math.isfinite(b) or b < 0.0:
        raise DomainError("budget must be finite and nonnegative")
    q = Fraction(1.0 + b)
    num = (d * t) ** 2 * q.denominator**2
    den = q.numerator**2
    # largest k with k^3 * den <= num
    k = max(int(round(((d * t) ** 2 / float(q) ** 2) ** (1.0 / 3.0))), 0)
    while k > 0 and k**3 * den > num:
        k -= 1
    while (k + 1) ** 3 * den <= num:
        k += 1
    return max(1, min(k, t))


def resolve_ridge(ridge: Optional[float], param_bound: float) -> float:
    """Default regularizer max(1, 1/param_bound^2); keeps the confidence
    radius formula applicable for parameter bounds below one."""
    if ridge is not None:
        return float(ridge)
    s = float(param_bound)
    return max(1.0, 1.0 / (s * s))


def resolve_delta(delta: Optional[float], horizon: int) -> float:
    if delta is not None:
        return float(delta)
    return 1.0 / int(horizon)


@dataclass(frozen=True)
class MetaSchedule:
    """Block structure and sampler tuning for the adaptive-window policy.

    windows holds grid_steps+1 candidate window lengths floor(H^(j/steps));
    duplicates are kept as distinct sampler arms.  reward_scale is the
    divisor that maps a centered block reward sum into [0, 1];
    block_reward_threshold is the high-probability bound on one block's
    absolute reward sum (half of reward_scale up to rounding).
    """

    block_len: int
    grid_steps: int
    windows: tuple
    explore_rate: float
    n_blocks: int
    reward_scale: float
    block_reward_threshold: float


def meta_schedule(dim: int, horizon: int, noise_scale: float,
                  block_len: Optional[int] = None) -> MetaSchedule:
    """Derive the adaptive-window block schedule for a horizon.

    Defaults: block length floor(dim^(2/3) * sqrt(horizon)) clamped to the
    horizon, a geometric window grid with ceil(ln H) steps, and exploration
    rate min(1, sqrt((steps+1) ln(steps+1) / ((e-1) n_blocks))).  All integer
    floors use exact arithmetic.
    """
    d, t = int(dim), int(horizon)
    if d < 1:
        raise DomainError("dim must be positive")
    if t < 4:
        raise DomainError("horizon must be at least 4 for the block schedule")
    r = float(noise_scale)
    if not math.isfinite(r) or r < 0.0:
        raise DomainError("noise_scale must be finite and nonnegative")
    if block_len is None:
        # largest h with h^6 <= d^4 t^3
        target = d**4 * t**3
        h = max(int(round(d ** (2.0 / 3.0) * math.sqrt(t))), 1)
        while h > 1 and h**6 > target:
            h -= 1
        while (h + 1) ** 6 <= target:
            h += 1
        h = min(h, t)
    else:
        h = int(block_len)
        if h < 1 or h > t:
            raise ConfigurationError("block_len must lie in [1, horizon]")
    steps = int(math.ceil(math.log(h))) if h >= 2 else 0
    windows = []
    for j in range(steps + 1):
        if steps == 0:
            k = h
        else:
            # largest k with k^steps <= h^j
            hj = h**j
            k = max(int(round(h ** (j / steps))), 1)
            while k > 1 and k**steps > hj:
                k -= 1
            while (k + 1) ** steps <= hj:
                k += 1
        windows.append(k)
    n_blocks = -(-t // h)
    arms = steps + 1
    if arms >= 2:
        gamma = min(1.0, math.sqrt(arms * math.log(arms)
                                   / ((math.e - 1.0) * n_blocks)))
    else:
        gamma = 0.0
    span = math.sqrt(h * math.log(t / math.sqrt(h)))
    threshold = h + 2.0 * r * span
    scale = 2.0 * h + 4.0 * r * span
    return MetaSchedule(block_len=h, grid_steps=steps, windows=tuple(windows),
                        explore_rate=gamma, n_blocks=n_blocks,
                        reward_scale=scale, block_reward_threshold=threshold)


class Exp3State:
    """Exponential-weights sampler over a fixed finite arm set."""

    def __init__(self, arm_count: int, explore_rate: float):
        k = int(arm_count)
        g = float(explore_rate)
        if k < 1:
            raise DomainError("arm_count must be positive")
        if not 0.0 <= g <= 1.0:
            raise DomainError("explore_rate must lie in [0, 1]")
        self.arm_count = k
        self.explore_rate = g
        self.weights = np.ones(k)

    def probabilities(self) -> np.ndarray:
        w = self.weights
        return (1.0 - self.explore_rate) * (w / w.sum()) \
            + self.explore_rate / self.arm_count

    def sample_index(self, u: float, probs=None) -> int:
        """Smallest index whose cumulative probability exceeds u in [0, 1)."""
        if probs is None:
            probs = self.probabilities()
        c = 0.0
        for i in range(len(probs)):
            c += probs[i]
            if u < c:
                return i
        return len(probs) - 1

    def gain_update(self, arm: int, prob: float, gain: float) -> None:
        """Importance-weighted update of one arm; gain is clipped to [0, 1]."""
        if not 0.0 < prob <= 1.0:
            raise DomainError("prob must lie in (0, 1]")
        g = min(1.0, max(0.0, float(gain)))
        self.weights[arm] *= math.exp(
            self.explore_rate * g / (self.arm_count * prob))
        m = self.weights.max()
        if m > 1e100:
            # rescaling leaves the sampling distribution unchanged
            self.weights /= m


@dataclass(frozen=True)
class SwUcbPlan:
    window: int
    ridge: float
    beta: float


@dataclass(frozen=True)
class AdaptivePlan:
    schedule: MetaSchedule
    betas: tuple
    ridge: float


@dataclass(frozen=True)
class Exp3sPlan:
    explore_rate: float
    mix_rate: float


class Policy:
    """Sequential decision maker.

    Contract: reset(horizon, dim, bounds, rng) once, then for each round
    exactly one choose(decision_set) -> index followed by exactly one
    observe(action, reward).  Violations raise ProtocolError.  Policies see
    only decision sets and realized rewards, never the drifting parameter.
    """

    name = "policy"

    def __init__(self):
        self._phase = "unset"

    def reset(self, horizon: int, dim: int, bounds, rng) -> None:
        t, d = int(horizon), int(dim)
        if t < 1 or d < 1:
            raise DomainError("horizon and dim must be positive")
        self._horizon = t
        self._dim = d
        self._bounds = bounds
        self._rng = rng
        self._round = 0
        self._setup()
        self._phase = "choose"

    def choose(self, decision_set) -> int:
        if self._phase != "choose":
            raise ProtocolError(f"choose called in phase '{self._phase}'")
        acts = np.ascontiguousarray(decision_set, dtype=np.float64)
        if acts.ndim != 2 or acts.shape[0] == 0 or acts.shape[1] != self._dim:
            raise DomainError(
                f"decision set must have shape (k, {self._dim}) with k >= 1")
        idx = int(self._choose(acts))
        self._phase = "observe"
        return idx

    def observe(self, action, reward) -> None:
        if self._phase != "observe":
            raise ProtocolError(f"observe called in phase '{self._phase}'")
        x = np.ascontiguousarray(action, dtype=np.float64)
        self._observe(x, float(reward))
        self._round += 1
        self._phase = "choose" if self._round < self._horizon else "done"

    def fast_plan(self):
        """Kernel execution plan for the episode runner; None means the
        generic loop must be used.  Valid only after reset."""
        return None

    def _setup(self):
        raise NotImplementedError

    def _choose(self, acts):
        raise NotImplementedError

    def _observe(self, x, y):
        raise NotImplementedError


class SwUcbPolicy(Policy):
    """Sliding-window UCB: optimistic scores from the windowed ridge
    estimator, ties broken toward the lowest index.

    window_mode picks how the window length is resolved at reset:
    "fixed" (explicit), "known_budget" / "unknown_budget" (tuning rules),
    or "horizon" (stationary baseline).  A window longer than the horizon is
    operationally the horizon and is clamped to it.  Defaults: ridge
    max(1, 1/param_bound^2), delta 1/horizon.
    """

    name = "swucb"

    def __init__(self, window_mode: str = "fixed", window: Optional[int] = None,
                 budget: Optional[float] = None, ridge: Optional[float] = None,
                 delta: Optional[float] = None):
        super().__init__()
        if window_mode not in WINDOW_MODES:
            raise ConfigurationError(
                f"window_mode must be one of {WINDOW_MODES}")
        self.window_mode = window_mode
        self.window = window
        self.budget = budget
        self.ridge = ridge
        self.delta = delta

    def _setup(self):
        mode = self.window_mode
        if mode == "fixed":
            if self.window is None:
                raise ConfigurationError("fixed window_mode needs a window")
            w = int(self.window)
            if w < 1:
                raise ConfigurationError("window must be positive")
        elif mode == "known_budget":
            if self.budget is None:
                raise ConfigurationError(
                    "known_budget window_mode needs a budget")
            w = window_for_known_budget(self._dim, self._horizon, self.budget)
        elif mode == "unknown_budget":
            w = window_for_unknown_budget(self._dim, self._horizon)
        else:
            w = self._horizon
        w = min(w, self._horizon)
        b = self._bounds
        cfg = EstimatorConfig(
            dim=self._dim, window=w,
            ridge=resolve_ridge(self.ridge, b.param_bound),
            noise_scale=b.noise_scale, action_bound=b.action_bound,
            param_bound=b.param_bound,
            delta=resolve_delta(self.delta, self._horizon))
        self._cfg = cfg
        self._beta = confidence_radius(cfg)
        self._est = SlidingWindowRidge(cfg)

    @property
    def window_effective(self) -> int:
        return self._cfg.window

    @property
    def beta(self) -> float:
        return self._beta

    def _choose(self, acts):
        return self._est.choose_ucb(acts, self._beta)

    def _observe(self, x, y):
        self._est.push(x, y)

    def fast_plan(self):
        return SwUcbPlan(window=self._cfg.window, ridge=self._cfg.ridge,
                         beta=self._beta)


class AdaptiveWindowPolicy(Policy):
    """Meta-policy for unknown drift budgets.

    The horizon splits into blocks of length block_len.  At each block start
    an exponential-weights sampler picks a candidate window length; a fresh
    sliding-window learner runs for the block, so its window never spans a
    block boundary.  At block end the block's reward sum is centered and
    rescaled into [0, 1] (clipped outside) and fed back to the sampler.  The
    block learner folds delta = 1/horizon into its confidence radius.
    """

    name = "adaptive_window"

    def __init__(self, block_len: Optional[int] = None,
                 ridge: Optional[float] = None, delta: Optional[float] = None):
        super().__init__()
        self.block_len = block_len
        self.ridge = ridge
        self.delta = delta

    def _setup(self):
        b = self._bounds
        sched = meta_schedule(self._dim, self._horizon, b.noise_scale,
                              block_len=self.block_len)
        ridge = resolve_ridge(self.ridge, b.param_bound)
        delta = resolve_delta(self.delta, self._horizon)
        cfgs = tuple(
            EstimatorConfig(dim=self._dim, window=w, ridge=ridge,
                            noise_scale=b.noise_scale,
                            action_bound=b.action_bound,
                            param_bound=b.param_bound, delta=delta)
            for w in sched.windows)
        self._schedule = sched
        self._ridge = ridge
        self._cfgs = cfgs
        self._betas = tuple(confidence_radius(c) for c in cfgs)
        self._exp3 = Exp3State(len(sched.windows), sched.explore_rate)
        self._est = None
        self._arm = -1
        self._arm_prob = 0.0
        self._block_sum = 0.0

    @property
    def schedule(self) -> MetaSchedule:
        return self._schedule

    @property
    def sampler(self) -> Exp3State:
        return self._exp3

    @property
    def current_window(self) -> int:
        return self._schedule.windows[self._arm]

    def _choose(self, acts):
        if self._round % self._schedule.block_len == 0:
            probs = self._exp3.probabilities()
            u = self._rng.random()
            self._arm = self._exp3.sample_index(u, probs)
            self._arm_prob = float(probs[self._arm])
            self._est = SlidingWindowRidge(self._cfgs[self._arm])
            self._block_sum = 0.0
        return self._est.choose_ucb(acts, self._betas[self._arm])

    def _observe(self, x, y):
        self._est.push(x, y)
        self._block_sum += y
        done = self._round + 1
        if done % self._schedule.block_len == 0 or done == self._horizon:
            # the final block may be short; it uses the same reward scale
            r = 0.5 + self._block_sum / self._schedule.reward_scale
            self._exp3.gain_update(self._arm, self._arm_prob, r)

    def fast_plan(self):
        return AdaptivePlan(schedule=self._schedule, betas=self._betas,
                            ridge=self._ridge)


class Exp3SPolicy(Policy):
    """Exponential-weights forecaster for finite arm sets given as the
    standard basis, with uniform weight sharing every round so the sampler
    keeps responding to drift.  Rewards are mapped by (y+1)/2 and clipped
    into [0, 1] before the importance-weighted update.
    """

    name = "exp3s"

    def __init__(self, budget: float, arm_count: Optional[int] = None,
                 horizon: Optional[int] = None):
        super().__init__()
        b = float(budget)
        if not math.isfinite(b) or b < 0.0:
            raise DomainError("budget must be finite and nonnegative")
        self.budget = b
        self.arm_count = arm_count
        self.horizon_hint = horizon

    def _setup(self):
        k, t = self._dim, self._horizon
        if self.arm_count is not None and int(self.arm_count) != k:
            raise ConfigurationError(
                f"policy built for {self.arm_count} arms, environment has {k}")
        if self.horizon_hint is not None and int(self.horizon_hint) != t:
            raise ConfigurationError(
                f"policy built for horizon {self.horizon_hint}, reset got {t}")
        hardness = math.ceil(self.budget)
        self._gamma = min(1.0, math.sqrt(
            k * (hardness * math.log(k * t) + math.e)
            / ((math.e - 1.0) * t)))
        self._mix = 1.0 / t
        self._weights = np.ones(k)
        self._eye = np.eye(k)
        self._last = -1
        self._last_prob = 0.0

    @property
    def explore_rate(self) -> float:
        return self._gamma

    def _choose(self, acts):
        if acts.shape != (self._dim, self._dim) \
                or not np.array_equal(acts, self._eye):
            raise DomainError(
                "this baseline requires the standard-basis decision set")
        w = self._weights
        probs = (1.0 - self._gamma) * (w / w.sum()) + self._gamma / self._dim
        u = self._rng.random()
        pick = self._dim - 1
        c = 0.0
        for i in range(self._dim):
            c += probs[i]
            if u < c:
                pick = i
                break
        self._last = pick
        self._last_prob = float(probs[pick])
        return pick

    def _observe(self, x, y):
        k = self._dim
        gain = min(1.0, max(0.0, 0.5 * (y + 1.0)))
        w = self._weights
        w[self._last] *= math.exp(
            self._gamma * (gain / self._last_prob) / k)
        w += (math.e * self._mix / k) * w.sum()
        m = w.max()
        if m > 1e100:
            w /= m

    def fast_plan(self):
        return Exp3sPlan(explore_rate=self._gamma, mix_rate=self._mix)


class RandomPolicy(Policy):
    """Uniform random arm choice; the weakest baseline."""

    name = "random"

    def _setup(self):
        pass

    def _choose(self, acts):
        return int(self._rng.integers(acts.shape[0]))

    def _observe(self, x, y):
        pass


def swucb_known_budget(budget: float, **overrides) -> SwUcbPolicy:
    p = SwUcbPolicy(window_mode="known_budget", budget=budget, **overrides)
    p.name = "swucb_known"
    return p


def swucb_unknown_budget(**overrides) -> SwUcbPolicy:
    p = SwUcbPolicy(window_mode="unknown_budget", **overrides)
    p.name = "swucb_unknown"
    return p


def stationary_ucb_baseline(**overrides) -> SwUcbPolicy:
    """UCB that never forgets: the sliding window pinned to the horizon."""
    p = SwUcbPolicy(window_mode="horizon", **overrides)
    p.name = "stationary_ucb"
    return p


def adaptive_window_policy(**overrides) -> AdaptiveWindowPolicy:
    return AdaptiveWindowPolicy(**overrides)


def exp3s_baseline(arm_count: int, budget: float,
                   horizon: int) -> Exp3SPolicy:
    """Finite-arm drifting baseline pinned to an expected arm count and
    horizon; reset verifies both."""
    return Exp3SPolicy(budget=budget, arm_count=arm_count, horizon=horizon)


_SPEC_MODES = {"known_budget": "swucb_known", "unknown_budget": "swucb_unknown",
               "horizon": "stationary_ucb"}


@dataclass(frozen=True)
class PolicySpec:
    """Serializable policy description for experiment configs.

    budget=None means "inherit the environment's budget knob" where one is
    needed.  ridge, delta, window, block_len override policy defaults.
    """

    kind: str
    label: str = ""
    window_mode: str = "fixed"
    window: Optional[int] = None
    budget: Optional[float] = None
    ridge: Optional[float] = None
    delta: Optional[float] = None
    block_len: Optional[int] = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigurationError(
                f"kind must be one of {POLICY_KINDS}, got {self.kind!r}")
        if self.window_mode not in WINDOW_MODES:
            raise ConfigurationError(
                f"window_mode must be one of {WINDOW_MODES}")
        if self.kind == "swucb" and self.window_mode == "fixed" \
                and self.window is None:
            raise ConfigurationError("swucb with fixed window_mode needs window")
        if self.window is not None and int(self.window) < 1:
            raise ConfigurationError("window must be positive")
        if self.block_len is not None and int(self.block_len) < 1:
            raise ConfigurationError("block_len must be positive")
        if self.budget is not None and (not math.isfinite(float(self.budget))
                                        or float(self.budget) < 0.0):
            raise ConfigurationError("budget must be finite and nonnegative")
        if self.ridge is not None and not float(self.ridge) > 0.0:
            raise ConfigurationError("ridge must be positive")
        if self.delta is not None and not 0.0 < float(self.delta) <= 1.0:
            raise ConfigurationError("delta must lie in (0, 1]")

    def default_name(self) -> str:
        if self.kind == "swucb":
            return _SPEC_MODES.get(self.window_mode, f"swucb_w{self.window}")
        return self.kind

    def build(self, default_budget: Optional[float] = None) -> Policy:
        budget = self.budget if self.budget is not None else default_budget
        if self.kind == "swucb":
            if self.window_mode == "known_budget" and budget is None:
                raise ConfigurationError(
                    "known_budget policy needs a budget, and the environment "
                    "declares none")
            p = SwUcbPolicy(window_mode=self.window_mode, window=self.window,
                            budget=budget, ridge=self.ridge, delta=self.delta)
        elif self.kind == "stationary_ucb":
            p = SwUcbPolicy(window_mode="horizon", ridge=self.ridge,
                            delta=self.delta)
        elif self.kind == "adaptive_window":
            p = AdaptiveWindowPolicy(block_len=self.block_len,
                                     ridge=self.ridge, delta=self.delta)
        elif self.kind == "exp3s":
            if budget is None:
                raise ConfigurationError(
                    "exp3s policy needs a budget, and the environment "
                    "declares none")
            p = Exp3SPolicy(budget=budget)
        else:
            p = RandomPolicy()
        p.name = self.label or self.default_name()
        return p

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.label:
            out["label"] = self.label
        if self.kind == "swucb":
            out["window_mode"] = self.window_mode
            if self.window is not None:
                out["window"] = int(self.window)
        for key in ("budget", "ridge", "delta"):
            val = getattr(self, key)
            if val is not None:
                out[key] = float(val)
        if self.kind == "adaptive_window" and self.block_len is not None:
            out["block_len"] = int(self.block_len)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PolicySpec":
        fields = ("kind", "label", "window_mode", "window", "budget",
                  "ridge", "delta", "block_len")
        unknown = sorted(set(data) - set(fields))
        if unknown:
            raise ConfigurationError(f"unknown policy spec keys: {unknown}")
        if "kind" not in data:
            raise ConfigurationError("policy spec needs a 'kind'")
        return cls(**{k: data[k] for k in fields if k in data})
