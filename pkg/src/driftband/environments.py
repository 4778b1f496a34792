"""Drifting linear-bandit environments.

An environment fixes, ahead of the interaction, a parameter path
theta_1..theta_T, a finite decision set per round, and a Gaussian noise
scale.  Rewards are <x, theta_t> plus noise.  Each environment declares a
budget that provably upper-bounds the path's total variation
sum_t ||theta_{t+1} - theta_t||, and construction re-verifies that bound
along with the normalization |<x, theta_t>| <= 1.

Generators: a constant path, the two-armed sinusoidal drift used by the
regret experiments, a blockwise-constant adversarial path with corner
parameters, and a budgeted random walk.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _numeric
from .errors import ConfigurationError, DomainError, InternalError

ENV_KINDS = ("constant", "sinusoidal", "lower_bound_blocks", "budgeted_random_walk")


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian reward noise; a Gaussian with std ``scale`` is scale-sub-Gaussian."""

    kind: str = "gaussian"
    scale: float = 0.1

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ConfigurationError("only gaussian noise is supported")
        if self.scale < 0.0:
            raise ConfigurationError("noise scale must be nonnegative")


@dataclass(frozen=True)
class BoundsInfo:
    """Bounds a policy may rely on: norms and the noise scale."""

    action_bound: float
    param_bound: float
    noise_scale: float


def _path_variation(thetas: np.ndarray) -> float:
    """Sum of consecutive l2 differences along the path (the canonical value:
    every budget comparison in the package uses this exact computation)."""
    if thetas.shape[0] < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(thetas, axis=0), axis=1).sum())


class DriftingEnvironment:
    """Immutable bandit instance: parameter path, decision sets, noise.

    Arrays are made read-only after validation; instances are safe to share
    across concurrently running episodes.
    """

    def __init__(
        self,
        kind: str,
        thetas: np.ndarray,
        decision_sets,
        set_index,
        noise: NoiseModel,
        declared_budget: float,
        action_bound: float,
        param_bound: float,
        budget_param=None,
        seed=None,
        extras=None,
    ):
        if kind not in ENV_KINDS:
            raise ConfigurationError("unknown environment kind %r" % (kind,))
        thetas = np.ascontiguousarray(thetas, dtype=np.float64)
        if thetas.ndim != 2 or thetas.shape[0] < 1 or thetas.shape[1] < 1:
            raise ConfigurationError("thetas must have shape (T, d) with T, d >= 1")
        if not np.all(np.isfinite(thetas)):
            raise ConfigurationError("thetas must be finite")
        t_len, dim = thetas.shape
        sets = tuple(
            np.ascontiguousarray(s, dtype=np.float64) for s in decision_sets
        )
        if not sets:
            raise ConfigurationError("need at least one decision set")
        for s in sets:
            if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] != dim:
                raise ConfigurationError(
                    "decision sets must have shape (k, %d) with k >= 1" % dim
                )
            if not np.all(np.isfinite(s)):
                raise ConfigurationError("decision sets must be finite")
        if set_index is None:
            if len(sets) != 1:
                raise ConfigurationError(
                    "set_index is required when more than one decision set is given"
                )
            index = None
        else:
            index = np.ascontiguousarray(set_index, dtype=np.int64)
            if index.shape != (t_len,):
                raise ConfigurationError("set_index must have shape (T,)")
            if index.min() < 0 or index.max() >= len(sets):
                raise ConfigurationError("set_index entries out of range")
        if declared_budget < 0.0:
            raise ConfigurationError("declared_budget must be nonnegative")
        tol = 1e-9
        realized = _path_variation(thetas)
        if realized > declared_budget:
            raise ConfigurationError(
                "path variation %.12g exceeds declared budget %.12g"
                % (realized, declared_budget)
            )
        norms = np.linalg.norm(thetas, axis=1)
        if norms.max(initial=0.0) > param_bound * (1.0 + tol) + 1e-12:
            raise ConfigurationError("some ||theta_t|| exceeds param_bound")
        for s in sets:
            if np.linalg.norm(s, axis=1).max() > action_bound * (1.0 + tol) + 1e-12:
                raise ConfigurationError("some action norm exceeds action_bound")
        for si, s in enumerate(sets):
            rows = (
                thetas
                if index is None
                else thetas[np.flatnonzero(index == si)]
            )
            if rows.shape[0] and np.abs(rows @ s.T).max() > 1.0 + tol:
                raise ConfigurationError(
                    "normalization violated: |<x, theta_t>| > 1 for set %d" % si
                )
        thetas.setflags(write=False)
        for s in sets:
            s.setflags(write=False)
        if index is not None:
            index.setflags(write=False)
        self.kind = kind
        self._thetas = thetas
        self._sets = sets
        self._index = index
        self.noise = noise
        self.declared_budget = float(declared_budget)
        self.action_bound = float(action_bound)
        self.param_bound = float(param_bound)
        self.budget_param = budget_param
        self.seed = seed
        self.extras = dict(extras or {})
        self._stacked = None

    @property
    def horizon(self) -> int:
        return self._thetas.shape[0]

    @property
    def dim(self) -> int:
        return self._thetas.shape[1]

    @property
    def thetas(self) -> np.ndarray:
        """Read-only (T, d) parameter path."""
        return self._thetas

    @property
    def bounds(self) -> BoundsInfo:
        return BoundsInfo(self.action_bound, self.param_bound, self.noise.scale)

    def _check_t(self, t: int) -> int:
        if not 1 <= t <= self.horizon:
            raise DomainError("round %r outside 1..%d" % (t, self.horizon))
        return int(t)

    def theta(self, t: int) -> np.ndarray:
        """Parameter vector of round t (rounds are 1-based)."""
        return self._thetas[self._check_t(t) - 1]

    def decision_set(self, t: int) -> np.ndarray:
        """Read-only (k, d) action matrix for round t."""
        t = self._check_t(t)
        if self._index is None:
            return self._sets[0]
        return self._sets[self._index[t - 1]]

    def mean_reward(self, t: int, x) -> float:
        """<x, theta_t> without noise."""
        arr = np.ascontiguousarray(x, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise DomainError("action shape %r, expected (%d,)" % (arr.shape, self.dim))
        return _numeric.vdot(arr, self.theta(t))

    def reward(self, t: int, x, rng: np.random.Generator) -> float:
        """Noisy reward <x, theta_t> + eta, eta drawn fresh from ``rng``."""
        return self.mean_reward(t, x) + rng.normal(0.0, self.noise.scale)

    def best_index(self, t: int) -> int:
        """Index of the mean-reward-maximizing action; ties go to the lowest."""
        t = self._check_t(t)
        acts = self.decision_set(t)
        return int(
            _numeric.best_mean_index(self._thetas[t - 1], acts, acts.shape[0])
        )

    def best_action(self, t: int) -> np.ndarray:
        return self.decision_set(t)[self.best_index(t)].copy()

    def variation(self) -> float:
        """Realized total variation of the parameter path."""
        return _path_variation(self._thetas)

    def stacked_sets(self):
        """(sets3d, per-set sizes, per-round set index) for the episode runners.

        sets3d is (n_sets, k_max, d) zero-padded; only the first sizes[s] rows
        of each slice are meaningful.
        """
        if self._stacked is None:
            k_max = max(s.shape[0] for s in self._sets)
            sets3d = np.zeros((len(self._sets), k_max, self.dim))
            sizes = np.zeros(len(self._sets), dtype=np.int64)
            for i, s in enumerate(self._sets):
                sets3d[i, : s.shape[0]] = s
                sizes[i] = s.shape[0]
            index = (
                np.zeros(self.horizon, dtype=np.int64)
                if self._index is None
                else self._index.copy()
            )
            self._stacked = (sets3d, sizes, index)
        return self._stacked


def variation(env: DriftingEnvironment) -> float:
    """Total variation of the environment's parameter path."""
    return env.variation()


def _basis(dim: int) -> np.ndarray:
    return np.eye(dim)


def make_constant(theta, horizon: int, noise_scale: float = 0.1, decision_set=None):
    """Stationary environment with a fixed parameter vector."""
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    if theta.ndim != 1:
        raise ConfigurationError("theta must be a vector")
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    acts = _basis(theta.shape[0]) if decision_set is None else np.asarray(decision_set, float)
    thetas = np.repeat(theta[None, :], horizon, axis=0)
    action_bound = max(1.0, float(np.linalg.norm(acts, axis=1).max()))
    param_bound = max(1.0, float(np.linalg.norm(theta)))
    return DriftingEnvironment(
        kind="constant",
        thetas=thetas,
        decision_sets=(acts,),
        set_index=None,
        noise=NoiseModel(scale=noise_scale),
        declared_budget=0.0,
        action_bound=action_bound,
        param_bound=param_bound,
        budget_param=0.0,
    )


def make_sinusoidal(horizon: int, budget: float, noise_scale: float = 0.1):
    """Two-armed drifting instance with opposed sinusoidal coordinates.

    theta_t = (0.5 + 0.3 sin(5 b pi t / T), 0.5 + 0.3 sin(pi + 5 b pi t / T))
    with b = ``budget`` acting as the drift-speed knob; actions are the two
    standard basis vectors.  The declared budget is the realized path
    variation (about 4.24 b for large T: the 0.3-amplitude sine sweeps b
    two-and-a-half periods, so each coordinate travels about 3 b, and the two
    coordinates move in exact opposition).
    """
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    if not budget > 0.0:
        raise ConfigurationError("budget must be positive")
    t = np.arange(1, horizon + 1, dtype=np.float64)
    phase = 5.0 * budget * np.pi * t / horizon
    thetas = np.stack(
        [0.5 + 0.3 * np.sin(phase), 0.5 + 0.3 * np.sin(np.pi + phase)], axis=1
    )
    realized = _path_variation(thetas)
    return DriftingEnvironment(
        kind="sinusoidal",
        thetas=thetas,
        decision_sets=(_basis(2),),
        set_index=None,
        noise=NoiseModel(scale=noise_scale),
        declared_budget=realized,
        action_bound=1.0,
        param_bound=math.sqrt(0.68),
        budget_param=float(budget),
    )


def _ceil_cbrt_ratio(num: int, den_sq: float) -> int:
    """Smallest k >= 1 with k^3 * den_sq >= num; exact when den_sq is integral."""
    if float(den_sq).is_integer():
        den = int(den_sq)
        k = max(1, int(round((num / den) ** (1.0 / 3.0))))
        while k**3 * den >= num and k > 1:
            k -= 1
        while k**3 * den < num:
            k += 1
        return k
    k = max(1, math.ceil((num / den_sq) ** (1.0 / 3.0)))
    while k > 1 and (k - 1) ** 3 * den_sq >= num:
        k -= 1
    while k**3 * den_sq < num:
        k += 1
    return k


def make_lower_bound_blocks(
    dim: int, horizon: int, budget: float, seed: int = 0, noise_scale: float = 0.1
):
    """Blockwise-constant adversarial path with corner parameters.

    The horizon splits into ceil(T/H) blocks of H rounds with
    H = ceil((dim*T)^(2/3) * budget^(-2/3)); within a block every coordinate
    of theta is held at +-sqrt(dim/(4H)), signs drawn i.i.d. per block from
    ``seed``.  Each block's decision set is the 2*dim signed basis vectors
    plus that block's unit optimal direction.  H is raised to ceil(dim^2/4)
    when needed to keep ||theta|| <= 1, and capped at T (degenerate single
    block, with a warning).
    """
    if dim < 1:
        raise ConfigurationError("dim must be >= 1")
    if horizon < dim:
        raise ConfigurationError("horizon must be at least dim")
    if not budget > 0.0:
        raise ConfigurationError("budget must be positive")
    h = _ceil_cbrt_ratio((dim * horizon) ** 2, budget**2)
    h = max(h, math.ceil(dim * dim / 4.0))
    if h > horizon:
        warnings.warn(
            "block length %d exceeds horizon %d; using one degenerate block"
            % (h, horizon)
        )
        h = horizon
    n_blocks = -(-horizon // h)
    rng = np.random.default_rng(seed)
    mag = math.sqrt(dim / (4.0 * h))
    signs = rng.integers(0, 2, size=(n_blocks, dim)) * 2 - 1
    block_thetas = signs.astype(np.float64) * mag
    thetas = np.repeat(block_thetas, h, axis=0)[:horizon]
    theta_norm = mag * math.sqrt(dim)
    sets = []
    for b in range(n_blocks):
        direction = block_thetas[b] / theta_norm
        sets.append(np.vstack([_basis(dim), -_basis(dim), direction[None, :]]))
    set_index = np.repeat(np.arange(n_blocks, dtype=np.int64), h)[:horizon]
    realized = _path_variation(thetas)
    if realized > budget:
        raise InternalError(
            "block construction exceeded its own budget (%g > %g)"
            % (realized, budget)
        )
    return DriftingEnvironment(
        kind="lower_bound_blocks",
        thetas=thetas,
        decision_sets=sets,
        set_index=set_index,
        noise=NoiseModel(scale=noise_scale),
        declared_budget=float(budget),
        action_bound=1.0,
        param_bound=theta_norm,
        budget_param=float(budget),
        seed=seed,
        extras={"block_len": h, "n_blocks": n_blocks, "magnitude": mag},
    )


def make_budgeted_random_walk(
    dim: int,
    horizon: int,
    budget: float,
    seed: int = 0,
    noise_scale: float = 0.1,
    param_bound: float = 1.0,
):
    """Random-walk path spending the variation budget in equal steps.

    theta_1 is uniform in the ball of radius min(param_bound, 1); every step
    has length exactly budget/(T-1) in a uniform random direction, re-drawn
    until the step stays inside the ball, so the realized variation equals
    the budget up to float summation error.  Actions are the standard basis.
    """
    if dim < 1:
        raise ConfigurationError("dim must be >= 1")
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    if budget < 0.0:
        raise ConfigurationError("budget must be nonnegative")
    radius = min(float(param_bound), 1.0)
    if radius <= 0.0:
        raise ConfigurationError("param_bound must be positive")
    step = 0.0 if horizon == 1 else budget / (horizon - 1)
    if step > radius:
        raise DomainError(
            "per-step length %g exceeds ball radius %g; "
            "reduce budget or raise horizon" % (step, radius)
        )
    rng = np.random.default_rng(seed)
    u = rng.normal(size=dim)
    u /= np.linalg.norm(u)
    start = radius * rng.random() ** (1.0 / dim) * u
    thetas = np.empty((horizon, dim))
    thetas[0] = start
    cur = start
    for t in range(1, horizon):
        if step == 0.0:
            thetas[t] = cur
            continue
        for _ in range(10000):
            d = rng.normal(size=dim)
            d /= np.linalg.norm(d)
            cand = cur + step * d
            if np.linalg.norm(cand) <= radius:
                break
        else:
            raise InternalError("random-walk step rejection failed to terminate")
        cur = cand
        thetas[t] = cur
    realized = _path_variation(thetas)
    return DriftingEnvironment(
        kind="budgeted_random_walk",
        thetas=thetas,
        decision_sets=(_basis(dim),),
        set_index=None,
        noise=NoiseModel(scale=noise_scale),
        declared_budget=max(float(budget), realized),
        action_bound=1.0,
        param_bound=radius,
        budget_param=float(budget),
        seed=seed,
    )


@dataclass(frozen=True)
class EnvSpec:
    """Serializable recipe for an environment; ``build()`` realizes it."""

    kind: str
    horizon: int
    dim: int = 2
    budget: float | None = None
    noise_scale: float = 0.1
    seed: int = 0
    theta: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ENV_KINDS:
            raise ConfigurationError("unknown environment kind %r" % (self.kind,))
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        if self.kind == "constant":
            if not self.theta:
                raise ConfigurationError("constant environments need a theta vector")
        elif self.budget is None:
            raise ConfigurationError("%s environments need a budget" % self.kind)

    def build(self) -> DriftingEnvironment:
        if self.kind == "constant":
            return make_constant(
                np.asarray(self.theta, float), self.horizon, self.noise_scale
            )
        if self.kind == "sinusoidal":
            return make_sinusoidal(self.horizon, self.budget, self.noise_scale)
        if self.kind == "lower_bound_blocks":
            return make_lower_bound_blocks(
                self.dim, self.horizon, self.budget, self.seed, self.noise_scale
            )
        return make_budgeted_random_walk(
            self.dim, self.horizon, self.budget, self.seed, self.noise_scale
        )

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "horizon": self.horizon, "noise_scale": self.noise_scale}
        if self.kind == "constant":
            out["theta"] = list(self.theta)
        else:
            out["budget"] = self.budget
        if self.kind in ("lower_bound_blocks", "budgeted_random_walk"):
            out["dim"] = self.dim
            out["seed"] = self.seed
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EnvSpec":
        allowed = {"kind", "horizon", "dim", "budget", "noise_scale", "seed", "theta"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigurationError(
                "unknown environment keys: %s" % ", ".join(sorted(unknown))
            )
        kw = dict(data)
        if "theta" in kw:
            kw["theta"] = tuple(float(v) for v in kw["theta"])
        return cls(**kw)


def export_thetas(env: DriftingEnvironment, path) -> None:
    """Write the parameter path as CSV: t, theta_1..theta_d, one row per round."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + ["theta_%d" % (i + 1) for i in range(env.dim)])
        for t in range(env.horizon):
            writer.writerow([t + 1] + [repr(float(v)) for v in env.thetas[t]])
