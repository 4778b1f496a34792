"""Sliding-window regularized least squares with UCB scoring.

The estimator keeps the most recent ``window`` observation pairs (x, y)
and maintains

    V = ridge * I + sum_s x_s x_s^T        (Gram matrix)
    b = sum_s x_s y_s                      (moment vector)

over exactly the retained pairs, updated by rank-one add on push and
rank-one subtract on evict.  Point estimates solve V theta = b through a
fresh Cholesky factorization each time the state changes; no explicit
inverse is ever formed.  Every 1024 pushes V and b are rebuilt from the
stored window to cancel float accumulation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _numeric
from .errors import ConfigurationError, DomainError, InternalError

REFRESH_EVERY = 1024


@dataclass(frozen=True)
class EstimatorConfig:
    """Static parameters of the windowed ridge estimator.

    dim           action-vector dimension
    window        number of retained observations
    ridge         regularizer on the Gram diagonal, must be >= 1/param_bound^2
                  (keeps the confidence radius at least 1)
    noise_scale   sub-Gaussian scale of the reward noise
    action_bound  upper bound on action norms
    param_bound   upper bound on parameter-vector norms
    delta         confidence failure probability, in (0, 1]
    """

    dim: int
    window: int
    ridge: float
    noise_scale: float
    action_bound: float
    param_bound: float
    delta: float

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ConfigurationError("dim must be a positive integer")
        if not isinstance(self.window, (int, np.integer)) or self.window < 1:
            raise ConfigurationError("window must be a positive integer")
        if not self.ridge > 0.0:
            raise ConfigurationError("ridge must be positive")
        if self.noise_scale < 0.0:
            raise ConfigurationError("noise_scale must be nonnegative")
        if not self.action_bound > 0.0:
            raise ConfigurationError("action_bound must be positive")
        if not self.param_bound > 0.0:
            raise ConfigurationError("param_bound must be positive")
        if not 0.0 < self.delta <= 1.0:
            raise DomainError("delta must lie in (0, 1]")
        floor = 1.0 / self.param_bound**2
        if self.ridge < floor * (1.0 - 1e-12):
            raise ConfigurationError(
                "ridge must be at least 1/param_bound^2 = %g, got %g"
                % (floor, self.ridge)
            )


def confidence_radius(cfg: EstimatorConfig) -> float:
    """Confidence half-width for the windowed estimate.

    R * sqrt(dim * ln((1 + window * L^2 / ridge) / delta)) + sqrt(ridge) * S
    with L = action_bound, S = param_bound, R = noise_scale.
    """
    inner = (1.0 + cfg.window * cfg.action_bound**2 / cfg.ridge) / cfg.delta
    return cfg.noise_scale * math.sqrt(cfg.dim * math.log(inner)) + math.sqrt(
        cfg.ridge
    ) * cfg.param_bound


class SlidingWindowRidge:
    """Mutable estimator state: circular observation window plus V, b.

    Single-threaded; instances are independent and cheap enough to create
    per episode or per block.
    """

    def __init__(self, cfg: EstimatorConfig):
        self.cfg = cfg
        d, w = cfg.dim, cfg.window
        self._gram = cfg.ridge * np.eye(d)
        self._moment = np.zeros(d)
        self._buf_x = np.zeros((w, d))
        self._buf_y = np.zeros(w)
        self._head = 0
        self._count = 0
        self._pushes = 0
        self._chol = np.zeros((d, d))
        self._theta = np.zeros(d)
        self._scratch = np.zeros(d)
        self._stale = True

    def _as_action(self, x, exc):
        arr = np.ascontiguousarray(x, dtype=np.float64)
        if arr.shape != (self.cfg.dim,):
            raise exc(
                "expected an action of shape (%d,), got %r" % (self.cfg.dim, arr.shape)
            )
        return arr

    def push(self, x, y: float) -> None:
        """Append observation (x, y); evicts the oldest pair once full.

        Raises ConfigurationError on dimension mismatch and DomainError when
        ||x|| exceeds action_bound beyond tolerance.
        """
        arr = self._as_action(x, ConfigurationError)
        norm = math.sqrt(_numeric.vdot(arr, arr))
        lim = self.cfg.action_bound
        if norm > lim * (1.0 + 1e-9) + 1e-12:
            raise DomainError("action norm %g exceeds bound %g" % (norm, lim))
        self._head, self._count = _numeric.push_obs(
            self._gram,
            self._moment,
            self._buf_x,
            self._buf_y,
            self._head,
            self._count,
            arr,
            float(y),
            self._scratch,
        )
        self._pushes += 1
        if self._pushes % REFRESH_EVERY == 0:
            _numeric.rebuild(
                self._gram,
                self._moment,
                self._buf_x,
                self._buf_y,
                self._head,
                self._count,
                self.cfg.ridge,
            )
        self._stale = True

    def _ensure_factor(self) -> None:
        if self._stale:
            if not _numeric.chol_factor(self._gram, self._chol):
                raise InternalError(
                    "Gram matrix is not positive definite; state invariant broken"
                )
            _numeric.chol_solve(self._chol, self._moment, self._theta)
            self._stale = False

    def estimate(self) -> np.ndarray:
        """Current solution of V theta = b; the zero vector while empty."""
        self._ensure_factor()
        return self._theta.copy()

    def ucb_score(self, x, beta: float) -> float:
        """<x, theta_hat> + beta * ||x||_{V^{-1}}."""
        arr = self._as_action(x, DomainError)
        self._ensure_factor()
        q = _numeric.inv_quad(self._chol, arr, self._scratch)
        return _numeric.vdot(arr, self._theta) + beta * math.sqrt(q)

    def inv_norm(self, x) -> float:
        """||x||_{V^{-1}} = sqrt(x^T V^{-1} x), computed via a solve."""
        arr = self._as_action(x, DomainError)
        self._ensure_factor()
        return math.sqrt(_numeric.inv_quad(self._chol, arr, self._scratch))

    def choose_ucb(self, actions: np.ndarray, beta: float) -> int:
        """Index of the UCB-maximizing row of ``actions``; ties go to the lowest.

        Shares its scan with the jitted episode runners, so class-driven and
        kernel-driven trajectories agree bit for bit.
        """
        acts = np.ascontiguousarray(actions, dtype=np.float64)
        if acts.ndim != 2 or acts.shape[1] != self.cfg.dim:
            raise DomainError(
                "expected actions of shape (k, %d), got %r" % (self.cfg.dim, acts.shape)
            )
        if acts.shape[0] == 0:
            raise DomainError("empty decision set")
        self._ensure_factor()
        return int(
            _numeric.best_ucb_index(
                self._chol, self._theta, acts, acts.shape[0], beta, self._scratch
            )
        )

    @property
    def count(self) -> int:
        return self._count

    @property
    def window(self) -> list[tuple[np.ndarray, float]]:
        """Retained (x, y) pairs, oldest first."""
        w = self.cfg.window
        out = []
        for k in range(self._count):
            idx = (self._head + k) % w
            out.append((self._buf_x[idx].copy(), float(self._buf_y[idx])))
        return out

    @property
    def gram(self) -> np.ndarray:
        return self._gram.copy()

    @property
    def moment(self) -> np.ndarray:
        return self._moment.copy()
