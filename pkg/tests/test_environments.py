"""Environment generator tests: budgets, normalization, determinism, I/O."""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from driftband import ConfigurationError, DomainError
from driftband.environments import (
    DriftingEnvironment,
    EnvSpec,
    NoiseModel,
    export_thetas,
    make_budgeted_random_walk,
    make_constant,
    make_lower_bound_blocks,
    make_sinusoidal,
    variation,
)


def ceil_cbrt_of_square(n: int) -> int:
    """Oracle: smallest k with k^3 >= n^2, by exact integer search."""
    target = n * n
    k = int(round(target ** (1.0 / 3.0))) - 2
    k = max(k, 1)
    while k**3 < target:
        k += 1
    return k


class TestNoiseModel:
    def test_rejects_unknown_kind_and_negative_scale(self):
        with pytest.raises(ConfigurationError):
            NoiseModel(kind="uniform")
        with pytest.raises(ConfigurationError):
            NoiseModel(scale=-1.0)


class TestConstructorValidation:
    def test_variation_above_declared_budget_rejected(self):
        thetas = np.array([[0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(ConfigurationError):
            DriftingEnvironment(
                kind="constant",
                thetas=thetas,
                decision_sets=(np.eye(2),),
                set_index=None,
                noise=NoiseModel(),
                declared_budget=0.5,
                action_bound=1.0,
                param_bound=1.0,
            )

    def test_normalization_violation_rejected(self):
        thetas = np.full((3, 2), 0.9)
        with pytest.raises(ConfigurationError):
            DriftingEnvironment(
                kind="constant",
                thetas=thetas,
                decision_sets=(np.array([[1.0, 1.0]]),),
                set_index=None,
                noise=NoiseModel(),
                declared_budget=0.0,
                action_bound=2.0,
                param_bound=2.0,
            )

    def test_set_index_bookkeeping(self):
        thetas = np.zeros((4, 2))
        two_sets = (np.eye(2), np.eye(2))
        with pytest.raises(ConfigurationError):
            DriftingEnvironment(
                "constant", thetas, two_sets, None, NoiseModel(), 0.0, 1.0, 1.0
            )
        with pytest.raises(ConfigurationError):
            DriftingEnvironment(
                "constant",
                thetas,
                two_sets,
                np.array([0, 1, 2, 0]),
                NoiseModel(),
                0.0,
                1.0,
                1.0,
            )

    def test_arrays_become_read_only(self):
        env = make_sinusoidal(100, 1.0)
        with pytest.raises(ValueError):
            env.thetas[0, 0] = 5.0
        with pytest.raises(ValueError):
            env.decision_set(1)[0, 0] = 5.0


class TestSinusoidal:
    def test_zero_phase_round(self):
        """Rounds whose phase is a multiple of 2 pi give theta = (0.5, 0.5)."""
        env = make_sinusoidal(10, 1.0)
        assert_allclose(env.theta(4), [0.5, 0.5], rtol=0, atol=1e-12)

    def test_quarter_period_value(self):
        """At t = T/10 with unit budget knob the phase is pi/2, so sin = 1."""
        env = make_sinusoidal(30000, 1.0)
        assert_allclose(env.theta(3000), [0.8, 0.2], rtol=0, atol=1e-12)

    def test_realized_variation_and_declared_budget(self):
        """The path's variation is about 3*sqrt(2)*b: the sine's total travel
        per coordinate is 3b over its 2.5 b periods and the coordinates move
        in exact opposition.  The declared budget equals the realized value."""
        env = make_sinusoidal(30000, 1.0)
        v = env.variation()
        assert abs(v - 3.0 * math.sqrt(2.0)) <= 1e-3
        assert env.declared_budget == v

    def test_shape_and_bounds(self):
        env = make_sinusoidal(500, 2.0)
        assert env.dim == 2 and env.horizon == 500
        assert_array_equal(env.decision_set(17), np.eye(2))
        assert np.linalg.norm(env.thetas, axis=1).max() <= math.sqrt(0.68) + 1e-12

    def test_deterministic_construction(self):
        a = make_sinusoidal(1000, 1.7)
        b = make_sinusoidal(1000, 1.7)
        assert_array_equal(a.thetas, b.thetas)


class TestLowerBoundBlocks:
    def test_reference_block_length(self):
        env = make_lower_bound_blocks(2, 30000, 1.0, seed=3)
        assert env.extras["block_len"] == ceil_cbrt_of_square(60000) == 1533

    def test_step_changes_bounded(self):
        """Every parameter change is at most dim/sqrt(H) in l2 norm."""
        env = make_lower_bound_blocks(2, 50, 1e6, seed=1)
        h = env.extras["block_len"]
        assert h == 1
        steps = np.linalg.norm(np.diff(env.thetas, axis=0), axis=1)
        assert steps.max() <= 2.0 / math.sqrt(h) + 1e-12

    def test_block_structure(self):
        env = make_lower_bound_blocks(3, 400, 2.0, seed=7)
        h = env.extras["block_len"]
        mag = env.extras["magnitude"]
        for b in range(env.extras["n_blocks"]):
            rows = env.thetas[b * h : (b + 1) * h]
            assert_array_equal(rows, np.repeat(rows[:1], rows.shape[0], axis=0))
            assert_allclose(np.abs(rows[0]), mag, rtol=0, atol=1e-15)
        acts = env.decision_set(1)
        assert acts.shape == (7, 3)
        direction = acts[-1]
        assert_allclose(np.linalg.norm(direction), 1.0, rtol=0, atol=1e-12)
        assert_allclose(
            direction, env.theta(1) / np.linalg.norm(env.theta(1)), rtol=0, atol=1e-12
        )

    def test_budget_and_normalization_over_seeds(self):
        for seed in range(20):
            env = make_lower_bound_blocks(2, 500, 1.0, seed=seed)
            assert env.variation() <= env.declared_budget
            for t in (1, 250, 500):
                prods = env.decision_set(t) @ env.theta(t)
                assert np.abs(prods).max() <= 1.0 + 1e-9

    def test_determinism_and_seed_sensitivity(self):
        a = make_lower_bound_blocks(2, 600, 1.0, seed=11)
        b = make_lower_bound_blocks(2, 600, 1.0, seed=11)
        c = make_lower_bound_blocks(2, 600, 1.0, seed=12)
        assert_array_equal(a.thetas, b.thetas)
        assert not np.array_equal(a.thetas, c.thetas)

    def test_degenerate_single_block_warns(self):
        with pytest.warns(UserWarning):
            env = make_lower_bound_blocks(2, 10, 0.001, seed=0)
        assert env.extras["n_blocks"] == 1
        assert variation(env) == 0.0


class TestBudgetedRandomWalk:
    def test_zero_budget_constant(self):
        env = make_budgeted_random_walk(3, 50, 0.0, seed=4)
        assert_array_equal(env.thetas, np.repeat(env.thetas[:1], 50, axis=0))
        assert env.variation() == 0.0

    def test_variation_spends_budget_exactly(self):
        env = make_budgeted_random_walk(3, 2000, 3.0, seed=8)
        assert abs(env.variation() - 3.0) <= 1e-9
        assert env.variation() <= env.declared_budget
        assert abs(env.declared_budget - 3.0) <= 1e-9

    def test_stays_in_ball(self):
        env = make_budgeted_random_walk(4, 1500, 5.0, seed=2)
        assert np.linalg.norm(env.thetas, axis=1).max() <= env.param_bound

    def test_validity_over_seeds(self):
        for seed in range(20):
            env = make_budgeted_random_walk(2, 300, 1.5, seed=seed)
            assert env.variation() <= env.declared_budget
            assert np.abs(env.thetas @ env.decision_set(1).T).max() <= 1.0 + 1e-9

    def test_oversized_step_is_domain_error(self):
        with pytest.raises(DomainError):
            make_budgeted_random_walk(2, 3, 5.0, seed=0)

    def test_determinism(self):
        a = make_budgeted_random_walk(2, 400, 1.0, seed=6)
        b = make_budgeted_random_walk(2, 400, 1.0, seed=6)
        assert_array_equal(a.thetas, b.thetas)


class TestRewardAndBestAction:
    def test_zero_noise_reward_is_exact(self):
        env = make_sinusoidal(100, 1.0, noise_scale=0.0)
        rng = np.random.default_rng(0)
        x = np.array([1.0, 0.0])
        assert env.reward(10, x, rng) == env.mean_reward(10, x)

    def test_noisy_reward_sample_mean(self):
        """Law of large numbers: the sample mean sits within 3 standard errors."""
        env = make_sinusoidal(100, 1.0, noise_scale=0.1)
        rng = np.random.default_rng(42)
        x = np.array([0.0, 1.0])
        draws = np.array([env.reward(7, x, rng) for _ in range(100000)])
        assert abs(draws.mean() - env.mean_reward(7, x)) <= 3 * 0.1 / math.sqrt(1e5)

    def test_zero_action_has_zero_mean(self):
        acts = np.array([[0.0, 0.0], [1.0, 0.0]])
        env = make_constant(np.array([0.5, 0.5]), 10, decision_set=acts)
        assert env.mean_reward(3, np.zeros(2)) == 0.0

    def test_round_out_of_range_is_domain_error(self):
        env = make_sinusoidal(50, 1.0)
        rng = np.random.default_rng(1)
        for bad_t in (0, 51):
            with pytest.raises(DomainError):
                env.reward(bad_t, np.array([1.0, 0.0]), rng)

    def test_best_action_simple_and_tie(self):
        env = make_sinusoidal(30000, 1.0)
        assert_array_equal(env.best_action(3000), [1.0, 0.0])  # theta = (0.8, 0.2)
        tie = make_constant(np.array([0.5, 0.5]), 5)
        assert tie.best_index(1) == 0

    def test_best_action_matches_brute_force(self):
        rng = np.random.default_rng(14)
        for _ in range(25):
            d = int(rng.integers(1, 5))
            acts = rng.normal(size=(int(rng.integers(1, 8)), d))
            acts *= 0.5 / np.maximum(np.linalg.norm(acts, axis=1, keepdims=True), 0.5)
            theta = rng.normal(size=d)
            theta *= 0.5 / max(np.linalg.norm(theta), 0.5)
            env = DriftingEnvironment(
                "constant",
                np.repeat(theta[None, :], 3, axis=0),
                (acts,),
                None,
                NoiseModel(),
                0.0,
                2.0,
                2.0,
            )
            assert env.best_index(2) == int(np.argmax(acts @ theta))


class TestVariation:
    def test_constant_and_two_point(self):
        assert variation(make_constant(np.array([0.3, 0.1]), 20)) == 0.0
        thetas = np.array([[0.0, 0.0], [1.0, 0.0]])
        env = DriftingEnvironment(
            "constant", thetas, (np.eye(2),), None, NoiseModel(), 1.0, 1.0, 1.0
        )
        assert variation(env) == 1.0


class TestEnvSpec:
    def test_roundtrip_all_kinds(self):
        specs = [
            EnvSpec(kind="constant", horizon=10, theta=(0.2, 0.3)),
            EnvSpec(kind="sinusoidal", horizon=100, budget=1.0),
            EnvSpec(kind="lower_bound_blocks", horizon=200, dim=2, budget=1.5, seed=3),
            EnvSpec(kind="budgeted_random_walk", horizon=150, dim=3, budget=0.5, seed=4),
        ]
        for spec in specs:
            again = EnvSpec.from_dict(spec.to_dict())
            assert again.kind == spec.kind
            a, b = spec.build(), again.build()
            assert_array_equal(a.thetas, b.thetas)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError):
            EnvSpec.from_dict({"kind": "sinusoidal", "horizon": 10, "budget": 1.0, "bogus": 1})

    def test_missing_budget_rejected(self):
        with pytest.raises(ConfigurationError):
            EnvSpec(kind="sinusoidal", horizon=10)


class TestExport:
    def test_theta_csv_roundtrip(self, tmp_path):
        env = make_sinusoidal(25, 1.0)
        path = tmp_path / "thetas.csv"
        export_thetas(env, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "t,theta_1,theta_2"
        assert len(lines) == 26
        t, a, b = lines[13].split(",")
        assert int(t) == 13
        assert float(a) == env.thetas[12, 0] and float(b) == env.thetas[12, 1]
