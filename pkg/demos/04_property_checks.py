"""Numerical audits of the inequalities the regret analysis relies on.

Four suites, each evaluating both sides of an inequality with explicit
dense linear algebra, independent of the estimator's own solve path:

  bias          drift carried into the estimate is at most the path variation
  deviation     confidence intervals cover the true means at the nominal rate
  monotonicity  truncating the Gram at a block boundary only grows inverse norms
  blockreward   per-block reward sums stay under the meta-schedule's cap

A healthy build reports zero violations on the algebraic suites and a
far-below-nominal failure rate on the probabilistic ones.
"""
import numpy as np

from driftband import (
    check_bias_bound,
    check_block_reward_bound,
    check_deviation_bound,
    check_norm_monotonicity,
)

print("bias bound, 1000 random instances:")
print(" ", check_bias_bound(1000, rng=np.random.default_rng(0)).summary_line())
print()
print("deviation bound, 10000 noise resamples at delta=0.1:")
print(" ", check_deviation_bound(10000, delta=0.1).summary_line())
print()
print("norm monotonicity, 1000 random instances:")
print(" ", check_norm_monotonicity(1000,
                                   rng=np.random.default_rng(0)).summary_line())
print()
print("block reward cap, 60 full meta-policy episodes:")
report = check_block_reward_bound(n_runs=60)
print(" ", report.summary_line())
print("  ", report.notes)
