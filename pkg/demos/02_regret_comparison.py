"""Dynamic regret of the windowed-UCB policy against a finite-arm baseline.

Reproduces the known-drift benchmark at reduced scale: a two-armed
environment whose mean rewards swap sinusoidally, a windowed-UCB policy
tuned with the declared drift budget, and an exponential-weights baseline
that ignores the reward geometry.  Prints mean final regret per horizon
and the fitted log-log growth rate.
"""
from driftband import EnvSpec, PolicySpec, loglog_slope, sweep

horizons = [4000, 8000, 16000, 32000]
envs = [EnvSpec(kind="sinusoidal", horizon=t, budget=1.0) for t in horizons]
policies = [
    PolicySpec(kind="swucb", window_mode="known_budget"),
    PolicySpec(kind="exp3s"),
]

print("running", len(horizons), "horizons x", len(policies),
      "policies x 10 seeds ...")
result = sweep(envs, policies, n_seeds=10, master_seed=0)

print()
print(f"{'T':>7} {'swucb_known':>12} {'exp3s':>12} {'ratio':>7}")
sw = result.means("swucb_known")
base = result.means("exp3s")
for t, a, b in zip(horizons, sw, base):
    print(f"{t:>7} {a:>12.1f} {b:>12.1f} {a / b:>7.3f}")

print()
for name in result.policies():
    fit = result.slope(name)
    print(f"{name}: log-log slope {fit.slope:.3f}")
print()
print("the windowed policy exploits the linear reward structure and the")
print("drift budget; the arm-indexed baseline pays for relearning each swap")
