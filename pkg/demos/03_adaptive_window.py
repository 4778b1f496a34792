"""The block-scheduled meta-policy that learns its own window length.

When the drift budget is unknown, a fixed window is a guess.  The
adaptive policy splits the horizon into blocks, keeps a geometric grid of
candidate windows, and runs an exponential-weights sampler over the grid:
each block plays one candidate with a fresh estimator and the block's
total reward updates that candidate's weight.  The demo prints the derived
schedule, then compares the meta-policy against an untuned window on an
environment whose drift grows with the horizon.
"""
from driftband import EnvSpec, PolicySpec, meta_schedule, sweep

schedule = meta_schedule(dim=2, horizon=20000, noise_scale=0.1)
print("derived schedule for T=20000, d=2:")
print(f"  block length        {schedule.block_len}")
print(f"  candidate windows   {schedule.windows}")
print(f"  exploration rate    {schedule.explore_rate:.4f}")
print(f"  blocks              {schedule.n_blocks}")
print(f"  block reward cap    {schedule.reward_scale:.1f}")
print()

horizons = [5000, 10000, 20000, 40000]
envs = [EnvSpec(kind="sinusoidal", horizon=t, budget=float(t) ** (1.0 / 3.0))
        for t in horizons]
policies = [
    PolicySpec(kind="adaptive_window"),
    PolicySpec(kind="swucb", window_mode="unknown_budget"),
]
print("running", len(horizons), "horizons x 2 policies x 10 seeds ...")
result = sweep(envs, policies, n_seeds=10, master_seed=0)

print()
print(f"{'T':>7} {'adaptive_window':>16} {'swucb_unknown':>14}")
ad = result.means("adaptive_window")
un = result.means("swucb_unknown")
for t, a, b in zip(horizons, ad, un):
    print(f"{t:>7} {a:>16.1f} {b:>14.1f}")
print()
print("the untuned window is far too long once the drift budget grows with")
print("the horizon; the meta-policy finds shorter windows and stays ahead")
