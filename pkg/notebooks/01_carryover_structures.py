# %% [markdown]
# # Carryover structures
#
# Every simulated unit carries its full table of potential outcomes, so we
# can look at carryover directly before any design hides part of it.

# %%
import numpy as np

from seqdesign import (
    CarryoverKind,
    DgpConfig,
    carryover,
    check_assumptions,
    constant_symmetric,
    gen_outcomes,
    oracle_estimands,
    preset_fig3,
    run_sweep,
)

rng = np.random.default_rng(2025)

# %% [markdown]
# Four structures with magnitude 1 (the constant case uses C = 1). The
# table prints the mean carryover for each sequence of treatments.

# %%
configs = {
    "none": DgpConfig(n=5000),
    "constant symmetric": constant_symmetric(1.0, n=5000),
    "additive interaction": DgpConfig(carryover=CarryoverKind.ADDITIVE_INTERACTION, gamma=1.0, n=5000),
    "compounding": DgpConfig(carryover=CarryoverKind.COMPOUNDING, gamma=1.0, n=5000),
}
print(f"{'structure':22s} {'C(0,1)':>8s} {'C(1,0)':>8s} {'C(1,1)':>8s}  simple  controlled")
for name, cfg in configs.items():
    po = gen_outcomes(cfg, rng)
    rep = check_assumptions(po)
    c = [carryover(po, z1, z2).mean() for z1, z2 in [(0, 1), (1, 0), (1, 1)]]
    print(f"{name:22s} {c[0]:8.2f} {c[1]:8.2f} {c[2]:8.2f}  {rep.simple_carryover_holds!s:6s}  {rep.controlled_carryover_holds}")

# %% [markdown]
# Interaction and compounding only act on the repeat-treatment sequence
# (1, 1). A counterbalanced design never observes that sequence, so these
# structures are invisible to it, while sequential randomization sees all
# four sequences.

# %%
po = gen_outcomes(configs["compounding"], rng)
print(oracle_estimands(po))

# %% [markdown]
# ## Period-2 regressions under sequential randomization
#
# A period-2 regression that ignores the first treatment averages the
# effect over both first-period arms: 5 + gamma/2 for the interaction and
# (5 + 5^(1+gamma))/2 for compounding. A coarse grid keeps this quick; the
# full grid is `preset_fig3()` as is.

# %%
for kind in (CarryoverKind.ADDITIVE_INTERACTION, CarryoverKind.COMPOUNDING):
    cfg = preset_fig3(kind).replace(gamma_grid=(-1.0, 1.0, 5), reps=50)
    res = run_sweep(cfg)
    print(kind.value)
    for row in res.rows:
        print(f"  gamma={row.gamma:5.2f} {row.estimator.value:16s} mean={row.mean:9.3f} mc_se={row.mc_se:.3f}")
