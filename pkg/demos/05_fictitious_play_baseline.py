"""Fictitious play against mirror descent on the congestion game.

The baseline best-responds to the running average of past response
flows; exploitability of its mixture policy decays like 1/t.
"""

from gmfg import (
    EnvironmentParams,
    Schedules,
    SolverConfig,
    constant,
    make_environment,
    solve_fictitious_play,
    solve_full_info,
)

model = make_environment(EnvironmentParams(name="congestion"))

fp_config = SolverConfig(
    lam=0.0, schedules=Schedules(eta=constant(1.0)), iterations=200, record_every=20
)
_, fp_records = solve_fictitious_play(model, fp_config)

md_config = SolverConfig(
    lam=0.05, schedules=Schedules(eta=constant(0.1)), iterations=200, record_every=20
)
_, md_records = solve_full_info(model, md_config)

print("iter  fictitious play  mirror descent")
for fp, md in zip(fp_records, md_records):
    print(f"{fp.iteration:>4}  {fp.exploitability:15.5f}  {md.exploitability:14.5f}")
