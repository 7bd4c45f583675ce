"""Mirror descent from bandit feedback only.

One representative agent per block samples a single episode per
iteration; value estimates and importance-weighted gradients drive the
updates at the visited states.  Five seeds, median curve printed.
"""

import numpy as np

from gmfg import (
    EnvironmentParams,
    Schedules,
    SolverConfig,
    constant,
    make_environment,
    solve_bandit,
)

model = make_environment(EnvironmentParams(name="beach_bar"))
schedules = Schedules(eta=constant(0.1), gamma=constant(0.1))

curves = []
for seed in range(1, 6):
    config = SolverConfig(
        lam=0.05, schedules=schedules, iterations=2000, seed=seed, record_every=100
    )
    _, records = solve_bandit(model, config)
    curves.append([rec.exploitability for rec in records])
    iters = [rec.iteration for rec in records]

median = np.median(np.asarray(curves), axis=0)
print("iter  median exploitability over 5 seeds")
for t, value in zip(iters, median):
    print(f"{t:>4}  {value:.4f}")
