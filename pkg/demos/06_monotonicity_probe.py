"""Probe games for the weak-monotonicity inner product.

Congestion-style costs make the probe nonnegative on every occupancy
pair; negating the cost flips every sign.
"""

import numpy as np

from gmfg import EnvironmentParams, make_environment, monotonicity_probe

rng = np.random.default_rng(0)

for name in ("congestion", "anti_congestion", "beach_bar"):
    model = make_environment(EnvironmentParams(name=name))
    shape = (model.block_count, model.horizon)
    size = model.n_states * model.n_actions
    values = []
    for _ in range(500):
        rho = rng.dirichlet(np.ones(size), size=shape).reshape(
            *shape, model.n_states, model.n_actions
        )
        rho_tilde = rng.dirichlet(np.ones(size), size=shape).reshape(
            *shape, model.n_states, model.n_actions
        )
        values.append(monotonicity_probe(model, rho, rho_tilde))
    values = np.asarray(values)
    print(
        f"{name:>18}: min={values.min():+.4f}  mean={values.mean():+.4f}  "
        f"nonnegative={100 * (values >= 0).mean():.1f}%"
    )
