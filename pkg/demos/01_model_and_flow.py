"""Build a small game by hand and watch the mean-field flow evolve.

Two blocks of walkers on a 5-cell ring; the graphon couples them fully.
Each block's aggregate is the graphon-weighted mix of both flows.
"""

import numpy as np

from gmfg import (
    GraphonSpec,
    ModelSpec,
    PolicyProfile,
    PopulationGrid,
    induce_flow,
)

S, A, H = 5, 3, 4
moves = [-1, 0, 1]

tensor = np.zeros((S, A, S))
for s in range(S):
    for a, m in enumerate(moves):
        tensor[s, a, (s + m) % S] = 1.0

model = ModelSpec(
    horizon=H,
    n_states=S,
    n_actions=A,
    grid=PopulationGrid.uniform(2),
    graphon=GraphonSpec(np.array([[1.0, 0.5], [0.5, 1.0]])),
    mu1=np.array([[1.0, 0, 0, 0, 0], [0, 0, 1.0, 0, 0]]),
    cost=lambda b, h, agg: np.minimum(agg[b], 1.0)[:, None] * np.ones((S, A)),
    transition=lambda b, h, agg: tensor,
)

policy = PolicyProfile.uniform(model)
flow, aggregates = induce_flow(model, policy)

for h in range(H):
    print(f"step {h}")
    for b in range(2):
        mu = np.round(flow.mu[b, h], 3)
        z = np.round(aggregates.z[b, h], 3)
        print(f"  block {b}: mu = {mu}  aggregate = {z}")
