"""Convergence metrics: exploitability, weighted KL to a reference, monotonicity probe."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import (
    FLOW_ATOL,
    FlowProfile,
    ModelSpec,
    PolicyProfile,
    PopulationGrid,
    best_response_dp,
    compute_aggregates,
    induce_flow,
    policy_return,
)


@dataclass(frozen=True)
class ReferenceSolution:
    """A stored equilibrium surrogate: policy, its induced flow, provenance.

    The flow must be the one the policy induces; :func:`check_consistent`
    verifies that against a model.  Provenance records how the surrogate
    was produced (solver, iterations, lam, seed).
    """

    policy: PolicyProfile
    flow: FlowProfile
    provenance: dict[str, Any] = field(default_factory=dict)

    def check_consistent(self, model: ModelSpec, atol: float = FLOW_ATOL) -> None:
        flow, _ = induce_flow(model, self.policy)
        dev = float(np.max(np.abs(flow.mu - self.flow.mu)))
        if dev > atol:
            raise ValueError(
                f"reference flow is not induced by the reference policy (dev {dev:.3e})"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "policy": self.policy.table.tolist(),
            "flow": self.flow.mu.tolist(),
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ReferenceSolution":
        return cls(
            policy=PolicyProfile(np.asarray(data["policy"], dtype=float)),
            flow=FlowProfile(np.asarray(data["flow"], dtype=float)),
            provenance=dict(data.get("provenance", {})),
        )


def exploitability(model: ModelSpec, policy: PolicyProfile) -> float:
    """Block-weighted gap between a policy's return and the best response.

    The policy's own induced flow fixes the aggregates; the gap uses
    unregularized returns and is zero exactly at equilibrium.
    """
    flow, aggregates = induce_flow(model, policy)
    returns = policy_return(model, policy, flow, 0.0)
    _, br_values = best_response_dp(model, aggregates, 0.0)
    br_returns = (model.mu1 * br_values.v[:, 0]).sum(axis=-1)
    gaps = returns - br_returns
    return float((model.grid.weights * gaps).sum())


def kl_metric(
    policy: PolicyProfile, reference: ReferenceSolution, grid: PopulationGrid
) -> float:
    """Reference-flow-weighted KL divergence from the reference policy.

        D = sum_b nu_b sum_h sum_s mu*[b,h](s) KL(pi*[b,h,s] || pi[b,h,s])

    Returns +inf when the policy puts zero mass where the reference is
    positive; interior iterates never trigger that.
    """
    pi_star = reference.policy.table
    pi = policy.table
    if pi.shape != pi_star.shape:
        raise ValueError(
            f"policy shape {pi.shape} does not match reference {pi_star.shape}"
        )
    support = pi_star > 0.0
    if np.any(support & (pi <= 0.0)):
        return float("inf")
    safe_star = np.where(support, pi_star, 1.0)
    safe = np.where(support, pi, 1.0)
    kl_rows = (safe_star * (np.log(safe_star) - np.log(safe))).sum(axis=-1)
    per_block = (reference.flow.mu * kl_rows).sum(axis=(1, 2))
    return float((grid.weights * per_block).sum())


def monotonicity_probe(
    model: ModelSpec, rho: np.ndarray, rho_tilde: np.ndarray
) -> float:
    """Numeric check of the weak-monotonicity inner product.

    For two occupancy tables over (b, h, s, a), each (b, h) slice a
    distribution, returns

        sum_h sum_b nu_b sum_{s,a} (rho - rho~)(s,a)
            * [c_h(s,a,z_h(mu)) - c_h(s,a,z_h(mu~))]

    with mu, mu~ the state marginals.  Nonnegative on weakly monotone
    games; symmetric under swapping the two arguments.
    """
    rho = np.asarray(rho, dtype=float)
    rho_tilde = np.asarray(rho_tilde, dtype=float)
    shape = (model.block_count, model.horizon, model.n_states, model.n_actions)
    if rho.shape != shape or rho_tilde.shape != shape:
        raise ValueError(f"occupancy tables must have shape {shape}")
    for name, table in (("rho", rho), ("rho_tilde", rho_tilde)):
        sums = table.sum(axis=(2, 3))
        if table.min() < -1e-12 or np.max(np.abs(sums - 1.0)) > 1e-9:
            raise ValueError(f"{name} slices must each be a distribution")
    mu = FlowProfile(rho.sum(axis=-1))
    mu_tilde = FlowProfile(rho_tilde.sum(axis=-1))
    z = compute_aggregates(mu, model.graphon, model.grid).z
    z_tilde = compute_aggregates(mu_tilde, model.graphon, model.grid).z
    nu = model.grid.weights
    total = 0.0
    for b in range(model.block_count):
        for h in range(model.horizon):
            dc = model.cost_table(b, h, z[:, h]) - model.cost_table(b, h, z_tilde[:, h])
            total += nu[b] * float(((rho[b, h] - rho_tilde[b, h]) * dc).sum())
    return total
