"""Core types and exact dynamics for block-discretized graphon games.

The agent population is split into ``B`` blocks with nonnegative weights
``nu_b``.  Pairwise interaction strengths are block-constant and may vary
with the step ``h``; block ``b`` observes the aggregate

    z_h[b] = sum_b' W_h[b, b'] * nu_b' * mu_h[b']

of the blocks' state distributions, which feeds costs and transitions.
Everything in this module is exact: flow induction, policy evaluation,
best responses and returns are finite sums over the model tables.  The
one stochastic operation is :func:`sample_trajectory`, which draws a
single episode from a caller-supplied random generator.

Steps are indexed ``h = 0 .. H-1``.  Costs must lie in ``[0, 1]``, which
bounds every value table by ``H - h`` from above.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

SIMPLEX_ATOL = 1e-12
FLOW_ATOL = 1e-10

# Model rules receive (block, step, aggregate-slice) where the aggregate
# slice has shape (B, S): one aggregate vector per block at that step.
# Cost rules return an (S, A) table in [0, 1]; transition rules return an
# (S, A, S) stochastic tensor.
CostRule = Callable[[int, int, np.ndarray], np.ndarray]
TransitionRule = Callable[[int, int, np.ndarray], np.ndarray]


def _frozen(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


def _check_simplex_rows(rows: np.ndarray, atol: float, what: str) -> None:
    if not np.all(np.isfinite(rows)):
        raise ValueError(f"{what} contains non-finite entries")
    if rows.min() < -atol:
        raise ValueError(f"{what} has negative entries")
    dev = np.max(np.abs(rows.sum(axis=-1) - 1.0))
    if dev > atol:
        raise ValueError(f"{what} rows must sum to 1 (max deviation {dev:.3e})")


def _xlogx(p: np.ndarray) -> np.ndarray:
    """Entrywise p*log(p) with the 0*log(0) = 0 convention."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = p * np.log(p)
    return np.where(p > 0.0, out, 0.0)


def sample_categorical(rng: np.random.Generator, probs: np.ndarray) -> int:
    """Draw one index from a probability vector using a single uniform."""
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return min(idx, len(probs) - 1)


@dataclass(frozen=True)
class PopulationGrid:
    """Finite block discretization of the agent index set.

    ``weights[b]`` is the mass of block ``b``; total mass defaults to 1
    but any positive total is accepted.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if w.min() < 0.0:
            raise ValueError("block weights must be nonnegative")
        if w.sum() <= 0.0:
            raise ValueError("total block mass must be positive")
        object.__setattr__(self, "weights", w)

    @property
    def block_count(self) -> int:
        return self.weights.size

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def uniform(cls, block_count: int, total: float = 1.0) -> "PopulationGrid":
        return cls(np.full(block_count, total / block_count))


@dataclass(frozen=True)
class GraphonSpec:
    """Block-constant interaction weights, optionally varying per step.

    ``matrices`` is either a single symmetric (B, B) matrix used at every
    step, or an (H, B, B) stack with one matrix per step.  Entries must
    lie in ``[0, w_max]``.
    """

    matrices: np.ndarray
    w_max: float = 1.0

    def __post_init__(self):
        m = _frozen(self.matrices)
        if m.ndim not in (2, 3):
            raise ValueError("graphon matrices must be (B,B) or (H,B,B)")
        if m.shape[-1] != m.shape[-2]:
            raise ValueError("graphon matrices must be square")
        if self.w_max <= 0 or not np.isfinite(self.w_max):
            raise ValueError("w_max must be finite and positive")
        if np.max(np.abs(m - np.swapaxes(m, -1, -2))) > 0.0:
            raise ValueError("graphon matrices must be symmetric")
        if m.min() < 0.0 or m.max() > self.w_max:
            raise ValueError(f"graphon entries must lie in [0, {self.w_max}]")
        object.__setattr__(self, "matrices", m)

    @property
    def block_count(self) -> int:
        return self.matrices.shape[-1]

    @property
    def is_static(self) -> bool:
        return self.matrices.ndim == 2

    def at(self, h: int) -> np.ndarray:
        return self.matrices if self.is_static else self.matrices[h]

    @classmethod
    def block_constant(
        cls, block_count: int, within: float, between: float, w_max: float = 1.0
    ) -> "GraphonSpec":
        m = np.full((block_count, block_count), between)
        np.fill_diagonal(m, within)
        return cls(m, w_max=w_max)


@dataclass(frozen=True)
class ModelSpec:
    """Complete description of one block-discretized game.

    ``cost`` and ``transition`` are callables ``(b, h, agg) -> table``
    where ``agg`` is the (B, S) aggregate slice at step ``h``.  Cost
    tables are (S, A) with entries in [0, 1]; transition tables are
    (S, A, S) with stochastic rows.  Both are re-validated on every
    evaluation so a broken environment fails loudly.
    """

    horizon: int
    n_states: int
    n_actions: int
    grid: PopulationGrid
    graphon: GraphonSpec
    mu1: np.ndarray
    cost: CostRule
    transition: TransitionRule

    def __post_init__(self):
        if self.horizon < 1 or self.n_states < 1 or self.n_actions < 1:
            raise ValueError("horizon, n_states and n_actions must be positive")
        if self.graphon.block_count != self.grid.block_count:
            raise ValueError("graphon block count does not match the grid")
        if not self.graphon.is_static and self.graphon.matrices.shape[0] != self.horizon:
            raise ValueError("per-step graphon must provide one matrix per step")
        mu1 = _frozen(self.mu1)
        if mu1.shape != (self.grid.block_count, self.n_states):
            raise ValueError("mu1 must have shape (blocks, n_states)")
        _check_simplex_rows(mu1, SIMPLEX_ATOL, "initial distribution")
        object.__setattr__(self, "mu1", mu1)

    @property
    def block_count(self) -> int:
        return self.grid.block_count

    def cost_table(self, b: int, h: int, agg: np.ndarray) -> np.ndarray:
        c = np.asarray(self.cost(b, h, agg), dtype=float)
        if c.shape != (self.n_states, self.n_actions):
            raise ValueError(f"cost table has shape {c.shape}, expected (S, A)")
        if not np.all(np.isfinite(c)):
            raise ValueError("cost table contains non-finite entries")
        if c.min() < -SIMPLEX_ATOL or c.max() > 1.0 + SIMPLEX_ATOL:
            raise ValueError("costs must lie in [0, 1]")
        return c

    def transition_table(self, b: int, h: int, agg: np.ndarray) -> np.ndarray:
        p = np.asarray(self.transition(b, h, agg), dtype=float)
        if p.shape != (self.n_states, self.n_actions, self.n_states):
            raise ValueError(f"transition table has shape {p.shape}, expected (S, A, S)")
        _check_simplex_rows(p, SIMPLEX_ATOL, "transition")
        return p


@dataclass(frozen=True)
class PolicyProfile:
    """Per-block, per-step, per-state action distributions, shape (B,H,S,A)."""

    table: np.ndarray

    def __post_init__(self):
        t = _frozen(self.table)
        if t.ndim != 4:
            raise ValueError("policy table must have shape (B, H, S, A)")
        _check_simplex_rows(t, SIMPLEX_ATOL, "policy")
        object.__setattr__(self, "table", t)

    @property
    def block_count(self) -> int:
        return self.table.shape[0]

    @property
    def horizon(self) -> int:
        return self.table.shape[1]

    @classmethod
    def uniform(cls, model: ModelSpec) -> "PolicyProfile":
        shape = (model.block_count, model.horizon, model.n_states, model.n_actions)
        return cls(np.full(shape, 1.0 / model.n_actions))


@dataclass(frozen=True)
class FlowProfile:
    """State-distribution flow mu[b, h] in the simplex, shape (B, H, S)."""

    mu: np.ndarray

    def __post_init__(self):
        m = _frozen(self.mu)
        if m.ndim != 3:
            raise ValueError("flow table must have shape (B, H, S)")
        _check_simplex_rows(m, FLOW_ATOL, "flow")
        object.__setattr__(self, "mu", m)


@dataclass(frozen=True)
class AggregateProfile:
    """Graphon-weighted aggregates z[b, h] (nonnegative), shape (B, H, S)."""

    z: np.ndarray

    def __post_init__(self):
        z = _frozen(self.z)
        if z.ndim != 3:
            raise ValueError("aggregate table must have shape (B, H, S)")
        if not np.all(np.isfinite(z)):
            raise ValueError("aggregates contain non-finite entries")
        if z.min() < -FLOW_ATOL:
            raise ValueError("aggregates must be nonnegative")
        object.__setattr__(self, "z", z)


@dataclass(frozen=True)
class ValueTables:
    """Q and V tables for one policy (or best response) at weight lam."""

    q: np.ndarray
    v: np.ndarray
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("regularization weight must be nonnegative")
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "v", _frozen(self.v))


class TrajectoryStep(NamedTuple):
    step: int
    state: int
    action: int
    cost: float
    next_state: int


def _check_policy_dims(model: ModelSpec, policy: PolicyProfile) -> None:
    expected = (model.block_count, model.horizon, model.n_states, model.n_actions)
    if policy.table.shape != expected:
        raise ValueError(
            f"policy shape {policy.table.shape} does not match model {expected}"
        )


def compute_aggregates(
    flow: FlowProfile, graphon: GraphonSpec, grid: PopulationGrid
) -> AggregateProfile:
    """Weight each block's flow by the graphon: z[b,h] = sum_b' W_h[b,b'] nu_b' mu[b',h]."""
    blocks, horizon, _ = flow.mu.shape
    if graphon.block_count != blocks or grid.block_count != blocks:
        raise ValueError("flow, graphon and grid disagree on the block count")
    z = np.empty_like(flow.mu)
    for h in range(horizon):
        weighted = grid.weights[:, None] * flow.mu[:, h]
        z[:, h] = graphon.at(h) @ weighted
    return AggregateProfile(z)


def induce_flow(
    model: ModelSpec, policy: PolicyProfile
) -> tuple[FlowProfile, AggregateProfile]:
    """Forward recursion for the mean-field flow and its aggregates.

    The aggregate at step ``h`` depends only on the flow at step ``h``,
    so a single forward pass suffices; no fixed point is involved.
    """
    _check_policy_dims(model, policy)
    B, H, S = model.block_count, model.horizon, model.n_states
    mu = np.empty((B, H, S))
    z = np.empty((B, H, S))
    mu[:, 0] = model.mu1
    nu = model.grid.weights
    for h in range(H):
        z[:, h] = model.graphon.at(h) @ (nu[:, None] * mu[:, h])
        if h + 1 < H:
            for b in range(B):
                p = model.transition_table(b, h, z[:, h])
                joint = mu[b, h][:, None] * policy.table[b, h]
                mu[b, h + 1] = np.einsum("sa,sat->t", joint, p)
    return FlowProfile(mu), AggregateProfile(z)


def regularized_value_iteration(
    model: ModelSpec,
    policy: PolicyProfile,
    aggregates: AggregateProfile,
    lam: float,
) -> ValueTables:
    """Evaluate a policy against fixed aggregates, entropy-regularized.

    Backward recursion with V[H] = 0:

        Q[h](s,a) = c_h(s,a,z_h) + sum_s' P_h(s'|s,a,z_h) V[h+1](s')
        V[h](s)   = sum_a pi(a|s) (Q[h](s,a) + lam * ln pi(a|s))
    """
    if lam < 0:
        raise ValueError("regularization weight must be nonnegative")
    _check_policy_dims(model, policy)
    B, H, S, A = policy.table.shape
    q = np.empty((B, H, S, A))
    v = np.empty((B, H, S))
    for b in range(B):
        v_next = np.zeros(S)
        for h in reversed(range(H)):
            agg = aggregates.z[:, h]
            c = model.cost_table(b, h, agg)
            p = model.transition_table(b, h, agg)
            q[b, h] = c + p @ v_next
            pi = policy.table[b, h]
            v[b, h] = (pi * q[b, h]).sum(axis=-1) + lam * _xlogx(pi).sum(axis=-1)
            v_next = v[b, h]
    return ValueTables(q=q, v=v, lam=lam)


def best_response_dp(
    model: ModelSpec, aggregates: AggregateProfile, lam: float
) -> tuple[PolicyProfile, ValueTables]:
    """Optimal (soft-optimal for lam > 0) response to fixed aggregates.

    With lam = 0 the policy is greedy with deterministic ties broken
    toward the lowest action index.  With lam > 0 the value is the soft
    minimum -lam*ln sum_a exp(-Q(a)/lam), computed with a max shift, and
    the policy is the corresponding Gibbs distribution.
    """
    if lam < 0:
        raise ValueError("regularization weight must be nonnegative")
    B, H, S, A = model.block_count, model.horizon, model.n_states, model.n_actions
    q = np.empty((B, H, S, A))
    v = np.empty((B, H, S))
    pol = np.zeros((B, H, S, A))
    for b in range(B):
        v_next = np.zeros(S)
        for h in reversed(range(H)):
            agg = aggregates.z[:, h]
            c = model.cost_table(b, h, agg)
            p = model.transition_table(b, h, agg)
            q[b, h] = c + p @ v_next
            if lam == 0.0:
                best = q[b, h].argmin(axis=-1)
                v[b, h] = np.take_along_axis(q[b, h], best[:, None], axis=-1)[:, 0]
                pol[b, h, np.arange(S), best] = 1.0
            else:
                shift = q[b, h].min(axis=-1, keepdims=True)
                w = np.exp(-(q[b, h] - shift) / lam)
                total = w.sum(axis=-1, keepdims=True)
                pol[b, h] = w / total
                v[b, h] = shift[:, 0] - lam * np.log(total[:, 0])
            v_next = v[b, h]
    return PolicyProfile(pol), ValueTables(q=q, v=v, lam=lam)


def policy_return(
    model: ModelSpec, policy: PolicyProfile, flow: FlowProfile, lam: float
) -> np.ndarray:
    """Per-block expected regularized return of ``policy`` against ``flow``.

    The flow fixes the aggregates; the evaluated policy may differ from
    the one that induced the flow.
    """
    aggregates = compute_aggregates(flow, model.graphon, model.grid)
    values = regularized_value_iteration(model, policy, aggregates, lam)
    return (model.mu1 * values.v[:, 0]).sum(axis=-1)


def sample_trajectory(
    model: ModelSpec,
    block: int,
    policy: PolicyProfile,
    aggregates: AggregateProfile,
    rng: np.random.Generator,
) -> list[TrajectoryStep]:
    """Draw one length-H episode for a representative agent of ``block``."""
    _check_policy_dims(model, policy)
    steps: list[TrajectoryStep] = []
    state = sample_categorical(rng, model.mu1[block])
    for h in range(model.horizon):
        agg = aggregates.z[:, h]
        action = sample_categorical(rng, policy.table[block, h, state])
        cost = float(model.cost_table(block, h, agg)[state, action])
        probs = model.transition_table(block, h, agg)[state, action]
        nxt = sample_categorical(rng, probs)
        steps.append(TrajectoryStep(h, state, action, cost, nxt))
        state = nxt
    return steps
