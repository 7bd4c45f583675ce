"""Sample-based estimation: bandit value tracking, IX gradients, ridge models.

Three pieces feed the bandit-feedback solvers.  A stochastic-approximation
value table tracks continuation values along visited states with a
per-visit step size and hard clamping to the feasible value range.  The
importance-weighted (IX) gradient spreads an observed payoff over the
action simplex with an additive smoothing term gamma in the denominator,
trading a small bias for bounded variance.  For linearly structured
transitions, a ridge regression with identity prior accumulates
(feature, next-state) pairs per step and recovers the transition operator
on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import ModelSpec


@dataclass
class VisitCounter:
    """Visit counts per (block, step, state); nondecreasing over a run."""

    counts: np.ndarray

    @classmethod
    def zeros(cls, block_count: int, horizon: int, n_states: int) -> "VisitCounter":
        return cls(np.zeros((block_count, horizon, n_states), dtype=np.int64))

    def increment(self, b: int, h: int, s: int) -> int:
        self.counts[b, h, s] += 1
        return int(self.counts[b, h, s])


@dataclass
class BanditValueState:
    """Running value estimates for the bandit solver.

    ``values`` has one extra step row, kept at zero, so the continuation
    value at the last step reads naturally as ``values[b, H, s'] = 0``.
    Estimates start at zero and stay inside
    ``[-lam*(H-h)*ln A, H-h]`` after every update.
    """

    values: np.ndarray
    visits: VisitCounter
    n_actions: int

    @classmethod
    def zeros(
        cls, block_count: int, horizon: int, n_states: int, n_actions: int
    ) -> "BanditValueState":
        return cls(
            values=np.zeros((block_count, horizon + 1, n_states)),
            visits=VisitCounter.zeros(block_count, horizon, n_states),
            n_actions=n_actions,
        )

    @property
    def horizon(self) -> int:
        return self.values.shape[1] - 1

    def register_visit(self, b: int, h: int, s: int) -> int:
        return self.visits.increment(b, h, s)


def bandit_value_update(
    state: BanditValueState,
    b: int,
    h: int,
    s: int,
    target: float,
    lam: float,
    beta_rule,
) -> float:
    """Blend ``target`` into the value estimate at (b, h, s) and clamp.

    The visit must be registered first; the step size beta_k is read off
    the rule at the current visit count k.  The clamp keeps the estimate
    inside the range any true regularized value can occupy.
    """
    k = int(state.visits.counts[b, h, s])
    if k < 1:
        raise ValueError("register the visit before updating the value estimate")
    horizon = state.horizon
    beta = float(beta_rule.value(k, horizon=horizon))
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta_{k} = {beta} is outside (0, 1]")
    new = (1.0 - beta) * state.values[b, h, s] + beta * target
    lo = -lam * (horizon - h) * np.log(state.n_actions)
    hi = float(horizon - h)
    new = min(max(new, lo), hi)
    state.values[b, h, s] = new
    return float(new)


def ix_gradient(
    pi_row: np.ndarray, taken_action: int, payoff: float, gamma: float
) -> np.ndarray:
    """Importance-weighted payoff estimate over all actions.

    g(a) = 1{a = taken} * payoff / (pi(a) + gamma); every other entry is
    zero.  In expectation over the taken action this equals
    pi(a) * payoff_bar(a) / (pi(a) + gamma) coordinatewise.
    """
    if not np.isfinite(payoff):
        raise ValueError("payoff must be finite")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    prob = float(pi_row[taken_action])
    if gamma == 0.0 and prob == 0.0:
        raise ValueError("gamma = 0 with a zero-probability action is unbounded")
    g = np.zeros_like(pi_row, dtype=float)
    g[taken_action] = payoff / (prob + gamma)
    return g


@dataclass
class LinearModelSpec:
    """Feature map and (optionally) the true operator of a linear game.

    ``features(s, a, z)`` returns a d-vector with L2 norm at most 1; the
    transition satisfies P_h(.|s,a,z) = theta_h @ features(s,a,z).  When
    the model is synthetic, ``theta_star`` carries the true per-step
    operators, shape (H, S, d).  ``table_fn`` may supply a vectorized
    feature table (S, A, d) for a given aggregate; otherwise the scalar
    map is looped.
    """

    dim: int
    n_states: int
    n_actions: int
    features: Callable[[int, int, np.ndarray], np.ndarray]
    theta_star: np.ndarray | None = None
    table_fn: Callable[[np.ndarray], np.ndarray] | None = None

    def feature_table(self, z: np.ndarray) -> np.ndarray:
        if self.table_fn is not None:
            table = np.asarray(self.table_fn(z), dtype=float)
        else:
            table = np.empty((self.n_states, self.n_actions, self.dim))
            for s in range(self.n_states):
                for a in range(self.n_actions):
                    table[s, a] = self.features(s, a, z)
        if table.shape != (self.n_states, self.n_actions, self.dim):
            raise ValueError("feature table has the wrong shape")
        return table


@dataclass
class RidgeState:
    """Per-step sufficient statistics for the transition regression.

    ``gram[h]`` is I + sum_j phi_j phi_j^T (symmetric positive definite)
    and ``moments[h]`` accumulates one-hot(next_state) phi^T row-wise, so
    the ridge solution is moments[h] @ inv(gram[h]).
    """

    gram: np.ndarray
    moments: np.ndarray
    counts: np.ndarray

    @classmethod
    def identity_prior(cls, horizon: int, n_states: int, dim: int) -> "RidgeState":
        gram = np.tile(np.eye(dim), (horizon, 1, 1))
        return cls(
            gram=gram,
            moments=np.zeros((horizon, n_states, dim)),
            counts=np.zeros(horizon, dtype=np.int64),
        )

    @property
    def dim(self) -> int:
        return self.gram.shape[-1]


def ridge_update(state: RidgeState, h: int, phi: np.ndarray, next_state: int) -> None:
    """Fold one observed (feature, next-state) pair into step h."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (state.dim,):
        raise ValueError(f"feature has shape {phi.shape}, expected ({state.dim},)")
    norm = float(np.linalg.norm(phi))
    if norm > 1.0 + 1e-9:
        raise ValueError(f"feature norm {norm} exceeds 1")
    state.gram[h] += np.outer(phi, phi)
    state.moments[h, next_state] += phi
    state.counts[h] += 1


def ridge_solve(state: RidgeState, h: int) -> np.ndarray:
    """Transition-operator estimate theta_h (S, d), via a linear solve."""
    return np.linalg.solve(state.gram[h], state.moments[h].T).T


def _q_clip_range(horizon: int, h: int, lam: float, n_actions: int) -> tuple[float, float]:
    # Q at step h is one cost plus a continuation value from step h+1.
    lo = -lam * (horizon - h - 1) * np.log(n_actions)
    return lo, float(horizon - h)


def linear_q_backup(
    model: ModelSpec,
    linear_spec: LinearModelSpec,
    theta_h: np.ndarray,
    v_next: np.ndarray,
    s: int,
    a: int,
    agg: np.ndarray,
    lam: float,
    h: int,
    block: int = 0,
) -> float:
    """One-step backup through the estimated linear transition.

    Qhat = c_h(s, a, z) + <theta_h phi(s, a, z), v_next>, clipped into the
    feasible range for a step-h action value.
    """
    v_next = np.asarray(v_next, dtype=float)
    if not np.all(np.isfinite(v_next)):
        raise ValueError("continuation values must be finite")
    phi = np.asarray(linear_spec.features(s, a, agg[block]), dtype=float)
    if phi.shape != (linear_spec.dim,):
        raise ValueError("feature dimension mismatch")
    cost = float(model.cost_table(block, h, agg)[s, a])
    backed = cost + float((theta_h @ phi) @ v_next)
    lo, hi = _q_clip_range(model.horizon, h, lam, model.n_actions)
    return min(max(backed, lo), hi)


def linear_q_table(
    model: ModelSpec,
    linear_spec: LinearModelSpec,
    theta_h: np.ndarray,
    v_next: np.ndarray,
    agg: np.ndarray,
    lam: float,
    h: int,
    block: int = 0,
) -> np.ndarray:
    """Vectorized :func:`linear_q_backup` over all (s, a), shape (S, A)."""
    feats = linear_spec.feature_table(agg[block])
    cost = model.cost_table(block, h, agg)
    backed = cost + feats @ (theta_h.T @ np.asarray(v_next, dtype=float))
    lo, hi = _q_clip_range(model.horizon, h, lam, model.n_actions)
    return np.clip(backed, lo, hi)
