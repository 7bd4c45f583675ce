"""Equilibrium-seeking loops built around the KL-prox mirror-descent step.

Four solvers share the same outer shape: keep a policy profile, refresh
the exact mean-field flow it induces, build a per-state gradient over
actions, and apply a multiplicative-weights update damped by the
regularization weight.  They differ in the gradient:

* full information: the exact regularized action values;
* tabular bandit: an importance-weighted (IX) estimate from one sampled
  episode per block, with a stochastic-approximation value table;
* linear transitions: the same IX estimate, but action values are backed
  up through a ridge-regressed transition operator;
* fictitious play (baseline): no gradient at all; best-respond to the
  running average of past best-response flows.

All solvers are deterministic functions of (model, config): the only
randomness flows through a generator seeded from ``SolverConfig.seed``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    FlowProfile,
    ModelSpec,
    PolicyProfile,
    _xlogx,
    best_response_dp,
    compute_aggregates,
    induce_flow,
    regularized_value_iteration,
    sample_trajectory,
)
from .estimators import (
    BanditValueState,
    LinearModelSpec,
    RidgeState,
    bandit_value_update,
    ix_gradient,
    linear_q_table,
    ridge_solve,
    ridge_update,
)
from .metrics import ReferenceSolution, exploitability, kl_metric

KINDS = ("constant", "power", "horizon_harmonic")


@dataclass(frozen=True)
class Rule:
    """A named scalar schedule: constant c, power c*t^-p, or (H+1)/(H+t)."""

    kind: str
    c: float = 1.0
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    def value(self, t: int, horizon: int | None = None) -> float:
        if t < 1:
            raise ValueError("schedules are indexed from t = 1")
        if self.kind == "constant":
            return self.c
        if self.kind == "power":
            return self.c * float(t) ** (-self.p)
        if horizon is None:
            raise ValueError("horizon_harmonic needs the horizon")
        return (horizon + 1) / (horizon + t)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c": self.c, "p": self.p}

    @classmethod
    def from_dict(cls, data: dict) -> "Rule":
        return cls(kind=data["kind"], c=data.get("c", 1.0), p=data.get("p", 0.0))


def constant(c: float) -> Rule:
    return Rule("constant", c=c)


def power(c: float, p: float) -> Rule:
    return Rule("power", c=c, p=p)


def horizon_harmonic() -> Rule:
    return Rule("horizon_harmonic")


@dataclass(frozen=True)
class Schedules:
    """Learning-rate, exploration and value-estimator rules for one run."""

    eta: Rule
    gamma: Rule | None = None
    beta: Rule = field(default_factory=horizon_harmonic)

    def to_dict(self) -> dict:
        out = {"eta": self.eta.to_dict(), "beta": self.beta.to_dict()}
        if self.gamma is not None:
            out["gamma"] = self.gamma.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Schedules":
        gamma = data.get("gamma")
        return cls(
            eta=Rule.from_dict(data["eta"]),
            gamma=Rule.from_dict(gamma) if gamma is not None else None,
            beta=Rule.from_dict(data["beta"]) if "beta" in data else horizon_harmonic(),
        )


def full_info_decay(lam: float) -> Schedules:
    """eta_t = 1/(lam*t): keeps eta*lam <= 1 and contracts at rate 1 - 1/t."""
    if lam <= 0:
        raise ValueError("the decaying full-information schedule needs lam > 0")
    return Schedules(eta=power(1.0 / lam, 1.0))


def bandit_decay() -> Schedules:
    """eta_t = t^-3/4 with exploration gamma_t = t^-1/4."""
    return Schedules(eta=power(1.0, 0.75), gamma=power(1.0, 0.25))


def linear_decay() -> Schedules:
    """eta_t = t^-4/5 with exploration gamma_t = t^-1/5."""
    return Schedules(eta=power(1.0, 0.8), gamma=power(1.0, 0.2))


@dataclass(frozen=True)
class RunRecord:
    """One metric sample of a run.

    ``wall_ms`` is kept at 0 so record streams and the CSVs derived from
    them are bit-reproducible; per-run wall time lives in the experiment
    manifest instead.
    """

    iteration: int
    exploitability: float
    kl_to_reference: float | None
    wall_ms: int
    seed: int


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    schedules: Schedules
    iterations: int
    seed: int = 0
    record_every: int = 1
    reference: ReferenceSolution | None = None
    episodes_per_block: int = 1

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.record_every < 0:
            raise ValueError("record_every must be nonnegative (0 disables)")
        if self.episodes_per_block < 1:
            raise ValueError("episodes_per_block must be at least 1")


def mirror_descent_step(
    pi_row: np.ndarray, g: np.ndarray, eta: float, lam: float
) -> np.ndarray:
    """KL-prox update on one action simplex.

    Returns the minimizer of  eta*<g + lam*ln pi_row, pi> + KL(pi || pi_row),
    which in closed form is pi'(a) prop pi_row(a)^(1 - eta*lam) * exp(-eta*g(a)).
    The output is strictly positive whenever the inputs are finite.
    """
    pi_row = np.asarray(pi_row, dtype=float)
    g = np.asarray(g, dtype=float)
    if eta <= 0:
        raise ValueError("eta must be positive")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if eta * lam > 1.0 + 1e-12:
        raise ValueError(f"eta*lam = {eta * lam} > 1 flips the prox exponent")
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient has non-finite entries")
    if pi_row.min() <= 0.0:
        raise ValueError("mirror descent requires a strictly positive base row")
    logits = (1.0 - eta * lam) * np.log(pi_row) - eta * g
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def _mirror_descent_table(
    pi: np.ndarray, g: np.ndarray, eta: float, lam: float
) -> np.ndarray:
    # Same update as mirror_descent_step, applied to every (b, h, s) row.
    if eta <= 0 or lam < 0 or eta * lam > 1.0 + 1e-12:
        raise ValueError("invalid (eta, lam) for the mirror-descent update")
    logits = (1.0 - eta * lam) * np.log(pi) - eta * g
    logits -= logits.max(axis=-1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=-1, keepdims=True)


def _due(t: int, total: int, every: int) -> bool:
    if every <= 0:
        return False
    return t == 1 or t == total or t % every == 0


def _record(
    records: list[RunRecord],
    model: ModelSpec,
    policy: PolicyProfile,
    t: int,
    config: SolverConfig,
) -> None:
    kl = None
    if config.reference is not None:
        kl = kl_metric(policy, config.reference, model.grid)
    records.append(
        RunRecord(
            iteration=t,
            exploitability=exploitability(model, policy),
            kl_to_reference=kl,
            wall_ms=0,
            seed=config.seed,
        )
    )


def solve_full_info(
    model: ModelSpec, config: SolverConfig
) -> tuple[PolicyProfile, list[RunRecord]]:
    """Mirror descent driven by exact regularized action values.

    Each iteration evaluates the current policy against its own induced
    flow and updates every (block, step, state) row with the Q table as
    the gradient.  Records carry the post-update policy of iteration t.
    """
    pi = PolicyProfile.uniform(model).table.copy()
    records: list[RunRecord] = []
    for t in range(1, config.iterations + 1):
        policy = PolicyProfile(pi)
        _, aggregates = induce_flow(model, policy)
        values = regularized_value_iteration(model, policy, aggregates, config.lam)
        eta = config.schedules.eta.value(t, model.horizon)
        pi = _mirror_descent_table(pi, values.q, eta, config.lam)
        if _due(t, config.iterations, config.record_every):
            _record(records, model, PolicyProfile(pi), t, config)
    return PolicyProfile(pi), records


def solve_bandit(
    model: ModelSpec, config: SolverConfig
) -> tuple[PolicyProfile, list[RunRecord]]:
    """Mirror descent from one sampled episode per block per iteration.

    The simulator still produces the exact mean-field flow of the current
    profile (the mean-field limit makes it deterministic); only the
    representative agent's trajectory and costs are sampled.  Updates
    touch exactly the visited (block, step, state) rows, sweeping the
    episode backward so each step's continuation estimate is fresh.
    """
    if config.schedules.gamma is None:
        raise ValueError("the bandit solver needs an exploration schedule")
    rng = np.random.default_rng(config.seed)
    pi = PolicyProfile.uniform(model).table.copy()
    state = BanditValueState.zeros(
        model.block_count, model.horizon, model.n_states, model.n_actions
    )
    records: list[RunRecord] = []
    for t in range(1, config.iterations + 1):
        policy = PolicyProfile(pi)
        _, aggregates = induce_flow(model, policy)
        eta = config.schedules.eta.value(t, model.horizon)
        gamma = config.schedules.gamma.value(t, model.horizon)
        if gamma <= 0:
            raise ValueError("gamma_t must stay positive under bandit feedback")
        for b in range(model.block_count):
            for _ in range(config.episodes_per_block):
                episode = sample_trajectory(model, b, policy, aggregates, rng)
                for step in reversed(episode):
                    h, s, a = step.step, step.state, step.action
                    state.register_visit(b, h, s)
                    target = step.cost + state.values[b, h + 1, step.next_state]
                    bandit_value_update(
                        state, b, h, s, target, config.lam, config.schedules.beta
                    )
                    # The gradient reuses the same sampled continuation.
                    g = ix_gradient(policy.table[b, h, s], a, target, gamma)
                    pi[b, h, s] = mirror_descent_step(
                        pi[b, h, s], g, eta, config.lam
                    )
        if _due(t, config.iterations, config.record_every):
            _record(records, model, PolicyProfile(pi), t, config)
    return PolicyProfile(pi), records


def solve_linear(
    model: ModelSpec,
    linear_spec: LinearModelSpec,
    config: SolverConfig,
    theta_override: np.ndarray | None = None,
    ridge_state: RidgeState | None = None,
) -> tuple[PolicyProfile, list[RunRecord]]:
    """Bandit-style mirror descent with a ridge-learned transition model.

    Iteration t solves the ridge regression on episodes 1..t-1, backs the
    current policy's values up through the estimated operator, applies IX
    gradients along freshly sampled episodes, and only then folds those
    episodes into the regression.  ``theta_override`` (H, S, d) pins the
    operator instead of learning it; ``ridge_state`` injects the
    regression state so callers can inspect it afterwards.
    """
    if config.schedules.gamma is None:
        raise ValueError("the linear solver needs an exploration schedule")
    if linear_spec.n_states != model.n_states or linear_spec.n_actions != model.n_actions:
        raise ValueError("linear_spec dimensions do not match the model")
    probe = np.asarray(
        linear_spec.features(0, 0, np.zeros(model.n_states)), dtype=float
    )
    if probe.shape != (linear_spec.dim,):
        raise ValueError("feature dimension mismatch")
    rng = np.random.default_rng(config.seed)
    pi = PolicyProfile.uniform(model).table.copy()
    ridge = ridge_state if ridge_state is not None else RidgeState.identity_prior(
        model.horizon, model.n_states, linear_spec.dim
    )
    if ridge.dim != linear_spec.dim:
        raise ValueError("injected ridge state has the wrong feature dimension")
    records: list[RunRecord] = []
    for t in range(1, config.iterations + 1):
        policy = PolicyProfile(pi)
        _, aggregates = induce_flow(model, policy)
        eta = config.schedules.eta.value(t, model.horizon)
        gamma = config.schedules.gamma.value(t, model.horizon)
        if gamma <= 0:
            raise ValueError("gamma_t must stay positive under bandit feedback")
        if theta_override is not None:
            theta = np.asarray(theta_override, dtype=float)
        else:
            theta = np.stack(
                [ridge_solve(ridge, h) for h in range(model.horizon)]
            )
        episodes = [
            sample_trajectory(model, b, policy, aggregates, rng)
            for b in range(model.block_count)
        ]
        for b, episode in enumerate(episodes):
            q_hat = np.empty((model.horizon, model.n_states, model.n_actions))
            v_next = np.zeros(model.n_states)
            for h in reversed(range(model.horizon)):
                q_hat[h] = linear_q_table(
                    model,
                    linear_spec,
                    theta[h],
                    v_next,
                    aggregates.z[:, h],
                    config.lam,
                    h,
                    block=b,
                )
                rows = policy.table[b, h]
                v_next = (rows * q_hat[h]).sum(axis=-1) + config.lam * _xlogx(
                    rows
                ).sum(axis=-1)
            for step in reversed(episode):
                h, s, a = step.step, step.state, step.action
                g = ix_gradient(policy.table[b, h, s], a, float(q_hat[h, s, a]), gamma)
                pi[b, h, s] = mirror_descent_step(pi[b, h, s], g, eta, config.lam)
        for b, episode in enumerate(episodes):
            for step in episode:
                phi = linear_spec.features(
                    step.state, step.action, aggregates.z[b, step.step]
                )
                ridge_update(ridge, step.step, phi, step.next_state)
        if _due(t, config.iterations, config.record_every):
            _record(records, model, PolicyProfile(pi), t, config)
    return PolicyProfile(pi), records


def _mixture_policy(
    weight_sum: np.ndarray, weighted_rows: np.ndarray, n_actions: int
) -> PolicyProfile:
    # Visitation-weighted average of past best responses; states no past
    # response ever visited fall back to uniform.
    table = np.where(
        weight_sum[..., None] > 0.0,
        weighted_rows / np.maximum(weight_sum[..., None], 1e-300),
        1.0 / n_actions,
    )
    table /= table.sum(axis=-1, keepdims=True)
    return PolicyProfile(table)


def solve_fictitious_play(
    model: ModelSpec, config: SolverConfig
) -> tuple[PolicyProfile, list[RunRecord]]:
    """Best-response averaging baseline (unregularized).

    Iteration t best-responds to the aggregates of the average flow
    mu_bar_{t-1}, induces that response's own flow, and folds it into the
    running average mu_bar_t = (1/t) sum_{k<=t} mu_k.  The reported
    policy is the visitation-weighted mixture of past best responses,
    which reproduces the average flow's behavior.
    """
    if config.lam != 0.0:
        raise ValueError("fictitious play uses unregularized best responses")
    uniform = PolicyProfile.uniform(model)
    avg_flow, _ = induce_flow(model, uniform)
    flow_sum = np.zeros_like(avg_flow.mu)
    weighted_rows = np.zeros(
        (model.block_count, model.horizon, model.n_states, model.n_actions)
    )
    records: list[RunRecord] = []
    for t in range(1, config.iterations + 1):
        aggregates = compute_aggregates(avg_flow, model.graphon, model.grid)
        response, _ = best_response_dp(model, aggregates, 0.0)
        response_flow, _ = induce_flow(model, response)
        flow_sum += response_flow.mu
        weighted_rows += response_flow.mu[..., None] * response.table
        avg_flow = FlowProfile(flow_sum / t)
        if _due(t, config.iterations, config.record_every):
            mixture = _mixture_policy(flow_sum, weighted_rows, model.n_actions)
            _record(records, model, mixture, t, config)
    mixture = _mixture_policy(flow_sum, weighted_rows, model.n_actions)
    return mixture, records
