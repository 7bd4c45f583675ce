"""Benchmark game constructors.

Five ready-made games plus a synthetic linear-transition game:

* ``beach_bar``       one population on a ring, drawn to a bar, crowd-averse;
* ``crowd_avoidance`` two populations that pay for sharing a cell;
* ``predator_prey``   three populations chasing each other cyclically;
* ``periodic_aversion`` one population on a torus with position, action
  and log-congestion cost terms;
* ``congestion`` / ``anti_congestion``  a minimal game whose cost is the
  local occupancy (respectively its negation), used for monotonicity
  checks and convergence-bound tests.

Costs are normalized into [0, 1] by construction.  The exact weights are
artifact defaults, documented next to each builder; the qualitative
structure (which masses attract, which repel) is the contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import GraphonSpec, ModelSpec, PopulationGrid
from .estimators import LinearModelSpec


@dataclass(frozen=True)
class EnvironmentParams:
    """Name plus optional size overrides and environment constants."""

    name: str
    n_states: int | None = None
    n_actions: int | None = None
    horizon: int | None = None
    blocks: int | None = None
    constants: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "horizon": self.horizon,
            "blocks": self.blocks,
            "constants": dict(self.constants),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EnvironmentParams":
        return cls(
            name=data["name"],
            n_states=data.get("n_states"),
            n_actions=data.get("n_actions"),
            horizon=data.get("horizon"),
            blocks=data.get("blocks"),
            constants=dict(data.get("constants", {})),
        )


def _ring_walk(n_states: int, moves: list[int], slip: float) -> np.ndarray:
    """Movement tensor on a ring: intended move with probability 1 - slip,
    otherwise one cell to either side of the target."""
    p = np.zeros((n_states, len(moves), n_states))
    for s in range(n_states):
        for a, m in enumerate(moves):
            target = (s + m) % n_states
            p[s, a, target] += 1.0 - slip
            p[s, a, (target - 1) % n_states] += slip / 2.0
            p[s, a, (target + 1) % n_states] += slip / 2.0
    return p


def _corridor_walk(
    n_states: int, moves: list[int], slip: float, blocked: frozenset[int]
) -> np.ndarray:
    """Movement on a line with walls; blocked cells and walls swallow the
    move (the agent stays put), slip mass that would land on a blocked
    cell stays on the target."""

    def settle(origin: int, m: int) -> int:
        cell = origin + m
        if cell < 0 or cell >= n_states or cell in blocked:
            return origin
        return cell

    p = np.zeros((n_states, len(moves), n_states))
    for s in range(n_states):
        for a, m in enumerate(moves):
            target = settle(s, m)
            p[s, a, target] += 1.0 - slip
            for side in (-1, 1):
                p[s, a, settle(target, side)] += slip / 2.0
    return p


def _static_transition(tensor: np.ndarray):
    def rule(b: int, h: int, agg: np.ndarray) -> np.ndarray:
        return tensor

    return rule


def _beach_bar(params: EnvironmentParams) -> ModelSpec:
    n_states = params.n_states or 10
    n_actions = params.n_actions or 3
    horizon = params.horizon or 5
    if n_actions != 3:
        raise ValueError("beach_bar uses the three moves left/stay/right")
    c = params.constants
    bar = int(c.get("bar_state", n_states // 2))
    slip = float(c.get("slip", 0.1))
    w_dist, w_move, w_crowd = c.get("weights", (0.8, 0.05, 0.15))
    if bar < 0 or bar >= n_states:
        raise ValueError("bar_state outside the state space")
    moves = [-1, 0, 1]
    tensor = _ring_walk(n_states, moves, slip)
    ring_dist = np.minimum(
        np.abs(np.arange(n_states) - bar),
        n_states - np.abs(np.arange(n_states) - bar),
    )
    dist_term = ring_dist / ring_dist.max()
    # Positional cost is charged at the intended move target, so the
    # immediate cost already tells the two directions apart.
    target_dist = np.empty((n_states, len(moves)))
    for a, m in enumerate(moves):
        target_dist[:, a] = dist_term[(np.arange(n_states) + m) % n_states]
    move_term = np.abs(moves) / max(np.abs(moves))

    def cost(b: int, h: int, agg: np.ndarray) -> np.ndarray:
        crowd = np.minimum(agg[b], 1.0)
        return (
            w_dist * target_dist
            + w_move * move_term[None, :]
            + w_crowd * crowd[:, None]
        )

    return ModelSpec(
        horizon=horizon,
        n_states=n_states,
        n_actions=n_actions,
        grid=PopulationGrid.uniform(1),
        graphon=GraphonSpec(np.ones((1, 1))),
        mu1=np.full((1, n_states), 1.0 / n_states),
        cost=cost,
        transition=_static_transition(tensor),
    )


def _crowd_avoidance(params: EnvironmentParams) -> ModelSpec:
    c = params.constants
    layout = c.get("layout", "corridor")
    if layout == "corridor":
        n_states = params.n_states or 7
        side = n_states
    elif layout == "grid":
        side = int(c.get("side", 7))
        n_states = side * side
    else:
        raise ValueError(f"unknown crowd_avoidance layout {layout!r}")
    n_actions = params.n_actions or 5
    horizon = params.horizon or 10
    if n_actions != 5:
        raise ValueError("crowd_avoidance uses stay/up/down/left/right")
    slip = float(c.get("slip", 0.1))
    forbidden = frozenset(int(x) for x in c.get("forbidden_cells", ()))
    if len(forbidden) >= n_states:
        raise ValueError("forbidden cells cover the whole state space")
    w_collision, w_move = c.get("weights", (0.8, 0.2))

    if layout == "corridor":
        # up/down are walls on a corridor, so they act like stay.
        moves = [0, 0, 0, -1, 1]
        tensor = _corridor_walk(n_states, moves, slip, forbidden)
        move_mag = np.array([0.0, 0.0, 0.0, 1.0, 1.0])
    else:

        def settle(origin: int, dr: int, dc: int) -> int:
            r, col = divmod(origin, side)
            nr, nc = r + dr, col + dc
            if nr < 0 or nr >= side or nc < 0 or nc >= side:
                return origin
            cell = nr * side + nc
            return origin if cell in forbidden else cell

        deltas = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]
        tensor = np.zeros((n_states, n_actions, n_states))
        for s in range(n_states):
            for a, (dr, dc) in enumerate(deltas):
                target = settle(s, dr, dc)
                tensor[s, a, target] += 1.0 - slip
                for sr, sc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    r, col = divmod(target, side)
                    nr, nc = r + sr, col + sc
                    if 0 <= nr < side and 0 <= nc < side:
                        cell = nr * side + nc
                        cell = target if cell in forbidden else cell
                    else:
                        cell = target
                    tensor[s, a, cell] += slip / 4.0
        move_mag = np.array([0.0, 1.0, 1.0, 1.0, 1.0])

    allowed = sorted(set(range(n_states)) - forbidden)
    mu1 = np.zeros((2, n_states))
    mu1[0, allowed[0]] = 1.0
    mu1[1, allowed[-1]] = 1.0
    other_mass = 0.5  # each block weighs 1/2, so co-located mass peaks there

    def cost(b: int, h: int, agg: np.ndarray) -> np.ndarray:
        collision = np.minimum(agg[b] / other_mass, 1.0)
        return w_collision * collision[:, None] + w_move * move_mag[None, :]

    return ModelSpec(
        horizon=horizon,
        n_states=n_states,
        n_actions=n_actions,
        grid=PopulationGrid.uniform(2),
        # Between-block weight 1, within 0: each block aggregates exactly
        # the other block's mass.
        graphon=GraphonSpec.block_constant(2, within=0.0, between=1.0),
        mu1=mu1,
        cost=cost,
        transition=_static_transition(tensor),
    )


def _predator_prey(params: EnvironmentParams) -> ModelSpec:
    n_states = params.n_states or 9
    n_actions = params.n_actions or 3
    horizon = params.horizon or 10
    blocks = params.blocks or 3
    if blocks != 3:
        raise ValueError("predator_prey is a three-population game")
    if n_actions != 3:
        raise ValueError("predator_prey uses the three moves left/stay/right")
    c = params.constants
    slip = float(c.get("slip", 0.1))
    w_chase = float(c.get("chase_weight", 1.35))
    w_move = float(c.get("move_weight", 0.1))
    base = float(c.get("base_cost", 0.45))
    moves = [-1, 0, 1]
    tensor = _ring_walk(n_states, moves, slip)
    move_term = np.abs(moves) / max(np.abs(moves))
    block_mass = 1.0 / 3.0
    if base - w_chase * block_mass < -1e-12 or base + w_chase * block_mass + w_move > 1 + 1e-12:
        raise ValueError("predator_prey weights leave the [0, 1] cost range")

    def cost(b: int, h: int, agg: np.ndarray) -> np.ndarray:
        # Block b hunts block b+1 and flees block b-1 (cyclically):
        # co-location with prey lowers cost, with the predator raises it.
        prey = agg[(b + 1) % 3]
        predator = agg[(b - 1) % 3]
        local = base + w_chase * (predator - prey)
        return local[:, None] + w_move * move_term[None, :]

    mu1 = np.zeros((3, n_states))
    for b in range(3):
        mu1[b, (b * n_states) // 3] = 1.0
    return ModelSpec(
        horizon=horizon,
        n_states=n_states,
        n_actions=n_actions,
        grid=PopulationGrid.uniform(3),
        # Identity graphon: each block's aggregate is its own weighted
        # flow; the cyclic cost reads the neighbors' aggregates.
        graphon=GraphonSpec.block_constant(3, within=1.0, between=0.0),
        mu1=mu1,
        cost=cost,
        transition=_static_transition(tensor),
    )


def _periodic_aversion(params: EnvironmentParams) -> ModelSpec:
    n_states = params.n_states or int(params.constants.get("resolution", 21))
    n_actions = params.n_actions or 3
    horizon = params.horizon or 10
    if n_actions != 3:
        raise ValueError("periodic_aversion uses the three moves left/stay/right")
    c = params.constants
    slip = float(c.get("slip", 0.1))
    w_pos, w_move, w_crowd = c.get("weights", (0.4, 0.2, 0.4))
    moves = [-1, 0, 1]
    tensor = _ring_walk(n_states, moves, slip)
    x = np.arange(n_states) / n_states
    pos_term = 0.5 * (1.0 + np.sin(2.0 * np.pi * x))
    move_term = np.abs(moves) / max(np.abs(moves))
    bump = np.exp(-(((x - 0.5) / 0.15) ** 2))
    mu1 = (bump / bump.sum())[None, :]

    def cost(b: int, h: int, agg: np.ndarray) -> np.ndarray:
        crowd = np.log1p(np.minimum(agg[b], 1.0)) / np.log(2.0)
        return (
            w_pos * pos_term[:, None]
            + w_move * move_term[None, :]
            + w_crowd * crowd[:, None]
        )

    return ModelSpec(
        horizon=horizon,
        n_states=n_states,
        n_actions=n_actions,
        grid=PopulationGrid.uniform(1),
        graphon=GraphonSpec(np.ones((1, 1))),
        mu1=mu1,
        cost=cost,
        transition=_static_transition(tensor),
    )


def _congestion(params: EnvironmentParams, negate: bool = False) -> ModelSpec:
    n_states = params.n_states or 5
    n_actions = params.n_actions or 3
    horizon = params.horizon or 5
    if n_actions != 3:
        raise ValueError("congestion uses the three moves left/stay/right")
    moves = [-1, 0, 1]
    # Deterministic moves keep the game minimal.
    tensor = _ring_walk(n_states, moves, slip=0.0)
    w_max = 1.0
    mu1 = np.zeros((1, n_states))
    mu1[0, 0] = 1.0

    def cost(b: int, h: int, agg: np.ndarray) -> np.ndarray:
        local = np.minimum(agg[b] / w_max, 1.0)
        if negate:
            local = 1.0 - local
        return np.broadcast_to(local[:, None], (n_states, n_actions))

    return ModelSpec(
        horizon=horizon,
        n_states=n_states,
        n_actions=n_actions,
        grid=PopulationGrid.uniform(1),
        graphon=GraphonSpec(np.ones((1, 1)), w_max=w_max),
        mu1=mu1,
        cost=cost,
        transition=_static_transition(tensor),
    )


_BUILDERS = {
    "beach_bar": _beach_bar,
    "crowd_avoidance": _crowd_avoidance,
    "predator_prey": _predator_prey,
    "periodic_aversion": _periodic_aversion,
    "congestion": _congestion,
    "anti_congestion": lambda p: _congestion(p, negate=True),
}

ENVIRONMENT_NAMES = tuple(sorted(_BUILDERS)) + ("linear_synthetic",)


def make_environment(params: EnvironmentParams) -> ModelSpec:
    """Build one of the named benchmark games from its parameters."""
    if params.name == "linear_synthetic":
        model, _ = make_linear_synthetic(**_linear_kwargs(params))
        return model
    if params.name not in _BUILDERS:
        raise ValueError(
            f"unknown environment {params.name!r}; known: {ENVIRONMENT_NAMES}"
        )
    return _BUILDERS[params.name](params)


def _linear_kwargs(params: EnvironmentParams) -> dict[str, Any]:
    c = params.constants
    return {
        "n_states": params.n_states or 4,
        "n_actions": params.n_actions or 2,
        "horizon": params.horizon or 5,
        "dim": int(c.get("dim", 4)),
        "seed": int(c.get("seed", 0)),
        "one_hot": bool(c.get("one_hot", False)),
    }


def make_linear_synthetic(
    n_states: int,
    n_actions: int,
    horizon: int,
    dim: int,
    seed: int,
    one_hot: bool = False,
) -> tuple[ModelSpec, LinearModelSpec]:
    """Random game whose transitions factor through a linear operator.

    Features live on the probability simplex of dimension ``dim`` (hence
    L2 norm at most 1) and the true operator's columns are distributions
    over next states, so every induced transition row is an exact convex
    combination of distributions.  With ``one_hot=True`` and
    ``dim == n_states * n_actions`` the operator embeds a plain tabular
    transition table.
    """
    if dim < 1:
        raise ValueError("feature dimension must be at least 1")
    if one_hot and dim != n_states * n_actions:
        raise ValueError("one-hot features need dim == n_states * n_actions")
    rng = np.random.default_rng(seed)

    if one_hot:
        tables = rng.dirichlet(np.ones(n_states), size=(horizon, n_states, n_actions))
        theta = np.zeros((horizon, n_states, dim))
        for h in range(horizon):
            for s in range(n_states):
                for a in range(n_actions):
                    theta[h, :, s * n_actions + a] = tables[h, s, a]

        def features(s: int, a: int, z: np.ndarray) -> np.ndarray:
            phi = np.zeros(dim)
            phi[s * n_actions + a] = 1.0
            return phi

        def table_fn(z: np.ndarray) -> np.ndarray:
            return np.eye(dim).reshape(n_states, n_actions, dim)

    else:
        base = rng.dirichlet(np.ones(dim), size=(n_states, n_actions))
        mix = rng.uniform(0.0, 1.0, size=(dim, n_states))
        kappa = 0.5
        theta = rng.dirichlet(np.ones(n_states), size=(horizon, dim)).transpose(0, 2, 1)

        def _z_weights(z: np.ndarray) -> np.ndarray:
            w = mix @ z + 1e-2
            return w / w.sum()

        def features(s: int, a: int, z: np.ndarray) -> np.ndarray:
            return (base[s, a] + kappa * _z_weights(z)) / (1.0 + kappa)

        def table_fn(z: np.ndarray) -> np.ndarray:
            w = _z_weights(z)
            return (base + kappa * w[None, None, :]) / (1.0 + kappa)

    base_cost = rng.uniform(0.0, 0.6, size=(n_states, n_actions))

    def cost(b: int, h: int, agg: np.ndarray) -> np.ndarray:
        return np.clip(base_cost + 0.3 * np.minimum(agg[b], 1.0)[:, None], 0.0, 1.0)

    theta_by_step = theta

    def transition(b: int, h: int, agg: np.ndarray) -> np.ndarray:
        feats = spec.feature_table(agg[b])
        return feats @ theta_by_step[h].T

    mu1 = rng.dirichlet(np.ones(n_states), size=1)
    spec = LinearModelSpec(
        dim=dim,
        n_states=n_states,
        n_actions=n_actions,
        features=features,
        theta_star=theta,
        table_fn=table_fn,
    )
    model = ModelSpec(
        horizon=horizon,
        n_states=n_states,
        n_actions=n_actions,
        grid=PopulationGrid.uniform(1),
        graphon=GraphonSpec(np.ones((1, 1))),
        mu1=mu1,
        cost=cost,
        transition=transition,
    )
    return model, spec
