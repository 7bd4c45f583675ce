"""Exploitability, the reference-weighted KL metric, and the monotonicity probe."""

import numpy as np
import pytest

from gmfg import (
    EnvironmentParams,
    FlowProfile,
    PolicyProfile,
    PopulationGrid,
    ReferenceSolution,
    best_response_dp,
    exploitability,
    induce_flow,
    kl_metric,
    make_environment,
    monotonicity_probe,
)

from _oracles import best_deterministic_value, random_tabular_model


class TestExploitability:
    def test_best_response_to_own_flow_scores_zero(self):
        rng = np.random.default_rng(0)
        model, _, _ = random_tabular_model(rng, 3, 2, 3)
        policy = PolicyProfile(rng.dirichlet(np.ones(2), size=(1, 3, 3)))
        # Iterate the best-response map a few times to land on a profile
        # that is (numerically) a fixed point of its own flow.
        for _ in range(60):
            _, aggregates = induce_flow(model, policy)
            policy, _ = best_response_dp(model, aggregates, 0.0)
        value = exploitability(model, policy)
        # Transitions ignore the aggregate here, so the best response to
        # the induced flow is exact after one step.
        assert value == pytest.approx(0.0, abs=1e-9)

    def test_matches_exhaustive_deviation_search(self):
        rng = np.random.default_rng(1)
        model, costs, transitions = random_tabular_model(rng, 2, 2, 2)
        policy = PolicyProfile(rng.dirichlet(np.ones(2), size=(1, 2, 2)))
        flow, _ = induce_flow(model, policy)
        from _oracles import enumerate_return

        own = enumerate_return(costs[0], transitions[0], policy.table[0], model.mu1[0], 0.0)
        best = best_deterministic_value(costs[0], transitions[0], model.mu1[0])
        assert exploitability(model, policy) == pytest.approx(own - best, abs=1e-10)

    def test_never_meaningfully_negative(self):
        rng = np.random.default_rng(2)
        for name in ("beach_bar", "congestion", "crowd_avoidance"):
            model = make_environment(EnvironmentParams(name=name))
            for _ in range(5):
                table = rng.dirichlet(
                    np.ones(model.n_actions),
                    size=(model.block_count, model.horizon, model.n_states),
                )
                assert exploitability(model, PolicyProfile(table)) >= -1e-9


def tiny_reference():
    policy = PolicyProfile(np.array([[[[0.6, 0.4], [0.2, 0.8]]]]))
    flow = FlowProfile(np.array([[[0.3, 0.7]]]))
    return ReferenceSolution(policy=policy, flow=flow)


class TestKlMetric:
    def test_zero_at_the_reference_itself(self):
        ref = tiny_reference()
        assert kl_metric(ref.policy, ref, PopulationGrid.uniform(1)) == 0.0

    def test_nonnegative_on_random_pairs(self):
        rng = np.random.default_rng(3)
        grid = PopulationGrid.uniform(2)
        for _ in range(50):
            pi_star = rng.dirichlet(np.ones(3), size=(2, 2, 2))
            pi = rng.dirichlet(np.ones(3), size=(2, 2, 2))
            mu = rng.dirichlet(np.ones(2), size=(2, 2))
            ref = ReferenceSolution(PolicyProfile(pi_star), FlowProfile(mu))
            assert kl_metric(PolicyProfile(pi), ref, grid) >= 0.0

    def test_hand_instance(self):
        ref = tiny_reference()
        policy = PolicyProfile(np.array([[[[0.5, 0.5], [0.4, 0.6]]]]))

        def kl(p, q):
            return sum(pi * np.log(pi / qi) for pi, qi in zip(p, q))

        expected = 0.3 * kl([0.6, 0.4], [0.5, 0.5]) + 0.7 * kl([0.2, 0.8], [0.4, 0.6])
        got = kl_metric(policy, ref, PopulationGrid.uniform(1))
        assert got == pytest.approx(expected, abs=1e-12)

    def test_infinite_on_support_mismatch(self):
        ref = tiny_reference()
        policy = PolicyProfile(np.array([[[[1.0, 0.0], [0.2, 0.8]]]]))
        assert kl_metric(policy, ref, PopulationGrid.uniform(1)) == np.inf

    def test_dimension_mismatch_rejected(self):
        ref = tiny_reference()
        policy = PolicyProfile(np.full((1, 1, 1, 3), 1 / 3))
        with pytest.raises(ValueError):
            kl_metric(policy, ref, PopulationGrid.uniform(1))

    def test_reference_consistency_check(self):
        model = make_environment(EnvironmentParams(name="congestion"))
        policy = PolicyProfile.uniform(model)
        flow, _ = induce_flow(model, policy)
        good = ReferenceSolution(policy=policy, flow=flow)
        good.check_consistent(model)
        shifted = np.roll(flow.mu, 1, axis=-1)
        bad = ReferenceSolution(policy=policy, flow=FlowProfile(shifted))
        with pytest.raises(ValueError):
            bad.check_consistent(model)


def random_occupancies(model, rng, n):
    shape = (model.block_count, model.horizon)
    size = model.n_states * model.n_actions
    for _ in range(n):
        rho = rng.dirichlet(np.ones(size), size=shape).reshape(
            *shape, model.n_states, model.n_actions
        )
        rho_tilde = rng.dirichlet(np.ones(size), size=shape).reshape(
            *shape, model.n_states, model.n_actions
        )
        yield rho, rho_tilde


class TestMonotonicityProbe:
    def test_zero_at_equal_occupancies(self):
        model = make_environment(EnvironmentParams(name="congestion"))
        rng = np.random.default_rng(4)
        rho, _ = next(random_occupancies(model, rng, 1))
        assert monotonicity_probe(model, rho, rho) == 0.0

    def test_congestion_equals_squared_flow_difference(self):
        model = make_environment(EnvironmentParams(name="congestion"))
        rng = np.random.default_rng(5)
        for rho, rho_tilde in random_occupancies(model, rng, 10):
            mu = rho.sum(-1)
            mu_tilde = rho_tilde.sum(-1)
            expected = float(((mu - mu_tilde) ** 2).sum())
            got = monotonicity_probe(model, rho, rho_tilde)
            assert got == pytest.approx(expected, abs=1e-12)

    def test_sign_flips_under_negated_cost(self):
        model = make_environment(EnvironmentParams(name="congestion"))
        anti = make_environment(EnvironmentParams(name="anti_congestion"))
        rng = np.random.default_rng(6)
        for rho, rho_tilde in random_occupancies(model, rng, 10):
            plus = monotonicity_probe(model, rho, rho_tilde)
            minus = monotonicity_probe(anti, rho, rho_tilde)
            assert minus == pytest.approx(-plus, abs=1e-12)
            if not np.allclose(rho.sum(-1), rho_tilde.sum(-1)):
                assert minus < 0.0

    def test_symmetric_under_argument_swap(self):
        model = make_environment(EnvironmentParams(name="beach_bar"))
        rng = np.random.default_rng(7)
        for rho, rho_tilde in random_occupancies(model, rng, 5):
            a = monotonicity_probe(model, rho, rho_tilde)
            b = monotonicity_probe(model, rho_tilde, rho)
            assert a == pytest.approx(b, abs=1e-12)

    def test_invalid_occupancy_rejected(self):
        model = make_environment(EnvironmentParams(name="congestion"))
        shape = (1, model.horizon, model.n_states, model.n_actions)
        with pytest.raises(ValueError):
            monotonicity_probe(model, np.full(shape, 0.3), np.full(shape, 0.3))
