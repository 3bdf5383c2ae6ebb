import math

import numpy as np
import pytest

from conftest import make_instance, seeded
from csbm import saw
from csbm.errors import BudgetExceededError, ConfigurationError, DomainError
from csbm.saw import EXACT, WALK, WalkConfig


class TestWeights:
    def _inst(self):
        # a = 6, b = 2 at n = 100: lam = 1, d = 4
        B = np.zeros((100, 3))
        B[0, 1], B[1, 1] = 0.2, -0.5
        return make_instance([[0, 1]], n=100, p=3, lam=1.0, mu=4.0, d=4.0, B=B)

    def test_edge_weight_present(self):
        assert saw.centered_edge_weight(self._inst(), 0, 1) == pytest.approx(48.0)

    def test_edge_weight_absent(self):
        assert saw.centered_edge_weight(self._inst(), 0, 2) == pytest.approx(-2.0)

    def test_edge_weight_conditional_mean_identity(self):
        params = self._inst().params
        n, a, b = 100, params.a, params.b
        assert (2 * n / (a - b)) * (a / n - (a + b) / (2 * n)) == pytest.approx(1.0)
        assert (2 * n / (a - b)) * (b / n - (a + b) / (2 * n)) == pytest.approx(-1.0)

    def test_wedge_weight_value(self):
        assert saw.wedge_weight(self._inst(), 0, 1, 1) == pytest.approx(-2.5)

    def test_wedge_weight_zero_entry(self):
        assert saw.wedge_weight(self._inst(), 0, 0, 1) == 0.0

    def test_silent_channels_rejected(self):
        inst = make_instance([[0, 1]], n=10, p=2, lam=0.0, mu=0.0)
        with pytest.raises(ConfigurationError):
            saw.centered_edge_weight(inst, 0, 1)
        with pytest.raises(ConfigurationError):
            saw.wedge_weight(inst, 0, 0, 1)


class TestExactEstimator:
    def test_single_edge_path_is_edge_weight(self):
        inst = seeded(0.8, 1.0, 3.0, 12, 6, seed=4)
        cfg = WalkConfig(1, 0, EXACT)
        want = saw.centered_edge_weight(inst, 2, 9)
        assert saw.saw_pair_estimator_exact(inst, 2, 9, cfg) == pytest.approx(want)

    def test_single_wedge_closed_form(self):
        inst = seeded(0.8, 1.0, 3.0, 12, 6, seed=4)
        cfg = WalkConfig(1, 1, EXACT)
        n, p, mu = 12, 6, 1.0
        want = (n / (mu * p)) * float(inst.B[3] @ inst.B[8])
        assert saw.saw_pair_estimator_exact(inst, 3, 8, cfg) == pytest.approx(want)

    def test_matrix_matches_per_pair(self):
        inst = seeded(0.8, 1.0, 3.0, 10, 5, seed=4)
        for k, l in [(2, 1), (2, 2), (3, 1), (3, 2)]:
            cfg = WalkConfig(k, l, EXACT)
            M = saw.exact_pair_matrix(inst, cfg).P
            for i, j in [(0, 4), (2, 9)]:
                want = saw.saw_pair_estimator_exact(inst, i, j, cfg)
                assert M[i, j] == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_symmetry_and_zero_diagonal(self):
        inst = seeded(0.8, 1.0, 3.0, 15, 8, seed=6)
        for method in (EXACT, WALK):
            P = saw.pair_estimator(inst, WalkConfig(2, 1, method)).P
            assert np.array_equal(P, P.T)
            assert np.all(np.diag(P) == 0)

    def test_budget_refusal(self):
        inst = seeded(0.8, 1.0, 3.0, 15, 8, seed=6)
        cfg = WalkConfig(3, 1, EXACT, budget=100)
        with pytest.raises(BudgetExceededError):
            saw.saw_pair_estimator_exact(inst, 0, 1, cfg)


class TestChannelDegeneracy:
    def test_all_wedge_paths_never_read_graph(self):
        inst = seeded(0.8, 1.0, 3.0, 12, 6, seed=4)
        other = make_instance(
            [[0, 1]], n=12, p=6, lam=0.8, mu=1.0, d=3.0, B=inst.B
        )
        cfg = WalkConfig(2, 2, EXACT)
        assert np.array_equal(
            saw.exact_pair_matrix(inst, cfg).P, saw.exact_pair_matrix(other, cfg).P
        )
        cfgw = WalkConfig(2, 2, WALK)
        assert np.array_equal(
            saw.walk_matrix_estimator(inst, cfgw).P,
            saw.walk_matrix_estimator(other, cfgw).P,
        )

    def test_graph_only_paths_never_read_covariates(self):
        inst = seeded(0.8, 1.0, 3.0, 12, 6, seed=4)
        from csbm.model import Instance

        other = Instance(
            params=inst.params,
            edges=inst.edges,
            B=np.ones_like(inst.B),
            seed=inst.seed,
        )
        cfg = WalkConfig(2, 0, EXACT)
        assert np.array_equal(
            saw.exact_pair_matrix(inst, cfg).P, saw.exact_pair_matrix(other, cfg).P
        )


class TestWalkMatrix:
    def test_agrees_with_exact_up_to_two_steps(self):
        inst = seeded(0.7, 1.2, 3.0, 15, 8, seed=9)
        for k, l in [(1, 0), (1, 1), (2, 0), (2, 1)]:
            E = saw.exact_pair_matrix(inst, WalkConfig(k, l, EXACT)).P
            W = saw.walk_matrix_estimator(inst, WalkConfig(k, l, WALK)).P
            assert np.max(np.abs(E - W)) <= 1e-9 * max(1.0, np.max(np.abs(E)))

    def test_two_wedge_deviation_is_repeated_coordinate_term(self):
        # walk * p^2 - exact * p(p-1) = scale^2 * (repeated-coordinate sum)/(n-2)
        inst = seeded(0.7, 1.2, 3.0, 15, 8, seed=9)
        n, p, mu = 15, 8, 1.2
        E = saw.exact_pair_matrix(inst, WalkConfig(2, 2, EXACT)).P
        W = saw.walk_matrix_estimator(inst, WalkConfig(2, 2, WALK)).P
        B = inst.B
        s = np.sum(B * B, axis=0)
        B3 = B**3
        rep = (B * s) @ B.T - B3 @ B.T - B @ B3.T
        np.fill_diagonal(rep, 0.0)
        lhs = W * p**2 - E * p * (p - 1)
        rhs = (n / mu) ** 2 * rep / (n - 2)
        assert np.max(np.abs(lhs - rhs)) <= 1e-8 * np.max(np.abs(rhs))
        assert np.max(np.abs(E - W)) > 0

    def test_zero_covariates_give_zero_matrix(self):
        inst = make_instance([[0, 1], [1, 2]], n=10, p=4, lam=0.5, mu=1.0)
        P = saw.walk_matrix_estimator(inst, WalkConfig(3, 3, WALK)).P
        assert np.all(P == 0)


class TestPathCounts:
    def test_leading_order_examples(self):
        assert saw.path_count_estimate(40, 40, WalkConfig(3, 1)) == 192000
        assert saw.path_count_estimate(10, 10, WalkConfig(1, 0)) == 1

    def test_leading_order_vs_exact(self):
        cfg = WalkConfig(2, 1)
        assert saw.path_count_estimate(10, 10, cfg) == 200
        assert saw.exact_path_count(10, 10, cfg) == 160

    def test_variance_grows_with_n(self):
        # single-edge path weights have variance ~ n at fixed parameters
        variances = []
        for n in (20, 40, 80):
            inst = seeded(0.8, 1.0, 4.0, n, n, seed=3)
            P = saw.exact_pair_matrix(inst, WalkConfig(1, 0, EXACT)).P
            variances.append(float(np.var(P[np.triu_indices(n, 1)])))
        assert variances[0] < variances[1] < variances[2]


class TestDiagnostics:
    def test_self_alignment(self):
        rng = np.random.default_rng(0)
        sigma = rng.choice([-1.0, 1.0], size=20)
        P = np.outer(sigma, sigma)
        np.fill_diagonal(P, 0.0)
        out = saw.correlation_diagnostic(P, sigma)
        n = 20
        assert out["delta_hat"] == pytest.approx(math.sqrt(n * n - n))

    def test_noise_alignment_small(self):
        rng = np.random.default_rng(1)
        n = 40
        sigma = rng.choice([-1.0, 1.0], size=n)
        hits = 0
        for _ in range(100):
            X = rng.standard_normal((n, n))
            P = (X + X.T) / 2
            np.fill_diagonal(P, 0.0)
            if abs(saw.correlation_diagnostic(P, sigma)["delta_hat"]) > 3:
                hits += 1
        assert hits <= 5

    def test_zero_matrix_rejected(self):
        with pytest.raises(DomainError):
            saw.correlation_diagnostic(np.zeros((5, 5)), np.ones(5))


class TestDefaults:
    def test_ratio_matching(self):
        from csbm.model import ModelParams

        params = ModelParams.from_np(
            lam=math.sqrt(0.7), mu=math.sqrt(0.7), d=6.0, n=300, p=300
        )
        cfg = saw.default_walk_config(params, 300)
        assert cfg.k == 6
        assert cfg.l == 3

    def test_silent_channel_forcing(self):
        from csbm.model import ModelParams

        graph_only = ModelParams.from_np(lam=0.9, mu=0.0, d=4.0, n=300, p=300)
        assert saw.default_walk_config(graph_only, 300).l == 0
        cov_only = ModelParams.from_np(lam=0.0, mu=1.5, d=4.0, n=300, p=300)
        cfg = saw.default_walk_config(cov_only, 300)
        assert cfg.l == cfg.k
        with pytest.raises(ConfigurationError):
            saw.default_walk_config(
                ModelParams.from_np(lam=0.0, mu=0.0, d=4.0, n=300, p=300), 300
            )
