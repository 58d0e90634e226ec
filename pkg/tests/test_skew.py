import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from goalskew.density import Box, GridHistogramModel, KdeModel, fit_kde
from goalskew.envs import FourRooms
from goalskew.errors import CollectorError, InvalidInputError, OutOfBoundsError
from goalskew.skew import (GoalSource, SkewConfig, SkewedEmpirical,
                           build_skewed_empirical, run_skew_refit, sir_resample,
                           skew_log_weights, skew_weights, skewed_from_log_weights,
                           skew_refit_iteration, weighted_loglik_grad)

UNIT = Box.square(1.0)


def two_cell_model(mass0, mass1):
    """Two unit-area cells on [0, 2] x [0, 1]; densities equal the masses."""
    return GridHistogramModel(Box(lo=(0, 0), hi=(2, 1)), (2, 1), [mass0, mass1])


class TestSkewConfig:
    def test_alpha_range(self):
        with pytest.raises(InvalidInputError):
            SkewConfig(alpha=0.5)
        with pytest.raises(InvalidInputError):
            SkewConfig(alpha=-11.0)

    def test_goal_source_parsing(self):
        assert SkewConfig(goal_source="model").goal_source is GoalSource.FROM_MODEL
        assert SkewConfig().goal_source is GoalSource.FROM_SKEWED_EMPIRICAL
        with pytest.raises(InvalidInputError):
            SkewConfig(goal_source="nope")

    def test_resample_default(self):
        assert SkewConfig(n_collect=7).effective_resample_size == 7
        assert SkewConfig(n_collect=7, resample_size=3).effective_resample_size == 3


class TestSkewWeights:
    def test_quarter_density_sqrt_inverse(self):
        # density 0.25 at the sample, alpha -0.5 -> weight 0.25 ** -0.5 = 2
        model = GridHistogramModel(UNIT, (2, 1), [0.125, 0.875])
        w = skew_weights(model, [[0.25, 0.5]], -0.5)
        assert w[0] == pytest.approx(2.0, rel=1e-12)

    def test_alpha_zero_unit_weights(self):
        model = two_cell_model(0.9, 0.1)
        w = skew_weights(model, [[0.5, 0.5], [1.5, 0.5]], 0.0)
        assert np.array_equal(w, [1.0, 1.0])

    def test_alpha_zero_exact_even_without_floor(self):
        model = GridHistogramModel(UNIT, (2, 1), [1.0, 0.0], floor=0.0)
        w = skew_weights(model, [[0.75, 0.5]], 0.0)  # zero-density cell
        assert np.array_equal(w, [1.0])

    def test_reciprocal_densities(self):
        model = two_cell_model(0.8, 0.2)
        w = skew_weights(model, [[0.5, 0.5], [1.5, 0.5]], -1.0)
        assert np.allclose(w, [1.25, 5.0], rtol=1e-12)

    def test_positive_alpha_rejected(self):
        model = two_cell_model(0.5, 0.5)
        with pytest.raises(InvalidInputError):
            skew_weights(model, [[0.5, 0.5]], 0.1)

    def test_out_of_bounds_sample(self):
        model = two_cell_model(0.5, 0.5)
        with pytest.raises(OutOfBoundsError):
            skew_weights(model, [[2.5, 0.5]], -1.0)


class TestSkewedEmpirical:
    def test_duplicate_atoms_kept(self):
        model = two_cell_model(0.8, 0.2)
        samples = np.array([[0.5, 0.5], [0.5, 0.5], [1.5, 0.5]])
        w = skew_weights(model, samples, -1.0)
        dist = build_skewed_empirical(samples, w)
        assert len(dist) == 3
        assert np.allclose(dist.probs, [1 / 6, 1 / 6, 2 / 3], atol=1e-12)
        assert dist.z_alpha == pytest.approx(7.5, rel=1e-12)

    def test_alpha_zero_uniform(self):
        model = two_cell_model(0.8, 0.2)
        samples = np.array([[0.5, 0.5], [1.5, 0.5], [1.5, 0.5]])
        dist = build_skewed_empirical(samples, skew_weights(model, samples, 0.0))
        assert np.array_equal(dist.probs, np.full(3, 1 / 3))
        assert dist.z_alpha == 3.0

    def test_single_sample(self):
        dist = build_skewed_empirical([[0.5, 0.5]], [2.0])
        assert np.array_equal(dist.probs, [1.0])

    def test_zero_total_weight(self):
        with pytest.raises(InvalidInputError):
            build_skewed_empirical([[0.5, 0.5]], [0.0])

    def test_z_alpha_equals_weight_sum_exactly(self):
        model = two_cell_model(0.7, 0.3)
        rng = np.random.default_rng(0)
        samples = np.column_stack([rng.random(50) * 2, rng.random(50)])
        w = skew_weights(model, samples, -0.7)
        assert build_skewed_empirical(samples, w).z_alpha == w.sum()

    def test_probs_invariant_to_weight_rescaling(self):
        # densities rescaled by c > 0 rescale weights by c**alpha, which cancels
        rng = np.random.default_rng(1)
        samples = rng.random((20, 2))
        w = rng.random(20) + 0.01
        base = build_skewed_empirical(samples, w)
        scaled = build_skewed_empirical(samples, w * 137.5)
        assert np.allclose(base.probs, scaled.probs, atol=1e-12)

    def test_log_weight_route_matches_linear_route(self):
        model = two_cell_model(0.6, 0.4)
        rng = np.random.default_rng(2)
        samples = np.column_stack([rng.random(30) * 2, rng.random(30)])
        linear = build_skewed_empirical(samples, skew_weights(model, samples, -2.0))
        logged = skewed_from_log_weights(samples, skew_log_weights(model, samples, -2.0))
        assert np.allclose(linear.probs, logged.probs, atol=1e-12)
        assert logged.z_alpha == pytest.approx(linear.z_alpha, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=30))
    def test_probs_always_normalized(self, weights):
        atoms = np.zeros((len(weights), 2))
        dist = build_skewed_empirical(atoms, weights)
        assert np.all(dist.probs >= 0)
        assert abs(dist.probs.sum() - 1.0) <= 1e-9


class TestSirResample:
    def test_degenerate_probs(self):
        dist = build_skewed_empirical([[0.0, 0.0], [1.0, 1.0]], [0.0, 1.0])
        draws = sir_resample(dist, 50, seed=0)
        assert np.array_equal(draws, np.ones((50, 2)))

    def test_frequencies_concentrate(self):
        dist = build_skewed_empirical([[0.0, 0.0], [1.0, 1.0]], [1.0, 2.0])
        draws = sir_resample(dist, 30_000, seed=1)
        frac_second = draws[:, 0].mean()
        assert abs(frac_second - 2 / 3) < 0.01

    def test_seed_determinism(self):
        dist = build_skewed_empirical(np.random.default_rng(3).random((10, 2)),
                                      np.arange(1.0, 11.0))
        assert np.array_equal(sir_resample(dist, 100, seed=9),
                              sir_resample(dist, 100, seed=9))

    def test_empirical_distribution_l1_convergence(self):
        # L1 distance to the target probs < 3 / sqrt(M) for M = 1e4, 10 atoms
        rng = np.random.default_rng(4)
        atoms = rng.random((10, 2))
        probs = rng.dirichlet(np.ones(10))
        dist = SkewedEmpirical(atoms=atoms, probs=probs, z_alpha=1.0)
        m = 10_000
        draws = dist.resample(m, seed=5)
        counts = np.array([(draws == atoms[i]).all(axis=1).sum() for i in range(10)])
        l1 = np.abs(counts / m - probs).sum()
        assert l1 < 3 / np.sqrt(m)


class TestWeightedLoglikGrad:
    def test_stationary_at_uniform(self):
        logits = np.zeros(4)
        grad = weighted_loglik_grad(logits, [0, 1, 2, 3], np.ones(4))
        assert np.allclose(grad, 0.0, atol=1e-12)

    def test_single_sample_sign_pattern(self):
        logits = np.log(np.array([0.1, 0.2, 0.3, 0.4]))
        grad = weighted_loglik_grad(logits, [2], [1.0])
        assert grad[2] > 0
        assert np.all(np.delete(grad, 2) < 0)

    def test_linearity_in_weights(self):
        rng = np.random.default_rng(6)
        logits = rng.normal(size=5)
        cells = rng.integers(5, size=20)
        w = rng.random(20)
        g1 = weighted_loglik_grad(logits, cells, w)
        g3 = weighted_loglik_grad(logits, cells, 3.0 * w)
        assert np.allclose(g3, 3.0 * g1, atol=1e-12)


def identity_collector(goals, rng):
    return goals


class TestSkewRefitIteration:
    def test_uniform_fixed_point_alpha_zero(self):
        n_cells = 9
        model = GridHistogramModel(UNIT, 3, np.full(n_cells, 1 / n_cells), floor=1e-3)
        cfg = SkewConfig(alpha=0.0, n_collect=10_000, goal_source="model")
        step = skew_refit_iteration(model, identity_collector, cfg, seed=0)
        l1 = np.abs(step.model.cell_mass - 1 / n_cells).sum()
        assert l1 < 0.05

    def test_single_state_collapses_to_cell(self):
        model = GridHistogramModel(UNIT, 3, np.full(9, 1 / 9), floor=1e-3)
        cfg = SkewConfig(alpha=-1.0, n_collect=1)
        step = skew_refit_iteration(model, identity_collector, cfg, seed=1)
        assert len(step.skewed) == 1
        hot = step.model.cell_mass.argmax()
        assert step.model.cell_mass[hot] == pytest.approx(1 - 1e-3 * 8 / 9, abs=1e-9)

    def test_skewed_collector_entropy_ordering(self):
        # after 10 iterations the skewing run is at least as spread out
        env = FourRooms()
        means = {}
        for alpha in (-1.0, 0.0):
            finals = []
            for seed in range(5):
                cfg = SkewConfig(alpha=alpha, n_collect=300, goal_source="model")
                run = run_skew_refit(env, env.reach, cfg, iterations=10, seed=seed)
                finals.append(run.reports[-1].entropy_nats)
            means[alpha] = np.mean(finals)
        assert means[-1.0] >= means[0.0]

    def test_collector_failure_wrapped(self):
        model = GridHistogramModel(UNIT, 2, np.full(4, 0.25), floor=1e-3)

        def broken(goals, rng):
            raise ValueError("sensor offline")

        with pytest.raises(CollectorError):
            skew_refit_iteration(model, broken, SkewConfig(n_collect=5), seed=0)

    def test_wrong_state_count_rejected(self):
        model = GridHistogramModel(UNIT, 2, np.full(4, 0.25), floor=1e-3)
        with pytest.raises(CollectorError):
            skew_refit_iteration(model, lambda g, r: g[:2], SkewConfig(n_collect=5), seed=0)

    def test_alpha_zero_bitwise_equals_unweighted_pipeline(self):
        # alpha = 0 must reduce to plain MLE on a resample of the collected
        # states: identical rng streams give bitwise-identical models
        model = GridHistogramModel(UNIT, 3, np.full(9, 1 / 9), floor=1e-3)
        cfg = SkewConfig(alpha=0.0, n_collect=500, goal_source="model")
        step = skew_refit_iteration(model, identity_collector, cfg,
                                 seed=np.random.default_rng(42))

        rng = np.random.default_rng(42)
        goals = model.sample(500, rng)
        states = identity_collector(goals, rng)
        manual = build_skewed_empirical(states, np.ones(len(states)))
        refit = model.refit(manual.resample(500, rng))
        assert np.array_equal(step.model.cell_mass, refit.cell_mass)


class TestRunSkewRefit:
    def test_zero_iterations(self):
        env = FourRooms()
        run = run_skew_refit(env, env.reach, SkewConfig(n_collect=10), 0, seed=0)
        assert run.reports == [] and run.models == []

    def test_smoothed_entropy_nondecreasing(self):
        env = FourRooms()
        cfg = SkewConfig(alpha=-1.0, n_collect=500, resample_size=5000,
                         goal_source="model")
        run = run_skew_refit(env, env.reach, cfg, iterations=100, seed=0)
        ents = np.array([r.entropy_nats for r in run.reports])
        smoothed = np.convolve(ents, np.full(10, 0.1), mode="valid")
        assert np.all(np.diff(smoothed) > -0.05)

    def test_reports_carry_run_metadata(self):
        env = FourRooms()
        cfg = SkewConfig(alpha=-0.5, n_collect=50)
        run = run_skew_refit(env, env.reach, cfg, iterations=3, seed=17)
        assert [r.iteration for r in run.reports] == [0, 1, 2]
        assert all(r.alpha == -0.5 and r.seed == 17 for r in run.reports)
        assert all(r.z_alpha > 0 for r in run.reports)
        assert len(run.models) == 3

    def test_reports_never_exceed_reachable_cells(self):
        env = FourRooms()
        n_valid = len(env.valid_cells())
        cfg = SkewConfig(alpha=-1.0, n_collect=500, resample_size=5000,
                         goal_source="model")
        run = run_skew_refit(env, env.reach, cfg, iterations=40, seed=2)
        assert all(0 <= r.cells_visited <= n_valid for r in run.reports)
        assert all(0.0 <= r.entropy_nats <= np.log(121) for r in run.reports)

    def test_iteration_works_with_kde_family(self):
        env = FourRooms()
        model = fit_kde(np.tile(env.start, (5, 1)) + 0.01 * np.arange(5)[:, None],
                        bounds=env.bounds, bandwidth=0.25, uniform_mix=1e-3)
        cfg = SkewConfig(alpha=-1.0, n_collect=60, goal_source="model")
        step = skew_refit_iteration(model, env.reach, cfg, seed=3)
        assert isinstance(step.model, KdeModel)
        assert len(step.model.centers) == cfg.effective_resample_size
        assert step.report.z_alpha > 0
