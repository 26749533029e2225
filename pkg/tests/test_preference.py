import json
import math

import numpy as np
import pytest
from scipy.stats import norm

from prefmoo.preference import (DirichletPrior, IrRecord, NoiseConfig, PcRecord,
                                PosteriorSamples, PreferenceDataset,
                                ir_log_likelihood, log_posterior_unnorm,
                                pc_log_likelihood, sample_weights, w_error)
from prefmoo.utility import CsfUtility


NOISE = NoiseConfig(0.1, 0.1)


def grid_posterior_mean_1simplex(prior, dataset, noise, n=4000):
    """Independent oracle: trapezoid-weighted posterior on a dense 1-simplex grid."""
    w1 = np.linspace(1e-4, 1 - 1e-4, n)
    W = np.column_stack([w1, 1 - w1])
    lp = np.array([log_posterior_unnorm(w, prior, dataset, noise) for w in W])
    p = np.exp(lp - lp.max())
    p /= p.sum()
    return float(np.sum(p * w1))


class TestPcLikelihood:
    def test_equal_utilities(self):
        d = PreferenceDataset(pc=[PcRecord([0.5, 0.5], [0.5, 0.5])])
        ll = pc_log_likelihood(d, np.array([0.5, 0.5]), NOISE)
        assert ll == pytest.approx(math.log(0.5))

    def test_one_noise_unit_separation(self):
        # utility gap of sqrt(2)*sigma_pc puts the probit argument at exactly 1;
        # with w = (0.5, 0.5) the minimum coordinate maps to utility at rate 2
        w = np.array([0.5, 0.5])
        gap = math.sqrt(2) * NOISE.sigma_pc
        d = PreferenceDataset(pc=[PcRecord([0.25 + gap / 4, 1.0], [0.25 - gap / 4, 1.0])])
        ll = pc_log_likelihood(d, w, NOISE)
        assert ll == pytest.approx(math.log(norm.cdf(1.0)), abs=1e-12)

    def test_empty_dataset(self):
        assert pc_log_likelihood(PreferenceDataset(), np.array([0.5, 0.5]), NOISE) == 0.0

    def test_swap_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            f, g = rng.uniform(0, 1, 2), rng.uniform(0, 1, 2)
            w = rng.dirichlet([2, 2])
            p_fwd = math.exp(pc_log_likelihood(
                PreferenceDataset(pc=[PcRecord(f, g)]), w, NOISE))
            p_rev = math.exp(pc_log_likelihood(
                PreferenceDataset(pc=[PcRecord(g, f)]), w, NOISE))
            assert p_fwd + p_rev == pytest.approx(1.0, abs=1e-12)


class TestIrLikelihood:
    def test_equal_gradients_single_relation(self):
        # stub family with constant equal gradients isolates the Phi(0) term
        class Flat:
            def gradients(self, w, F, extra=None):
                return np.ones((np.atleast_2d(F).shape[0], 2))

        d = PreferenceDataset(ir=[IrRecord([0.4, 0.6], 0)])
        ll = ir_log_likelihood(d, np.array([0.5, 0.5]), NOISE, family=Flat())
        assert ll == pytest.approx(math.log(0.5))

    def test_saturated_cdf(self):
        d = PreferenceDataset(ir=[IrRecord([0.4, 0.6], 0)])
        ll = ir_log_likelihood(d, np.array([0.5, 0.5]), NOISE)
        assert ll == pytest.approx(math.log(norm.cdf(20.0)), abs=1e-12)
        assert ll > -1e-6

    def test_expands_to_l_minus_one_relations(self):
        w = np.array([0.2, 0.3, 0.5])
        f = np.array([0.9, 0.8, 0.1])
        d = PreferenceDataset(ir=[IrRecord(f, 1)])
        u = CsfUtility(w)
        g = u.gradient(f)
        expected = sum(norm.logcdf((g[1] - g[k]) / NOISE.sigma_ir) for k in (0, 2))
        assert ir_log_likelihood(d, w, NOISE) == pytest.approx(expected, abs=1e-9)


class TestLogPosterior:
    def test_beta_density_midpoint(self):
        prior = DirichletPrior.symmetric(2, 2.0)
        lp = log_posterior_unnorm(np.array([0.5, 0.5]), prior,
                                  PreferenceDataset(), NOISE)
        assert lp == pytest.approx(math.log(1.5))

    def test_empty_data_reduces_to_prior(self):
        prior = DirichletPrior(np.array([2.0, 3.0]))
        a, b = np.array([0.3, 0.7]), np.array([0.6, 0.4])
        diff = (log_posterior_unnorm(a, prior, PreferenceDataset(), NOISE)
                - log_posterior_unnorm(b, prior, PreferenceDataset(), NOISE))
        assert diff == pytest.approx(prior.log_density(a) - prior.log_density(b))

    def test_compositionality(self):
        rng = np.random.default_rng(1)
        prior = DirichletPrior.symmetric(2, 2.0)
        d = PreferenceDataset(
            pc=[PcRecord(rng.uniform(0, 1, 2), rng.uniform(0, 1, 2))],
            ir=[IrRecord(rng.uniform(0, 1, 2), 1)])
        w = rng.dirichlet([2, 2])
        total = log_posterior_unnorm(w, prior, d, NOISE)
        parts = (prior.log_density(w) + pc_log_likelihood(d, w, NOISE)
                 + ir_log_likelihood(d, w, NOISE))
        assert total == pytest.approx(parts, abs=1e-12)

    def test_boundary_returns_neg_inf(self):
        prior = DirichletPrior.symmetric(2, 2.0)
        assert log_posterior_unnorm(np.array([1.0, 0.0]), prior,
                                    PreferenceDataset(), NOISE) == -np.inf

    def test_consistent_record_scores_higher_than_reverse(self):
        w = np.array([0.3, 0.7])
        u = CsfUtility(w)
        prior = DirichletPrior.symmetric(2, 2.0)
        f, g = np.array([0.9, 0.9]), np.array([0.2, 0.2])
        assert u.value(f) > u.value(g)
        good = log_posterior_unnorm(w, prior, PreferenceDataset(pc=[PcRecord(f, g)]), NOISE)
        bad = log_posterior_unnorm(w, prior, PreferenceDataset(pc=[PcRecord(g, f)]), NOISE)
        assert good > bad


class TestSampler:
    def test_prior_moments(self):
        prior = DirichletPrior.symmetric(2, 2.0)
        s = sample_weights(prior, PreferenceDataset(), NOISE,
                           n_samples=20_000, seed=1)
        w1 = s.weights[:, 0]
        assert abs(w1.mean() - 0.5) < 0.01
        assert abs(w1.var() - 0.05) < 0.01

    def test_informative_data_recovers_truth(self):
        # strongly informative comparisons generated at w_true = (0.8, 0.2)
        rng = np.random.default_rng(2)
        w_true = np.array([0.8, 0.2])
        u = CsfUtility(w_true)
        noise = NoiseConfig(0.01, 0.01)
        d = PreferenceDataset()
        for _ in range(200):
            f, g = rng.uniform(0, 1, 2), rng.uniform(0, 1, 2)
            if u.value(f) >= u.value(g):
                d.add_pc(f, g)
            else:
                d.add_pc(g, f)
        prior = DirichletPrior.symmetric(2, 2.0)
        s = sample_weights(prior, d, noise, n_samples=2000, seed=3)
        mean = s.weights[:, 0].mean()
        assert 0.6 < mean < 1.0
        oracle = grid_posterior_mean_1simplex(prior, d, noise)
        assert mean == pytest.approx(oracle, abs=0.02)

    def test_same_seed_identical(self):
        prior = DirichletPrior.symmetric(3, 2.0)
        d = PreferenceDataset(pc=[PcRecord([0.8, 0.2, 0.5], [0.1, 0.7, 0.4])])
        a = sample_weights(prior, d, NOISE, n_samples=200, seed=9)
        b = sample_weights(prior, d, NOISE, n_samples=200, seed=9)
        assert np.array_equal(a.weights, b.weights)

    def test_samples_inside_simplex(self):
        prior = DirichletPrior.symmetric(3, 2.0)
        d = PreferenceDataset(ir=[IrRecord([0.2, 0.5, 0.7], 0)])
        s = sample_weights(prior, d, NOISE, n_samples=500, seed=4)
        assert np.all(s.weights > 0)
        assert np.allclose(s.weights.sum(axis=1), 1.0, atol=1e-9)

    @pytest.mark.slow
    def test_posterior_contraction(self):
        # w_error non-increasing in expectation as the record count grows
        from prefmoo.dm import DecisionMaker, DmConfig, sample_w_true

        budgets = (0, 10, 40)
        means = []
        for budget in budgets:
            errs = []
            for seed in range(10):
                rng = np.random.default_rng(seed)
                w_true = sample_w_true(2, rng)
                dm = DecisionMaker(CsfUtility(w_true), DmConfig(0.1, 0.1, seed=seed))
                d = PreferenceDataset()
                for _ in range(budget // 2):
                    f, g = rng.uniform(0, 1, 2), rng.uniform(0, 1, 2)
                    if dm.answer_pc(f, g):
                        d.add_pc(f, g)
                    else:
                        d.add_pc(g, f)
                    h = rng.uniform(0, 1, 2)
                    d.add_ir(h, dm.answer_ir(h))
                prior = DirichletPrior.symmetric(2, 2.0)
                s = sample_weights(prior, d, NOISE, n_samples=500, seed=seed)
                errs.append(w_error(s, w_true))
            means.append(np.mean(errs))
        assert means[0] >= means[1] >= means[2]


class TestWError:
    def test_zero_when_exact(self):
        s = PosteriorSamples(weights=np.tile([0.3, 0.7], (10, 1)), seed=0)
        assert w_error(s, [0.3, 0.7]) == 0.0

    def test_closed_form(self):
        s = PosteriorSamples(weights=np.tile([0.6, 0.4], (5, 1)), seed=0)
        assert w_error(s, [0.5, 0.5]) == pytest.approx(math.sqrt(0.02))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        W = rng.dirichlet([2, 2], size=50)
        s1 = PosteriorSamples(weights=W, seed=0)
        s2 = PosteriorSamples(weights=W[::-1], seed=0)
        assert w_error(s1, [0.5, 0.5]) == pytest.approx(w_error(s2, [0.5, 0.5]))

    def test_dimension_mismatch(self):
        s = PosteriorSamples(weights=np.tile([0.3, 0.7], (5, 1)), seed=0)
        with pytest.raises(ValueError):
            w_error(s, [0.2, 0.3, 0.5])


class TestWireFormat:
    def test_round_trip(self):
        d = PreferenceDataset()
        d.add_pc([0.1, 0.9], [0.4, 0.6])
        d.add_ir([0.3, 0.3], 1)
        doc = json.loads(json.dumps(d.to_dict()))
        assert doc == {"pc": [{"preferred": [0.1, 0.9], "other": [0.4, 0.6]}],
                       "ir": [{"f": [0.3, 0.3], "dim": 1}]}
        back = PreferenceDataset.from_dict(doc)
        assert len(back.pc) == 1 and back.ir[0].dim == 1

    def test_rejects_mixed_dimensions(self):
        with pytest.raises(ValueError):
            PreferenceDataset(pc=[PcRecord([0.1, 0.9], [0.4, 0.6])],
                              ir=[IrRecord([0.3, 0.3, 0.3], 0)])

    def test_ir_dim_bounds(self):
        with pytest.raises(ValueError):
            IrRecord([0.2, 0.8], 2)
