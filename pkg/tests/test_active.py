import math

import numpy as np
import pytest
from scipy.stats import norm

from prefmoo.active import (IrQuery, PcQuery, binary_mi, build_ir_pool,
                            build_pc_pool, categorical_mi, mi_ir, mi_pc,
                            select_query)
from prefmoo.preference import NoiseConfig, PosteriorSamples

NOISE = NoiseConfig(0.1, 0.1)


def samples_from(W):
    return PosteriorSamples(weights=np.atleast_2d(np.asarray(W, float)), seed=0)


def hand_binary_mi(ps):
    """Independent oracle: direct two-outcome entropy arithmetic."""
    ps = np.asarray(ps, dtype=float)
    p_bar = ps.mean()
    def h(p):
        terms = [q * math.log(q) for q in (p, 1 - p) if q > 0]
        return -sum(terms)
    return h(p_bar) - np.mean([h(p) for p in ps])


class TestMiPc:
    def test_identical_pair_gives_zero(self):
        s = samples_from(np.random.default_rng(0).dirichlet([2, 2], size=30))
        assert mi_pc(PcQuery([0.5, 0.5], [0.5, 0.5]), s, NOISE) == pytest.approx(
            0.0, abs=1e-12)

    def test_consensus_query_uninformative(self):
        # every sample agrees the first vector is far better
        s = samples_from(np.random.default_rng(1).dirichlet([2, 2], size=30))
        q = PcQuery([0.95, 0.95], [0.05, 0.05])
        assert mi_pc(q, s, NOISE) < 1e-6

    def test_two_sample_disagreement_formula(self):
        # weights chosen so the two samples give near-certain opposite answers
        w_a, w_b = np.array([0.9, 0.1]), np.array([0.1, 0.9])
        q = PcQuery([0.4, 0.05], [0.05, 0.4])
        s = samples_from([w_a, w_b])
        p_a = norm.cdf((min(0.4 / 0.9, 0.05 / 0.1) - min(0.05 / 0.9, 0.4 / 0.1))
                       / (math.sqrt(2) * 0.1))
        p_b = norm.cdf((min(0.4 / 0.1, 0.05 / 0.9) - min(0.05 / 0.1, 0.4 / 0.9))
                       / (math.sqrt(2) * 0.1))
        expected = hand_binary_mi([p_a, p_b])
        assert mi_pc(q, s, NOISE) == pytest.approx(expected, abs=1e-12)
        assert mi_pc(q, s, NOISE) > 0.6  # close to ln 2

    def test_relabel_invariance(self):
        rng = np.random.default_rng(2)
        s = samples_from(rng.dirichlet([2, 2, 2], size=20))
        f, g = rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)
        assert mi_pc(PcQuery(f, g), s, NOISE) == pytest.approx(
            mi_pc(PcQuery(g, f), s, NOISE), abs=1e-12)

    def test_singleton_sample_set_zero(self):
        s = samples_from([[0.4, 0.6]])
        q = PcQuery([0.8, 0.1], [0.1, 0.8])
        assert mi_pc(q, s, NOISE) == pytest.approx(0.0, abs=1e-15)


class TestMiIr:
    def test_binary_reduction(self):
        rng = np.random.default_rng(3)
        s = samples_from(rng.dirichlet([2, 2], size=25))
        for _ in range(10):
            f = rng.uniform(0.1, 0.9, 2)
            q = IrQuery(f)
            from prefmoo.active import _ir_probs
            p = _ir_probs([q], s, NOISE, __import__("prefmoo.utility",
                          fromlist=["CSF_FAMILY"]).CSF_FAMILY)[:, 0, :]
            assert mi_ir(q, s, NOISE) == pytest.approx(binary_mi(p[:, 0]), abs=1e-9)

    def test_equal_gradients_zero(self):
        class FlatFamily:
            def gradients_batch(self, W, F, extras=None):
                return np.ones((W.shape[0], F.shape[0], W.shape[1]))

        s = samples_from(np.random.default_rng(4).dirichlet([2, 2, 2], size=15))
        assert mi_ir(IrQuery([0.2, 0.5, 0.7]), s, NOISE,
                     family=FlatFamily()) == pytest.approx(0.0, abs=1e-12)

    def test_two_sample_opposite_answers(self):
        # opposite active dimensions under the two samples, saturated CDFs
        s = samples_from([[0.9, 0.1], [0.1, 0.9]])
        q = IrQuery([0.3, 0.3])
        assert mi_ir(q, s, NOISE) == pytest.approx(math.log(2), abs=1e-4)

    def test_bounded_by_log_outcomes(self):
        rng = np.random.default_rng(5)
        for L in (2, 3, 4):
            s = samples_from(rng.dirichlet(np.full(L, 2.0), size=20))
            for _ in range(10):
                q = IrQuery(rng.uniform(0, 1, L))
                v = mi_ir(q, s, NOISE)
                assert 0.0 <= v <= math.log(L) + 1e-12


class TestSelectQuery:
    def test_informative_beats_degenerate(self):
        s = samples_from(np.random.default_rng(6).dirichlet([2, 2], size=30))
        pool = [PcQuery([0.5, 0.5], [0.5, 0.5]), PcQuery([0.7, 0.2], [0.2, 0.7])]
        idx, q, score = select_query(pool, s, NOISE, "pc")
        assert idx == 1 and score > 0

    def test_identical_pool_ties_to_first(self):
        s = samples_from(np.random.default_rng(7).dirichlet([2, 2], size=10))
        pool = [PcQuery([0.6, 0.3], [0.3, 0.6])] * 4
        idx, _, _ = select_query(pool, s, NOISE, "pc")
        assert idx == 0

    def test_ordering_matches_hand_computation(self):
        s = samples_from([[0.8, 0.2], [0.2, 0.8]])
        pool = [PcQuery([0.5, 0.5], [0.5, 0.5]),      # zero information
                PcQuery([0.52, 0.48], [0.48, 0.52]),  # mild disagreement
                PcQuery([0.4, 0.05], [0.05, 0.4])]    # saturated disagreement
        from prefmoo.active import _pc_probs
        from prefmoo.utility import CSF_FAMILY
        probs = _pc_probs(pool, s, NOISE, CSF_FAMILY)
        by_hand = [hand_binary_mi(probs[:, i]) for i in range(3)]
        assert by_hand[2] > by_hand[1] > by_hand[0]
        idx, _, score = select_query(pool, s, NOISE, "pc")
        assert idx == 2
        assert score == pytest.approx(by_hand[2], abs=1e-12)

    def test_empty_pool_raises(self):
        s = samples_from([[0.5, 0.5]])
        with pytest.raises(ValueError):
            select_query([], s, NOISE, "pc")

    def test_unknown_kind_raises(self):
        s = samples_from([[0.5, 0.5]])
        with pytest.raises(ValueError):
            select_query([PcQuery([0.1, 0.2], [0.2, 0.1])], s, NOISE, "nope")


class TestPools:
    def test_sizes_and_dims(self):
        rng = np.random.default_rng(8)
        pc = build_pc_pool(rng, 17, 3)
        ir = build_ir_pool(rng, 9, 3)
        assert len(pc) == 17 and len(ir) == 9
        assert all(q.f.size == 3 and q.f_other.size == 3 for q in pc)

    def test_mixes_gp_means(self):
        rng = np.random.default_rng(9)
        means = np.full((4, 2), 7.0)  # far outside the unit box
        pc = build_pc_pool(rng, 200, 2, means)
        endpoints = np.concatenate([np.stack([q.f for q in pc]),
                                    np.stack([q.f_other for q in pc])])
        frac_from_means = np.mean(endpoints[:, 0] == 7.0)
        assert 0.3 < frac_from_means < 0.7
