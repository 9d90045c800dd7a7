import math

import numpy as np
import pytest

from klrisk import (
    EstimatorSpec,
    ProbVec,
    SampleSeq,
    Seed,
    adaptive_gammas,
    add_constant,
    add_gamma_vec,
    constant_profile,
    fit,
    mle,
    otb_estimate,
    p_plus,
    prefix_counts,
    sample_iid,
    true_small_set,
    uniform,
)


class TestMle:
    def test_direct_formula(self):
        assert list(mle([2, 1, 1], 4).probs) == [0.5, 0.25, 0.25]

    def test_boundary(self):
        assert list(mle([4, 0], 4).probs) == [1.0, 0.0]
        assert list(mle([0, 10], 10).probs) == [0.0, 1.0]

    def test_count_sum_mismatch(self):
        with pytest.raises(ValueError, match="sum"):
            mle([2, 1], 4)


class TestAddConstant:
    def test_direct_formula(self):
        p = add_constant([3, 1], 4, 1.0)
        assert np.allclose(p.probs, [4.0 / 6.0, 2.0 / 6.0])

    def test_no_data_gives_uniform(self):
        p = add_constant([0, 0, 0, 0], 0, 1.0)
        assert np.array_equal(p.probs, [0.25, 0.25, 0.25, 0.25])

    def test_gamma_zero_is_mle(self):
        counts, n = [3, 1], 4
        assert np.array_equal(add_constant(counts, n, 0.0).probs, mle(counts, n).probs)
        assert list(add_constant(counts, n, 0.0).probs) == [0.75, 0.25]

    def test_rejects_negative_gamma(self):
        with pytest.raises(ValueError, match="gamma"):
            add_constant([1, 1], 2, -0.5)

    def test_monotone_bias_toward_uniform(self):
        # Each entry moves weakly toward 1/K as gamma grows.
        counts, n = [7, 2, 1], 10
        gammas = [0.0, 0.25, 0.5, 1.0, 2.0, 10.0, 100.0]
        estimates = [add_constant(counts, n, g).probs for g in gammas]
        for i, c in enumerate(counts):
            path = [e[i] for e in estimates]
            diffs = np.diff(path)
            if c / n > 1.0 / 3.0:
                assert np.all(diffs <= 1e-15)
            else:
                assert np.all(diffs >= -1e-15)
            assert abs(path[-1] - 1.0 / 3.0) < abs(path[0] - 1.0 / 3.0) + 1e-15


class TestAdaptiveGammas:
    def test_empty_small_set(self):
        # Counts far above the cutoff leave every bias at zero and J at 3.
        K, delta, n = 4, 0.05, 2000
        counts = [250, 250, 250, 250]
        profile = adaptive_gammas(counts, K, n, delta)
        assert profile.threshold == pytest.approx(32.0 * math.log(4 * K / delta))
        assert profile.small_set == ()
        assert profile.J == 3
        assert np.array_equal(profile.gammas, np.zeros(4))

    def test_all_counts_zero(self):
        profile = adaptive_gammas([0, 0, 0, 0], 4, 0, 0.05)
        assert profile.small_set == (1, 2, 3, 4)
        assert profile.J == 4
        expected = max(1.0, math.log(4 / 0.05) / 4)  # ln(80)/4
        assert expected == pytest.approx(1.0956, abs=1e-4)
        assert np.allclose(profile.gammas, expected)

    def test_max_branch_floor_one(self):
        K = 1000
        profile = adaptive_gammas([0] * K, K, 0, 0.5)
        assert profile.J == 1000
        assert math.log(K / 0.5) / 1000 < 1.0
        assert np.array_equal(profile.gammas, np.ones(K))

    def test_rejects_bad_delta(self):
        with pytest.raises(ValueError, match="delta"):
            adaptive_gammas([0, 0], 2, 0, 1.5)

    def test_small_set_is_support_of_gammas(self):
        rng = Seed(11, 0).generator()
        for _ in range(20):
            K = int(rng.integers(2, 30))
            n = int(rng.integers(4, 400))
            counts = rng.multinomial(n // 2, np.full(K, 1.0 / K))
            profile = adaptive_gammas(counts, K, n, 0.1)
            positive = tuple(int(i) + 1 for i in np.nonzero(profile.gammas > 0)[0])
            assert positive == profile.small_set


class TestAddGammaVec:
    def test_constant_profile_reduction(self):
        counts, n = [3, 1, 0, 2], 6
        profile = constant_profile(4, 1.0)
        a = add_gamma_vec(counts, n, profile)
        b = add_constant(counts, n, 1.0)
        assert np.array_equal(a.probs, b.probs)

    def test_zero_profile_is_mle(self):
        counts, n = [3, 1], 4
        profile = constant_profile(2, 0.0)
        assert np.array_equal(add_gamma_vec(counts, n, profile).probs, mle(counts, n).probs)

    def test_direct_formula(self):
        profile = adaptive_gammas([0, 0], 2, 0, 0.5)
        # Both categories small, J = 3, gamma = max(1, ln(4)/3) = 1.
        assert np.array_equal(profile.gammas, [1.0, 0.0 + 1.0])
        p = add_gamma_vec([3, 1], 4, constant_profile(2, 1.0))
        assert np.allclose(p.probs, [4.0 / 6.0, 2.0 / 6.0])
        mixed = constant_profile(2, 0.0)
        object.__setattr__(mixed, "gammas", np.array([1.0, 0.0]))
        p = add_gamma_vec([3, 1], 4, mixed)
        assert np.allclose(p.probs, [4.0 / 5.0, 1.0 / 5.0])


class TestTrueSmallSet:
    def test_large_sample_empty(self):
        result = true_small_set(uniform(10), 10**6, 0.1)
        assert result.threshold == pytest.approx(32.0 * math.log(100), abs=1e-9)
        assert result.threshold == pytest.approx(147.4, abs=0.1)
        assert result.tilde_set == ()
        assert result.tilde_J == 3

    def test_small_sample_everything(self):
        result = true_small_set(uniform(10), 10, 0.1)
        assert len(result.tilde_set) == 10
        assert result.tilde_J == 10

    def test_heavy_atom_construction(self):
        eps = 1e-6
        K = 8
        probs = np.full(K, eps / (K - 1))
        probs[0] = 1.0 - eps
        result = true_small_set(ProbVec(probs), 10**5, 0.1)
        assert len(result.tilde_set) == K - 1
        assert 1 not in result.tilde_set


class TestPPlus:
    def test_zero_bias_identity(self):
        p = ProbVec([0.9, 0.1])
        assert np.array_equal(p_plus(p, constant_profile(2, 0.0), 10).probs, p.probs)

    def test_uniform_symmetry(self):
        p = uniform(5)
        shifted = p_plus(p, constant_profile(5, 2.0), 50)
        assert np.allclose(shifted.probs, 0.2)

    def test_direct_formula(self):
        shifted = p_plus(ProbVec([0.9, 0.1]), constant_profile(2, 1.0), 10)
        assert np.allclose(shifted.probs, [10.0 / 12.0, 2.0 / 12.0])


class TestOtbEstimate:
    def test_hand_computed_small_case(self):
        seq = SampleSeq(items=np.array([1, 2, 1, 1]), K=2)
        delta = 0.05
        gamma = max(1.0, math.log(2 / delta) / 3)  # ln(40)/3
        assert gamma == pytest.approx(1.2297, abs=1e-4)
        p3 = np.array([1 + gamma, 1 + gamma]) / (2 + 2 * gamma)
        p4 = np.array([2 + gamma, 1 + gamma]) / (3 + 2 * gamma)
        expected = (p3 + p4) / 2.0
        result = otb_estimate(seq, delta)
        assert np.allclose(result.probs, expected, atol=1e-15)
        naive = otb_estimate(seq, delta, naive=True)
        assert np.max(np.abs(naive.probs - result.probs)) < 1e-12

    def test_degenerate_mass_on_first(self):
        seq = sample_iid(ProbVec([1.0, 0.0, 0.0]), 50, Seed(3, 0))
        result = otb_estimate(seq, 0.1)
        assert np.argmax(result.probs) == 0

    def test_fast_matches_naive_on_random_sequences(self):
        combos = [(K, n) for K in (2, 10, 100) for n in (10, 1000)]
        for seed in range(12):
            K, n = combos[seed % len(combos)]
            seq = sample_iid(uniform(K), n, Seed(777, seed))
            fast = otb_estimate(seq, 0.1)
            naive = otb_estimate(seq, 0.1, naive=True)
            assert np.max(np.abs(fast.probs - naive.probs)) < 1e-12

    def test_entrywise_positive(self):
        # Every category has either a positive bias or positive counts.
        for seed in range(5):
            seq = sample_iid(ProbVec([0.7, 0.2, 0.05, 0.05]), 40, Seed(9, seed))
            assert np.all(otb_estimate(seq, 0.1).probs > 0.0)

    def test_rejects_tiny_sample(self):
        with pytest.raises(ValueError, match="at least 2"):
            otb_estimate(SampleSeq(items=np.array([1]), K=2), 0.1)

    def test_odd_sample_size(self):
        seq = sample_iid(uniform(3), 11, Seed(5, 0))
        fast = otb_estimate(seq, 0.2)
        naive = otb_estimate(seq, 0.2, naive=True)
        assert np.max(np.abs(fast.probs - naive.probs)) < 1e-12


class TestEstimatorSpec:
    @pytest.mark.parametrize(
        "text,kind,gamma,delta",
        [
            ("mle", "mle", None, None),
            ("laplace", "add_constant", 1.0, None),
            ("kt", "add_constant", 0.5, None),
            ("addgamma:2.5", "add_constant", 2.5, None),
            ("adaptive:0.05", "adaptive", None, 0.05),
            ("otb:0.1", "otb", None, 0.1),
        ],
    )
    def test_parse(self, text, kind, gamma, delta):
        spec = EstimatorSpec.parse(text)
        assert spec.kind == kind
        assert spec.gamma == gamma
        assert spec.delta == delta

    def test_label_roundtrip(self):
        for text in ["mle", "laplace", "kt", "addgamma:2.5", "adaptive:0.05", "otb:0.1"]:
            spec = EstimatorSpec.parse(text)
            assert EstimatorSpec.parse(spec.label) == spec

    def test_rejects_junk(self):
        with pytest.raises(ValueError):
            EstimatorSpec.parse("goodturing")
        with pytest.raises(ValueError):
            EstimatorSpec.parse("otb:1.5")
        with pytest.raises(ValueError):
            EstimatorSpec.parse("addgamma:-1")


class TestEstimatorProperties:
    @pytest.mark.parametrize(
        "spec",
        [
            EstimatorSpec.mle(),
            EstimatorSpec.add_constant(0.5),
            EstimatorSpec.adaptive(0.1),
            EstimatorSpec.otb(0.1),
        ],
        ids=lambda s: s.label,
    )
    def test_outputs_are_valid_prob_vecs(self, spec):
        for seed in range(5):
            seq = sample_iid(ProbVec([0.5, 0.3, 0.15, 0.05]), 60, Seed(21, seed))
            p = fit(spec, seq)
            assert np.all(p.probs >= 0.0)
            assert abs(p.probs.sum() - 1.0) <= 1e-12

    @pytest.mark.parametrize(
        "spec",
        [
            EstimatorSpec.mle(),
            EstimatorSpec.add_constant(0.5),
            EstimatorSpec.adaptive(0.1),
            EstimatorSpec.otb(0.1),
        ],
        ids=lambda s: s.label,
    )
    def test_permutation_equivariance(self, spec):
        rng = Seed(31, 0).generator()
        base = sample_iid(ProbVec([0.5, 0.3, 0.15, 0.05]), 50, Seed(31, 1))
        for _ in range(5):
            perm = rng.permutation(4) + 1  # category i renamed to perm[i-1]
            relabeled = SampleSeq(items=perm[base.items - 1], K=4)
            direct = fit(spec, relabeled).probs
            expected = np.empty(4)
            expected[perm - 1] = fit(spec, base).probs
            assert np.max(np.abs(direct - expected)) < 1e-15
