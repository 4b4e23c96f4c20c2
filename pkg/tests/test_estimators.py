"""Information estimators: the fingerprint bound, Monte Carlo with the
aggregated posterior, exact discrete computation, and error propagation."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from infocomp import (
    DiscreteSoftClustering,
    Fingerprint,
    HardClustering,
    McConfig,
    PosteriorSet,
    entropy_dataset,
    fingerprint_discrete_soft,
    fingerprint_gaussian,
    fingerprint_hard,
    fingerprint_product,
    info_exact_discrete,
    info_kt,
    info_mc,
    info_mc_joint,
    propagate_vi_error,
    weighted_mean,
)
from infocomp.bench import gen_separated_gaussians
from infocomp.errors import (
    AlignmentError,
    InputError,
    NumericDomainError,
    ResourceError,
)


def mixture_info_quadrature_1d(means, stddevs, grid_sigmas=8.0):
    """Oracle: I(X;U) for a 1-D equal-weight Gaussian mixture by quadrature."""
    means = np.asarray(means, dtype=float)
    stddevs = np.asarray(stddevs, dtype=float)
    n = means.size

    def pdf(z, m, s):
        return np.exp(-((z - m) ** 2) / (2 * s**2)) / (s * np.sqrt(2 * np.pi))

    def component_term(i):
        def integrand(z):
            p = pdf(z, means[i], stddevs[i])
            mix = sum(pdf(z, means[j], stddevs[j]) for j in range(n)) / n
            if p <= 0:
                return 0.0
            return p * np.log2(p / mix)

        lo = means[i] - grid_sigmas * stddevs[i]
        hi = means[i] + grid_sigmas * stddevs[i]
        return quad(integrand, lo, hi, limit=400)[0]

    return sum(component_term(i) for i in range(n)) / n


def plugin_entropy_bits(labels):
    _, counts = np.unique(labels, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


class TestInfoKt:
    def test_identity_fingerprint(self):
        est = info_kt(Fingerprint(np.eye(4)))
        assert est.bits == pytest.approx(2.0, abs=1e-12)
        assert est.estimator == "kt_bound"
        assert est.std_err == 0.0
        assert est.n_support == 4

    def test_all_ones_is_uninformative(self):
        assert info_kt(Fingerprint(np.ones((5, 5)))).bits == 0.0

    def test_hard_labels_give_plugin_entropy(self):
        labels = [0, 0, 1, 1, 1, 1]
        est = info_kt(fingerprint_hard(HardClustering(labels)))
        assert est.bits == pytest.approx(plugin_entropy_bits(labels), abs=1e-12)
        assert est.bits == pytest.approx(0.9182958340544896, abs=1e-10)

    def test_saturates_at_log2_n(self):
        for n in (16, 256, 1024):
            est = info_kt(Fingerprint(np.eye(n)))
            assert est.bits == pytest.approx(math.log2(n), abs=1e-9)

    def test_bounded_by_log2_n_always(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(2, 30))
            space = PosteriorSet(5 * rng.normal(size=(n, 2)), rng.uniform(0.1, 2, (n, 2)))
            bits = info_kt(fingerprint_gaussian(space)).bits
            assert -1e-12 <= bits <= math.log2(n) + 1e-12

    def test_lower_bound_on_discrete_soft(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n, k = int(rng.integers(3, 20)), int(rng.integers(2, 6))
            m = rng.dirichlet(np.ones(k), size=n)
            clust = DiscreteSoftClustering(m)
            bound = info_kt(fingerprint_discrete_soft(clust)).bits
            exact = info_exact_discrete([clust]).bits
            assert bound <= exact + 1e-10

    def test_equality_on_hard_clusterings(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            labels = rng.integers(0, 5, int(rng.integers(3, 40)))
            bound = info_kt(fingerprint_hard(HardClustering(labels, n_clusters=5))).bits
            assert bound == pytest.approx(plugin_entropy_bits(labels), abs=1e-12)

    def test_lower_bound_on_gaussian_mixtures(self):
        rng = np.random.default_rng(3)
        for _ in range(15):
            n = int(rng.integers(2, 6))
            means = rng.uniform(-4, 4, n)
            stddevs = rng.uniform(0.4, 2.0, n)
            space = PosteriorSet(means[:, None], stddevs[:, None])
            bound = info_kt(fingerprint_gaussian(space)).bits
            oracle = mixture_info_quadrature_1d(means, stddevs)
            assert bound <= oracle + 1e-9

    def test_product_never_reduces_bound(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n = int(rng.integers(3, 25))
            a = fingerprint_gaussian(
                PosteriorSet(3 * rng.normal(size=(n, 1)), rng.uniform(0.3, 2, (n, 1)))
            )
            b = fingerprint_gaussian(
                PosteriorSet(3 * rng.normal(size=(n, 1)), rng.uniform(0.3, 2, (n, 1)))
            )
            joint = info_kt(fingerprint_product(a, b)).bits
            assert joint >= max(info_kt(a).bits, info_kt(b).bits) - 1e-12

    def test_permutation_invariance(self):
        # permuting samples reorders the float summations, so agreement is
        # to the last couple of ulps rather than bit-exact
        rng = np.random.default_rng(5)
        space = PosteriorSet(3 * rng.normal(size=(30, 2)), rng.uniform(0.3, 2, (30, 2)))
        fp = fingerprint_gaussian(space)
        perm = rng.permutation(30)
        permuted = Fingerprint(
            fp.values[np.ix_(perm, perm)], sample_ids=[fp.sample_ids[i] for i in perm]
        )
        assert info_kt(fp).bits == pytest.approx(info_kt(permuted).bits, abs=1e-12)


class TestInfoMc:
    def test_separated_suite_gives_log2_k(self):
        for k in (2, 4, 8):
            space = gen_separated_gaussians(k=k)
            est = info_mc(space, McConfig(n_samples=10_000, seed=1))
            assert abs(est.bits - math.log2(k)) <= 3 * est.std_err + 1e-9

    def test_coincident_pairs_transmit_one_bit(self):
        space = PosteriorSet([[0.0], [0.0], [1e6], [1e6]], np.ones((4, 1)))
        est = info_mc(space, McConfig(n_samples=4000, seed=2))
        assert abs(est.bits - 1.0) <= 3 * est.std_err + 1e-9

    def test_two_gaussian_overlap_matches_quadrature(self):
        space = PosteriorSet([[0.0], [2.0]], np.ones((2, 1)))
        oracle = mixture_info_quadrature_1d([0.0, 2.0], [1.0, 1.0])
        est = info_mc(space, McConfig(n_samples=20_000, seed=3))
        assert est.std_err > 0
        assert abs(est.bits - oracle) <= 3 * est.std_err

    def test_deterministic_given_seed(self):
        space = gen_separated_gaussians(k=4, separation=3.0)
        cfg = McConfig(n_samples=500, seed=7)
        a = info_mc(space, cfg)
        b = info_mc(space, cfg)
        assert a.bits == b.bits and a.std_err == b.std_err

    def test_half_aggregation_on_clustered_suite(self):
        space = gen_separated_gaussians(k=8, per_cluster=8, separation=1e4)
        full = info_mc(space, McConfig(n_samples=4000, agg_fraction=1.0, seed=6))
        half = info_mc(space, McConfig(n_samples=4000, agg_fraction=0.5, seed=6))
        assert abs(full.bits - half.bits) < 0.1

    def test_half_aggregation_mild_bias_on_dense_line(self):
        # partial aggregation overestimates mildly on an overlapping continuum
        space = PosteriorSet(np.arange(64.0)[:, None], np.ones((64, 1)))
        full = info_mc(space, McConfig(n_samples=8000, agg_fraction=1.0, seed=9))
        half = info_mc(space, McConfig(n_samples=8000, agg_fraction=0.5, seed=9))
        assert half.bits >= full.bits - 3 * (full.std_err + half.std_err)
        assert abs(half.bits - full.bits) < 0.4

    def test_permutation_agreement_at_distribution_level(self):
        rng = np.random.default_rng(8)
        space = PosteriorSet(2.0 * np.arange(8.0)[:, None], np.ones((8, 1)))
        perm = rng.permutation(8)
        permuted = PosteriorSet(
            space.means[perm],
            space.stddevs[perm],
            sample_ids=[space.sample_ids[i] for i in perm],
        )
        a = info_mc(space, McConfig(n_samples=4000, seed=10))
        b = info_mc(permuted, McConfig(n_samples=4000, seed=11))
        assert abs(a.bits - b.bits) <= 3 * math.hypot(a.std_err, b.std_err)

    def test_config_validation(self):
        with pytest.raises(InputError):
            McConfig(n_samples=0)
        with pytest.raises(InputError):
            McConfig(n_samples=10, agg_fraction=0.0)
        with pytest.raises(InputError):
            McConfig(n_samples=10, agg_fraction=1.5)


class TestInfoMcJoint:
    def test_uninformative_member_changes_nothing(self):
        space = gen_separated_gaussians(k=4, separation=6.0)
        flat = PosteriorSet(
            np.zeros((4, 1)), np.ones((4, 1)), sample_ids=list(space.sample_ids)
        )
        single = info_mc(space, McConfig(n_samples=6000, seed=12))
        joint = info_mc_joint([space, flat], McConfig(n_samples=6000, seed=13))
        tol = 3 * math.hypot(single.std_err, joint.std_err) + 1e-9
        assert abs(single.bits - joint.bits) <= tol

    def test_self_joint_of_separated_space_adds_nothing(self):
        space = gen_separated_gaussians(k=4)
        est = info_mc_joint([space, space], McConfig(n_samples=4000, seed=14))
        assert abs(est.bits - 2.0) <= 3 * est.std_err + 1e-9

    def test_orthogonal_one_bit_channels_give_two_bits(self):
        u = PosteriorSet([[0.0], [0.0], [50.0], [50.0]], np.full((4, 1), 0.2))
        v = PosteriorSet([[0.0], [50.0], [0.0], [50.0]], np.full((4, 1), 0.2))
        oracle = info_exact_discrete(
            [HardClustering([0, 0, 1, 1]), HardClustering([0, 1, 0, 1])]
        ).bits
        est = info_mc_joint([u, v], McConfig(n_samples=4000, seed=15))
        assert oracle == pytest.approx(2.0, abs=1e-12)
        assert abs(est.bits - oracle) <= 3 * est.std_err + 1e-9

    def test_sample_id_mismatch_rejected(self):
        u = PosteriorSet([[0.0], [1.0]], np.ones((2, 1)), sample_ids=["a", "b"])
        v = PosteriorSet([[0.0], [1.0]], np.ones((2, 1)), sample_ids=["b", "a"])
        with pytest.raises(AlignmentError):
            info_mc_joint([u, v], McConfig(n_samples=10))


class TestInfoExactDiscrete:
    def test_two_even_clusters_one_bit(self):
        est = info_exact_discrete([HardClustering([0, 0, 1, 1])])
        assert est.bits == pytest.approx(1.0, abs=1e-12)
        assert est.std_err == 0.0
        assert est.estimator == "exact_discrete"

    def test_orthogonal_pair_two_bits(self):
        est = info_exact_discrete(
            [HardClustering([0, 0, 1, 1]), HardClustering([0, 1, 0, 1])]
        )
        assert est.bits == pytest.approx(2.0, abs=1e-12)

    def test_coin_mixture_enumeration(self):
        # brute-force check of the 4-cluster coin-mixture soft clustering:
        # each datum reports one of two 1-bit labels behind a visible coin
        memberships = np.array(
            [
                [0.5, 0.0, 0.5, 0.0],
                [0.5, 0.0, 0.0, 0.5],
                [0.0, 0.5, 0.5, 0.0],
                [0.0, 0.5, 0.0, 0.5],
            ]
        )
        v = DiscreteSoftClustering(memberships)
        marginal = memberships.mean(axis=0)
        h_marginal = -(marginal * np.log2(marginal)).sum()
        h_conditional = 1.0  # every row is an even two-way coin flip
        assert info_exact_discrete([v]).bits == pytest.approx(
            h_marginal - h_conditional, abs=1e-12
        )
        assert info_exact_discrete([v]).bits == pytest.approx(1.0, abs=1e-12)
        # two independent draws share only the coin-free half of the label
        self_joint = info_exact_discrete([v, v]).bits
        assert 2 * 1.0 - self_joint == pytest.approx(0.5, abs=1e-12)

    def test_joint_table_cap(self):
        big = HardClustering(np.arange(64), n_clusters=64)
        clusts = [big, big, big, big]  # 64^4 = 2^24 cells > default cap
        with pytest.raises(ResourceError):
            info_exact_discrete(clusts)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(16)
        m = rng.dirichlet(np.ones(3), size=12)
        perm = rng.permutation(12)
        a = info_exact_discrete([DiscreteSoftClustering(m)]).bits
        b = info_exact_discrete([DiscreteSoftClustering(m[perm])]).bits
        assert a == pytest.approx(b, abs=1e-12)


class TestScalarHelpers:
    def test_entropy_dataset(self):
        assert entropy_dataset(1) == 0.0
        assert entropy_dataset(4) == 2.0
        assert entropy_dataset(17568) == pytest.approx(math.log2(17568), abs=1e-12)
        with pytest.raises(InputError):
            entropy_dataset(0)

    def test_propagate_vi_error_default(self):
        assert propagate_vi_error(0.0, 0.0, 0.0) == 0.0
        assert propagate_vi_error(0.01, 0.01, 0.01) == pytest.approx(
            math.sqrt(6) * 0.01, rel=1e-12
        )

    def test_propagate_vi_error_subtracting_mode(self):
        assert propagate_vi_error(
            0.01, 0.01, 0.01, subtract_self_variances=True
        ) == pytest.approx(math.sqrt(2) * 0.01, rel=1e-12)
        with pytest.raises(NumericDomainError):
            propagate_vi_error(0.01, 0.03, 0.01, subtract_self_variances=True)

    def test_weighted_mean(self):
        value, err = weighted_mean([(1.0, 0.1), (1.0, 0.1)])
        assert value == pytest.approx(1.0)
        assert err == pytest.approx(0.1 / math.sqrt(2), rel=1e-12)
        value, err = weighted_mean([(0.0, 1.0), (2.0, 1.0)])
        assert (value, err) == (pytest.approx(1.0), pytest.approx(1 / math.sqrt(2)))
        value, err = weighted_mean([(1.0, 0.1), (3.0, 0.3)])
        assert value == pytest.approx(1.2, rel=1e-12)
        assert err == pytest.approx((100 + 100 / 9) ** -0.5, rel=1e-12)

    def test_weighted_mean_edge_cases(self):
        assert weighted_mean([(2.0, 0.0), (4.0, 0.0)]) == (3.0, 0.0)
        with pytest.raises(InputError):
            weighted_mean([])
        with pytest.raises(InputError):
            weighted_mean([(1.0, 0.0), (2.0, 0.5)])
