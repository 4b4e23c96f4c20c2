"""Fusion objectives, analytic gradients vs central differences, the ascent
loop, and its failure modes."""

import math

import numpy as np
import pytest

from infocomp import (
    Fingerprint,
    FusionConfig,
    FusionState,
    HardClustering,
    PosteriorSet,
    fingerprint_gaussian,
    fingerprint_hard,
    fuse,
    gen_separated_gaussians,
    objective_grad,
    objective_value,
)
from infocomp.errors import DivergenceError, InputError, ObjectiveUndefinedError
from infocomp.fusion import fingerprint_of_state

LN2 = math.log(2.0)


def random_ensemble(rng, n, members):
    out = []
    for _ in range(members):
        d = int(rng.integers(1, 3))
        space = PosteriorSet(2.0 * rng.normal(size=(n, d)), rng.uniform(0.3, 1.5, (n, d)))
        out.append(fingerprint_gaussian(space))
    return out


def finite_difference(state, ensemble, cfg, which, i, k, h=1e-5):
    def value(delta):
        means = state.means.copy()
        log_stddevs = state.log_stddevs.copy()
        if which == "mean":
            means[i, k] += delta
        else:
            log_stddevs[i, k] += delta
        return objective_value(FusionState(means=means, log_stddevs=log_stddevs), ensemble, cfg)

    return (value(h) - value(-h)) / (2 * h)


class TestObjectiveValue:
    def test_matching_single_member_gives_unit_nmi(self):
        rng = np.random.default_rng(0)
        space = PosteriorSet(3.0 * rng.normal(size=(10, 2)), rng.uniform(0.5, 1.5, (10, 2)))
        member = fingerprint_gaussian(space)
        state = FusionState(means=space.means, log_stddevs=np.log(space.stddevs))
        cfg = FusionConfig(objective="avg_nmi", latent_dim=2)
        assert objective_value(state, [member], cfg) == pytest.approx(1.0, abs=1e-12)

    def test_collapsed_state_under_avg_mi_is_zero(self):
        member = fingerprint_hard(HardClustering([0, 0, 1, 1]))
        state = FusionState(means=np.zeros((4, 2)), log_stddevs=np.zeros((4, 2)))
        cfg = FusionConfig(objective="avg_mi", latent_dim=2)
        assert objective_value(state, [member], cfg) == 0.0

    def test_collapsed_state_under_exp_neg_vi(self):
        # collapsed synthesis fingerprint is all-ones, so VI reduces to the
        # member's two-draw self-information; for a 1-bit hard member the
        # objective is exp(-ln 2) = 1/2
        member = fingerprint_hard(HardClustering([0, 0, 1, 1]))
        state = FusionState(means=np.zeros((4, 1)), log_stddevs=np.zeros((4, 1)))
        cfg = FusionConfig(objective="avg_exp_neg_vi", latent_dim=1)
        assert objective_value(state, [member], cfg) == pytest.approx(0.5, rel=1e-12)

    def test_collapsed_state_under_avg_nmi_is_undefined(self):
        member = fingerprint_hard(HardClustering([0, 0, 1, 1]))
        state = FusionState(means=np.zeros((4, 1)), log_stddevs=np.zeros((4, 1)))
        cfg = FusionConfig(objective="avg_nmi", latent_dim=1)
        with pytest.raises(ObjectiveUndefinedError):
            objective_value(state, [member], cfg)


class TestGradients:
    def test_against_central_differences(self):
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(12):
            n = int(rng.integers(5, 10))
            d = int(rng.integers(1, 4))
            ensemble = random_ensemble(rng, n, int(rng.integers(1, 4)))
            for objective in ("avg_nmi", "avg_exp_neg_vi", "avg_mi"):
                cfg = FusionConfig(objective=objective, latent_dim=d)
                state = FusionState(
                    means=1.5 * rng.normal(size=(n, d)),
                    log_stddevs=rng.uniform(-0.8, 0.5, (n, d)),
                )
                g_mu, g_ls = objective_grad(state, ensemble, cfg)
                for _ in range(4):
                    which = "mean" if rng.integers(0, 2) == 0 else "scale"
                    i, k = int(rng.integers(0, n)), int(rng.integers(0, d))
                    fd = finite_difference(state, ensemble, cfg, which, i, k)
                    an = g_mu[i, k] if which == "mean" else g_ls[i, k]
                    rel = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
                    worst = max(worst, rel)
        assert worst < 1e-4

    def test_collapsed_state_has_zero_mean_gradient(self):
        rng = np.random.default_rng(2)
        ensemble = random_ensemble(rng, 6, 2)
        state = FusionState(means=np.zeros((6, 2)), log_stddevs=np.zeros((6, 2)))
        cfg = FusionConfig(objective="avg_mi", latent_dim=2)
        g_mu, _ = objective_grad(state, ensemble, cfg)
        np.testing.assert_array_equal(g_mu, np.zeros((6, 2)))

    def test_single_mean_perturbation_touches_one_row_and_column(self):
        rng = np.random.default_rng(3)
        means = rng.normal(size=(7, 2))
        log_stddevs = np.zeros((7, 2))
        base = fingerprint_of_state(FusionState(means=means, log_stddevs=log_stddevs))
        perturbed_means = means.copy()
        perturbed_means[3, 0] += 0.25
        bumped = fingerprint_of_state(FusionState(means=perturbed_means, log_stddevs=log_stddevs))
        delta = bumped.values != base.values
        touched = np.argwhere(delta)
        assert touched.size > 0
        assert np.all((touched[:, 0] == 3) | (touched[:, 1] == 3))


class TestFuse:
    def test_single_separated_member_converges(self):
        member = fingerprint_gaussian(gen_separated_gaussians(k=16, separation=8.0))
        cfg = FusionConfig(objective="avg_nmi", steps=1500, seed=0)
        fused, state = fuse([member], cfg)
        assert state.objective_trace[-1] > 0.99
        assert state.objective_trace[-1] >= state.objective_trace[0]
        assert fused.n == 16 and fused.dim == 2
        assert np.all(fused.stddevs > 0)

    def test_deterministic_trace(self):
        rng = np.random.default_rng(4)
        ensemble = random_ensemble(rng, 8, 2)
        cfg = FusionConfig(objective="avg_exp_neg_vi", steps=60, seed=5)
        _, s1 = fuse(ensemble, cfg)
        _, s2 = fuse(ensemble, cfg)
        np.testing.assert_array_equal(s1.objective_trace, s2.objective_trace)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(6)
        n = 8
        ensemble = random_ensemble(rng, n, 2)
        init_means = rng.normal(size=(n, 2)) * 0.1
        init_ls = np.zeros((n, 2))
        cfg = FusionConfig(objective="avg_exp_neg_vi", steps=40, seed=0)
        fused, _ = fuse(ensemble, cfg, init_means=init_means, init_log_stddevs=init_ls)

        perm = rng.permutation(n)
        ids = ensemble[0].sample_ids
        permuted_ensemble = [
            Fingerprint(
                g.values[np.ix_(perm, perm)],
                sample_ids=[ids[i] for i in perm],
                space_id=g.space_id,
            )
            for g in ensemble
        ]
        fused_p, _ = fuse(
            permuted_ensemble,
            cfg,
            init_means=init_means[perm],
            init_log_stddevs=init_ls[perm],
        )
        np.testing.assert_allclose(fused_p.means, fused.means[perm], atol=1e-10)
        np.testing.assert_allclose(fused_p.stddevs, fused.stddevs[perm], atol=1e-10)

    def test_divergence_reported_with_step(self):
        member = fingerprint_gaussian(gen_separated_gaussians(k=8, separation=6.0))
        cfg = FusionConfig(objective="avg_mi", steps=100, learning_rate=1e8, seed=0)
        with pytest.raises(DivergenceError) as err:
            fuse([member], cfg)
        assert err.value.step is not None

    def test_misaligned_ensemble_rejected(self):
        a = Fingerprint(np.eye(4), sample_ids=list("abcd"))
        b = Fingerprint(np.eye(4), sample_ids=list("wxyz"))
        with pytest.raises(InputError):
            fuse([a, b], FusionConfig(objective="avg_mi", steps=1))

    def test_config_validation(self):
        with pytest.raises(InputError):
            FusionConfig(objective="bogus")
        with pytest.raises(InputError):
            FusionConfig(objective="avg_nmi", learning_rate=0.0)
        with pytest.raises(InputError):
            FusionConfig(objective="avg_nmi", steps=0)
