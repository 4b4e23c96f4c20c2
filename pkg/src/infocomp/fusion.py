"""Differentiable model fusion.

The posterior parameters of a synthesis space (means and log-stddevs of N
diagonal Gaussians) are optimized by plain gradient ascent so that the
synthesis fingerprint, recomputed every step, maximizes its average
similarity with a fixed ensemble of reference fingerprints.  Objectives:

* ``avg_nmi`` — mean generalized NMI against the members;
* ``avg_exp_neg_vi`` — mean exp(-VI) with VI in nats inside the exponential;
* ``avg_mi`` — mean unnormalized I(U;V_m) in bits.

All similarity terms use the fingerprint information bound, so gradients
are exact chain-rule expressions through the closed-form Bhattacharyya
coefficients; no original data or models are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Fingerprint, PosteriorSet
from .errors import AlignmentError, DivergenceError, InputError, ObjectiveUndefinedError
from .similarity import ZERO_INFO_BITS

LN2 = math.log(2.0)

OBJECTIVES = ("avg_nmi", "avg_exp_neg_vi", "avg_mi")


@dataclass
class FusionConfig:
    objective: str
    latent_dim: int = 2
    learning_rate: float = 3.0
    steps: int = 20000
    seed: int = 0
    init_mean_scale: float = 0.1
    init_stddev: float = 1.0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise InputError(f"objective must be one of {OBJECTIVES}")
        if self.latent_dim < 1:
            raise InputError("latent_dim must be >= 1")
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be positive")
        if self.steps < 1:
            raise InputError("steps must be >= 1")
        if self.init_stddev <= 0:
            raise InputError("init_stddev must be positive")


@dataclass
class FusionState:
    """Optimizable synthesis-space parameters plus the objective history."""

    means: np.ndarray
    log_stddevs: np.ndarray
    step: int = 0
    objective_trace: np.ndarray = None

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.log_stddevs = np.asarray(self.log_stddevs, dtype=np.float64)
        if self.means.shape != self.log_stddevs.shape or self.means.ndim != 2:
            raise InputError("means and log_stddevs must be matching (N, d) arrays")


class _Members:
    """Per-member constants reused across optimization steps."""

    def __init__(self, ensemble: list[Fingerprint]):
        ensemble = list(ensemble)
        if not ensemble:
            raise InputError("fusion needs at least one ensemble member")
        ids = ensemble[0].sample_ids
        for g in ensemble[1:]:
            if g.sample_ids != ids:
                raise AlignmentError("ensemble fingerprints must share sample ids")
        self.sample_ids = ids
        self.n = ensemble[0].n
        self.stack = np.stack([g.values for g in ensemble])  # (M, N, N)
        self.t = -np.log(self.stack.mean(axis=2)).mean(axis=1) / LN2
        self.t_self_joint = -np.log((self.stack * self.stack).mean(axis=2)).mean(axis=1) / LN2
        self.self_info = 2.0 * self.t - self.t_self_joint

    @property
    def count(self) -> int:
        return self.stack.shape[0]


def _evaluate(means, log_stddevs, members: _Members, objective: str, want_grad: bool):
    """Objective value and (optionally) its analytic parameter gradients.

    Extreme parameters may overflow intermediates to inf/nan; the ascent
    loop detects that as divergence, so numeric warnings are suppressed.
    """
    with np.errstate(over="ignore", divide="ignore", invalid="ignore", under="ignore"):
        return _evaluate_raw(means, log_stddevs, members, objective, want_grad)


def _evaluate_raw(means, log_stddevs, members: _Members, objective: str, want_grad: bool):
    n, d = means.shape
    if n != members.n:
        raise AlignmentError(
            f"state has {n} sample slots but ensemble fingerprints have {members.n}"
        )
    sig = np.exp(log_stddevs)
    s2 = sig * sig

    cross = []  # per-dim sigma_i^2 + sigma_j^2
    diffs = []  # per-dim mu_i - mu_j
    log_f = np.zeros((n, n))
    for k in range(d):
        ck = s2[:, None, k] + s2[None, :, k]
        log_f += 0.5 * np.log(2.0 * sig[:, None, k] * sig[None, :, k] / ck)
        dk = means[:, None, k] - means[None, :, k]
        log_f -= dk * dk / (4.0 * ck)
        if want_grad:
            cross.append(ck)
            diffs.append(dk)
    fp = np.exp(log_f)
    np.fill_diagonal(fp, 1.0)

    row_f = fp.mean(axis=1)
    t_f = float(-np.log(row_f).mean() / LN2)
    fp_sq = fp * fp
    row_ff = fp_sq.mean(axis=1)
    t_ff = float(-np.log(row_ff).mean() / LN2)
    self_f = 2.0 * t_f - t_ff

    row_fg = np.einsum("ij,mij->mi", fp, members.stack) / n  # (M, N)
    t_fg = -np.log(row_fg).mean(axis=1) / LN2  # (M,)

    m = members.count
    if objective == "avg_mi":
        per_member = (t_f + members.t) - t_fg
        value = float(per_member.mean())
        c_t_f = 1.0
        c_t_ff = 0.0
        c_fg = np.full(m, -1.0 / m)
    elif objective == "avg_exp_neg_vi":
        vi_bits = 2.0 * t_fg - t_ff - members.t_self_joint
        exp_neg = np.exp(-LN2 * vi_bits)
        value = float(exp_neg.mean())
        c_t_f = 0.0
        c_t_ff = float(LN2 * exp_neg.sum() / m)
        c_fg = -2.0 * LN2 * exp_neg / m
    else:  # avg_nmi
        if self_f < ZERO_INFO_BITS:
            raise ObjectiveUndefinedError(
                "synthesis space collapsed to zero self-information under avg_nmi"
            )
        num = (t_f + members.t) - t_fg
        den = np.sqrt(self_f * members.self_info)
        value = float((num / den).mean())
        c_t_f = float(((1.0 - num / self_f) / den).sum() / m)
        c_t_ff = float((num / (2.0 * self_f) / den).sum() / m)
        c_fg = (-1.0 / den) / m

    if not want_grad:
        return value, None, None

    # dObjective/dF for the N^2 ordered entries, then chain through F(theta)
    scale = -1.0 / (n * n * LN2)
    sens = np.zeros((n, n))
    if c_t_f != 0.0:
        sens += (c_t_f / row_f)[:, None]
    if c_t_ff != 0.0:
        sens += (2.0 * c_t_ff) * fp / row_ff[:, None]
    sens += np.einsum("m,mi,mij->ij", c_fg, 1.0 / row_fg, members.stack)
    weight = scale * (sens + sens.T) * fp
    np.fill_diagonal(weight, 0.0)  # diagonal BC is constant 1

    grad_means = np.empty_like(means)
    grad_log_stddevs = np.empty_like(log_stddevs)
    for k in range(d):
        grad_means[:, k] = -(weight * diffs[k] / (2.0 * cross[k])).sum(axis=1)
        sk2 = s2[:, None, k]
        term = 0.5 - sk2 / cross[k] + diffs[k] ** 2 * sk2 / (2.0 * cross[k] ** 2)
        grad_log_stddevs[:, k] = (weight * term).sum(axis=1)
    return value, grad_means, grad_log_stddevs


def fingerprint_of_state(state: FusionState, sample_ids=None) -> Fingerprint:
    """Fingerprint of the synthesis space at the current parameters."""
    from .core import bc_matrix

    values = bc_matrix(state.means, np.exp(state.log_stddevs))
    return Fingerprint(values, sample_ids=sample_ids, space_id="synthesis")


def objective_value(state: FusionState, ensemble: list[Fingerprint], cfg: FusionConfig) -> float:
    """Mean similarity of the synthesis fingerprint with the ensemble."""
    members = _Members(ensemble)
    value, _, _ = _evaluate(state.means, state.log_stddevs, members, cfg.objective, False)
    return value


def objective_grad(state: FusionState, ensemble: list[Fingerprint], cfg: FusionConfig):
    """Analytic gradients of the objective w.r.t. means and log-stddevs."""
    members = _Members(ensemble)
    _, g_mu, g_ls = _evaluate(state.means, state.log_stddevs, members, cfg.objective, True)
    return g_mu, g_ls


def fuse(
    ensemble: list[Fingerprint],
    cfg: FusionConfig,
    init_means: np.ndarray = None,
    init_log_stddevs: np.ndarray = None,
) -> tuple[PosteriorSet, FusionState]:
    """Plain gradient ascent on the synthesis parameters for cfg.steps steps.

    Initialization: means ~ Normal(0, init_mean_scale), log-stddevs at
    log(init_stddev); both can be overridden.  Deterministic given the seed
    on a single thread.  Non-finite parameters raise a divergence error
    carrying the step index.
    """
    members = _Members(ensemble)
    n, d = members.n, cfg.latent_dim
    rng = np.random.default_rng(cfg.seed)
    if init_means is None:
        means = rng.standard_normal((n, d)) * cfg.init_mean_scale
    else:
        means = np.array(init_means, dtype=np.float64)
        if means.shape != (n, d):
            raise InputError(f"init_means must have shape {(n, d)}")
    if init_log_stddevs is None:
        log_stddevs = np.full((n, d), math.log(cfg.init_stddev))
    else:
        log_stddevs = np.array(init_log_stddevs, dtype=np.float64)
        if log_stddevs.shape != (n, d):
            raise InputError(f"init_log_stddevs must have shape {(n, d)}")

    trace = np.empty(cfg.steps)
    for step in range(cfg.steps):
        try:
            value, g_mu, g_ls = _evaluate(means, log_stddevs, members, cfg.objective, True)
        except ObjectiveUndefinedError as err:
            err.step = step
            raise
        trace[step] = value
        means = means + cfg.learning_rate * g_mu
        log_stddevs = log_stddevs + cfg.learning_rate * g_ls
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(log_stddevs))):
            raise DivergenceError(
                f"non-finite parameters after step {step} (lr={cfg.learning_rate})",
                step=step,
            )

    state = FusionState(
        means=means, log_stddevs=log_stddevs, step=cfg.steps, objective_trace=trace
    )
    fused = PosteriorSet(
        means,
        np.exp(log_stddevs),
        sample_ids=list(members.sample_ids),
        space_id=f"fused:{cfg.objective}",
    )
    return fused, state
