"""Information estimators.

Three routes to the information transmitted about a dataset:

* ``info_kt`` — deterministic lower bound read off a fingerprint matrix:
  the negated mean log of row-averaged Bhattacharyya coefficients.  It
  saturates at log2(N) for a fully distinguishable sample.
* ``info_mc`` / ``info_mc_joint`` — Monte Carlo estimate against the
  (optionally subsampled) aggregated posterior, with a standard error.
* ``info_exact_discrete`` — exact joint-table computation for finite
  discrete (hard or soft) clusterings.

All internal accumulation is in natural log; public values are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import DiscreteSoftClustering, Fingerprint, HardClustering, PosteriorSet
from .errors import AlignmentError, InputError, NumericDomainError, ResourceError

LN2 = math.log(2.0)

KT_BOUND = "kt_bound"
MONTE_CARLO = "monte_carlo"
EXACT_DISCRETE = "exact_discrete"

_JOINT_TABLE_CELL_CAP = 2**20


@dataclass
class InfoEstimate:
    """An information value in bits with its standard error and provenance."""

    bits: float
    std_err: float
    estimator: str
    n_support: int

    def __post_init__(self):
        if not math.isfinite(self.bits):
            raise InputError("information estimate must be finite")
        if self.std_err < 0:
            raise InputError("standard error must be nonnegative")


@dataclass
class McConfig:
    """Configuration of the Monte Carlo estimator.

    ``agg_fraction`` is the fraction of the sample aggregated in the
    denominator; the subset is drawn once per call from ``seed``.
    """

    n_samples: int
    agg_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise InputError("n_samples must be >= 1")
        if not 0.0 < self.agg_fraction <= 1.0:
            raise InputError("agg_fraction must lie in (0, 1]")


def info_kt(f: Fingerprint) -> InfoEstimate:
    """Fingerprint lower bound on I(X;U) in bits.

    I_hat = -(1/N) * sum_i log2((1/N) * sum_j BC_ij).  Deterministic given
    the fingerprint, hence a zero standard error.
    """
    row_means = f.values.mean(axis=1)
    bits = float(-np.log(row_means).mean() / LN2)
    return InfoEstimate(bits=bits, std_err=0.0, estimator=KT_BOUND, n_support=f.n)


def _log_density_block(u, means, stddevs):
    """log N(u | mean_j, diag stddev_j^2) for each draw (rows) and component j."""
    d = means.shape[1]
    out = np.full((u.shape[0], means.shape[0]), -0.5 * d * math.log(2.0 * math.pi))
    for k in range(d):
        z = (u[:, None, k] - means[None, :, k]) / stddevs[None, :, k]
        out -= 0.5 * z * z + np.log(stddevs[None, :, k])
    return out


def info_mc_joint(spaces: list[PosteriorSet], cfg: McConfig) -> InfoEstimate:
    """Monte Carlo estimate of I(X; U_1, ..., U_m) for jointly observed spaces.

    The per-datum joint density factorizes over members (stochasticity in
    each channel is independent); passing the same space twice denotes the
    two-independent-draws self-joint (U, U').
    """
    spaces = list(spaces)
    if not spaces:
        raise InputError("at least one space is required")
    ids = spaces[0].sample_ids
    for s in spaces[1:]:
        if s.sample_ids != ids:
            raise AlignmentError("all spaces must share sample ids in order")
    n = spaces[0].n
    rng = np.random.default_rng(cfg.seed)

    l_agg = math.ceil(cfg.agg_fraction * n)
    if l_agg < n:
        subset = np.sort(rng.choice(n, size=l_agg, replace=False))
    else:
        subset = np.arange(n)

    idx = rng.integers(0, n, size=cfg.n_samples)
    log_self = np.zeros(cfg.n_samples)
    log_mix = np.zeros((cfg.n_samples, l_agg))
    for s in spaces:
        eps = rng.standard_normal((cfg.n_samples, s.dim))
        u = s.means[idx] + s.stddevs[idx] * eps
        z = eps  # (u - mean_idx) / stddev_idx by construction
        log_self += (
            -0.5 * (z * z).sum(axis=1)
            - np.log(s.stddevs[idx]).sum(axis=1)
            - 0.5 * s.dim * math.log(2.0 * math.pi)
        )
        block = max(1, (1 << 22) // max(l_agg, 1))
        for lo in range(0, cfg.n_samples, block):
            hi = min(lo + block, cfg.n_samples)
            log_mix[lo:hi] += _log_density_block(u[lo:hi], s.means[subset], s.stddevs[subset])

    log_agg = logsumexp(log_mix, axis=1) - math.log(l_agg)
    ratios_bits = (log_self - log_agg) / LN2
    bits = float(ratios_bits.mean())
    if cfg.n_samples > 1:
        std_err = float(ratios_bits.std(ddof=1) / math.sqrt(cfg.n_samples))
    else:
        std_err = 0.0
    return InfoEstimate(bits=bits, std_err=std_err, estimator=MONTE_CARLO, n_support=cfg.n_samples)


def info_mc(space: PosteriorSet, cfg: McConfig) -> InfoEstimate:
    """Monte Carlo estimate of I(X;U) using the aggregated posterior."""
    return info_mc_joint([space], cfg)


def _memberships(clust) -> np.ndarray:
    if isinstance(clust, HardClustering):
        return clust.memberships()
    if isinstance(clust, DiscreteSoftClustering):
        return clust.memberships
    raise InputError(f"expected a hard or discrete soft clustering, got {type(clust)!r}")


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum() / LN2)


def info_exact_discrete(clusts, cell_cap: int = _JOINT_TABLE_CELL_CAP) -> InfoEstimate:
    """Exact I(X; V_1, ..., V_m) for finite discrete clusterings.

    The joint conditional factorizes given x; the joint marginal is its
    average over the sample.  The materialized joint table must stay under
    ``cell_cap`` cells.
    """
    ms = [_memberships(c) for c in clusts]
    if not ms:
        raise InputError("at least one clustering is required")
    n = ms[0].shape[0]
    if any(m.shape[0] != n for m in ms):
        raise AlignmentError("all clusterings must cover the same data sample")
    cells = 1
    for m in ms:
        cells *= m.shape[1]
        if cells > cell_cap:
            raise ResourceError(
                f"joint table would need {cells}+ cells (cap {cell_cap})"
            )
    joint = ms[0]
    for m in ms[1:]:
        joint = (joint[:, :, None] * m[:, None, :]).reshape(n, -1)
    marginal = joint.mean(axis=0)
    h_marginal = _entropy_bits(marginal)
    h_conditional = float(np.mean([_entropy_bits(row) for row in joint]))
    return InfoEstimate(
        bits=h_marginal - h_conditional,
        std_err=0.0,
        estimator=EXACT_DISCRETE,
        n_support=n,
    )


def entropy_dataset(n: int) -> float:
    """H(X) in bits for a dataset of n equally likely points."""
    if n < 1:
        raise InputError("dataset size must be >= 1")
    return math.log2(n)


def propagate_vi_error(
    d_uv: float, d_uu: float, d_vv: float, subtract_self_variances: bool = False
) -> float:
    """Propagate the standard errors of the three VI constituents.

    Default is the sum-of-squares convention sqrt(4*d_uv^2 + d_uu^2 + d_vv^2).
    ``subtract_self_variances`` switches to the variant with interior minus
    signs, sqrt(4*d_uv^2 - d_uu^2 - d_vv^2), which raises when the radicand
    is negative.
    """
    if d_uv < 0 or d_uu < 0 or d_vv < 0:
        raise InputError("standard errors must be nonnegative")
    if subtract_self_variances:
        radicand = 4.0 * d_uv**2 - d_uu**2 - d_vv**2
        if radicand < 0:
            raise NumericDomainError(
                f"negative radicand {radicand!r} in self-variance-subtracting propagation"
            )
        return math.sqrt(radicand)
    return math.sqrt(4.0 * d_uv**2 + d_uu**2 + d_vv**2)


def weighted_mean(values) -> tuple[float, float]:
    """Inverse-variance weighted mean of (value, std_err) pairs.

    Weights are 1/std_err^2 and the combined standard error is
    (sum of weights)^(-1/2).  Equal weights are substituted when every
    standard error is zero.
    """
    values = list(values)
    if not values:
        raise InputError("weighted_mean of an empty list")
    vals = np.array([v for v, _ in values], dtype=np.float64)
    errs = np.array([e for _, e in values], dtype=np.float64)
    if np.any(errs < 0):
        raise InputError("standard errors must be nonnegative")
    if np.all(errs == 0):
        return float(vals.mean()), 0.0
    if np.any(errs == 0):
        raise InputError("cannot mix zero and nonzero standard errors")
    weights = errs**-2.0
    total = weights.sum()
    return float((weights * vals).sum() / total), float(total**-0.5)
