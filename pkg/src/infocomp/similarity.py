"""Similarity and difference measures between representation spaces.

The generalized forms replace the entropy of a clustering with the
information between two independent draws of the same space:

    NMI(U, V) = I(U;V) / sqrt(I(U;U') * I(V;V'))
    VI(U, V)  = 2*I(X;U,V) - I(X;U,U') - I(X;V,V')

with each information term expanded against the data via conditional
independence: I(U;V) = I(X;U) + I(X;V) - I(X;U,V) and
I(U;U') = 2*I(X;U) - I(X;U,U').  Joint terms come from elementwise
fingerprint products (deterministic route), Monte Carlo draws, or exact
joint tables for discrete clusterings.

Values a hair above 1 (NMI) or below 0 (VI) can occur for stochastic
estimators and are reported unclamped with their standard error; the
``clamped`` accessor caps to the nominal range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import estimators as est
from .core import Fingerprint, HardClustering, _require_aligned
from .errors import AlignmentError, InputError

LN2 = math.log(2.0)

#: Self-information (bits) below which a normalized measure is undefined.
ZERO_INFO_BITS = 1e-12

#: Floor inside the NMI -> distance transform.
NMI_DISTANCE_FLOOR = 1e-4

_UNDEFINED_NOTE = "self-information below {:.0e} bits".format(ZERO_INFO_BITS)


@dataclass
class SimilarityValue:
    """A similarity/difference value with standard error and provenance.

    ``measure`` is one of nmi, vi, cka_bc, mi; ``estimator`` uses the
    information-estimator tags.  ``undefined`` marks the not-a-number
    sentinel produced instead of dividing by a near-zero self-information.
    """

    value: float
    std_err: float
    measure: str
    estimator: str
    undefined: bool = False
    note: str = ""

    @property
    def clamped(self) -> float:
        """Value capped to the measure's nominal range."""
        if self.undefined:
            return float("nan")
        if self.measure in ("nmi", "cka_bc"):
            return min(max(self.value, 0.0), 1.0)
        if self.measure == "vi":
            return max(self.value, 0.0)
        return self.value


def _undefined(measure: str, estimator: str) -> SimilarityValue:
    return SimilarityValue(
        value=float("nan"),
        std_err=0.0,
        measure=measure,
        estimator=estimator,
        undefined=True,
        note=_UNDEFINED_NOTE,
    )


def _kt_bits(values: np.ndarray) -> float:
    return float(-np.log(values.mean(axis=1)).mean() / LN2)


def _kt_terms(f_u: Fingerprint, f_v: Fingerprint):
    """The five fingerprint-route information terms (bits)."""
    _require_aligned(f_u, f_v)
    t_u = _kt_bits(f_u.values)
    t_v = _kt_bits(f_v.values)
    t_uv = _kt_bits(f_u.values * f_v.values)
    t_uu = _kt_bits(f_u.values * f_u.values)
    t_vv = _kt_bits(f_v.values * f_v.values)
    return t_u, t_v, t_uv, t_uu, t_vv


def mi(f_u: Fingerprint, f_v: Fingerprint) -> SimilarityValue:
    """Fingerprint-route estimate of I(U;V) in bits (unnormalized)."""
    t_u, t_v, t_uv, _, _ = _kt_terms(f_u, f_v)
    return SimilarityValue(
        value=(t_u + t_v) - t_uv, std_err=0.0, measure="mi", estimator=est.KT_BOUND
    )


def nmi(f_u: Fingerprint, f_v: Fingerprint) -> SimilarityValue:
    """Generalized NMI of two fingerprints (deterministic fingerprint route)."""
    t_u, t_v, t_uv, t_uu, t_vv = _kt_terms(f_u, f_v)
    self_u = 2.0 * t_u - t_uu
    self_v = 2.0 * t_v - t_vv
    if self_u < ZERO_INFO_BITS or self_v < ZERO_INFO_BITS:
        return _undefined("nmi", est.KT_BOUND)
    num = (t_u + t_v) - t_uv
    return SimilarityValue(
        value=num / math.sqrt(self_u * self_v),
        std_err=0.0,
        measure="nmi",
        estimator=est.KT_BOUND,
    )


def vi(f_u: Fingerprint, f_v: Fingerprint) -> SimilarityValue:
    """Generalized VI (bits) of two fingerprints (fingerprint route)."""
    _, _, t_uv, t_uu, t_vv = _kt_terms(f_u, f_v)
    return SimilarityValue(
        value=2.0 * t_uv - (t_uu + t_vv),
        std_err=0.0,
        measure="vi",
        estimator=est.KT_BOUND,
    )


def _mc_terms(u, v, cfg: est.McConfig):
    """Five Monte Carlo estimates with independent substreams of cfg.seed."""
    seeds = [int(s) for s in np.random.SeedSequence(cfg.seed).generate_state(5, dtype=np.uint64)]
    sub = [
        est.McConfig(n_samples=cfg.n_samples, agg_fraction=cfg.agg_fraction, seed=s)
        for s in seeds
    ]
    a = est.info_mc(u, sub[0])
    b = est.info_mc(v, sub[1])
    c = est.info_mc_joint([u, v], sub[2])
    d = est.info_mc_joint([u, u], sub[3])
    e = est.info_mc_joint([v, v], sub[4])
    return a, b, c, d, e


def nmi_mc(u, v, cfg: est.McConfig) -> SimilarityValue:
    """Monte Carlo NMI; the standard error is a first-order delta-method
    approximation over the five constituent estimates treated as independent."""
    a, b, c, d, e = _mc_terms(u, v, cfg)
    g = 2.0 * a.bits - d.bits
    h = 2.0 * b.bits - e.bits
    if g < ZERO_INFO_BITS or h < ZERO_INFO_BITS:
        return _undefined("nmi", est.MONTE_CARLO)
    num = (a.bits + b.bits) - c.bits
    den = math.sqrt(g * h)
    value = num / den
    # partials of num/sqrt(g*h) w.r.t. the five estimates
    da = (1.0 - num / g) / den
    db = (1.0 - num / h) / den
    dc = -1.0 / den
    dd = num / (2.0 * g) / den
    de = num / (2.0 * h) / den
    var = (
        (da * a.std_err) ** 2
        + (db * b.std_err) ** 2
        + (dc * c.std_err) ** 2
        + (dd * d.std_err) ** 2
        + (de * e.std_err) ** 2
    )
    return SimilarityValue(
        value=value, std_err=math.sqrt(var), measure="nmi", estimator=est.MONTE_CARLO
    )


def vi_mc(u, v, cfg: est.McConfig) -> SimilarityValue:
    """Monte Carlo VI (bits) with sum-of-squares error propagation."""
    _, _, c, d, e = _mc_terms(u, v, cfg)
    value = 2.0 * c.bits - (d.bits + e.bits)
    std_err = est.propagate_vi_error(c.std_err, d.std_err, e.std_err)
    return SimilarityValue(
        value=value, std_err=std_err, measure="vi", estimator=est.MONTE_CARLO
    )


def _exact_terms(u, v):
    a = est.info_exact_discrete([u])
    b = est.info_exact_discrete([v])
    c = est.info_exact_discrete([u, v])
    d = est.info_exact_discrete([u, u])
    e = est.info_exact_discrete([v, v])
    return a.bits, b.bits, c.bits, d.bits, e.bits


def nmi_exact(u, v) -> SimilarityValue:
    """Exact generalized NMI for finite discrete (hard or soft) clusterings."""
    a, b, c, d, e = _exact_terms(u, v)
    g = 2.0 * a - d
    h = 2.0 * b - e
    if g < ZERO_INFO_BITS or h < ZERO_INFO_BITS:
        return _undefined("nmi", est.EXACT_DISCRETE)
    num = (a + b) - c
    return SimilarityValue(
        value=num / math.sqrt(g * h),
        std_err=0.0,
        measure="nmi",
        estimator=est.EXACT_DISCRETE,
    )


def vi_exact(u, v) -> SimilarityValue:
    """Exact generalized VI (bits) for finite discrete clusterings."""
    _, _, c, d, e = _exact_terms(u, v)
    return SimilarityValue(
        value=2.0 * c - (d + e),
        std_err=0.0,
        measure="vi",
        estimator=est.EXACT_DISCRETE,
    )


def _contingency(a: HardClustering, b: HardClustering):
    if a.n != b.n:
        raise AlignmentError("clusterings must cover the same number of points")
    counts = np.zeros((a.n_clusters, b.n_clusters))
    np.add.at(counts, (a.labels, b.labels), 1.0)
    p = counts / a.n
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)
    mask = p > 0
    info = float(
        (p[mask] * np.log(p[mask] / np.outer(pa, pb)[mask])).sum() / LN2
    )
    h_a = float(-(pa[pa > 0] * np.log(pa[pa > 0])).sum() / LN2)
    h_b = float(-(pb[pb > 0] * np.log(pb[pb > 0])).sum() / LN2)
    return info, h_a, h_b


def nmi_hard(a: HardClustering, b: HardClustering) -> SimilarityValue:
    """Classic contingency-table NMI: I / sqrt(H(U) * H(V))."""
    info, h_a, h_b = _contingency(a, b)
    if h_a < ZERO_INFO_BITS or h_b < ZERO_INFO_BITS:
        return _undefined("nmi", est.EXACT_DISCRETE)
    return SimilarityValue(
        value=info / math.sqrt(h_a * h_b),
        std_err=0.0,
        measure="nmi",
        estimator=est.EXACT_DISCRETE,
    )


def vi_hard(a: HardClustering, b: HardClustering) -> SimilarityValue:
    """Classic contingency-table VI (bits): H(U) + H(V) - 2*I."""
    info, h_a, h_b = _contingency(a, b)
    return SimilarityValue(
        value=(h_a + h_b) - 2.0 * info,
        std_err=0.0,
        measure="vi",
        estimator=est.EXACT_DISCRETE,
    )


def _centered(values: np.ndarray) -> np.ndarray:
    # double centering H B H written in a form that keeps bit symmetry
    row_means = values.mean(axis=1)
    return values - (row_means[:, None] + row_means[None, :]) + values.mean()


def cka_bc(f_u: Fingerprint, f_v: Fingerprint) -> SimilarityValue:
    """CKA with fingerprints in place of dot-product similarity matrices.

    HSIC(B1, B2) = Tr(B1 H B2 H) / (n-1)^2 with H the centering matrix; the
    value is HSIC(B1, B2) normalized by the geometric mean of the self
    terms.  Constant fingerprints have zero self-HSIC and yield the
    undefined sentinel.
    """
    _require_aligned(f_u, f_v)
    n = f_u.n
    c1 = _centered(f_u.values)
    c2 = _centered(f_v.values)
    scale = 1.0 / (n - 1) ** 2
    h12 = float(np.vdot(c1, c2)) * scale
    h11 = float(np.vdot(c1, c1)) * scale
    h22 = float(np.vdot(c2, c2)) * scale
    if h11 <= 0.0 or h22 <= 0.0:
        return _undefined("cka_bc", est.KT_BOUND)
    return SimilarityValue(
        value=h12 / math.sqrt(h11 * h22),
        std_err=0.0,
        measure="cka_bc",
        estimator=est.KT_BOUND,
    )


def to_distance(s: SimilarityValue) -> float:
    """NMI -> distance transform: -log(max(NMI, 1e-4)); sentinel propagates."""
    if s.measure != "nmi":
        raise InputError(f"to_distance expects an nmi value, got {s.measure!r}")
    if s.undefined:
        return float("nan")
    return -math.log(max(s.value, NMI_DISTANCE_FLOOR))


def to_similarity(s: SimilarityValue) -> float:
    """VI -> similarity transform: exp(-VI); sentinel propagates."""
    if s.measure != "vi":
        raise InputError(f"to_similarity expects a vi value, got {s.measure!r}")
    if s.undefined:
        return float("nan")
    return math.exp(-s.value)
