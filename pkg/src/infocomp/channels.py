"""Ensemble channel-similarity pipeline.

Every latent dimension (channel) of every model in an ensemble is
fingerprinted on a shared data sample, channels transmitting less than a
threshold of information are dropped, and the remaining channels are
compared pairwise with the generalized NMI.  The resulting matrix, read as
a distance via -log(max(NMI, 1e-4)), is ordered by OPTICS; groups are cut
out of the reachability profile by xi-steepness extraction, and each group
is summarized by the member that maximizes mean similarity to the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.cluster import cluster_optics_xi, compute_optics_graph

from . import similarity
from .core import HardClustering, PosteriorSet, fingerprint_gaussian, fingerprint_hard, marginal_channel
from .errors import AlignmentError, ConfigurationError, InputError
from .estimators import info_kt

LN2 = math.log(2.0)

#: Row-block size for the pairwise kernel; fixed so that accumulation order
#: (and hence the result, bit for bit) does not depend on the thread count.
_PAIRWISE_BLOCK = 64


@dataclass(frozen=True)
class ChannelRef:
    """One latent dimension of one model."""

    model_id: str
    dim: int

    def __post_init__(self):
        if self.dim < 0:
            raise InputError("channel dim must be >= 0")

    @property
    def label(self) -> str:
        return f"{self.model_id}[{self.dim}]"


@dataclass
class SimilarityMatrix:
    """Pairwise channel similarities (or distances) with their channel refs."""

    values: np.ndarray
    refs: list[ChannelRef]
    measure: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        m = len(self.refs)
        if self.values.shape != (m, m):
            raise InputError(f"expected a {m}x{m} matrix for {m} refs")
        if not np.allclose(self.values, self.values.T, rtol=0.0, atol=1e-8):
            raise InputError("similarity matrix must be symmetric")
        diag = np.diagonal(self.values)
        if self.is_distance:
            if not np.all(diag == 0.0):
                raise InputError("distance matrices must have a zero diagonal")
        elif not np.all(diag == 1.0):
            raise InputError("similarity matrices must have a unit diagonal")

    @property
    def is_distance(self) -> bool:
        return self.measure == "vi" or self.measure.endswith("_distance")

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass
class OpticsResult:
    """OPTICS ordering and reachability, plus extracted groups once cut.

    ``reachability`` is indexed by channel; the first element of the
    ordering carries the +inf sentinel.  Groups are contiguous runs in the
    ordering; channels in no valley stay ungrouped (noise).
    """

    ordering: np.ndarray
    reachability: np.ndarray
    core_distances: np.ndarray
    predecessor: np.ndarray
    min_samples: int
    xi: float = None
    groups: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        self.ordering = np.asarray(self.ordering, dtype=np.int64)
        m = self.ordering.size
        if sorted(self.ordering.tolist()) != list(range(m)):
            raise InputError("ordering must be a permutation")
        if not math.isinf(self.reachability[self.ordering[0]]):
            raise InputError("reachability of the first ordered element must be +inf")

    @property
    def params(self) -> tuple[int, float]:
        return (self.min_samples, self.xi)

    def reachability_profile(self) -> np.ndarray:
        """Reachability in ordering order (what one would plot)."""
        return self.reachability[self.ordering]


def collect_channels(ensemble: list[PosteriorSet], threads: int = 1):
    """One 1-D fingerprint per (model, dim) across the ensemble."""
    ensemble = list(ensemble)
    if not ensemble:
        raise InputError("empty ensemble")
    ids = ensemble[0].sample_ids
    for s in ensemble[1:]:
        if s.sample_ids != ids:
            raise AlignmentError("all ensemble members must share sample ids")
    out = []
    for space in ensemble:
        for dim in range(space.dim):
            fp = fingerprint_gaussian(marginal_channel(space, dim), threads=threads)
            out.append((ChannelRef(model_id=space.space_id, dim=dim), fp))
    return out


def filter_informative(channels, threshold_bits: float = 0.01):
    """Keep channels transmitting at least ``threshold_bits`` (inclusive)."""
    if threshold_bits < 0:
        raise InputError("threshold must be >= 0")
    return [(ref, fp) for ref, fp in channels if info_kt(fp).bits >= threshold_bits]


def channel_info_bits(channels) -> np.ndarray:
    """Fingerprint-bound information (bits) per channel."""
    return np.array([info_kt(fp).bits for _, fp in channels])


def pairwise_similarity(channels, measure: str = "nmi") -> SimilarityMatrix:
    """Pairwise generalized NMI (or VI) between channels.

    The joint terms for all pairs are accumulated from row-wise Gram
    matrices so the kernel stays BLAS-bound; results match the two-argument
    measures in :mod:`infocomp.similarity`.
    """
    channels = list(channels)
    m = len(channels)
    if m < 2:
        raise InputError("pairwise similarity needs at least 2 channels")
    if measure not in ("nmi", "vi"):
        raise InputError(f"unsupported pairwise measure {measure!r}")
    ids = channels[0][1].sample_ids
    for _, fp in channels[1:]:
        if fp.sample_ids != ids:
            raise AlignmentError("all channel fingerprints must share sample ids")
    n = channels[0][1].n

    stack = np.stack([fp.values for _, fp in channels])  # (m, n, n)
    t_single = -np.log(stack.mean(axis=2)).mean(axis=1) / LN2
    t_self_joint = -np.log((stack * stack).mean(axis=2)).mean(axis=1) / LN2
    self_info = 2.0 * t_single - t_self_joint
    if measure == "nmi" and self_info.min() < similarity.ZERO_INFO_BITS:
        raise InputError(
            "a channel has (near-)zero self-information; run filter_informative first"
        )

    # sum over rows r of log((1/n) * sum_c F_i[r, c] * F_j[r, c]) for all pairs
    acc = np.zeros((m, m))
    for lo in range(0, n, _PAIRWISE_BLOCK):
        hi = min(lo + _PAIRWISE_BLOCK, n)
        for r in range(lo, hi):
            rows = stack[:, r, :]
            acc += np.log(rows @ rows.T / n)
    t_joint = -acc / (n * LN2)
    upper = np.triu(t_joint, 1)
    t_joint = upper + upper.T  # exact symmetry; diagonal overwritten below

    if measure == "nmi":
        num = (t_single[:, None] + t_single[None, :]) - t_joint
        den = np.sqrt(np.outer(self_info, self_info))
        values = num / den
        np.fill_diagonal(values, 1.0)
    else:
        values = 2.0 * t_joint - (t_self_joint[:, None] + t_self_joint[None, :])
        np.fill_diagonal(values, 0.0)
    return SimilarityMatrix(values, refs=[ref for ref, _ in channels], measure=measure)


def to_distance_matrix(sim: SimilarityMatrix) -> SimilarityMatrix:
    """NMI matrix -> distance matrix via -log(max(NMI, 1e-4))."""
    if sim.measure != "nmi":
        raise InputError("distance transform expects an nmi similarity matrix")
    values = -np.log(np.maximum(sim.values, similarity.NMI_DISTANCE_FLOOR))
    np.fill_diagonal(values, 0.0)
    return SimilarityMatrix(values, refs=list(sim.refs), measure="nmi_distance")


def optics_order(dist: SimilarityMatrix, min_samples: int = 20) -> OpticsResult:
    """OPTICS ordering and reachability over a precomputed distance matrix.

    Equal-reachability candidates are processed lowest index first; the
    first element of each connected component carries the +inf sentinel.
    """
    if not dist.is_distance:
        raise InputError("optics_order expects a distance matrix")
    if min_samples < 2:
        raise InputError("min_samples must be >= 2")
    if dist.n < min_samples:
        raise ConfigurationError(
            f"{dist.n} channels but min_samples={min_samples}; "
            f"lower min_samples to at most {dist.n}"
        )
    if np.any(dist.values < 0):
        raise InputError("distances must be nonnegative")
    ordering, core_distances, reachability, predecessor = compute_optics_graph(
        X=dist.values,
        min_samples=min_samples,
        max_eps=np.inf,
        metric="precomputed",
        p=2,
        metric_params=None,
        algorithm="auto",
        leaf_size=30,
        n_jobs=None,
    )
    return OpticsResult(
        ordering=ordering,
        reachability=reachability,
        core_distances=core_distances,
        predecessor=predecessor,
        min_samples=min_samples,
    )


def extract_groups(result: OpticsResult, xi: float = 0.05) -> list[list[int]]:
    """Cut groups out of the reachability profile by xi-steepness.

    Minimum group size equals ``min_samples``.  Returns disjoint groups of
    channel indices, each contiguous in the ordering; ungrouped channels are
    noise.
    """
    if not 0.0 < xi < 1.0:
        raise InputError("xi must lie in (0, 1)")
    labels, _ = cluster_optics_xi(
        reachability=result.reachability,
        predecessor=result.predecessor,
        ordering=result.ordering,
        min_samples=result.min_samples,
        min_cluster_size=None,
        xi=xi,
    )
    groups = []
    for k in range(labels.max() + 1):
        members = sorted(np.flatnonzero(labels == k).tolist())
        # a group spanning every channel is an artifact of the +inf start
        # sentinel, not a valley; a valley-free profile yields no groups
        if len(members) < result.ordering.size:
            groups.append(members)
    return groups


def with_groups(result: OpticsResult, groups, xi: float) -> OpticsResult:
    return replace(result, groups=[list(g) for g in groups], xi=xi)


def representative(group, sim: SimilarityMatrix) -> ChannelRef:
    """Group member maximizing mean similarity to the others (ties: lowest index)."""
    members = sorted(group)
    if not members:
        raise InputError("empty group")
    if len(members) == 1:
        return sim.refs[members[0]]
    sub = sim.values[np.ix_(members, members)]
    mean_to_others = (sub.sum(axis=1) - np.diagonal(sub)) / (len(members) - 1)
    return sim.refs[members[int(np.argmax(mean_to_others))]]


def factor_info_column(channels, factor: HardClustering, measure: str = "nmi") -> np.ndarray:
    """Per-channel similarity against a ground-truth factor (hard clustering)."""
    channels = list(channels)
    if not channels:
        raise InputError("no channels")
    ids = channels[0][1].sample_ids
    if factor.sample_ids is not None and factor.sample_ids != ids:
        raise AlignmentError("factor must be defined on the channels' sample ids")
    factor_fp = fingerprint_hard(factor, sample_ids=ids, space_id="factor")
    fn = similarity.nmi if measure == "nmi" else similarity.vi
    out = np.empty(len(channels))
    for i, (_, fp) in enumerate(channels):
        s = fn(fp, factor_fp)
        out[i] = float("nan") if s.undefined else s.value
    return out


@dataclass
class ChannelPipelineResult:
    """Everything the channel pipeline produces for one ensemble."""

    refs: list[ChannelRef]
    info_bits: np.ndarray
    similarity_matrix: SimilarityMatrix = None
    optics: OpticsResult = None
    groups: list[list[int]] = field(default_factory=list)
    representatives: list[ChannelRef] = field(default_factory=list)
    factor_columns: dict = field(default_factory=dict)


def run_pipeline(
    ensemble,
    threshold_bits: float = 0.01,
    min_samples: int = 20,
    xi: float = 0.05,
    factors: dict = None,
    threads: int = 1,
) -> ChannelPipelineResult:
    """Full channel pipeline: fingerprint, filter, compare, order, group.

    With fewer than two informative channels the result is empty but valid
    (a data outcome, not an error).
    """
    channels = collect_channels(ensemble, threads=threads)
    kept = filter_informative(channels, threshold_bits)
    result = ChannelPipelineResult(
        refs=[ref for ref, _ in kept], info_bits=channel_info_bits(kept)
    )
    if len(kept) < 2:
        return result
    sim = pairwise_similarity(kept, measure="nmi")
    optics = optics_order(to_distance_matrix(sim), min_samples=min_samples)
    groups = extract_groups(optics, xi=xi)
    result.similarity_matrix = sim
    result.optics = with_groups(optics, groups, xi)
    result.groups = groups
    result.representatives = [representative(g, sim) for g in groups]
    if factors:
        for name, factor in factors.items():
            result.factor_columns[name] = factor_info_column(kept, factor)
    return result
