"""Domain types and fingerprint algebra.

A probabilistic representation space is summarized here by the posterior
parameters of a fixed data sample (:class:`PosteriorSet`) and by its
*fingerprint*: the symmetric matrix of pairwise Bhattacharyya coefficients
between those posteriors (:class:`Fingerprint`).  Hard and discrete soft
clusterings produce fingerprints of their own, and fingerprints of jointly
observed spaces combine by elementwise product.

All Bhattacharyya values for diagonal Gaussians are accumulated in
log-space per dimension and exponentiated once, so far-separated posteriors
underflow gracefully instead of losing precision early.  No flooring or
clamping is applied to off-diagonal entries.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, DimensionMismatchError, InputError

_SYMMETRY_ATOL = 1e-6  # interchange tolerance; computed paths are bit-symmetric


def default_ids(n: int) -> list[str]:
    """Positional sample identifiers "0", "1", ... used when none are given."""
    return [str(i) for i in range(n)]


@dataclass
class GaussianPosterior:
    """A diagonal-covariance Gaussian posterior in a d-dimensional latent space."""

    mean: np.ndarray
    stddev: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        self.stddev = np.atleast_1d(np.asarray(self.stddev, dtype=np.float64))
        if self.mean.ndim != 1 or self.stddev.ndim != 1:
            raise InputError("mean and stddev must be 1-D vectors")
        if self.mean.shape != self.stddev.shape:
            raise DimensionMismatchError(
                f"mean has length {self.mean.size}, stddev has length {self.stddev.size}"
            )
        if self.mean.size < 1:
            raise InputError("posterior dimension must be >= 1")
        if not np.all(np.isfinite(self.mean)) or not np.all(np.isfinite(self.stddev)):
            raise InputError("posterior parameters must be finite")
        if np.any(self.stddev <= 0):
            raise InputError("stddev components must be strictly positive")

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass
class PosteriorSet:
    """Per-datum diagonal-Gaussian posteriors for a fixed sample of N data points.

    ``means`` and ``stddevs`` are (N, d) arrays; row i is the posterior of the
    datum named ``sample_ids[i]``.  ``space_id`` labels the representation
    space (model id plus optional channel index).
    """

    means: np.ndarray
    stddevs: np.ndarray
    sample_ids: list[str] = field(default=None)
    space_id: str = "space"

    def __post_init__(self):
        self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        self.stddevs = np.atleast_2d(np.asarray(self.stddevs, dtype=np.float64))
        if self.means.shape != self.stddevs.shape:
            raise DimensionMismatchError(
                f"means shape {self.means.shape} != stddevs shape {self.stddevs.shape}"
            )
        n, d = self.means.shape
        if n < 2:
            raise InputError("a posterior set needs at least 2 data points")
        if d < 1:
            raise InputError("latent dimension must be >= 1")
        if self.sample_ids is None:
            self.sample_ids = default_ids(n)
        self.sample_ids = [str(s) for s in self.sample_ids]
        if len(self.sample_ids) != n:
            raise InputError(f"{len(self.sample_ids)} sample ids for {n} posteriors")
        if len(set(self.sample_ids)) != n:
            raise InputError("sample ids must be unique")
        if not np.all(np.isfinite(self.means)) or not np.all(np.isfinite(self.stddevs)):
            raise InputError("posterior parameters must be finite")
        if np.any(self.stddevs <= 0):
            raise InputError("stddev entries must be strictly positive")

    @property
    def n(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def posterior(self, i: int) -> GaussianPosterior:
        return GaussianPosterior(self.means[i], self.stddevs[i])

    @classmethod
    def from_posteriors(cls, posteriors, sample_ids=None, space_id="space"):
        dims = {p.dim for p in posteriors}
        if len(dims) != 1:
            raise DimensionMismatchError("all posteriors must share the same dimension")
        means = np.stack([p.mean for p in posteriors])
        stddevs = np.stack([p.stddev for p in posteriors])
        return cls(means, stddevs, sample_ids=sample_ids, space_id=space_id)


@dataclass
class HardClustering:
    """Assignment of each datum to exactly one of ``n_clusters`` clusters."""

    labels: np.ndarray
    n_clusters: int = None
    sample_ids: list[str] = field(default=None)

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        if self.labels.ndim != 1:
            raise InputError("labels must be a 1-D integer array")
        if not np.issubdtype(self.labels.dtype, np.integer):
            as_int = self.labels.astype(np.int64)
            if not np.array_equal(as_int, self.labels):
                raise InputError("labels must be integers")
            self.labels = as_int
        else:
            self.labels = self.labels.astype(np.int64)
        if self.n_clusters is None:
            self.n_clusters = int(self.labels.max()) + 1 if self.labels.size else 0
        if np.any(self.labels < 0) or np.any(self.labels >= self.n_clusters):
            raise InputError(f"labels must lie in [0, {self.n_clusters})")
        if self.sample_ids is not None:
            self.sample_ids = [str(s) for s in self.sample_ids]
            if len(self.sample_ids) != self.labels.size:
                raise InputError("sample_ids length must match labels")

    @property
    def n(self) -> int:
        return self.labels.size

    def memberships(self) -> np.ndarray:
        """One-hot membership matrix, the hard clustering seen as a soft one."""
        out = np.zeros((self.n, self.n_clusters))
        out[np.arange(self.n), self.labels] = 1.0
        return out


@dataclass
class DiscreteSoftClustering:
    """Fuzzy clustering over K discrete clusters: each row is a membership
    distribution that must sum to one."""

    memberships: np.ndarray
    sample_ids: list[str] = field(default=None)

    def __post_init__(self):
        self.memberships = np.atleast_2d(np.asarray(self.memberships, dtype=np.float64))
        if self.memberships.ndim != 2:
            raise InputError("memberships must be an N x K matrix")
        if np.any(self.memberships < 0):
            raise InputError("memberships must be nonnegative")
        row_sums = self.memberships.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-12):
            worst = int(np.argmax(np.abs(row_sums - 1.0)))
            raise InputError(
                f"membership rows must sum to 1 within 1e-12 (row {worst} sums to {row_sums[worst]!r})"
            )
        if self.sample_ids is not None:
            self.sample_ids = [str(s) for s in self.sample_ids]
            if len(self.sample_ids) != self.memberships.shape[0]:
                raise InputError("sample_ids length must match memberships")

    @property
    def n(self) -> int:
        return self.memberships.shape[0]

    @property
    def n_clusters(self) -> int:
        return self.memberships.shape[1]


@dataclass
class Fingerprint:
    """N x N matrix of pairwise Bhattacharyya coefficients for one space.

    Invariants checked on construction: symmetric (within the f32
    interchange tolerance; computed paths are bit-symmetric), entries in
    [0, 1], and a diagonal of exactly 1.
    """

    values: np.ndarray
    sample_ids: list[str] = field(default=None)
    space_id: str = "space"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise InputError("fingerprint values must be a square matrix")
        n = self.values.shape[0]
        if self.sample_ids is None:
            self.sample_ids = default_ids(n)
        self.sample_ids = [str(s) for s in self.sample_ids]
        if len(self.sample_ids) != n:
            raise InputError(f"{len(self.sample_ids)} sample ids for {n} rows")
        if len(set(self.sample_ids)) != n:
            raise InputError("sample ids must be unique")
        if not np.all(np.isfinite(self.values)):
            raise InputError("fingerprint entries must be finite")
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise InputError("fingerprint entries must lie in [0, 1]")
        diag = np.diagonal(self.values)
        if not np.all(diag == 1.0):
            raise InputError("fingerprint diagonal must be exactly 1")
        if not np.allclose(self.values, self.values.T, rtol=0.0, atol=_SYMMETRY_ATOL):
            raise InputError("fingerprint must be symmetric")

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _require_aligned(a, b):
    if a.sample_ids != b.sample_ids:
        raise AlignmentError(
            f"fingerprints describe different samples "
            f"({a.space_id!r} vs {b.space_id!r}); sample ids must match in order"
        )


def bc_gaussian(p: GaussianPosterior, q: GaussianPosterior) -> float:
    """Bhattacharyya coefficient between two diagonal Gaussians.

    Per dimension k the coefficient is
    sqrt(2*s1*s2 / (s1^2 + s2^2)) * exp(-(m1 - m2)^2 / (4*(s1^2 + s2^2)));
    the total is the product over dimensions, accumulated in log-space.
    """
    if p.dim != q.dim:
        raise DimensionMismatchError(f"dimension mismatch: {p.dim} vs {q.dim}")
    s2 = p.stddev * p.stddev + q.stddev * q.stddev
    log_bc = 0.5 * np.log(2.0 * p.stddev * q.stddev / s2)
    dm = p.mean - q.mean
    log_bc -= dm * dm / (4.0 * s2)
    return float(np.exp(log_bc.sum()))


def _log_bc_rows(means, stddevs, row_slice, out):
    """Accumulate per-dimension log-BC terms for a block of rows (in place)."""
    d = means.shape[1]
    for k in range(d):
        s = stddevs[:, k]
        s2 = s * s
        cross = s2[row_slice, None] + s2[None, :]
        out += 0.5 * np.log(2.0 * s[row_slice, None] * s[None, :] / cross)
        dm = means[row_slice, None, k] - means[None, :, k]
        out -= dm * dm / (4.0 * cross)


def bc_matrix(means: np.ndarray, stddevs: np.ndarray, threads: int = 1) -> np.ndarray:
    """Pairwise Bhattacharyya coefficients for (N, d) posterior parameters.

    With ``threads > 1`` the row blocks are computed in parallel; every entry
    depends only on its own pair, so the result is identical for any thread
    count.
    """
    n = means.shape[0]
    log_bc = np.zeros((n, n))
    if threads is None or threads <= 1 or n < 64:
        _log_bc_rows(means, stddevs, slice(0, n), log_bc)
    else:
        bounds = np.linspace(0, n, threads + 1).astype(int)
        slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=len(slices)) as pool:
            list(pool.map(lambda s: _log_bc_rows(means, stddevs, s, log_bc[s]), slices))
    values = np.exp(log_bc)
    np.fill_diagonal(values, 1.0)
    return values


def fingerprint_gaussian(space: PosteriorSet, threads: int = 1) -> Fingerprint:
    """Fingerprint of a Gaussian posterior set: values[i, j] = BC(p_i, p_j)."""
    values = bc_matrix(space.means, space.stddevs, threads=threads)
    return Fingerprint(values, sample_ids=list(space.sample_ids), space_id=space.space_id)


def fingerprint_hard(labels: HardClustering, sample_ids=None, space_id="hard") -> Fingerprint:
    """Fingerprint of a hard clustering: 1 for same-cluster pairs, else 0."""
    if sample_ids is None:
        sample_ids = labels.sample_ids
    values = (labels.labels[:, None] == labels.labels[None, :]).astype(np.float64)
    return Fingerprint(values, sample_ids=sample_ids, space_id=space_id)


def fingerprint_discrete_soft(
    clust: DiscreteSoftClustering, sample_ids=None, space_id="soft"
) -> Fingerprint:
    """Fingerprint of a discrete soft clustering: BC_ij = sum_k sqrt(m_ik * m_jk)."""
    if sample_ids is None:
        sample_ids = clust.sample_ids
    root = np.sqrt(clust.memberships)
    values = root @ root.T
    # matmul output is not guaranteed bit-symmetric; mirror the upper triangle
    values = np.triu(values, 1)
    values = values + values.T
    # rounding in the dot products can overshoot the mathematical bound of 1
    # by an ulp or two; cap at 1 (values below 1 are kept as computed)
    np.minimum(values, 1.0, out=values)
    np.fill_diagonal(values, 1.0)
    return Fingerprint(values, sample_ids=sample_ids, space_id=space_id)


def fingerprint_product(a: Fingerprint, b: Fingerprint) -> Fingerprint:
    """Fingerprint of the jointly observed pair of spaces: elementwise product.

    Applying it to a fingerprint and itself yields the two-independent-draws
    self-joint of that space.
    """
    _require_aligned(a, b)
    values = a.values * b.values
    return Fingerprint(
        values, sample_ids=list(a.sample_ids), space_id=f"({a.space_id}*{b.space_id})"
    )


def marginal_channel(space: PosteriorSet, dim: int) -> PosteriorSet:
    """One latent dimension of a space as a 1-D posterior set."""
    if not 0 <= dim < space.dim:
        raise InputError(f"dim {dim} out of range for a {space.dim}-dimensional space")
    return PosteriorSet(
        space.means[:, [dim]],
        space.stddevs[:, [dim]],
        sample_ids=list(space.sample_ids),
        space_id=f"{space.space_id}[{dim}]",
    )
