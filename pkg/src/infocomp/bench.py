"""Synthetic generators and evaluation metrics for desk-scale validation.

* ``gen_nine_space_suite`` — nine small representation spaces of one
  ordered dataset: an information-equivalent trio of beaded chains under
  different geometries (line / arc / warped), noisy and coarse variants, a
  shuffled control, and two-group / four-group splits.
* ``gen_so2_weak`` — a simulated weak learner squeezing a circular factor
  into a 1-D interval, with a seed-random cut where the circle is torn.
* ``gen_planted_channels`` — an ensemble with known channel groups for
  validating the channel pipeline end to end.
* ``continuity`` — the max-over-90th-percentile ratio of representation
  distance (Bhattacharyya distance between posteriors) to data distance
  along a cyclic order; lower is better.
* ``group_agreement`` — adjusted Rand index of recovered vs planted groups,
  with ungrouped channels counted as singletons.

All generators are deterministic given their seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import adjusted_rand_score

from .core import DiscreteSoftClustering, HardClustering, PosteriorSet
from .errors import InputError


@dataclass
class GeneratorSpec:
    """Declarative description of a synthetic generator run (used by the CLI)."""

    kind: str
    n_points: int = 64
    seed: int = 0
    params: dict = field(default_factory=dict)

    _KINDS = ("nine_space_suite", "so2_weak", "planted_channels", "separated_gaussians")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise InputError(f"kind must be one of {self._KINDS}")
        if self.n_points < 4:
            raise InputError("n_points must be >= 4")
        for key, value in self.params.items():
            if key in ("noise", "separation", "xi") and value <= 0:
                raise InputError(f"{key} must be positive")


def generate(spec: GeneratorSpec) -> dict:
    """Dispatch a GeneratorSpec to its generator; returns a dict of artifacts."""
    if spec.kind == "nine_space_suite":
        return {"spaces": gen_nine_space_suite(n=spec.n_points, seed=spec.seed)}
    if spec.kind == "so2_weak":
        space, angles = gen_so2_weak(n=spec.n_points, seed=spec.seed, **spec.params)
        return {"space": space, "angles": angles}
    if spec.kind == "planted_channels":
        ensemble, assignment = gen_planted_channels(
            seed=spec.seed, n_points=spec.n_points, **spec.params
        )
        return {"ensemble": ensemble, "assignment": assignment}
    space = gen_separated_gaussians(seed=spec.seed, **spec.params)
    return {"space": space}


def _beaded_positions(n: int, n_beads: int, bead_spacing: float, within: float):
    """1-D chain of `n_beads` tight clusters covering n points in order."""
    per = n // n_beads
    bead = np.arange(n) // per
    offset = (np.arange(n) % per) - (per - 1) / 2.0
    return bead_spacing * bead + within * offset, bead


def gen_nine_space_suite(n: int = 64, seed: int = 0) -> dict[str, PosteriorSet]:
    """Nine labeled spaces over one ordered dataset of n points.

    i / iv / vi form the information-equivalent trio: the same beaded chain
    (16 tight clusters of neighbors) laid out on a line, on an arc, and on a
    nonuniformly stretched line whose stddevs grow with the local stretch,
    which leaves every pairwise Bhattacharyya coefficient invariant.
    ii jitters the chain, iii coarsens it to 8 beads, v shuffles points
    across bead slots.  vii and ix split the data into the same two halves
    under different geometries; viii is an interleaved four-way split.
    """
    if n < 8:
        raise InputError("the suite needs at least 8 points")
    rng = np.random.default_rng(seed)
    ids = [str(i) for i in range(n)]
    spaces = {}

    def make(label, means, stddevs):
        spaces[label] = PosteriorSet(
            means, stddevs, sample_ids=list(ids), space_id=f"nine:{label}"
        )

    n_beads = max(4, n // 4)
    spacing, within = 7.0, 0.35

    # i: beaded chain on a line
    pos, _ = _beaded_positions(n, n_beads, spacing, within)
    make("i", pos[:, None], np.ones((n, 1)))

    # ii: noisy chain; a seeded subset of points teleports to random chain
    # slots, which degrades the shared information while keeping the
    # Bhattacharyya structure near-hard (tight information bound)
    n_tele = max(2, n // 5)
    tele = rng.choice(n, n_tele, replace=False)
    pos2 = pos.copy()
    per = n // n_beads
    pos2[tele] = spacing * rng.integers(0, n_beads, n_tele) + within * (
        rng.integers(0, per, n_tele) - (per - 1) / 2.0
    )
    make("ii", pos2[:, None], np.ones((n, 1)))

    # iii: coarser chain (half as many beads)
    pos3, _ = _beaded_positions(n, max(2, n_beads // 2), 2 * spacing, within)
    make("iii", pos3[:, None], np.ones((n, 1)))

    # iv: the same chain along a circular arc
    span = 1.5 * math.pi
    radius = (pos[-1] - pos[0]) / span
    theta = (pos - pos[0]) / radius
    make("iv", radius * np.stack([np.cos(theta), np.sin(theta)], axis=1), np.ones((n, 2)))

    # v: points shuffled across the chain slots
    make("v", pos[rng.permutation(n)][:, None], np.ones((n, 1)))

    # vi: nonuniformly stretched chain with stddevs matched to the stretch,
    # which preserves all pairwise BC values of i
    stretch = 0.7 + 0.8 * np.arange(n) / (n - 1)
    steps = np.diff(pos) * 0.5 * (stretch[:-1] + stretch[1:])
    pos6 = np.concatenate([[0.0], np.cumsum(steps)])
    make("vi", pos6[:, None], stretch[:, None])

    # vii: two tight groups, split by index half
    half = (np.arange(n) >= n // 2).astype(float)
    make("vii", (16.0 * half - 8.0)[:, None], np.full((n, 1), 0.5))

    # viii: four interleaved groups (independent of the chain ordering)
    quarter = np.arange(n) % 4
    corners = np.array([[-8.0, -8.0], [-8.0, 8.0], [8.0, -8.0], [8.0, 8.0]])
    make("viii", corners[quarter], np.full((n, 2), 0.5))

    # ix: the same halves as vii under a different two-dimensional geometry
    means9 = np.where(half[:, None] > 0, np.array([6.0, -3.0]), np.array([-6.0, 3.0]))
    stds9 = np.where(half[:, None] > 0, np.array([1.2, 0.7]), np.array([0.8, 1.3]))
    make("ix", means9, stds9)

    return spaces


def gen_so2_weak(n: int = 200, seed: int = 0, noise: float = 0.02):
    """A weak 1-D learner of a circular factor: the circle is cut at a
    seed-random angle and unrolled onto an interval, so the two points
    adjacent across the cut land at opposite ends.  Stddevs are
    heteroscedastic, noise * (1 + smooth jitter).  Returns (space, angles)."""
    if n < 16:
        raise InputError("so2 generator needs at least 16 points")
    if noise <= 0:
        raise InputError("noise must be positive")
    rng = np.random.default_rng(seed)
    angles = 2.0 * math.pi * np.arange(n) / n
    cut = rng.uniform(0.0, 2.0 * math.pi)
    direction = float(rng.choice([-1.0, 1.0]))
    phase = rng.uniform(0.0, 2.0 * math.pi)
    frac = np.mod(angles - cut, 2.0 * math.pi) / (2.0 * math.pi)
    means = direction * (frac - 0.5)
    stddevs = noise * (1.0 + 0.5 * np.sin(3.0 * angles + phase))
    space = PosteriorSet(
        means[:, None],
        stddevs[:, None],
        sample_ids=[str(i) for i in range(n)],
        space_id=f"so2-weak:s{seed}",
    )
    return space, angles


def circle_order_and_distances(n: int):
    """Natural cyclic order of n evenly spaced circle points and the chord
    length between adjacent pairs (the data-space distance)."""
    order = np.arange(n)
    chord = 2.0 * math.sin(math.pi / n)
    return order, np.full(n, chord)


def gen_separated_gaussians(
    k: int = 4, separation: float = 1e6, per_cluster: int = 1, seed: int = 0
) -> PosteriorSet:
    """k far-separated unit-width posterior positions transmitting log2(k) bits.

    With ``per_cluster > 1`` each position is shared by that many coincident
    posteriors, giving a population whose cluster structure survives
    aggregation subsampling."""
    if k < 2:
        raise InputError("k must be >= 2")
    if per_cluster < 1:
        raise InputError("per_cluster must be >= 1")
    if separation <= 0:
        raise InputError("separation must be positive")
    n = k * per_cluster
    means = separation * (np.arange(n, dtype=np.float64) // per_cluster)
    return PosteriorSet(
        means[:, None],
        np.ones((n, 1)),
        sample_ids=[str(i) for i in range(n)],
        space_id=f"separated:{k}x{per_cluster}",
    )


def gen_planted_channels(
    groups: int = 5,
    models: int = 50,
    dims: int = 10,
    informative_per_model: int = 5,
    noise: float = 0.05,
    seed: int = 0,
    n_points: int = 256,
):
    """Ensemble with planted channel groups.

    Each model embeds ``informative_per_model`` distinct ground-truth 1-D
    fragments into randomly chosen dims via random affine maps (which leave
    Bhattacharyya structure intact) plus mean jitter of scale ``noise``;
    remaining dims are near-uninformative.  Returns (ensemble, assignment)
    where assignment[m, k] is the planted group of model m's dim k, or -1.
    """
    if informative_per_model > min(groups, dims):
        raise InputError("informative_per_model must be <= min(groups, dims)")
    if noise < 0:
        raise InputError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    fragments = rng.uniform(0.0, 1.0, size=(groups, n_points))
    ids = [str(i) for i in range(n_points)]
    ensemble = []
    assignment = np.full((models, dims), -1, dtype=np.int64)
    for m in range(models):
        means = rng.normal(0.0, 0.003, size=(n_points, dims))
        stddevs = np.ones((n_points, dims))
        which_dims = rng.choice(dims, size=informative_per_model, replace=False)
        which_groups = rng.choice(groups, size=informative_per_model, replace=False)
        for dim, g in zip(which_dims, which_groups):
            scale = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
            offset = rng.normal(0.0, 1.0)
            values = fragments[g] + noise * rng.standard_normal(n_points)
            means[:, dim] = scale * values + offset
            stddevs[:, dim] = abs(scale) * 0.05
            assignment[m, dim] = g
        ensemble.append(
            PosteriorSet(means, stddevs, sample_ids=list(ids), space_id=f"model{m:03d}")
        )
    return ensemble, assignment


def gen_coin_mixture_trio():
    """Four data points under three 1-bit clusterings: two orthogonal hard
    splits U and W, and a soft V that reports U's or W's label behind a
    visible fair coin (four clusters, memberships of one half each)."""
    ids = ["a", "b", "c", "d"]
    u = HardClustering(np.array([0, 0, 1, 1]), sample_ids=list(ids))
    w = HardClustering(np.array([0, 1, 0, 1]), sample_ids=list(ids))
    memberships = np.array(
        [
            [0.5, 0.0, 0.5, 0.0],
            [0.5, 0.0, 0.0, 0.5],
            [0.0, 0.5, 0.5, 0.0],
            [0.0, 0.5, 0.0, 0.5],
        ]
    )
    v = DiscreteSoftClustering(memberships, sample_ids=list(ids))
    return u, v, w


@dataclass
class ContinuityResult:
    """Continuity ratio: max adjacent-pair distance ratio over its 90th
    percentile.  ``flagged`` marks an infinite ratio from a zero BC pair."""

    ratio: float
    ratios: np.ndarray
    flagged: bool = False


def continuity(space: PosteriorSet, order, data_dist) -> ContinuityResult:
    """Continuity of a representation along a cyclic datum order.

    ``ratios[i]`` is the Bhattacharyya distance between the posteriors of
    ``order[i]`` and ``order[i+1]`` (cyclically) divided by ``data_dist[i]``.
    The returned ratio is max / 90th-percentile (linear interpolation);
    lower is better.
    """
    order = np.asarray(order, dtype=np.int64)
    n = space.n
    if sorted(order.tolist()) != list(range(n)):
        raise InputError("order must visit every point exactly once")
    data_dist = np.asarray(data_dist, dtype=np.float64)
    if data_dist.shape != (n,):
        raise InputError(f"need {n} adjacent-pair data distances")
    if np.any(data_dist <= 0):
        raise InputError("data distances must be positive")

    i = order
    j = np.roll(order, -1)
    with np.errstate(over="ignore"):
        s2 = space.stddevs[i] ** 2 + space.stddevs[j] ** 2
        log_bc = (
            0.5 * np.log(2.0 * space.stddevs[i] * space.stddevs[j] / s2)
            - (space.means[i] - space.means[j]) ** 2 / (4.0 * s2)
        ).sum(axis=1)
    distances = -log_bc  # Bhattacharyya distance, +inf where the gap overflows
    ratios = distances / data_dist
    flagged = bool(np.any(np.isinf(ratios)))
    with np.errstate(invalid="ignore"):  # percentile interpolation across inf
        p90 = float(np.percentile(ratios, 90))
    if p90 > 0 and math.isfinite(p90):
        ratio = float(ratios.max() / p90)
    else:
        ratio = float("nan")
    return ContinuityResult(ratio=ratio, ratios=ratios, flagged=flagged)


def group_agreement(found_groups, planted_labels) -> float:
    """Adjusted Rand index between recovered groups and planted labels;
    channels in no group count as singletons."""
    planted = np.asarray(planted_labels)
    if planted.size == 0:
        raise InputError("planted labels must be nonempty")
    found = np.full(planted.size, -1, dtype=np.int64)
    for g, members in enumerate(found_groups):
        found[list(members)] = g
    next_label = len(list(found_groups))
    for i in range(found.size):
        if found[i] < 0:
            found[i] = next_label
            next_label += 1
    return float(adjusted_rand_score(planted, found))
