"""Adaptive binary-partition density estimation with a closed-form posterior
score, searched by sequential importance sampling over cut sequences.

A partition of the domain box is grown one binary midpoint cut at a time. A
partition with leaves A_1..A_t holding counts n_1..n_t is scored (log scale,
up to a data-only constant) by

    score = -beta*t + log B(n_1+alpha, ..., n_t+alpha) - log B(alpha, ..., alpha)
            - sum_i n_i log|A_i|

with B the multivariate beta function. Leaf masses of the returned estimate
are posterior means theta_i = (n_i + alpha) / (N + t*alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma, logsumexp


@dataclass(frozen=True)
class LeafCell:
    """Leaf box with its sample count.

    ``idx`` (indices into the estimate's point array) and ``n_below`` (per-axis
    counts strictly below the midpoint) are carried only on partitions that
    still hold their points; deserialized partitions have them as None.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    n: int
    idx: np.ndarray | None = None
    n_below: tuple[int, ...] | None = None

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        v = 1.0
        for a, b in zip(self.lo, self.hi):
            v *= b - a
        return v


@dataclass(frozen=True)
class CutNode:
    axis: int
    position: float
    low: "CutNode | LeafCell"
    high: "CutNode | LeafCell"


@dataclass(frozen=True)
class BinaryPartition:
    """Binary tree of midpoint cuts over a domain box.

    ``leaves`` lists the tree's leaves in left-to-right (low-before-high)
    order. ``points`` is the sample array the counts refer to, or None for a
    partition reconstructed from its serialized record.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    root: CutNode | LeafCell
    leaves: tuple[LeafCell, ...]
    n_samples: int
    points: np.ndarray | None = None

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def domain_volume(self) -> float:
        v = 1.0
        for a, b in zip(self.lo, self.hi):
            v *= b - a
        return v

    def contains(self, x: np.ndarray) -> bool:
        """Closed-domain membership."""
        return all(self.lo[d] <= x[d] <= self.hi[d] for d in range(self.ndim))

    def locate(self, x: np.ndarray) -> int:
        """Index of the leaf containing x; ties on a cut go to the high child.

        Raises ValueError outside the domain.
        """
        if not self.contains(x):
            raise ValueError(f"point {x} outside partition domain")
        node = self.root
        while isinstance(node, CutNode):
            node = node.low if x[node.axis] < node.position else node.high
        for i, leaf in enumerate(self.leaves):
            if leaf is node:
                return i
        raise AssertionError("leaf missing from leaf list")


def _make_leaf(
    lo: tuple[float, ...], hi: tuple[float, ...], idx: np.ndarray, points: np.ndarray
) -> LeafCell:
    below = []
    for d in range(len(lo)):
        mid = 0.5 * (lo[d] + hi[d])
        below.append(int(np.count_nonzero(points[idx, d] < mid)))
    return LeafCell(lo, hi, int(idx.size), idx, tuple(below))


def root_partition(
    points: np.ndarray, lo: tuple[float, ...], hi: tuple[float, ...]
) -> BinaryPartition:
    """Single-leaf partition over the domain box; all points must lie inside."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != len(lo):
        raise ValueError("points must be (n, d) matching the domain")
    if np.any(points < np.asarray(lo)) or np.any(points > np.asarray(hi)):
        raise ValueError("samples outside the partition domain")
    leaf = _make_leaf(tuple(lo), tuple(hi), np.arange(points.shape[0]), points)
    return BinaryPartition(tuple(lo), tuple(hi), leaf, (leaf,), points.shape[0], points)


def _replace_leaf(node, target: LeafCell, repl: CutNode):
    if node is target:
        return repl
    if isinstance(node, LeafCell):
        return node
    low = _replace_leaf(node.low, target, repl)
    high = _replace_leaf(node.high, target, repl)
    if low is node.low and high is node.high:
        return node
    return CutNode(node.axis, node.position, low, high)


def propose_cut(partition: BinaryPartition, leaf_index: int, axis: int) -> BinaryPartition:
    """New partition with the given leaf split at its midpoint on ``axis``.

    A point exactly on the cut goes to the high child. The input partition is
    unchanged (trees share structure).
    """
    if partition.points is None:
        raise ValueError("partition was reconstructed without points; cannot cut")
    if not 0 <= leaf_index < partition.n_leaves:
        raise IndexError(f"leaf index {leaf_index} out of range")
    leaf = partition.leaves[leaf_index]
    if not 0 <= axis < partition.ndim:
        raise IndexError(f"axis {axis} out of range")
    mid = 0.5 * (leaf.lo[axis] + leaf.hi[axis])
    coords = partition.points[leaf.idx, axis]
    below = coords < mid
    lo_hi = tuple(mid if d == axis else leaf.hi[d] for d in range(partition.ndim))
    hi_lo = tuple(mid if d == axis else leaf.lo[d] for d in range(partition.ndim))
    low_leaf = _make_leaf(leaf.lo, lo_hi, leaf.idx[below], partition.points)
    high_leaf = _make_leaf(hi_lo, leaf.hi, leaf.idx[~below], partition.points)
    node = CutNode(axis, mid, low_leaf, high_leaf)
    root = _replace_leaf(partition.root, leaf, node)
    leaves = (
        partition.leaves[:leaf_index]
        + (low_leaf, high_leaf)
        + partition.leaves[leaf_index + 1 :]
    )
    return BinaryPartition(
        partition.lo, partition.hi, root, leaves, partition.n_samples, partition.points
    )


def log_partition_score(partition: BinaryPartition, alpha: float, beta: float) -> float:
    """Log posterior score of a partition (up to the data-only constant)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    t = partition.n_leaves
    n_total = partition.n_samples
    counts = np.array([leaf.n for leaf in partition.leaves], dtype=float)
    log_vols = np.array([math.log(leaf.volume) for leaf in partition.leaves])
    score = -beta * t
    score += float(np.sum(loggamma(counts + alpha))) - loggamma(n_total + t * alpha)
    score -= t * loggamma(alpha) - loggamma(t * alpha)
    score -= float(np.sum(counts * log_vols))
    return float(score)


def _cut_deltas(partition: BinaryPartition, alpha: float, beta: float) -> np.ndarray:
    """Score change of every candidate (leaf, axis) cut, shape (t, d).

    Uses the cached per-leaf below-midpoint counts, so each candidate is O(1):

        delta = -beta + lg(nL+a) + lg(nR+a) - lg(n+a) + n*log 2 + level_term

    where level_term collects the pieces depending only on (t, N).
    """
    t = partition.n_leaves
    n_total = partition.n_samples
    a = alpha
    level_term = (
        -loggamma(n_total + (t + 1) * a)
        + loggamma(n_total + t * a)
        - loggamma(a)
        + loggamma((t + 1) * a)
        - loggamma(t * a)
    )
    deltas = np.empty((t, partition.ndim))
    for i, leaf in enumerate(partition.leaves):
        nl = np.asarray(leaf.n_below, dtype=float)
        nr = leaf.n - nl
        deltas[i, :] = (
            -beta
            + loggamma(nl + a)
            + loggamma(nr + a)
            - loggamma(leaf.n + a)
            + leaf.n * math.log(2.0)
            + level_term
        )
    return deltas


@dataclass(frozen=True)
class PiecewiseConstantDensity:
    """Normalized piecewise-constant density on a binary partition.

    masses[i] = (n_i + alpha) / (N + t*alpha) sum to one; the density on leaf
    i is masses[i] / |A_i|.
    """

    partition: BinaryPartition
    masses: np.ndarray
    alpha: float
    beta: float
    log_score: float

    def __post_init__(self) -> None:
        if self.masses.shape != (self.partition.n_leaves,):
            raise ValueError("one mass per leaf required")
        err = abs(float(np.sum(self.masses)) - 1.0)
        if err > 1e-12:
            raise AssertionError(f"leaf masses sum to 1 +/- {err:.3e}, beyond 1e-12")

    @property
    def densities(self) -> np.ndarray:
        vols = np.array([leaf.volume for leaf in self.partition.leaves])
        return self.masses / vols

    def pdf(self, phi: np.ndarray) -> float:
        return density_value(self, phi)


def density_value(density: PiecewiseConstantDensity, phi: np.ndarray) -> float:
    """Density at phi: mass/volume of the containing leaf, 0 outside the domain."""
    phi = np.asarray(phi, dtype=float)
    if not density.partition.contains(phi):
        return 0.0
    i = density.partition.locate(phi)
    return float(density.masses[i] / density.partition.leaves[i].volume)


def _posterior_masses(partition: BinaryPartition, alpha: float) -> np.ndarray:
    t = partition.n_leaves
    counts = np.array([leaf.n for leaf in partition.leaves], dtype=float)
    return (counts + alpha) / (partition.n_samples + t * alpha)


def _systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling; returns selected indices (ascending stratified)."""
    m = weights.size
    positions = (rng.random() + np.arange(m)) / m
    return np.searchsorted(np.cumsum(weights), positions)


def bsp_estimate(
    points: np.ndarray,
    lo: tuple[float, ...],
    hi: tuple[float, ...],
    rng: np.random.Generator,
    alpha: float = 0.5,
    beta: float | None = None,
    n_particles: int = 100,
    max_leaves: int = 64,
) -> PiecewiseConstantDensity:
    """Search cut sequences by SIS and return the best-scoring estimate.

    Each level, every particle scores all (leaf, axis) candidate cuts, samples
    one proportionally to its posterior score, and updates its importance
    weight by the score ratio over the proposal probability. Systematic
    resampling triggers when the effective sample size drops below half the
    ensemble. The search stops at ``max_leaves`` or after two consecutive
    levels without improvement of the best score seen; the highest-posterior
    partition encountered is returned with posterior-mean leaf masses.

    ``beta`` defaults to log(N).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if n == 0:
        raise ValueError("cannot estimate a density from zero samples")
    if n_particles < 1:
        raise ValueError("need at least one particle")
    if max_leaves < 1:
        raise ValueError("max_leaves must be >= 1")
    if beta is None:
        beta = math.log(n) if n > 1 else 0.0

    base = root_partition(points, lo, hi)
    base_score = log_partition_score(base, alpha, beta)
    particles = [base] * n_particles
    scores = np.full(n_particles, base_score)
    log_w = np.zeros(n_particles)
    best_partition, best_score = base, base_score
    stagnant = 0

    while particles[0].n_leaves < max_leaves and stagnant < 2:
        level_best = -np.inf
        for j in range(n_particles):
            part = particles[j]
            deltas = _cut_deltas(part, alpha, beta).ravel()
            norm = logsumexp(deltas)
            prob = np.exp(deltas - norm)
            prob /= prob.sum()
            choice = int(rng.choice(deltas.size, p=prob))
            # SIS weight update: delta_chosen - log q(chosen) = logsumexp(deltas)
            log_w[j] += norm
            leaf_index, axis = divmod(choice, part.ndim)
            particles[j] = propose_cut(part, leaf_index, axis)
            scores[j] += float(deltas[choice])
            if scores[j] > level_best:
                level_best = scores[j]
        arg = int(np.argmax(scores))
        if level_best > best_score:
            best_partition, best_score = particles[arg], float(scores[arg])
            stagnant = 0
        else:
            stagnant += 1
        shifted = np.exp(log_w - np.max(log_w))
        w_norm = shifted / shifted.sum()
        ess = 1.0 / float(np.sum(w_norm**2))
        if ess < n_particles / 2 and particles[0].n_leaves < max_leaves:
            keep = _systematic_resample(w_norm, rng)
            particles = [particles[k] for k in keep]
            scores = scores[keep]
            log_w = np.zeros(n_particles)

    return PiecewiseConstantDensity(
        best_partition,
        _posterior_masses(best_partition, alpha),
        alpha,
        float(beta),
        float(best_score),
    )
