"""Iterative construction of a failure probability function (FPF).

The failure probability as a function of the design point phi follows from
Bayes' rule in the augmented space,

    FPF(phi) = p(phi | F) * P(F) / p(phi),

with p(phi) the uniform artificial prior. A pilot run estimates P(F) and
yields failure samples over the whole design box D_0. Each level k then
density-estimates p(phi | F, D_k) on D_k, splits off the lowest-density cells
whose mass accumulates to a target ratio (default 0.1) into the next region
D_{k+1}, repopulates D_{k+1} with region-conditional chains, and recurses.
Level estimates are glued by the deepest-level rule: at phi, the composite
conditional density is the estimate of the deepest D_k containing phi times
the level weight P(D_k | F) = prod_{j<k} P_j* of realized split ratios. The
recursion stops once the FPF value at the current threshold falls below the
smallest failure probability of interest, or at the iteration cap.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .bsp import PiecewiseConstantDensity, bsp_estimate
from .errors import ConvergenceError, DegenerateThresholdError, RegionPopulationError
from .model import AugmentedSample, DesignSpace, LimitStateModel, RandomVariableSpec
from .regions import Box, RegionIndicator
from .reliability import (
    ChainParams,
    FailureEstimate,
    direct_mcs,
    populate_region,
    subset_simulation,
)

logger = logging.getLogger(__name__)


def threshold_from_ratio(
    masses: np.ndarray, densities: np.ndarray, ratio: float
) -> tuple[float, float, np.ndarray]:
    """Density threshold splitting off the lowest-density mass ``ratio``.

    Cells are accumulated in ascending density order until the running mass
    first reaches ``ratio``; equal-density ties are grouped so the retained
    set is exactly {cells with density < p*}. Returns (p*, realized ratio,
    low-cell mask) where p* is the density of the first excluded cell.
    """
    masses = np.asarray(masses, dtype=float)
    densities = np.asarray(densities, dtype=float)
    if masses.shape != densities.shape or masses.ndim != 1:
        raise ValueError("masses and densities must be 1-d and aligned")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    if masses.size < 2 or np.all(densities == densities[0]):
        raise DegenerateThresholdError(
            "cannot place a density threshold: fewer than two distinct densities"
        )
    order = np.argsort(densities, kind="stable")
    cum = np.cumsum(masses[order])
    k = int(np.searchsorted(cum, ratio - 1e-15))
    if k >= masses.size:
        k = masses.size - 1
    # group ties so the cut falls between distinct density values
    while k + 1 < masses.size and densities[order[k + 1]] == densities[order[k]]:
        k += 1
    if k + 1 >= masses.size:
        raise DegenerateThresholdError(
            "density threshold would retain every cell (ties up to the maximum)"
        )
    p_star = float(densities[order[k + 1]])
    low = np.zeros(masses.size, dtype=bool)
    low[order[: k + 1]] = True
    realized = float(np.sum(masses[low]))
    return p_star, realized, low


def level_weights(ratios: tuple[float, ...]) -> tuple[float, ...]:
    """P(D_k | F) for k = 0..len(ratios): cumulative products with leading 1."""
    out = [1.0]
    for r in ratios:
        if not 0.0 < r < 1.0:
            raise ValueError(f"split ratio {r} outside (0, 1)")
        out.append(out[-1] * r)
    return tuple(out)


@dataclass(frozen=True)
class LevelCell:
    """One cell of a level's region-restricted estimate.

    ``pieces`` are the fragments of a partition leaf clipped to the level's
    region; they are disjoint boxes whose volumes sum to ``volume``.
    """

    pieces: tuple[Box, ...]
    volume: float
    mass: float
    density: float


@dataclass(frozen=True)
class PartitionLevel:
    """Level k of the region chain: estimate on D_k and its split."""

    index: int
    region: RegionIndicator
    raw: PiecewiseConstantDensity
    captured: float
    cells: tuple[LevelCell, ...]
    threshold: float
    ratio: float
    weight: float
    high_region: RegionIndicator
    low_region: RegionIndicator
    low_mask: np.ndarray
    samples: tuple[AugmentedSample, ...]

    def conditional_density(self, phi: np.ndarray) -> float:
        """p(phi | F, D_k) estimate; valid for phi in D_k."""
        return self.raw.pdf(phi) / self.captured


def build_level(
    index: int,
    region: RegionIndicator,
    raw: PiecewiseConstantDensity,
    weight: float,
    mass_ratio: float,
    samples: tuple[AugmentedSample, ...],
) -> PartitionLevel:
    """Restrict a raw estimate to its region and split it by density.

    Leaf mass is apportioned to the in-region overlap (uniform within the
    leaf) and renormalized; leaves without overlap are dropped (zero mass).
    The low/high regions are unions of cell pieces, so together they tile the
    level's region exactly.
    """
    part = raw.partition
    pieces_per_cell: list[tuple[Box, ...]] = []
    overlaps: list[float] = []
    contributions: list[float] = []
    raw_density: list[float] = []
    for i, leaf in enumerate(part.leaves):
        pieces = region.intersect_box(Box(leaf.lo, leaf.hi))
        if not pieces:
            continue
        o = sum(p.volume for p in pieces)
        pieces_per_cell.append(pieces)
        overlaps.append(o)
        contributions.append(float(raw.masses[i]) * (o / leaf.volume))
        raw_density.append(float(raw.masses[i]) / leaf.volume)
    captured = float(np.sum(contributions))
    if captured <= 0.0:
        raise RuntimeError("level estimate captured no mass inside its region")
    masses = np.asarray(contributions) / captured
    densities = np.asarray(raw_density) / captured
    err = abs(float(np.sum(masses)) - 1.0)
    if err > 1e-12:
        raise AssertionError(f"restricted cell masses sum to 1 +/- {err:.3e}")
    cells = tuple(
        LevelCell(p, o, float(m), float(d))
        for p, o, m, d in zip(pieces_per_cell, overlaps, masses, densities)
    )
    p_star, realized, low = threshold_from_ratio(masses, densities, mass_ratio)
    low_boxes: list[Box] = []
    high_boxes: list[Box] = []
    for cell, is_low in zip(cells, low):
        (low_boxes if is_low else high_boxes).extend(cell.pieces)
    upper = region.space_upper
    return PartitionLevel(
        index=index,
        region=region,
        raw=raw,
        captured=captured,
        cells=cells,
        threshold=p_star,
        ratio=realized,
        weight=weight,
        high_region=RegionIndicator(tuple(high_boxes), upper),
        low_region=RegionIndicator(tuple(low_boxes), upper),
        low_mask=low,
        samples=samples,
    )


@dataclass(frozen=True)
class RegionChainResult:
    """Full output of the iterative scheme."""

    levels: tuple[PartitionLevel, ...]
    pf: float
    pilot: FailureEstimate
    stopping: str
    evaluations: dict[str, int]

    @property
    def n_iterations(self) -> int:
        return len(self.levels) - 1

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(level.ratio for level in self.levels)

    @property
    def weights(self) -> tuple[float, ...]:
        return level_weights(self.ratios)

    @property
    def regions(self) -> tuple[RegionIndicator, ...]:
        """S_1 .. S_{n_it+1} plus the final low region: n_it + 2 regions."""
        highs = tuple(level.high_region for level in self.levels)
        return highs + (self.levels[-1].low_region,)


def compose_density(levels: tuple[PartitionLevel, ...], phi: np.ndarray) -> float:
    """Composite conditional density p(phi | F) by the deepest-level rule."""
    phi = np.asarray(phi, dtype=float)
    for level in reversed(levels):
        if level.region.contains(phi):
            return level.conditional_density(phi) * level.weight
    return 0.0


def scale_to_fpf(value, pf: float, space: DesignSpace):
    """Scale composite density values to FPF: value * P(F) / p(phi)."""
    return value * pf * space.volume


@dataclass(frozen=True)
class FPFApproximation:
    """Evaluates the composite density and the scaled FPF, vectorized."""

    chain: RegionChainResult
    space: DesignSpace

    def composite_density(self, phi: np.ndarray):
        phi = np.asarray(phi, dtype=float)
        if phi.ndim == 1:
            return compose_density(self.chain.levels, phi)
        return np.array([compose_density(self.chain.levels, p) for p in phi])

    def fpf(self, phi: np.ndarray):
        return scale_to_fpf(self.composite_density(phi), self.chain.pf, self.space)

    def __call__(self, phi: np.ndarray):
        return self.fpf(phi)


@dataclass(frozen=True)
class BSPParams:
    alpha: float = 0.5
    beta: float | None = None
    particles: int = 100
    max_leaves: int = 64


@dataclass(frozen=True)
class SubsetParams:
    p0: float = 0.1
    max_levels: int = 8


@dataclass(frozen=True)
class PipelineConfig:
    """Budgets and estimator settings for one run."""

    pilot_budget: int = 8000
    iteration_budget: int = 8000
    max_iterations: int = 4
    mass_ratio: float = 0.1
    pf_floor: float = 1e-4
    bsp: BSPParams = field(default_factory=BSPParams)
    chains: ChainParams = field(default_factory=ChainParams)
    subset: SubsetParams = field(default_factory=SubsetParams)

    def __post_init__(self) -> None:
        if self.pilot_budget <= 0 or self.iteration_budget <= 0:
            raise ValueError("budgets must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not 0.0 < self.mass_ratio < 1.0:
            raise ValueError("mass_ratio must lie in (0, 1)")
        if self.pf_floor <= 0:
            raise ValueError("pf_floor must be positive")


def _space_region(space: DesignSpace) -> RegionIndicator:
    box = Box(tuple(b[0] for b in space.bounds), tuple(b[1] for b in space.bounds))
    return RegionIndicator((box,), tuple(b[1] for b in space.bounds))


def _check_composite_normalization(chain: RegionChainResult) -> float:
    """Cell-sum telescoping: sum_k w_k*(high mass)_k + w_last*(low mass)_last."""
    total = 0.0
    for level in chain.levels:
        high_mass = float(np.sum([c.mass for c, lo in zip(level.cells, level.low_mask) if not lo]))
        total += level.weight * high_mass
    last = chain.levels[-1]
    low_mass = float(np.sum([c.mass for c, lo in zip(last.cells, last.low_mask) if lo]))
    total += last.weight * low_mass
    return total


def run_pipeline(
    model: LimitStateModel,
    space: DesignSpace,
    specs: tuple[RandomVariableSpec, ...],
    config: PipelineConfig,
    seed_seq: np.random.SeedSequence,
) -> tuple[RegionChainResult, FPFApproximation]:
    """Run pilot + iterations and return the chain with its FPF evaluator.

    The pilot is direct Monte Carlo, escalating to subset simulation when it
    observes no failures. Each iteration estimates the current region's
    conditional density, splits off the low-density mass, and repopulates the
    new region with MMH chains sized so that chain steps stay within the
    iteration budget. Per-stage evaluation counts are taken from the model's
    counter and reported in the result.
    """
    evals: dict[str, int] = {}
    mark = model.n_evaluations
    pilot_rng = np.random.Generator(np.random.PCG64(seed_seq.spawn(1)[0]))
    pilot = direct_mcs(model, space, specs, config.pilot_budget, pilot_rng)
    if pilot.escalate:
        logger.info("pilot saw no failures; escalating to subset simulation")
        pilot = subset_simulation(
            model,
            space,
            specs,
            config.pilot_budget,
            config.subset.p0,
            seed_seq,
            max_levels=config.subset.max_levels,
        )
    if pilot.pf == 0.0 or not pilot.samples:
        raise ConvergenceError(
            "pilot stage found no failures even under subset simulation",
            partial=pilot,
        )
    evals["pilot"] = model.n_evaluations - mark
    pf = pilot.pf
    samples: list[AugmentedSample] = list(pilot.samples)
    if len(samples) < 2 * space.ndim:
        raise ConvergenceError(
            f"pilot produced only {len(samples)} failure samples; "
            "increase the pilot budget",
            partial=pilot,
        )

    region = _space_region(space)
    weight = 1.0
    levels: list[PartitionLevel] = []
    stopping = "iteration-cap"
    prior = 1.0 / space.volume

    for k in range(config.max_iterations + 1):
        points = np.array([s.phi for s in samples])
        bbox = region.bounding_box()
        bsp_rng = np.random.Generator(np.random.PCG64(seed_seq.spawn(1)[0]))
        raw = bsp_estimate(
            points,
            bbox.lo,
            bbox.hi,
            bsp_rng,
            alpha=config.bsp.alpha,
            beta=config.bsp.beta,
            n_particles=config.bsp.particles,
            max_leaves=config.bsp.max_leaves,
        )
        try:
            level = build_level(k, region, raw, weight, config.mass_ratio, tuple(samples))
        except DegenerateThresholdError:
            if not levels:
                raise
            logger.warning("level %d estimate is degenerate; stopping the chain", k)
            stopping = "degenerate-threshold"
            break
        levels.append(level)

        fpf_at_threshold = level.threshold * weight * pf / prior
        if fpf_at_threshold < config.pf_floor:
            stopping = "threshold-floor"
            break
        if k == config.max_iterations:
            stopping = "iteration-cap"
            break

        weight *= level.ratio
        region = level.low_region
        n_seeds = sum(1 for s in samples if region.contains(s.phi))
        if n_seeds == 0:
            raise RegionPopulationError(
                f"no failure sample inside level-{k + 1} region",
                partial=RegionChainResult(tuple(levels), pf, pilot, "aborted", evals),
            )
        n_chains = min(n_seeds, config.chains.max_chains)
        steps = config.iteration_budget // n_chains
        if steps <= config.chains.burn_in:
            raise ConvergenceError(
                "iteration budget cannot cover chain burn-in; "
                "raise iteration_budget or lower max_chains"
            )
        n_target = n_seeds + n_chains * (steps - config.chains.burn_in)
        mark = model.n_evaluations
        samples = populate_region(
            tuple(samples), region, model, space, specs, n_target,
            config.chains, seed_seq,
        )
        evals[f"level_{k + 1}"] = model.n_evaluations - mark

    evals["total"] = sum(evals.values())
    chain = RegionChainResult(tuple(levels), pf, pilot, stopping, evals)
    approx = FPFApproximation(chain, space)

    norm = _check_composite_normalization(chain)
    if abs(norm - 1.0) > 1e-10:
        raise AssertionError(
            f"composite density integrates to {norm!r}, off by more than 1e-10"
        )
    pilot_phis = np.array([s.phi for s in pilot.samples])
    vals = approx.fpf(pilot_phis)
    if np.any(vals <= 0.0) or float(np.max(vals)) > 1.05:
        raise RuntimeError(
            "scaled FPF violates (0, 1.05] at pilot failure samples: "
            f"min={float(np.min(vals)):.3e} max={float(np.max(vals)):.3e}"
        )
    return chain, approx
