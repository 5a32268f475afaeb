"""Failure probability estimators and conditional samplers on the augmented
space: direct Monte Carlo, subset simulation, and component-wise
Metropolis-Hastings chains for repopulating failure regions.

Chains operate on (phi, u) coordinates, where theta_j = mu_j(phi) +
sigma_j(phi) * u_j and the u_j are independent standard normals. In these
coordinates the augmented prior is an exact product (uniform design prior
times standard normals), so the component-wise accept rule is exact even when
theta's parameters follow design coordinates: a design component is accepted
iff it stays inside the design box (constant prior), a u component is
accepted with the standard-normal density ratio, and the assembled candidate
is then rejected as a whole unless it satisfies the conditioning event.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, RegionPopulationError
from .model import (
    AugmentedSample,
    DesignSpace,
    LimitStateModel,
    RandomVariableSpec,
    resolve_parameters,
    sample_theta,
)
from .regions import RegionIndicator

logger = logging.getLogger(__name__)

_BATCH = 4096


@dataclass(frozen=True)
class FailureEstimate:
    """Estimated failure probability with its sampling c.o.v. and the failure
    samples that produced it."""

    pf: float
    cov: float
    n_evaluations: int
    samples: tuple[AugmentedSample, ...]
    method: str
    n_levels: int = 1
    escalate: bool = False


def direct_mcs(
    model: LimitStateModel,
    space: DesignSpace,
    specs: tuple[RandomVariableSpec, ...],
    n: int,
    rng: np.random.Generator,
) -> FailureEstimate:
    """Direct Monte Carlo over the augmented space.

    pf_hat = n_fail / n with c.o.v. sqrt((1 - pf) / (n * pf)). Zero observed
    failures return pf = 0 with ``escalate`` set so callers can switch to
    subset simulation.
    """
    if n <= 0:
        raise ValueError("sample count must be positive")
    failures: list[AugmentedSample] = []
    n_fail = 0
    done = 0
    while done < n:
        m = min(_BATCH, n - done)
        phis = space.sample(rng, m)
        thetas = sample_theta(specs, model, phis, rng)
        perf, failed = model.evaluate_batch(phis, thetas)
        for i in np.flatnonzero(failed):
            failures.append(
                AugmentedSample(phis[i].copy(), thetas[i].copy(), float(perf[i]), True)
            )
        n_fail += int(np.count_nonzero(failed))
        done += m
    pf = n_fail / n
    if n_fail == 0:
        return FailureEstimate(0.0, math.inf, n, (), "direct-mcs", escalate=True)
    cov = math.sqrt((1.0 - pf) / (n * pf))
    return FailureEstimate(pf, cov, n, tuple(failures), "direct-mcs")


@dataclass(frozen=True)
class ChainParams:
    """Tuning for region-conditional MMH chains."""

    burn_in: int = 10
    max_chains: int = 100
    scale_factor: float = 1.0

    def __post_init__(self) -> None:
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.max_chains < 1:
            raise ValueError("max_chains must be >= 1")
        if self.scale_factor <= 0:
            raise ValueError("scale_factor must be positive")


class _MMHKernel:
    """Component-wise random-walk kernel on (phi, u) with a joint accept test.

    ``accept(phi, performance, failed)`` decides the conditioning event.
    Proposals are uniform with per-coordinate half-widths; a candidate equal
    to the current state skips the model evaluation (the chain repeats).
    """

    def __init__(
        self,
        model: LimitStateModel,
        space: DesignSpace,
        specs: tuple[RandomVariableSpec, ...],
        scales_phi: np.ndarray,
        scales_u: np.ndarray,
        accept,
        rng: np.random.Generator,
    ) -> None:
        self.model = model
        self.space = space
        self.specs = specs
        self.scales_phi = np.asarray(scales_phi, dtype=float)
        self.scales_u = np.asarray(scales_u, dtype=float)
        self.accept = accept
        self.rng = rng
        self.lower = space.lower
        self.upper = space.upper
        self.steps = 0
        self.moves = 0

    def _theta_of(self, phi: np.ndarray, u: np.ndarray) -> np.ndarray:
        mu, sigma = resolve_parameters(self.specs, phi[None, :])
        return mu[0] + sigma[0] * u

    def u_of(self, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
        mu, sigma = resolve_parameters(self.specs, phi[None, :])
        return (theta - mu[0]) / sigma[0]

    def step(self, state: tuple) -> tuple:
        phi, u, theta, perf = state
        rng = self.rng
        self.steps += 1
        cand_phi = phi.copy()
        for i in range(phi.size):
            xi = cand_phi[i] + self.scales_phi[i] * (2.0 * rng.random() - 1.0)
            # uniform design prior: component accept is a bounds check
            if self.lower[i] <= xi <= self.upper[i]:
                cand_phi[i] = xi
        cand_u = u.copy()
        for j in range(u.size):
            xj = cand_u[j] + self.scales_u[j] * (2.0 * rng.random() - 1.0)
            ratio = math.exp(-0.5 * (xj * xj - cand_u[j] * cand_u[j]))
            if rng.random() < ratio:
                cand_u[j] = xj
        if np.array_equal(cand_phi, phi) and np.array_equal(cand_u, u):
            return state
        cand_theta = self._theta_of(cand_phi, cand_u)
        if not self.model.theta_valid(cand_phi, cand_theta):
            return state
        cand_perf, cand_failed = self.model.evaluate(cand_phi, cand_theta)
        if self.accept(cand_phi, cand_perf, cand_failed):
            self.moves += 1
            return (cand_phi, cand_u, cand_theta, cand_perf)
        return state


def _seed_scales(
    space: DesignSpace,
    phis: np.ndarray,
    us: np.ndarray,
    factor: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate proposal half-widths: factor x seed std, with fallbacks
    for degenerate spread (5% of the design width for phi, 1.0 for u)."""
    s_phi = np.std(phis, axis=0) * factor
    widths = space.upper - space.lower
    bad = ~(s_phi > 0)
    s_phi[bad] = 0.05 * widths[bad]
    s_u = np.std(us, axis=0) * factor
    s_u[~(s_u > 0)] = 1.0
    return s_phi, s_u


def mmh_chain(
    seed: AugmentedSample,
    region: RegionIndicator,
    model: LimitStateModel,
    space: DesignSpace,
    specs: tuple[RandomVariableSpec, ...],
    scales_phi: np.ndarray,
    scales_u: np.ndarray,
    n_steps: int,
    rng: np.random.Generator,
) -> list[AugmentedSample]:
    """Chain of ``n_steps`` states targeting p(phi, theta | F, phi in region).

    The seed must itself be a failed sample inside the region. Every emitted
    state is failed and in-region; repeated states are genuine chain output.
    """
    if not seed.failed:
        raise ValueError("chain seed must be a failure sample")
    if not region.contains(seed.phi):
        raise ValueError("chain seed lies outside the target region")

    def accept(phi: np.ndarray, perf: float, failed: bool) -> bool:
        return failed and region.contains(phi)

    kernel = _MMHKernel(model, space, specs, scales_phi, scales_u, accept, rng)
    u = kernel.u_of(seed.phi, seed.theta)
    state = (seed.phi.copy(), u, seed.theta.copy(), seed.performance)
    out: list[AugmentedSample] = []
    for _ in range(n_steps):
        state = kernel.step(state)
        out.append(AugmentedSample(state[0].copy(), state[2].copy(), state[3], True))
    return out


def populate_region(
    prev: tuple[AugmentedSample, ...],
    region: RegionIndicator,
    model: LimitStateModel,
    space: DesignSpace,
    specs: tuple[RandomVariableSpec, ...],
    n_target: int,
    params: ChainParams,
    seed_seq: np.random.SeedSequence,
) -> list[AugmentedSample]:
    """Grow the failure population of ``region`` to at least ``n_target``.

    Seeds are the in-region failure samples of ``prev`` and are all retained.
    When more samples are needed, chains start from an evenly strided subset
    of at most ``params.max_chains`` seeds (burn-in discarded per chain, no
    thinning), each chain drawing from its own spawned stream, and the merged
    output is ordered by chain index so the result is deterministic.
    """
    seeds = [s for s in prev if s.failed and region.contains(s.phi)]
    if not seeds:
        raise RegionPopulationError(
            "no failure sample falls inside the target region; "
            "increase the previous-stage budget",
            partial=prev,
        )
    if len(seeds) >= n_target:
        return list(seeds)

    n_chains = min(len(seeds), params.max_chains)
    starters = [seeds[(j * len(seeds)) // n_chains] for j in range(n_chains)]
    need = n_target - len(seeds)
    emissions = -(-need // n_chains)  # ceil

    phis = np.array([s.phi for s in seeds])
    mus, sigmas = resolve_parameters(specs, phis)
    thetas = np.array([s.theta for s in seeds])
    us = (thetas - mus) / sigmas
    scales_phi, scales_u = _seed_scales(space, phis, us, params.scale_factor)

    out = list(seeds)
    distinct = 0
    total = 0
    for starter in starters:
        rng = np.random.Generator(np.random.PCG64(seed_seq.spawn(1)[0]))
        states = mmh_chain(
            starter, region, model, space, specs,
            scales_phi, scales_u, params.burn_in + emissions, rng,
        )[params.burn_in :]
        out.extend(states)
        total += len(states)
        distinct += len({tuple(s.phi) for s in states})
    if total and distinct / total < 0.05:
        logger.warning(
            "stuck chains while populating region: %.1f%% distinct states "
            "(proposal scales may have collapsed)",
            100.0 * distinct / total,
        )
    return out


def subset_simulation(
    model: LimitStateModel,
    space: DesignSpace,
    specs: tuple[RandomVariableSpec, ...],
    n_per_level: int,
    p0: float,
    seed_seq: np.random.SeedSequence,
    max_levels: int = 8,
) -> FailureEstimate:
    """Subset simulation with percentile intermediate levels.

    Standard construction: each level keeps the n*p0 states with the smallest
    failure margins, sets the next threshold at that percentile, and regrows
    the population with conditional MMH chains from those seeds; the estimate
    is p0^m times the final-level failure fraction. The reported c.o.v. uses
    the independent-level approximation (chain correlation ignored), which
    understates mildly; it is a diagnostic, not a certified bound.
    """
    if n_per_level <= 0:
        raise ValueError("n_per_level must be positive")
    if not 0.0 < p0 < 1.0:
        raise ValueError("p0 must lie in (0, 1)")
    n0 = n_per_level * p0
    if abs(n0 - round(n0)) > 1e-9 or round(n0) < 2:
        raise ValueError("n_per_level * p0 must be an integer >= 2")
    n0 = int(round(n0))

    rng = np.random.Generator(np.random.PCG64(seed_seq.spawn(1)[0]))
    n_evals_start = model.n_evaluations

    phis = space.sample(rng, n_per_level)
    thetas = sample_theta(specs, model, phis, rng)
    perf, _ = model.evaluate_batch(phis, thetas)
    margins = np.asarray(model.margin(perf), dtype=float)

    level = 0
    while True:
        frac_fail = float(np.count_nonzero(margins <= 0.0)) / n_per_level
        order = np.argsort(margins, kind="stable")
        tau = float(margins[order[n0 - 1]])
        if tau <= 0.0:
            pf = (p0**level) * frac_fail
            fail_idx = np.flatnonzero(margins <= 0.0)
            samples = tuple(
                AugmentedSample(phis[i].copy(), thetas[i].copy(), float(perf[i]), True)
                for i in fail_idx
            )
            terms = level * (1.0 - p0) / (n_per_level * p0)
            if frac_fail > 0:
                terms += (1.0 - frac_fail) / (n_per_level * frac_fail)
            cov = math.sqrt(terms) if pf > 0 else math.inf
            return FailureEstimate(
                pf,
                cov,
                model.n_evaluations - n_evals_start,
                samples,
                "subset-simulation",
                n_levels=level + 1,
                escalate=pf == 0.0,
            )
        level += 1
        if level >= max_levels:
            raise ConvergenceError(
                f"subset simulation exceeded {max_levels} levels",
                partial={"levels": level, "threshold": tau},
            )

        seed_idx = order[:n0]
        s_phis = phis[seed_idx]
        mus, sigmas = resolve_parameters(specs, s_phis)
        s_us = (thetas[seed_idx] - mus) / sigmas
        scales_phi, scales_u = _seed_scales(space, s_phis, s_us, 1.0)

        def accept(phi: np.ndarray, p: float, failed: bool, _tau=tau) -> bool:
            return float(model.margin(p)) <= _tau

        steps = n_per_level // n0 - 1
        new_phis, new_thetas, new_perf = [], [], []
        for c in range(n0):
            chain_rng = np.random.Generator(np.random.PCG64(seed_seq.spawn(1)[0]))
            kernel = _MMHKernel(
                model, space, specs, scales_phi, scales_u, accept, chain_rng
            )
            state = (
                s_phis[c].copy(),
                s_us[c].copy(),
                thetas[seed_idx[c]].copy(),
                float(perf[seed_idx[c]]),
            )
            new_phis.append(state[0]); new_thetas.append(state[2]); new_perf.append(state[3])
            for _ in range(steps):
                state = kernel.step(state)
                new_phis.append(state[0]); new_thetas.append(state[2]); new_perf.append(state[3])
        phis = np.array(new_phis)
        thetas = np.array(new_thetas)
        perf = np.array(new_perf)
        margins = np.asarray(model.margin(perf), dtype=float)
