"""Augmented-space stochastic model: design box, conditional random variables,
and the limit-state evaluation contract.

The augmented space stacks a design point ``phi`` (uniform artificial prior
over the design box) with the random vector ``theta`` whose per-variable
normal parameters may be tied to design coordinates. A limit-state model maps
``(phi, theta)`` to a scalar performance and a failure flag derived from a
continuous margin (margin <= 0 is failure).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DesignSpace:
    """Box of design variables carrying the uniform artificial prior."""

    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.bounds:
            raise ValueError("design space needs at least one dimension")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"invalid design bounds: ({lo}, {hi})")

    @property
    def ndim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    @property
    def volume(self) -> float:
        v = 1.0
        for lo, hi in self.bounds:
            v *= hi - lo
        return v

    def contains(self, phi: np.ndarray) -> bool:
        """Closed-box membership (both boundaries included)."""
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (self.ndim,):
            raise ValueError(f"expected phi of shape ({self.ndim},), got {phi.shape}")
        return bool(np.all(phi >= self.lower) and np.all(phi <= self.upper))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n uniform design points, shape (n, ndim)."""
        return rng.uniform(self.lower, self.upper, size=(n, self.ndim))


def design_prior_density(space: DesignSpace, phi: np.ndarray) -> float:
    """Uniform artificial prior p(phi): 1/volume inside the box, 0 outside."""
    return 1.0 / space.volume if space.contains(np.asarray(phi, dtype=float)) else 0.0


@dataclass(frozen=True)
class RandomVariableSpec:
    """Normal random variable whose parameters may follow a design coordinate.

    Exactly one of ``mean``/``mean_design`` must be given, and exactly one of
    ``std``/``cov``. A coefficient of variation multiplies the referenced
    design coordinate (``cov_design``, defaulting to ``mean_design``).
    """

    name: str
    family: str = "normal"
    mean: float | None = None
    mean_design: int | None = None
    std: float | None = None
    cov: float | None = None
    cov_design: int | None = None

    def __post_init__(self) -> None:
        if self.family != "normal":
            raise ValueError(f"unsupported family {self.family!r} for {self.name!r}")
        if (self.mean is None) == (self.mean_design is None):
            raise ValueError(f"{self.name!r}: give exactly one of mean, mean_design")
        if (self.std is None) == (self.cov is None):
            raise ValueError(f"{self.name!r}: give exactly one of std, cov")
        if self.std is not None and self.std <= 0:
            raise ValueError(f"{self.name!r}: std must be positive")
        if self.cov is not None:
            if self.cov <= 0:
                raise ValueError(f"{self.name!r}: cov must be positive")
            if self.cov_design is None and self.mean_design is None:
                raise ValueError(
                    f"{self.name!r}: cov needs a design coordinate reference"
                )

    def resolve(self, phi: np.ndarray) -> tuple[float, float]:
        """(mean, std) at the design point ``phi``."""
        phi = np.asarray(phi, dtype=float)
        mu = self.mean if self.mean is not None else float(phi[self.mean_design])
        if self.std is not None:
            sigma = self.std
        else:
            ref = self.cov_design if self.cov_design is not None else self.mean_design
            sigma = self.cov * float(phi[ref])
        if sigma <= 0:
            raise ValueError(f"{self.name!r}: resolved std {sigma} is not positive")
        return float(mu), float(sigma)

    def resolve_batch(self, phis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized resolve over rows of ``phis`` (n, d_phi) -> (mu, sigma)."""
        phis = np.asarray(phis, dtype=float)
        n = phis.shape[0]
        mu = (
            np.full(n, self.mean)
            if self.mean is not None
            else phis[:, self.mean_design].copy()
        )
        if self.std is not None:
            sigma = np.full(n, self.std)
        else:
            ref = self.cov_design if self.cov_design is not None else self.mean_design
            sigma = self.cov * phis[:, ref]
        if np.any(sigma <= 0):
            raise ValueError(f"{self.name!r}: non-positive std in batch resolve")
        return mu, sigma


def resolve_parameters(
    specs: tuple[RandomVariableSpec, ...], phis: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (mu, sigma) arrays of shape (n, n_theta) for design points."""
    phis = np.asarray(phis, dtype=float)
    mus = np.empty((phis.shape[0], len(specs)))
    sigmas = np.empty_like(mus)
    for j, spec in enumerate(specs):
        mus[:, j], sigmas[:, j] = spec.resolve_batch(phis)
    return mus, sigmas


@dataclass(frozen=True)
class AugmentedSample:
    """One evaluated point of the augmented space."""

    phi: np.ndarray
    theta: np.ndarray
    performance: float
    failed: bool


class LimitStateModel:
    """Evaluation contract: (phi, theta) -> (performance, failed).

    Failure is derived from a continuous margin of the performance value,
    failed iff margin(performance) <= 0, so the flag is consistent with the
    margin by construction. The evaluation counter is thread safe; evaluation
    itself must be pure (no state besides the counter).

    Subclasses implement ``performance_batch`` (vectorized over rows) and
    ``margin``; ``theta_valid`` may reject physically meaningless draws so
    samplers can redraw instead of clamping.
    """

    name = "model"

    def __init__(self) -> None:
        self._count = 0
        self._lock = threading.Lock()

    @property
    def n_evaluations(self) -> int:
        return self._count

    def performance_batch(self, phis: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def margin(self, performance):
        """Continuous failure margin; <= 0 iff failed. Accepts arrays."""
        raise NotImplementedError

    def theta_valid(self, phi: np.ndarray, theta: np.ndarray) -> bool:
        return True

    def theta_valid_batch(self, phis: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        return np.ones(thetas.shape[0], dtype=bool)

    def evaluate(self, phi: np.ndarray, theta: np.ndarray) -> tuple[float, bool]:
        perf, failed = self.evaluate_batch(
            np.asarray(phi, dtype=float)[None, :], np.asarray(theta, dtype=float)[None, :]
        )
        return float(perf[0]), bool(failed[0])

    def evaluate_batch(
        self, phis: np.ndarray, thetas: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        phis = np.asarray(phis, dtype=float)
        thetas = np.asarray(thetas, dtype=float)
        if phis.shape[0] != thetas.shape[0]:
            raise ValueError("phi/theta batch lengths differ")
        perf = np.asarray(self.performance_batch(phis, thetas), dtype=float)
        with self._lock:
            self._count += phis.shape[0]
        return perf, np.asarray(self.margin(perf)) <= 0.0


_MAX_REDRAWS = 100


def sample_theta(
    specs: tuple[RandomVariableSpec, ...],
    model: LimitStateModel,
    phis: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw theta rows conditional on each design row, redrawing invalid ones."""
    mus, sigmas = resolve_parameters(specs, phis)
    thetas = rng.normal(mus, sigmas)
    bad = ~model.theta_valid_batch(phis, thetas)
    tries = 0
    while np.any(bad):
        tries += 1
        if tries > _MAX_REDRAWS:
            raise RuntimeError("theta redraw limit exceeded; check variable specs")
        thetas[bad] = rng.normal(mus[bad], sigmas[bad])
        bad = ~model.theta_valid_batch(phis, thetas)
    return thetas


def sample_augmented(
    space: DesignSpace,
    specs: tuple[RandomVariableSpec, ...],
    model: LimitStateModel,
    rng: np.random.Generator,
) -> AugmentedSample:
    """One joint draw: phi uniform over the box, theta | phi, one evaluation."""
    phi = space.sample(rng, 1)
    theta = sample_theta(specs, model, phi, rng)
    perf, failed = model.evaluate_batch(phi, theta)
    return AugmentedSample(phi[0], theta[0], float(perf[0]), bool(failed[0]))
