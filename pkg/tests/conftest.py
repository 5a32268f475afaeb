"""Shared fixtures.

The two benchmark pipelines and the oracle grids are deterministic for a
fixed seed, so they run once per session and every test reads from the same
results. All of them finish in seconds on one core.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from fpfkit.config import RunConfig, load_config
from fpfkit.model import DesignSpace, LimitStateModel, RandomVariableSpec
from fpfkit.pipeline import FPFApproximation, RegionChainResult, run_pipeline
from fpfkit.runner import build_problem, grid_command, run_command
from fpfkit.smoothing import SmoothedFPF, smoothed_fpf

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"


@dataclass(frozen=True)
class PipelineCase:
    """One fully evaluated benchmark: chain, FPF evaluators, and the model."""

    config: RunConfig
    model: LimitStateModel
    space: DesignSpace
    specs: tuple[RandomVariableSpec, ...]
    chain: RegionChainResult
    approx: FPFApproximation
    smoothed: SmoothedFPF


def _run_case(name: str) -> PipelineCase:
    config = load_config(CONFIG_DIR / f"{name}.yaml")
    model, space, specs = build_problem(config, base_dir=CONFIG_DIR)
    chain, approx = run_pipeline(
        model, space, specs, config.pipeline, np.random.SeedSequence(config.seed)
    )
    scales = (
        None
        if config.smoothing.length_scales is None
        else np.asarray(config.smoothing.length_scales)
    )
    smoothed = smoothed_fpf(
        chain, space, noise_floor=config.smoothing.noise_floor, length_scales=scales
    )
    return PipelineCase(config, model, space, specs, chain, approx, smoothed)


@pytest.fixture(scope="session")
def toy_case() -> PipelineCase:
    return _run_case("toy")


@pytest.fixture(scope="session")
def beam_case() -> PipelineCase:
    return _run_case("beam")


@pytest.fixture(scope="session")
def toy_run_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("toy_run")
    run_command(load_config(CONFIG_DIR / "toy.yaml"), out, base_dir=CONFIG_DIR)
    return out


@pytest.fixture(scope="session")
def beam_run_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("beam_run")
    run_command(load_config(CONFIG_DIR / "beam.yaml"), out, base_dir=CONFIG_DIR)
    return out


@pytest.fixture(scope="session")
def toy_oracle_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("toy_oracle")
    grid_command(load_config(CONFIG_DIR / "toy.yaml"), out, base_dir=CONFIG_DIR)
    return out


@pytest.fixture(scope="session")
def beam_oracle_dir(tmp_path_factory) -> Path:
    """Full-size brute-force oracle grid for the beam (57.33M evaluations)."""
    out = tmp_path_factory.mktemp("beam_oracle")
    grid_command(load_config(CONFIG_DIR / "beam.yaml"), out, base_dir=CONFIG_DIR)
    return out
