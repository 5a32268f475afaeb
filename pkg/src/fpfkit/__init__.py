"""fpfkit: failure probability surfaces over a design space.

The package estimates the probability of failure as a function of design
parameters from a single pool of failure samples. Failed samples from a pilot
reliability run are treated as draws from the design density conditional on
failure; an adaptive binary partition estimates that density, low-density
regions are repopulated with Markov chains and re-estimated, and the stitched
density is rescaled into a failure probability surface. A smooth log-scale
regression surface fitted to the partition cells supports gradients and
design optimization.
"""

__version__ = "0.1.0"

from .benchmarks import (
    BoxBeamModel,
    TableModel,
    ToyModel,
    analytic_toy_fpf,
    beam_design_space,
    beam_frequency,
    beam_section,
    beam_variable_specs,
    grid_dmcs_oracle,
    toy_design_space,
    toy_pf_exact,
    toy_variable_specs,
)
from .bsp import BinaryPartition, PiecewiseConstantDensity, bsp_estimate
from .config import PipelineConfig, RunConfig, load_config, parse_config
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateThresholdError,
    FpfkitError,
    InfeasibleProblemError,
    RegionPopulationError,
)
from .model import (
    AugmentedSample,
    DesignSpace,
    LimitStateModel,
    RandomVariableSpec,
    design_prior_density,
    resolve_parameters,
)
from .optimize import DesignProblem, OptimalDesign, objective_mean_area, optimize
from .pipeline import (
    FPFApproximation,
    RegionChainResult,
    run_pipeline,
    threshold_from_ratio,
)
from .regions import Box, RegionIndicator
from .reliability import (
    ChainParams,
    FailureEstimate,
    direct_mcs,
    mmh_chain,
    populate_region,
    subset_simulation,
)
from .smoothing import SmoothedFPF, extract_support_points, fit_surface, smoothed_fpf

__all__ = [
    "AugmentedSample",
    "BinaryPartition",
    "Box",
    "BoxBeamModel",
    "ChainParams",
    "ConfigError",
    "ConvergenceError",
    "DegenerateThresholdError",
    "DesignProblem",
    "DesignSpace",
    "FailureEstimate",
    "FPFApproximation",
    "FpfkitError",
    "InfeasibleProblemError",
    "LimitStateModel",
    "OptimalDesign",
    "PiecewiseConstantDensity",
    "PipelineConfig",
    "RandomVariableSpec",
    "RegionChainResult",
    "RegionIndicator",
    "RegionPopulationError",
    "RunConfig",
    "SmoothedFPF",
    "TableModel",
    "ToyModel",
    "analytic_toy_fpf",
    "beam_design_space",
    "beam_frequency",
    "beam_section",
    "beam_variable_specs",
    "bsp_estimate",
    "design_prior_density",
    "direct_mcs",
    "extract_support_points",
    "fit_surface",
    "grid_dmcs_oracle",
    "load_config",
    "mmh_chain",
    "objective_mean_area",
    "optimize",
    "parse_config",
    "populate_region",
    "resolve_parameters",
    "run_pipeline",
    "smoothed_fpf",
    "subset_simulation",
    "threshold_from_ratio",
    "toy_design_space",
    "toy_pf_exact",
    "toy_variable_specs",
]
