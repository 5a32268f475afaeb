"""Orchestration of the three commands (run, grid, compare) and their
artifact trees. Manifests echo the resolved config, per-stage evaluation
counts, and sha256 checksums of every artifact; they contain no timestamps or
absolute paths, so a fixed config and seed reproduce the tree byte for byte.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import (
    density_record,
    level_record,
    load_oracle_csv,
    load_surface,
    load_table_csv,
    sha256_of,
    surface_record,
    write_csv,
    write_json,
    write_oracle_csv,
    write_samples_csv,
)
from .benchmarks import (
    BoxBeamModel,
    TableModel,
    ToyModel,
    analytic_toy_fpf,
    beam_design_space,
    beam_variable_specs,
    grid_dmcs_oracle,
    grid_points,
    table_variable_specs,
    toy_design_space,
    toy_variable_specs,
)
from .config import RunConfig
from .errors import ConfigError, InfeasibleProblemError
from .model import DesignSpace
from .optimize import DesignProblem, objective_mean_area, optimize
from .pipeline import run_pipeline
from .smoothing import extract_support_points, fit_surface, SmoothedFPF


def build_problem(config: RunConfig, base_dir: Path | None = None):
    """Model, design space, and variable specs for a run configuration."""
    kind = config.model.type
    if kind == "beam":
        model = BoxBeamModel(config.model.band, config.model.length_mm)
        space = DesignSpace(config.bounds) if config.bounds else beam_design_space()
        specs = beam_variable_specs()
    elif kind == "toy":
        model = ToyModel()
        space = DesignSpace(config.bounds) if config.bounds else toy_design_space()
        specs = toy_variable_specs()
    elif kind == "table":
        path = Path(config.model.table_path)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"table file not found: {path}")
        axes, values = load_table_csv(path)
        model = TableModel(axes, values)
        space = DesignSpace(config.bounds) if config.bounds else model.design_space()
        table_space = model.design_space()
        for (lo, hi), (tlo, thi) in zip(space.bounds, table_space.bounds):
            if lo < tlo or hi > thi:
                raise ConfigError(
                    f"design bounds ({lo}, {hi}) exceed the table grid ({tlo}, {thi})"
                )
    else:
        raise ConfigError(f"unknown model type {kind!r}")
    return model, space, specs


def _objective_for(config: RunConfig, model):
    if isinstance(model, BoxBeamModel):
        wall = config.optimization.wall_mm
        return lambda phi: objective_mean_area(phi, wall)
    return lambda phi: float(np.sum(phi))


def _checksum_manifest(out_dir: Path, manifest: dict) -> None:
    files = sorted(
        p for p in out_dir.rglob("*") if p.is_file() and p.name != "manifest.json"
    )
    manifest["artifacts"] = {
        str(p.relative_to(out_dir)): sha256_of(p) for p in files
    }
    write_json(out_dir / "manifest.json", manifest)


def run_command(config: RunConfig, out_dir: Path, base_dir: Path | None = None) -> dict:
    """Full pipeline run: chain, surface, grids, optional optima, manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "levels").mkdir(exist_ok=True)

    model, space, specs = build_problem(config, base_dir)
    seed_seq = np.random.SeedSequence(config.seed)
    chain, approx = run_pipeline(model, space, specs, config.pipeline, seed_seq)

    support = extract_support_points(chain)
    surface = fit_surface(
        support,
        noise_floor=config.smoothing.noise_floor,
        length_scales=(
            np.array(config.smoothing.length_scales)
            if config.smoothing.length_scales
            else None
        ),
    )
    smoothed = SmoothedFPF(surface, chain.pf, space)

    theta_names = [s.name for s in specs]
    for level in chain.levels:
        write_samples_csv(
            out_dir / "levels" / f"level_{level.index}_samples.csv",
            level.samples,
            theta_names,
        )
        write_json(out_dir / "levels" / f"level_{level.index}.json", level_record(level))

    ndim = space.ndim
    phi_cols = [f"phi_{i + 1}" for i in range(ndim)]
    write_csv(
        out_dir / "support_points.csv",
        phi_cols + ["log_density", "level", "weight"],
        (list(p.location) + [p.log_density, p.level, p.weight] for p in support),
    )
    write_json(out_dir / "surface.json", surface_record(smoothed))

    pts = grid_points(space, config.output.fpf_grid_resolution)
    composite = approx.fpf(pts)
    smooth_vals = np.array([smoothed(p) for p in pts])
    header = phi_cols + ["composite_fpf", "smoothed_fpf"]
    extra = None
    if isinstance(model, ToyModel):
        header.append("analytic_fpf")
        extra = analytic_toy_fpf(pts)
    elif isinstance(model, TableModel):
        header.append("table_fpf")
        extra = model.table_fpf(pts)
    rows = []
    for i in range(len(pts)):
        row = list(pts[i]) + [composite[i], smooth_vals[i]]
        if extra is not None:
            row.append(extra[i])
        rows.append(row)
    write_csv(out_dir / "fpf_grid.csv", header, rows)

    grads = np.array([smoothed.gradient(p) for p in pts])
    write_csv(
        out_dir / "gradient_grid.csv",
        phi_cols + ["smoothed_fpf"] + [f"grad_{i + 1}" for i in range(ndim)],
        (list(pts[i]) + [smooth_vals[i]] + list(grads[i]) for i in range(len(pts))),
    )

    optima_summary = []
    if config.optimization.allowable:
        objective = _objective_for(config, model)
        rows = []
        for allowable in config.optimization.allowable:
            problem = DesignProblem(objective, smoothed, space, allowable)
            opt_seq = seed_seq.spawn(1)[0]
            try:
                result = optimize(problem, opt_seq)
                rows.append(
                    [allowable] + list(result.phi)
                    + [result.objective, result.pf, result.feasible, result.active,
                       len(result.starts)]
                )
                optima_summary.append(
                    {"allowable": allowable, "phi": [float(v) for v in result.phi],
                     "objective": result.objective, "pf": result.pf,
                     "feasible": True, "active": result.active}
                )
            except InfeasibleProblemError as exc:
                cand = exc.best_candidate
                rows.append(
                    [allowable] + list(cand.phi)
                    + [cand.objective, cand.pf, False, False, 0]
                )
                optima_summary.append(
                    {"allowable": allowable, "phi": [float(v) for v in cand.phi],
                     "objective": cand.objective, "pf": cand.pf,
                     "feasible": False, "active": False}
                )
        write_csv(
            out_dir / "optima.csv",
            ["allowable"] + phi_cols + ["objective", "pf", "feasible", "active", "n_starts"],
            rows,
        )

    total = chain.evaluations["total"]
    if total != model.n_evaluations:
        raise AssertionError(
            f"stage evaluation counts ({total}) disagree with the model counter "
            f"({model.n_evaluations})"
        )
    manifest = {
        "version": __version__,
        "command": "run",
        "seed": config.seed,
        "config": config.resolved(),
        "evaluations": chain.evaluations,
        "chain": {
            "n_iterations": chain.n_iterations,
            "n_regions": len(chain.regions),
            "pf": chain.pf,
            "pilot_cov": chain.pilot.cov,
            "pilot_method": chain.pilot.method,
            "stopping": chain.stopping,
            "ratios": list(chain.ratios),
            "weights": list(chain.weights),
            "thresholds": [level.threshold for level in chain.levels],
        },
        "optima": optima_summary,
    }
    _checksum_manifest(out_dir, manifest)
    return manifest


def grid_command(
    config: RunConfig,
    out_dir: Path,
    base_dir: Path | None = None,
    resolution: int | None = None,
    n_per_point: int | None = None,
    workers: int = 1,
) -> dict:
    """Brute-force oracle over the design grid; writes oracle.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model, space, specs = build_problem(config, base_dir)
    res = resolution if resolution is not None else config.grid.resolution
    n = n_per_point if n_per_point is not None else config.grid.n_per_point
    oracle = grid_dmcs_oracle(
        model, space, specs, res, n, np.random.SeedSequence(config.seed), workers
    )
    write_oracle_csv(out_dir / "oracle.csv", oracle)
    if oracle.total_evaluations != model.n_evaluations:
        raise AssertionError("oracle evaluation count disagrees with the model counter")
    manifest = {
        "version": __version__,
        "command": "grid",
        "seed": config.seed,
        "config": config.resolved(),
        "resolution": res,
        "n_per_point": n,
        "evaluations": {"total": oracle.total_evaluations},
    }
    _checksum_manifest(out_dir, manifest)
    return manifest


def compare_command(
    run_dir: Path,
    oracle_path: Path,
    out_dir: Path,
    tol_log10: float = 0.3,
    min_pf: float = 1e-4,
    min_fraction: float = 0.9,
) -> tuple[bool, dict]:
    """Per-point log10 comparison of a run's smoothed FPF against an oracle.

    Points with oracle pf below ``min_pf`` are reported but not judged. The
    comparison passes when at least ``min_fraction`` of the judged points are
    within ``tol_log10`` decades.
    """
    run_dir = Path(run_dir)
    surface_path = run_dir / "surface.json"
    if not surface_path.exists():
        raise ConfigError(f"run directory has no surface.json: {run_dir}")
    oracle_path = Path(oracle_path)
    if oracle_path.is_dir():
        oracle_path = oracle_path / "oracle.csv"
    if not oracle_path.exists():
        raise ConfigError(f"oracle file not found: {oracle_path}")
    smoothed = load_surface(surface_path)
    oracle = load_oracle_csv(oracle_path)

    mine = tuple((float(lo), float(hi)) for lo, hi in smoothed.space.bounds)
    theirs = tuple((float(lo), float(hi)) for lo, hi in oracle.bounds)
    if len(mine) != len(theirs) or any(
        abs(a - c) > 1e-9 or abs(b - d) > 1e-9
        for (a, b), (c, d) in zip(mine, theirs)
    ):
        raise ConfigError(
            f"design spaces differ: run has {mine}, oracle has {theirs}"
        )

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ndim = oracle.points.shape[1]
    rows = []
    judged = 0
    within = 0
    abs_ratios = []
    for i in range(len(oracle.points)):
        phi = oracle.points[i]
        opf = float(oracle.pf[i])
        mpf = float(smoothed(phi))
        if opf > 0.0:
            ratio = math.log10(mpf / opf)
        else:
            ratio = math.nan
        include = opf >= min_pf
        ok = include and abs(ratio) <= tol_log10
        if include:
            judged += 1
            abs_ratios.append(abs(ratio))
            if ok:
                within += 1
        rows.append(list(phi) + [opf, mpf, ratio, include, ok])
    fraction = within / judged if judged else 0.0
    passed = judged > 0 and fraction >= min_fraction
    summary = {
        "n_points": len(oracle.points),
        "n_judged": judged,
        "n_within": within,
        "fraction_within": fraction,
        "tol_log10": tol_log10,
        "min_pf": min_pf,
        "min_fraction": min_fraction,
        "max_abs_log10": max(abs_ratios) if abs_ratios else None,
        "median_abs_log10": float(np.median(abs_ratios)) if abs_ratios else None,
        "pass": passed,
    }
    write_csv(
        out_dir / "comparison.csv",
        [f"phi_{i + 1}" for i in range(ndim)]
        + ["oracle_pf", "smoothed_fpf", "log10_ratio", "judged", "within"],
        rows,
    )
    write_json(out_dir / "comparison.json", summary)
    return passed, summary
