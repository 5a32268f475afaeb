"""Artifact serialization: deterministic CSV/JSON writers and loaders.

Floats are written with repr (shortest round-trip form), so artifacts from a
fixed seed are byte-identical across runs and reload to bit-identical
estimators.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from .bsp import BinaryPartition, CutNode, LeafCell, PiecewiseConstantDensity
from .model import AugmentedSample, DesignSpace
from .pipeline import PartitionLevel, RegionChainResult
from .regions import Box, RegionIndicator
from .smoothing import RegressionSurface, SmoothedFPF


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def sha256_of(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------- samples ---


def write_samples_csv(
    path: Path, samples, theta_names: list[str]
) -> None:
    ndim = samples[0].phi.size if samples else 0
    header = [f"phi_{i + 1}" for i in range(ndim)] + theta_names + ["performance", "failed"]
    rows = (
        list(s.phi) + list(s.theta) + [s.performance, s.failed] for s in samples
    )
    write_csv(path, header, rows)


# ----------------------------------------------------------- grid oracles ---


def write_oracle_csv(path: Path, oracle) -> None:
    ndim = oracle.points.shape[1]
    header = [f"phi_{i + 1}" for i in range(ndim)] + ["pf_hat", "n", "cov"]
    rows = (
        list(oracle.points[i]) + [oracle.pf[i], int(oracle.n[i]), oracle.cov[i]]
        for i in range(len(oracle.points))
    )
    write_csv(path, header, rows)


def load_oracle_csv(path: Path):
    """Read a grid oracle CSV back into points/pf/n/cov arrays.

    The grid must be full factorial; bounds and resolution are recovered from
    the coordinate columns.
    """
    from .benchmarks import FPFGridOracle

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [row for row in reader]
    ndim = sum(1 for name in header if name.startswith("phi_"))
    if ndim == 0 or header[:ndim] != [f"phi_{i + 1}" for i in range(ndim)]:
        raise ValueError(f"{path}: expected leading phi_1..phi_n columns")
    for name in ("pf_hat", "n", "cov"):
        if name not in header:
            raise ValueError(f"{path}: missing column {name}")
    arr = np.array([[float(v) for v in row] for row in data])
    points = arr[:, :ndim]
    pf = arr[:, header.index("pf_hat")]
    n = arr[:, header.index("n")].astype(int)
    cov = arr[:, header.index("cov")]
    uniques = [np.unique(points[:, d]) for d in range(ndim)]
    res = len(uniques[0])
    if any(len(u) != res for u in uniques) or res**ndim != len(points):
        raise ValueError(f"{path}: points do not form a full factorial grid")
    bounds = tuple((float(u[0]), float(u[-1])) for u in uniques)
    return FPFGridOracle(points, pf, n, cov, bounds, res)


def load_table_csv(path: Path):
    """Tabulated FPF grid (phi_1..phi_n, pf) -> (axes, values) for TableModel."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [row for row in reader]
    ndim = sum(1 for name in header if name.startswith("phi_"))
    if ndim == 0 or "pf" not in header:
        raise ValueError(f"{path}: expected phi_1..phi_n and pf columns")
    arr = np.array([[float(v) for v in row] for row in data])
    points = arr[:, :ndim]
    pf = arr[:, header.index("pf")]
    axes = tuple(np.unique(points[:, d]) for d in range(ndim))
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) != len(points):
        raise ValueError(f"{path}: points do not form a full factorial grid")
    values = np.empty(shape)
    idx = tuple(
        np.searchsorted(axes[d], points[:, d]) for d in range(ndim)
    )
    values[idx] = pf
    return axes, values


# -------------------------------------------------------------- partitions ---


def _node_record(node) -> dict:
    if isinstance(node, LeafCell):
        return {"leaf": {"lo": list(node.lo), "hi": list(node.hi), "n": node.n}}
    return {
        "axis": node.axis,
        "position": node.position,
        "low": _node_record(node.low),
        "high": _node_record(node.high),
    }


def density_record(density: PiecewiseConstantDensity) -> dict:
    part = density.partition
    return {
        "domain_lo": list(part.lo),
        "domain_hi": list(part.hi),
        "n_samples": part.n_samples,
        "tree": _node_record(part.root),
        "alpha": density.alpha,
        "beta": density.beta,
        "log_score": density.log_score,
        "masses": [float(m) for m in density.masses],
    }


def _node_from_record(rec: dict, leaves: list[LeafCell]):
    if "leaf" in rec:
        leaf = LeafCell(tuple(rec["leaf"]["lo"]), tuple(rec["leaf"]["hi"]), rec["leaf"]["n"])
        leaves.append(leaf)
        return leaf
    low = _node_from_record(rec["low"], leaves)
    high = _node_from_record(rec["high"], leaves)
    return CutNode(rec["axis"], rec["position"], low, high)


def density_from_record(rec: dict) -> PiecewiseConstantDensity:
    leaves: list[LeafCell] = []
    root = _node_from_record(rec["tree"], leaves)
    part = BinaryPartition(
        tuple(rec["domain_lo"]),
        tuple(rec["domain_hi"]),
        root,
        tuple(leaves),
        rec["n_samples"],
        points=None,
    )
    return PiecewiseConstantDensity(
        part,
        np.array(rec["masses"], dtype=float),
        rec["alpha"],
        rec["beta"],
        rec["log_score"],
    )


def _boxes_record(region: RegionIndicator) -> list:
    return [{"lo": list(b.lo), "hi": list(b.hi)} for b in region.boxes]


def level_record(level: PartitionLevel) -> dict:
    return {
        "index": level.index,
        "captured": level.captured,
        "threshold": level.threshold,
        "ratio": level.ratio,
        "weight": level.weight,
        "n_samples": len(level.samples),
        "region": _boxes_record(level.region),
        "high_region": _boxes_record(level.high_region),
        "low_region": _boxes_record(level.low_region),
        "cells": [
            {
                "pieces": [{"lo": list(p.lo), "hi": list(p.hi)} for p in c.pieces],
                "volume": c.volume,
                "mass": c.mass,
                "density": c.density,
                "low": bool(lo),
            }
            for c, lo in zip(level.cells, level.low_mask)
        ],
        "estimate": density_record(level.raw),
    }


# ---------------------------------------------------------------- surfaces ---


def surface_record(smoothed: SmoothedFPF) -> dict:
    s = smoothed.surface
    return {
        "x": [[float(v) for v in row] for row in s.x],
        "coef": [float(v) for v in s.coef],
        "length_scales": [float(v) for v in s.length_scales],
        "signal_var": s.signal_var,
        "noise_floor": s.noise_floor,
        "y_mean": s.y_mean,
        "pf": smoothed.pf,
        "bounds": [[lo, hi] for lo, hi in smoothed.space.bounds],
    }


def surface_from_record(rec: dict) -> SmoothedFPF:
    surface = RegressionSurface(
        x=np.array(rec["x"], dtype=float),
        coef=np.array(rec["coef"], dtype=float),
        length_scales=np.array(rec["length_scales"], dtype=float),
        signal_var=rec["signal_var"],
        noise_floor=rec["noise_floor"],
        y_mean=rec["y_mean"],
    )
    space = DesignSpace(tuple((float(lo), float(hi)) for lo, hi in rec["bounds"]))
    return SmoothedFPF(surface, rec["pf"], space)


def load_surface(path: Path) -> SmoothedFPF:
    return surface_from_record(json.loads(Path(path).read_text()))
