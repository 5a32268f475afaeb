"""Tests for support-point extraction, the kernel ridge surface, and the
scaled smooth FPF wrapper."""

import math
import warnings

import numpy as np
import pytest

from fpfkit.model import DesignSpace
from fpfkit.pipeline import compose_density
from fpfkit.smoothing import (
    SmoothedFPF,
    SupportPoint,
    extract_support_points,
    fit_surface,
    fpf_gradient,
    smoothed_fpf,
)


def _line_points(xs, f, weight=1.0):
    return tuple(
        SupportPoint(np.array([x]), float(f(x)), 0, weight) for x in xs
    )


# ------------------------------------------------------- support points ---


def test_support_points_cover_high_cells_plus_final_low_region(toy_case):
    chain = toy_case.chain
    points = extract_support_points(chain)

    expected = []
    for level in chain.levels:
        last = level.index == chain.levels[-1].index
        for cell, is_low in zip(level.cells, level.low_mask):
            if not is_low or last:
                expected.append((level, cell))
    assert len(points) == len(expected)

    for point, (level, cell) in zip(points, expected):
        largest = max(cell.pieces, key=lambda piece: piece.volume)
        assert np.array_equal(point.location, np.asarray(largest.center))
        assert point.level == level.index
        assert point.weight == pytest.approx(level.weight * cell.mass)
        assert point.weight > 0
        assert math.isfinite(point.log_density)
        composite = compose_density(chain.levels, point.location)
        assert math.exp(point.log_density) == pytest.approx(composite, rel=1e-12)


def test_support_point_weights_sum_to_the_retained_mass(toy_case):
    # every level contributes weight * (high mass); the last adds its low mass
    points = extract_support_points(toy_case.chain)
    total = sum(p.weight for p in points)
    assert total == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------- surface fit ---


def test_fit_interpolates_a_smooth_function_with_explicit_scales():
    xs = np.linspace(0.0, 2.0, 25)
    f = lambda x: 1.0 + 0.5 * math.sin(3.0 * x)
    surface = fit_surface(
        _line_points(xs, f), noise_floor=1e-9, length_scales=np.array([0.5])
    )
    assert np.array_equal(surface.length_scales, np.array([0.5]))
    assert surface.noise_floor == 1e-9
    for x in xs:
        assert surface.predict(np.array([x])) == pytest.approx(f(x), abs=1e-4)
    for x in (xs[:-1] + xs[1:]) / 2:
        assert surface.predict(np.array([x])) == pytest.approx(f(x), abs=1e-4)


def test_predict_batch_matches_scalar_predict():
    xs = np.linspace(0.0, 1.0, 8)
    surface = fit_surface(
        _line_points(xs, lambda x: x * x), noise_floor=1e-6,
        length_scales=np.array([0.3]),
    )
    phis = np.array([[0.1], [0.55], [0.9]])
    batch = surface.predict_batch(phis)
    assert batch.shape == (3,)
    for value, phi in zip(batch, phis):
        assert value == surface.predict(phi)


def test_surface_gradient_matches_central_differences_1d():
    xs = np.linspace(0.0, 2.0, 25)
    f = lambda x: 1.0 + 0.5 * math.sin(3.0 * x)
    surface = fit_surface(
        _line_points(xs, f), noise_floor=1e-9, length_scales=np.array([0.5])
    )
    h = 1e-5
    for x in (0.3, 0.9, 1.4, 1.7):
        analytic = surface.gradient(np.array([x]))[0]
        fd = (
            surface.predict(np.array([x + h])) - surface.predict(np.array([x - h]))
        ) / (2 * h)
        assert analytic == pytest.approx(fd, abs=1e-6)


def test_surface_gradient_matches_central_differences_2d():
    rng = np.random.default_rng(5)
    x = rng.uniform(0.0, 1.0, size=(30, 2))
    f = lambda p: math.sin(2 * p[0]) + 0.5 * p[1] ** 2
    points = tuple(SupportPoint(xi, f(xi), 0, 1.0) for xi in x)
    surface = fit_surface(
        points, noise_floor=1e-8, length_scales=np.array([0.4, 0.4])
    )
    h = 1e-5
    for p in rng.uniform(0.1, 0.9, size=(5, 2)):
        analytic = surface.gradient(p)
        fd = np.array(
            [
                (surface.predict(p + h * e) - surface.predict(p - h * e)) / (2 * h)
                for e in np.eye(2)
            ]
        )
        assert np.allclose(analytic, fd, atol=1e-6)


def test_auto_length_scales_track_a_linear_trend():
    xs = np.linspace(0.0, 1.0, 12)
    f = lambda x: 2.0 * x - 0.5
    points = tuple(
        SupportPoint(np.array([x]), f(x), 0, 0.5 + x) for x in xs
    )
    surface = fit_surface(points, noise_floor=1e-6)
    assert surface.length_scales.shape == (1,)
    assert surface.length_scales[0] > 0
    for x in np.concatenate([xs, (xs[:-1] + xs[1:]) / 2]):
        assert surface.predict(np.array([x])) == pytest.approx(f(x), abs=0.1)


def test_two_support_points_fall_back_to_the_sample_spread():
    points = (
        SupportPoint(np.array([0.0]), 0.0, 0, 1.0),
        SupportPoint(np.array([1.0]), 1.0, 0, 1.0),
    )
    surface = fit_surface(points, noise_floor=1e-4)
    assert np.array_equal(surface.length_scales, np.array([0.5]))
    assert surface.predict(np.array([0.5])) == pytest.approx(0.5, abs=1e-3)


def test_duplicate_locations_collapse_when_values_agree():
    xs = np.linspace(0.0, 1.0, 6)
    points = _line_points(xs, lambda x: x) + (
        SupportPoint(np.array([xs[2]]), float(xs[2]), 1, 0.3),
    )
    surface = fit_surface(points, noise_floor=1e-6, length_scales=np.array([0.4]))
    assert len(surface.x) == len(xs)


def test_conflicting_duplicate_values_are_rejected():
    points = (
        SupportPoint(np.array([0.5]), 1.0, 0, 1.0),
        SupportPoint(np.array([0.5]), 2.0, 1, 1.0),
        SupportPoint(np.array([0.9]), 0.0, 0, 1.0),
    )
    with pytest.raises(ValueError, match="conflicting"):
        fit_surface(points, noise_floor=1e-6)


def test_fit_surface_validation():
    with pytest.raises(ValueError, match="zero support points"):
        fit_surface(())
    points = _line_points(np.linspace(0, 1, 5), lambda x: x)
    with pytest.raises(ValueError, match="noise_floor"):
        fit_surface(points, noise_floor=0.0)
    with pytest.raises(ValueError, match="length_scales"):
        fit_surface(points, length_scales=np.array([0.5, 0.5]))
    with pytest.raises(ValueError, match="length_scales"):
        fit_surface(points, length_scales=np.array([-0.5]))


# ---------------------------------------------------------- smoothed FPF ---


def test_smoothed_fpf_scales_the_exponentiated_surface(toy_case):
    smoothed = toy_case.smoothed
    assert smoothed.scale == pytest.approx(
        toy_case.chain.pf * toy_case.space.volume
    )
    phi = np.array([1.5])
    expected = math.exp(smoothed.surface.predict(phi)) * smoothed.scale
    assert smoothed(phi) == pytest.approx(expected, rel=1e-15)
    assert smoothed(phi) > 0


def test_smoothed_fpf_accepts_batches(toy_case):
    smoothed = toy_case.smoothed
    phis = np.array([[0.5], [1.5], [2.5], [3.5]])
    batch = smoothed(phis)
    assert batch.shape == (4,)
    for value, phi in zip(batch, phis):
        assert value == smoothed(phi)


def test_smoothed_fpf_gradient_chains_through_the_exponential(toy_case):
    smoothed = toy_case.smoothed
    phi = np.array([2.0])
    expected = smoothed(phi) * smoothed.surface.gradient(phi)
    assert np.array_equal(smoothed.gradient(phi), expected)


def test_smoothed_fpf_helper_matches_manual_assembly(toy_case):
    rebuilt = smoothed_fpf(
        toy_case.chain, toy_case.space, noise_floor=1e-4
    )
    assert isinstance(rebuilt, SmoothedFPF)
    assert rebuilt.pf == toy_case.chain.pf
    phi = np.array([1.0])
    assert rebuilt(phi) > 0


# -------------------------------------------------------- gradient guard ---


def test_gradient_outside_the_design_space_is_rejected(toy_case):
    with pytest.raises(ValueError, match="outside"):
        fpf_gradient(toy_case.smoothed, np.array([5.0]))


def test_gradient_on_the_boundary_warns_one_sided(toy_case):
    with pytest.warns(UserWarning, match="one-sided"):
        grad = fpf_gradient(toy_case.smoothed, np.array([0.0]))
    assert grad.shape == (1,)


def test_gradient_in_the_interior_is_warning_free(toy_case):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        grad = fpf_gradient(toy_case.smoothed, np.array([2.0]))
    assert grad.shape == (1,)
    assert math.isfinite(grad[0])
