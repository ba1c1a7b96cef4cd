import math

import numpy as np
import pytest

from entroflow import geometry, kernels, solutions
from entroflow.entropy import first_variation_integrand, ulogu_integrand
from entroflow.errors import QuadratureDivergence
from entroflow.quadrature import (
    Refinement,
    build_grid,
    inner_cutoff,
    kernel_expectation,
    kernel_integral,
    refine_expectation,
    truncation_radius,
)


def test_exponential_moments_against_closed_form(line_model, line_kernel):
    # E[exp(bY)] = exp(b^2 t) for Y ~ N(0, 2t): the moment generating oracle
    for b in (0.5, 1.0, 2.0, 3.0):
        for t in (0.25, 1.0, 2.0):
            f = lambda tt, pts: np.exp(b * pts[:, 0])
            got = kernel_integral(f, line_kernel, line_model, t, growth=b)
            assert got == pytest.approx(math.exp(b * b * t), rel=1e-10)


def test_polynomial_moments(line_model, line_kernel):
    # E[Y^2] = 2t, E[Y^4] = 3 (2t)^2
    t = 0.7
    got2 = kernel_integral(lambda tt, p: p[:, 0] ** 2, line_kernel, line_model, t)
    got4 = kernel_integral(lambda tt, p: p[:, 0] ** 4, line_kernel, line_model, t)
    assert got2 == pytest.approx(2 * t, rel=1e-10)
    assert got4 == pytest.approx(3 * (2 * t) ** 2, rel=1e-10)


def test_fixed_level_values_are_bit_reproducible(line_model, line_kernel):
    f = lambda tt, pts: np.exp(pts[:, 0])
    a = kernel_expectation(f, line_kernel, line_model, 0.5, level=1, growth=1.0)
    b = kernel_expectation(f, line_kernel, line_model, 0.5, level=1, growth=1.0)
    assert a == b


def test_truncation_radius_covers_growth():
    assert truncation_radius(1.0) == pytest.approx(16.0)
    assert truncation_radius(1.0, growth=2.0) == pytest.approx(4.0 + 16.0)


def test_tail_control_under_radius_growth(line_model, line_kernel):
    # enlarging the box through a bigger growth parameter must not move a
    # mild integral
    f = lambda tt, pts: np.exp(pts[:, 0])
    a = kernel_integral(f, line_kernel, line_model, 1.0, growth=1.0)
    b = kernel_integral(f, line_kernel, line_model, 1.0, growth=3.0)
    assert a == pytest.approx(b, abs=1e-10)


def test_divergence_rule_fires_for_radial_first_variation():
    model = geometry.punctured3()
    sol = solutions.RadialHarmonic3(model)
    kern = kernels.GaussianKernel(np.array([1.0, 0.0, 0.0]), model)
    ref = refine_expectation(first_variation_integrand(sol), kern, model, 1.0)
    assert ref.divergent and not ref.converged
    with pytest.raises(QuadratureDivergence) as err:
        kernel_integral(first_variation_integrand(sol), kern, model, 1.0)
    assert err.value.divergent
    assert len(err.value.levels) >= 4


def test_radial_entropy_integral_stabilizes():
    model = geometry.punctured3()
    sol = solutions.RadialHarmonic3(model)
    kern = kernels.GaussianKernel(np.array([1.0, 0.0, 0.0]), model)
    ref = refine_expectation(ulogu_integrand(sol), kern, model, 1.0)
    assert ref.converged
    spread = max(ref.values[:4]) - min(ref.values[:4])
    assert spread <= 1e-4


def test_inner_cutoff_sequence():
    assert [inner_cutoff(k) for k in range(4)] == pytest.approx(
        [1e-2, 1e-3, 1e-4, 1e-5]
    )


def test_punctured_shell_increment_matches_log_rate():
    # the divergent integrand grows by ln(10) * 4pi (4 pi t)^{-3/2} e^{-1/4t}
    # per decade of inner cutoff
    model = geometry.punctured3()
    sol = solutions.RadialHarmonic3(model)
    kern = kernels.GaussianKernel(np.array([1.0, 0.0, 0.0]), model)
    t = 1.0
    vals = [
        kernel_expectation(first_variation_integrand(sol), kern, model, t, level=lv)
        for lv in range(3)
    ]
    rate = math.log(10.0) * 4 * math.pi * (4 * math.pi * t) ** -1.5 * math.exp(-0.25)
    for a, b in zip(vals[:-1], vals[1:]):
        assert b - a == pytest.approx(rate, rel=1e-3)


def test_circle_grid_weights_integrate_volume(circle_model):
    t = 0.5
    pts, w = build_grid(circle_model, np.array([0.0]), t)
    c = float(circle_model.conformal(t))
    assert float(np.sum(w)) == pytest.approx(2 * np.pi * math.sqrt(c), rel=1e-12)


def test_sphere_grid_weights_integrate_volume(sphere_model):
    t = 0.5
    pts, w = build_grid(sphere_model, np.array([1.0, 0, 0]), t)
    c = float(sphere_model.conformal(t))
    assert float(np.sum(w)) == pytest.approx(4 * np.pi * c, rel=1e-12)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)


def test_flat_space_radial_grid_mass():
    model = geometry.space(2)
    kern = kernels.GaussianKernel(np.zeros(2), model)
    assert kernel_integral(
        lambda tt, p: np.ones(p.shape[0]), kern, model, 0.5
    ) == pytest.approx(1.0, abs=1e-9)


def test_refinement_object_shape(line_model, line_kernel):
    ref = refine_expectation(
        lambda tt, p: np.ones(p.shape[0]), line_kernel, line_model, 0.5
    )
    assert isinstance(ref, Refinement)
    assert ref.converged and not ref.divergent
    assert ref.value == pytest.approx(1.0, abs=1e-12)
