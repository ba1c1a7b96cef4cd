import math

import numpy as np
import pytest

from entroflow import geometry, quadrature
from entroflow.kernels import (
    GaussianKernel,
    SphereHeatKernel,
    WrappedGaussianKernel,
    adjoint_residual,
    canonical_kernel,
    kernel_mass,
    parse_kernel,
)


def test_gaussian_mass_is_exact(line_model, line_kernel):
    assert kernel_mass(line_kernel, line_model, 1.0) == pytest.approx(1.0, abs=1e-10)


def test_gaussian_solves_static_heat_equation(line_model, line_kernel):
    # dp/dt = Lap p on a static metric (tr dg/dt = 0)
    assert adjoint_residual(line_kernel, line_model, 0.5, [1.0]) <= 1e-8


def test_wrapped_kernel_adjoint_equation(circle_model, circle_kernel):
    assert adjoint_residual(circle_kernel, circle_model, 1.0, [2.0]) <= 1e-6


def test_sphere_kernel_adjoint_equation(sphere_model, sphere_kernel):
    y = np.array([0.0, 0.6, 0.8])
    assert adjoint_residual(sphere_kernel, sphere_model, 0.5, y) <= 1e-6


def test_wrapped_mass_against_brute_force_wrap_sum(circle_model, circle_kernel):
    # oracle: 1e4 wrap terms summed directly on a dense angle grid
    t = 2.0
    model = geometry.circle(1.0, -0.1, time_window=(0.0, 4.0))
    kern = WrappedGaussianKernel(np.array([0.0]), model)
    s = float(model.time_change(t))
    thetas = (np.arange(4096) + 0.5) * 2 * np.pi / 4096
    wraps = 2 * np.pi * np.arange(-5000, 5001)
    dense = np.exp(-((thetas[:, None] + wraps) ** 2) / (4 * s)).sum(1)
    dense /= np.sqrt(4 * np.pi * s)
    oracle = float(dense.mean() * 2 * np.pi)  # integral over dtheta
    assert oracle == pytest.approx(1.0, abs=1e-12)
    assert kernel_mass(kern, model, t) == pytest.approx(1.0, abs=1e-8)


def test_sphere_mass_only_constant_mode(sphere_model, sphere_kernel):
    # every l >= 1 harmonic integrates to zero, so the mass is the l = 0 term
    for t in (0.2, 0.7):
        assert kernel_mass(sphere_kernel, sphere_model, t) == pytest.approx(
            1.0, abs=1e-8
        )


@pytest.mark.parametrize("t", np.geomspace(0.1, 1.0, 5).tolist())
def test_masses_on_log_grid(t, line_model, line_kernel, circle_model, circle_kernel,
                            sphere_model, sphere_kernel):
    assert kernel_mass(line_kernel, line_model, t) == pytest.approx(1.0, abs=1e-8)
    assert kernel_mass(circle_kernel, circle_model, t) == pytest.approx(1.0, abs=1e-8)
    assert kernel_mass(sphere_kernel, sphere_model, t) == pytest.approx(1.0, abs=1e-8)


def test_gaussian_mass_in_three_dimensions():
    model = geometry.space(3)
    kern = GaussianKernel(np.zeros(3), model)
    assert kernel_mass(kern, model, 0.5) == pytest.approx(1.0, abs=1e-9)


def test_kernel_positivity_on_quadrature_nodes(circle_model, circle_kernel,
                                               sphere_model, sphere_kernel):
    for t in (0.2, 1.0):
        pts, _ = quadrature.build_grid(circle_model, np.array([0.0]), t)
        assert np.min(circle_kernel.density(t, pts)) > 0.0
    for t in (0.2, 1.0):
        pts, _ = quadrature.build_grid(sphere_model, np.array([1.0, 0, 0]), t)
        assert np.min(sphere_kernel.density(t, pts)) > 0.0


def test_sphere_kernel_reproduces_eigenfunctions(sphere_model, sphere_kernel):
    # int P_l(y . a) k(s, x . y) dA = exp(-l(l+1) s) P_l(x . a)
    from numpy.polynomial.legendre import Legendre

    t = 0.5
    s = float(sphere_model.time_change(t))
    pts, w = quadrature.build_grid(sphere_model, sphere_kernel.base_point, t, level=1)
    c = float(sphere_model.conformal(t))
    a = np.array([0.0, 0.0, 1.0])
    for ell in (1, 2, 5):
        p = Legendre.basis(ell)
        vals = p(pts @ a) * sphere_kernel.density(t, pts)
        got = float(np.dot(vals, w))
        want = math.exp(-ell * (ell + 1) * s) * p(sphere_kernel.base_point @ a)
        assert got == pytest.approx(want, abs=1e-10)


def test_wrapped_kernel_first_moment(circle_model, circle_kernel):
    # int cos(theta) q dtheta = exp(-s) for the wrapped Gaussian at x = 0
    t = 1.0
    s = float(circle_model.time_change(t))
    pts, w = quadrature.build_grid(circle_model, np.array([0.0]), t)
    got = float(np.dot(np.cos(pts[:, 0]) * circle_kernel.density(t, pts), w))
    assert got == pytest.approx(math.exp(-s), abs=1e-12)


def test_canonical_and_parse(line_model, circle_model, sphere_model):
    assert isinstance(canonical_kernel(line_model, [0.0]), GaussianKernel)
    assert isinstance(canonical_kernel(circle_model, [0.0]), WrappedGaussianKernel)
    assert isinstance(canonical_kernel(sphere_model, [1.0, 0, 0]), SphereHeatKernel)
    with pytest.raises(ValueError):
        canonical_kernel(geometry.hyperbolic(), [0.0, 1.0])
    k = parse_kernel("auto", line_model, [0.0])
    assert isinstance(k, GaussianKernel)
    with pytest.raises(ValueError):
        parse_kernel("nope", line_model, [0.0])


def test_mass_requires_positive_time(line_model, line_kernel):
    with pytest.raises(ValueError):
        kernel_mass(line_kernel, line_model, 0.0)


def test_wrapped_kernel_is_periodic(circle_model, circle_kernel):
    # unwrapped path angles must see the same density as their principal value
    base = circle_kernel.density(1.0, np.array([[1.3]]))
    for shift in (2 * np.pi, -6 * np.pi, 40 * np.pi):
        shifted = circle_kernel.density(1.0, np.array([[1.3 + shift]]))
        assert shifted == pytest.approx(base, rel=1e-14)
