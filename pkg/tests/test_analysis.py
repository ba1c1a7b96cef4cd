import math

import numpy as np
import pytest

from entroflow import geometry, kernels, solutions
from entroflow.analysis import (
    GROWTH_CONSTANT,
    GROWTH_LINEAR,
    GROWTH_SUPERLINEAR,
    classify_growth,
    corollary_bounds,
    divergence_demo,
    gradient_entropy_check,
    rigidity_check,
    separation_test,
)
from entroflow.entropy import entropy_curve
from entroflow.errors import InsufficientCurve
from entroflow.solutions import Constant, ExponentialLine, SumOfExponentialsLine


def _curve(sol, model, kernel, t_lo=0.25, t_hi=4.0, n=16):
    return entropy_curve(
        sol, model, kernel, np.geomspace(t_lo, t_hi, n), with_conditions=False
    )


# --- growth classification -----------------------------------------------------


def test_constant_classification(line_model, line_kernel):
    curve = _curve(Constant(5.0, line_model), line_model, line_kernel)
    rep = classify_growth(curve, sup_grad_sample=0.0, super_ricci_ok=True)
    assert rep.growth_class == GROWTH_CONSTANT
    assert rep.theta == pytest.approx(0.0, abs=1e-12)
    assert not rep.inconsistent


def test_linear_classification_eternal(line_model, line_sol, line_kernel):
    rep = classify_growth(_curve(line_sol, line_model, line_kernel), super_ricci_ok=True)
    assert rep.growth_class == GROWTH_LINEAR
    assert rep.theta == pytest.approx(1.0, abs=1e-9)
    assert rep.slope == pytest.approx(1.0, abs=1e-6)
    assert rep.fit_residual <= 1e-3


@pytest.mark.parametrize("a,b", [(2.0, 3.0), (0.5, 1.0)])
def test_linear_classification_general(a, b, line_model, line_kernel):
    sol = ExponentialLine(a, b, line_model)
    rep = classify_growth(_curve(sol, line_model, line_kernel), super_ricci_ok=True)
    assert rep.growth_class == GROWTH_LINEAR
    assert rep.slope == pytest.approx(a * b * b, abs=1e-6)


def test_theta_scales_with_amplitude(line_model, line_kernel):
    # replacing u by a*u multiplies the long-time slope by a
    base = classify_growth(
        _curve(ExponentialLine(1.0, 1.0, line_model), line_model, line_kernel)
    ).theta
    tripled = classify_growth(
        _curve(ExponentialLine(3.0, 1.0, line_model), line_model, line_kernel)
    ).theta
    assert tripled == pytest.approx(3.0 * base, rel=1e-9)


def test_spectral_modes_grow_superlinearly(circle_model, circle_sol, circle_kernel):
    curve = _curve(circle_sol, circle_model, circle_kernel, 0.125, 1.25, 12)
    rep = classify_growth(curve, super_ricci_ok=True)
    assert rep.growth_class == GROWTH_SUPERLINEAR
    assert rep.theta_infinite
    assert not rep.inconsistent


def test_insufficient_curve(line_model, line_sol, line_kernel):
    with pytest.raises(InsufficientCurve):
        classify_growth(_curve(line_sol, line_model, line_kernel, 1.0, 2.0, 8))
    with pytest.raises(InsufficientCurve):
        classify_growth(_curve(line_sol, line_model, line_kernel, 0.25, 4.0, 4))


# --- separation ------------------------------------------------------------------


def test_product_solution_separates(line_model):
    sol = ExponentialLine(2.0, 3.0, line_model)
    rep = separation_test(sol, np.linspace(0.0, 1.0, 6), np.linspace(-1, 1, 9))
    assert rep.mixed_residual <= 1e-12
    assert rep.separable
    assert rep.ode_residual <= 1e-10
    # reconstructed factors reproduce u on the grid
    ys = np.linspace(-1, 1, 9)
    ts = np.linspace(0.0, 1.0, 6)
    recon = rep.phi[:, None] * rep.psi[None, :]
    truth = np.stack([sol.value(t, ys[:, None]) for t in ts])
    assert recon == pytest.approx(truth, rel=1e-12)


def test_witness_sum_is_not_separable(line_model):
    sol = SumOfExponentialsLine([(1.0, 1.0), (1.0, 2.0)], line_model)
    rep = separation_test(sol, np.linspace(0.0, 1.0, 6), np.linspace(-1, 1, 9))
    assert rep.mixed_residual >= 0.01
    assert not rep.separable


def test_constant_separates(line_model):
    rep = separation_test(
        Constant(3.0, line_model), np.linspace(0.0, 1.0, 6), np.linspace(-1, 1, 9)
    )
    assert rep.mixed_residual <= 1e-14
    assert np.allclose(rep.psi * rep.phi[0], 3.0)


def test_static_solution_separates_on_punctured_space():
    model = geometry.punctured3()
    sol = solutions.RadialHarmonic3(model)
    ys = np.linspace(0.5, 2.0, 7)[:, None] * np.array([1.0, 0.0, 0.0])
    rep = separation_test(sol, np.linspace(0.0, 1.0, 5), ys)
    assert rep.mixed_residual == 0.0


# --- gradient-entropy bounds ------------------------------------------------------


def test_gradient_bound_saturates(line_model, line_sol, line_kernel):
    gb = gradient_entropy_check(line_sol, line_model, line_kernel, [0.0], 1.0, level=2)
    assert gb.lhs == pytest.approx(1.0, abs=1e-12)
    assert gb.rhs == pytest.approx(1.0, abs=1e-8)
    assert gb.holds


def test_gradient_bound_trivial_for_constants(line_model, line_kernel):
    gb = gradient_entropy_check(Constant(1.0, line_model), line_model, line_kernel, [0.0], 1.0)
    assert gb.lhs == 0.0
    assert gb.rhs == pytest.approx(0.0, abs=1e-12)
    assert gb.holds


def test_gradient_bound_strict_on_circle(circle_model, circle_sol, circle_kernel):
    gb = gradient_entropy_check(
        circle_sol, circle_model, circle_kernel, [0.0], 0.5, level=2
    )
    assert gb.holds
    assert gb.lhs < gb.rhs  # base point at the flat spot of the mode


def test_delta_bound_equality_case(line_model, line_sol, line_kernel):
    cb = corollary_bounds(line_sol, line_model, [0.0], 1.0, 1.0, kernel=line_kernel, level=2)
    assert cb.delta_lhs == pytest.approx(1.0, abs=1e-12)
    assert cb.delta_rhs == pytest.approx(1.0, abs=1e-8)
    assert cb.delta_bound_holds
    # the grid sup of e^{y-t} grows with the box: sup form not applicable
    assert cb.sup_unbounded
    assert cb.sup_bound_holds is None


def test_bounds_trivial_for_constants(line_model, line_kernel):
    cb = corollary_bounds(
        Constant(2.0, line_model), line_model, [0.0], 1.0, 0.7, kernel=line_kernel
    )
    assert cb.delta_bound_holds
    assert not cb.sup_unbounded
    assert cb.sup_bound_holds


def test_bounds_on_compact_circle(circle_model, circle_sol, circle_kernel):
    cb = corollary_bounds(
        circle_sol, circle_model, [0.0], 1.0, 0.5, kernel=circle_kernel, level=2
    )
    assert cb.delta_bound_holds
    assert not cb.sup_unbounded
    assert cb.sup_bound_holds
    assert cb.sup_value < 5.0  # compactness keeps the sup finite


# --- rigidity ---------------------------------------------------------------------


def test_rigidity_antecedent_false_on_static_circle():
    model = geometry.circle(1.0, 0.0, time_window=(0.0, 1.3))
    sol = solutions.CircleSpectral(2.0, [(1, 0.5, 0.0)], model)
    kern = kernels.WrappedGaussianKernel(np.array([0.0]), model)
    rep = rigidity_check(
        model, sol, [0.0], np.geomspace(0.2, 1.2, 6),
        np.linspace(0, 2 * np.pi, 9, endpoint=False)[:, None], kernel=kern,
    )
    assert rep.min_margin == pytest.approx(0.0, abs=1e-12)
    assert not rep.antecedent
    assert rep.consistent


def test_rigidity_holds_for_constant_on_shrinking_circle(circle_model, circle_kernel):
    sol = Constant(3.0, circle_model)
    rep = rigidity_check(
        circle_model, sol, [0.0], np.geomspace(0.2, 1.2, 6),
        np.linspace(0, 2 * np.pi, 9, endpoint=False)[:, None], kernel=circle_kernel,
    )
    assert rep.min_margin > 0
    assert rep.antecedent and rep.entropy_linear
    assert rep.max_grad_log == 0.0
    assert rep.consistent


def test_rigidity_sharpness_on_the_flat_line(line_model, line_sol, line_kernel):
    # gap matrix vanishes identically: linear entropy is permitted
    rep = rigidity_check(
        line_model, line_sol, [0.0], np.geomspace(0.25, 2.0, 6),
        np.linspace(-1, 1, 9)[:, None], kernel=line_kernel,
    )
    assert not rep.antecedent
    assert rep.entropy_linear
    assert rep.max_grad_log > 0.5
    assert rep.consistent


def test_rigidity_flags_nonconstant_under_strict_positivity(circle_model, circle_kernel):
    # the spectral mode has nonzero gradient; with a strictly positive
    # margin the implication would only fire if the entropy were linear,
    # which it is not, so the report stays consistent
    sol = solutions.CircleSpectral(2.0, [(1, 0.5, 0.0)], circle_model)
    rep = rigidity_check(
        circle_model, sol, [0.0], np.geomspace(0.2, 1.2, 8),
        np.linspace(0, 2 * np.pi, 9, endpoint=False)[:, None], kernel=circle_kernel,
    )
    assert rep.antecedent
    assert not rep.entropy_linear
    assert rep.consistent


# --- the punctured-space dichotomy ------------------------------------------------


def test_divergence_demo_tables():
    rep = divergence_demo(1.0)
    assert rep.cutoffs == pytest.approx([1e-2, 1e-3, 1e-4, 1e-5])
    assert rep.entropy_stable
    assert rep.entropy_spread <= 1e-4
    assert rep.prime_divergent
    assert min(rep.prime_growths) > 0.10
    assert rep.tail_shift <= 1e-6
    assert rep.stable_under_mesh_doubling
    # the divergent integral grows by the derived log rate per decade
    rate = math.log(10.0) * 4 * math.pi * (4 * math.pi) ** -1.5 * math.exp(-0.25)
    diffs = np.diff(rep.prime_values)
    assert diffs == pytest.approx(rate, rel=1e-3)
