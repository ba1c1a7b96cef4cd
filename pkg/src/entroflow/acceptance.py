"""The acceptance matrix: every exit criterion as a measurable row.

``verify(suite)`` runs the requested rows and returns them with measured
value, target, tolerance and pass/fail status; the CLI prints the table
and exits nonzero on any failure, and the test suite asserts each row.

Suites: ``paper-examples`` (exact worked-example values), ``properties``
(derivative consistency, monotonicity, bound and identity checks), and
``all``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import analysis, geometry, kernels, solutions, stochastic
from .entropy import (
    conditions,
    entropy_curve,
    entropy_mc,
    entropy_prime,
    entropy_q,
    entropy_second,
    local_entropy,
    submartingale_gap,
)
from .solutions import bochner_identities
from .stochastic import DEFAULT_SEED, DomainSpec, SdeConfig

LEVEL = 2  # fixed refinement level for every quadrature row


@dataclass
class CheckRow:
    ident: str
    description: str
    measured: float
    target: float
    tol: float
    passed: bool
    note: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.ident:<28} {self.description}: "
            f"measured {self.measured:.9g} vs {self.target:.9g} (tol {self.tol:.3g})"
            + (f"  [{self.note}]" if self.note else "")
        )


def _row(ident, desc, measured, target, tol, note=""):
    return CheckRow(
        ident=ident, description=desc, measured=float(measured),
        target=float(target), tol=float(tol),
        passed=bool(abs(measured - target) <= tol), note=note,
    )


def _row_le(ident, desc, measured, bound, note=""):
    """measured <= bound."""
    return CheckRow(
        ident=ident, description=desc, measured=float(measured),
        target=float(bound), tol=0.0, passed=bool(measured <= bound), note=note,
    )


def _row_ge(ident, desc, measured, bound, note=""):
    return CheckRow(
        ident=ident, description=desc, measured=float(measured),
        target=float(bound), tol=0.0, passed=bool(measured >= bound), note=note,
    )


def _row_bool(ident, desc, flag, note=""):
    return CheckRow(
        ident=ident, description=desc, measured=1.0 if flag else 0.0,
        target=1.0, tol=0.0, passed=bool(flag), note=note,
    )


# ---------------------------------------------------------------------------
# the scenario matrix


class _Context:
    """Lazy cache of models, solutions, kernels and ensembles."""

    def __init__(self):
        self._cache = {}

    def get(self, name, builder):
        if name not in self._cache:
            self._cache[name] = builder()
        return self._cache[name]

    # geometry / solution bundles -------------------------------------
    def line_bundle(self, a=1.0, b=1.0):
        def build():
            model = geometry.line()
            sol = solutions.ExponentialLine(a, b, model)
            kern = kernels.GaussianKernel(np.array([0.0]), model)
            return model, sol, kern
        return self.get(("line", a, b), build)

    def line_sum_bundle(self):
        def build():
            model = geometry.line()
            sol = solutions.SumOfExponentialsLine([(1.0, 1.0), (1.0, 2.0)], model)
            kern = kernels.GaussianKernel(np.array([0.0]), model)
            return model, sol, kern
        return self.get("line-sum", build)

    def line_const_bundle(self):
        def build():
            model = geometry.line()
            sol = solutions.Constant(5.0, model)
            kern = kernels.GaussianKernel(np.array([0.0]), model)
            return model, sol, kern
        return self.get("line-const", build)

    def circle_bundle(self, rate):
        def build():
            window = (0.0, 1.3) if rate == 0.0 else (0.0, 1.25)
            model = geometry.circle(1.0, rate, time_window=window)
            sol = solutions.CircleSpectral(2.0, [(1, 0.5, 0.0)], model)
            kern = kernels.WrappedGaussianKernel(np.array([0.0]), model)
            return model, sol, kern
        return self.get(("circle", rate), build)

    def sphere_bundle(self):
        def build():
            model = geometry.sphere2(1.0, 2.0, time_window=(0.0, 1.2))
            sol = solutions.SphereSpectral(2.0, [(1, 0.5)], model)
            kern = kernels.SphereHeatKernel(np.array([1.0, 0.0, 0.0]), model)
            return model, sol, kern
        return self.get("sphere", build)

    # ensembles --------------------------------------------------------
    def line_t4_ensemble(self):
        def build():
            model, _, _ = self.line_bundle()
            cfg = SdeConfig(dt=1e-3, n_paths=100_000, seed=DEFAULT_SEED)
            return stochastic.simulate(
                model, [0.0], 4.0, cfg, record_times=[0.25, 0.5, 1.0, 2.0, 4.0]
            )
        return self.get("ens-line-t4", build)

    def line_t1_ensemble(self):
        def build():
            model, _, _ = self.line_bundle()
            cfg = SdeConfig(dt=1e-3, n_paths=100_000, seed=DEFAULT_SEED)
            record = np.round(np.linspace(0.0, 1.0, 21), 3)
            ens = stochastic.simulate(model, [0.0], 1.0, cfg, record_times=record)
            ens.ensure_exits([DomainSpec.interval(-n, n) for n in (1, 2, 3, 4)])
            return ens
        return self.get("ens-line-t1", build)

    def circle_ensemble(self):
        def build():
            model, _, _ = self.circle_bundle(-0.1)
            cfg = SdeConfig(dt=1e-3, n_paths=100_000, seed=DEFAULT_SEED)
            return stochastic.simulate(
                model, [0.0], 1.0, cfg, record_times=[0.25, 0.5, 1.0]
            )
        return self.get("ens-circle", build)

    def sphere_ensemble(self):
        def build():
            model, _, _ = self.sphere_bundle()
            cfg = SdeConfig(dt=1e-3, n_paths=20_000, seed=DEFAULT_SEED)
            return stochastic.simulate(
                model, [1.0, 0.0, 0.0], 1.0, cfg, record_times=[0.25, 0.5, 1.0]
            )
        return self.get("ens-sphere", build)


# scenario list for the consistency/identity sweeps:
# (ident, bundle getter, (t_lo, t_hi), needs finite conditions)
def _matrix(ctx):
    return [
        ("line-eternal", ctx.line_bundle(1.0, 1.0), (0.25, 3.0), True),
        ("line-a2b3", ctx.line_bundle(2.0, 3.0), (0.25, 2.0), True),
        ("line-a05b1", ctx.line_bundle(0.5, 1.0), (0.25, 3.0), True),
        ("line-sum", ctx.line_sum_bundle(), (0.25, 2.0), True),
        ("line-const", ctx.line_const_bundle(), (0.25, 3.0), True),
        ("circle-static", ctx.circle_bundle(0.0), (0.2, 1.1), True),
        ("circle-shrink", ctx.circle_bundle(-0.1), (0.2, 1.1), True),
        ("sphere-ricci", ctx.sphere_bundle(), (0.15, 1.0), True),
    ]


# ---------------------------------------------------------------------------
# criteria


def _criterion_1(ctx, rows):
    t0 = time.perf_counter()
    model, sol, kern = ctx.line_bundle(1.0, 1.0)
    for t in (0.25, 1.0, 4.0):
        eq = entropy_q(sol, kern, model, t, level=LEVEL)
        rows.append(_row(f"1-quad-t{t:g}", "entropy equals t (quadrature)", eq, t, 1e-8))
    ens = ctx.line_t4_ensemble()
    for t in (0.25, 1.0, 4.0):
        r = entropy_mc(sol, ens, t)
        rows.append(
            _row(
                f"1-mc-t{t:g}", "entropy equals t (Monte Carlo)",
                r.mean, t, 3.0 * r.stderr, note=f"stderr {r.stderr:.3g}",
            )
        )
    elapsed = time.perf_counter() - t0
    rows.append(_row_le("1-runtime", "wall clock seconds", elapsed, 30.0))


def _criterion_2(ctx, rows):
    model, sol, kern = ctx.line_bundle(1.0, 1.0)
    for t in (0.5, 1.0, 2.0):
        rep = conditions(sol, kern, model, t)
        c1_target = (9 * t * t + 8 * t + 1) * math.exp(2 * t)
        c2_target = math.exp(2 * t)
        rows.append(
            _row(
                f"2-cond1-t{t:g}", "first condition integral",
                rep.cond1, c1_target, 1e-6 * c1_target,
            )
        )
        rows.append(
            _row(
                f"2-cond2-t{t:g}", "second condition integral",
                rep.cond2, c2_target, 1e-6 * c2_target,
            )
        )


def _criterion_3(ctx, rows):
    for a, b in ((2.0, 3.0), (0.5, 1.0)):
        model, sol, kern = ctx.line_bundle(a, b)
        worst = 0.0
        for t in (0.5, 1.0, 2.0):
            eq = entropy_q(sol, kern, model, t, level=LEVEL)
            worst = max(worst, abs(eq - a * (math.log(a) + b * b * t)))
        rows.append(
            _row(f"3-entropy-a{a:g}b{b:g}", "a(log a + b^2 t) family", worst, 0.0, 1e-8)
        )
        grid = np.geomspace(0.25, 4.0, 16)
        curve = entropy_curve(sol, model, kern, grid, level=LEVEL, with_conditions=False)
        rep = analysis.classify_growth(curve, sup_grad_sample=None, super_ricci_ok=True)
        rows.append(
            _row_bool(
                f"3-class-a{a:g}b{b:g}", "classified as linear growth",
                rep.growth_class == analysis.GROWTH_LINEAR,
            )
        )
        slope = rep.slope if rep.slope is not None else math.nan
        rows.append(
            _row(f"3-slope-a{a:g}b{b:g}", "linear slope a*b^2", slope, a * b * b, 1e-6)
        )


def _criterion_4(ctx, rows):
    h = 1e-3
    for ident, (model, sol, kern), (t_lo, t_hi), _ in _matrix(ctx):
        worst1 = 0.0
        worst2 = 0.0
        for t in np.geomspace(max(t_lo, 2 * h), t_hi, 3):
            e_minus = entropy_q(sol, kern, model, t - h, level=LEVEL)
            e_mid = entropy_q(sol, kern, model, t, level=LEVEL)
            e_plus = entropy_q(sol, kern, model, t + h, level=LEVEL)
            fd1 = (e_plus - e_minus) / (2 * h)
            fd2 = (e_plus - 2 * e_mid + e_minus) / (h * h)
            worst1 = max(worst1, abs(fd1 - entropy_prime(sol, kern, t, model, level=LEVEL)))
            worst2 = max(worst2, abs(fd2 - entropy_second(sol, model, kern, t, level=LEVEL)))
        rows.append(_row(f"4-first-{ident}", "E' matches dE/dt", worst1, 0.0, 1e-5))
        rows.append(_row(f"4-second-{ident}", "E'' matches d2E/dt2", worst2, 0.0, 1e-4))


def _criterion_5(ctx, rows):
    cases = [
        ("line-eternal", ctx.line_bundle(1.0, 1.0), (0.25, 3.0)),
        ("circle-shrink", ctx.circle_bundle(-0.1), (0.125, 1.25)),
        ("sphere-ricci", ctx.sphere_bundle(), (0.12, 1.2)),
    ]
    for ident, (model, sol, kern), (t_lo, t_hi) in cases:
        grid = np.geomspace(t_lo, t_hi, 16)
        ep = [entropy_prime(sol, kern, t, model, level=LEVEL) for t in grid]
        es = [entropy_second(sol, model, kern, t, level=LEVEL) for t in grid]
        rows.append(_row_ge(f"5-mono-{ident}", "min E' over log grid", min(ep), -1e-10))
        rows.append(_row_ge(f"5-convex-{ident}", "min E'' over log grid", min(es), -1e-10))


def _criterion_6(ctx, rows):
    model, sol, _ = ctx.line_bundle(1.0, 1.0)
    g = submartingale_gap(sol, model, ctx.line_t4_ensemble(), 1.0)
    rows.append(
        _row(
            "6-saturation-line", "gap vanishes for the eternal exponential",
            g.gap, 0.0, 3.0 * g.stderr, note=f"stderr {g.stderr:.3g}",
        )
    )
    cmodel, csol, _ = ctx.circle_bundle(-0.1)
    g = submartingale_gap(csol, cmodel, ctx.circle_ensemble(), 1.0)
    rows.append(
        _row_ge(
            "6-gap-circle", "gap nonnegative within error",
            g.gap, -3.0 * g.stderr, note=f"gap {g.gap:.4g}",
        )
    )
    rows.append(
        _row_ge(
            "6-midpoint-circle", "midpoint gap nonnegative within error",
            g.midpoint_gap, -3.0 * g.midpoint_stderr,
        )
    )
    smodel, ssol, _ = ctx.sphere_bundle()
    g = submartingale_gap(ssol, smodel, ctx.sphere_ensemble(), 1.0)
    rows.append(
        _row_ge(
            "6-gap-sphere", "gap nonnegative within error",
            g.gap, -3.0 * g.stderr, note=f"gap {g.gap:.4g}",
        )
    )


def _criterion_7(ctx, rows):
    quad_cases = [
        ("line-eternal", ctx.line_bundle(1.0, 1.0), 1.0),
        ("line-a2b3", ctx.line_bundle(2.0, 3.0), 1.0),
        ("line-a05b1", ctx.line_bundle(0.5, 1.0), 1.0),
        ("circle-static", ctx.circle_bundle(0.0), 0.5),
        ("circle-shrink", ctx.circle_bundle(-0.1), 0.5),
        ("sphere-ricci", ctx.sphere_bundle(), 0.5),
    ]
    for ident, (model, sol, kern), t in quad_cases:
        gb = analysis.gradient_entropy_check(sol, model, kern, kern.base_point, t, level=LEVEL)
        rows.append(
            _row_bool(f"7-holds-{ident}", "gradient bound holds (quadrature)", gb.holds,
                      note=f"lhs {gb.lhs:.6g} rhs {gb.rhs:.6g}")
        )
    model, sol, kern = ctx.line_bundle(1.0, 1.0)
    gb = analysis.gradient_entropy_check(sol, model, kern, kern.base_point, 1.0, level=LEVEL)
    rows.append(
        _row("7-equality-line", "saturation: lhs equals rhs", gb.lhs - gb.rhs, 0.0, 1e-6)
    )
    mc_cases = [
        ("line-mc", ctx.line_bundle(1.0, 1.0), ctx.line_t4_ensemble(), 1.0),
        ("circle-mc", ctx.circle_bundle(-0.1), ctx.circle_ensemble(), 1.0),
        ("sphere-mc", ctx.sphere_bundle(), ctx.sphere_ensemble(), 1.0),
    ]
    for ident, (model, sol, _), ens, t in mc_cases:
        gb = analysis.gradient_entropy_check(sol, model, ens, ens.x, t)
        rows.append(
            _row_bool(f"7-holds-{ident}", "gradient bound holds (Monte Carlo)", gb.holds,
                      note=f"lhs {gb.lhs:.6g} rhs {gb.rhs:.6g} se {gb.stderr:.3g}")
        )


def _criterion_8(ctx, rows):
    model, sol, _ = ctx.line_bundle(1.0, 1.0)
    ens = ctx.line_t1_ensemble()
    domains = [DomainSpec.interval(-n, n) for n in (1, 2, 3, 4)]
    table = local_entropy(sol, ens, domains, [0.25, 0.5, 1.0])
    rows.append(
        _row_ge("8-monotone-t", "stopped entropy nondecreasing in t (z)",
                table.monotone_t_z, -3.0)
    )
    rows.append(
        _row_ge("8-monotone-D", "stopped entropy nondecreasing in D (z)",
                table.monotone_D_z, -3.0)
    )
    j = table.t_grid.tolist().index(1.0)
    se = table.stderr[-1, j]
    rows.append(
        _row("8-limit", "largest-domain value near E(1)=1",
             table.E_D[-1, j], 1.0, 3.0 * se, note=f"stderr {se:.3g}")
    )


def _criterion_9(ctx, rows):
    rep = analysis.divergence_demo(1.0)
    rows.append(
        _row_le("9-entropy-stable", "entropy spread across inner cutoffs",
                rep.entropy_spread, 1e-4)
    )
    rows.append(
        _row_ge("9-prime-growth", "min growth of E' integral per refinement",
                min(rep.prime_growths), 0.10)
    )
    rows.append(_row_bool("9-prime-divergent", "E' integral flagged divergent",
                          rep.prime_divergent))
    rows.append(
        _row_le("9-tail-control", "entropy shift when outer radius doubles",
                rep.tail_shift, 1e-6)
    )


def _criterion_10(ctx, rows):
    ens = ctx.line_t4_ensemble()
    n = ens.n_paths
    crit = 1.6276 / math.sqrt(n)  # asymptotic 1% Kolmogorov-Smirnov point
    for t in (0.25, 1.0):
        samples = ens.state_at(t)[:, 0]
        ks = stats.kstest(samples, stats.norm(scale=math.sqrt(2 * t)).cdf)
        rows.append(
            _row_le(f"10-ks-t{t:g}", "KS distance to N(0, 2t)", ks.statistic, crit)
        )
    cens = ctx.circle_ensemble()
    cmodel, _, _ = ctx.circle_bundle(-0.1)
    s1 = float(cmodel.time_change(1.0))
    th = cens.state_at(1.0)[:, 0]
    for k in (1, 2):
        target = math.exp(-k * k * s1)
        vals = np.cos(k * th)
        se = float(np.std(vals, ddof=1) / math.sqrt(vals.size))
        rows.append(
            _row(f"10-moment-k{k}", f"circular moment {k} vs wrapped Gaussian",
                 float(np.mean(vals)), target, 3.0 * se, note=f"clock {s1:.5f}")
        )


def _criterion_11(ctx, rows):
    _, product, _ = ctx.line_bundle(2.0, 3.0)
    _, witness, _ = ctx.line_sum_bundle()
    ts = np.linspace(0.0, 1.0, 6)
    ys = np.linspace(-1.0, 1.0, 9)
    rep_p = analysis.separation_test(product, ts, ys)
    rep_w = analysis.separation_test(witness, ts, ys)
    rows.append(
        _row_le("11-product", "mixed residual of a product solution",
                rep_p.mixed_residual, 1e-12)
    )
    rows.append(
        _row_ge("11-witness", "mixed residual of the two-mode witness",
                rep_w.mixed_residual, 0.01)
    )
    rows.append(
        _row_le("11-ode", "factor equation residual", rep_p.ode_residual, 1e-10)
    )


def _criterion_12(ctx, rows):
    gen = np.random.default_rng(214748364)
    cases = list(_matrix(ctx))
    pmodel = geometry.punctured3()
    cases.append(
        ("punctured", (pmodel, solutions.RadialHarmonic3(pmodel), None), (0.2, 3.0), False)
    )
    for ident, (model, sol, _), (t_lo, t_hi), _finite in cases:
        worst1 = 0.0
        worst2 = 0.0
        for _ in range(100):
            t = float(gen.uniform(t_lo, t_hi))
            y = _random_point(gen, model)
            r1, r2 = bochner_identities(sol, model, t, y)
            worst1 = max(worst1, r1)
            worst2 = max(worst2, r2)
        rows.append(_row(f"12-first-{ident}", "pointwise identity for u log u",
                         worst1, 0.0, 1e-6))
        rows.append(_row(f"12-second-{ident}", "pointwise identity for |grad u|^2/u",
                         worst2, 0.0, 1e-6))


def _random_point(gen, model):
    if model.kind == geometry.EUCLIDEAN_LINE:
        return np.array([gen.uniform(-2.0, 2.0)])
    if model.kind == geometry.CIRCLE:
        return np.array([gen.uniform(0.0, 2.0 * np.pi)])
    if model.kind == geometry.SPHERE_2:
        v = gen.normal(size=3)
        return v / np.linalg.norm(v)
    if model.kind == geometry.PUNCTURED_3:
        # the float64 FD floor for r^-3 reaches 1e-6 around r = 0.3,
        # so the identity samples stay a little further off the puncture
        v = gen.normal(size=3)
        return v / np.linalg.norm(v) * gen.uniform(0.4, 2.5)
    if model.kind == geometry.HYPERBOLIC:
        return np.array([gen.uniform(-1.0, 1.0), gen.uniform(0.5, 2.0)])
    raise ValueError(model.kind)


_CRITERIA = {
    "paper-examples": (_criterion_1, _criterion_2, _criterion_3, _criterion_9),
    "properties": (
        _criterion_4, _criterion_5, _criterion_6, _criterion_7,
        _criterion_8, _criterion_10, _criterion_11, _criterion_12,
    ),
}


def verify(suite="all"):
    """Run a suite; returns (rows, elapsed_seconds)."""
    if suite == "all":
        funcs = _CRITERIA["paper-examples"] + _CRITERIA["properties"]
    elif suite in _CRITERIA:
        funcs = _CRITERIA[suite]
    else:
        raise ValueError(f"unknown suite {suite!r}; choose paper-examples, properties, all")
    ctx = _Context()
    rows = []
    t0 = time.perf_counter()
    for fn in funcs:
        fn(ctx, rows)
    return rows, time.perf_counter() - t0


def format_rows(rows):
    lines = [r.line() for r in rows]
    n_fail = sum(not r.passed for r in rows)
    lines.append("")
    lines.append(f"{len(rows) - n_fail}/{len(rows)} checks passed")
    return "\n".join(lines)
