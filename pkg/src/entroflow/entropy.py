"""The heat-kernel weighted entropy and its first two variations.

The functional is ``E(t) = E[(u log u)(t, X_t)]``, the expectation of
``u log u`` along the time-changed Brownian motion, equivalently the
integral of ``u log u`` against the kernel measure ``p vol``.  Under the
integrability conditions the first variation integrand is ``|grad u|^2/u``
and the second is ``2u (|hess log u|^2 + (Ric - dg/dt / 2)(grad log u,
grad log u))``; both are computed here by quadrature and by Monte Carlo.

Every kernel-measure integral of one scenario shares a single truncation
policy (growth rate ``2 * b_max``), so E, E', E'' and the condition
integrals live on identical grids and finite-difference cross-checks do
not suffer cancellation artifacts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import geometry, quadrature
from .errors import CensoredDominates, QuadratureDivergence
from .solutions import SolutionField
from .stochastic import AtExit, AtTime, ExpectResult, PathEnsemble, Stopped, expect

DEFAULT_CURVE_LEVEL = 2


def shared_growth(sol: SolutionField) -> float:
    """Common truncation growth rate for all integrals of one scenario."""
    return 2.0 * sol.growth_rate


# ---------------------------------------------------------------------------
# integrands (all vectorized over points, broadcastable in t)


def ulogu_integrand(sol):
    return lambda t, pts: sol.ulogu(t, pts)


def first_variation_integrand(sol, model=None):
    return lambda t, pts: sol.grad_term(t, pts)


def second_variation_integrand(sol, model=None):
    model = model if model is not None else sol.model

    def f(t, pts):
        u = sol.value(t, pts)
        gl = sol.grad(t, pts) / u[..., None]
        hess = sol.hess_log(t, pts)
        scale = geometry.inv_metric_scale(model, t, pts)
        hess_sq = scale**2 * np.sum(hess * hess, axis=(-2, -1))
        curv = geometry.ricci_scale(model, t, pts) - 0.5 * geometry.dg_dt_scale(
            model, t, pts
        )
        quad = curv * scale**2 * np.sum(gl * gl, axis=-1)
        return 2.0 * u * (hess_sq + quad)

    return f


def cond1_integrand(sol, model=None):
    """|grad(u log u)|^2 = (log u + 1)^2 |grad u|^2."""

    def f(t, pts):
        u = sol.value(t, pts)
        return (np.log(u) + 1.0) ** 2 * sol.grad_norm_sq(t, pts)

    return f


def cond2_integrand(sol, model=None):
    """|grad(|grad u|^2 / u)|^2 via the log-jet.

    grad(u |grad log u|^2) = u (|grad log u|^2 grad log u
                                 + 2 hess log u (grad log u, .)).
    """
    model = model if model is not None else sol.model

    def f(t, pts):
        u = sol.value(t, pts)
        gl = sol.grad(t, pts) / u[..., None]
        hess = sol.hess_log(t, pts)
        scale = geometry.inv_metric_scale(model, t, pts)
        gl_sq = scale * np.sum(gl * gl, axis=-1)
        hess_gl = np.einsum("...ij,...j->...i", hess, gl) * scale[..., None]
        w = u[..., None] * (gl_sq[..., None] * gl + 2.0 * hess_gl)
        return scale * np.sum(w * w, axis=-1)

    return f


def cond0a_integrand(sol, model=None):
    return lambda t, pts: sol.grad_norm_sq(t, pts)


# ---------------------------------------------------------------------------
# pointwise functionals


def entropy_q(sol, kernel, model, t, level=None) -> float:
    """Quadrature value of the entropy at time t (requires t > 0)."""
    if t <= 0:
        raise ValueError("the kernel measure needs t > 0")
    return quadrature.kernel_integral(
        ulogu_integrand(sol), kernel, model, t,
        growth=shared_growth(sol), level=level, what="entropy",
    )


def entropy_mc(sol, ensemble: PathEnsemble, t) -> ExpectResult:
    """Monte Carlo estimate of the entropy at a recorded snapshot time."""
    return expect(ensemble, sol.ulogu, AtTime(t))


def entropy_prime(sol, target, t, model=None, level=None):
    """First variation; quadrature against a kernel or MC over an ensemble."""
    if isinstance(target, PathEnsemble):
        return expect(target, sol.grad_term, AtTime(t))
    model = model if model is not None else sol.model
    return quadrature.kernel_integral(
        first_variation_integrand(sol), target, model, t,
        growth=shared_growth(sol), level=level, what="first variation",
    )


def entropy_second(sol, model, target, t, level=None):
    """Second variation; nonnegative whenever dg/dt <= 2 Ric pointwise."""
    f = second_variation_integrand(sol, model)
    if isinstance(target, PathEnsemble):
        return expect(target, f, AtTime(t))
    return quadrature.kernel_integral(
        f, target, model, t,
        growth=shared_growth(sol), level=level, what="second variation",
    )


@dataclass(frozen=True)
class ConditionReport:
    """Values of the three integrability conditions; inf when divergent."""

    cond1: float
    cond2: float
    cond0a: float
    cond1_divergent: bool = False
    cond2_divergent: bool = False
    cond0a_divergent: bool = False
    tables: dict = field(default_factory=dict)

    @property
    def all_finite(self):
        return not (self.cond1_divergent or self.cond2_divergent or self.cond0a_divergent)


def conditions(sol, kernel, model, t) -> ConditionReport:
    """Refine the three condition integrals, recording divergence as a value."""
    vals = {}
    flags = {}
    tables = {}
    for name, integrand in (
        ("cond1", cond1_integrand(sol, model)),
        ("cond2", cond2_integrand(sol, model)),
        ("cond0a", cond0a_integrand(sol, model)),
    ):
        ref = quadrature.refine_expectation(
            integrand, kernel, model, t, growth=shared_growth(sol)
        )
        tables[name] = ref.values
        if ref.converged:
            vals[name], flags[name] = ref.value, False
        elif ref.divergent:
            vals[name], flags[name] = math.inf, True
        else:
            raise QuadratureDivergence(
                f"{name} neither stabilized nor diverged", levels=ref.values
            )
    return ConditionReport(
        cond1=vals["cond1"], cond2=vals["cond2"], cond0a=vals["cond0a"],
        cond1_divergent=flags["cond1"], cond2_divergent=flags["cond2"],
        cond0a_divergent=flags["cond0a"], tables=tables,
    )


@dataclass(frozen=True)
class GapResult:
    """Submartingale gaps E[N_t] - E[N_0] and E[N_t] - E[N_{t/2}]."""

    gap: float
    stderr: float
    midpoint_gap: float
    midpoint_stderr: float


def submartingale_gap(sol, model, ensemble: PathEnsemble, t) -> GapResult:
    """Gap of N_s = (t-s) |grad u|^2/u (s, X_s) + (u log u)(s, X_s).

    Nonnegative within Monte Carlo error when the evolution satisfies
    dg/dt <= 2 Ric and the condition integrals are finite.
    """
    _warn_if_super_ricci_fails(model, ensemble.x, (0.0, t / 2.0, t))
    x = ensemble.x[None, :]
    n0 = t * float(sol.grad_term(0.0, x)[0]) + float(sol.ulogu(0.0, x)[0])
    end = expect(ensemble, sol.ulogu, AtTime(t))
    gap = end.mean - n0

    half = t / 2.0
    states_half = ensemble.state_at(half)
    states_end = ensemble.state_at(t)
    n_half = half * np.asarray(sol.grad_term(half, states_half)) + np.asarray(
        sol.ulogu(half, states_half)
    )
    diffs = np.asarray(sol.ulogu(t, states_end)) - n_half
    mid = float(np.mean(diffs))
    mid_se = float(np.std(diffs, ddof=1) / math.sqrt(diffs.size))
    return GapResult(gap=gap, stderr=end.stderr, midpoint_gap=mid, midpoint_stderr=mid_se)


def _warn_if_super_ricci_fails(model, x, ts, tol=1e-10):
    for t in ts:
        try:
            gap = geometry.super_ricci_gap(model, t, x)
        except Exception:
            continue
        if gap > tol:
            warnings.warn(
                f"dg/dt <= 2 Ric fails at t={t} (gap {gap:.3g}); "
                "monotonicity guarantees do not apply",
                stacklevel=3,
            )
            return


# ---------------------------------------------------------------------------
# entropy curves


@dataclass
class EntropyCurve:
    """Sampled t -> (E, E', E'') with method tags and standard errors."""

    t_grid: np.ndarray
    E: np.ndarray
    E_stderr: np.ndarray
    E_prime: np.ndarray
    E_prime_stderr: np.ndarray
    E_second: np.ndarray
    E_second_stderr: np.ndarray
    method: list
    cond1: np.ndarray
    cond2: np.ndarray
    cond0a: np.ndarray
    cond1_divergent: np.ndarray
    cond2_divergent: np.ndarray
    cond0a_divergent: np.ndarray

    def to_csv(self, path):
        cols = (
            "t,E,E_stderr,Eprime,Eprime_stderr,Esecond,Esecond_stderr,"
            "cond1,cond2,cond0a,method,"
            "cond1_divergent,cond2_divergent,cond0a_divergent"
        )
        lines = [cols]
        for i in range(len(self.t_grid)):
            row = [
                _fmt(self.t_grid[i]), _fmt(self.E[i]), _fmt(self.E_stderr[i]),
                _fmt(self.E_prime[i]), _fmt(self.E_prime_stderr[i]),
                _fmt(self.E_second[i]), _fmt(self.E_second_stderr[i]),
                _fmt(self.cond1[i]), _fmt(self.cond2[i]), _fmt(self.cond0a[i]),
                self.method[i],
                _fmt_bool(self.cond1_divergent[i]),
                _fmt_bool(self.cond2_divergent[i]),
                _fmt_bool(self.cond0a_divergent[i]),
            ]
            lines.append(",".join(row))
        _write_text(path, "\n".join(lines) + "\n")


def _fmt(x):
    if np.isinf(x):
        return "inf"
    return f"{float(x):.17g}"


def _fmt_bool(b):
    return "true" if b else "false"


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def entropy_curve(
    sol,
    model,
    kernel,
    t_grid,
    method="quadrature",
    ensemble=None,
    level=DEFAULT_CURVE_LEVEL,
    with_conditions=True,
) -> EntropyCurve:
    """Tabulate E, E', E'' over a time grid by one method.

    Condition integrals are always evaluated by refinement quadrature.
    The quadrature entries use a fixed refinement level so the curve is a
    smooth deterministic function of t.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    n = t_grid.size
    E = np.empty(n)
    Ese = np.zeros(n)
    Ep = np.empty(n)
    Epse = np.zeros(n)
    Es = np.empty(n)
    Esse = np.zeros(n)
    c1 = np.full(n, np.nan)
    c2 = np.full(n, np.nan)
    c0 = np.full(n, np.nan)
    d1 = np.zeros(n, dtype=bool)
    d2 = np.zeros(n, dtype=bool)
    d0 = np.zeros(n, dtype=bool)
    methods = []
    for i, t in enumerate(t_grid):
        if method == "quadrature":
            E[i] = entropy_q(sol, kernel, model, t, level=level)
            Ep[i] = entropy_prime(sol, kernel, t, model=model, level=level)
            Es[i] = entropy_second(sol, model, kernel, t, level=level)
            methods.append("quadrature")
        elif method == "monte-carlo":
            if ensemble is None:
                raise ValueError("monte-carlo curves need an ensemble")
            r = entropy_mc(sol, ensemble, t)
            E[i], Ese[i] = r.mean, r.stderr
            r = entropy_prime(sol, ensemble, t)
            Ep[i], Epse[i] = r.mean, r.stderr
            r = entropy_second(sol, model, ensemble, t)
            Es[i], Esse[i] = r.mean, r.stderr
            methods.append("monte-carlo")
        else:
            raise ValueError(f"unknown method {method!r}")
        if with_conditions:
            rep = conditions(sol, kernel, model, t)
            c1[i], c2[i], c0[i] = rep.cond1, rep.cond2, rep.cond0a
            d1[i], d2[i], d0[i] = (
                rep.cond1_divergent, rep.cond2_divergent, rep.cond0a_divergent,
            )
    return EntropyCurve(
        t_grid=t_grid, E=E, E_stderr=Ese,
        E_prime=Ep, E_prime_stderr=Epse,
        E_second=Es, E_second_stderr=Esse,
        method=methods,
        cond1=c1, cond2=c2, cond0a=c0,
        cond1_divergent=d1, cond2_divergent=d2, cond0a_divergent=d0,
    )


# ---------------------------------------------------------------------------
# local (stopped) entropies


@dataclass
class ExitEntry:
    mean: float
    stderr: float
    censored_frac: float
    dominated: bool


@dataclass
class LocalEntropyTable:
    """Stopped entropies over a nested family of domains."""

    domains: list
    t_grid: np.ndarray
    E_D: np.ndarray              # (n_domains, n_times) stopped means
    stderr: np.ndarray
    exit_censored_frac: np.ndarray   # per domain, fraction never exiting
    E_D_exit: list               # per-domain ExitEntry
    E_M: np.ndarray              # largest-domain value per time
    E_M_stabilized: np.ndarray   # plateau flag per time
    monotone_t_z: float          # worst violation z-score along t (>= 0 good)
    monotone_D_z: float          # worst violation z-score along domains

    def to_csv(self, path):
        lines = ["domain_index,t,E_D,stderr,censored_frac"]
        for j in range(len(self.domains)):
            for i, t in enumerate(self.t_grid):
                lines.append(
                    ",".join(
                        [
                            str(j), _fmt(t), _fmt(self.E_D[j, i]),
                            _fmt(self.stderr[j, i]),
                            _fmt(self.exit_censored_frac[j]),
                        ]
                    )
                )
        _write_text(path, "\n".join(lines) + "\n")


def local_entropy(sol, ensemble: PathEnsemble, domains, t_grid) -> LocalEntropyTable:
    """Stopped entropies E_D(t), exit entropies E_D, and the exhaustion value.

    Domains must be nested (checked per path through exit monotonicity).
    The exhaustion value at each t is reported as the largest-domain entry
    together with a plateau flag instead of an extrapolated limit.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    m, n = len(domains), t_grid.size
    means = np.empty((m, n))
    ses = np.empty((m, n))
    cens = np.empty(m)
    exits = []
    ensemble.ensure_exits(domains)
    for j, dom in enumerate(domains):
        rec = ensemble.exit_records(dom)
        cens[j] = rec.censored_fraction
        for i, t in enumerate(t_grid):
            r = expect(ensemble, sol.ulogu, Stopped(t, dom))
            means[j, i], ses[j, i] = r.mean, r.stderr
        try:
            r = expect(ensemble, sol.ulogu, AtExit(dom))
            exits.append(ExitEntry(r.mean, r.stderr, r.censored_frac, False))
        except CensoredDominates:
            exits.append(ExitEntry(math.nan, math.nan, cens[j], True))
    for j in range(m - 1):
        tau_small = ensemble.exit_records(domains[j]).tau
        tau_big = ensemble.exit_records(domains[j + 1]).tau
        if np.any(tau_small > tau_big + 1e-12):
            raise ValueError("domains are not nested: exit times decreased")
    e_m = means[-1].copy()
    if m >= 2:
        gap = np.abs(means[-1] - means[-2])
        tol = 3.0 * np.sqrt(ses[-1] ** 2 + ses[-2] ** 2)
        stab = gap <= tol
    else:
        stab = np.zeros(n, dtype=bool)
    mono_t = _worst_z(np.diff(means, axis=1), _combined(ses[:, 1:], ses[:, :-1]))
    mono_d = _worst_z(np.diff(means, axis=0), _combined(ses[1:, :], ses[:-1, :]))
    return LocalEntropyTable(
        domains=list(domains), t_grid=t_grid, E_D=means, stderr=ses,
        exit_censored_frac=cens, E_D_exit=exits, E_M=e_m, E_M_stabilized=stab,
        monotone_t_z=mono_t, monotone_D_z=mono_d,
    )


def _combined(a, b):
    return np.sqrt(a * a + b * b)


def _worst_z(diffs, ses):
    if diffs.size == 0:
        return math.inf
    z = diffs / np.maximum(ses, 1e-300)
    return float(np.min(z))


def grad_term_exit_diagnostic(sol, ensemble, domains, t):
    """E[(|grad u|^2/u)(tau_n, X_tau_n); tau_n <= t] along the exhaustion.

    A Monte Carlo stand-in for the liminf criterion governing the true
    submartingale property; reported as a diagnostic sequence only, with
    no pass/fail attached, since a finite ensemble cannot certify a liminf.
    """
    out = []
    for dom in domains:
        rec = ensemble.exit_records(dom)
        hit = (~rec.censored) & (rec.tau <= t)
        if not np.any(hit):
            out.append(0.0)
            continue
        vals = np.zeros(ensemble.n_paths)
        vals[hit] = np.asarray(sol.grad_term(rec.tau[hit], rec.state[hit]))
        out.append(float(np.mean(vals)))
    return out


# ---------------------------------------------------------------------------
# along-path identities (paired per-path estimators)


def stopped_increment_residual(sol, ensemble, domain, t):
    """Mean and stderr of (u log u)(t^tau) - (u log u)(0,x) - int G ds.

    The per-path time integral of the stopped first-variation integrand is
    a trapezoid over the recorded snapshots, with an exact partial cell up
    to the exit time using the stored exit state.  Zero in expectation.
    """
    rec = ensemble.exit_records(domain)
    times = [s for s in ensemble.times if s <= t + 1e-12]
    n = ensemble.n_paths
    integral = np.zeros(n)
    g_prev = np.asarray(sol.grad_term(times[0], ensemble.state_at(times[0])))
    for s_prev, s_next in zip(times[:-1], times[1:]):
        g_next = np.asarray(sol.grad_term(s_next, ensemble.state_at(s_next)))
        alive = rec.tau >= s_next
        integral += np.where(alive, 0.5 * (s_next - s_prev) * (g_prev + g_next), 0.0)
        # partial cell for paths exiting inside (s_prev, s_next)
        part = (rec.tau > s_prev) & (rec.tau < s_next)
        if np.any(part):
            g_exit = np.asarray(
                sol.grad_term(rec.tau[part], rec.state[part])
            )
            integral[part] += 0.5 * (rec.tau[part] - s_prev) * (
                g_prev[part] + g_exit
            )
        g_prev = g_next
    stopped_before = rec.tau <= t
    ts = np.where(stopped_before, rec.tau, t)
    pts = np.where(stopped_before[:, None], rec.state, ensemble.state_at(times[-1]))
    end_vals = np.asarray(sol.ulogu(ts, pts))
    start = float(sol.ulogu(0.0, ensemble.x[None, :])[0])
    resid = end_vals - start - integral
    return float(np.mean(resid)), float(np.std(resid, ddof=1) / math.sqrt(n))


def along_path_second_identity(sol, model, ensemble, t):
    """Residual of the along-path form of the E'' identity (no stopping).

    Per path: G(t, X_t) - G(0, x) - int_0^t Psi(s, X_s) ds where Psi is the
    second-variation integrand; zero in expectation on compact models when
    no stopping occurs.
    """
    psi = second_variation_integrand(sol, model)
    times = [s for s in ensemble.times if s <= t + 1e-12]
    n = ensemble.n_paths
    integral = np.zeros(n)
    p_prev = np.asarray(psi(times[0], ensemble.state_at(times[0])))
    for s_prev, s_next in zip(times[:-1], times[1:]):
        p_next = np.asarray(psi(s_next, ensemble.state_at(s_next)))
        integral += 0.5 * (s_next - s_prev) * (p_prev + p_next)
        p_prev = p_next
    end_vals = np.asarray(sol.grad_term(t, ensemble.state_at(times[-1])))
    start = float(sol.grad_term(0.0, ensemble.x[None, :])[0])
    resid = end_vals - start - integral
    return float(np.mean(resid)), float(np.std(resid, ddof=1) / math.sqrt(n))
