"""Brownian motion with time-dependent generator ``Lap_{g(t)}``.

The coordinate Euler-Maruyama step is ``dX = -g^{ij} Gamma^k_{ij} dt
+ sqrt(2) sigma dW`` with ``sigma sigma^T = g^{-1}``; across the catalog
charts the contracted Christoffel drift vanishes identically (verified by
a property test against the metric data), so a step is a scaled Gaussian
increment.  On the sphere the scheme takes a tangential increment of
covariance ``2 dt / c(t)`` and renormalizes.

Paths are pure functions of ``(seed, path index)`` via the counter-based
generator, so exits can be recovered later by replaying the dynamics
instead of storing every step: an ensemble records states only at the
requested snapshot times.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry, rng
from .errors import CensoredDominates
from .geometry import MetricModel, PUNCTURE_RADIUS

DEFAULT_SEED = 0xC0FFEE

_MAGIC = b"ENSEMBLEv1\n"


@dataclass(frozen=True)
class SdeConfig:
    """Step size, ensemble size, seed and scheme selection."""

    dt: float
    n_paths: int
    seed: int = DEFAULT_SEED
    scheme: str = "auto"  # "euler" | "projected-sphere" | "auto"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_paths < 1:
            raise ValueError("need at least one path")
        if self.scheme not in ("auto", "euler", "projected-sphere"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def resolve_scheme(self, model: MetricModel) -> str:
        if self.scheme == "auto":
            return "projected-sphere" if model.kind == geometry.SPHERE_2 else "euler"
        if self.scheme == "projected-sphere" and model.kind != geometry.SPHERE_2:
            raise ValueError("the projected scheme only applies to the sphere")
        if self.scheme == "euler" and model.kind == geometry.SPHERE_2:
            raise ValueError("the sphere requires the projected scheme")
        return self.scheme

    def validate_against(self, model: MetricModel):
        t0, t1 = model.time_window
        if self.dt > (t1 - t0) / 10.0:
            raise ValueError("dt must not exceed a tenth of the time window")
        if model.kind in (geometry.CIRCLE, geometry.SPHERE_2):
            c_min = min(float(model.conformal(t0)), float(model.conformal(t1)))
            if self.dt > 0.1 * c_min:
                raise ValueError(
                    "dt is too coarse for the conformal scale "
                    f"(dt={self.dt} vs min c = {c_min})"
                )


@dataclass(frozen=True)
class DomainSpec:
    """A relatively compact domain in the chart.

    kinds: ``interval`` (line: a < y < b, circle: arc a < theta < b within
    one period), ``ball`` (flat models: |y - center| < r; circle: arc
    distance < r), ``cap`` (sphere: angle(y, axis) < angle).
    """

    kind: str
    params: tuple

    @staticmethod
    def interval(a, b):
        if not a < b:
            raise ValueError("interval needs a < b")
        return DomainSpec("interval", (float(a), float(b)))

    @staticmethod
    def ball(center, radius):
        center = tuple(float(c) for c in np.atleast_1d(center))
        if radius <= 0:
            raise ValueError("ball needs a positive radius")
        return DomainSpec("ball", center + (float(radius),))

    @staticmethod
    def cap(axis, angle):
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        if angle <= 0:
            raise ValueError("cap needs a positive opening angle")
        return DomainSpec("cap", tuple(axis) + (float(angle),))

    def validate_against(self, model: MetricModel):
        if self.kind == "interval":
            if model.kind not in (geometry.EUCLIDEAN_LINE, geometry.CIRCLE):
                raise ValueError("intervals apply to the line and the circle")
        elif self.kind == "ball":
            center, radius = np.array(self.params[:-1]), self.params[-1]
            if model.kind == geometry.CIRCLE:
                if center.shape != (1,):
                    raise ValueError("circle balls take an angle center")
            elif model.kind in (
                geometry.EUCLIDEAN_LINE,
                geometry.EUCLIDEAN_SPACE,
                geometry.PUNCTURED_3,
                geometry.HYPERBOLIC,
            ):
                if center.shape != (model.dim_chart,):
                    raise ValueError("ball center has the wrong dimension")
                if model.kind == geometry.PUNCTURED_3 and np.linalg.norm(center) <= radius:
                    raise ValueError("punctured-space balls must exclude the origin")
            else:
                raise ValueError("balls do not apply to this model")
        elif self.kind == "cap":
            if model.kind != geometry.SPHERE_2:
                raise ValueError("caps apply to the sphere")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    def contains(self, model: MetricModel, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.kind == "interval":
            a, b = self.params
            if model.kind == geometry.CIRCLE:
                th = np.mod(pts[:, 0], 2.0 * np.pi)
                return (th > a) & (th < b)
            return (pts[:, 0] > a) & (pts[:, 0] < b)
        if self.kind == "ball":
            center, radius = np.array(self.params[:-1]), self.params[-1]
            if model.kind == geometry.CIRCLE:
                d = np.abs(np.mod(pts[:, 0] - center[0] + np.pi, 2.0 * np.pi) - np.pi)
                return d < radius
            return np.linalg.norm(pts - center, axis=-1) < radius
        if self.kind == "cap":
            axis, angle = np.array(self.params[:3]), self.params[3]
            dots = np.clip(pts @ axis, -1.0, 1.0)
            return np.arccos(dots) < angle
        raise ValueError(self.kind)

    def key(self):
        return (self.kind,) + self.params


def parse_domain(spec: str) -> DomainSpec:
    """Grammar: ``interval:a,b`` | ``ball:c1,..,cn,r`` | ``cap:ax,ay,az,angle``."""
    head, _, args = spec.partition(":")
    vals = [float(v) for v in args.split(",")]
    head = head.strip()
    if head == "interval":
        return DomainSpec.interval(*vals)
    if head == "ball":
        return DomainSpec.ball(vals[:-1], vals[-1])
    if head == "cap":
        return DomainSpec.cap(vals[:3], vals[3])
    raise ValueError(f"unknown domain id {spec!r}")


def domain_id(d: DomainSpec) -> str:
    return d.kind + ":" + ",".join(f"{v:g}" for v in d.params)


@dataclass
class ExitRecord:
    """Per-path first-exit data for one domain."""

    domain: DomainSpec
    tau: np.ndarray        # exit time; +inf while censored
    state: np.ndarray      # state at exit (or start point when tau = 0)
    censored: np.ndarray   # never exited within the horizon

    @property
    def censored_fraction(self):
        return float(np.mean(self.censored))


@dataclass(frozen=True)
class AtTime:
    t: float


@dataclass(frozen=True)
class Stopped:
    t: float
    domain: DomainSpec


@dataclass(frozen=True)
class AtExit:
    domain: DomainSpec


@dataclass(frozen=True)
class ExpectResult:
    mean: float
    stderr: float
    censored_frac: float = 0.0
    n: int = 0


@dataclass
class PathEnsemble:
    """Snapshots of a simulated ensemble plus the recipe to replay it."""

    model: MetricModel
    x: np.ndarray
    cfg: SdeConfig
    horizon: float
    times: np.ndarray            # recorded snapshot times (includes 0 and T)
    states: np.ndarray           # (n_paths, len(times), chart_dim)
    blowup: np.ndarray           # paths that left the chart and were frozen
    _exits: dict = field(default_factory=dict, repr=False)

    @property
    def n_paths(self):
        return self.cfg.n_paths

    @property
    def path_seeds(self):
        """Derived per-path keys: the hashed (seed, path index) pairs that
        seed each path's counter stream."""
        idx = np.arange(self.cfg.n_paths, dtype=np.uint64)
        with np.errstate(over="ignore"):
            base = rng._mix(np.uint64(self.cfg.seed) + rng._GOLD)
            return rng._mix(base ^ rng._mix(idx + rng._GOLD))

    @property
    def blowup_fraction(self):
        return float(np.mean(self.blowup))

    def snapshot_index(self, t):
        hits = np.nonzero(np.isclose(self.times, t, rtol=0.0, atol=1e-12))[0]
        if hits.size == 0:
            raise ValueError(
                f"t={t} is not a recorded snapshot; available: {self.times.tolist()}"
            )
        return int(hits[0])

    def state_at(self, t):
        return self.states[:, self.snapshot_index(t), :]

    def ensure_exits(self, domains):
        """Replay once to fill the exit cache for every missing domain."""
        missing = [d for d in domains if d.key() not in self._exits]
        if missing:
            for rec in replay_exits(self, missing):
                self._exits[rec.domain.key()] = rec

    def exit_records(self, domain: DomainSpec) -> ExitRecord:
        self.ensure_exits([domain])
        return self._exits[domain.key()]


def _diffusion_scale(model: MetricModel, t, states):
    """Per-path sigma with sigma^2 = g^{-1} scale in the chart gauge."""
    if model.kind in (
        geometry.EUCLIDEAN_LINE,
        geometry.EUCLIDEAN_SPACE,
        geometry.PUNCTURED_3,
    ):
        return 1.0
    if model.kind == geometry.CIRCLE:
        return 1.0 / math.sqrt(float(model.conformal(t)))
    if model.kind == geometry.HYPERBOLIC:
        return states[:, 1]
    raise ValueError(model.kind)


def _frozen_mask(model: MetricModel, states):
    """Paths that left the chart; they stay frozen from then on."""
    if model.kind == geometry.PUNCTURED_3:
        return np.linalg.norm(states, axis=-1) <= PUNCTURE_RADIUS
    if model.kind == geometry.HYPERBOLIC:
        return states[:, 1] <= 0.0
    return None


def _draw_increment(model, cfg, idx, k, n, dim):
    cols = [rng.normals(cfg.seed, idx, k, stream=d) for d in range(dim)]
    return np.stack(cols, axis=-1) if dim > 1 else cols[0][:, None]


def _advance(model, scheme, states, t, dt, xi, blown):
    """One step of the chosen scheme, in place; returns updated blown mask."""
    if scheme == "euler":
        sig = _diffusion_scale(model, t, states)
        step = math.sqrt(2.0 * dt) * xi
        if np.ndim(sig):
            step = step * sig[:, None]
        else:
            step = step * sig
        if blown is not None and blown.any():
            step[blown] = 0.0
        states += step
        fresh = _frozen_mask(model, states)
        if fresh is not None:
            return np.logical_or(blown, fresh) if blown is not None else fresh
        return blown
    # projected scheme on the unit sphere
    c = float(model.conformal(t))
    tang = xi - (np.sum(xi * states, axis=-1, keepdims=True)) * states
    cand = states + math.sqrt(2.0 * dt / c) * tang
    cand /= np.linalg.norm(cand, axis=-1, keepdims=True)
    states[...] = cand
    return blown


def simulate(model: MetricModel, x, horizon, cfg: SdeConfig, record_times=None) -> PathEnsemble:
    """Run the ensemble to the horizon, recording states at snapshot times."""
    cfg.validate_against(model)
    scheme = cfg.resolve_scheme(model)
    x = model.check_point(x)
    model.check_time(horizon)
    n_steps = int(round(horizon / cfg.dt))
    if abs(n_steps * cfg.dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError("horizon must be a whole number of steps")
    record = _snap_indices(record_times, horizon, cfg.dt, n_steps)
    record_set = set(record)
    dim = model.dim_chart

    idx = np.arange(cfg.n_paths, dtype=np.uint64)
    states = np.tile(x, (cfg.n_paths, 1))
    blown = np.zeros(cfg.n_paths, dtype=bool) if _frozen_mask(model, states) is not None else None
    out = np.empty((cfg.n_paths, len(record), dim))
    snap_times = np.empty(len(record))
    cursor = 0
    if 0 in record_set:
        out[:, cursor, :] = states
        snap_times[cursor] = 0.0
        cursor += 1
    for k in range(n_steps):
        xi = _draw_increment(model, cfg, idx, k, cfg.n_paths, dim)
        blown = _advance(model, scheme, states, k * cfg.dt, cfg.dt, xi, blown)
        if (k + 1) in record_set:
            out[:, cursor, :] = states
            snap_times[cursor] = (k + 1) * cfg.dt
            cursor += 1
    if blown is None:
        blown = np.zeros(cfg.n_paths, dtype=bool)
    return PathEnsemble(
        model=model,
        x=x,
        cfg=cfg,
        horizon=n_steps * cfg.dt,
        times=snap_times,
        states=out,
        blowup=blown,
    )


def _snap_indices(record_times, horizon, dt, n_steps):
    wanted = {0, n_steps}
    if record_times is not None:
        for t in record_times:
            k = int(round(t / dt))
            if abs(k * dt - t) > 1e-9 * max(1.0, t):
                raise ValueError(f"record time {t} is not a multiple of dt={dt}")
            if not 0 <= k <= n_steps:
                raise ValueError(f"record time {t} outside the horizon")
            wanted.add(k)
    return sorted(wanted)


def replay_exits(ensemble: PathEnsemble, domains) -> list[ExitRecord]:
    """Recover first-exit data by re-running the deterministic dynamics.

    Exit is the first grid time at which a path is outside the (open)
    domain; no overshoot correction is applied, so exit times carry an
    O(sqrt(dt)) upward bias.  Paths starting outside get tau = 0.
    """
    model, cfg = ensemble.model, ensemble.cfg
    for d in domains:
        d.validate_against(model)
    scheme = cfg.resolve_scheme(model)
    n = cfg.n_paths
    dim = model.dim_chart
    idx = np.arange(n, dtype=np.uint64)
    states = np.tile(ensemble.x, (n, 1))
    blown = np.zeros(n, dtype=bool) if _frozen_mask(model, states) is not None else None
    n_steps = int(round(ensemble.horizon / cfg.dt))

    taus = [np.full(n, np.inf) for _ in domains]
    exit_states = [np.tile(ensemble.x, (n, 1)) for _ in domains]
    open_mask = []
    for j, d in enumerate(domains):
        inside0 = d.contains(model, states)
        taus[j][~inside0] = 0.0
        open_mask.append(inside0.copy())

    for k in range(n_steps):
        if not any(m.any() for m in open_mask):
            break
        xi = _draw_increment(model, cfg, idx, k, n, dim)
        blown = _advance(model, scheme, states, k * cfg.dt, cfg.dt, xi, blown)
        t_next = (k + 1) * cfg.dt
        for j, d in enumerate(domains):
            m = open_mask[j]
            if not m.any():
                continue
            left = m & ~d.contains(model, states)
            if left.any():
                taus[j][left] = t_next
                exit_states[j][left] = states[left]
                open_mask[j] &= ~left
    records = []
    for j, d in enumerate(domains):
        censored = ~np.isfinite(taus[j])
        records.append(
            ExitRecord(domain=d, tau=taus[j], state=exit_states[j], censored=censored)
        )
    return records


def first_exit(ensemble: PathEnsemble, domain: DomainSpec) -> ExitRecord:
    """Per-path first grid time outside the domain (cached per ensemble).

    Paths starting outside get tau = 0 with the start point as exit state;
    paths never leaving within the horizon are marked censored.
    """
    domain.validate_against(ensemble.model)
    return ensemble.exit_records(domain)


def expect(ensemble: PathEnsemble, f, mode) -> ExpectResult:
    """Monte Carlo mean and standard error of f under the chosen mode.

    ``f(times, points)`` must be vectorized over paths; for Stopped/AtExit
    the times argument is per-path.
    """
    if isinstance(mode, AtTime):
        vals = np.asarray(f(mode.t, ensemble.state_at(mode.t)), dtype=float)
        return _reduce(vals, 0.0)
    if isinstance(mode, Stopped):
        rec = ensemble.exit_records(mode.domain)
        stopped_before = rec.tau <= mode.t
        ts = np.where(stopped_before, rec.tau, mode.t)
        pts = np.where(stopped_before[:, None], rec.state, ensemble.state_at(mode.t))
        vals = np.asarray(f(ts, pts), dtype=float)
        return _reduce(vals, rec.censored_fraction)
    if isinstance(mode, AtExit):
        rec = ensemble.exit_records(mode.domain)
        frac = rec.censored_fraction
        if frac > 0.5:
            raise CensoredDominates(
                f"{frac:.1%} of paths never exited within the horizon"
            )
        keep = ~rec.censored
        vals = np.asarray(f(rec.tau[keep], rec.state[keep]), dtype=float)
        return _reduce(vals, frac)
    raise TypeError(f"unknown expectation mode {mode!r}")


def _reduce(vals, censored_frac):
    n = vals.size
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ExpectResult(mean=mean, stderr=stderr, censored_frac=censored_frac, n=n)


# ---------------------------------------------------------------------------
# columnar serialization: JSON header line, then little-endian float64
# states in path-major order


def save_ensemble(ensemble: PathEnsemble, path):
    header = {
        "model": geometry.model_id(ensemble.model),
        "time_window": list(ensemble.model.time_window),
        "x": ensemble.x.tolist(),
        "seed": ensemble.cfg.seed,
        "dt": ensemble.cfg.dt,
        "n_paths": ensemble.cfg.n_paths,
        "scheme": ensemble.cfg.scheme,
        "horizon": ensemble.horizon,
        "times": ensemble.times.tolist(),
        "blowup_paths": np.nonzero(ensemble.blowup)[0].tolist(),
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(ensemble.states.astype("<f8").tobytes(order="C"))


def load_ensemble(path) -> PathEnsemble:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError("not an ensemble file")
        header = json.loads(fh.readline().decode())
        body = fh.read()
    model = geometry.parse_model(
        header["model"], time_window=tuple(header["time_window"])
    )
    times = np.asarray(header["times"], dtype=float)
    n, k = header["n_paths"], len(times)
    dim = model.dim_chart
    states = np.frombuffer(body, dtype="<f8").reshape(n, k, dim).astype(float)
    blowup = np.zeros(n, dtype=bool)
    blowup[np.asarray(header["blowup_paths"], dtype=int)] = True
    cfg = SdeConfig(
        dt=header["dt"], n_paths=n, seed=header["seed"], scheme=header["scheme"]
    )
    return PathEnsemble(
        model=model,
        x=np.asarray(header["x"], dtype=float),
        cfg=cfg,
        horizon=header["horizon"],
        times=times,
        states=states,
        blowup=blowup,
    )
