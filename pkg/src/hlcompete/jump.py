"""The competition process: twice the red harmonic measure as a pure-jump Markov process.

Simulation is exact: waiting times are exponential with rate ``r(c)`` and
each jump is computed from the closed-form boundary map, never from its
small-capacity expansion.  States within ``absorb_tol`` of 0 or 2 are
snapped to the boundary and held there.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from . import kernel
from .errors import DomainError, QuadratureError
from .slitmap import check_capacity, gamma_tilde

BLOCK_EVENTS = 8192
DEFAULT_ABSORB_TOL = 1e-12
# |dX| <= JUMP_BOUND_A * sqrt(c * max(s+, s-)); calibrated once, see notes in tests
JUMP_BOUND_A = 4.0


def make_rng(seed):
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class JumpState:
    t: float = 0.0
    x: float = 1.0
    n: int = 0

    @property
    def absorbed(self):
        return self.x <= 0.0 or self.x >= 2.0


@dataclass(frozen=True)
class Jump:
    """Outcome of one :func:`step`; ``red`` is None when the input was absorbed."""

    state: JumpState
    delta: float
    red: Optional[bool]
    theta: Optional[float] = None


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    seed: object
    params: dict = field(default_factory=dict)
    absorbed_at: Optional[float] = None
    n_events: int = 0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x"])
            for ti, xi in zip(self.t, self.x):
                w.writerow([repr(float(ti)), repr(float(xi))])

    def sidecar(self):
        return {
            "seed": _jsonable_seed(self.seed),
            "params": self.params,
            "absorbed_at": self.absorbed_at,
            "n_events": self.n_events,
            "n_samples": int(len(self.t)),
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_csv(cls, path, sidecar=None):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta = {}
        if sidecar is not None:
            with open(sidecar) as fh:
                meta = json.load(fh)
        return cls(t=data[:, 0], x=data[:, 1], seed=meta.get("seed"), params=meta.get("params", {}),
                   absorbed_at=meta.get("absorbed_at"), n_events=meta.get("n_events", 0))


def _jsonable_seed(seed):
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
    return seed


def step(state, profile, c, rng):
    """Advance one event.  Consumes two uniforms from ``rng``: waiting time, then angle."""
    c = check_capacity(c)
    if state.absorbed:
        return Jump(state, 0.0, None)
    if not 0.0 < state.x < 2.0:
        raise DomainError(f"state x={state.x} outside [0, 2]")
    u_wait, u_theta = rng.random(2)
    rate = profile.r(c)
    t = state.t + (-math.log1p(-u_wait) / rate)
    th = 2.0 * u_theta
    sp, sm = profile.sizes(state.x, c)
    red = 0.0 < th < state.x
    cap = c * float(sp if red else sm)
    if not cap > 0.0:
        raise DomainError(f"profile {profile.name} gave non-positive size at x={state.x}")
    em1 = math.expm1(cap)
    xn = state.x + kernel.gt_em1(em1, th) - kernel.gt_em1(em1, th - state.x)
    xn = min(max(xn, 0.0), 2.0)
    new = JumpState(t, xn, state.n + 1)
    return Jump(new, xn - state.x, red, th)


class _Runner:
    """Drives the kernel block by block and samples the path at requested times."""

    def __init__(self, profile, c, t_max, seed, absorb_tol, backend, max_events):
        self.profile = profile
        self.c = check_capacity(c)
        self.rate = profile.r(self.c)
        self.t_max = float(t_max)
        self.rng = make_rng(seed)
        self.tol = float(absorb_tol)
        self.backend = backend
        self.max_events = max_events
        self.ev_t = np.empty(BLOCK_EVENTS)
        self.ev_x = np.empty(BLOCK_EVENTS)

    def run(self, on_block):
        x, t, n_total = 1.0, 0.0, 0
        status = kernel.EXHAUSTED
        if self.t_max <= 0.0:
            return x, t, n_total, kernel.HORIZON
        while True:
            u = self.rng.random(2 * BLOCK_EVENTS)
            x_prev = x
            x, t, _, n, status = kernel.run_events(
                self.profile, u, x, t, self.t_max, self.c, self.rate, self.tol,
                self.ev_t, self.ev_x, backend=self.backend,
            )
            n_total += n
            on_block(x_prev, self.ev_t[:n], self.ev_x[:n], status, t)
            if status != kernel.EXHAUSTED:
                return x, t, n_total, status
            if self.max_events is not None and n_total >= self.max_events:
                return x, t, n_total, status


def _sample_block(times, k, x_prev, ev_t, ev_x, known_until, out):
    """Fill ``out[k:]`` for sample times up to ``known_until``; returns the new ``k``."""
    hi = np.searchsorted(times, known_until, side="right")
    if hi <= k:
        return k
    sel = times[k:hi]
    j = np.searchsorted(ev_t, sel, side="right")
    vals = np.where(j == 0, x_prev, ev_x[np.maximum(j - 1, 0)])
    out[k:hi] = vals
    return hi


def simulate(profile, c, t_max, seed=None, sample_dt=None, absorb_tol=DEFAULT_ABSORB_TOL,
             backend=None, max_events=None):
    """Simulate one path from ``x = 1`` until ``t_max`` or absorption.

    With ``sample_dt=None`` every event is recorded.  Otherwise the path is
    read off on the grid ``k * sample_dt`` (right-continuous values) and the
    absorption event, if any, is inserted; grid points after absorption carry
    the absorbed value.
    """
    if not t_max >= 0.0:
        raise DomainError("t_max must be non-negative")
    runner = _Runner(profile, c, t_max, seed, absorb_tol, backend, max_events)
    params = {
        "profile": profile.source or {"name": profile.name},
        "c": runner.c,
        "t_max": float(t_max),
        "rate": runner.rate,
        "absorb_tol": runner.tol,
        "sample_dt": sample_dt,
        "backend": kernel.backend_module(backend).BACKEND if profile.native else "python",
    }
    if sample_dt is None:
        ts, xs = [np.zeros(1)], [np.ones(1)]

        def on_block(x_prev, et, ex, status, t_now):
            ts.append(et.copy())
            xs.append(ex.copy())

        x, t, n, status = runner.run(on_block)
        traj = Trajectory(np.concatenate(ts), np.concatenate(xs), seed, params, n_events=n)
    else:
        if sample_dt <= 0.0:
            raise DomainError("sample_dt must be positive")
        if not math.isfinite(t_max):
            raise DomainError("grid sampling needs a finite t_max")
        grid = np.arange(0.0, t_max + 0.5 * sample_dt, sample_dt)
        grid = grid[grid <= t_max * (1 + 1e-12)]
        vals = np.full(grid.shape, np.nan)
        state = {"k": 0, "abs": None}

        def on_block(x_prev, et, ex, status, t_now):
            known = t_now if status == kernel.EXHAUSTED else (et[-1] if status == kernel.ABSORBED else t_max)
            state["k"] = _sample_block(grid, state["k"], x_prev, et, ex, known, vals)
            if status == kernel.ABSORBED:
                state["abs"] = (float(et[-1]), float(ex[-1]))

        x, t, n, status = runner.run(on_block)
        k = state["k"]
        vals[k:] = x
        ts, xs = grid, vals
        if state["abs"] is not None:
            ta, xa = state["abs"]
            pos = int(np.searchsorted(ts, ta))
            if not (pos < len(ts) and ts[pos] == ta):
                ts = np.insert(ts, pos, ta)
                xs = np.insert(xs, pos, xa)
        traj = Trajectory(ts, xs, seed, params, n_events=n)
    if status == kernel.ABSORBED:
        traj.absorbed_at = float(t)
    return traj


@dataclass
class EnsembleResult:
    """Per-path summaries of an ensemble run; ``samples[i, k]`` is path i at ``sample_times[k]``."""

    final_x: np.ndarray
    final_t: np.ndarray
    absorbed_at: np.ndarray
    n_events: np.ndarray
    sample_times: np.ndarray
    samples: np.ndarray

    @property
    def absorbed(self):
        return np.isfinite(self.absorbed_at)


def run_path_summary(profile, c, t_max, seed, sample_times=(), absorb_tol=DEFAULT_ABSORB_TOL,
                     backend=None, max_events=None):
    """Final state and values at ``sample_times`` of one path, without storing it."""
    times = np.asarray(sample_times, dtype=float)
    vals = np.full(times.shape, np.nan)
    runner = _Runner(profile, c, t_max, seed, absorb_tol, backend, max_events)
    state = {"k": 0}

    def on_block(x_prev, et, ex, status, t_now):
        known = t_now if status == kernel.EXHAUSTED else (et[-1] if status == kernel.ABSORBED else t_max)
        state["k"] = _sample_block(times, state["k"], x_prev, et, ex, known, vals)

    x, t, n, status = runner.run(on_block)
    vals[state["k"]:] = x
    absorbed_at = t if status == kernel.ABSORBED else math.inf
    return x, t, absorbed_at, n, vals


def seeds_for(seed_base, n):
    """Independent child seeds for an ensemble, reproducible from one base seed."""
    return np.random.SeedSequence(seed_base).spawn(n)


def run_ensemble(profile, c, t_max, n_paths, seed_base, sample_times=(), threads=1,
                 absorb_tol=DEFAULT_ABSORB_TOL, backend=None, max_events=None):
    """Run ``n_paths`` independent paths; results do not depend on ``threads``."""
    seeds = seeds_for(seed_base, n_paths)
    times = np.asarray(sample_times, dtype=float)

    def one(s):
        return run_path_summary(profile, c, t_max, s, times, absorb_tol, backend, max_events)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    return EnsembleResult(
        final_x=np.array([r[0] for r in results]),
        final_t=np.array([r[1] for r in results]),
        absorbed_at=np.array([r[2] for r in results]),
        n_events=np.array([r[3] for r in results], dtype=np.int64),
        sample_times=times,
        samples=np.array([r[4] for r in results]).reshape(n_paths, len(times)),
    )


def sample_jumps(profile, c, x, n, seed=None):
    """Draw ``n`` independent one-step jumps from state ``x`` (vectorised).

    Returns ``(delta, red)`` arrays.  Used for Monte Carlo checks of the
    jump kernel; uses the same angle convention as :func:`step`.
    """
    c = check_capacity(c)
    rng = make_rng(seed)
    th = 2.0 * rng.random(n)
    sp, sm = profile.sizes(x, c)
    red = (th > 0.0) & (th < x)
    cap = c * np.where(red, sp, sm)
    delta = gamma_tilde(cap, th) - gamma_tilde(cap, th - x)
    delta = np.clip(x + delta, 0.0, 2.0) - x
    return delta, red


def _pieces(a, b, features, scale):
    pts = {a, b}
    for p in features:
        for k in (0.0, 1.0, 4.0, 16.0, 64.0, 256.0):
            for q in (p - k * scale, p + k * scale):
                if a < q < b:
                    pts.add(q)
    return sorted(pts)


def _quad_pieces(f, a, b, features, scale, tol, what):
    edges = _pieces(a, b, features, scale)
    total, err = 0.0, 0.0
    per = tol / max(len(edges) - 1, 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(f, lo, hi, epsabs=per, epsrel=1e-13, limit=400)
        total += val
        err += e
    if err > tol:
        raise QuadratureError(
            f"{what}: estimated error {err:.3g} exceeds tolerance {tol:.3g}",
            {"interval": (a, b), "pieces": len(edges) - 1, "estimate": total, "error": err},
        )
    return total


def kernel_drift(profile, c, x):
    """Mean jump rate ``b^c(x) = r(c) * int_0^x (gt_{c s+}(u) - gt_{c s-}(u)) du``."""
    c = check_capacity(c)
    if not 0.0 < x < 2.0:
        raise DomainError("kernel_drift needs x in (0, 2)")
    sp, sm = (float(v) for v in profile.sizes(x, c))
    rate = profile.r(c)
    if sp == sm:
        return 0.0
    ep, em = math.expm1(c * sp), math.expm1(c * sm)
    gt = kernel.gt_em1

    def f(u):
        return gt(ep, u) - gt(em, u)

    scale = math.sqrt(c * max(sp, sm))
    val = _quad_pieces(f, 0.0, x, (0.0, 2.0), scale, 1e-10 * c, "kernel_drift")
    return rate * val


def kernel_variance(profile, c, x):
    """Second moment rate ``a^c(x)`` of the jump kernel, by direct quadrature."""
    c = check_capacity(c)
    if not 0.0 < x < 2.0:
        raise DomainError("kernel_variance needs x in (0, 2)")
    sp, sm = (float(v) for v in profile.sizes(x, c))
    rate = profile.r(c)
    ep, em = math.expm1(c * sp), math.expm1(c * sm)
    gt = kernel.gt_em1

    def f_red(th):
        d = gt(ep, th) - gt(ep, th - x)
        return d * d

    def f_blue(th):
        d = gt(em, th) - gt(em, th - x)
        return d * d

    scale = math.sqrt(c * max(sp, sm))
    tol = 1e-10 * c**1.5
    red = _quad_pieces(f_red, 0.0, x, (0.0, x), scale, tol, "kernel_variance")
    blue = _quad_pieces(f_blue, x, 2.0, (x, 2.0), scale, tol, "kernel_variance")
    return 0.5 * rate * (red + blue)


def asymptotic_drift(profile, c, x):
    """Leading-order small-``c`` form of :func:`kernel_drift`, with the ``s log s`` term."""
    c = check_capacity(c)
    sp, sm = (float(v) for v in profile.sizes(x, c))
    rate = profile.r(c)
    pi2 = math.pi**2
    main = (sp - sm) * (math.log(1.0 / c) + 2.0 * math.log(math.sin(0.5 * math.pi * x)) + 1.0 + 2.0 * math.log(2.0))
    corr = sp * math.log(sp) - sm * math.log(sm)
    return c * rate * (main - corr) / pi2


def asymptotic_variance(profile, c, x):
    c = check_capacity(c)
    sp, sm = (float(v) for v in profile.sizes(x, c))
    return 16.0 / (3.0 * math.pi**3) * c**1.5 * profile.r(c) * (sp**1.5 + sm**1.5)
