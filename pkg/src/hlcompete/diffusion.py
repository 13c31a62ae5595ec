"""Small-particle limits: the limit ODE/SDE, its integration and its boundary behaviour.

Scale and speed are integrated outward from ``x = 1`` on Gauss-Legendre
panels that halve in length toward each end of ``(0, 2)`` (breakpoints at
``2^-k`` and ``2 - 2^-k``).  On such panels the ``1/x`` and ``1/(2-x)``
singularities typical of a vanishing variance are smooth on the panel
scale, and the nested integral ``int 2b/a`` is done panel by panel.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate as spi, optimize

from .errors import DomainError, PreconditionError, QuadratureError, SpecificationError
from .expr import Expression
from .profiles import PI2, RATE_DIFFUSIVE, RATE_ODE

MODE_ODE, MODE_DRIFTLESS, MODE_FULL = "ode", "driftless", "full"
MODES = (MODE_ODE, MODE_DRIFTLESS, MODE_FULL)
VAR_CONST = 32.0 / (3.0 * math.pi**3)

BOTH_FINITE = "both-finite"
LEFT_INFINITE = "left-infinite"
RIGHT_INFINITE = "right-infinite"
RECURRENT = "both-infinite-recurrent"
NULL = "both-infinite-null"
UNDETERMINED = "undetermined"


def _vectorised(fn):
    def wrapped(x):
        x = np.asarray(x, dtype=float)
        out = np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape).copy()
        return out[()] if out.ndim == 0 else out

    return wrapped


@dataclass(frozen=True)
class SdeSpec:
    """Drift ``b`` and variance ``a`` of ``dX = b dt + sqrt(a) dB`` on ``(0, 2)``."""

    b: Callable
    a: Callable
    mode: str = MODE_FULL
    name: str = "sde"
    source: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise SpecificationError(f"unknown mode {self.mode!r}")

    def check(self, grid=None):
        """Grid check of ``a >= 0`` (``a > 0`` outside ODE mode) and finiteness of ``b / a``."""
        if grid is None:
            grid = np.linspace(0.005, 1.995, 399)
        a = np.asarray(self.a(grid), dtype=float)
        b = np.asarray(self.b(grid), dtype=float)
        if not np.all(np.isfinite(b)):
            raise SpecificationError(f"{self.name}: drift not finite on (0, 2)")
        if np.any(a < 0.0) or not np.all(np.isfinite(a)):
            raise SpecificationError(f"{self.name}: variance must be finite and non-negative")
        if self.mode != MODE_ODE:
            if np.any(a <= 0.0):
                raise SpecificationError(f"{self.name}: variance must be positive on (0, 2)")
            if not np.all(np.isfinite(b / a)):
                raise SpecificationError(f"{self.name}: b/a not finite on the grid")
        return True


def sde(b, a, mode=MODE_FULL, name="custom"):
    """Spec from expression strings in ``x``."""
    eb, ea = Expression(b, ("x",)), Expression(a, ("x",))
    spec = SdeSpec(
        b=_vectorised(lambda x: eb(x=x)), a=_vectorised(lambda x: ea(x=x)),
        mode=mode, name=name, source={"b": b, "a": a, "mode": mode, "name": name},
    )
    return spec


def limit_spec(profile, nominal_ode=False, grid=None):
    """Limit ODE/SDE of a profile as ``c -> 0``.

    Ballistic schedule ``r = 1/(c log 1/c)``: ``b = (s+ - s-)/pi^2``, ``a = 0``.
    The ``1/pi^2`` factor is what the exact kernel drift converges to; pass
    ``nominal_ode=True`` for the unscaled ``b = s+ - s-`` (same fixed points,
    time running ``pi^2`` times faster).

    Diffusive schedule ``r = c^{-3/2}``: requires ``s+ = s- = s`` in the
    limit; ``a = 32 s^{3/2} / (3 pi^3)`` and ``b = h / pi^2`` (zero if the
    profile has no drift profile).
    """
    if profile.s_plus_limit is None or profile.s_minus_limit is None:
        raise SpecificationError(f"{profile.name}: limit functions are required")
    sp, sm = profile.s_plus_limit, profile.s_minus_limit
    src = {"profile": profile.source or {"name": profile.name}, "nominal_ode": nominal_ode}
    if profile.rate == RATE_ODE:
        scale = 1.0 if nominal_ode else 1.0 / PI2
        return SdeSpec(
            b=_vectorised(lambda x: scale * (sp(x) - sm(x))),
            a=_vectorised(lambda x: np.zeros_like(np.asarray(x, dtype=float))),
            mode=MODE_ODE, name=profile.name, source=src,
        )
    if profile.rate == RATE_DIFFUSIVE:
        if grid is None:
            grid = np.linspace(0.01, 1.99, 199)
        gap = np.max(np.abs(np.asarray(sp(grid)) - np.asarray(sm(grid))))
        if gap > 1e-12:
            raise SpecificationError(
                f"{profile.name}: diffusive schedule needs equal limits s+ = s- (gap {gap:.3g})"
            )

        def a(x):
            return VAR_CONST * np.power(np.asarray(sp(x), dtype=float), 1.5)

        h = profile.h
        if h is None or np.max(np.abs(np.asarray(h(grid), dtype=float))) == 0.0:
            return SdeSpec(b=_vectorised(lambda x: np.zeros_like(np.asarray(x, dtype=float))),
                           a=_vectorised(a), mode=MODE_DRIFTLESS, name=profile.name, source=src)
        return SdeSpec(b=_vectorised(lambda x: np.asarray(h(x), dtype=float) / PI2),
                       a=_vectorised(a), mode=MODE_FULL, name=profile.name, source=src)
    raise SpecificationError(f"{profile.name}: no limit for rate schedule {profile.rate!r}")


# -- integration ---------------------------------------------------------

H_MIN_LEVELS = 30


@dataclass
class Path:
    t: np.ndarray
    x: np.ndarray
    tau: float = math.inf

    @property
    def absorbed(self):
        return math.isfinite(self.tau)


def _rk4(b, x0, dt, t_max):
    n = int(math.floor(t_max / dt + 1e-9))
    ts = np.arange(n + 1) * dt
    xs = np.empty(n + 1)
    xs[0] = x = float(x0)
    for k in range(n):
        k1 = float(b(x))
        k2 = float(b(x + 0.5 * dt * k1))
        k3 = float(b(x + 0.5 * dt * k2))
        k4 = float(b(x + dt * k3))
        x = x + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        xs[k + 1] = x
    if ts[-1] < t_max * (1 - 1e-12):
        h = t_max - ts[-1]
        k1 = float(b(x))
        k2 = float(b(x + 0.5 * h * k1))
        k3 = float(b(x + 0.5 * h * k2))
        k4 = float(b(x + h * k3))
        ts = np.append(ts, t_max)
        xs = np.append(xs, x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)
    return ts, xs


def _refine(spec, x, h, dw, rng, level):
    """Split an exiting Euler step along its Brownian bridge.

    Returns ``(x_end, elapsed_before_exit or None)``; an exit is accepted
    only when it survives ``H_MIN_LEVELS`` halvings.
    """
    half = 0.5 * h
    dw1 = 0.5 * dw + math.sqrt(0.25 * h) * rng.standard_normal()
    dw2 = dw - dw1
    elapsed = 0.0
    for piece in (dw1, dw2):
        xn = x + float(spec.b(x)) * half + math.sqrt(max(float(spec.a(x)), 0.0)) * piece
        if not 0.0 < xn < 2.0:
            if level >= H_MIN_LEVELS:
                return (0.0 if xn <= 0.0 else 2.0), elapsed + half
            xn, hit = _refine(spec, x, half, piece, rng, level + 1)
            if hit is not None:
                return xn, elapsed + hit
        x = xn
        elapsed += half
    return x, None


def _check_times(dt, t_max):
    if not dt > 0.0:
        raise DomainError("dt must be positive")
    if not dt < t_max:
        raise DomainError("dt must be smaller than t_max")


def integrate_path(spec, x0, dt, t_max, seed=None):
    """Single path.  ODE mode uses RK4; otherwise Euler-Maruyama stopped on exit from ``(0, 2)``.

    An Euler step that leaves ``(0, 2)`` is re-simulated on a Brownian
    bridge with the same increment (halving down to ``dt * 2**-30``), so a
    path is absorbed only if the exit persists at that resolution.
    """
    _check_times(dt, t_max)
    if not 0.0 < x0 < 2.0:
        raise DomainError("x0 must lie in (0, 2)")
    if spec.mode == MODE_ODE:
        ts, xs = _rk4(spec.b, x0, dt, t_max)
        return Path(ts, xs)
    rng = np.random.default_rng(seed)
    bridge = np.random.default_rng(rng.integers(2**63))
    n = int(math.floor(t_max / dt + 1e-9))
    dws = rng.standard_normal(n) * math.sqrt(dt)
    ts = [0.0]
    xs = [float(x0)]
    x = float(x0)
    for k in range(n):
        dw = dws[k]
        xn = x + float(spec.b(x)) * dt + math.sqrt(max(float(spec.a(x)), 0.0)) * dw
        if not 0.0 < xn < 2.0:
            xn, hit = _refine(spec, x, dt, dw, bridge, 1)
            if hit is not None:
                ts.append(k * dt + hit)
                xs.append(xn)
                return Path(np.array(ts), np.array(xs), tau=k * dt + hit)
        x = xn
        ts.append((k + 1) * dt)
        xs.append(x)
    return Path(np.array(ts), np.array(xs))


integrate = integrate_path


@dataclass
class EnsembleOutcome:
    """``x[i]`` is path ``i`` at ``t_max`` (its absorbed value if ``tau[i]`` is finite)."""

    x: np.ndarray
    tau: np.ndarray
    sample_times: np.ndarray
    samples: np.ndarray

    @property
    def absorbed(self):
        return np.isfinite(self.tau)


def integrate_ensemble(spec, x0, dt, t_max, n_paths, seed=None, sample_times=()):
    """Vectorised ensemble of :func:`integrate_path` (same scheme, one RNG stream)."""
    _check_times(dt, t_max)
    rng = np.random.default_rng(seed)
    bridge = np.random.default_rng(rng.integers(2**63))
    n = int(math.floor(t_max / dt + 1e-9))
    times = np.asarray(sample_times, dtype=float)
    sample_steps = np.rint(times / dt).astype(np.int64)
    samples = np.full((n_paths, len(times)), np.nan)
    x = np.full(n_paths, float(x0))
    tau = np.full(n_paths, math.inf)
    alive = np.ones(n_paths, dtype=bool)
    sq = math.sqrt(dt)
    for k in range(n):
        for j in np.nonzero(sample_steps == k)[0]:
            samples[:, j] = x
        if spec.mode == MODE_ODE:
            x = x + dt * spec.b(x)
            continue
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        dw = rng.standard_normal(n_paths)[idx] * sq
        xa = x[idx]
        xn = xa + spec.b(xa) * dt + np.sqrt(np.maximum(spec.a(xa), 0.0)) * dw
        bad = np.nonzero(~((xn > 0.0) & (xn < 2.0)))[0]
        for i in bad:
            val, hit = _refine(spec, float(xa[i]), dt, float(dw[i]), bridge, 1)
            xn[i] = val
            if hit is not None:
                tau[idx[i]] = k * dt + hit
                alive[idx[i]] = False
        x[idx] = xn
    for j in np.nonzero(sample_steps >= n)[0]:
        samples[:, j] = x
    return EnsembleOutcome(x=x, tau=tau, sample_times=times, samples=samples)


# -- scale and speed -------------------------------------------------------

GAUSS_FINE = np.polynomial.legendre.leggauss(24)
GAUSS_COARSE = np.polynomial.legendre.leggauss(16)
PANEL_RTOL = 1e-12
MAX_SPLITS = 24


def _ratio(spec, x):
    return 2.0 * np.asarray(spec.b(x), dtype=float) / np.asarray(spec.a(x), dtype=float)


def _panel_rule(spec, lo, hi, B_lo, rule):
    """One Gauss panel from ``lo`` to ``hi`` (either order) with nested ``B``."""
    t, w = rule
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    span = hi - lo
    y = lo + span * t
    inner = lo + (y - lo)[:, None] * t[None, :]
    B = B_lo + (y - lo) * (_ratio(spec, inner) @ w)
    a_y = np.asarray(spec.a(y), dtype=float)
    with np.errstate(over="ignore"):
        d_rho = span * np.dot(w, np.exp(-B))
        d_m = span * np.dot(w, np.exp(B) / a_y)
    d_B = span * np.dot(w, _ratio(spec, y))
    return np.array([d_B, d_rho, d_m])


def _panel(spec, lo, hi, B_lo, depth=0):
    """Adaptive panel: bisect until the 24- and 16-point rules agree."""
    fine = _panel_rule(spec, lo, hi, B_lo, GAUSS_FINE)
    coarse = _panel_rule(spec, lo, hi, B_lo, GAUSS_COARSE)
    err = np.abs(fine - coarse)
    scale = np.maximum(np.abs(fine), 1e-300)
    # nodes near 2 are quantised at ulp(2); no rule can beat that relative to the panel width
    rtol = max(PANEL_RTOL, 64.0 * np.spacing(max(abs(lo), abs(hi))) / abs(hi - lo))
    if not np.all(np.isfinite(fine)) or np.all(err <= rtol * scale + 1e-15):
        return fine
    if depth >= MAX_SPLITS:
        raise QuadratureError(
            f"scale/speed quadrature did not converge on [{lo:.6g}, {hi:.6g}]",
            {"panel": (lo, hi), "estimate": fine.tolist(), "error": err.tolist()},
        )
    mid = 0.5 * (lo + hi)
    left = _panel(spec, lo, mid, B_lo, depth + 1)
    right = _panel(spec, mid, hi, B_lo + left[0], depth + 1)
    return left + right


def _march(spec, nodes):
    """Cumulative ``(B, rho, mass)`` from ``x = 1`` along ``nodes`` (moving away from 1)."""
    out = np.zeros((3, len(nodes)))
    state = np.zeros(3)
    prev = 1.0
    for i, node in enumerate(nodes):
        if node != prev:
            state = state + _panel(spec, prev, float(node), state[0])
        out[:, i] = state
        prev = float(node)
    return out


def _side_nodes(points, side):
    """Sorted path from 1 outward through the dyadic breakpoints and the query points."""
    pts = np.asarray(points, dtype=float)
    if side < 0:
        far = pts.min()
        k = np.arange(1, 64)
        dy = 2.0 ** (-k.astype(float))
        dy = dy[dy > far]
        nodes = np.unique(np.concatenate([dy, pts]))[::-1]
    else:
        far = 2.0 - pts.max()
        k = np.arange(1, 64)
        dy = 2.0 ** (-k.astype(float))
        dy = 2.0 - dy[dy > far]
        nodes = np.unique(np.concatenate([dy, pts]))
    return nodes


def _scale_speed(spec, x):
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0.0) | (x >= 2.0)):
        raise DomainError("scale and speed are defined on (0, 2)")
    if spec.mode == MODE_ODE:
        raise SpecificationError("scale and speed need a positive variance")
    flat = x.ravel()
    res = np.zeros((3, flat.size))
    for side, sel in ((-1, flat < 1.0), (1, flat > 1.0)):
        if np.any(sel):
            nodes = _side_nodes(flat[sel], side)
            vals = _march(spec, nodes)
            idx = np.searchsorted(nodes if side > 0 else nodes[::-1], flat[sel])
            if side < 0:
                idx = len(nodes) - 1 - idx
            res[:, sel] = vals[:, idx]
    return res.reshape((3,) + x.shape), x


def scale_function(spec, x):
    """``rho(x) = int_1^x exp(-int_1^y 2b/a) dy``."""
    res, x = _scale_speed(spec, x)
    out = res[1]
    return out[()] if out.ndim == 0 else out


def speed_density(spec, x):
    """``m(x) = exp(int_1^x 2b/a) / a(x)``."""
    res, x = _scale_speed(spec, x)
    out = np.exp(res[0]) / np.asarray(spec.a(x), dtype=float)
    return out[()] if out.ndim == 0 else out


def _inf_str(v):
    if v is None:
        return None
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass
class ScaleSpeedReport:
    name: str
    rho_at_0: object
    rho_at_2: object
    M: object
    classification: str
    hitting_prob_0: Optional[float] = None
    absorption_side: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)
    lyapunov: Optional[dict] = None

    def to_dict(self):
        d = asdict(self)
        for k in ("rho_at_0", "rho_at_2", "M"):
            d[k] = _inf_str(d[k])
        return d

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_inf_str) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


DYADIC_LEVELS = 30
FINITE_RATIO = 0.95
INFINITE_RATIO = 0.999
DIVERGENCE_THRESHOLD = 1e6


def _limit(values, sign):
    """Decide the limit of a monotone sequence from its dyadic increments.

    Returns ``(value or +-inf or None, info)``.
    """
    vals = np.asarray(values, dtype=float)
    finite = np.isfinite(vals)
    if not np.all(finite) or np.max(np.abs(vals[finite])) > DIVERGENCE_THRESHOLD:
        return sign * math.inf, {"rule": "threshold"}
    inc = np.abs(np.diff(vals))
    tail = inc[-6:]
    if np.all(tail == 0.0):
        return float(vals[-1]), {"rule": "exact", "ratio": 0.0}
    if np.any(tail == 0.0):
        # increments dropped below double resolution: converged
        return float(vals[-1]), {"rule": "resolution", "ratio": 0.0}
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = tail[1:] / tail[:-1]
    q = float(np.median(ratios))
    info = {"ratio": q, "last_increment": float(inc[-1])}
    if q < FINITE_RATIO:
        tail_sum = float(inc[-1]) * q / (1.0 - q)
        info["rule"] = "geometric-tail"
        return float(vals[-1]) + sign * tail_sum, info
    if q >= INFINITE_RATIO:
        info["rule"] = "non-decreasing-increments"
        return sign * math.inf, info
    info["rule"] = "inconclusive"
    return None, info


def classify_boundary(spec, levels=DYADIC_LEVELS):
    """Classify both ends of ``(0, 2)`` from ``rho`` and the speed mass.

    ``rho`` is evaluated at ``x = 2^-k`` and ``2 - 2^-k`` for ``k <= levels``
    and each limit is declared finite (geometric-tail extrapolated),
    infinite, or undetermined.
    """
    spec.check()
    k = np.arange(1, levels + 1)
    left = 2.0 ** (-k.astype(float))
    resL = _march(spec, left)
    resR = _march(spec, 2.0 - left)
    rho0, info0 = _limit(resL[1], -1.0)
    rho2, info2 = _limit(resR[1], 1.0)
    m_left, infoM0 = _limit(np.abs(resL[2]), 1.0)
    m_right, infoM2 = _limit(resR[2], 1.0)
    if m_left is None or m_right is None:
        M = None
    else:
        M = m_left + m_right
    diag = {"rho_0": info0, "rho_2": info2, "M_0": infoM0, "M_2": infoM2, "levels": int(levels)}
    report = ScaleSpeedReport(spec.name, rho0, rho2, M, UNDETERMINED, diagnostics=diag)
    if rho0 is None or rho2 is None:
        return report
    fin0, fin2 = math.isfinite(rho0), math.isfinite(rho2)
    if fin0 and fin2:
        report.classification = BOTH_FINITE
        report.hitting_prob_0 = rho2 / (rho2 - rho0)
    elif fin2:
        report.classification = LEFT_INFINITE
        report.absorption_side = 2
    elif fin0:
        report.classification = RIGHT_INFINITE
        report.absorption_side = 0
    elif M is None:
        report.classification = UNDETERMINED
    else:
        report.classification = RECURRENT if math.isfinite(M) else NULL
    return report


def stationary_density(spec, report=None):
    """``x -> m(x)/M`` for a positive-recurrent spec."""
    if report is None:
        report = classify_boundary(spec)
    if report.classification != RECURRENT:
        raise PreconditionError(
            f"stationary density needs a {RECURRENT} spec, got {report.classification}"
        )
    M = float(report.M)

    def density(x):
        return speed_density(spec, x) / M

    return density


def profile_density(profile, x):
    """Unnormalised stationary density written directly in terms of ``s`` and ``h``:
    ``3 pi^3 / (32 s^{3/2}) * exp(int_1^x 3 pi h / (16 s^{3/2}))``.
    """
    s, h = profile.s_plus_limit, profile.h
    x = np.asarray(x, dtype=float)

    def g(y):
        return 3.0 * math.pi * float(h(y)) / (16.0 * float(s(y)) ** 1.5) if h is not None else 0.0

    out = np.empty(x.shape)
    for i, xi in np.ndenumerate(x):
        val, _ = spi.quad(g, 1.0, float(xi), epsabs=1e-13, epsrel=1e-13, limit=200)
        out[i] = 3.0 * math.pi**3 / (32.0 * float(s(xi)) ** 1.5) * math.exp(val)
    return out[()] if out.ndim == 0 else out


# -- Lyapunov condition ----------------------------------------------------

MIN_GRID_POINTS = 50
MAX_GRID_GAP = 0.1
EDGE_REACH = 0.05


@dataclass
class LyapunovResult:
    feasible: bool
    C: Optional[float]
    D: Optional[float]
    margin: float
    grid: np.ndarray
    lhs: np.ndarray

    def to_dict(self):
        return {"feasible": self.feasible, "C": self.C, "D": self.D, "margin": self.margin,
                "grid_points": int(len(self.grid))}


def default_lyapunov_grid(n=401, edge=1e-6):
    core = np.linspace(0.0, 2.0, n)[1:-1]
    tails = np.geomspace(edge, 0.05, 20)
    return np.unique(np.concatenate([tails, core, 2.0 - tails]))


def lyapunov_lhs(spec, grid):
    x = np.asarray(grid, dtype=float)
    return 2.0 * (x - 1.0) * spec.b(x) + spec.a(x)


def lyapunov_check(spec, grid=None, c_max=100.0):
    """Search for ``C > D > 0`` with ``2(x-1)b + a <= -C(x-1)^2 + D`` on the grid.

    A first linear programme maximises ``t = min(C - D, D)``; a second one
    returns the smallest pair ``(C, D)`` keeping at least half that margin.
    The two outermost grid points are also imposed with ``(x-1)^2 = 1``,
    the supremum of ``(x-1)^2`` on ``(0, 2)``, so an open grid cannot hide a
    violation at the ends.  Infeasibility is a result, not an error.
    """
    grid = default_lyapunov_grid() if grid is None else np.unique(np.asarray(grid, dtype=float))
    if grid.size < MIN_GRID_POINTS:
        raise ValueError(f"grid needs at least {MIN_GRID_POINTS} points")
    if np.any((grid <= 0.0) | (grid >= 2.0)):
        raise ValueError("grid must lie inside (0, 2)")
    if grid[0] > EDGE_REACH or grid[-1] < 2.0 - EDGE_REACH or np.max(np.diff(grid)) > MAX_GRID_GAP:
        raise ValueError("grid must reach within 0.05 of both ends with gaps below 0.1")
    L = lyapunov_lhs(spec, grid)
    q = np.concatenate([(grid - 1.0) ** 2, [1.0, 1.0]])
    lhs = np.concatenate([L, [L[0], L[-1]]])
    # rows: L + C q - D <= 0 ; t - (C - D) <= 0 ; t - D <= 0 ; variables (C, D, t)
    A = np.vstack([np.column_stack([q, -np.ones_like(q), np.zeros_like(q)]),
                   [-1.0, 1.0, 1.0], [0.0, -1.0, 1.0]])
    b_ub = np.concatenate([-lhs, [0.0, 0.0]])
    bounds = [(0.0, c_max), (0.0, c_max), (None, c_max)]
    first = optimize.linprog([0.0, 0.0, -1.0], A_ub=A, b_ub=b_ub, bounds=bounds, method="highs")
    if first.status != 0 or -first.fun <= 1e-9:
        margin = float(-first.fun) if first.status == 0 else -math.inf
        return LyapunovResult(False, None, None, margin, grid, L)
    t_star = -first.fun
    bounds[2] = (0.5 * t_star, c_max)
    second = optimize.linprog([1.0, 1.0, 0.0], A_ub=A, b_ub=b_ub, bounds=bounds, method="highs")
    C, D, t = second.x if second.status == 0 else first.x
    return LyapunovResult(True, float(C), float(D), float(min(C - D, D)), grid, L)


def lyapunov_holds(spec, C, D, grid=None, tol=1e-10):
    """Check a given pair on the grid, allowing ``tol`` for rounding at points of equality."""
    grid = default_lyapunov_grid() if grid is None else np.asarray(grid, dtype=float)
    slack = -C * (grid - 1.0) ** 2 + D - lyapunov_lhs(spec, grid)
    return bool(C > D > 0.0 and np.all(slack >= -tol))


# -- ODE fixed points ------------------------------------------------------

def fixed_points(spec, n=2001):
    """Roots of ``b`` in ``(0, 2)`` with a stability label from the sign change."""
    grid = np.linspace(0.0, 2.0, n)[1:-1]
    vals = np.asarray(spec.b(grid), dtype=float)
    out = []
    for i in range(len(grid) - 1):
        lo, hi = vals[i], vals[i + 1]
        if lo == 0.0:
            root = float(grid[i])
        elif lo * hi < 0.0:
            root = optimize.brentq(lambda z: float(spec.b(z)), grid[i], grid[i + 1], xtol=1e-14)
        else:
            continue
        left = float(spec.b(max(root - 1e-6, 1e-12)))
        right = float(spec.b(min(root + 1e-6, 2.0 - 1e-12)))
        out.append({"x": root, "stable": left > 0.0 > right})
    return out
