"""Two-colour conformal clusters.

Particles arrive at Poisson times, attach at uniform angles and take the
colour of the boundary arc they land on.  The images ``z0 = Z_t(0)`` and
``z1 = Z_t(1)`` of the two interface points are tracked through the boundary
maps, so ``z1 - z0`` is the competition process.

Randomness follows the same contract as :mod:`hlcompete.jump`: uniforms are
taken pairwise from one ``default_rng(seed)`` stream, the first of each pair
giving the waiting time and the second the relative angle ``theta' = 2u``.
The attachment angle is ``theta = z1 - theta'``.  With the same seed both
modules therefore see exactly the same events.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _pykernel, kernel, svg
from .errors import DomainError
from .jump import BLOCK_EVENTS, DEFAULT_ABSORB_TOL, make_rng
from .profiles import profile_from_source
from .slitmap import canonical_angle, check_capacity, gamma_tilde, slit_length_from_capacity, slit_map_rotated

RED, BLUE = "red", "blue"


@dataclass(frozen=True)
class Particle:
    theta: float
    capacity: float
    colour: str
    index: int
    arrival_time: float


@dataclass
class ClusterState:
    """Particles in arrival order plus the interface images.

    ``theta``, ``capacity``, ``red`` and ``times`` hold one entry per
    particle; ``x_trace[k]`` is ``z1 - z0`` after particle ``k + 1``.
    """

    c: float
    profile_source: dict
    seed: object
    theta: np.ndarray = field(default_factory=lambda: np.empty(0))
    capacity: np.ndarray = field(default_factory=lambda: np.empty(0))
    red: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool))
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    x_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    z0: float = 0.0
    z1: float = 1.0
    t: float = 0.0
    absorbed: bool = False
    absorb_tol: float = DEFAULT_ABSORB_TOL

    @property
    def n(self):
        return len(self.theta)

    @property
    def particles(self):
        return [
            Particle(float(th), float(cap), RED if r else BLUE, k + 1, float(tk))
            for k, (th, cap, r, tk) in enumerate(zip(self.theta, self.capacity, self.red, self.times))
        ]

    def to_dict(self):
        return {
            "c": self.c,
            "profile": self.profile_source,
            "seed": self.seed if not isinstance(self.seed, np.random.SeedSequence) else None,
            "z0": self.z0,
            "z1": self.z1,
            "t": self.t,
            "absorbed": self.absorbed,
            "absorb_tol": self.absorb_tol,
            "theta": self.theta.tolist(),
            "capacity": self.capacity.tolist(),
            "red": [bool(r) for r in self.red],
            "times": self.times.tolist(),
            "x_trace": self.x_trace.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            c=d["c"], profile_source=d["profile"], seed=d.get("seed"),
            theta=np.array(d["theta"], dtype=float), capacity=np.array(d["capacity"], dtype=float),
            red=np.array(d["red"], dtype=bool), times=np.array(d["times"], dtype=float),
            x_trace=np.array(d["x_trace"], dtype=float), z0=d["z0"], z1=d["z1"], t=d["t"],
            absorbed=d["absorbed"], absorb_tol=d.get("absorb_tol", DEFAULT_ABSORB_TOL),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @property
    def profile(self):
        return profile_from_source(self.profile_source)


def _size_fn(profile, c):
    """Per-state sizes, identical to what the event loop evaluates."""
    if profile.native:
        tilt = _pykernel.section4_tilt(c) if profile.kernel_kind == _pykernel.KIND_SECTION4 else 0.0
        kind, params = profile.kernel_kind, tuple(profile.kernel_params)
        return lambda x: _pykernel.sizes(kind, params, x, c, tilt)
    return lambda x: tuple(float(v) for v in profile.sizes(x, c))


def grow(profile, c, n_particles=None, t_max=None, seed=None, absorb_tol=DEFAULT_ABSORB_TOL):
    """Grow a cluster from the unit disk.

    Stops after ``n_particles`` arrivals or at time ``t_max`` (exactly one of
    the two must be given).  After absorption the interface is frozen and
    every later particle takes the winning colour.
    """
    c = check_capacity(c)
    if (n_particles is None) == (t_max is None):
        raise ValueError("give exactly one of n_particles and t_max")
    if n_particles is not None and n_particles < 0:
        raise ValueError("n_particles must be non-negative")
    limit_n = math.inf if n_particles is None else int(n_particles)
    limit_t = math.inf if t_max is None else float(t_max)
    rate = profile.r(c)
    sizes = _size_fn(profile, c)
    gt = kernel.gt_em1
    rng = make_rng(seed)
    thetas, caps, reds, times, xs = [], [], [], [], []
    z0, z1, t = 0.0, 1.0, 0.0
    absorbed = False
    hi = 2.0 - absorb_tol
    done = limit_n == 0 or limit_t <= 0.0
    while not done:
        u = rng.random(2 * BLOCK_EVENTS)
        for i in range(BLOCK_EVENTS):
            tn = t + (-math.log1p(-u[2 * i]) / rate)
            if tn > limit_t:
                done = True
                break
            th = 2.0 * u[2 * i + 1]
            x = z1 - z0
            sp, sm = sizes(min(max(x, absorb_tol), hi))
            red = 0.0 < th < x
            cap = c * (sp if red else sm)
            if not cap > 0.0:
                raise DomainError(f"profile gave non-positive size at x={x}")
            thetas.append(z1 - th)
            if not absorbed:
                em1 = math.expm1(cap)
                z1 = z1 + gt(em1, th)
                z0 = z0 + gt(em1, th - x)
                gap = z1 - z0
                if gap <= absorb_tol:
                    z1, absorbed = z0, True
                elif gap >= hi:
                    z1, absorbed = z0 + 2.0, True
            t = tn
            caps.append(cap)
            reds.append(red)
            times.append(t)
            xs.append(min(max(z1 - z0, 0.0), 2.0))
            if len(thetas) >= limit_n:
                done = True
                break
    theta_arr = canonical_angle(np.array(thetas, dtype=float)) if thetas else np.empty(0)
    state = ClusterState(
        c=c, profile_source=profile.source or {"name": profile.name}, seed=seed,
        theta=theta_arr, capacity=np.array(caps, dtype=float), red=np.array(reds, dtype=bool),
        times=np.array(times, dtype=float), x_trace=np.array(xs, dtype=float),
        z0=z0, z1=z1, t=t, absorbed=absorbed, absorb_tol=absorb_tol,
    )
    return state


def harmonic_state(cluster):
    """Twice the red harmonic measure, ``z1 - z0`` clamped to ``[0, 2]``."""
    if cluster.n == 0:
        return 1.0
    return float(min(max(cluster.x_trace[-1], 0.0), 2.0))


def boundary_flow(cluster, x, upto_n=None):
    """Images ``Z_t(x)`` of boundary angles under the composed boundary maps (oldest first)."""
    x = np.array(x, dtype=float)
    n = cluster.n if upto_n is None else int(upto_n)
    for k in range(n):
        x = x + gamma_tilde(cluster.capacity[k], x - cluster.theta[k])
    return x


def evaluate_map(cluster, upto_n, z):
    """``Phi_n(z) = f_1 o ... o f_n (z)``: newest particle map applied first."""
    n = int(upto_n)
    if n < 0 or n > cluster.n:
        raise ValueError(f"upto_n must lie in [0, {cluster.n}]")
    w = np.asarray(z, dtype=complex)
    if np.any(np.abs(w) < 1.0 - 1e-9):
        raise DomainError("evaluate_map needs |z| >= 1")
    for k in range(n - 1, -1, -1):
        w = slit_map_rotated(cluster.capacity[k], cluster.theta[k], w)
    return w


def leading_coefficient(cluster, radii=(1e4, 2e4, 4e4)):
    """Richardson estimate of ``log(Phi(R)/R)`` as ``R -> inf``; equals the summed capacity."""
    vals = [math.log(abs(evaluate_map(cluster, cluster.n, R)) / R) for R in radii]
    r = radii[1] / radii[0]
    e1 = (r * vals[1] - vals[0]) / (r - 1.0)
    e2 = (r * vals[2] - vals[1]) / (r - 1.0)
    return (r * r * e2 - e1) / (r * r - 1.0)


@dataclass
class ClusterGeometry:
    """Coloured polylines: one per particle plus the two base arcs of the unit circle."""

    polylines: list
    colours: list
    particle_index: list

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["particle_index", "colour", "point_index", "re", "im"])
            for idx, col, pts in zip(self.particle_index, self.colours, self.polylines):
                for j, p in enumerate(pts):
                    w.writerow([idx, col, j, repr(float(p.real)), repr(float(p.imag))])

    def to_svg(self, stroke_width=None, width=800, bounds=None):
        colour_map = {RED: svg.RED, BLUE: svg.BLUE}
        if bounds is None:
            bounds = svg.bounds_of(self.polylines)
        paths = [(pts, colour_map[col]) for pts, col in zip(self.polylines, self.colours)]
        return svg.document(paths, bounds, width=width, stroke_width=stroke_width)


def lambda_grid(d, samples):
    """Radii ``1 + d*q`` with ``q`` geometric toward the slit base, including ``q = 0`` and ``q = 1``."""
    if samples < 2:
        raise ValueError("need at least two samples per particle")
    q = np.concatenate(([0.0], np.geomspace(1e-4, 1.0, samples - 1)))
    return 1.0 + d * q


def render(cluster, samples_per_particle=12, circle_samples=256):
    """Images of every particle under the map in force when it arrived.

    Points of particle ``k`` are ``Phi_{k-1}(lambda e^{i pi theta_k})``.
    Points are stored in arrival order, so the maps ``f_j`` only ever act on
    a suffix of the point array; total work is quadratic in the particle
    count.
    """
    n = cluster.n
    s = int(samples_per_particle)
    u = np.linspace(0.0, 1.0, circle_samples // 2 + 1)
    polylines = [np.exp(1j * math.pi * u), np.exp(1j * math.pi * (1.0 + u))]
    colours = [RED, BLUE]
    index = [0, 0]
    if n:
        d = np.array([slit_length_from_capacity(ck) for ck in cluster.capacity])
        lam = 1.0 + d[:, None] * (lambda_grid(1.0, s) - 1.0)[None, :]
        pts = (lam * np.exp(1j * math.pi * cluster.theta)[:, None]).ravel()
        for j in range(n - 2, -1, -1):
            # f_{j+1} acts on particles j+2..n (zero-based rows j+1..n-1)
            tail = pts[(j + 1) * s:]
            pts[(j + 1) * s:] = slit_map_rotated(cluster.capacity[j], cluster.theta[j], tail)
        pts = pts.reshape(n, s)
        for k in range(n):
            polylines.append(pts[k])
            colours.append(RED if cluster.red[k] else BLUE)
            index.append(k + 1)
    return ClusterGeometry(polylines, colours, index)
