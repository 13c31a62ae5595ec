"""Size profiles: how particle capacity depends on colour and red harmonic measure.

A profile carries the capacity multipliers ``s_plus(x, c)`` (red particles)
and ``s_minus(x, c)`` (blue particles), their small-``c`` limits, an optional
drift profile ``h`` and the arrival-rate schedule ``r(c)``.

Built-in profiles also carry an integer ``kernel_kind`` and numeric
``kernel_params`` so the compiled event loop can evaluate them without
calling back into Python.  Anything built from expressions uses
``KIND_CALLBACK`` and runs on the Python event loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, SpecificationError
from .expr import Expression

RATE_DIFFUSIVE = "diffusive"  # r(c) = c^{-3/2}
RATE_ODE = "ode"  # r(c) = 1 / (c log(1/c))
RATE_CUSTOM = "custom"
RATE_SCHEDULES = (RATE_DIFFUSIVE, RATE_ODE, RATE_CUSTOM)

KIND_CALLBACK = -1
KIND_CONSTANT = 0  # s+ = p0, s- = p1
KIND_SECTION4 = 1  # s+- = p0 * ((3x(2-x)/16)^(2/3) + sqrt(c)/log(1/c) * (2-x | x))
KIND_LINEAR = 2  # s+ = p0 + p1 x, s- = p2 + p3 x

PI2 = math.pi**2


def rate_for(schedule, c, custom=None):
    if schedule == RATE_DIFFUSIVE:
        return c**-1.5
    if schedule == RATE_ODE:
        if c >= 1.0:
            raise DomainError("the (c log 1/c)^-1 schedule needs c < 1")
        return 1.0 / (c * math.log(1.0 / c))
    if schedule == RATE_CUSTOM:
        if custom is None:
            raise SpecificationError("custom rate schedule without a rate function")
        return float(custom(c))
    raise SpecificationError(f"unknown rate schedule {schedule!r}")


@dataclass(frozen=True)
class SizeProfile:
    name: str
    s_plus: Callable
    s_minus: Callable
    rate: str = RATE_DIFFUSIVE
    s_plus_limit: Optional[Callable] = None
    s_minus_limit: Optional[Callable] = None
    h: Optional[Callable] = None
    rate_fn: Optional[Callable] = None
    kernel_kind: int = KIND_CALLBACK
    kernel_params: tuple = ()
    source: dict = field(default_factory=dict, compare=False)

    def r(self, c):
        return rate_for(self.rate, c, self.rate_fn)

    def sizes(self, x, c):
        return self.s_plus(x, c), self.s_minus(x, c)

    @property
    def native(self):
        return self.kernel_kind != KIND_CALLBACK

    def validate(self, c, grid=None, lipschitz_bound=1e6):
        """Spot-check positivity, Lipschitz behaviour and declared limits.

        Raises :class:`SpecificationError` on the first violation.
        """
        if grid is None:
            grid = np.linspace(0.01, 1.99, 199)
        grid = np.asarray(grid, dtype=float)
        sp, sm = self.sizes(grid, c)
        sp = np.broadcast_to(sp, grid.shape)
        sm = np.broadcast_to(sm, grid.shape)
        if not (np.all(np.isfinite(sp)) and np.all(np.isfinite(sm))):
            raise SpecificationError(f"{self.name}: non-finite sizes at c={c}")
        if np.any(sp <= 0.0) or np.any(sm <= 0.0):
            raise SpecificationError(f"{self.name}: sizes must be positive on (0, 2)")
        dx = np.diff(grid)
        for label, vals in (("s_plus", sp), ("s_minus", sm)):
            slopes = np.abs(np.diff(vals)) / dx
            if np.max(slopes) > lipschitz_bound:
                raise SpecificationError(f"{self.name}: {label} looks non-Lipschitz (slope {np.max(slopes):.3g})")
        return True

    def limit_gap(self, c, grid=None):
        """Sup-grid distance between ``s+-(x, c)`` and the declared limits."""
        if self.s_plus_limit is None or self.s_minus_limit is None:
            raise SpecificationError(f"{self.name}: no limit functions declared")
        if grid is None:
            grid = np.linspace(0.01, 1.99, 199)
        grid = np.asarray(grid, dtype=float)
        sp, sm = self.sizes(grid, c)
        gp = np.abs(sp - self.s_plus_limit(grid))
        gm = np.abs(sm - self.s_minus_limit(grid))
        return float(max(np.max(gp), np.max(gm)))


def _const(value):
    def fn(x, c=None):
        return np.full(np.shape(x), float(value))[()] if np.ndim(x) else float(value)

    return fn


def hl0(size=1.0):
    """Plain HL(0): both colours use the same constant capacity multiplier."""
    s = _const(size)
    return SizeProfile(
        name="hl0",
        s_plus=s,
        s_minus=s,
        rate=RATE_DIFFUSIVE,
        s_plus_limit=s,
        s_minus_limit=s,
        h=None,
        kernel_kind=KIND_CONSTANT,
        kernel_params=(float(size), float(size)),
        source={"builtin": "hl0"},
    )


def _s4_base(x):
    x = np.asarray(x, dtype=float)
    out = PI2 * np.power(3.0 * x * (2.0 - x) / 16.0, 2.0 / 3.0)
    return out[()] if out.ndim == 0 else out


def _s4_tilt(c):
    if c >= 1.0:
        raise DomainError("the section4 profile needs c < 1")
    return math.sqrt(c) / math.log(1.0 / c)


def _s4_plus(x, c):
    return _s4_base(x) + PI2 * _s4_tilt(c) * (2.0 - np.asarray(x, dtype=float))


def _s4_minus(x, c):
    return _s4_base(x) + PI2 * _s4_tilt(c) * np.asarray(x, dtype=float)


def _s4_h(x):
    return 2.0 * PI2 * (1.0 - np.asarray(x, dtype=float))


def section4():
    """The coexistence example: limit SDE ``dX = 2(1-X)dt + sqrt(2X(2-X)) dB``."""
    return SizeProfile(
        name="section4",
        s_plus=_s4_plus,
        s_minus=_s4_minus,
        rate=RATE_DIFFUSIVE,
        s_plus_limit=_s4_base,
        s_minus_limit=_s4_base,
        h=_s4_h,
        kernel_kind=KIND_SECTION4,
        kernel_params=(PI2,),
        source={"builtin": "section4"},
    )


def ode_fixed_point():
    """``s+ = 2 - x``, ``s- = x`` on the ballistic schedule; stable fixed point at 1."""

    def sp(x, c=None):
        return 2.0 - np.asarray(x, dtype=float)

    def sm(x, c=None):
        return np.asarray(x, dtype=float) + 0.0

    return SizeProfile(
        name="ode-fixed-point",
        s_plus=sp,
        s_minus=sm,
        rate=RATE_ODE,
        s_plus_limit=sp,
        s_minus_limit=sm,
        h=None,
        kernel_kind=KIND_LINEAR,
        kernel_params=(2.0, -1.0, 0.0, 1.0),
        source={"builtin": "ode-fixed-point"},
    )


BUILTINS = {
    "hl0": hl0,
    "section4": section4,
    "ode-fixed-point": ode_fixed_point,
}


def builtin_profile(name):
    try:
        return BUILTINS[name]()
    except KeyError:
        raise SpecificationError(
            f"unknown profile {name!r}; choose one of {sorted(BUILTINS)}"
        ) from None


def from_expressions(s_plus, s_minus, rate=RATE_DIFFUSIVE, s_plus_limit=None,
                     s_minus_limit=None, h=None, rate_expr=None, name="custom"):
    """Build a profile from expression strings in ``x`` and ``c``.

    Limit functions and ``h`` are expressions in ``x`` alone.  ``rate_expr``
    (an expression in ``c``) is required when ``rate == "custom"``.
    """
    if rate not in RATE_SCHEDULES:
        raise SpecificationError(f"unknown rate schedule {rate!r}")
    ep = Expression(s_plus, ("x", "c"))
    em = Expression(s_minus, ("x", "c"))

    def wrap2(e):
        return lambda x, c: e(x=x, c=c)

    def wrap1(text):
        if text is None:
            return None
        e = Expression(text, ("x",))
        return lambda x: e(x=x)

    rate_fn = None
    if rate == RATE_CUSTOM:
        if rate_expr is None:
            raise SpecificationError("custom rate schedule needs a rate expression in c")
        er = Expression(rate_expr, ("c",))
        rate_fn = lambda c: float(er(c=c))  # noqa: E731
    source = {"name": name, "s_plus": s_plus, "s_minus": s_minus, "rate": rate}
    for key, val in (("s_plus_limit", s_plus_limit), ("s_minus_limit", s_minus_limit),
                     ("h", h), ("rate_expr", rate_expr)):
        if val is not None:
            source[key] = val
    return SizeProfile(
        name=name,
        s_plus=wrap2(ep),
        s_minus=wrap2(em),
        rate=rate,
        s_plus_limit=wrap1(s_plus_limit),
        s_minus_limit=wrap1(s_minus_limit),
        h=wrap1(h),
        rate_fn=rate_fn,
        kernel_kind=KIND_CALLBACK,
        source=source,
    )


def profile_from_source(source):
    """Inverse of ``SizeProfile.source``; used when reloading saved runs."""
    if "builtin" in source:
        return builtin_profile(source["builtin"])
    keys = ("s_plus_limit", "s_minus_limit", "h", "rate_expr")
    return from_expressions(
        source["s_plus"], source["s_minus"], source.get("rate", RATE_DIFFUSIVE),
        name=source.get("name", "custom"), **{k: source.get(k) for k in keys},
    )
