"""Single-particle conformal maps for the Hastings-Levitov family.

Angles are measured in half-turns throughout: ``x`` stands for the boundary
point ``exp(i*pi*x)`` and the circle has total length 2.

The slit map ``f_c`` sends the exterior disk onto the exterior disk minus the
radial slit ``(1, 1 + d]``.  It is built from the Joukowski-type map
``g(z) = (z + 1)**2 / z`` which flattens the unit circle onto ``[0, 4]``:

    f_c = g^{-1}( e^c * g(z) )

The factor ``e^c`` stretches ``[0, 4]`` to ``[0, 4 e^c]`` and the excess
``(4, 4 e^c]`` becomes the slit.  ``g^{-1}`` is two-valued; the branch with
``|f| >= 1`` lying in the same half-plane as ``z`` is selected explicitly,
which also gives the correct one-sided limit on the unit circle.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

HALF_PI = 0.5 * math.pi
TWO_OVER_PI = 2.0 / math.pi
_BOUNDARY_SLACK = 1e-9


def check_capacity(c):
    c = float(c)
    if not math.isfinite(c) or c <= 0.0:
        raise DomainError(f"capacity must be a positive finite number, got {c!r}")
    return c


def canonical_angle(x):
    """Reduce half-turn angles to the representative in ``[-1, 1)``."""
    x = np.asarray(x, dtype=float)
    y = x - 2.0 * np.floor((x + 1.0) / 2.0)
    # floor can land exactly on the upper end for x just below an odd integer
    y = np.where(y >= 1.0, y - 2.0, y)
    return y[()] if y.ndim == 0 else y


def slit_length_from_capacity(c):
    """Positive root ``d`` of ``e^c = 1 + d^2 / (4 (1 + d))``."""
    c = check_capacity(c)
    em1 = math.expm1(c)
    return 2.0 * em1 + 2.0 * math.sqrt(em1 * em1 + em1)


def capacity_from_slit_length(d):
    d = float(d)
    if not math.isfinite(d) or d <= 0.0:
        raise DomainError(f"slit length must be a positive finite number, got {d!r}")
    return math.log1p(d * d / (4.0 * (1.0 + d)))


def capacity_residual(c, d):
    """``e^c - 1 - d^2/(4(1+d))``; vectorised, no validation."""
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    return np.expm1(c) - d * d / (4.0 * (1.0 + d))


def slit_lengths(c):
    """Vectorised :func:`slit_length_from_capacity` for arrays of capacities."""
    c = np.asarray(c, dtype=float)
    if np.any(~np.isfinite(c)) or np.any(c <= 0.0):
        raise DomainError("capacities must be positive and finite")
    em1 = np.expm1(c)
    return 2.0 * em1 + 2.0 * np.sqrt(em1 * em1 + em1)


def gamma_tilde(c, x):
    """Boundary displacement ``gamma_c(x) - x``.

    Periodic with period 2, odd on ``(-1, 1) \\ {0}`` and right-continuous at
    even integers.  Evaluated without cancellation: both branches are the
    ``atan`` subtraction formula applied to the closed form, with the
    argument rewritten in ``tan(pi x/2)`` for ``|x| <= 1/2`` and in
    ``cot(pi x/2)`` beyond, so nothing overflows near ``x = +-1``.
    """
    c = np.asarray(c, dtype=float)
    if np.any(~np.isfinite(c)) or np.any(c <= 0.0):
        raise DomainError("capacity must be positive and finite")
    y = canonical_angle(x)
    sign = np.where(y < 0.0, -1.0, 1.0)
    ay = np.abs(y)
    em1 = np.expm1(c)
    inner = ay <= 0.5

    t = np.tan(HALF_PI * np.where(inner, ay, 0.0))
    tt1 = 1.0 + t * t
    q = np.sqrt(em1 * tt1 + t * t)
    v_in = np.arctan(em1 * tt1 / ((q + t) * (1.0 + q * t)))

    u = np.tan(HALF_PI * np.where(inner, 0.0, 1.0 - ay))
    uu1 = 1.0 + u * u
    p = np.sqrt(1.0 + em1 * uu1)
    v_out = np.arctan(u * em1 * uu1 / ((p + 1.0) * (p + u * u)))

    out = sign * TWO_OVER_PI * np.where(inner, v_in, v_out)
    return out[()] if out.ndim == 0 else out


def gamma(c, x):
    """Boundary angle map ``gamma_c`` extended by ``gamma(x + 2n) = 2n + gamma(x)``."""
    x = np.asarray(x, dtype=float)
    out = x + gamma_tilde(c, x)
    return out[()] if np.ndim(out) == 0 else out


def gamma_rotated(c, theta, x):
    return theta + gamma(c, np.asarray(x, dtype=float) - theta)


def gamma_taylor(c, x):
    """Leading-order small-capacity approximation of ``gamma_c`` on ``|x| < 1``.

    Two regimes split at ``|x| = sqrt(c) log(1/c)``: a hyperbola near the
    attachment point and a cotangent correction away from it.  Only meant as
    a test oracle for :func:`gamma`.
    """
    c = check_capacity(c)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1.0):
        raise DomainError("gamma_taylor is defined for |x| < 1 only")
    split = math.sqrt(c) * math.log(1.0 / c)
    sgn = np.where(x < 0.0, -1.0, 1.0)
    near = sgn * np.sqrt(x * x + 4.0 * c / math.pi**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        far = x + (c / math.pi) / np.tan(HALF_PI * x)
    out = np.where(np.abs(x) <= split, near, far)
    return out[()] if out.ndim == 0 else out


def _as_complex(z):
    return np.asarray(z, dtype=complex)


def slit_map(c, z):
    """Evaluate ``f_c`` on points of the closed exterior disk.

    Points on the unit circle are allowed and receive the limit from
    outside.  ``inf`` maps to ``inf``.
    """
    c = check_capacity(c)
    z = _as_complex(z)
    at_inf = np.isinf(z.real) | np.isinf(z.imag)
    modulus = np.abs(np.where(at_inf, 2.0, z))
    if np.any(modulus < 1.0 - _BOUNDARY_SLACK):
        raise DomainError("slit_map is defined for |z| >= 1 only")

    lower = z.imag < 0.0
    zz = np.where(at_inf, 2.0, np.where(lower, np.conj(z), z))
    w = math.exp(c) * (zz + 1.0) ** 2 / zz
    opposite = w == 0.0
    w_safe = np.where(opposite, 1.0, w)
    root = 0.5 * w_safe * (1.0 + np.sqrt(1.0 - 4.0 / w_safe)) - 1.0
    other = 1.0 / root
    # the two roots are r and 1/r; the image lies outside the disk, so take the
    # larger modulus unless both sit on the circle (then r, 1/r are conjugates
    # and the image is the one in the upper half-plane)
    log_mod = np.log(np.abs(root))
    on_circle = np.abs(log_mod) <= 1e-8
    take_root = np.where(on_circle, root.imag >= other.imag, log_mod > 0.0)
    out = np.where(take_root, root, other)
    out = np.where(opposite, -1.0 + 0.0j, out)
    out = np.where(lower, np.conj(out), out)
    out = np.where(at_inf, complex(math.inf, 0.0), out)
    return out[()] if out.ndim == 0 else out


def slit_map_rotated(c, theta, z):
    """``f_c^theta(z) = e^{i pi theta} f_c(e^{-i pi theta} z)``: slit attached at angle theta."""
    z = _as_complex(z)
    rot = np.exp(1j * math.pi * float(theta))
    at_inf = np.isinf(z.real) | np.isinf(z.imag)
    inner = slit_map(c, np.where(at_inf, complex(math.inf, 0.0), z / rot))
    out = np.where(at_inf, complex(math.inf, 0.0), rot * inner)
    return out[()] if out.ndim == 0 else out
