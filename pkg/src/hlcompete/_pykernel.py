"""Pure-Python event loop; reference implementation and fallback backend.

Mirrors ``_ckernel.pyx`` operation for operation so both backends produce
bit-identical trajectories.  Keep the two files in step.

Randomness contract: the caller hands in a block of uniforms ``u`` drawn from
one stream.  Event ``i`` consumes ``u[2i]`` for its exponential waiting time
and ``u[2i+1]`` for the rotated attachment angle ``theta' = 2 u[2i+1]``; the
colour is red iff ``0 < theta' < x``.
"""
import math

HALF_PI = 0.5 * math.pi
TWO_OVER_PI = 2.0 / math.pi
PI2 = math.pi * math.pi

EXHAUSTED = 0
HORIZON = 1
ABSORBED = 2

KIND_CALLBACK = -1
KIND_CONSTANT = 0
KIND_SECTION4 = 1
KIND_LINEAR = 2

BACKEND = "python"


def gt_em1(em1, x):
    """``gamma_c(x) - x`` given ``em1 = expm1(c)``; scalar."""
    y = x - 2.0 * math.floor((x + 1.0) / 2.0)
    if y >= 1.0:
        y -= 2.0
    sign = 1.0
    if y < 0.0:
        y = -y
        sign = -1.0
    if y <= 0.5:
        t = math.tan(HALF_PI * y)
        tt1 = 1.0 + t * t
        q = math.sqrt(em1 * tt1 + t * t)
        v = math.atan(em1 * tt1 / ((q + t) * (1.0 + q * t)))
    else:
        u = math.tan(HALF_PI * (1.0 - y))
        uu1 = 1.0 + u * u
        p = math.sqrt(1.0 + em1 * uu1)
        v = math.atan(u * em1 * uu1 / ((p + 1.0) * (p + u * u)))
    return sign * TWO_OVER_PI * v


def gamma_tilde(c, x):
    return gt_em1(math.expm1(c), x)


def sizes(kind, params, x, c, tilt):
    """Native profile evaluation; ``tilt`` is a per-``c`` constant (section4 only)."""
    if kind == KIND_CONSTANT:
        return params[0], params[1]
    if kind == KIND_SECTION4:
        base = math.pow(3.0 * x * (2.0 - x) / 16.0, 2.0 / 3.0)
        return params[0] * (base + tilt * (2.0 - x)), params[0] * (base + tilt * x)
    if kind == KIND_LINEAR:
        return params[0] + params[1] * x, params[2] + params[3] * x
    raise ValueError(f"kind {kind} is not a native profile")


def section4_tilt(c):
    return math.sqrt(c) / math.log(1.0 / c) if 0.0 < c < 1.0 else 0.0


def run_events(u, x, t, t_max, kind, params, c, rate, tol, ev_t, ev_x, callback=None):
    """Consume uniforms pairwise until the block runs out, the horizon passes
    or the state is absorbed.

    Returns ``(x, t, pairs_used, n_events, status)``; event times and post-jump
    states are written to ``ev_t[:n_events]`` and ``ev_x[:n_events]``.
    ``callback(x, c) -> (s_plus, s_minus)`` is used when ``kind`` is
    ``KIND_CALLBACK``.
    """
    npairs = len(u) // 2
    tilt = section4_tilt(c) if kind == KIND_SECTION4 else 0.0
    two_minus_tol = 2.0 - tol
    n = 0
    i = 0
    while i < npairs:
        tn = t + (-math.log1p(-u[2 * i]) / rate)
        if tn > t_max:
            return x, t, i + 1, n, HORIZON
        th = 2.0 * u[2 * i + 1]
        if kind == KIND_CALLBACK:
            sp, sm = callback(x, c)
        else:
            sp, sm = sizes(kind, params, x, c, tilt)
        if 0.0 < th < x:
            cap = c * sp
        else:
            cap = c * sm
        em1 = math.expm1(cap)
        xn = x + gt_em1(em1, th) - gt_em1(em1, th - x)
        if xn <= tol:
            xn = 0.0
        elif xn >= two_minus_tol:
            xn = 2.0
        t = tn
        x = xn
        ev_t[n] = t
        ev_x[n] = x
        n += 1
        i += 1
        if x == 0.0 or x == 2.0:
            return x, t, i, n, ABSORBED
    return x, t, i, n, EXHAUSTED
