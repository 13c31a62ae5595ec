# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loop.  Arithmetic mirrors ``_pykernel.py`` line by line."""
from libc.math cimport tan, atan, sqrt, floor, expm1, log1p, log, pow, M_PI

cdef double HALF_PI = 0.5 * M_PI
cdef double TWO_OVER_PI = 2.0 / M_PI

cdef enum:
    _EXHAUSTED = 0
    _HORIZON = 1
    _ABSORBED = 2
    KIND_CONSTANT = 0
    KIND_SECTION4 = 1
    KIND_LINEAR = 2

EXHAUSTED = _EXHAUSTED
HORIZON = _HORIZON
ABSORBED = _ABSORBED
BACKEND = "cython"


cdef inline double _gt(double em1, double x) noexcept nogil:
    cdef double y, sign, t, tt1, q, v, w, ww1, p
    y = x - 2.0 * floor((x + 1.0) / 2.0)
    if y >= 1.0:
        y -= 2.0
    sign = 1.0
    if y < 0.0:
        y = -y
        sign = -1.0
    if y <= 0.5:
        t = tan(HALF_PI * y)
        tt1 = 1.0 + t * t
        q = sqrt(em1 * tt1 + t * t)
        v = atan(em1 * tt1 / ((q + t) * (1.0 + q * t)))
    else:
        w = tan(HALF_PI * (1.0 - y))
        ww1 = 1.0 + w * w
        p = sqrt(1.0 + em1 * ww1)
        v = atan(w * em1 * ww1 / ((p + 1.0) * (p + w * w)))
    return sign * TWO_OVER_PI * v


cpdef double gt_em1(double em1, double x):
    return _gt(em1, x)


cpdef double gamma_tilde(double c, double x):
    return _gt(expm1(c), x)


cdef inline void _sizes(int kind, const double* params, double x, double tilt,
                        double* sp, double* sm) noexcept nogil:
    cdef double base
    if kind == KIND_CONSTANT:
        sp[0] = params[0]
        sm[0] = params[1]
    elif kind == KIND_SECTION4:
        base = pow(3.0 * x * (2.0 - x) / 16.0, 2.0 / 3.0)
        sp[0] = params[0] * (base + tilt * (2.0 - x))
        sm[0] = params[0] * (base + tilt * x)
    else:
        sp[0] = params[0] + params[1] * x
        sm[0] = params[2] + params[3] * x


def run_events(const double[::1] u, double x, double t, double t_max, int kind,
               params, double c, double rate, double tol,
               double[::1] ev_t, double[::1] ev_x, callback=None):
    """See ``_pykernel.run_events``; ``kind`` must be a native profile."""
    if kind < KIND_CONSTANT or kind > KIND_LINEAR:
        raise ValueError(f"kind {kind} is not a native profile")
    cdef double p[4]
    cdef Py_ssize_t k
    for k in range(4):
        p[k] = params[k] if k < len(params) else 0.0
    cdef double tilt = 0.0
    if kind == KIND_SECTION4 and 0.0 < c < 1.0:
        tilt = sqrt(c) / log(1.0 / c)
    cdef Py_ssize_t npairs = u.shape[0] // 2
    cdef Py_ssize_t i = 0, n = 0
    cdef double tn, th, sp = 0.0, sm = 0.0, cap, em1, xn
    cdef double two_minus_tol = 2.0 - tol
    cdef int status = _EXHAUSTED
    with nogil:
        while i < npairs:
            tn = t + (-log1p(-u[2 * i]) / rate)
            if tn > t_max:
                i += 1
                status = _HORIZON
                break
            th = 2.0 * u[2 * i + 1]
            _sizes(kind, p, x, tilt, &sp, &sm)
            if 0.0 < th and th < x:
                cap = c * sp
            else:
                cap = c * sm
            em1 = expm1(cap)
            xn = x + _gt(em1, th) - _gt(em1, th - x)
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
                status = _ABSORBED
                break
    return x, t, i, n, status
