"""Backend selection for the event loop.

The compiled extension is used when it imports; otherwise the pure-Python
loop takes over.  Set ``HLCOMPETE_BACKEND=python`` to force the fallback.
Profiles without a native encoding always run on the Python loop.
"""
import os

from . import _pykernel

_requested = os.environ.get("HLCOMPETE_BACKEND", "auto").lower()
_compiled = None
if _requested != "python":
    try:
        from . import _ckernel as _compiled
    except ImportError:
        if _requested == "cython":
            raise
        _compiled = None

active = _compiled if _compiled is not None else _pykernel
BACKEND = active.BACKEND
EXHAUSTED, HORIZON, ABSORBED = _pykernel.EXHAUSTED, _pykernel.HORIZON, _pykernel.ABSORBED


def compiled_available():
    return _compiled is not None


def backend_module(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None for the active one)."""
    if name is None:
        return active
    if name == "python":
        return _pykernel
    if name == "cython":
        if _compiled is None:
            raise ImportError("the compiled kernel is not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def run_events(profile, u, x, t, t_max, c, rate, tol, ev_t, ev_x, backend=None):
    mod = backend_module(backend)
    if not profile.native:
        mod = _pykernel
    return mod.run_events(
        u, x, t, t_max, profile.kernel_kind, tuple(profile.kernel_params), c, rate, tol,
        ev_t, ev_x, callback=(lambda xx, cc: profile.sizes(xx, cc)) if not profile.native else None,
    )


gamma_tilde_scalar = active.gamma_tilde
gt_em1 = active.gt_em1
