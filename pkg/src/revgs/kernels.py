"""Backend selection for the hot kernels.

The compiled extension ``revgs._kernels`` is used when it imports; otherwise
the numpy twins in ``revgs._fallback`` are used.  Setting the environment
variable ``REVGS_PURE_PYTHON=1`` forces the fallback.  :func:`use_backend`
switches at runtime (used by the backend-parity tests and the benchmark).
"""
import logging
import os

import numpy as np

from . import _fallback

log = logging.getLogger(__name__)

_compiled = None
if not os.environ.get("REVGS_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        log.debug("compiled kernels unavailable, using numpy fallback")

_backend = _compiled if _compiled is not None else _fallback


def backend_name() -> str:
    return _backend.NAME


def available_backends() -> list[str]:
    names = ["numpy"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def use_backend(name: str) -> None:
    global _backend
    if name == "numpy":
        _backend = _fallback
    elif name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available in this build")
        _backend = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


def _as3d(f):
    f = np.ascontiguousarray(f, dtype=np.float64)
    return f.reshape((1,) * (3 - f.ndim) + f.shape)


def _pad(weights, ndim):
    return (0.0,) * (3 - ndim) + tuple(float(w) for w in weights)


def laplacian(f, inv_h2):
    """Periodic 3-point Laplacian; ``inv_h2`` holds ``1/h**2`` per axis."""
    out = _backend.laplacian3(_as3d(f), _pad(inv_h2, f.ndim))
    return np.asarray(out).reshape(f.shape)


def gradient_sq(f, inv_h, backward=False):
    """Sum over axes of squared one-sided periodic differences."""
    out = _backend.gradient_sq3(_as3d(f), _pad(inv_h, f.ndim), backward)
    return np.asarray(out).reshape(f.shape)


def _block(c):
    c = np.ascontiguousarray(c, dtype=np.float64)
    return c.reshape(4, -1)


def reaction_tendency(c, rates, feed=-1.0):
    out = _backend.reaction_tendency(_block(c), tuple(rates), float(feed))
    return np.asarray(out).reshape(c.shape)


def reaction_rk4(c, rates, dt, floor, feed=-1.0):
    """RK4 step of the pointwise kinetics; returns ``(new, clamps, bad_node)``."""
    new, clamps, bad = _backend.reaction_rk4(_block(c), tuple(rates), float(feed), float(dt), float(floor))
    return np.asarray(new).reshape(c.shape), int(clamps), int(bad)


def clamp(c, floor):
    """Raise entries below ``floor`` to ``floor`` in place; returns the count."""
    if not c.flags.c_contiguous:
        raise ValueError("clamp needs a C-contiguous array")
    return int(_backend.clamp(c.reshape(c.shape[0], -1), float(floor)))
