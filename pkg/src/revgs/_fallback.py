"""Pure numpy versions of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and the same floating-point evaluation order, so the two backends agree to
the last bit on x86-64 (no FMA contraction) and to roundoff elsewhere.

Lattice arrays arrive as 3-D ``(n0, n1, n2)`` views; lower-dimensional grids
are padded with leading unit axes whose inverse spacing is 0.
"""
import numpy as np

NAME = "numpy"


def laplacian3(f, ih2):
    out = np.zeros_like(f)
    for axis in range(3):
        if ih2[axis] == 0.0:
            continue
        out += (np.roll(f, -1, axis) - 2.0 * f + np.roll(f, 1, axis)) * ih2[axis]
    return out


def gradient_sq3(f, ih, backward=False):
    out = np.zeros_like(f)
    shift = 1 if backward else -1
    for axis in range(3):
        if ih[axis] == 0.0:
            continue
        if backward:
            d = (f - np.roll(f, shift, axis)) * ih[axis]
        else:
            d = (np.roll(f, shift, axis) - f) * ih[axis]
        out += d * d
    return out


def reaction_tendency(c, k, feed):
    """Pointwise reaction tendencies of a ``(4, N)`` block.

    ``feed`` < 0 selects the reversible/irreversible four-species kinetics;
    ``feed`` >= 0 selects the reduced model where the U/Q exchange is
    replaced by a constant feed and ``q`` is frozen.
    """
    k0p, k0m, k1p, k1m, k2p, k2m = k
    u, v, p, q = c
    out = np.empty_like(c)
    if feed >= 0.0:
        r0 = k0p * (u - feed)
    else:
        r0 = k0p * u - k0m * q
    r1 = k1p * u * v * v - k1m * v * v * v
    r2 = k2p * v - k2m * p
    out[0] = -r1 - r0
    out[1] = r1 - r2
    out[2] = r2
    if feed >= 0.0:
        out[3] = 0.0
    else:
        out[3] = r0
    return out


def reaction_rk4(c, k, feed, dt, floor):
    """One classical RK4 step of the pointwise kinetics on a ``(4, N)`` block.

    Returns ``(new, clamp_events, bad_node)``; ``bad_node`` is -1 unless a
    non-finite value appeared, in which case it is the first offending node.
    """
    half = 0.5 * dt
    # overflow is reported through bad_node, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = reaction_tendency(c, k, feed)
        k2 = reaction_tendency(c + half * k1, k, feed)
        k3 = reaction_tendency(c + half * k2, k, feed)
        k4 = reaction_tendency(c + dt * k3, k, feed)
        new = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    finite = np.isfinite(new)
    if not finite.all():
        bad = np.nonzero(~finite.all(axis=0))[0]
        return new, 0, int(bad[0])
    low = new < floor
    clamps = int(np.count_nonzero(low))
    if clamps:
        new[low] = floor
    return new, clamps, -1


def clamp(c, floor):
    low = c < floor
    n = int(np.count_nonzero(low))
    if n:
        c[low] = floor
    return n
