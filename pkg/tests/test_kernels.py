"""Compiled and numpy kernels must agree."""
import numpy as np
import pytest

from revgs import _fallback, kernels
from revgs.core import Parameters
from revgs.grid import GridSpec, gradient_sq, laplacian

compiled = pytest.mark.skipif("cython" not in kernels.available_backends(), reason="extension not built")


def test_backend_switch():
    assert kernels.backend_name() in kernels.available_backends()
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


@compiled
@pytest.mark.parametrize("shape", [(9,), (6, 7), (4, 5, 6)])
def test_stencils_bitwise(shape):
    from revgs import _kernels

    rng = np.random.default_rng(3)
    f = rng.standard_normal(shape)
    g = GridSpec(len(shape), shape, tuple(1.0 + 0.5 * i for i in range(len(shape))))
    outs = {}
    for name in ("numpy", "cython"):
        kernels.use_backend(name)
        outs[name] = (laplacian(f, g), gradient_sq(f, g), kernels.gradient_sq(f, g.inv_h, backward=True))
    kernels.use_backend("cython")
    for a, b in zip(outs["numpy"], outs["cython"]):
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-12)


@compiled
@pytest.mark.parametrize("feed", [-1.0, 0.3])
def test_reaction_parity(feed):
    from revgs import _kernels

    rng = np.random.default_rng(4)
    c = rng.uniform(0, 2, (4, 50))
    k = Parameters(k0p=0.7, k0m=1.3, k1p=2.0, k1m=0.4, k2p=0.9, k2m=0.2).rates
    np.testing.assert_allclose(_kernels.reaction_tendency(c, k, feed), _fallback.reaction_tendency(c, k, feed),
                               rtol=1e-14, atol=1e-15)
    a = _kernels.reaction_rk4(c, k, feed, 0.05, 1e-12)
    b = _fallback.reaction_rk4(c, k, feed, 0.05, 1e-12)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-14, atol=1e-15)
    assert a[1:] == b[1:]


@pytest.mark.parametrize("impl", ["numpy", "cython"])
def test_clamp_counts(impl):
    if impl not in kernels.available_backends():
        pytest.skip("extension not built")
    kernels.use_backend(impl)
    try:
        c = np.array([[1.0, -1.0, 0.0], [1e-20, 2.0, 3.0]])
        assert kernels.clamp(c, 1e-12) == 3
        assert c.min() == 1e-12
    finally:
        kernels.use_backend(kernels.available_backends()[0])


def test_rk4_reports_nonfinite(backend):
    c = np.array([[1e200], [1e200], [0.0], [0.0]])
    _, _, bad = kernels.reaction_rk4(c, Parameters().rates, 1.0, 0.0)
    assert bad == 0
