import numpy as np
import pytest
from scipy import integrate

from knlab import kernels
from knlab._accel import HAVE_NUMBA, numba_requested

UNIT_CUBE_SELF = 2.3800773639795527


def _rng_case(n=500):
    rng = np.random.default_rng(1)
    return rng.uniform(-1, 1, (n, 3)), rng.uniform(0, 1, (n, 3))


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("static", [True, False])
def test_retarded_sum_backends_agree(static):
    pos, wv = _rng_case()
    x = np.array([0.2, 0.1, 3.0])
    a = kernels.retarded_sum(x, pos, wv, 1.7, 0.3, 0.2, static, backend="numpy")
    b = kernels.retarded_sum(x, pos, wv, 1.7, 0.3, 0.2, static, backend="numba")
    np.testing.assert_allclose(a, b, rtol=1e-13)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("power", [1.0, 2.0, 0.5])
def test_moment_sum_backends_agree(power):
    pos, wv = _rng_case()
    x = np.array([0.2, 0.1, 3.0])
    a = kernels.moment_sum(x, pos, wv, power, backend="numpy")
    b = kernels.moment_sum(x, pos, wv, power, backend="numba")
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_retarded_sum_skips_coincident_node(backend):
    pos = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    wv = np.ones((2, 1))
    assert kernels.retarded_sum(np.zeros(3), pos, wv)[0] == 1.0


def test_prism_unit_cube_self_value():
    assert kernels.prism_integral(-0.5, 0.5, -0.5, 0.5, -0.5, 0.5) == pytest.approx(
        UNIT_CUBE_SELF, rel=1e-14)
    assert float(kernels.prism_integral_np(-0.5, 0.5, -0.5, 0.5, -0.5, 0.5)) == pytest.approx(
        UNIT_CUBE_SELF, rel=1e-14)


@pytest.mark.parametrize("box", [(0.3, 1.1, -0.4, 0.2, 0.5, 0.9), (-2.0, -1.5, 0.1, 0.7, -0.3, 0.3)])
def test_prism_matches_scipy(box):
    x1, x2, y1, y2, z1, z2 = box
    ref, _ = integrate.tplquad(lambda z, y, x: 1.0 / np.sqrt(x * x + y * y + z * z),
                               x1, x2, y1, y2, z1, z2, epsabs=1e-13, epsrel=1e-11)
    assert kernels.prism_integral(*box) == pytest.approx(ref, rel=1e-9)
    assert float(kernels.prism_integral_np(*box)) == pytest.approx(ref, rel=1e-9)


def test_prism_far_box_is_cancellation_safe():
    # a small box far along -x: the log terms would cancel without the guard
    box = (-1000.0, -999.99, 0.0, 0.01, 0.0, 0.01)
    vol = 1e-6
    assert kernels.prism_integral(*box) == pytest.approx(vol / 999.995, rel=1e-8)


def test_grid_sum_backends_agree(backend):
    rng = np.random.default_rng(3)
    vals = rng.uniform(0, 1, (2, 6, 5, 4))
    lo = np.array([-0.3, -0.25, -0.2])
    x = np.array([0.01, 0.0, 0.02])
    got = kernels.grid_sum(x, lo, 0.1, vals, near=2)
    ref = kernels._grid_sum_np(x, lo, 0.1, vals, 2)
    np.testing.assert_allclose(got, ref, rtol=1e-13)


def test_grid_sum_far_point_is_midpoint_rule():
    vals = np.ones((1, 2, 2, 2))
    lo = np.zeros(3)
    x = np.array([10.0, 10.0, 10.0])
    c = (np.arange(2) + 0.5) * 0.5
    cx, cy, cz = np.meshgrid(c, c, c, indexing="ij")
    ref = (0.125 / np.sqrt((10 - cx) ** 2 + (10 - cy) ** 2 + (10 - cz) ** 2)).sum()
    assert kernels.grid_sum(x, lo, 0.5, vals)[0] == pytest.approx(ref, rel=1e-14)


def test_set_backend_validates():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_env_flag(monkeypatch):
    monkeypatch.setenv("KNLAB_NO_NUMBA", "1")
    assert not numba_requested()
    monkeypatch.setenv("KNLAB_NO_NUMBA", "0")
    assert numba_requested()
