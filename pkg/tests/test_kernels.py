import numpy as np
import pytest

import countloop.kernels as kernels
from countloop.kernels import numpy_impl

try:
    from countloop.kernels import numba_impl
    HAS_NUMBA = True
except ImportError:
    numba_impl = None
    HAS_NUMBA = False

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")


def random_boxes(rng, n):
    cx = rng.uniform(60, 960, n)
    cy = rng.uniform(60, 960, n)
    hw = rng.uniform(8, 50, n)
    hh = rng.uniform(8, 50, n)
    return cx, cy, hw, hh


def gaps(cx, cy, hw, hh):
    gx = np.abs(cx[None, :] - cx[:, None]) - (hw[:, None] + hw[None, :])
    gy = np.abs(cy[None, :] - cy[:, None]) - (hh[:, None] + hh[None, :])
    g = np.maximum(gx, gy)
    np.fill_diagonal(g, np.inf)
    return g


class TestBackendSelection:
    def test_active_backend_exports(self):
        assert kernels.BACKEND in ("numba", "numpy")
        for name in ("relax_boxes", "violating_pairs", "nn_distances", "iou_matrix"):
            assert callable(getattr(kernels, name))


class TestRelaxBoxes:
    @pytest.mark.parametrize("seed", range(6))
    def test_numpy_resolves_and_respects_bounds(self, seed):
        rng = np.random.default_rng(seed)
        cx, cy, hw, hh = random_boxes(rng, 40)
        out_x, out_y, steps, ok = numpy_impl.relax_boxes(
            cx, cy, hw, hh, 9.0, 0.7, 0.5, 300, 0.0, 1023.0)
        assert ok
        assert (gaps(out_x, out_y, hw, hh) >= 9.0 - 1e-9).all()
        assert (out_x - hw >= -1e-9).all() and (out_x + hw <= 1023 + 1e-9).all()
        assert (out_y - hh >= -1e-9).all() and (out_y + hh <= 1023 + 1e-9).all()

    def test_already_satisfied_zero_steps(self):
        cx = np.array([100.0, 500.0])
        cy = np.array([100.0, 500.0])
        hw = hh = np.array([40.0, 40.0])
        out_x, out_y, steps, ok = numpy_impl.relax_boxes(
            cx, cy, hw, hh, 8.0, 0.7, 0.5, 100, 0.0, 1023.0)
        assert ok and steps == 0
        assert np.array_equal(out_x, cx) and np.array_equal(out_y, cy)

    def test_coincident_pair_deterministic(self):
        cx = np.array([512.0, 512.0])
        cy = np.array([512.0, 512.0])
        hw = hh = np.array([50.0, 50.0])
        ax, ay, _, ok_a = numpy_impl.relax_boxes(cx, cy, hw, hh, 10.0, 0.7, 0.5,
                                                 200, 0.0, 1023.0)
        bx, by, _, ok_b = numpy_impl.relax_boxes(cx, cy, hw, hh, 10.0, 0.7, 0.5,
                                                 200, 0.0, 1023.0)
        assert ok_a and ok_b
        assert np.array_equal(ax, bx) and np.array_equal(ay, by)

    def test_unsatisfiable_reports_not_ok(self):
        # two boxes each wider than half the canvas cannot reach an 8px gap
        cx = np.array([512.0, 512.0])
        cy = np.array([512.0, 512.0])
        hw = np.array([500.0, 500.0])
        hh = np.array([500.0, 500.0])
        _, _, _, ok = numpy_impl.relax_boxes(cx, cy, hw, hh, 8.0, 0.7, 0.5,
                                             50, 0.0, 1023.0)
        assert not ok

    @needs_numba
    @pytest.mark.parametrize("seed", range(6))
    def test_numba_matches_numpy_behavior(self, seed):
        rng = np.random.default_rng(seed)
        cx, cy, hw, hh = random_boxes(rng, 40)
        nx, ny, nsteps, nok = numpy_impl.relax_boxes(
            cx, cy, hw, hh, 9.0, 0.7, 0.5, 300, 0.0, 1023.0)
        jx, jy, jsteps, jok = numba_impl.relax_boxes(
            cx, cy, hw, hh, 9.0, 0.7, 0.5, 300, 0.0, 1023.0)
        assert jok == nok and jsteps == nsteps
        # same trajectory up to float summation order
        assert np.allclose(jx, nx, atol=1e-6) and np.allclose(jy, ny, atol=1e-6)
        assert (gaps(jx, jy, hw, hh) >= 9.0 - 1e-9).all()


class TestPairQueries:
    @pytest.mark.parametrize("seed", range(4))
    def test_violating_pairs_oracle(self, seed):
        rng = np.random.default_rng(seed)
        cx, cy, hw, hh = random_boxes(rng, 25)
        got = {tuple(p) for p in numpy_impl.violating_pairs(cx, cy, hw, hh, 8.0)}
        g = gaps(cx, cy, hw, hh)
        expected = {(i, j) for i in range(25) for j in range(i + 1, 25)
                    if g[i, j] < 8.0}
        assert got == expected

    @needs_numba
    def test_violating_pairs_backends_agree(self):
        rng = np.random.default_rng(3)
        cx, cy, hw, hh = random_boxes(rng, 30)
        a = numpy_impl.violating_pairs(cx, cy, hw, hh, 8.0)
        b = numba_impl.violating_pairs(cx, cy, hw, hh, 8.0)
        assert np.array_equal(a, b)

    def test_nn_distances_oracle(self):
        cx = np.array([0.0, 3.0, 10.0])
        cy = np.array([0.0, 4.0, 0.0])
        nn = numpy_impl.nn_distances(cx, cy)
        assert np.allclose(nn, [5.0, 5.0, 8.06225774829855])

    @needs_numba
    def test_nn_distances_backends_agree(self):
        rng = np.random.default_rng(8)
        cx, cy, _, _ = random_boxes(rng, 50)
        assert np.allclose(numpy_impl.nn_distances(cx, cy),
                           numba_impl.nn_distances(cx, cy))

    def test_iou_matrix_oracle(self):
        x0 = np.array([0.0, 5.0])
        y0 = np.array([0.0, 0.0])
        x1 = np.array([10.0, 15.0])
        y1 = np.array([10.0, 10.0])
        iou = numpy_impl.iou_matrix(x0, y0, x1, y1)
        # intersection 5x10=50, union 200-50=150
        assert iou[0, 1] == pytest.approx(50 / 150)
        assert iou[0, 0] == 0.0

    @needs_numba
    def test_iou_backends_agree(self):
        rng = np.random.default_rng(9)
        x0 = rng.uniform(0, 500, 30)
        y0 = rng.uniform(0, 500, 30)
        x1 = x0 + rng.uniform(10, 300, 30)
        y1 = y0 + rng.uniform(10, 300, 30)
        assert np.allclose(numpy_impl.iou_matrix(x0, y0, x1, y1),
                           numba_impl.iou_matrix(x0, y0, x1, y1))
