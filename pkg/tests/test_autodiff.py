import numpy as np
import pytest

from tsplab.model import autodiff as ad


def fd_scalar(fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar-valued fn w.r.t. array x."""
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = fn()
        flat[i] = orig - h
        down = fn()
        flat[i] = orig
        gflat[i] = (up - down) / (2 * h)
    return g


def check_op(build, *arrays, tol=1e-7):
    """Compare analytic gradients of sum(op(...)) against finite differences."""
    params = [ad.parameter(a) for a in arrays]
    out = ad.sum_all(build(*params))
    out.backward()
    for p, a in zip(params, arrays):
        def value():
            with ad.no_grad():
                vals = [ad.constant(q.value) for q in params]
                return float(ad.sum_all(build(*vals)).value)

        numeric = fd_scalar(value, p.value)
        assert np.allclose(p.grad, numeric, atol=tol), (p.grad, numeric)


RNG = np.random.default_rng(0)


class TestOpGradients:
    def test_add_broadcast_bias(self):
        check_op(ad.add, RNG.random((4, 3)), RNG.random(3))

    def test_mul(self):
        check_op(ad.mul, RNG.random((3, 5)), RNG.random((3, 5)))

    def test_linear(self):
        check_op(ad.linear, RNG.random((4, 3)), RNG.random((6, 3)), RNG.random(6))

    def test_linear_no_bias(self):
        check_op(lambda x, w: ad.linear(x, w), RNG.random((2, 3)), RNG.random((5, 3)))

    def test_matvec(self):
        check_op(ad.matvec, RNG.random((7, 4)), RNG.random(4))

    def test_tanh(self):
        check_op(ad.tanh, RNG.random((3, 4)) * 2 - 1)

    def test_sigmoid(self):
        check_op(ad.sigmoid, RNG.random((3, 4)) * 4 - 2)

    def test_slice_cols(self):
        check_op(lambda a: ad.slice_cols(a, 1, 3), RNG.random((4, 6)))

    def test_gather_rows_with_repeats(self):
        idx = np.array([0, 2, 2, 1])
        check_op(lambda a: ad.gather_rows(a, idx), RNG.random((3, 4)))

    def test_repeat_rows(self):
        check_op(lambda a: ad.repeat_rows(a, 3), RNG.random((2, 5)))

    def test_interleave_steps(self):
        check_op(
            lambda a, b: ad.interleave_steps([a, b]), RNG.random((3, 4)), RNG.random((3, 4))
        )

    def test_reshape(self):
        check_op(lambda a: ad.reshape(a, (2, 6)), RNG.random((3, 4)))

    def test_conv1d_embed(self):
        taps = [RNG.random((6, 2)) for _ in range(3)]
        check_op(
            lambda k, b: ad.conv1d_embed(taps, k, b), RNG.random((4, 2, 3)), RNG.random(4)
        )

    def test_masked_log_softmax(self):
        mask = np.array([[True, True, False, True], [True, False, True, True]])

        def build(u):
            lp = ad.masked_log_softmax(u, mask)
            return ad.pick(lp, np.array([0, 3]))

        check_op(build, RNG.random((2, 4)))

    def test_masked_softmax(self):
        mask = np.array([[True, False, True, True]])
        check_op(lambda u: ad.mul(ad.masked_softmax(u, mask), u), RNG.random((1, 4)))

    def test_rows_mix(self):
        p = RNG.random((2, 3))
        refs = RNG.random((6, 4))
        check_op(lambda a, b: ad.rows_mix(a, b, 3), p, refs)

    def test_pick(self):
        check_op(lambda a: ad.pick(a, np.array([2, 0])), RNG.random((2, 4)))

    def test_neg_scale(self):
        check_op(lambda a: ad.scale(ad.neg(a), 2.5), RNG.random((3, 3)))


class TestEngineSemantics:
    def test_diamond_accumulation(self):
        # y = x*x + x: dy/dx = 2x + 1
        x = ad.parameter(np.array([[3.0]]))
        y = ad.sum_all(ad.add(ad.mul(x, x), x))
        y.backward()
        assert x.grad[0, 0] == pytest.approx(7.0)

    def test_masked_softmax_masked_entries_exactly_zero(self):
        u = ad.constant(np.array([[5.0, 1.0, -2.0]]))
        mask = np.array([[False, True, True]])
        p = ad.masked_softmax(u, mask).value
        assert p[0, 0] == 0.0
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_no_grad_suppresses_tape(self):
        x = ad.parameter(np.ones((2, 2)))
        with ad.no_grad():
            y = ad.mul(x, x)
        assert not y.requires_grad
        assert y._parents == ()

    def test_backward_requires_scalar(self):
        x = ad.parameter(np.ones((2, 2)))
        y = ad.mul(x, x)
        with pytest.raises(ValueError):
            y.backward()

    def test_gradients_accumulate_across_backwards(self):
        x = ad.parameter(np.array([[2.0]]))
        ad.sum_all(ad.mul(x, x)).backward()
        first = x.grad.copy()
        ad.sum_all(ad.mul(x, x)).backward()
        assert np.allclose(x.grad, 2 * first)

    def test_dtype_preserved(self):
        x = ad.parameter(np.ones((2, 2), dtype=np.float32))
        y = ad.tanh(ad.mul(x, x))
        assert y.dtype == np.float32
