"""Op semantics and finite-difference gradient checks for the tensor core."""

import math

import numpy as np
import pytest

import gtpool.autodiff as ad
from gtpool.autodiff import ShapeError, Tensor, no_grad
from gtpool.rng import Rng

from helpers import gradcheck


def _param(arr) -> Tensor:
    return Tensor(np.asarray(arr, dtype=np.float64), requires_grad=True)


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    return ad.sum_all(ad.hadamard(out, Tensor(weights)))


class TestMatmul:
    def test_identity(self):
        m = Tensor([[1.0, 2.0], [3.0, 4.0]])
        eye = Tensor(np.eye(2))
        assert np.array_equal(ad.matmul(eye, m).data, m.data)

    def test_hand_product(self):
        a = Tensor([[1.0, 2.0], [3.0, 4.0]])
        b = Tensor([[0.0], [1.0]])
        assert np.array_equal(ad.matmul(a, b).data, [[2.0], [4.0]])

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            ad.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))

    def test_gradient_5x7_7x3(self):
        rng = np.random.default_rng(0)
        a = _param(rng.normal(size=(5, 7)))
        b = _param(rng.normal(size=(7, 3)))
        w = rng.normal(size=(5, 3))
        worst = gradcheck(lambda: _weighted_sum(ad.matmul(a, b), w), [a, b], tol=1e-6)
        assert worst < 1e-6


class TestRowSoftmax:
    def test_uniform_on_equal_logits(self):
        out = ad.row_softmax(Tensor([[0.0, 0.0, 0.0]]))
        np.testing.assert_allclose(out.data, [[1 / 3] * 3], atol=1e-15)

    def test_max_shift_stability(self):
        out = ad.row_softmax(Tensor([[1000.0, 0.0]]))
        assert np.isfinite(out.data).all()
        np.testing.assert_allclose(out.data[0, 0], 1.0, atol=1e-12)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        out = ad.row_softmax(Tensor(rng.normal(size=(6, 9), scale=4)))
        np.testing.assert_allclose(out.data.sum(axis=1), 1.0, atol=1e-12)
        assert (out.data >= 0).all()

    def test_gradient_4x4(self):
        rng = np.random.default_rng(2)
        x = _param(rng.normal(size=(4, 4)))
        w = rng.normal(size=(4, 4))
        worst = gradcheck(lambda: _weighted_sum(ad.row_softmax(x), w), [x], tol=1e-6)
        assert worst < 1e-6


class TestElementwiseSuite:
    def test_gelu_center(self):
        assert ad.gelu(Tensor([[0.0]])).data[0, 0] == 0.0

    def test_gelu_known_value(self):
        # tanh approximation at x=1: 0.5*(1+tanh(sqrt(2/pi)*1.044715))
        expect = 0.5 * (1 + math.tanh(math.sqrt(2 / math.pi) * 1.044715))
        np.testing.assert_allclose(ad.gelu(Tensor([[1.0]])).data[0, 0], expect)

    def test_gather_rows_definition(self):
        m = Tensor([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
        out = ad.gather_rows(m, [2, 0])
        assert np.array_equal(out.data, [[4.0, 5.0], [0.0, 1.0]])

    def test_gather_rows_out_of_range(self):
        with pytest.raises(IndexError):
            ad.gather_rows(Tensor(np.zeros((2, 2))), [2])
        with pytest.raises(IndexError):
            ad.gather_rows(Tensor(np.zeros((2, 2))), [-1])

    def test_layer_norm_constant_row(self):
        gain = Tensor(np.ones((1, 4)), requires_grad=True)
        bias = Tensor(np.zeros((1, 4)), requires_grad=True)
        out = ad.layer_norm(Tensor([[3.0, 3.0, 3.0, 3.0]]), gain, bias)
        np.testing.assert_allclose(out.data, 0.0, atol=1e-12)

    def test_max_rows_ties_route_to_first(self):
        x = _param([[1.0, 5.0], [1.0, 2.0]])
        out = ad.max_rows(x)
        ad.sum_all(out).backward()
        assert np.array_equal(out.data, [[1.0, 5.0]])
        assert np.array_equal(x.grad, [[1.0, 1.0], [0.0, 0.0]])

    def test_mean_rows(self):
        out = ad.mean_rows(Tensor([[0.0, 2.0], [2.0, 0.0]]))
        assert np.array_equal(out.data, [[1.0, 1.0]])

    def test_concat_cols(self):
        out = ad.concat_cols([Tensor([[1.0], [2.0]]), Tensor([[3.0], [4.0]])])
        assert np.array_equal(out.data, [[1.0, 3.0], [2.0, 4.0]])

    def test_add_broadcasts_bias_row(self):
        x = _param(np.zeros((3, 2)))
        b = _param([[1.0, 2.0]])
        out = ad.add(x, b)
        assert np.array_equal(out.data, [[1.0, 2.0]] * 3)
        ad.sum_all(out).backward()
        assert np.array_equal(b.grad, [[3.0, 3.0]])

    def test_dropout_train_scaling_and_eval_identity(self):
        x = Tensor(np.ones((40, 50)))
        out = ad.dropout(x, 0.25, Rng(5), train=True)
        kept = out.data != 0.0
        np.testing.assert_allclose(out.data[kept], 1.0 / 0.75)
        assert 0.6 < kept.mean() < 0.9
        assert ad.dropout(x, 0.25, Rng(5), train=False) is x

    def test_dropout_mask_reproducible(self):
        x = Tensor(np.ones((8, 8)))
        a = ad.dropout(x, 0.5, Rng(9), train=True).data
        b = ad.dropout(x, 0.5, Rng(9), train=True).data
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("seed", range(6))
    def test_elementwise_gradients(self, seed):
        rng = np.random.default_rng(seed)
        x = _param(rng.normal(size=(4, 5)) + np.sign(rng.normal(size=(4, 5))) * 0.05)
        y = _param(rng.normal(size=(4, 5)))
        w = rng.normal(size=(4, 5))
        gradcheck(lambda: _weighted_sum(ad.add(x, y), w), [x, y], tol=1e-6)
        gradcheck(lambda: _weighted_sum(ad.sub(x, y), w), [x, y], tol=1e-6)
        gradcheck(lambda: _weighted_sum(ad.hadamard(x, y), w), [x, y], tol=1e-6)
        gradcheck(lambda: _weighted_sum(ad.scale(x, -1.7), w), [x], tol=1e-6)
        gradcheck(lambda: _weighted_sum(ad.relu(x), w), [x], tol=1e-6)
        gradcheck(lambda: _weighted_sum(ad.tanh(x), w), [x], tol=1e-6)
        gradcheck(lambda: _weighted_sum(ad.gelu(x), w), [x], tol=1e-6)
        gradcheck(lambda: _weighted_sum(ad.transpose(x), w.T), [x], tol=1e-6)

    @pytest.mark.parametrize("seed", range(4))
    def test_reduction_and_shape_gradients(self, seed):
        rng = np.random.default_rng(100 + seed)
        x = _param(rng.normal(size=(5, 3)))
        y = _param(rng.normal(size=(5, 2)))
        w1 = rng.normal(size=(1, 3))
        gradcheck(lambda: _weighted_sum(ad.mean_rows(x), w1), [x], tol=1e-6)
        gradcheck(lambda: _weighted_sum(ad.max_rows(x), w1), [x], tol=1e-6)
        w2 = rng.normal(size=(5, 5))
        gradcheck(
            lambda: _weighted_sum(ad.concat_cols([x, y]), w2), [x, y], tol=1e-6
        )
        w3 = rng.normal(size=(4, 3))
        gradcheck(
            lambda: _weighted_sum(ad.gather_rows(x, [2, 0, 2, 4]), w3), [x], tol=1e-6
        )

    @pytest.mark.parametrize("seed", range(4))
    def test_layer_norm_gradients(self, seed):
        rng = np.random.default_rng(200 + seed)
        x = _param(rng.normal(size=(4, 6), scale=2.0))
        gain = _param(rng.normal(size=(1, 6)))
        bias = _param(rng.normal(size=(1, 6)))
        w = rng.normal(size=(4, 6))
        gradcheck(
            lambda: _weighted_sum(ad.layer_norm(x, gain, bias), w),
            [x, gain, bias],
            tol=1e-5,
        )

    @pytest.mark.parametrize("seed", range(3))
    def test_dropout_gradient_with_fixed_mask(self, seed):
        rng = np.random.default_rng(300 + seed)
        x = _param(rng.normal(size=(5, 4)))
        w = rng.normal(size=(5, 4))
        gradcheck(
            lambda: _weighted_sum(ad.dropout(x, 0.4, Rng(seed), train=True), w),
            [x],
            tol=1e-6,
        )

    @pytest.mark.parametrize("seed", range(3))
    def test_scale_rows_and_div_gradients(self, seed):
        rng = np.random.default_rng(400 + seed)
        x = _param(rng.normal(size=(4, 3)))
        s = _param(rng.uniform(0.5, 2.0, size=(4, 1)))
        w = rng.normal(size=(4, 3))
        gradcheck(lambda: _weighted_sum(ad.scale_rows(x, s), w), [x, s], tol=1e-6)
        gradcheck(
            lambda: _weighted_sum(ad.div_by_scalar(x, ad.sum_all(s)), w),
            [x, s],
            tol=1e-6,
        )


class TestCrossEntropy:
    def test_uniform_two_way(self):
        loss = ad.cross_entropy(Tensor([[0.0, 0.0]]), [0])
        np.testing.assert_allclose(loss.item(), math.log(2.0), atol=1e-12)

    def test_near_certain(self):
        loss = ad.cross_entropy(Tensor([[10.0, -10.0]]), [0])
        np.testing.assert_allclose(loss.item(), 2.061e-9, rtol=1e-3)

    def test_label_out_of_range(self):
        with pytest.raises(IndexError):
            ad.cross_entropy(Tensor([[0.0, 0.0]]), [2])

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_3x4(self, seed):
        rng = np.random.default_rng(500 + seed)
        logits = _param(rng.normal(size=(3, 4), scale=2.0))
        labels = rng.integers(0, 4, size=3)
        worst = gradcheck(lambda: ad.cross_entropy(logits, labels), [logits], tol=1e-6)
        assert worst < 1e-6


class TestTensorBasics:
    def test_rejects_3d(self):
        with pytest.raises(ShapeError):
            Tensor(np.zeros((2, 2, 2)))

    def test_backward_needs_scalar(self):
        t = Tensor(np.zeros((2, 2)), requires_grad=True)
        with pytest.raises(ShapeError):
            t.backward()

    def test_grad_shape_matches_data(self):
        x = _param(np.ones((3, 2)))
        ad.sum_all(x).backward()
        assert x.grad.shape == x.data.shape

    def test_no_grad_detaches(self):
        x = _param(np.ones((2, 2)))
        with no_grad():
            out = ad.relu(x)
        assert not out.requires_grad
        assert out._parents == ()

    def test_reused_node_accumulates(self):
        x = _param([[2.0]])
        y = ad.add(ad.hadamard(x, x), x)  # x^2 + x -> dy/dx = 2x + 1
        y.backward()
        np.testing.assert_allclose(x.grad, [[5.0]])

    def test_finite_check_flags_nan(self):
        with pytest.raises(FloatingPointError):
            ad.scale(Tensor([[1.0]]), float("nan"))

    def test_many_seed_gradient_sweep(self):
        """Composite expression vs finite differences across >= 20 seeds."""
        worst = 0.0
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            a = _param(rng.normal(size=(3, 4)))
            b = _param(rng.normal(size=(4, 2)))
            w = rng.normal(size=(3, 2))

            def loss():
                h = ad.tanh(ad.matmul(a, b))
                return _weighted_sum(ad.row_softmax(h), w)

            worst = max(worst, gradcheck(loss, [a, b], tol=1e-4))
        assert worst < 1e-4
