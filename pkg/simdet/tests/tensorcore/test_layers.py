import itertools
import math

import numpy as np
import pytest

from simdet.errors import ShapeError
from simdet.tensorcore import ops
from simdet.tensorcore.layers import (
    BatchNormState,
    batchnorm_forward,
    conv_forward,
    l2_normalize,
    maxpool_forward,
    relu_forward,
    softmax_temp,
)
from simdet.tensorcore.tensor import Tape, Tensor


def nested_loop_conv(x, w, stride=1):
    batch, _, height, width = x.shape
    out_channels, _, kh, kw = w.shape
    oh, ow = (height - kh) // stride + 1, (width - kw) // stride + 1
    out = np.zeros((batch, out_channels, oh, ow))
    for b, o, i, j in itertools.product(range(batch), range(out_channels), range(oh), range(ow)):
        patch = x[b, :, i * stride:i * stride + kh, j * stride:j * stride + kw]
        out[b, o, i, j] = np.sum(patch * w[o])
    return out


def nested_loop_pool(x, window=2):
    batch, channels, height, width = x.shape
    out = np.zeros((batch, channels, height // window, width // window))
    for b, c, i, j in itertools.product(*(range(n) for n in out.shape)):
        out[b, c, i, j] = x[b, c, i * window:(i + 1) * window, j * window:(j + 1) * window].max()
    return out


class TestConv:
    def test_scaling_kernel(self):
        out = conv_forward(Tensor([[[1.0, 2.0, 3.0]]]), Tensor([[[2.0]]]))
        np.testing.assert_array_equal(out.data, [[[2.0, 4.0, 6.0]]])

    def test_summing_kernel_single_position(self):
        out = conv_forward(Tensor([[[1.0, 2.0, 3.0]]]), Tensor([[[1.0, 1.0, 1.0]]]))
        np.testing.assert_array_equal(out.data, [[[6.0]]])

    def test_unbatched_input_keeps_no_batch_axis(self):
        out = conv_forward(Tensor([[1.0, 2.0, 3.0]]), Tensor([[[1.0, 1.0]]]))
        np.testing.assert_array_equal(out.data, [[3.0, 5.0]])

    @pytest.mark.parametrize("stride", [1, 2])
    def test_matches_nested_loop_oracle(self, stride):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(1, 2, 7, 7))
        w = rng.normal(size=(3, 2, 5, 5))
        out = conv_forward(Tensor(x), Tensor(w), stride=stride)
        expected = nested_loop_conv(x, w, stride)
        assert out.shape == expected.shape
        np.testing.assert_allclose(out.data, expected, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("stride", [1, 2, 3])
    def test_integer_inputs_match_the_oracle_exactly(self, stride):
        rng = np.random.default_rng(8)
        x = rng.integers(-4, 5, size=(2, 3, 9, 8)).astype(np.float64)
        w = rng.integers(-3, 4, size=(4, 3, 3, 2)).astype(np.float64)
        np.testing.assert_array_equal(conv_forward(Tensor(x), Tensor(w), stride=stride).data, nested_loop_conv(x, w, stride))

    @pytest.mark.parametrize("stride", [1, 2])
    def test_one_dimensional_gradients_are_exact_on_integers(self, stride):
        rng = np.random.default_rng(9)
        x = Tensor(rng.integers(-4, 5, size=(2, 3, 11)).astype(np.float64), requires_grad=True)
        w = Tensor(rng.integers(-3, 4, size=(2, 3, 4)).astype(np.float64), requires_grad=True)
        length = (11 - 4) // stride + 1
        cotangent = rng.integers(-2, 3, size=(2, 2, length)).astype(np.float64)
        with Tape() as tape:
            out = conv_forward(x, w, stride=stride)
            loss = ops.total(ops.mul(out, cotangent))
        tape.backward(loss)

        expected_out = np.zeros((2, 2, length))
        expected_dx, expected_dw = np.zeros(x.shape), np.zeros(w.shape)
        for b, o, t, k in itertools.product(range(2), range(2), range(length), range(4)):
            expected_out[b, o, t] += w.data[o, :, k] @ x.data[b, :, t * stride + k]
            expected_dx[b, :, t * stride + k] += cotangent[b, o, t] * w.data[o, :, k]
            expected_dw[o, :, k] += cotangent[b, o, t] * x.data[b, :, t * stride + k]
        np.testing.assert_array_equal(out.data, expected_out)
        np.testing.assert_array_equal(x.grad, expected_dx)
        np.testing.assert_array_equal(w.grad, expected_dw)

    def test_output_shape_7x7_through_5x5(self):
        rng = np.random.default_rng(0)
        out = conv_forward(Tensor(rng.normal(size=(1, 2, 7, 7))), Tensor(rng.normal(size=(3, 2, 5, 5))))
        assert out.shape == (1, 3, 3, 3)

    @pytest.mark.parametrize(("stride", "out_shape"), [(1, (4, 4)), (2, (2, 2)), ((1, 3), (4, 2))])
    def test_gradients_against_finite_differences(self, stride, out_shape):
        rng = np.random.default_rng(1)
        x = Tensor(rng.normal(size=(2, 2, 6, 5)), requires_grad=True)
        w = Tensor(rng.normal(size=(3, 2, 3, 2)), requires_grad=True)
        cotangent = rng.normal(size=(2, 3, *out_shape))
        with Tape() as tape:
            loss = ops.total(ops.mul(conv_forward(x, w, stride=stride), cotangent))
        tape.backward(loss)

        h = 1e-6
        for tensor in (x, w):
            for index in [(0, 0, 0, 0), (1, 1, 2, 1), tuple(s - 1 for s in tensor.shape)]:
                original = tensor.data[index]
                tensor.data[index] = original + h
                upper = np.sum(conv_forward(Tensor(x.data), Tensor(w.data), stride=stride).data * cotangent)
                tensor.data[index] = original - h
                lower = np.sum(conv_forward(Tensor(x.data), Tensor(w.data), stride=stride).data * cotangent)
                tensor.data[index] = original
                assert tensor.grad[index] == pytest.approx((upper - lower) / (2 * h), rel=1e-6, abs=1e-6)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ShapeError, match="channels"):
            conv_forward(Tensor(np.zeros((1, 3, 5, 5))), Tensor(np.zeros((2, 2, 3, 3))))

    def test_input_smaller_than_kernel_rejected(self):
        with pytest.raises(ShapeError, match="smaller than kernel"):
            conv_forward(Tensor(np.zeros((1, 1, 2, 2))), Tensor(np.zeros((1, 1, 3, 3))))


class TestMaxPool:
    def test_one_dimensional(self):
        out = maxpool_forward(Tensor([[[1.0, 3.0, 2.0, 4.0]]]))
        np.testing.assert_array_equal(out.data, [[[3.0, 4.0]]])

    def test_ties_route_gradient_to_first_element(self):
        x = Tensor(np.full((1, 1, 4, 4), 5.0), requires_grad=True)
        with Tape() as tape:
            out = maxpool_forward(x)
            loss = ops.total(out)
        tape.backward(loss)
        np.testing.assert_array_equal(out.data, np.full((1, 1, 2, 2), 5.0))
        expected = np.zeros((4, 4))
        expected[::2, ::2] = 1.0
        np.testing.assert_array_equal(x.grad[0, 0], expected)

    def test_matches_nested_loop_oracle(self):
        x = np.random.default_rng(3).normal(size=(2, 3, 8, 8))
        np.testing.assert_array_equal(maxpool_forward(Tensor(x)).data, nested_loop_pool(x))

    def test_trailing_elements_dropped(self):
        x = np.arange(5.0).reshape(1, 1, 5)
        out = maxpool_forward(Tensor(x))
        np.testing.assert_array_equal(out.data, [[[1.0, 3.0]]])

    def test_extent_below_window_rejected(self):
        with pytest.raises(ShapeError, match="smaller than the pooling window"):
            maxpool_forward(Tensor(np.zeros((1, 1, 1, 4))))


class TestBatchNorm:
    def test_infer_with_fresh_state_is_identity(self):
        x = np.random.default_rng(0).normal(size=(3, 2, 4))
        out = batchnorm_forward(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)), "infer", BatchNormState.fresh(2))
        np.testing.assert_allclose(out.data, x / math.sqrt(1.0 + 1e-5), rtol=1e-12)

    def test_train_matches_two_pass_reference(self):
        rng = np.random.default_rng(4)
        x = rng.normal(2.0, 3.0, size=(5, 3, 4, 4))
        gamma, beta = rng.normal(size=3), rng.normal(size=3)
        out = batchnorm_forward(Tensor(x), Tensor(gamma), Tensor(beta), "train", BatchNormState.fresh(3))

        expected = np.empty_like(x)
        for c in range(3):
            values = x[:, c]
            mean = values.sum() / values.size
            var = ((values - mean) ** 2).sum() / values.size
            expected[:, c] = gamma[c] * (values - mean) / math.sqrt(var + 1e-5) + beta[c]
        np.testing.assert_allclose(out.data, expected, rtol=1e-10, atol=1e-12)

    def test_train_updates_running_moments(self):
        state = BatchNormState.fresh(1)
        x = np.array([[[1.0, 3.0]]])
        batchnorm_forward(Tensor(x), Tensor(np.ones(1)), Tensor(np.zeros(1)), "train", state)
        np.testing.assert_allclose(state.running_mean, [0.2])
        np.testing.assert_allclose(state.running_var, [0.9 + 0.1 * 1.0])

    def test_empty_batch_rejected(self):
        with pytest.raises(ShapeError, match="non-empty"):
            batchnorm_forward(Tensor(np.zeros((0, 2, 3))), Tensor(np.ones(2)), Tensor(np.zeros(2)), "train",
                              BatchNormState.fresh(2))


class TestElementwise:
    def test_relu(self):
        np.testing.assert_array_equal(relu_forward(Tensor([-1.0, 0.0, 2.0])).data, [0.0, 0.0, 2.0])

    def test_relu_all_negative_has_zero_gradient(self):
        x = Tensor([-3.0, -1.0, -0.5], requires_grad=True)
        with Tape() as tape:
            loss = ops.total(relu_forward(x))
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, np.zeros(3))

    def test_l2_normalize(self):
        np.testing.assert_allclose(l2_normalize(Tensor([3.0, 4.0]), axis=0).data, [0.6, 0.8])

    def test_l2_normalize_zero_vector(self):
        np.testing.assert_array_equal(l2_normalize(Tensor(np.zeros(4)), axis=0).data, np.zeros(4))

    def test_l2_normalize_unit_norm(self):
        x = np.random.default_rng(9).normal(size=17)
        assert np.linalg.norm(l2_normalize(Tensor(x), axis=0).data) == pytest.approx(1.0, abs=1e-9)


class TestSoftmax:
    @pytest.mark.parametrize("temperature", [1 / 3, 1.0, 50.0])
    def test_constant_input_is_uniform(self, temperature):
        np.testing.assert_allclose(softmax_temp(Tensor(np.full(6, 0.4)), temperature).data, np.full(6, 1 / 6))

    def test_two_values_at_one_third(self):
        e3 = math.exp(3.0)
        np.testing.assert_allclose(softmax_temp(Tensor([0.0, 1.0]), 1 / 3).data, [1 / (1 + e3), e3 / (1 + e3)],
                                   rtol=1e-12)

    def test_large_temperature_is_nearly_uniform(self):
        w = softmax_temp(Tensor(np.random.default_rng(2).uniform(size=8)), 1e6).data
        np.testing.assert_allclose(w, np.full(8, 1 / 8), atol=1e-5)

    @pytest.mark.parametrize("temperature", [0.0, -1.0])
    def test_non_positive_temperature_rejected(self, temperature):
        with pytest.raises(ValueError, match="temperature"):
            softmax_temp(Tensor([1.0, 2.0]), temperature)

    @pytest.mark.parametrize("temperature", [1 / 3, 1.0, 3.0])
    @pytest.mark.parametrize("seed", range(5))
    def test_sums_to_one(self, temperature, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(0.0, 10.0 ** rng.integers(0, 3), size=int(rng.integers(1, 200)))
        assert abs(softmax_temp(Tensor(x), temperature).data.sum() - 1.0) <= 1e-12

    @pytest.mark.parametrize("shift", [-3.0, 0.25, 100.0])
    def test_invariant_to_a_constant_shift(self, shift):
        x = np.random.default_rng(6).uniform(size=20)
        np.testing.assert_allclose(softmax_temp(Tensor(x + shift), 1 / 3).data, softmax_temp(Tensor(x), 1 / 3).data,
                                   rtol=1e-10)
