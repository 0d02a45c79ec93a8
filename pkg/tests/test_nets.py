"""GRU cell, projection head, positional encoding, attention, transformer cell."""

import numpy as np
import pytest

from rydberg_vmc import nets
from rydberg_vmc.autodiff import (
    Tensor,
    asum,
    backward,
    constant,
    mul,
    record,
    softmax,
    zero_grad,
)
from conftest import fd_gradient, rel_err

RNG = np.random.default_rng(7)


def gru_params(d_in, d_h, scale=0.3, zero=False):
    p = {}
    for gate in ("r", "z", "n"):
        for nm, shape in [
            (f"w_i{gate}", (d_in, d_h)),
            (f"w_h{gate}", (d_h, d_h)),
            (f"b_i{gate}", (d_h,)),
            (f"b_h{gate}", (d_h,)),
        ]:
            v = np.zeros(shape) if zero else RNG.normal(size=shape) * scale
            p[nm] = Tensor(v, requires_grad=True)
    return p


def attn_params(d_h, d_ff, scale=0.3):
    p = {}
    for nm in ("q", "k", "v"):
        p[f"w{nm}"] = Tensor(RNG.normal(size=(d_h, d_h)) * scale, requires_grad=True)
        p[f"b{nm}"] = Tensor(RNG.normal(size=(d_h,)) * scale, requires_grad=True)
    p["wo"] = Tensor(RNG.normal(size=(d_h, d_h)) * scale, requires_grad=True)
    p["bo"] = Tensor(RNG.normal(size=(d_h,)) * scale, requires_grad=True)
    p["norm1_g"] = Tensor(np.ones(d_h), requires_grad=True)
    p["norm1_b"] = Tensor(np.zeros(d_h), requires_grad=True)
    p["ff_w1"] = Tensor(RNG.normal(size=(d_h, d_ff)) * scale, requires_grad=True)
    p["ff_b1"] = Tensor(RNG.normal(size=(d_ff,)) * scale, requires_grad=True)
    p["ff_w2"] = Tensor(RNG.normal(size=(d_ff, d_h)) * scale, requires_grad=True)
    p["ff_b2"] = Tensor(RNG.normal(size=(d_h,)) * scale, requires_grad=True)
    p["norm2_g"] = Tensor(np.ones(d_h), requires_grad=True)
    p["norm2_b"] = Tensor(np.zeros(d_h), requires_grad=True)
    return p


class TestGruStep:
    def test_zero_parameters_halve_hidden_state(self):
        p = gru_params(3, 4, zero=True)
        x = constant(RNG.normal(size=(5, 3)))
        h = constant(RNG.normal(size=(5, 4)))
        out = nets.gru_step(x, h, p)
        assert np.allclose(out.value, 0.5 * h.value)

    def test_zero_parameters_zero_state(self):
        p = gru_params(3, 4, zero=True)
        out = nets.gru_step(constant(np.zeros((2, 3))), constant(np.zeros((2, 4))), p)
        assert np.allclose(out.value, 0.0)

    def test_gradient_of_squared_norm_wrt_whz(self):
        p = gru_params(3, 4)
        x = RNG.normal(size=(5, 3))
        h0 = RNG.normal(size=(5, 4))

        def loss_value():
            out = nets.gru_step(constant(x), constant(h0), p)
            return float((out.value**2).sum())

        zero_grad(p)
        with record():
            out = nets.gru_step(constant(x), constant(h0), p)
            backward(asum(mul(out, out)))
        fd = fd_gradient(loss_value, p["w_hz"].value)
        assert rel_err(p["w_hz"].grad_array(), fd) < 1e-6


class TestProjectionHead:
    def test_zero_parameters_give_uniform_conditional(self):
        d_h, d_out = 6, 16
        p = {
            "w1": Tensor(np.zeros((d_h, d_h)), requires_grad=True),
            "b1": Tensor(np.zeros(d_h), requires_grad=True),
            "w2": Tensor(np.zeros((d_h, d_out)), requires_grad=True),
            "b2": Tensor(np.zeros(d_out), requires_grad=True),
        }
        probs = softmax(nets.projection_head(constant(RNG.normal(size=(3, d_h))), p))
        assert np.allclose(probs.value, 1.0 / d_out)

    def test_output_is_probability_vector(self):
        d_h = 6
        p = {
            "w1": Tensor(RNG.normal(size=(d_h, d_h)), requires_grad=True),
            "b1": Tensor(RNG.normal(size=(d_h,)), requires_grad=True),
            "w2": Tensor(RNG.normal(size=(d_h, 2)), requires_grad=True),
            "b2": Tensor(RNG.normal(size=(2,)), requires_grad=True),
        }
        probs = softmax(nets.projection_head(constant(RNG.normal(size=(40, d_h))), p)).value
        assert probs.shape == (40, 2)
        assert np.all(probs >= 0)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)


class TestPositionalEncoding:
    def test_first_row(self):
        enc = nets.positional_encoding(5, 8)
        assert np.allclose(enc[0, 0::2], 0.0)
        assert np.allclose(enc[0, 1::2], 1.0)

    def test_position_one_first_column(self):
        enc = nets.positional_encoding(3, 4)
        assert enc[1, 0] == pytest.approx(np.sin(1.0))
        assert enc[1, 1] == pytest.approx(np.cos(1.0))

    def test_formula_everywhere(self):
        length, d_h = 7, 6
        enc = nets.positional_encoding(length, d_h)
        for l in range(length):
            for i in range(d_h // 2):
                arg = l / 10000 ** (2 * i / d_h)
                assert enc[l, 2 * i] == pytest.approx(np.sin(arg))
                assert enc[l, 2 * i + 1] == pytest.approx(np.cos(arg))

    def test_odd_width_rejected(self):
        with pytest.raises(ValueError):
            nets.positional_encoding(4, 5)


class TestMaskedAttention:
    def test_single_position_reduces_to_value_projection(self):
        d_h, heads = 8, 2
        p = attn_params(d_h, 4)
        p["bo"].value[...] = 0.0
        x = constant(RNG.normal(size=(3, 1, d_h)))
        out, _ = nets.masked_multihead_attention(x, p, heads)
        # with one position the softmax weight is 1, so out = (x Wv + bv) Wo
        v = x.value @ p["wv"].value + p["bv"].value
        assert np.allclose(out.value, v @ p["wo"].value, atol=1e-12)

    def test_equal_scores_average_two_positions(self):
        d_h, heads = 4, 1
        p = attn_params(d_h, 4)
        # zero queries make all scores equal -> row 2 averages v1, v2
        p["wq"].value[...] = 0.0
        p["bq"].value[...] = 0.0
        p["bo"].value[...] = 0.0
        x = constant(RNG.normal(size=(2, 2, d_h)))
        out, _ = nets.masked_multihead_attention(x, p, heads)
        v = x.value @ p["wv"].value + p["bv"].value
        expected_row1 = 0.5 * (v[:, 0] + v[:, 1]) @ p["wo"].value
        assert np.allclose(out.value[:, 1], expected_row1, atol=1e-12)

    def test_incremental_matches_full_recomputation(self):
        d_h, heads, L = 8, 4, 5
        p = attn_params(d_h, 4)
        x = RNG.normal(size=(3, L, d_h))
        full, _ = nets.masked_multihead_attention(constant(x), p, heads)
        kv = None
        for t in range(L):
            step, kv = nets.masked_multihead_attention(
                constant(x[:, t : t + 1]), p, heads, kv
            )
            assert np.max(np.abs(step.value[:, 0] - full.value[:, t])) < 1e-12

    def test_causality(self):
        d_h, heads, L = 6, 2, 4
        p = attn_params(d_h, 4)
        x = RNG.normal(size=(2, L, d_h))
        base, _ = nets.masked_multihead_attention(constant(x), p, heads)
        for j in range(1, L):
            bumped = x.copy()
            bumped[:, j] += RNG.normal(size=d_h)
            out, _ = nets.masked_multihead_attention(constant(bumped), p, heads)
            assert np.allclose(out.value[:, :j], base.value[:, :j], atol=1e-12)
            assert not np.allclose(out.value[:, j], base.value[:, j])

    def test_head_divisibility(self):
        p = attn_params(6, 4)
        with pytest.raises(ValueError):
            nets.masked_multihead_attention(constant(np.zeros((1, 2, 6))), p, 4)

    def test_gradients(self):
        d_h, heads = 4, 2
        p = attn_params(d_h, 4)
        x = RNG.normal(size=(2, 3, d_h))
        w = RNG.normal(size=(2, 3, d_h))

        def loss_value():
            out, _ = nets.masked_multihead_attention(constant(x), p, heads)
            return float((out.value * w).sum())

        zero_grad(p)
        with record():
            out, _ = nets.masked_multihead_attention(constant(x), p, heads)
            backward(asum(mul(constant(w), out)))
        for name in ("wq", "wk", "wv", "wo", "bq", "bo"):
            fd = fd_gradient(loss_value, p[name].value)
            assert rel_err(p[name].grad_array(), fd) < 1e-6, name


class TestTransformerCell:
    def test_output_shape(self):
        p = attn_params(8, 16)
        out, _ = nets.transformer_cell(constant(RNG.normal(size=(3, 5, 8))), p, 2)
        assert out.value.shape == (3, 5, 8)

    def test_zero_weights_reduce_to_norm_composition(self):
        d_h = 6
        p = attn_params(d_h, 8, scale=0.0)
        for nm in ("bq", "bk", "bv", "bo", "ff_b1", "ff_b2"):
            p[nm].value[...] = 0.0
        x = RNG.normal(size=(2, 3, d_h))
        out, _ = nets.transformer_cell(constant(x), p, 2)
        mu = x.mean(-1, keepdims=True)
        z = (x - mu) / np.sqrt((x - mu).var(-1, keepdims=True) + 1e-5)
        mu2 = z.mean(-1, keepdims=True)
        z2 = (z - mu2) / np.sqrt((z - mu2).var(-1, keepdims=True) + 1e-5)
        assert np.allclose(out.value, z2, atol=1e-12)

    def test_causality_through_cell(self):
        p = attn_params(8, 16)
        x = RNG.normal(size=(2, 4, 8))
        base, _ = nets.transformer_cell(constant(x), p, 2)
        for j in range(1, 4):
            bumped = x.copy()
            bumped[:, j] += 1.0
            out, _ = nets.transformer_cell(constant(bumped), p, 2)
            assert np.allclose(out.value[:, :j], base.value[:, :j], atol=1e-12)

    def test_incremental_matches_full(self):
        p = attn_params(8, 16)
        x = RNG.normal(size=(3, 4, 8))
        full, _ = nets.transformer_cell(constant(x), p, 2)
        kv = None
        for t in range(4):
            step, kv = nets.transformer_cell(constant(x[:, t : t + 1]), p, 2, kv)
            assert np.max(np.abs(step.value[:, 0] - full.value[:, t])) < 1e-12
