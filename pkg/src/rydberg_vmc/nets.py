"""Network building blocks: GRU cell, projection head, positional encoding,
masked multi-head self-attention, and the transformer cell.

All functions take and return :class:`~rydberg_vmc.autodiff.Tensor` values and
are differentiable when executed under a recording tape. Parameters arrive as
flat dicts of tensors keyed by short names (``w_ir``, ``wq``, ``ff_w1`` ...);
the model classes own naming and initialization.
"""

from __future__ import annotations

import numpy as np

from .autodiff import (
    Tensor,
    add,
    affine,
    constant,
    layer_norm,
    matmul,
    mul,
    relu,
    reshape,
    scale,
    shift,
    sigmoid,
    softmax,
    tanh,
    transpose,
)

__all__ = [
    "gru_step",
    "projection_head",
    "positional_encoding",
    "masked_multihead_attention",
    "transformer_cell",
    "MASK_NEG",
]

# Finite stand-in for -inf in attention masks; softmax max-subtraction maps it
# to an exact zero weight.
MASK_NEG = -1e30


def gru_step(x: Tensor, hprev: Tensor, p: dict) -> Tensor:
    """One gated-recurrent-unit update.

    r = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
    z = sigmoid(x W_iz + b_iz + h W_hz + b_hz)
    n = tanh(x W_in + b_in + r * (h W_hn + b_hn))
    h' = (1 - z) * n + z * h
    """
    r = sigmoid(add(affine(x, p["w_ir"], p["b_ir"]), affine(hprev, p["w_hr"], p["b_hr"])))
    z = sigmoid(add(affine(x, p["w_iz"], p["b_iz"]), affine(hprev, p["w_hz"], p["b_hz"])))
    n = tanh(
        add(affine(x, p["w_in"], p["b_in"]), mul(r, affine(hprev, p["w_hn"], p["b_hn"])))
    )
    one_minus_z = shift(scale(z, -1.0), 1.0)
    return add(mul(one_minus_z, n), mul(z, hprev))


def projection_head(h: Tensor, p: dict) -> Tensor:
    """Two fully connected layers (ReLU between) producing category logits."""
    return affine(relu(affine(h, p["w1"], p["b1"])), p["w2"], p["b2"])


def positional_encoding(length: int, d_hidden: int) -> np.ndarray:
    """Sinusoidal position matrix of shape (length, d_hidden).

    P(l, 2i) = sin(l / 10000^(2i/d_hidden)), P(l, 2i+1) = cos(l / 10000^(2i/d_hidden)).
    """
    if length < 1:
        raise ValueError("sequence length must be >= 1")
    if d_hidden % 2:
        raise ValueError("d_hidden must be even for the sin/cos pairing")
    pos = np.arange(length, dtype=np.float64)[:, None]
    freq = 10000.0 ** (-np.arange(0, d_hidden, 2, dtype=np.float64) / d_hidden)
    arg = pos * freq
    enc = np.empty((length, d_hidden), dtype=np.float64)
    enc[:, 0::2] = np.sin(arg)
    enc[:, 1::2] = np.cos(arg)
    return enc


def _causal_mask(n_new: int, n_prefix: int) -> np.ndarray:
    """(n_new, n_prefix + n_new) additive mask: query i sees keys j <= i + n_prefix."""
    total = n_prefix + n_new
    i = np.arange(n_new)[:, None]
    j = np.arange(total)[None, :]
    return np.where(j <= i + n_prefix, 0.0, MASK_NEG)


def masked_multihead_attention(
    x: Tensor,
    p: dict,
    n_heads: int,
    prefix_kv: tuple[np.ndarray, np.ndarray] | None = None,
):
    """Causally masked multi-head self-attention.

    ``x`` holds the newest positions, shape (B, L_new, d_hidden). With
    ``prefix_kv = (K, V)`` of shape (B, heads, L_prefix, d_head) from earlier
    positions, the new positions attend to the prefix and to themselves
    causally, reproducing a full-sequence pass over prefix + new.

    Returns ``(out, (K_all, V_all))`` where the K/V arrays are plain numpy
    caches covering all positions seen so far.
    """
    n_batch, n_new, d_hidden = x.value.shape
    if d_hidden % n_heads:
        raise ValueError(f"d_hidden {d_hidden} not divisible by {n_heads} heads")
    d_head = d_hidden // n_heads

    def split_heads(t):
        t = reshape(t, (n_batch, n_new, n_heads, d_head))
        return transpose(t, (0, 2, 1, 3))  # (B, h, L_new, e)

    q = split_heads(affine(x, p["wq"], p["bq"]))
    k = split_heads(affine(x, p["wk"], p["bk"]))
    v = split_heads(affine(x, p["wv"], p["bv"]))

    n_prefix = 0
    if prefix_kv is not None:
        k_pre, v_pre = prefix_kv
        n_prefix = k_pre.shape[2]
        k_all = np.concatenate([k_pre, k.value], axis=2)
        v_all = np.concatenate([v_pre, v.value], axis=2)
        # Cached prefixes are only used in recompute passes without a tape,
        # so treating them as constants loses no gradient information.
        k, v = constant(k_all), constant(v_all)

    scores = scale(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(d_head))
    scores = add(scores, constant(_causal_mask(n_new, n_prefix)))
    weights = softmax(scores, axis=-1)
    ctx = matmul(weights, v)  # (B, h, L_new, e)
    ctx = reshape(transpose(ctx, (0, 2, 1, 3)), (n_batch, n_new, d_hidden))
    out = affine(ctx, p["wo"], p["bo"])
    return out, (k.value, v.value)


def transformer_cell(
    x: Tensor,
    p: dict,
    n_heads: int,
    prefix_kv: tuple[np.ndarray, np.ndarray] | None = None,
):
    """Attention + add&norm + two feed-forward layers + add&norm.

    Z = norm1(X + Attention(X)); Y = norm2(Z + FF(Z)) with
    FF(Z) = relu(Z W1 + b1) W2 + b2.
    """
    attn, kv = masked_multihead_attention(x, p, n_heads, prefix_kv)
    z = layer_norm(add(x, attn), p["norm1_g"], p["norm1_b"])
    ff = affine(relu(affine(z, p["ff_w1"], p["ff_b1"])), p["ff_w2"], p["ff_b2"])
    y = layer_norm(add(z, ff), p["norm2_g"], p["norm2_b"])
    return y, kv
