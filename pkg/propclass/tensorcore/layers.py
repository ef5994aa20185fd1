# -*- coding: utf-8 -*-

"""
propclass.tensorcore.layers
~~~~~~~~~~~~~~~~~~~~~~~~~~~

Multi-head attention, transformer blocks, graph convolution and sinusoidal positional encodings, built on the
tensor operations. Each parameter group registers its tensors in a ParamStore under a dotted prefix.
"""

import numpy as np

from ..exceptions import ConfigError, OddDim, ShapeMismatch
from .tensor import (
    add,
    constant,
    dropout,
    flatten,
    layer_norm,
    matmul,
    relu,
    reshape,
    scale,
    softmax,
    swapaxes,
)

ATTENTION_SCALES = ("heads", "key_dim")


class AttentionParams(object):
    """Per-head query, key and value projections (stacked as heads x h x h) and the output projection."""

    def __init__(self, store, prefix, hidden, heads, bound):
        """Initialize the AttentionParams object.

        :param store: The parameter store to register in.
        :type store: ParamStore
        :param prefix: The dotted name prefix.
        :param hidden: h, the model width.
        :param heads: The number of heads.
        :param bound: The half-width of the uniform initialization for the h-wide inputs. The output projection
            reads heads * h values, so its half-width shrinks by sqrt(heads).
        """
        self.heads = heads
        self.hidden = hidden
        self.query = store.uniform(prefix + ".query", (heads, hidden, hidden), bound)
        self.key = store.uniform(prefix + ".key", (heads, hidden, hidden), bound)
        self.value = store.uniform(prefix + ".value", (heads, hidden, hidden), bound)
        self.output = store.uniform(prefix + ".output", (heads * hidden, hidden), bound / np.sqrt(heads))


class LayerNormParams(object):
    def __init__(self, store, prefix, hidden):
        self.gain = store.ones(prefix + ".gain", (hidden,))
        self.bias = store.zeros(prefix + ".bias", (hidden,))


class FeedForwardParams(object):
    """A two-layer ReLU network h -> ffn_dim -> h."""

    def __init__(self, store, prefix, hidden, ffn_dim, bound):
        self.w1 = store.uniform(prefix + ".w1", (hidden, ffn_dim), bound)
        self.b1 = store.zeros(prefix + ".b1", (ffn_dim,))
        self.w2 = store.uniform(prefix + ".w2", (ffn_dim, hidden), bound * np.sqrt(float(hidden) / ffn_dim))
        self.b2 = store.zeros(prefix + ".b2", (hidden,))


class EncoderBlockParams(object):
    def __init__(self, store, prefix, hidden, heads, ffn_dim, bound):
        self.attention = AttentionParams(store, prefix + ".attn", hidden, heads, bound)
        self.norm1 = LayerNormParams(store, prefix + ".ln1", hidden)
        self.ffn = FeedForwardParams(store, prefix + ".ffn", hidden, ffn_dim, bound)
        self.norm2 = LayerNormParams(store, prefix + ".ln2", hidden)


class DecoderBlockParams(object):
    """Self-attention, cross-attention into a memory, then a feed-forward network, each with residual and norm."""

    def __init__(self, store, prefix, hidden, heads, ffn_dim, bound):
        self.self_attention = AttentionParams(store, prefix + ".self", hidden, heads, bound)
        self.norm1 = LayerNormParams(store, prefix + ".ln1", hidden)
        self.cross_attention = AttentionParams(store, prefix + ".cross", hidden, heads, bound)
        self.norm2 = LayerNormParams(store, prefix + ".ln2", hidden)
        self.ffn = FeedForwardParams(store, prefix + ".ffn", hidden, ffn_dim, bound)
        self.norm3 = LayerNormParams(store, prefix + ".ln3", hidden)


def attention_divisor(scale_mode, heads, hidden):
    """The square root of the score divisor: the head count by default, or the key width."""
    if scale_mode == "heads":
        return np.sqrt(heads)
    if scale_mode == "key_dim":
        return np.sqrt(hidden)
    raise ConfigError("attention_scale", "expected one of {0}".format(", ".join(ATTENTION_SCALES)))


def _split_heads(x, weight):
    # (..., s, h) -> (..., 1, s, h) @ (heads, h, h) -> (..., heads, s, h)
    expanded = reshape(x, x.shape[:-2] + (1,) + x.shape[-2:])
    return matmul(expanded, weight)


def multi_head_attention(queries, keys, values, params, scale_mode="heads", trace=None):
    """Scaled dot-product attention over `params.heads` heads.

    Each head attends with its own h x h projections; head outputs are concatenated along features and
    projected back to h by the output matrix.

    :param queries: (..., s_q, h)
    :type queries: Tensor
    :param keys: (..., s_k, h)
    :type keys: Tensor
    :param values: (..., s_k, h)
    :type values: Tensor
    :param params: The attention parameters.
    :type params: AttentionParams
    :param scale_mode: "heads" divides scores by sqrt(heads), "key_dim" by sqrt(h).
    :param trace: If given, the attention weights (..., heads, s_q, s_k) are appended to it as an array.
    :type trace: list or None
    :raise ShapeMismatch: Raises if keys and values disagree or a width is not h.
    :rtype: Tensor
    """
    if keys.shape != values.shape:
        raise ShapeMismatch("attention", keys.shape, values.shape)
    if queries.shape[-1] != params.hidden or keys.shape[-1] != params.hidden:
        raise ShapeMismatch("attention", queries.shape, keys.shape)
    q = _split_heads(queries, params.query)
    k = _split_heads(keys, params.key)
    v = _split_heads(values, params.value)
    scores = scale(matmul(q, swapaxes(k)), 1.0 / attention_divisor(scale_mode, params.heads, params.hidden))
    weights = softmax(scores)
    if trace is not None:
        trace.append(weights.data.copy())
    heads = swapaxes(matmul(weights, v), -3, -2)
    return matmul(flatten(heads), params.output)


def feed_forward(x, params):
    hidden = relu(add(matmul(x, params.w1), params.b1))
    return add(matmul(hidden, params.w2), params.b2)


def _residual_norm(x, update, norm, rate, train, rng):
    return layer_norm(add(x, dropout(update, rate, train, rng)), norm.gain, norm.bias)


def encoder_block(x, params, rate=0.0, train=False, rng=None, scale_mode="heads", trace=None):
    """Z = LN(X + Drop(MHA(X, X, X))); returns LN(Z + Drop(FFN(Z))).

    :param x: (..., s, h)
    :type params: EncoderBlockParams
    """
    attended = multi_head_attention(x, x, x, params.attention, scale_mode, trace)
    z = _residual_norm(x, attended, params.norm1, rate, train, rng)
    return _residual_norm(z, feed_forward(z, params.ffn), params.norm2, rate, train, rng)


def decoder_block(
    x, memory, params, rate=0.0, train=False, rng=None, scale_mode="heads", trace=None, self_trace=None
):
    """Self-attention over `x`, cross-attention from `x` into `memory`, then a feed-forward network.

    :param x: (s, h)
    :param memory: (m, h)
    :type params: DecoderBlockParams
    :param trace: Receives the cross-attention weights.
    :param self_trace: Receives the self-attention weights.
    """
    attended = multi_head_attention(x, x, x, params.self_attention, scale_mode, self_trace)
    z = _residual_norm(x, attended, params.norm1, rate, train, rng)
    crossed = multi_head_attention(z, memory, memory, params.cross_attention, scale_mode, trace)
    z = _residual_norm(z, crossed, params.norm2, rate, train, rng)
    return _residual_norm(z, feed_forward(z, params.ffn), params.norm3, rate, train, rng)


def normalize_adjacency(adjacency):
    """D^-1/2 (A + I) D^-1/2, with D the row sums of A + I.

    :param adjacency: A square matrix of non-negative weights.
    :type adjacency: numpy.ndarray
    :rtype: numpy.ndarray
    """
    adjacency = np.asarray(adjacency, dtype=np.float64)
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise ShapeMismatch("normalize_adjacency", adjacency.shape, adjacency.shape[::-1])
    looped = adjacency + np.eye(adjacency.shape[0])
    inv_sqrt = 1.0 / np.sqrt(looped.sum(axis=1))
    return looped * inv_sqrt[:, None] * inv_sqrt[None, :]


def gcn_forward(adjacency, features, weights):
    """Applies H <- ReLU(W_hat H W_l) once per layer weight.

    :param adjacency: The (n x n) raw weighted adjacency.
    :type adjacency: numpy.ndarray
    :param features: The (n x h) node features.
    :type features: Tensor
    :param weights: One (h x h) weight per layer.
    :type weights: list(Tensor)
    :rtype: Tensor
    """
    if adjacency.shape[0] != features.shape[0]:
        raise ShapeMismatch("gcn_forward", adjacency.shape, features.shape)
    normalized = constant(normalize_adjacency(adjacency))
    hidden = features
    for weight in weights:
        hidden = relu(matmul(normalized, matmul(hidden, weight)))
    return hidden


def positional_encoding(length, dim):
    """Sinusoidal encodings: sin(pos / 10000^(2i/dim)) at even columns 2i and the cosine at odd columns 2i + 1.

    :param length: The number of positions.
    :param dim: The encoding width. Must be even.
    :raise OddDim: Raises if `dim` is odd.
    :rtype: numpy.ndarray
    """
    if dim % 2:
        raise OddDim(dim)
    position = np.arange(length, dtype=np.float64)[:, None]
    div_term = np.power(10000.0, np.arange(0, dim, 2, dtype=np.float64) / dim)
    encoding = np.zeros((length, dim))
    encoding[:, 0::2] = np.sin(position / div_term)
    encoding[:, 1::2] = np.cos(position / div_term)
    return encoding
