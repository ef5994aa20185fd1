# -*- coding: utf-8 -*-

import numpy as np
import pytest

from propclass.exceptions import ConfigError, OddDim, ShapeMismatch
from propclass.tensorcore import (
    AttentionParams,
    DecoderBlockParams,
    EncoderBlockParams,
    ParamStore,
    Tensor,
    decoder_block,
    encoder_block,
    gcn_forward,
    multi_head_attention,
    normalize_adjacency,
    positional_encoding,
    total,
)
from propclass.tensorcore.gradcheck import check_gradients


def brute_force_attention(queries, keys, values, params, divisor):
    heads = []
    for i in range(params.heads):
        q = queries @ params.query.data[i]
        k = keys @ params.key.data[i]
        v = values @ params.value.data[i]
        out = np.zeros_like(q)
        for row in range(q.shape[0]):
            scores = np.array([q[row].dot(k[col]) for col in range(k.shape[0])]) / divisor
            weights = np.exp(scores - scores.max())
            weights /= weights.sum()
            out[row] = sum(weights[col] * v[col] for col in range(v.shape[0]))
        heads.append(out)
    return np.concatenate(heads, axis=1) @ params.output.data


class TestAttention:
    def test_uniform_attention_averages_values(self):
        store = ParamStore()
        params = AttentionParams(store, "attn", 2, 1, 0.5)
        params.query.data[:] = 0.0
        params.key.data[:] = 0.0
        params.value.data[:] = np.eye(2)
        params.output.data[:] = np.eye(2)
        values = Tensor([[1.0, 2.0], [3.0, 6.0]])
        out = multi_head_attention(Tensor(np.ones((3, 2))), values, values, params)
        assert np.allclose(out.data, [[2.0, 4.0]] * 3)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        store = ParamStore(rng)
        params = AttentionParams(store, "attn", 4, 2, 0.5)
        queries, keys = rng.normal(size=(3, 4)), rng.normal(size=(5, 4))
        out = multi_head_attention(Tensor(queries), Tensor(keys), Tensor(keys), params)
        expected = brute_force_attention(queries, keys, keys, params, np.sqrt(2))
        assert np.max(np.abs(out.data - expected)) <= 1e-12

    def test_key_dim_scale(self):
        rng = np.random.default_rng(5)
        params = AttentionParams(ParamStore(rng), "attn", 4, 2, 0.5)
        x = rng.normal(size=(3, 4))
        out = multi_head_attention(Tensor(x), Tensor(x), Tensor(x), params, scale_mode="key_dim")
        assert np.max(np.abs(out.data - brute_force_attention(x, x, x, params, 2.0))) <= 1e-12
        with pytest.raises(ConfigError):
            multi_head_attention(Tensor(x), Tensor(x), Tensor(x), params, scale_mode="none")

    def test_batched_rows_are_independent(self):
        rng = np.random.default_rng(6)
        params = AttentionParams(ParamStore(rng), "attn", 4, 2, 0.5)
        x = rng.normal(size=(3, 5, 4))
        out = multi_head_attention(Tensor(x), Tensor(x), Tensor(x), params)
        for batch in range(3):
            expected = brute_force_attention(x[batch], x[batch], x[batch], params, np.sqrt(2))
            assert np.max(np.abs(out.data[batch] - expected)) <= 1e-12

    def test_trace_rows_sum_to_one(self):
        rng = np.random.default_rng(7)
        params = AttentionParams(ParamStore(rng), "attn", 4, 2, 0.5)
        trace = []
        multi_head_attention(Tensor(rng.normal(size=(3, 4))), Tensor(rng.normal(size=(6, 4))),
                             Tensor(rng.normal(size=(6, 4))), params, trace=trace)
        assert trace[0].shape == (2, 3, 6)
        assert np.all(np.abs(trace[0].sum(axis=-1) - 1.0) <= 1e-10)

    def test_shape_errors(self):
        params = AttentionParams(ParamStore(), "attn", 4, 2, 0.5)
        with pytest.raises(ShapeMismatch):
            multi_head_attention(Tensor(np.ones((3, 4))), Tensor(np.ones((2, 4))), Tensor(np.ones((3, 4))), params)
        with pytest.raises(ShapeMismatch):
            multi_head_attention(Tensor(np.ones((3, 3))), Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))), params)


class TestBlocks:
    def test_encoder_keeps_shape_and_normalizes(self):
        store = ParamStore(np.random.default_rng(1))
        params = EncoderBlockParams(store, "enc", 8, 2, 16, 0.3)
        out = encoder_block(Tensor(np.random.default_rng(2).normal(size=(4, 8))), params)
        assert out.shape == (4, 8)
        assert np.allclose(out.data.mean(axis=-1), 0.0, atol=1e-10)

    def test_encoder_is_deterministic_without_dropout(self):
        store = ParamStore(np.random.default_rng(1))
        params = EncoderBlockParams(store, "enc", 8, 2, 16, 0.3)
        x = Tensor(np.random.default_rng(2).normal(size=(4, 8)))
        first = encoder_block(x, params, rate=0.5, train=False)
        second = encoder_block(x, params, rate=0.5, train=False)
        assert np.array_equal(first.data, second.data)

    def test_encoder_gradients(self):
        store = ParamStore(np.random.default_rng(3))
        params = EncoderBlockParams(store, "enc", 4, 2, 8, 0.5)
        x = Tensor(np.random.default_rng(4).normal(size=(3, 4)))
        weights = np.random.default_rng(5).normal(size=(3, 4))

        def loss_fn():
            return total(encoder_block(x, params) * weights)

        samples = check_gradients(loss_fn, store, count=60, rng=np.random.default_rng(0), tolerance=1e-5)
        assert samples[0].error <= 1e-5

    def test_decoder_gradients_and_traces(self):
        store = ParamStore(np.random.default_rng(6))
        params = DecoderBlockParams(store, "dec", 4, 2, 8, 0.5)
        x = Tensor(np.random.default_rng(7).normal(size=(2, 4)))
        memory = Tensor(np.random.default_rng(8).normal(size=(4, 4)))
        weights = np.random.default_rng(9).normal(size=(2, 4))
        cross, history = [], []
        out = decoder_block(x, memory, params, trace=cross, self_trace=history)
        assert out.shape == (2, 4)
        assert cross[0].shape == (2, 2, 4)
        assert history[0].shape == (2, 2, 2)

        def loss_fn():
            return total(decoder_block(x, memory, params) * weights)

        check_gradients(loss_fn, store, count=60, rng=np.random.default_rng(0), tolerance=1e-5)


class TestGraphConvolution:
    def test_isolated_nodes(self):
        rng = np.random.default_rng(1)
        features, weight = rng.normal(size=(2, 3)), rng.normal(size=(3, 3))
        out = gcn_forward(np.zeros((2, 2)), Tensor(features), [Tensor(weight)])
        assert np.allclose(out.data, np.maximum(features @ weight, 0.0))

    def test_normalization_by_hand(self):
        adjacency = np.array([[0.0, 0.5, 0.0, 0.0], [0.2, 0.0, 0.3, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.4, 0.0]])
        degree = [1.0 + sum(row) for row in adjacency]
        expected = np.zeros((4, 4))
        for i in range(4):
            for j in range(4):
                value = adjacency[i][j] + (1.0 if i == j else 0.0)
                expected[i][j] = value / np.sqrt(degree[i] * degree[j])
        assert np.max(np.abs(normalize_adjacency(adjacency) - expected)) <= 1e-12

    def test_two_layers_by_hand(self):
        rng = np.random.default_rng(2)
        adjacency = np.abs(rng.normal(size=(4, 4)))
        np.fill_diagonal(adjacency, 0.0)
        features = rng.normal(size=(4, 3))
        weights = [rng.normal(size=(3, 3)) for _ in range(2)]
        normalized = normalize_adjacency(adjacency)
        expected = features
        for weight in weights:
            expected = np.maximum(normalized @ expected @ weight, 0.0)
        out = gcn_forward(adjacency, Tensor(features), [Tensor(w) for w in weights])
        assert np.max(np.abs(out.data - expected)) <= 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            gcn_forward(np.zeros((3, 3)), Tensor(np.ones((2, 2))), [])


class TestPositionalEncoding:
    def test_values(self):
        encoding = positional_encoding(5, 6)
        assert encoding.shape == (5, 6)
        assert encoding[0].tolist() == [0.0, 1.0, 0.0, 1.0, 0.0, 1.0]
        for pos in range(5):
            for i in range(3):
                angle = pos / 10000.0 ** (2.0 * i / 6)
                assert encoding[pos, 2 * i] == pytest.approx(np.sin(angle), abs=1e-12)
                assert encoding[pos, 2 * i + 1] == pytest.approx(np.cos(angle), abs=1e-12)

    def test_odd_dimension(self):
        with pytest.raises(OddDim):
            positional_encoding(4, 5)
