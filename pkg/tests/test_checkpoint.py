# -*- coding: utf-8 -*-

import io
import struct

import numpy as np
import pytest

from propclass.exceptions import ConfigError, GradCheckFailed, MissingGrad, ParseError, ShapeMismatch
from propclass.serializers import json_serialize
from propclass.tensorcore import ParamStore, constant, load_checkpoint, mul, save_checkpoint, total
from propclass.tensorcore.checkpoint import MAGIC
from propclass.tensorcore.gradcheck import check_gradients, relative_error, sample_indices


def make_store(seed=0):
    store = ParamStore(np.random.default_rng(seed))
    store.uniform("sie.0.weight", (3, 4), 0.5)
    store.uniform("lp.1.weight", (4, 2), 0.5)
    store.zeros("lp.1.bias", (2,))
    store.uniform("ike.node", (5, 4), 0.5)
    return store


class TestParamStore:
    def test_same_seed_same_values(self):
        first, second = make_store(3), make_store(3)
        for name in first.names():
            assert np.array_equal(first[name].data, second[name].data)

    def test_groups_keep_registration_order(self):
        groups = make_store().groups()
        assert list(groups) == ["sie", "lp", "ike"]
        assert groups["lp"] == ["lp.1.weight", "lp.1.bias"]

    def test_full(self):
        store = ParamStore()
        assert store.full("lp.1.bias", (3,), -0.5).data.tolist() == [-0.5, -0.5, -0.5]
        assert store["lp.1.bias"].requires_grad

    def test_duplicate_name(self):
        store = make_store()
        with pytest.raises(ConfigError):
            store.zeros("lp.1.bias", (2,))

    def test_load_state_dict_checks(self):
        store = make_store()
        state = store.state_dict()
        state.pop("ike.node")
        with pytest.raises(ConfigError):
            store.load_state_dict(state)
        state = store.state_dict()
        state["lp.1.bias"] = np.zeros(3)
        with pytest.raises(ShapeMismatch):
            store.load_state_dict(state)

    def test_missing_grad(self):
        with pytest.raises(MissingGrad):
            make_store().grad("lp.1.bias")


class TestCheckpoint:
    def test_round_trip_is_bit_identical(self, tmp_path):
        path = str(tmp_path / "model.ckpt")
        store = make_store(5)
        save_checkpoint(path, store, dict(step=12, note="ok"))
        arrays, meta = load_checkpoint(path)
        assert meta == dict(step=12, note="ok")
        assert sorted(arrays) == store.names()
        for name, tensor in store.items():
            assert arrays[name].tobytes() == tensor.data.tobytes()
            assert arrays[name].shape == tensor.shape

    def test_load_into_fresh_store(self, tmp_path):
        path = str(tmp_path / "model.ckpt")
        save_checkpoint(path, make_store(5))
        fresh = make_store(9)
        fresh.load_state_dict(load_checkpoint(path)[0])
        assert np.array_equal(fresh["ike.node"].data, make_store(5)["ike.node"].data)

    def test_layout(self, tmp_path):
        path = str(tmp_path / "model.ckpt")
        store = ParamStore()
        store.add("w", np.array([1.5, -2.0]))
        save_checkpoint(path, store)
        with io.open(path, "rb") as f:
            payload = f.read()
        assert payload[:8] == MAGIC
        (header_len,) = struct.unpack("<Q", payload[8:16])
        assert payload[16 + header_len:] == np.array([1.5, -2.0], dtype="<f8").tobytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 16)
        with pytest.raises(ParseError):
            load_checkpoint(str(path))

    def test_truncated(self, tmp_path):
        path = str(tmp_path / "model.ckpt")
        save_checkpoint(path, make_store())
        with io.open(path, "rb") as f:
            payload = f.read()
        with io.open(path, "wb") as f:
            f.write(payload[:-8])
        with pytest.raises(ParseError):
            load_checkpoint(path)

    def test_unsupported_version(self, tmp_path):
        header = json_serialize(dict(version=99, params=[], meta={})).encode("utf-8")
        path = tmp_path / "future.ckpt"
        path.write_bytes(MAGIC + struct.pack("<Q", len(header)) + header)
        with pytest.raises(ParseError):
            load_checkpoint(str(path))


class TestGradCheck:
    def test_relative_error(self):
        assert relative_error(1.0, 1.0) == 0.0
        assert relative_error(2.0, 1.0) == pytest.approx(0.5)
        assert relative_error(0.0, 1e-6) == pytest.approx(1e-2)

    def test_samples_every_group_equally(self):
        store = make_store()
        picks = sample_indices(store, 9, np.random.default_rng(0))
        groups = [name.split(".", 1)[0] for name, _ in picks]
        assert sorted(set(groups)) == ["ike", "lp", "sie"]
        assert groups.count("ike") == groups.count("lp") == groups.count("sie") == 3
        assert len(set((name, tuple(index)) for name, index in picks)) == len(picks)

    def test_passes_on_correct_gradients(self):
        store = make_store()

        def loss_fn():
            hidden = mul(store["sie.0.weight"], store["sie.0.weight"])
            return total(hidden) + total(mul(store["lp.1.weight"], 2.0)) + total(store["ike.node"]) + total(
                store["lp.1.bias"]
            )

        samples = check_gradients(loss_fn, store, count=30, rng=np.random.default_rng(1))
        assert len(samples) == 30
        assert samples[0].error <= 1e-4
        assert samples == sorted(samples, key=lambda s: s.error, reverse=True)

    def test_fails_on_wrong_gradients(self):
        store = ParamStore(np.random.default_rng(2))
        w = store.uniform("w.only", (4,), 1.0)

        def loss_fn():
            # The constant copy hides half of the dependency from the tape.
            return total(mul(w, constant(w.data.copy())))

        with pytest.raises(GradCheckFailed) as excinfo:
            check_gradients(loss_fn, store, count=4)
        assert excinfo.value.name.startswith("w.only")
        assert excinfo.value.exit_code == 4
