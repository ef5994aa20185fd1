# -*- coding: utf-8 -*-

import numpy as np
import pytest

from propclass.corpus import Vocabulary
from propclass.exceptions import (
    ConfigError,
    IncoherentGiven,
    IncoherentHistory,
    LengthMismatch,
    LevelOutOfRange,
    UnknownCode,
)
from propclass.idgraph import InterGraph, build_graph, collect_topic_stats, sample_neighborhood
from propclass.model import ModelConfig, ProposalClassifier, gradient_check, level_loss, parse_given, truth_path
from propclass.taxonomy import ROOT, STOP, TopicPath, check_topic_path
from propclass.tensorcore import Tensor, normalize_adjacency

from .conftest import make_proposal

MICRO = dict(hidden=8, sie_layers=1, if_layers=1, gcn_layers=1, heads=2, doc_len=8, dropout=0.0)


@pytest.fixture
def corpus():
    return [
        make_proposal("P1", ["F0601", "C09"], keywords=["t1", "t2"], text="mining graph"),
        make_proposal("P2", ["F0602"], keywords=["t2", "t3"], text="deep mining algorithm"),
        make_proposal("P3", ["C09"], keywords=["t1", "t4"], text="protein folding"),
    ]


@pytest.fixture
def model(small_taxonomy, corpus):
    graph = build_graph(collect_topic_stats(corpus, small_taxonomy))
    return ProposalClassifier(small_taxonomy, graph, Vocabulary.build(corpus), ModelConfig(**MICRO), seed=4)


def set_stop_only(model, level):
    model.params["lp.{0}.fc2.weight".format(level)].data[:] = 0.0
    bias = model.params["lp.{0}.fc2.bias".format(level)].data
    bias[:] = -10.0
    bias[0] = 10.0


class TestModelConfig:
    def test_defaults(self):
        config = ModelConfig()
        assert config.hidden == 32
        assert config.ffn_dim == 64

    def test_full_profile(self):
        config = ModelConfig.full_profile(heads=4)
        assert (config.hidden, config.sie_layers, config.if_layers, config.heads, config.doc_len) == (64, 8, 8, 4, 200)

    def test_invalid(self):
        with pytest.raises(ConfigError):
            ModelConfig(hidden=7)
        with pytest.raises(ConfigError):
            ModelConfig(threshold=1.0)
        with pytest.raises(ConfigError):
            ModelConfig(attention_scale="none")
        with pytest.raises(ConfigError):
            ModelConfig.from_dict(dict(layers=3))

    def test_dict_round_trip(self):
        config = ModelConfig(**MICRO)
        assert ModelConfig.from_dict(config.to_dict()) == config

    @pytest.mark.parametrize(
        "name, use_graph, hierarchical_sie",
        [("full", True, True), ("no-graph", False, True), ("no-sie", True, False), ("no-all", False, False)],
    )
    def test_ablations(self, name, use_graph, hierarchical_sie):
        config = ModelConfig.ablation(name, **MICRO)
        assert (config.use_graph, config.hierarchical_sie) == (use_graph, hierarchical_sie)
        assert config.hidden == 8

    def test_unknown_ablation(self):
        with pytest.raises(ConfigError):
            ModelConfig.ablation("no-lp")


class TestParseGiven:
    def test_prefix(self, small_taxonomy):
        assert parse_given("F,C,F06", small_taxonomy) == TopicPath([[ROOT], ["C", "F"], ["F06"]])

    def test_ancestors_are_implied(self, small_taxonomy):
        assert parse_given("F0601", small_taxonomy) == TopicPath([[ROOT], ["F"], ["F06"], ["F0601"]])

    def test_branch_may_end_early(self, small_taxonomy):
        assert parse_given("F,C09", small_taxonomy) == TopicPath([[ROOT], ["C", "F"], ["C09"]])

    def test_repeated_and_spaced(self, small_taxonomy):
        assert parse_given(" F06, F ,F06", small_taxonomy) == TopicPath([[ROOT], ["F"], ["F06"]])

    def test_unknown(self, small_taxonomy):
        with pytest.raises(UnknownCode) as excinfo:
            parse_given("F,Z9", small_taxonomy)
        assert excinfo.value.exit_code == 3

    @pytest.mark.parametrize("text", ["F,<stop>", "<root>", " , "])
    def test_markers_and_empty(self, small_taxonomy, text):
        with pytest.raises(IncoherentGiven) as excinfo:
            parse_given(text, small_taxonomy)
        assert excinfo.value.exit_code == 3


class TestComponents:
    def test_parameter_groups(self, model):
        assert list(model.params.groups()) == ["embed", "sie", "ike", "if", "lp"]
        assert model.params["lp.3.fc2.weight"].shape == (8, 3)
        assert model.params["ike.node"].shape == (7, 8)

    def test_same_seed_same_parameters(self, model, small_taxonomy, corpus):
        again = ProposalClassifier(small_taxonomy, model.graph, model.vocab, ModelConfig(**MICRO), seed=4)
        for name in model.params.names():
            assert np.array_equal(model.params[name].data, again.params[name].data)

    def test_vocab_size_mismatch(self, small_taxonomy, corpus, model):
        with pytest.raises(ConfigError):
            ProposalClassifier(small_taxonomy, model.graph, model.vocab, ModelConfig(vocab_size=500, **MICRO))

    def test_sie_shape(self, model, corpus):
        documents = model.sie_forward(model.tokenize(corpus[0]))
        assert documents.shape == (4, 8)

    def test_root_history_is_root_embedding(self, model):
        encoded = model.ike_forward(TopicPath([[ROOT]]))
        assert encoded.shape == (1, 8)
        assert np.array_equal(encoded.data[0], model.params["ike.node"].data[0])

    def test_history_matches_components(self, model):
        encoded = model.ike_forward(TopicPath([[ROOT], ["C", "F"]]))
        sampled = sample_neighborhood(model.graph, ["C", "F"], 1)
        nodes = model.params["ike.node"].data
        hidden = nodes[[model.taxonomy.get(code).id for code in sampled.members]]
        for weight in model.gcn_weights:
            hidden = np.maximum(normalize_adjacency(sampled.adjacency) @ hidden @ weight.data, 0.0)
        expected = hidden[sampled.central_index].mean(axis=0)
        assert np.max(np.abs(encoded.data[1] - expected)) <= 1e-12

    def test_isolated_node(self, model, small_taxonomy):
        model.graph = InterGraph.from_dict(dict(alpha=0.1, beta=0.1, nodes=[d.code for d in small_taxonomy], edges=[]))
        model._neighborhoods = {}
        encoded = model.ike_forward(TopicPath([[ROOT], ["F"]]))
        own = model.params["ike.node"].data[small_taxonomy.get("F").id]
        assert np.allclose(encoded.data[1], np.maximum(own @ model.gcn_weights[0].data, 0.0))

    def test_history_without_graph(self, small_taxonomy, corpus, model):
        config = ModelConfig(use_graph=False, **MICRO)
        plain = ProposalClassifier(small_taxonomy, model.graph, model.vocab, config, seed=4)
        encoded = plain.ike_forward(TopicPath([[ROOT], ["C", "F"]]))
        nodes = plain.params["ike.node"].data
        expected = (nodes[small_taxonomy.get("C").id] + nodes[small_taxonomy.get("F").id]) / 2.0
        assert np.allclose(encoded.data[1], expected)
        assert plain.gcn_weights == []
        assert not [name for name in plain.params.names() if name.startswith("ike.gcn.")]

    def test_flat_extractor(self, small_taxonomy, model, corpus):
        flat = ProposalClassifier(small_taxonomy, model.graph, model.vocab, ModelConfig.ablation("no-sie", **MICRO))
        documents = flat.sie_forward(flat.tokenize(corpus[0]))
        assert documents.shape == (4 * 8, 8)
        names = flat.params.names()
        assert "sie.0.flat.attn.query" in names
        assert "embed.type" not in names
        assert not [name for name in names if ".fuse." in name or ".word." in name]

    def test_heads_start_at_label_prior(self, model, small_taxonomy):
        for level in range(1, small_taxonomy.depth + 1):
            width = small_taxonomy.level_size(level) + 1
            bias = model.params["lp.{0}.fc2.bias".format(level)].data
            assert np.allclose(1.0 / (1.0 + np.exp(-bias)), 1.0 / width)

    def test_fuse_initialization_scales_with_width(self, model):
        fuse = model.params["sie.0.fuse.weight"].data
        assert fuse.shape == (8 * 8, 8)
        assert np.abs(fuse).max() <= 1.0 / np.sqrt(64)
        assert np.abs(model.params["sie.0.word.attn.output"].data).max() <= 1.0 / np.sqrt(2 * 8)

    def test_incoherent_history(self, model):
        with pytest.raises(IncoherentHistory):
            model.ike_forward(TopicPath([[ROOT], [STOP]]))
        with pytest.raises(IncoherentHistory):
            model.ike_forward(TopicPath([[ROOT], ["F06"]]))

    def test_zero_logits_select_everything(self, model, corpus):
        model.params["lp.1.fc2.weight"].data[:] = 0.0
        model.params["lp.1.fc2.bias"].data[:] = 0.0
        documents = model.sie_forward(model.tokenize(corpus[0]))
        step = model.lp_forward(model.if_forward(model.ike_forward(TopicPath([[ROOT]])), documents), 1)
        assert step.probs.data.tolist() == [0.5, 0.5, 0.5]
        assert step.selected == frozenset([STOP, "C", "F"])

    def test_level_out_of_range(self, model):
        with pytest.raises(LevelOutOfRange):
            model.lp_forward(Tensor(np.zeros((1, 8))), 4)

    def test_level_targets(self, model):
        assert model.level_targets(2, {"F06", STOP}).tolist() == [1.0, 0.0, 1.0]


class TestLoss:
    def test_level_loss_hand_value(self):
        loss = level_loss(Tensor([0.9, 0.2, 0.5]), [1, 0, 1])
        assert loss.item() == pytest.approx(1.0217, abs=1e-4)

    def test_level_loss_length(self):
        with pytest.raises(LengthMismatch):
            level_loss(Tensor([0.5, 0.5]), [1, 0, 1])

    def test_single_level_truth_sums_two_levels(self, model, small_taxonomy):
        proposal = make_proposal("P9", ["F"])
        truth = truth_path(proposal, small_taxonomy)
        assert truth.to_list() == [["F"], [STOP]]
        tokenized = model.tokenize(proposal)
        documents = model.sie_forward(tokenized)
        expected = 0.0
        for level in (1, 2):
            state = model.if_forward(model.ike_forward(truth.prefix(level)), documents)
            step = model.lp_forward(state, level)
            expected += level_loss(step.probs, model.level_targets(level, truth[level])).item()
        assert model.forward_train(tokenized, truth, train=False).item() == pytest.approx(expected, abs=1e-12)


class TestPredict:
    def test_forced_stop_predicts_empty_path(self, model, corpus):
        set_stop_only(model, 1)
        prediction = model.predict(model.tokenize(corpus[0]))
        assert prediction.path == TopicPath.empty()
        assert len(prediction.steps) == 1

    def test_stop_with_labels_ends_path(self, model, corpus):
        model.params["lp.1.fc2.weight"].data[:] = 0.0
        model.params["lp.1.fc2.bias"].data[:] = [10.0, -10.0, 10.0]
        prediction = model.predict(model.tokenize(corpus[0]))
        assert prediction.path == TopicPath([[ROOT], ["F", STOP]])
        assert len(prediction.steps) == 1

    def test_stop_after_given_prefix(self, model, corpus, small_taxonomy):
        set_stop_only(model, 2)
        prediction = model.predict(model.tokenize(corpus[0]), given=parse_given("F", small_taxonomy))
        assert prediction.path == TopicPath([[ROOT], ["F"], [STOP]])

    def test_full_depth_given(self, model, corpus, small_taxonomy):
        given = parse_given("F,F06,F0601", small_taxonomy)
        prediction = model.predict(model.tokenize(corpus[0]), given=given)
        assert prediction.path == given
        assert prediction.steps == []

    def test_given_prefix_is_kept(self, model, corpus, small_taxonomy):
        given = parse_given("C", small_taxonomy)
        prediction = model.predict(model.tokenize(corpus[0]), given=given)
        assert prediction.path.prefix(2) == given
        assert prediction.steps[0].level == 2

    def test_coherent_and_bounded(self, model, corpus, small_taxonomy):
        for proposal in corpus:
            prediction = model.predict(model.tokenize(proposal), trace=True)
            check_topic_path(prediction.path, small_taxonomy)
            assert prediction.path.depth <= small_taxonomy.depth + 1
            for step in prediction.steps:
                assert np.all((step.probs.data > 0.0) & (step.probs.data < 1.0))
                for weights in step.document_attention + step.history_attention:
                    assert np.all(np.abs(weights.sum(axis=-1) - 1.0) <= 1e-10)

    def test_attention_dump(self, model, corpus):
        data = model.predict(model.tokenize(corpus[0]), trace=True).to_dict(dump_attention=True)
        first = data["attention"]["steps"][0]
        assert first["level"] == 1
        assert np.array(first["document"]).shape == (1, 1, 4)
        assert np.array(first["history"]).shape == (1, 1, 1)
        assert "attention" not in model.predict(model.tokenize(corpus[0])).to_dict()

    def test_parallel_matches_sequential(self, model, corpus):
        tokenized = [model.tokenize(p) for p in corpus] * 3
        sequential = model.predict_many(tokenized, workers=1)
        parallel = model.predict_many(tokenized, workers=3)
        assert [p.id for p in parallel] == [t.id for t in tokenized]
        for a, b in zip(sequential, parallel):
            assert a.path == b.path
            assert [s.probs.data.tolist() for s in a.steps] == [s.probs.data.tolist() for s in b.steps]
        assert all(tensor.requires_grad for _, tensor in model.params.items())

    def test_snapshot_has_own_neighborhood_cache(self, model):
        model.neighborhood(["F"])
        clone = model.snapshot()
        assert clone._neighborhoods is not model._neighborhoods
        clone.neighborhood(["C"])
        assert frozenset(["C"]) not in model._neighborhoods
        assert frozenset(["F"]) in clone._neighborhoods

    @pytest.mark.parametrize("name", ["full", "no-graph", "no-sie", "no-all"])
    def test_ablations_train_and_predict(self, small_taxonomy, model, corpus, name):
        variant = ProposalClassifier(small_taxonomy, model.graph, model.vocab, ModelConfig.ablation(name, **MICRO))
        tokenized = variant.tokenize(corpus[0])
        loss = variant.forward_train(tokenized, truth_path(corpus[0], small_taxonomy), train=False)
        assert np.isfinite(loss.item())
        check_topic_path(variant.predict(tokenized).path, small_taxonomy)

    def test_givens_length(self, model, corpus):
        with pytest.raises(LengthMismatch):
            model.predict_many([model.tokenize(corpus[0])], givens=[None, None])


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path, model, corpus):
        path = str(tmp_path / "model.ckpt")
        model.save(path, dict(step=3))
        loaded, meta = ProposalClassifier.load(path)
        assert meta["step"] == 3
        assert loaded.config == model.config
        for name, tensor in model.params.items():
            assert loaded.params[name].data.tobytes() == tensor.data.tobytes()
        for proposal in corpus:
            a = model.predict(model.tokenize(proposal)).to_dict()
            b = loaded.predict(loaded.tokenize(proposal)).to_dict()
            assert a == b


class TestGradientCheck:
    def test_micro_model(self):
        samples = gradient_check(ModelConfig(**MICRO), seed=1, samples=60)
        groups = {sample.name.split(".", 1)[0] for sample in samples}
        assert groups == {"embed", "sie", "ike", "if", "lp"}
        assert samples[0].error <= 1e-4
