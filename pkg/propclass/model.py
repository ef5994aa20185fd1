# -*- coding: utf-8 -*-

"""
propclass.model
~~~~~~~~~~~~~~~

The proposal classifier. A semantic extractor encodes the typed documents of a proposal; a graph extractor
encodes the label sets predicted so far over the interdisciplinary graph; a fusion stack lets the label history
attend to the documents; and a per-level head scores every discipline of the next level plus a stop slot.
"""

import collections
import concurrent.futures
import copy
import logging
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import runs
from .corpus import DOCUMENT_TYPES, RESERVED, CorpusConfig, Vocabulary, generate_corpus, tokenize
from .exceptions import (
    ConfigError,
    IncoherentGiven,
    IncoherentHistory,
    LengthMismatch,
    LevelOutOfRange,
    ShapeMismatch,
)
from .idgraph import InterGraph, build_graph, collect_topic_stats, sample_neighborhood
from .taxonomy import (
    ROOT,
    ROOT_ID,
    STOP,
    TopicPath,
    code_prefix,
    encode_topic_path,
    load_taxonomy,
    parent_code,
    synthetic_taxonomy,
)
from .tensorcore import (
    DecoderBlockParams,
    EncoderBlockParams,
    ParamStore,
    add,
    binary_cross_entropy,
    concat,
    constant,
    decoder_block,
    embedding_gather,
    encoder_block,
    flatten,
    gcn_forward,
    load_checkpoint,
    matmul,
    mean_pool,
    positional_encoding,
    relu,
    reshape,
    save_checkpoint,
    sigmoid,
)
from .tensorcore.gradcheck import check_gradients
from .tensorcore.layers import ATTENTION_SCALES

log = logging.getLogger(__name__)

DEFAULT_EPS = 1e-12

COMPONENTS = ("embed", "sie", "ike", "if", "lp")

ABLATIONS = collections.OrderedDict(
    [
        ("full", {}),
        ("no-graph", dict(use_graph=False)),
        ("no-sie", dict(hierarchical_sie=False)),
        ("no-all", dict(use_graph=False, hierarchical_sie=False)),
    ]
)


@dataclass
class ModelConfig(object):
    """Model hyperparameters. The defaults are the desk-scale profile; see `full_profile()` for the full one."""

    hidden: int = 32
    sie_layers: int = 2
    if_layers: int = 2
    gcn_layers: int = 1
    heads: int = 4
    doc_len: int = 32
    vocab_size: int = 0
    dropout: float = 0.2
    threshold: float = 0.5
    ffn_dim: int = 0
    attention_scale: str = "heads"
    use_graph: bool = True
    hierarchical_sie: bool = True
    coherence_filter: bool = True

    def __post_init__(self):
        if not self.ffn_dim:
            self.ffn_dim = 2 * self.hidden
        self.validate()

    def validate(self):
        for name in ("hidden", "sie_layers", "if_layers", "gcn_layers", "heads", "doc_len", "ffn_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be at least 1")
        if self.hidden % 2:
            raise ConfigError("hidden", "positional encodings need an even width, got {0}".format(self.hidden))
        if self.vocab_size and self.vocab_size < len(RESERVED):
            raise ConfigError("vocab_size", "must cover the {0} reserved tokens".format(len(RESERVED)))
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout", "must be in [0, 1)")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold", "must be in (0, 1)")
        if self.attention_scale not in ATTENTION_SCALES:
            raise ConfigError("attention_scale", "expected one of {0}".format(", ".join(ATTENTION_SCALES)))

    @classmethod
    def full_profile(cls, **overrides):
        """The full-scale profile: h=64, eight extractor and fusion blocks, eight heads, 200-token documents."""
        settings = dict(hidden=64, sie_layers=8, if_layers=8, gcn_layers=1, heads=8, doc_len=200)
        settings.update(overrides)
        return cls(**settings)

    @classmethod
    def ablation(cls, name, **overrides):
        """A configuration with the named components switched off: "no-graph" looks history labels up in a plain
        embedding table, "no-sie" reads all documents as one untyped token sequence, and "no-all" does both.

        :raise ConfigError: Raises on an unknown ablation name.
        """
        if name not in ABLATIONS:
            raise ConfigError("ablation", "expected one of {0}".format(", ".join(ABLATIONS)))
        settings = dict(ABLATIONS[name])
        settings.update(overrides)
        return cls(**settings)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown setting")
        return cls(**data)

    def to_dict(self):
        return asdict(self)


class StepOutput(object):
    """One level of a prediction: the probabilities y_k, the selected labels, and attention traces."""

    def __init__(self, level, probs, selected, document_attention=None, history_attention=None):
        """Initialize the StepOutput object.

        :param level: The level k.
        :param probs: y_k, of length |C_k| + 1. Slot 0 is the stop probability.
        :type probs: Tensor
        :param selected: The labels at or above the threshold, the stop marker included.
        :type selected: frozenset(str)
        :param document_attention: Cross-attention weights per fusion layer, averaged over heads (k x |T|).
        :param history_attention: Self-attention weights per fusion layer, averaged over heads (k x k).
        """
        self.level = level
        self.probs = probs
        self.selected = selected
        self.document_attention = document_attention or []
        self.history_attention = history_attention or []

    def __repr__(self):
        return "StepOutput(level={0}, selected={1})".format(self.level, sorted(self.selected))

    def attention_dict(self):
        return dict(
            level=self.level,
            document=[w.tolist() for w in self.document_attention],
            history=[w.tolist() for w in self.history_attention],
        )


class Prediction(object):
    """A predicted topic path and the steps that produced it."""

    def __init__(self, id, path, steps):
        self.id = id
        self.path = path
        self.steps = steps

    def __repr__(self):
        return "Prediction(id={0!r}, path={1})".format(self.id, self.path.to_list())

    def to_dict(self, dump_attention=False):
        data = dict(id=self.id, path=self.path.to_list(), probs=[step.probs.data.tolist() for step in self.steps])
        if dump_attention:
            data["attention"] = dict(steps=[step.attention_dict() for step in self.steps])
        return data


def parse_given(text, taxonomy):
    """Parses comma-separated explicit labels ("F,C,F06") into a coherent prefix path.

    Every code stands for itself and all of its ancestors, so "F0601" alone gives [{root}, {F}, {F06}, {F0601}]
    and "F,C09" gives [{root}, {C, F}, {C09}]. A branch may end above the deepest given level.

    :param text: The comma-separated codes.
    :param taxonomy: The taxonomy.
    :type taxonomy: DisciplineTaxonomy
    :raise UnknownCode: Raises if a code is not in the taxonomy.
    :raise IncoherentGiven: Raises on an empty list or on the root or stop markers.
    :rtype: TopicPath
    """
    codes = {code.strip() for code in text.split(",") if code.strip()}
    for code in sorted(codes):
        if code in (ROOT, STOP):
            raise IncoherentGiven(code, "markers cannot be given")
    if not codes:
        raise IncoherentGiven(text, "no labels given")
    depth = {code: taxonomy.get(code).level for code in codes}
    levels = [{code_prefix(code, level) for code in codes if depth[code] >= level}
              for level in range(1, max(depth.values()) + 1)]
    return TopicPath([[ROOT]] + levels)


class ProposalClassifier(object):
    """The level-wise proposal classifier: its parameters and everything needed to run them."""

    def __init__(self, taxonomy, graph, vocab, config=None, seed=0):
        """Initialize the ProposalClassifier object with freshly initialized parameters.

        :param taxonomy: The discipline taxonomy.
        :type taxonomy: DisciplineTaxonomy
        :param graph: The interdisciplinary graph.
        :type graph: InterGraph
        :param vocab: The vocabulary.
        :type vocab: Vocabulary
        :param config: The model configuration. `vocab_size` is taken from `vocab` when unset.
        :type config: ModelConfig or None
        :param seed: The initialization and dropout seed.
        :type seed: int
        """
        config = config or ModelConfig()
        if not config.vocab_size:
            config = replace(config, vocab_size=len(vocab))
        if config.vocab_size != len(vocab):
            raise ConfigError("vocab_size", "{0} does not match the vocabulary ({1})".format(config.vocab_size,
                                                                                            len(vocab)))
        self.taxonomy = taxonomy
        self.graph = graph
        self.vocab = vocab
        self.config = config
        self.seed = seed
        self.params = ParamStore(runs.rng(seed, "init"))
        self._dropout_rng = runs.rng(seed, "dropout")
        self._neighborhoods = {}
        self._word_encoding = positional_encoding(config.doc_len, config.hidden)
        self._flat_encoding = positional_encoding(len(DOCUMENT_TYPES) * config.doc_len, config.hidden)
        self._history_encoding = positional_encoding(taxonomy.depth + 1, config.hidden)
        self._build()

    def __repr__(self):
        return "ProposalClassifier(depth={0}, params={1})".format(self.taxonomy.depth, self.params.num_values())

    def _build(self):
        cfg = self.config
        h = cfg.hidden
        bound = 1.0 / np.sqrt(h)
        store = self.params
        store.uniform("embed.word", (cfg.vocab_size, h), bound)
        if cfg.hierarchical_sie:
            store.uniform("embed.type", (len(DOCUMENT_TYPES), h), bound)
        self.sie_blocks = []
        self.flat_blocks = []
        for layer in range(cfg.sie_layers):
            prefix = "sie.{0}".format(layer)
            if not cfg.hierarchical_sie:
                self.flat_blocks.append(EncoderBlockParams(store, prefix + ".flat", h, cfg.heads, cfg.ffn_dim, bound))
                continue
            word = EncoderBlockParams(store, prefix + ".word", h, cfg.heads, cfg.ffn_dim, bound)
            fuse_weight = store.uniform(prefix + ".fuse.weight", (cfg.doc_len * h, h), 1.0 / np.sqrt(cfg.doc_len * h))
            fuse_bias = store.zeros(prefix + ".fuse.bias", (h,))
            doc = EncoderBlockParams(store, prefix + ".doc", h, cfg.heads, cfg.ffn_dim, bound)
            self.sie_blocks.append((word, fuse_weight, fuse_bias, doc))
        store.uniform("ike.node", (len(self.taxonomy) + 1, h), bound)
        self.gcn_weights = [
            store.uniform("ike.gcn.{0}.weight".format(layer), (h, h), bound)
            for layer in range(cfg.gcn_layers if cfg.use_graph else 0)
        ]
        self.if_blocks = [
            DecoderBlockParams(store, "if.{0}".format(layer), h, cfg.heads, cfg.ffn_dim, bound)
            for layer in range(cfg.if_layers)
        ]
        self.heads = {}
        for level in range(1, self.taxonomy.depth + 1):
            prefix = "lp.{0}".format(level)
            width = self.taxonomy.level_size(level) + 1
            self.heads[level] = (
                store.uniform(prefix + ".fc1.weight", (h, h), bound),
                store.zeros(prefix + ".fc1.bias", (h,)),
                store.uniform(prefix + ".fc2.weight", (h, width), bound),
                store.full(prefix + ".fc2.bias", (width,), prior_logit(width)),
            )

    def tokenize(self, proposal):
        return tokenize(proposal, self.vocab, self.config.doc_len)

    def _block_options(self, train, rng):
        return dict(rate=self.config.dropout, train=train, rng=rng if rng is not None else self._dropout_rng,
                    scale_mode=self.config.attention_scale)

    def sie_forward(self, tokenized, train=False, rng=None):
        """Encodes the typed documents of a proposal into the |T| x h matrix D.

        Each layer runs the word-level block on every document independently, fuses each document's flattened
        word states into one row added to its previous document vector, then mixes the rows at document level.
        Without the hierarchy (`hierarchical_sie` off) the documents are concatenated into one untyped sequence
        and D holds its |T| * doc_len encoded token rows instead.

        :param tokenized: The tokenized proposal.
        :type tokenized: TokenizedProposal
        :raise ShapeMismatch: Raises if the documents are not padded to `doc_len`.
        :rtype: Tensor
        """
        ids = tokenized.token_ids
        if ids.shape != (len(DOCUMENT_TYPES), self.config.doc_len):
            raise ShapeMismatch("sie_forward", ids.shape, (len(DOCUMENT_TYPES), self.config.doc_len))
        options = self._block_options(train, rng)
        if not self.config.hierarchical_sie:
            tokens = add(embedding_gather(self.params["embed.word"], ids.reshape(-1)), constant(self._flat_encoding))
            for block in self.flat_blocks:
                tokens = encoder_block(tokens, block, **options)
            return tokens
        words = add(embedding_gather(self.params["embed.word"], ids), constant(self._word_encoding))
        documents = self.params["embed.type"]
        for word_block, fuse_weight, fuse_bias, doc_block in self.sie_blocks:
            words = encoder_block(words, word_block, **options)
            fused = add(add(matmul(flatten(words), fuse_weight), fuse_bias), documents)
            documents = encoder_block(fused, doc_block, **options)
        return documents

    def neighborhood(self, codes):
        key = frozenset(codes)
        if key not in self._neighborhoods:
            self._neighborhoods[key] = sample_neighborhood(self.graph, key, self.config.gcn_layers)
        return self._neighborhoods[key]

    def ike_forward(self, history):
        """Encodes each label set of a history into one row, giving the k x h matrix E.

        The root set uses the root embedding directly. Other sets run the graph convolution over the sampled
        neighbourhood of their labels and average the rows of the labels themselves.

        :param history: The label sets [L_0, ..., L_{k-1}].
        :type history: TopicPath
        :raise IncoherentHistory: Raises if a set after the root has no labels, or a label is at the wrong level.
        :raise UnknownNode: Raises if a label is not in the graph.
        :rtype: Tensor
        """
        nodes = self.params["ike.node"]
        rows = [embedding_gather(nodes, [ROOT_ID])]
        for level in range(1, len(history)):
            labels = sorted(history.labels(level))
            if not labels:
                raise IncoherentHistory(STOP, "level {0} has no labels".format(level))
            for code in labels:
                if code not in self.taxonomy or self.taxonomy.get(code).level != level:
                    raise IncoherentHistory(code, "not a level-{0} discipline".format(level))
            if self.config.use_graph:
                sampled = self.neighborhood(labels)
                features = embedding_gather(nodes, [self.taxonomy.get(code).id for code in sampled.members])
                hidden = gcn_forward(sampled.adjacency, features, self.gcn_weights)
                rows.append(mean_pool(embedding_gather(hidden, sampled.central_index)))
            else:
                rows.append(mean_pool(embedding_gather(nodes, [self.taxonomy.get(code).id for code in labels])))
        return concat(rows, axis=0)

    def if_forward(self, history, documents, train=False, rng=None, cross_trace=None, self_trace=None):
        """Lets the encoded history attend to itself and to the document rows, giving the k x h matrix S."""
        options = self._block_options(train, rng)
        state = add(history, constant(self._history_encoding[: history.shape[0]]))
        for block in self.if_blocks:
            state = decoder_block(state, documents, block, trace=cross_trace, self_trace=self_trace, **options)
        return state

    def lp_forward(self, state, level):
        """Scores level `level`: mean-pools the state rows, then a two-layer ReLU head and a sigmoid.

        :raise LevelOutOfRange: Raises if `level` is outside 1..H.
        :rtype: StepOutput
        """
        if not 1 <= level <= self.taxonomy.depth:
            raise LevelOutOfRange(level, self.taxonomy.depth)
        w1, b1, w2, b2 = self.heads[level]
        hidden = relu(add(matmul(mean_pool(state), w1), b1))
        logits = add(matmul(hidden, w2), b2)
        probs = sigmoid(reshape(logits, (logits.shape[-1],)))
        selected = frozenset(
            self.taxonomy.code_at_slot(level, slot)
            for slot in np.flatnonzero(probs.data >= self.config.threshold)
        )
        return StepOutput(level, probs, selected)

    def level_targets(self, level, level_set):
        """Y_k: 1 at the slot of every label in `level_set`, and at slot 0 when it holds the stop marker."""
        targets = np.zeros(self.taxonomy.level_size(level) + 1)
        for code in level_set:
            targets[0 if code == STOP else self.taxonomy.slot(level, code)] = 1.0
        return targets

    def forward_train(self, tokenized, truth, train=True, rng=None, eps=DEFAULT_EPS):
        """The truth-conditioned loss: the sum over the levels of `truth` of each level's negative log-likelihood.

        :param tokenized: The tokenized proposal.
        :type tokenized: TokenizedProposal
        :param truth: The true topic path. Step k conditions on its first k sets.
        :type truth: TopicPath
        :param train: Whether dropout is active.
        :param rng: The dropout generator. Defaults to the classifier's own stream.
        :param eps: The probability clamp.
        :rtype: Tensor
        """
        if truth.depth > self.taxonomy.depth:
            raise LevelOutOfRange(truth.depth, self.taxonomy.depth)
        documents = self.sie_forward(tokenized, train, rng)
        total = None
        for level in range(1, truth.depth + 1):
            state = self.if_forward(self.ike_forward(truth.prefix(level)), documents, train, rng)
            step = self.lp_forward(state, level)
            loss = level_loss(step.probs, self.level_targets(level, truth[level]), eps)
            total = loss if total is None else add(total, loss)
        return total

    def predict(self, tokenized, given=None, coherence_filter=None, trace=False):
        """Predicts a topic path top-down, from the level after `given` (or from level 1).

        Each level keeps the labels at or above the threshold; with the coherence filter on, only those whose
        parent was kept at the previous level survive. A level whose selection includes stop is the last one: the
        surviving labels are kept with the stop marker appended to their set. When nothing survives the path ends
        with a stop-only set. Otherwise prediction runs to the taxonomy depth.

        :param tokenized: The tokenized proposal.
        :type tokenized: TokenizedProposal
        :param given: A coherent prefix [{root}, L_1, ..., L_j] to start from.
        :type given: TopicPath or None
        :param coherence_filter: Overrides the configured filter setting.
        :param trace: Whether to keep attention weights.
        :rtype: Prediction
        """
        coherent = self.config.coherence_filter if coherence_filter is None else coherence_filter
        path = given if given is not None else TopicPath([[ROOT]])
        steps = []
        documents = None
        level = len(path)
        while level <= self.taxonomy.depth:
            if documents is None:
                documents = self.sie_forward(tokenized)
            cross, history = ([], []) if trace else (None, None)
            state = self.if_forward(self.ike_forward(path), documents, cross_trace=cross, self_trace=history)
            step = self.lp_forward(state, level)
            if trace:
                step.document_attention = [w.mean(axis=0) for w in cross]
                step.history_attention = [w.mean(axis=0) for w in history]
            steps.append(step)
            labels = step.selected - {STOP}
            if coherent and level > 1:
                labels = {code for code in labels if parent_code(code) in path.labels(level - 1)}
            if not labels:
                path = path.extend({STOP})
                break
            if STOP in step.selected:
                path = path.extend(labels | {STOP})
                break
            path = path.extend(labels)
            level += 1
        return Prediction(tokenized.id, path, steps)

    def snapshot(self):
        """A copy whose parameters are frozen arrays, safe to share between inference threads."""
        clone = copy.copy(self)
        clone._neighborhoods = dict(self._neighborhoods)
        clone.params = ParamStore()
        clone._build()
        clone.params.load_state_dict(self.params.state_dict())
        for _, tensor in clone.params.items():
            tensor.requires_grad = False
            tensor.data.setflags(write=False)
        return clone

    def predict_many(self, tokenized, givens=None, workers=1, coherence_filter=None, trace=False):
        """Predicts many proposals, on `workers` threads over a parameter snapshot. Results are in input order.

        :param tokenized: The tokenized proposals.
        :type tokenized: list(TokenizedProposal)
        :param givens: One optional prefix per proposal.
        :rtype: list(Prediction)
        """
        givens = givens or [None] * len(tokenized)
        if len(givens) != len(tokenized):
            raise LengthMismatch(len(tokenized), len(givens))
        model = self.snapshot()
        if workers <= 1:
            return [model.predict(t, g, coherence_filter, trace) for t, g in zip(tokenized, givens)]
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(lambda args: model.predict(args[0], args[1], coherence_filter, trace),
                                     zip(tokenized, givens)))

    def save(self, path, extra=None):
        """Writes a checkpoint carrying the parameters and everything needed to rebuild the classifier."""
        meta = dict(
            model_config=self.config.to_dict(),
            seed=self.seed,
            vocabulary=self.vocab.to_list(),
            taxonomy=self.taxonomy.to_dict(),
            graph=self.graph.to_dict(),
        )
        meta.update(extra or {})
        save_checkpoint(path, self.params, meta)
        log.info("Saved checkpoint %s", path)

    @classmethod
    def load(cls, path):
        """Rebuilds a classifier from a checkpoint, with bit-identical parameters.

        :rtype: tuple(ProposalClassifier, dict)
        """
        arrays, meta = load_checkpoint(path)
        model = cls(
            load_taxonomy(meta["taxonomy"]),
            InterGraph.from_dict(meta["graph"]),
            Vocabulary(meta["vocabulary"]),
            ModelConfig.from_dict(meta["model_config"]),
            meta.get("seed", 0),
        )
        model.params.load_state_dict(arrays)
        log.info("Loaded checkpoint %s", path)
        return model, meta


def level_loss(probs, targets, eps=DEFAULT_EPS):
    """-sum(Y log y + (1 - Y) log(1 - y)) for one level.

    :raise LengthMismatch: Raises if `probs` and `targets` differ in length.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise LengthMismatch(targets.shape[0], probs.shape[0])
    return binary_cross_entropy(probs, targets, eps)


def prior_logit(width):
    """The log-odds of 1 / width: a head starting here scores each of its slots as one label among `width`."""
    return float(np.log(1.0 / (width - 1)))


def truth_path(proposal, taxonomy):
    return encode_topic_path(proposal.labels, taxonomy)


def gradient_check(config=None, seed=1, samples=200, tolerance=1e-4, step=1e-6):
    """Checks the classifier's truth-conditioned loss gradients against finite differences.

    Uses a small synthetic taxonomy (two letters, two children each, depth 3) and a handful of generated
    proposals, with dropout off.

    :param config: The model configuration; its dropout is ignored.
    :type config: ModelConfig or None
    :raise GradCheckFailed: Raises with the worst parameter when the tolerance is exceeded.
    :return: The samples, worst first.
    :rtype: list(GradSample)
    """
    config = replace(config or ModelConfig(), dropout=0.0, vocab_size=0)
    taxonomy = synthetic_taxonomy(letters=2, branching=2, depth=3)
    corpus_cfg = CorpusConfig(seed=seed, size=4, vocab_per_discipline=6, keyword_count=3, doc_len=config.doc_len)
    corpus = generate_corpus(taxonomy, corpus_cfg)
    graph = build_graph(collect_topic_stats(corpus, taxonomy))
    model = ProposalClassifier(taxonomy, graph, Vocabulary.build(corpus), config, seed)
    batch = [(model.tokenize(p), truth_path(p, taxonomy)) for p in corpus[:2]]

    def loss_fn():
        total = None
        for tokenized, truth in batch:
            loss = model.forward_train(tokenized, truth, train=False)
            total = loss if total is None else add(total, loss)
        return total

    return check_gradients(loss_fn, model.params, samples, runs.rng(seed, "gradcheck"), step, tolerance)
