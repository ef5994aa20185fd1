# -*- coding: utf-8 -*-

"""
propclass.corpus
~~~~~~~~~~~~~~~~

Research proposals: the data model, tokenization, JSON Lines ingestion, and a synthetic corpus generator that
plants discipline-specific vocabulary so training is reproducible without a real proposal archive.
"""

import collections
import logging
import re
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import runs
from .exceptions import ConfigError, SchemaError, UnknownCode
from .serializers import read_jsonl, write_jsonl

log = logging.getLogger(__name__)

DOCUMENT_TYPES = ("title", "keywords", "abstract", "research_field")
FIELDS = ("id",) + DOCUMENT_TYPES + ("labels",)

PAD = "<pad>"
UNK = "<unk>"
TYPE_TOKENS = tuple("<{0}>".format(name) for name in DOCUMENT_TYPES)
RESERVED = (PAD, UNK) + TYPE_TOKENS
PAD_ID = 0
UNK_ID = 1

SUBSETS = ("all", "bi", "differ")

PUNCTUATION_REGEX = re.compile(r"[^\w\s]+", re.UNICODE)

FILLER_WORDS = (
    "study", "method", "analysis", "model", "approach", "research", "results", "based", "novel", "framework",
    "data", "system", "development", "application", "mechanism", "theory", "design", "evaluation", "key",
    "problem", "process", "structure", "performance", "new", "effect", "basic", "important", "significant",
    "further", "project",
)  # fmt: skip


class Proposal(object):
    """A research proposal: one document per type, and its ApplyID labels."""

    def __init__(self, id, title, keywords, abstract, research_field, labels):
        """Initialize the Proposal object.

        :param id: The proposal identifier.
        :type id: str
        :param title: The title text.
        :type title: str
        :param keywords: The keyword list. Keywords double as the proposal's topics.
        :type keywords: list(str)
        :param abstract: The abstract text.
        :type abstract: str
        :param research_field: The research field text.
        :type research_field: str
        :param labels: The ApplyID codes.
        :type labels: iterable(str)
        """
        self.id = id
        self.title = title
        self.keywords = list(keywords)
        self.abstract = abstract
        self.research_field = research_field
        self.labels = sorted(set(labels))

    @property
    def documents(self):
        """The document texts, in DOCUMENT_TYPES order."""
        return [self.title, " ".join(self.keywords), self.abstract, self.research_field]

    @property
    def topics(self):
        return self.keywords

    def to_dict(self):
        return collections.OrderedDict((name, getattr(self, name)) for name in FIELDS)

    @classmethod
    def from_dict(cls, data, line=0):
        """Builds a Proposal from a decoded JSON object.

        :raise SchemaError: Raises naming the first missing field.
        """
        for name in FIELDS:
            if name not in data:
                raise SchemaError(line, name)
        return cls(*(data[name] for name in FIELDS))

    def __eq__(self, other):
        return isinstance(other, Proposal) and self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return "Proposal(id={0!r}, labels={1})".format(self.id, self.labels)


def read_corpus(path):
    """Reads proposals from a JSON Lines file.

    :raise ParseError: Raises with the line number of an undecodable line.
    :raise SchemaError: Raises with the line number and the name of a missing field.
    :rtype: list(Proposal)
    """
    return [Proposal.from_dict(data, line) for line, data in read_jsonl(path)]


def write_corpus(path, proposals):
    """Writes proposals as JSON Lines with a stable field order."""
    write_jsonl(path, (proposal.to_dict() for proposal in proposals))


def check_labels(proposals, taxonomy):
    """Checks that every label resolves in the taxonomy.

    :raise UnknownCode: Raises on the first unknown code.
    """
    for proposal in proposals:
        if not proposal.labels:
            raise UnknownCode(proposal.id, "proposal has no labels")
        for code in proposal.labels:
            taxonomy.get(code)


def interdisciplinarity(proposal):
    """Classifies a proposal: "differ" with two or more major disciplines, "bi" with several codes under one major
    discipline, "single" otherwise.

    :rtype: str
    """
    letters = {code[0] for code in proposal.labels}
    if len(letters) > 1:
        return "differ"
    if len(proposal.labels) > 1:
        return "bi"
    return "single"


def select_subset(proposals, name):
    """Selects the "all", "bi" (bi and differ proposals) or "differ" subset.

    :raise ConfigError: Raises on an unknown subset name.
    """
    if name == "all":
        return list(proposals)
    if name == "bi":
        return [p for p in proposals if interdisciplinarity(p) != "single"]
    if name == "differ":
        return [p for p in proposals if interdisciplinarity(p) == "differ"]
    raise ConfigError("subset", "expected one of {0}, got {1!r}".format(", ".join(SUBSETS), name))


def split_words(text):
    """Lower-cases, strips punctuation and splits on whitespace."""
    return PUNCTUATION_REGEX.sub(" ", text.lower()).split()


class Vocabulary(object):
    """A token to id map. Ids 0..5 are reserved for padding, unknown words and the four type tokens."""

    def __init__(self, tokens):
        """Initialize the Vocabulary from its ordered token list. The list must start with the reserved tokens."""
        self.tokens = list(tokens)
        if tuple(self.tokens[: len(RESERVED)]) != RESERVED:
            raise ConfigError("vocabulary", "must start with the reserved tokens")
        self._ids = {token: i for i, token in enumerate(self.tokens)}

    @classmethod
    def build(cls, proposals, min_freq=1):
        """Builds a vocabulary from a corpus, most frequent words first, ties broken alphabetically."""
        counts = collections.Counter()
        for proposal in proposals:
            for text in proposal.documents:
                counts.update(split_words(text))
        words = [w for w, n in counts.items() if n >= min_freq and w not in RESERVED]
        return cls(list(RESERVED) + sorted(words, key=lambda w: (-counts[w], w)))

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._ids

    def id(self, token):
        return self._ids.get(token, UNK_ID)

    def to_list(self):
        return list(self.tokens)


class TokenizedProposal(object):
    """Per-document token ids, padded to a fixed length, each led by its document's type token."""

    def __init__(self, id, token_ids):
        """Initialize the TokenizedProposal object.

        :param id: The proposal identifier.
        :param token_ids: An int array of shape (|T|, doc_len).
        :type token_ids: numpy.ndarray
        """
        self.id = id
        self.token_ids = token_ids
        self.token_ids.setflags(write=False)

    @property
    def doc_len(self):
        return self.token_ids.shape[1]

    def __eq__(self, other):
        return isinstance(other, TokenizedProposal) and self.id == other.id and np.array_equal(
            self.token_ids, other.token_ids
        )

    def __repr__(self):
        return "TokenizedProposal(id={0!r}, shape={1})".format(self.id, self.token_ids.shape)


def tokenize(proposal, vocab, doc_len):
    """Maps each document to `doc_len` ids: its type token, then its first doc_len - 1 words, then padding.

    :param proposal: The proposal.
    :type proposal: Proposal
    :param vocab: The vocabulary. Unknown words map to the unknown id.
    :type vocab: Vocabulary
    :param doc_len: The padded document length |d|.
    :type doc_len: int
    :rtype: TokenizedProposal
    """
    token_ids = np.full((len(DOCUMENT_TYPES), doc_len), PAD_ID, dtype=np.int64)
    for row, (type_token, text) in enumerate(zip(TYPE_TOKENS, proposal.documents)):
        ids = [vocab.id(type_token)] + [vocab.id(word) for word in split_words(text)]
        ids = ids[:doc_len]
        token_ids[row, : len(ids)] = ids
    return TokenizedProposal(proposal.id, token_ids)


@dataclass
class CorpusConfig(object):
    """Settings for the synthetic corpus generator."""

    seed: int = 7
    size: int = 500
    vocab_per_discipline: int = 20
    shared_topic_rate: float = 0.1
    interdisciplinary_rate: float = 0.3
    doc_len: int = 32
    min_label_level: int = 2
    noise_rate: float = 0.1
    title_len: int = 6
    keyword_count: int = 4
    abstract_len: int = 24
    field_len: int = 4

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("shared_topic_rate", "interdisciplinary_rate", "noise_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(name, "must be in [0, 1], got {0}".format(value))
        if self.noise_rate > 0.2:
            raise ConfigError("noise_rate", "planted words must make up at least 80% of each document")
        if self.size < 0:
            raise ConfigError("size", "must not be negative")
        for name in ("vocab_per_discipline", "doc_len", "min_label_level", "title_len", "keyword_count"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be at least 1")
        if self.keyword_count > self.vocab_per_discipline:
            raise ConfigError("keyword_count", "cannot exceed vocab_per_discipline")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown setting")
        return cls(**data)

    def to_dict(self):
        return asdict(self)


def planted_vocabularies(taxonomy, cfg, rng):
    """Gives every discipline `vocab_per_discipline` words of its own, a `shared_topic_rate` share of which is
    swapped for words owned by its siblings.

    :rtype: dict(str, list(str))
    """
    size = cfg.vocab_per_discipline
    own = {d.code: ["{0}t{1:02d}".format(d.code.lower(), j) for j in range(size)] for d in taxonomy}
    shared = int(round(cfg.shared_topic_rate * size))
    vocab = {}
    for discipline in taxonomy:
        code = discipline.code
        words = list(own[code])
        parent = code[:-2] if len(code) > 1 else None
        pool = [w for sibling in taxonomy.children(parent) if sibling != code for w in own[sibling]]
        if shared and pool:
            slots = rng.choice(size, size=min(shared, len(pool)), replace=False)
            borrowed = rng.choice(len(pool), size=len(slots), replace=False)
            for slot, index in zip(slots, borrowed):
                words[slot] = pool[index]
        vocab[code] = words
    return vocab


def _draw_code(rng, taxonomy, letter, min_level):
    level = int(rng.integers(min(min_level, taxonomy.depth), taxonomy.depth + 1))
    code = letter
    for _ in range(1, level):
        children = taxonomy.children(code)
        if not children:
            break
        code = children[int(rng.integers(len(children)))]
    return code


def _document(rng, length, labels, vocab, noise_rate):
    noise = int(length * noise_rate)
    words = []
    for i in range(length - noise):
        source = vocab[labels[i % len(labels)]]
        words.append(source[int(rng.integers(len(source)))])
    words.extend(FILLER_WORDS[int(rng.integers(len(FILLER_WORDS)))] for _ in range(noise))
    return " ".join(words[i] for i in rng.permutation(len(words)))


def _keywords(rng, count, labels, vocab):
    keywords = []
    for i in range(count):
        candidates = [w for w in vocab[labels[i % len(labels)]] if w not in keywords]
        keywords.append(candidates[int(rng.integers(len(candidates)))])
    return keywords


def generate_corpus(taxonomy, cfg):
    """Generates a deterministic synthetic corpus.

    Exactly round(size * interdisciplinary_rate) proposals carry two codes under distinct level-1 disciplines;
    the rest carry one. Every document draws at least 1 - noise_rate of its words from the planted vocabularies
    of the proposal's labels.

    :param taxonomy: The taxonomy to draw labels from.
    :type taxonomy: DisciplineTaxonomy
    :param cfg: The generator settings.
    :type cfg: CorpusConfig
    :raise ConfigError: Raises on invalid settings.
    :rtype: list(Proposal)
    """
    cfg.validate()
    letters = list(taxonomy.levels[0])
    n_inter = int(round(cfg.size * cfg.interdisciplinary_rate))
    if n_inter and len(letters) < 2:
        raise ConfigError("interdisciplinary_rate", "needs at least two level-1 disciplines")
    rng = runs.rng(cfg.seed, "corpus")
    vocab = planted_vocabularies(taxonomy, cfg, rng)
    inter = np.zeros(cfg.size, dtype=bool)
    inter[rng.permutation(cfg.size)[:n_inter]] = True

    proposals = []
    for i in range(cfg.size):
        if inter[i]:
            pair = rng.choice(len(letters), size=2, replace=False)
            labels = [_draw_code(rng, taxonomy, letters[j], cfg.min_label_level) for j in sorted(pair)]
        else:
            letter = letters[int(rng.integers(len(letters)))]
            labels = [_draw_code(rng, taxonomy, letter, cfg.min_label_level)]
        proposals.append(
            Proposal(
                id="P{0:05d}".format(i),
                title=_document(rng, cfg.title_len, labels, vocab, cfg.noise_rate),
                keywords=_keywords(rng, cfg.keyword_count, labels, vocab),
                abstract=_document(rng, cfg.abstract_len, labels, vocab, cfg.noise_rate),
                research_field=_document(rng, cfg.field_len, labels, vocab, cfg.noise_rate),
                labels=labels,
            )
        )
    log.info("Generated %d proposals (%d interdisciplinary)", len(proposals), n_inter)
    return proposals
