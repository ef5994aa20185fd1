# -*- coding: utf-8 -*-

__title__ = "propclass"
__author__ = "Aaron Toth"
__version__ = "0.1.0"

from .exceptions import PropclassException  # noqa: E402
from .taxonomy import DisciplineTaxonomy, TopicPath, load_taxonomy, encode_topic_path, decode_topic_path  # noqa: E402
from .corpus import Proposal, CorpusConfig, generate_corpus, read_corpus, write_corpus  # noqa: E402
from .idgraph import InterGraph, collect_topic_stats, build_graph  # noqa: E402
from .model import ModelConfig, ProposalClassifier  # noqa: E402
from .trainer import TrainConfig, train  # noqa: E402

__all__ = [
    "PropclassException",
    "DisciplineTaxonomy",
    "TopicPath",
    "load_taxonomy",
    "encode_topic_path",
    "decode_topic_path",
    "Proposal",
    "CorpusConfig",
    "generate_corpus",
    "read_corpus",
    "write_corpus",
    "InterGraph",
    "collect_topic_stats",
    "build_graph",
    "ModelConfig",
    "ProposalClassifier",
    "TrainConfig",
    "train",
]
