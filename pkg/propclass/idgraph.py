# -*- coding: utf-8 -*-

"""
propclass.idgraph
~~~~~~~~~~~~~~~~~

The directed, weighted interdisciplinary graph. Edge weights follow the Rao-Stirling form p^alpha * d^beta, computed
per ordered discipline pair from topic co-occurrence, and neighbourhoods are sampled around the disciplines of a
prediction step.
"""

import collections
import logging

import networkx as nx
import numpy as np

from .exceptions import EmptySource, SelfEdge, UnknownNode
from .serializers import read_json, write_json

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.1
DEFAULT_BETA = 0.1


class TopicStats(object):
    """Per-discipline topic frequencies: F_a maps a topic to the number of proposals under `a` citing it."""

    def __init__(self, nodes, frequencies=None):
        """Initialize the TopicStats object.

        :param nodes: Every discipline code of the taxonomy (root excluded).
        :type nodes: iterable(str)
        :param frequencies: Topic counts per discipline.
        :type frequencies: dict(str, dict(str, int)) or None
        """
        self.nodes = sorted(nodes)
        self.frequencies = collections.defaultdict(collections.Counter)
        for code, counts in (frequencies or {}).items():
            self.frequencies[code].update(counts)

    def topics(self, code):
        """K_a, the topic set of a discipline."""
        return set(self.frequencies.get(code, ()))

    def frequency(self, code):
        """F_a, the topic frequency table of a discipline."""
        return self.frequencies.get(code, collections.Counter())

    def is_empty(self):
        return not any(self.frequencies.values())

    def to_dict(self):
        return {code: dict(sorted(counts.items())) for code, counts in sorted(self.frequencies.items()) if counts}

    def __eq__(self, other):
        return isinstance(other, TopicStats) and self.nodes == other.nodes and self.to_dict() == other.to_dict()


def collect_topic_stats(corpus, taxonomy):
    """Counts, for every discipline, how many proposals cite each topic.

    A proposal labeled with a code counts toward that discipline and all of its ancestors, and contributes each
    of its keywords at most once per discipline.

    :param corpus: The proposals.
    :type corpus: list(Proposal)
    :param taxonomy: The taxonomy.
    :type taxonomy: DisciplineTaxonomy
    :raise UnknownCode: Raises if a label is not in the taxonomy.
    :rtype: TopicStats
    """
    stats = TopicStats(d.code for d in taxonomy)
    for proposal in corpus:
        disciplines = set()
        for code in proposal.labels:
            disciplines.update(taxonomy.ancestors(code))
        topics = set(proposal.topics)
        for code in disciplines:
            stats.frequencies[code].update(topics)
    return stats


def edge_weight(stats, a, b, alpha=DEFAULT_ALPHA, beta=DEFAULT_BETA):
    """The co-selection proportion p, topic disparity d and weight w = p^alpha * d^beta of the edge a -> b.

    p is the share of a's topic citations that go to topics shared with b; d is one minus the share of a's topics
    that b also has. 0^0 is taken as 1, so a zero exponent disables its component.

    :param stats: The topic statistics.
    :type stats: TopicStats
    :param a: The source discipline code.
    :param b: The destination discipline code.
    :param alpha: The exponent on p.
    :param beta: The exponent on d.
    :raise SelfEdge: Raises if a == b.
    :raise EmptySource: Raises if a has no topics.
    :return: (p, d, w)
    :rtype: tuple(float, float, float)
    """
    if a == b:
        raise SelfEdge(a)
    source = stats.frequency(a)
    if not source:
        raise EmptySource(a)
    shared = set(source) & stats.topics(b)
    p = sum(source[k] for k in shared) / float(sum(source.values()))
    d = 1.0 - len(shared) / float(len(source))
    return p, d, p ** alpha * d ** beta


class InterGraph(object):
    """The interdisciplinary graph: every discipline is a node, and a -> b exists when a and b share a topic."""

    def __init__(self, graph, alpha, beta):
        """Initialize the InterGraph object. Use `build_graph()` or `InterGraph.from_dict()` rather than this.

        :param graph: A directed graph whose edges carry "p", "d" and "w" attributes.
        :type graph: networkx.DiGraph
        """
        self.graph = nx.freeze(graph)
        self.alpha = alpha
        self.beta = beta

    def __contains__(self, code):
        return code in self.graph

    def __repr__(self):
        return "InterGraph(nodes={0}, edges={1}, alpha={2}, beta={3})".format(
            self.graph.number_of_nodes(), self.graph.number_of_edges(), self.alpha, self.beta
        )

    @property
    def nodes(self):
        return sorted(self.graph.nodes)

    def edges(self):
        """Edges sorted by (src, dst), as dicts with src, dst, p, d and w."""
        return [
            dict(src=src, dst=dst, p=data["p"], d=data["d"], w=data["w"])
            for src, dst, data in sorted(self.graph.edges(data=True), key=lambda e: (e[0], e[1]))
        ]

    def edge(self, src, dst):
        data = self.graph.get_edge_data(src, dst)
        return None if data is None else (data["p"], data["d"], data["w"])

    def to_dict(self):
        return dict(alpha=self.alpha, beta=self.beta, nodes=self.nodes, edges=self.edges())

    @classmethod
    def from_dict(cls, data):
        graph = nx.DiGraph()
        graph.add_nodes_from(data.get("nodes", ()))
        for edge in data["edges"]:
            graph.add_edge(edge["src"], edge["dst"], p=edge["p"], d=edge["d"], w=edge["w"])
        return cls(graph, data["alpha"], data["beta"])


def build_graph(stats, alpha=DEFAULT_ALPHA, beta=DEFAULT_BETA):
    """Builds the interdisciplinary graph: one edge per ordered pair of disciplines sharing a topic.

    Edges whose weight is 0 but whose p is positive are kept, so changing alpha and beta changes weights only.

    :param stats: The topic statistics.
    :type stats: TopicStats
    :param alpha: The exponent on the co-selection proportion.
    :param beta: The exponent on the topic disparity.
    :rtype: InterGraph
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(stats.nodes)
    by_topic = collections.defaultdict(set)
    for code, counts in stats.frequencies.items():
        for topic in counts:
            by_topic[topic].add(code)
    pairs = set()
    for codes in by_topic.values():
        pairs.update((a, b) for a in codes for b in codes if a != b)
    for a, b in sorted(pairs):
        p, d, w = edge_weight(stats, a, b, alpha, beta)
        graph.add_edge(a, b, p=p, d=d, w=w)
    log.info("Built interdisciplinary graph: %d nodes, %d edges", graph.number_of_nodes(), graph.number_of_edges())
    return InterGraph(graph, alpha, beta)


def read_graph(path):
    return InterGraph.from_dict(read_json(path))


def write_graph(path, graph):
    write_json(path, graph.to_dict())


class SampledNeighborhood(object):
    """Central disciplines, their members within N_g hops, and the weighted adjacency over the members."""

    def __init__(self, centrals, members, adjacency):
        """Initialize the SampledNeighborhood object.

        :param centrals: The central codes, sorted.
        :param members: The member codes, sorted. A superset of the centrals.
        :param adjacency: The (members x members) matrix of edge weights, 0 where there is no edge.
        :type adjacency: numpy.ndarray
        """
        self.centrals = tuple(centrals)
        self.members = tuple(members)
        self.adjacency = adjacency
        self.adjacency.setflags(write=False)
        position = {code: i for i, code in enumerate(self.members)}
        self.central_index = np.array([position[code] for code in self.centrals], dtype=np.int64)

    def __repr__(self):
        return "SampledNeighborhood(centrals={0}, members={1})".format(len(self.centrals), len(self.members))


def sample_neighborhood(graph, centrals, hops):
    """Samples the members within `hops` hops of the centrals, following edges in both directions.

    :param graph: The interdisciplinary graph.
    :type graph: InterGraph
    :param centrals: The central discipline codes.
    :type centrals: iterable(str)
    :param hops: N_g, the number of hops. 0 keeps only the centrals and their mutual edges.
    :type hops: int
    :raise UnknownNode: Raises if a central is not in the graph.
    :rtype: SampledNeighborhood
    """
    centrals = sorted(set(centrals))
    members = set()
    for code in centrals:
        if code not in graph:
            raise UnknownNode(code)
        members.update(nx.ego_graph(graph.graph, code, radius=hops, undirected=True).nodes)
    members = sorted(members)
    adjacency = nx.to_numpy_array(graph.graph, nodelist=members, weight="w", nonedge=0.0, dtype=np.float64)
    return SampledNeighborhood(centrals, members, adjacency)
