# -*- coding: utf-8 -*-

"""
propclass.taxonomy
~~~~~~~~~~~~~~~~~~

The hierarchical discipline structure, its partial-order checks, and the topic path codec that turns a set of
ApplyID codes into per-level label sets and back.
"""

import collections
import logging
import re
import string

from .exceptions import (
    CycleDetected,
    DuplicateCode,
    IncoherentPath,
    LevelMismatch,
    OrphanNode,
    SchemaError,
    UnknownCode,
)
from .serializers import read_json

log = logging.getLogger(__name__)

ROOT = "<root>"
STOP = "<stop>"
ROOT_ID = 0

CODE_REGEX = re.compile(r"^[A-Z](\d{2})*$")

Violation = collections.namedtuple("Violation", ["axiom", "a", "b"])


def code_level(code):
    """The level implied by an ApplyID code: one letter for level 1, plus two digits per deeper level.

    :param code: The ApplyID code, ie. "F0601".
    :type code: str
    :raise LevelMismatch: Raises if the code is malformed.
    :rtype: int
    """
    if not isinstance(code, str) or not CODE_REGEX.match(code):
        raise LevelMismatch(code, "malformed ApplyID code")
    return 1 + (len(code) - 1) // 2


def parent_code(code):
    """The parent's code, or None for a level-1 code (whose parent is root)."""
    return code[:-2] if len(code) > 1 else None


def code_prefix(code, level):
    """The ancestor of `code` at `level` (the code itself at its own level)."""
    return code[: 1 + 2 * (level - 1)]


class Discipline(object):
    """A discipline node."""

    __slots__ = ("id", "code", "level", "parent_id")

    def __init__(self, id, code, level, parent_id=None):
        """Initialize the Discipline object.

        :param id: The integer node identifier. 0 is reserved for root.
        :param code: The ApplyID code.
        :param level: The level, 1..H (0 for root).
        :param parent_id: The identifier of the previous-level ancestor; ROOT_ID for level 1, None for root.
        """
        self.id = id
        self.code = code
        self.level = level
        self.parent_id = parent_id

    def __eq__(self, other):
        return isinstance(other, Discipline) and (self.id, self.code, self.level, self.parent_id) == (
            other.id,
            other.code,
            other.level,
            other.parent_id,
        )

    def __hash__(self):
        return hash((self.id, self.code))

    def __repr__(self):
        return "Discipline(id={0}, code={1!r}, level={2})".format(self.id, self.code, self.level)


class DisciplineTaxonomy(object):
    """The partially ordered discipline hierarchy. Immutable once loaded."""

    def __init__(self, disciplines, depth):
        """Initialize the taxonomy from validated disciplines. Use `load_taxonomy()` rather than calling this.

        :param disciplines: Non-root disciplines, with ids and parent links assigned.
        :type disciplines: list(Discipline)
        :param depth: The depth H.
        :type depth: int
        """
        self.root = Discipline(ROOT_ID, "", 0, None)
        self.depth = depth
        self._by_code = {d.code: d for d in disciplines}
        self._by_id = {d.id: d for d in disciplines}
        self._by_id[ROOT_ID] = self.root
        levels = [[] for _ in range(depth)]
        children = collections.defaultdict(list)
        for discipline in sorted(disciplines, key=lambda d: d.code):
            levels[discipline.level - 1].append(discipline.code)
            children[parent_code(discipline.code)].append(discipline.code)
        self.levels = tuple(tuple(level) for level in levels)
        self._children = {key: tuple(value) for key, value in children.items()}
        self._slots = tuple({code: i + 1 for i, code in enumerate(level)} for level in self.levels)
        self.order = frozenset(self._closure())

    def __len__(self):
        return len(self._by_code)

    def __contains__(self, code):
        return code in self._by_code

    def __iter__(self):
        return iter(sorted(self._by_code.values(), key=lambda d: d.id))

    def __repr__(self):
        return "DisciplineTaxonomy(depth={0}, nodes={1})".format(self.depth, len(self))

    def get(self, code):
        """Gets a discipline by code.

        :raise UnknownCode: Raises if the code is not in the taxonomy.
        :rtype: Discipline
        """
        try:
            return self._by_code[code]
        except KeyError:
            raise UnknownCode(code)

    def by_id(self, discipline_id):
        try:
            return self._by_id[discipline_id]
        except KeyError:
            raise UnknownCode(discipline_id)

    def children(self, code):
        """Codes of the direct children of `code` (None or "" for root)."""
        return self._children.get(code or None, ())

    def ancestors(self, code):
        """The prefix chain from level 1 down to and including `code`."""
        level = self.get(code).level
        return [code_prefix(code, k) for k in range(1, level + 1)]

    def level_size(self, level):
        """|C_k|, the number of disciplines at `level`."""
        return len(self.levels[level - 1])

    def slot(self, level, code):
        """The output slot of `code` at `level`. Slot 0 is reserved for the stop marker.

        :raise UnknownCode: Raises if the code is not a level-`level` discipline.
        """
        try:
            return self._slots[level - 1][code]
        except KeyError:
            raise UnknownCode(code, "not a level-{0} discipline".format(level))

    def code_at_slot(self, level, slot):
        return STOP if slot == 0 else self.levels[level - 1][slot - 1]

    def leaves(self):
        """Codes with no children, sorted."""
        return sorted(code for code in self._by_code if not self.children(code))

    def to_dict(self):
        nodes = [dict(code=d.code, level=d.level) for d in self]
        return dict(depth=self.depth, nodes=nodes)

    def _closure(self):
        # Pairs (a, b) meaning a ≺ b, root included under its empty code.
        for discipline in self._by_code.values():
            code = discipline.code
            for level in range(1, discipline.level):
                yield code, code_prefix(code, level)
            yield code, self.root.code


def load_taxonomy(source):
    """Builds a validated taxonomy from a taxonomy document.

    The document lists nodes with code and level, ie. `{"depth": 3, "nodes": [{"code": "F", "level": 1}, ...]}`.
    Parents are inferred from code prefixes.

    :param source: The taxonomy document, or a path to a JSON file holding it.
    :type source: dict or str
    :raise DuplicateCode: Raises if a code appears twice.
    :raise LevelMismatch: Raises if a code's length disagrees with its declared level.
    :raise OrphanNode: Raises if a code's parent prefix is missing.
    :raise CycleDetected: Raises if a parent chain revisits a node or the order axioms fail.
    :rtype: DisciplineTaxonomy
    """
    if not isinstance(source, dict):
        source = read_json(source)
    if "nodes" not in source:
        raise SchemaError(1, "nodes")
    declared = {}
    for node in source["nodes"]:
        code = node.get("code")
        level = node.get("level")
        if code in declared:
            raise DuplicateCode(code)
        if level is None or code_level(code) != level:
            raise LevelMismatch(code, "declared level {0}".format(level))
        declared[code] = level
    for code in declared:
        parent = parent_code(code)
        if parent is not None and parent not in declared:
            raise OrphanNode(code, "missing parent {0}".format(parent))
    max_level = max(declared.values()) if declared else 0
    depth = source.get("depth", max_level)
    if depth < max_level:
        raise LevelMismatch(depth, "depth is shallower than the deepest code ({0})".format(max_level))

    ids = {code: i + 1 for i, code in enumerate(sorted(declared, key=lambda c: (declared[c], c)))}
    disciplines = []
    for code, discipline_id in ids.items():
        parent = parent_code(code)
        disciplines.append(Discipline(discipline_id, code, declared[code], ids[parent] if parent else ROOT_ID))
    _check_parent_chains(disciplines)

    taxonomy = DisciplineTaxonomy(disciplines, depth)
    violations = validate_partial_order(taxonomy)
    if violations:
        raise CycleDetected(violations[0].a, "{0} violated with {1}".format(violations[0].axiom, violations[0].b))
    log.debug("Loaded taxonomy with depth %d and %d disciplines", depth, len(taxonomy))
    return taxonomy


def _check_parent_chains(disciplines):
    parents = {d.id: d.parent_id for d in disciplines}
    for discipline in disciplines:
        seen = set()
        current = discipline.id
        while current != ROOT_ID:
            if current in seen:
                raise CycleDetected(discipline.code)
            seen.add(current)
            current = parents[current]


def validate_partial_order(taxonomy, relation=None):
    """Checks the four order axioms: a unique greatest root, asymmetry, anti-reflexivity and transitivity.

    :param taxonomy: The taxonomy whose nodes the relation ranges over.
    :type taxonomy: DisciplineTaxonomy
    :param relation: Pairs (a, b) meaning a ≺ b. Defaults to the closure of the taxonomy's parent links.
    :type relation: set((str, str)) or None
    A pair related both ways is reported once, as an asymmetry; chains through such a pair are not checked for
    transitivity.

    :return: The violations, sorted. Empty when every axiom holds.
    :rtype: list(Violation)
    """
    relation = set(taxonomy.order if relation is None else relation)
    mutual = {(a, b) for a, b in relation if a != b and (b, a) in relation}
    root = taxonomy.root.code
    violations = set()
    for discipline in taxonomy:
        if (discipline.code, root) not in relation:
            violations.add(Violation("Root", discipline.code, root))
    successors = collections.defaultdict(set)
    for a, b in relation:
        successors[a].add(b)
    for a, b in relation:
        if a == root:
            violations.add(Violation("Root", a, b))
        if a == b:
            violations.add(Violation("AntiReflexivity", a, b))
        elif (b, a) in relation:
            violations.add(Violation("Asymmetry", min(a, b), max(a, b)))
        if (a, b) in mutual:
            continue
        for c in successors.get(b, ()):
            if c != a and (b, c) not in mutual and (a, c) not in relation:
                violations.add(Violation("Transitivity", a, c))
    return sorted(violations)


def read_taxonomy(path):
    """Loads a taxonomy from a JSON file."""
    return load_taxonomy(read_json(path))


def synthetic_taxonomy_document(letters=2, branching=3, depth=4):
    """A regular taxonomy document: `letters` level-1 disciplines, each node with `branching` children.

    Level-1 codes are "A", "B", ...; children append "01", "02", ...

    :rtype: dict
    """
    nodes = []
    frontier = list(string.ascii_uppercase[:letters])
    for level in range(1, depth + 1):
        nodes.extend(dict(code=code, level=level) for code in frontier)
        frontier = ["{0}{1:02d}".format(code, i + 1) for code in frontier for i in range(branching)]
    return dict(depth=depth, nodes=nodes)


def synthetic_taxonomy(letters=2, branching=3, depth=4):
    return load_taxonomy(synthetic_taxonomy_document(letters, branching, depth))


class TopicPath(object):
    """A sequence of per-level label sets [L_0, L_1, ..., L_HA], with L_0 = {root} and an optional stop marker."""

    def __init__(self, levels):
        """Initialize the TopicPath object.

        :param levels: The label sets, starting with the root set.
        :type levels: list(iterable(str))
        """
        self.levels = tuple(frozenset(level) for level in levels)
        if not self.levels or self.levels[0] != frozenset([ROOT]):
            raise IncoherentPath(ROOT, "the first set must be the root set")

    @classmethod
    def empty(cls):
        """The path of a proposal with no labels: stop at level 1."""
        return cls([[ROOT], [STOP]])

    @property
    def depth(self):
        """H_A, the index of the last level set."""
        return len(self.levels) - 1

    def labels(self, level):
        """The non-stop labels at `level`; empty past the end of the path."""
        if level >= len(self.levels):
            return frozenset()
        return self.levels[level] - {STOP}

    def has_stop(self, level):
        return level < len(self.levels) and STOP in self.levels[level]

    @property
    def stopped(self):
        return any(STOP in level for level in self.levels)

    def prefix(self, length):
        """The path [L_0, ..., L_{length-1}]."""
        return TopicPath(self.levels[:length])

    def extend(self, level_set):
        return TopicPath(list(self.levels) + [level_set])

    def to_list(self):
        """The JSON form: one sorted list per level after root, the stop marker last."""
        return [sorted(level - {STOP}) + ([STOP] if STOP in level else []) for level in self.levels[1:]]

    @classmethod
    def from_list(cls, data):
        return cls([[ROOT]] + [list(level) for level in data])

    def __eq__(self, other):
        return isinstance(other, TopicPath) and self.levels == other.levels

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self.levels)

    def __len__(self):
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)

    def __getitem__(self, level):
        return self.levels[level]

    def __repr__(self):
        return "TopicPath({0})".format(self.to_list())


def encode_topic_path(codes, taxonomy):
    """Encodes a set of ApplyID codes as a topic path.

    Level k holds every length-k prefix of every code. When some code ends before the deepest one, the stop
    marker joins the deepest set; when all codes end together above the taxonomy depth, a stop-only set follows.

    :param codes: The ApplyID codes.
    :type codes: iterable(str)
    :param taxonomy: The taxonomy.
    :type taxonomy: DisciplineTaxonomy
    :raise UnknownCode: Raises if a code is not in the taxonomy.
    :rtype: TopicPath
    """
    codes = set(codes)
    if not codes:
        return TopicPath.empty()
    levels = {code: taxonomy.get(code).level for code in codes}
    deepest = max(levels.values())
    path = [{ROOT}]
    for level in range(1, deepest + 1):
        path.append({code_prefix(code, level) for code in codes if levels[code] >= level})
    if any(level < deepest for level in levels.values()):
        path[deepest].add(STOP)
    elif deepest < taxonomy.depth:
        path.append({STOP})
    return TopicPath(path)


def check_topic_path(path, taxonomy):
    """Checks that every label sits at its own level and that its parent is in the previous set.

    :raise UnknownCode: Raises if a label is not in the taxonomy.
    :raise IncoherentPath: Raises on a misplaced label or a missing parent.
    """
    for level in range(1, len(path)):
        previous = path.labels(level - 1) if level > 1 else None
        for code in path.labels(level):
            discipline = taxonomy.get(code)
            if discipline.level != level:
                raise IncoherentPath(code, "found at level {0}".format(level))
            if previous is not None and parent_code(code) not in previous:
                raise IncoherentPath(code, "parent {0} missing from level {1}".format(parent_code(code), level - 1))


def decode_topic_path(path, taxonomy):
    """Decodes a topic path back into its maximal codes: labels with no child in the next level set.

    :param path: The topic path.
    :type path: TopicPath
    :param taxonomy: The taxonomy.
    :type taxonomy: DisciplineTaxonomy
    :raise IncoherentPath: Raises if a label's parent is missing from the previous set.
    :rtype: set(str)
    """
    check_topic_path(path, taxonomy)
    codes = set()
    for level in range(1, len(path)):
        below = path.labels(level + 1)
        for code in path.labels(level):
            if not any(parent_code(child) == code for child in below):
                codes.add(code)
    return codes
