"""Semantic network storage, sense-separability enforcement, equivalence classes.

The graph is an undirected relatedness network over sense nodes. An inventory
maps (lemma, pos) to its ordered candidate senses. The engine requires the
graph to be *sense-separable*: distinct candidates of one inventory entry must
have disjoint closed neighborhoods. ``enforce_sense_separability`` rewrites a
graph into that state; ``build_equivalence_classes`` then yields the disjoint
candidate clusters that disambiguation discriminates between.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    EmptyCandidates,
    NotFound,
    ParseError,
    PreconditionFailed,
    ReferentialIntegrityError,
)

SenseId = str

_POS_ALIASES = {
    "n": "NOUN",
    "v": "VERB",
    "a": "ADJ",
    "s": "ADJ",  # satellite adjectives collapse into ADJ
    "r": "ADV",
}


class PosTag(enum.Enum):
    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    OTHER = "OTHER"

    @classmethod
    def parse(cls, token: str) -> "PosTag":
        """Parse a POS token. Accepts enum names (any case) and the
        single-letter tags n/v/a/s/r; anything else is an error."""
        t = token.strip()
        name = _POS_ALIASES.get(t.lower(), t.upper())
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown POS tag: {token!r}") from None


def validate_sense_id(sense_id: str) -> str:
    if not sense_id:
        raise ValueError("sense id must be non-empty")
    if "\t" in sense_id or "\n" in sense_id or "\r" in sense_id:
        raise ValueError(f"sense id contains tab/newline: {sense_id!r}")
    return sense_id


@dataclass(frozen=True)
class SenseNode:
    """One definition/synset in the network."""

    id: SenseId
    pos: PosTag
    lemmas: tuple[str, ...]
    gloss: str = ""
    language: str = "en"

    def __post_init__(self) -> None:
        validate_sense_id(self.id)
        if not self.lemmas:
            raise ValueError(f"sense {self.id}: lemmas must be non-empty")

    @property
    def gloss_missing(self) -> bool:
        return not self.gloss


@dataclass(frozen=True)
class Violation:
    """A pair of co-candidates whose closed neighborhoods overlap,
    plus one witness node from the intersection."""

    lemma: str
    pos: PosTag
    sense_i: SenseId
    sense_j: SenseId
    witness: SenseId


@dataclass(frozen=True)
class SeparationReport:
    edges_removed_direct: int
    edges_removed_shared: int
    affected_entries: tuple[tuple[str, PosTag], ...]

    def __post_init__(self) -> None:
        if self.edges_removed_direct < 0 or self.edges_removed_shared < 0:
            raise ValueError("removal counts must be non-negative")

    @property
    def edges_removed(self) -> int:
        return self.edges_removed_direct + self.edges_removed_shared


@dataclass(frozen=True)
class EquivalenceClass:
    """A candidate sense plus its closed neighborhood; the unit of discrimination."""

    representative: SenseId
    members: frozenset[SenseId]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("equivalence class must be non-empty")
        if self.representative not in self.members:
            raise ValueError(
                f"representative {self.representative} not among class members"
            )


def _normalize_edge(a: SenseId, b: SenseId) -> tuple[SenseId, SenseId]:
    return (a, b) if a <= b else (b, a)


class SemanticGraph:
    """Immutable undirected relatedness graph over sense nodes.

    Relation labels are stored but ignored by every algorithm. ``separated``
    is only set by a successful separability transform/check.
    """

    def __init__(
        self,
        nodes: Mapping[SenseId, SenseNode] | Iterable[SenseNode],
        edges: Iterable[tuple[SenseId, SenseId] | tuple[SenseId, SenseId, str]] = (),
        separated: bool = False,
    ):
        if isinstance(nodes, Mapping):
            self.nodes: dict[SenseId, SenseNode] = dict(nodes)
        else:
            self.nodes = {n.id: n for n in nodes}
        self._edges: dict[tuple[SenseId, SenseId], str] = {}
        self._adj: dict[SenseId, set[SenseId]] = {nid: set() for nid in self.nodes}
        for edge in edges:
            src, dst = edge[0], edge[1]
            relation = edge[2] if len(edge) > 2 else ""
            if src == dst:
                raise ValueError(f"self-loop on {src!r}")
            if src not in self.nodes or dst not in self.nodes:
                missing = src if src not in self.nodes else dst
                raise ValueError(f"edge endpoint {missing!r} is not a node")
            key = _normalize_edge(src, dst)
            self._edges.setdefault(key, relation)
            self._adj[src].add(dst)
            self._adj[dst].add(src)
        self.separated = separated

    # -- basic accessors ---------------------------------------------------

    def __contains__(self, sense_id: SenseId) -> bool:
        return sense_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def edges(self) -> Iterator[tuple[SenseId, SenseId, str]]:
        for (a, b), rel in self._edges.items():
            yield a, b, rel

    def edge_set(self) -> frozenset[tuple[SenseId, SenseId]]:
        return frozenset(self._edges)

    def node(self, sense_id: SenseId) -> SenseNode:
        try:
            return self.nodes[sense_id]
        except KeyError:
            raise NotFound(f"unknown sense id: {sense_id!r}") from None

    def gloss(self, sense_id: SenseId) -> str:
        return self.node(sense_id).gloss

    def neighbors(self, sense_id: SenseId) -> frozenset[SenseId]:
        if sense_id not in self.nodes:
            raise NotFound(f"unknown sense id: {sense_id!r}")
        return frozenset(self._adj[sense_id])

    def closed_neighborhood(self, sense_id: SenseId) -> frozenset[SenseId]:
        if sense_id not in self.nodes:
            raise NotFound(f"unknown sense id: {sense_id!r}")
        return frozenset(self._adj[sense_id]) | {sense_id}

    def without_edges(
        self, removed: set[tuple[SenseId, SenseId]], separated: bool
    ) -> "SemanticGraph":
        kept = [(a, b, rel) for (a, b), rel in self._edges.items() if (a, b) not in removed]
        return SemanticGraph(self.nodes, kept, separated=separated)


class SenseInventory:
    """The (lemma, pos) -> ordered candidate senses map.

    Lemmas are case-folded at ingestion; candidate order is the inventory
    rank used for tie-breaking and MFS fallback.
    """

    def __init__(self, entries: Mapping[tuple[str, PosTag], Iterable[SenseId]]):
        self.entries: dict[tuple[str, PosTag], tuple[SenseId, ...]] = {}
        for (lemma, pos), senses in entries.items():
            key = (lemma.lower(), pos)
            ordered = tuple(senses)
            if not ordered:
                raise ValueError(f"inventory entry {key} has no senses")
            if len(set(ordered)) != len(ordered):
                raise ValueError(f"inventory entry {key} lists a sense twice")
            for s in ordered:
                validate_sense_id(s)
            self.entries[key] = ordered

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[tuple[str, PosTag], tuple[SenseId, ...]]]:
        return iter(self.entries.items())

    def __contains__(self, key: tuple[str, PosTag]) -> bool:
        lemma, pos = key
        return (lemma.lower(), pos) in self.entries

    def candidates(self, lemma: str, pos: PosTag) -> tuple[SenseId, ...]:
        try:
            return self.entries[(lemma.lower(), pos)]
        except KeyError:
            raise NotFound(f"no inventory entry for ({lemma!r}, {pos.value})") from None

    def rank(self, lemma: str, pos: PosTag, sense: SenseId) -> int:
        senses = self.candidates(lemma, pos)
        try:
            return senses.index(sense)
        except ValueError:
            raise NotFound(
                f"sense {sense!r} is not a candidate of ({lemma!r}, {pos.value})"
            ) from None


def validate_referential_integrity(graph: SemanticGraph, inventory: SenseInventory) -> None:
    """Every inventory sense must exist in the graph."""
    for (lemma, pos), senses in inventory:
        for s in senses:
            if s not in graph:
                raise ReferentialIntegrityError(
                    f"inventory entry ({lemma!r}, {pos.value}) references "
                    f"unknown sense {s!r}"
                )


# -- neighborhood operations ---------------------------------------------


def open_neighborhood(graph: SemanticGraph, sense_id: SenseId) -> frozenset[SenseId]:
    """All senses sharing an edge with ``sense_id``; never contains it."""
    return graph.neighbors(sense_id)


def candidate_neighborhood_union(
    graph: SemanticGraph, inventory: SenseInventory, lemma: str, pos: PosTag
) -> frozenset[SenseId]:
    """Union of the closed neighborhoods of every candidate of (lemma, pos)."""
    union: set[SenseId] = set()
    for candidate in inventory.candidates(lemma, pos):
        union |= graph.closed_neighborhood(candidate)
    return frozenset(union)


# -- separability ----------------------------------------------------------


def check_sense_separability(
    graph: SemanticGraph, inventory: SenseInventory
) -> list[Violation]:
    """List every pair of co-candidates whose closed neighborhoods intersect.

    Empty result means the graph is sense-separable for this inventory.
    Violations are ordered by (lemma, pos, rank_i, rank_j) so the output is
    independent of node/edge ingestion order.
    """
    validate_referential_integrity(graph, inventory)
    violations: list[Violation] = []
    for (lemma, pos), senses in sorted(
        inventory, key=lambda item: (item[0][0], item[0][1].value)
    ):
        if len(senses) < 2:
            continue
        closed = {s: graph.closed_neighborhood(s) for s in senses}
        for i in range(len(senses)):
            for j in range(i + 1, len(senses)):
                si, sj = senses[i], senses[j]
                overlap = closed[si] & closed[sj]
                if overlap:
                    violations.append(
                        Violation(lemma, pos, si, sj, _pick_witness(overlap, si, sj))
                    )
    return violations


def _pick_witness(overlap: frozenset[SenseId], si: SenseId, sj: SenseId) -> SenseId:
    # Prefer a shared third node; when only the senses themselves overlap
    # (a direct co-candidate edge), report the intruding second sense.
    third = sorted(w for w in overlap if w != si and w != sj)
    if third:
        return third[0]
    return sj if sj in overlap else si


def enforce_sense_separability(
    graph: SemanticGraph, inventory: SenseInventory
) -> tuple[SemanticGraph, SeparationReport]:
    """Remove the minimum structure needed to make the graph sense-separable.

    Pass 1 deletes every edge whose endpoints are both candidates of one
    inventory entry. Pass 2 then deletes, for every node adjacent to two or
    more candidates of one entry, all of its edges to that entry's candidates.
    Both passes mark edges against a fixed snapshot before removing anything,
    so the transform is deterministic, order-independent and idempotent, and
    it never adds edges.
    """
    validate_referential_integrity(graph, inventory)

    edge_set = graph.edge_set()
    direct: set[tuple[SenseId, SenseId]] = set()
    affected: set[tuple[str, PosTag]] = set()

    for (lemma, pos), senses in inventory:
        for i in range(len(senses)):
            for j in range(i + 1, len(senses)):
                key = _normalize_edge(senses[i], senses[j])
                if key in edge_set:
                    direct.add(key)
                    affected.add((lemma, pos))

    # Adjacency after pass 1, for the shared-witness sweep.
    adj: dict[SenseId, set[SenseId]] = {nid: set() for nid in graph.nodes}
    for a, b, _ in graph.edges():
        if _normalize_edge(a, b) in direct:
            continue
        adj[a].add(b)
        adj[b].add(a)

    shared: set[tuple[SenseId, SenseId]] = set()
    for (lemma, pos), senses in inventory:
        if len(senses) < 2:
            continue
        # Post-pass-1 adjacency holds no co-candidate edges, so a witness
        # here is never itself a candidate of this entry.
        witness_hits: dict[SenseId, list[SenseId]] = {}
        for c in senses:
            for x in adj[c]:
                witness_hits.setdefault(x, []).append(c)
        for x, hit in witness_hits.items():
            if len(hit) >= 2:
                for c in hit:
                    shared.add(_normalize_edge(x, c))
                affected.add((lemma, pos))

    removed = direct | shared
    new_graph = graph.without_edges(removed, separated=True)
    report = SeparationReport(
        edges_removed_direct=len(direct),
        edges_removed_shared=len(shared),
        affected_entries=tuple(
            sorted(affected, key=lambda e: (e[0], e[1].value))
        ),
    )
    return new_graph, report


def build_equivalence_classes(
    graph: SemanticGraph,
    inventory: SenseInventory,
    lemma: str,
    pos: PosTag,
    candidates: Iterable[SenseId] | None = None,
) -> list[EquivalenceClass]:
    """One class (closed neighborhood) per candidate, in inventory-rank order.

    Requires a separated graph; classes are then pairwise disjoint and cover
    the candidate-neighborhood union restricted to the given candidates.
    """
    if not graph.separated:
        raise PreconditionFailed(
            "equivalence classes require a sense-separated graph"
        )
    entry = inventory.candidates(lemma, pos)
    if candidates is None:
        chosen = entry
    else:
        requested = set(candidates)
        if not requested:
            raise EmptyCandidates(f"empty candidate set for ({lemma!r}, {pos.value})")
        unknown = requested - set(entry)
        if unknown:
            raise PreconditionFailed(
                f"candidates {sorted(unknown)} are not inventory candidates "
                f"of ({lemma!r}, {pos.value})"
            )
        chosen = tuple(c for c in entry if c in requested)
    return [
        EquivalenceClass(representative=c, members=graph.closed_neighborhood(c))
        for c in chosen
    ]


# -- tab-separated file formats ---------------------------------------------

NODES_HEADER = ("id", "pos", "language", "lemmas", "gloss")
EDGES_HEADER = ("src", "dst", "relation")
INVENTORY_HEADER = ("lemma", "pos", "senses")


def _read_rows(path: str | Path, header: tuple[str, ...]) -> Iterator[tuple[int, list[str]]]:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc}", path=str(path)) from exc
    lines = raw.splitlines()
    if not lines:
        raise ParseError("empty file, expected header", path=str(path), line=1)
    got = tuple(lines[0].split("\t"))
    if got != header:
        raise ParseError(
            f"bad header {got!r}, expected {header!r}", path=str(path), line=1
        )
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        yield lineno, line.split("\t", maxsplit=len(header) - 1)


def load_nodes(path: str | Path) -> dict[SenseId, SenseNode]:
    nodes: dict[SenseId, SenseNode] = {}
    for lineno, cols in _read_rows(path, NODES_HEADER):
        if len(cols) != len(NODES_HEADER):
            raise ParseError(
                f"expected {len(NODES_HEADER)} columns, got {len(cols)}",
                path=str(path),
                line=lineno,
            )
        sense_id, pos_token, language, lemmas_field, gloss = cols
        try:
            node = SenseNode(
                id=sense_id,
                pos=PosTag.parse(pos_token),
                lemmas=tuple(l for l in lemmas_field.split("|") if l),
                gloss=gloss,
                language=language,
            )
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path), line=lineno) from exc
        if node.id in nodes:
            raise ParseError(f"duplicate node id {node.id!r}", path=str(path), line=lineno)
        nodes[node.id] = node
    return nodes


def load_edges(path: str | Path) -> list[tuple[SenseId, SenseId, str]]:
    edges = []
    for lineno, cols in _read_rows(path, EDGES_HEADER):
        if len(cols) != len(EDGES_HEADER):
            raise ParseError(
                f"expected {len(EDGES_HEADER)} columns, got {len(cols)}",
                path=str(path),
                line=lineno,
            )
        edges.append((cols[0], cols[1], cols[2]))
    return edges


def load_graph(nodes_path: str | Path, edges_path: str | Path) -> SemanticGraph:
    nodes = load_nodes(nodes_path)
    try:
        return SemanticGraph(nodes, load_edges(edges_path))
    except ValueError as exc:
        raise ParseError(str(exc), path=str(edges_path)) from exc


def load_inventory(path: str | Path) -> SenseInventory:
    entries: dict[tuple[str, PosTag], tuple[SenseId, ...]] = {}
    for lineno, cols in _read_rows(path, INVENTORY_HEADER):
        if len(cols) != len(INVENTORY_HEADER):
            raise ParseError(
                f"expected {len(INVENTORY_HEADER)} columns, got {len(cols)}",
                path=str(path),
                line=lineno,
            )
        lemma, pos_token, senses_field = cols
        try:
            pos = PosTag.parse(pos_token)
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path), line=lineno) from exc
        key = (lemma.lower(), pos)
        if key in entries:
            raise ParseError(
                f"duplicate inventory entry for ({lemma!r}, {pos.value})",
                path=str(path),
                line=lineno,
            )
        senses = tuple(s for s in senses_field.split(",") if s)
        if not senses:
            raise ParseError(
                f"entry ({lemma!r}, {pos.value}) lists no senses",
                path=str(path),
                line=lineno,
            )
        entries[key] = senses
    try:
        return SenseInventory(entries)
    except ValueError as exc:
        raise ParseError(str(exc), path=str(path)) from exc


def write_nodes(nodes: Mapping[SenseId, SenseNode], path: str | Path) -> None:
    lines = ["\t".join(NODES_HEADER)]
    for nid in sorted(nodes):
        n = nodes[nid]
        lines.append(
            "\t".join((n.id, n.pos.value, n.language, "|".join(n.lemmas), n.gloss))
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_edges(graph: SemanticGraph, path: str | Path) -> None:
    lines = ["\t".join(EDGES_HEADER)]
    for a, b, rel in sorted(graph.edges()):
        lines.append(f"{a}\t{b}\t{rel}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_inventory(inventory: SenseInventory, path: str | Path) -> None:
    lines = ["\t".join(INVENTORY_HEADER)]
    for (lemma, pos), senses in sorted(
        inventory, key=lambda item: (item[0][0], item[0][1].value)
    ):
        lines.append(f"{lemma}\t{pos.value}\t{','.join(senses)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
