"""Interaction graph model, edge-list and citation ingestion, snowball sampling
and k-core reduction.

Edge lists are UTF-8 text, one edge per line, ``src<TAB>dst[<TAB>kind]``.
Lines starting with ``#`` are comments, except the snapshot pragma
``#@node<TAB>id`` which records an isolated node so that a serialized graph
loads back identically.
"""

from __future__ import annotations

import io
import logging
import os
from collections import deque
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from functools import cached_property
from typing import Iterable, NamedTuple, TextIO

from .domains import normalize_domain
from .errors import DomainError, InputFormatError, MissingNodesError

log = logging.getLogger(__name__)

NODE_PRAGMA = "#@node"


class EdgeKind(str, Enum):
    FOLLOW = "follow"
    LIKE = "like"
    MENTION = "mention"

    @classmethod
    def parse(cls, value: str | EdgeKind) -> EdgeKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown edge kind {value!r} (expected one of {choices})") from None

    def __str__(self) -> str:
        return self.value


class Edge(NamedTuple):
    src: str
    dst: str
    kind: EdgeKind


def _kinds(kinds) -> tuple[EdgeKind, ...]:
    if kinds is None:
        return tuple(EdgeKind)
    if isinstance(kinds, (str, EdgeKind)):
        kinds = [kinds]
    return tuple(sorted({EdgeKind.parse(k) for k in kinds}, key=lambda k: k.value))


class InteractionGraph:
    """Directed, typed, simple graph of accounts.

    Edges are deduplicated per kind; the same ordered pair may carry several
    kinds (a follow and a mention). Instances are immutable.
    """

    def __init__(self, nodes: Iterable[str] = (), edges: Iterable[Edge | tuple] = ()):
        node_set = set()
        for n in nodes:
            if not n:
                raise ValueError("account ids must be non-empty")
            node_set.add(n)
        by_kind: dict[EdgeKind, set[tuple[str, str]]] = {k: set() for k in EdgeKind}
        for e in edges:
            src, dst, kind = e
            kind = EdgeKind.parse(kind)
            if not src or not dst:
                raise ValueError("account ids must be non-empty")
            if src == dst:
                raise ValueError(f"self-loop on {src!r} is not allowed")
            by_kind[kind].add((src, dst))
            node_set.add(src)
            node_set.add(dst)
        self._nodes = frozenset(node_set)
        self._edges = {k: frozenset(v) for k, v in by_kind.items()}
        self.dropped_self_loops = 0

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], kind=EdgeKind.FOLLOW, nodes=()) -> InteractionGraph:
        kind = EdgeKind.parse(kind)
        return cls(nodes, (Edge(a, b, kind) for a, b in pairs))

    @property
    def nodes(self) -> frozenset[str]:
        return self._nodes

    def edges(self, kinds=None) -> list[Edge]:
        """All edges of the given kinds, sorted by (src, dst, kind)."""
        out = [Edge(a, b, k) for k in _kinds(kinds) for a, b in self._edges[k]]
        out.sort(key=lambda e: (e.src, e.dst, e.kind.value))
        return out

    def edge_pairs(self, kind) -> frozenset[tuple[str, str]]:
        return self._edges[EdgeKind.parse(kind)]

    def edge_count(self, kinds=None) -> int:
        return sum(len(self._edges[k]) for k in _kinds(kinds))

    def has_edge(self, src: str, dst: str, kind=EdgeKind.FOLLOW) -> bool:
        return (src, dst) in self._edges[EdgeKind.parse(kind)]

    @cached_property
    def _out(self) -> dict[EdgeKind, dict[str, frozenset[str]]]:
        return {k: _index(pairs, 0) for k, pairs in self._edges.items()}

    @cached_property
    def _in(self) -> dict[EdgeKind, dict[str, frozenset[str]]]:
        return {k: _index(pairs, 1) for k, pairs in self._edges.items()}

    def successors(self, node: str, kind=EdgeKind.FOLLOW) -> frozenset[str]:
        return self._out[EdgeKind.parse(kind)].get(node, frozenset())

    def predecessors(self, node: str, kind=EdgeKind.FOLLOW) -> frozenset[str]:
        return self._in[EdgeKind.parse(kind)].get(node, frozenset())

    def out_degree(self, node: str, kind=EdgeKind.FOLLOW) -> int:
        return len(self.successors(node, kind))

    def in_degree(self, node: str, kind=EdgeKind.FOLLOW) -> int:
        return len(self.predecessors(node, kind))

    def undirected_adjacency(self, kinds=None) -> dict[str, set[str]]:
        """Distinct neighbours of every node on the undirected projection of ``kinds``."""
        adj: dict[str, set[str]] = {n: set() for n in self._nodes}
        for k in _kinds(kinds):
            for a, b in self._edges[k]:
                adj[a].add(b)
                adj[b].add(a)
        return adj

    def neighbors(self, node: str, kinds=None) -> set[str]:
        out: set[str] = set()
        for k in _kinds(kinds):
            out |= self._out[k].get(node, frozenset())
            out |= self._in[k].get(node, frozenset())
        return out

    def degree(self, node: str, kinds=None) -> int:
        return len(self.neighbors(node, kinds))

    def subgraph(self, nodes: Iterable[str]) -> InteractionGraph:
        """Induced subgraph on ``nodes`` (all edge kinds kept)."""
        keep = frozenset(nodes) & self._nodes
        g = InteractionGraph.__new__(InteractionGraph)
        g._nodes = keep
        g._edges = {
            k: frozenset(p for p in pairs if p[0] in keep and p[1] in keep)
            for k, pairs in self._edges.items()
        }
        g.dropped_self_loops = 0
        return g

    def restrict(self, kinds) -> InteractionGraph:
        """Same node set, only edges of ``kinds``."""
        wanted = set(_kinds(kinds))
        g = InteractionGraph.__new__(InteractionGraph)
        g._nodes = self._nodes
        g._edges = {k: (pairs if k in wanted else frozenset()) for k, pairs in self._edges.items()}
        g.dropped_self_loops = 0
        return g

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node: object) -> bool:
        return node in self._nodes

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._nodes, tuple(self._edges[k] for k in EdgeKind)))

    def __repr__(self) -> str:
        return f"InteractionGraph(nodes={len(self._nodes)}, edges={self.edge_count()})"


def _index(pairs: Iterable[tuple[str, str]], pos: int) -> dict[str, frozenset[str]]:
    tmp: dict[str, set[str]] = {}
    for p in pairs:
        tmp.setdefault(p[pos], set()).add(p[1 - pos])
    return {n: frozenset(v) for n, v in tmp.items()}


# ---------------------------------------------------------------------------
# text formats


def _open_lines(source) -> tuple[Iterable[str], str | None, TextIO | None]:
    if isinstance(source, (str, os.PathLike)):
        fh = open(source, encoding="utf-8", newline="")
        return fh, os.fspath(source), fh
    return source, getattr(source, "name", None), None


def load_edge_list(source, kind=EdgeKind.FOLLOW) -> InteractionGraph:
    """Read an edge list from a path or an iterable of lines.

    A third column, when present, overrides ``kind`` for that record.
    Self-loops are skipped and counted in ``graph.dropped_self_loops``.
    """
    kind = EdgeKind.parse(kind)
    lines, name, fh = _open_lines(source)
    nodes: set[str] = set()
    edges: list[Edge] = []
    skipped = 0
    try:
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if line.startswith(NODE_PRAGMA + "\t"):
                    node = line[len(NODE_PRAGMA) + 1:].strip()
                    if not node:
                        raise InputFormatError("empty node id in node pragma", lineno, name)
                    nodes.add(node)
                continue
            fields = [f.strip() for f in line.split("\t")]
            if len(fields) not in (2, 3) or not fields[0] or not fields[1]:
                raise InputFormatError(
                    f"expected 'src<TAB>dst[<TAB>kind]', got {line!r}", lineno, name)
            rec_kind = kind
            if len(fields) == 3:
                try:
                    rec_kind = EdgeKind.parse(fields[2])
                except ValueError as exc:
                    raise InputFormatError(str(exc), lineno, name) from None
            if fields[0] == fields[1]:
                skipped += 1
                nodes.add(fields[0])
                continue
            edges.append(Edge(fields[0], fields[1], rec_kind))
    finally:
        if fh is not None:
            fh.close()
    if skipped:
        log.warning("skipped %d self-loop record(s)%s", skipped, f" in {name}" if name else "")
    g = InteractionGraph(nodes, edges)
    g.dropped_self_loops = skipped
    return g


def format_edge_list(graph: InteractionGraph) -> str:
    """Deterministic snapshot: isolated-node pragmas, then edges sorted."""
    buf = io.StringIO()
    connected = set()
    edges = graph.edges()
    for e in edges:
        connected.add(e.src)
        connected.add(e.dst)
    for n in sorted(graph.nodes - connected):
        buf.write(f"{NODE_PRAGMA}\t{n}\n")
    for e in edges:
        buf.write(f"{e.src}\t{e.dst}\t{e.kind.value}\n")
    return buf.getvalue()


def dump_edge_list(graph: InteractionGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_edge_list(graph))


def load_account_list(source) -> list[str]:
    """One account id per line; blank lines and ``#`` comments ignored."""
    lines, _, fh = _open_lines(source)
    try:
        out = []
        for raw in lines:
            line = raw.strip()
            if line and not line.startswith("#"):
                out.append(line)
        return out
    finally:
        if fh is not None:
            fh.close()


@dataclass(frozen=True)
class CitationRecord:
    account: str
    url: str
    base_domain: str
    shares: int = 0
    posted_at: datetime | None = None

    def __post_init__(self):
        if not self.account:
            raise ValueError("citation account must be non-empty")
        if self.shares < 0:
            raise ValueError(f"share count must be non-negative, got {self.shares}")

    @classmethod
    def from_url(cls, account: str, url: str, shares: int = 0, posted_at: datetime | None = None) -> CitationRecord:
        return cls(account, url, normalize_domain(url), shares, posted_at)


def _parse_timestamp(text: str) -> datetime:
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


def load_citations(source) -> list[CitationRecord]:
    """Read ``account<TAB>url<TAB>shares[<TAB>iso8601]`` records."""
    lines, name, fh = _open_lines(source)
    records = []
    try:
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split("\t")]
            if len(fields) not in (3, 4) or not fields[0] or not fields[1]:
                raise InputFormatError(
                    f"expected 'account<TAB>url<TAB>shares[<TAB>timestamp]', got {line!r}", lineno, name)
            try:
                shares = int(fields[2])
            except ValueError:
                raise InputFormatError(f"share count {fields[2]!r} is not an integer", lineno, name) from None
            if shares < 0:
                raise InputFormatError(f"negative share count {shares}", lineno, name)
            posted = None
            if len(fields) == 4 and fields[3]:
                try:
                    posted = _parse_timestamp(fields[3])
                except ValueError:
                    raise InputFormatError(f"bad timestamp {fields[3]!r}", lineno, name) from None
            try:
                domain = normalize_domain(fields[1])
            except DomainError as exc:
                raise InputFormatError(str(exc), lineno, name) from None
            records.append(CitationRecord(fields[0], fields[1], domain, shares, posted))
    finally:
        if fh is not None:
            fh.close()
    return records


# ---------------------------------------------------------------------------
# sampling and reduction


def snowball_expand(graph: InteractionGraph, seeds: Iterable[str], depth: int, kinds=None) -> frozenset[str]:
    """Accounts within ``depth`` steps of the seeds, stepping along edges in
    either direction (liked or liked-by)."""
    seeds = set(seeds)
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    missing = seeds - graph.nodes
    if missing:
        raise MissingNodesError(missing)
    kinds = _kinds(kinds)
    seen = set(seeds)
    frontier = deque((s, 0) for s in sorted(seeds))
    while frontier:
        node, dist = frontier.popleft()
        if dist == depth:
            continue
        for nb in graph.neighbors(node, kinds):
            if nb not in seen:
                seen.add(nb)
                frontier.append((nb, dist + 1))
    return frozenset(seen)


def kcore_decompose(graph: InteractionGraph, k: int, kinds=None) -> InteractionGraph:
    """Maximal induced subgraph whose nodes all have at least ``k`` distinct
    neighbours (undirected projection of ``kinds``) inside it."""
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k == 0:
        return graph
    adj = graph.undirected_adjacency(kinds)
    deg = {n: len(nbrs) for n, nbrs in adj.items()}
    removed = set()
    queue = deque(n for n in sorted(adj) if deg[n] < k)
    removed.update(queue)
    while queue:
        n = queue.popleft()
        for nb in adj[n]:
            if nb in removed:
                continue
            deg[nb] -= 1
            if deg[nb] < k:
                removed.add(nb)
                queue.append(nb)
    return graph.subgraph(graph.nodes - removed)


def core_numbers(graph: InteractionGraph, kinds=None) -> dict[str, int]:
    """Core number of every node (Batagelj-Zaversnik bucket algorithm)."""
    adj = graph.undirected_adjacency(kinds)
    deg = {n: len(v) for n, v in adj.items()}
    if not deg:
        return {}
    max_deg = max(deg.values())
    buckets: list[set[str]] = [set() for _ in range(max_deg + 1)]
    for n, d in deg.items():
        buckets[d].add(n)
    core: dict[str, int] = {}
    current = 0
    for _ in range(len(deg)):
        while not buckets[current]:
            current += 1
        n = buckets[current].pop()
        core[n] = current
        for nb in adj[n]:
            if nb in core:
                continue
            d = deg[nb]
            if d > current:
                buckets[d].discard(nb)
                buckets[d - 1].add(nb)
                deg[nb] = d - 1
    return core


@dataclass(frozen=True)
class KCoreParams:
    """Either a fixed ``k`` or a ``target_size`` from which k is chosen."""

    k: int | None = None
    target_size: int | None = None

    def __post_init__(self):
        if (self.k is None) == (self.target_size is None):
            raise ValueError("exactly one of k or target_size must be set")
        if self.k is not None and self.k < 0:
            raise ValueError(f"k must be non-negative, got {self.k}")
        if self.target_size is not None and self.target_size < 1:
            raise ValueError(f"target_size must be positive, got {self.target_size}")


def select_k_for_target(graph: InteractionGraph, target_size: int, kinds=None) -> tuple[int, InteractionGraph]:
    """Largest k whose k-core still holds at least ``target_size`` nodes."""
    if target_size < 1:
        raise ValueError(f"target_size must be positive, got {target_size}")
    if target_size > len(graph):
        raise ValueError(f"target_size {target_size} exceeds graph size {len(graph)}")
    cores = core_numbers(graph, kinds)
    values = sorted(cores.values(), reverse=True)
    # values[target_size-1] is the core number of the target_size-th deepest node
    k = values[target_size - 1]
    core = graph.subgraph(n for n, c in cores.items() if c >= k)
    log.info("selected k=%d: core of %d nodes (target %d)", k, len(core), target_size)
    return k, core


def reduce_graph(graph: InteractionGraph, params: KCoreParams, kinds=None) -> tuple[int, InteractionGraph]:
    if params.k is not None:
        return params.k, kcore_decompose(graph, params.k, kinds)
    return select_k_for_target(graph, params.target_size, kinds)
