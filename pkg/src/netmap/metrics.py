"""Between-group heterophily and group coverage/consistency over domain hits."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Iterable, Mapping

from .clustering import Grouping
from .content import TRACKED_CATEGORIES, Category, DomainDictionary
from .graph import CitationRecord, InteractionGraph

log = logging.getLogger(__name__)


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class TieCounts:
    """Undirected tie counts per unordered group pair, diagonal included."""

    pair_ties: Mapping[tuple[str, str], int]
    total_ties: int
    group_sizes: Mapping[str, int]
    dropped_nodes: int = 0

    def __post_init__(self):
        if sum(self.pair_ties.values()) != self.total_ties:
            raise ValueError("total_ties must equal the sum of pair_ties")
        for a, b in self.pair_ties:
            if a not in self.group_sizes or b not in self.group_sizes:
                raise ValueError(f"pair ({a}, {b}) refers to an unknown group")

    @property
    def groups(self) -> list[str]:
        return sorted(self.group_sizes)

    @property
    def population(self) -> int:
        return sum(self.group_sizes.values())

    def actual(self, a: str, b: str) -> int:
        return self.pair_ties.get(_pair(a, b), 0)

    def endpoints(self, group: str) -> int:
        """Tie endpoints inside ``group``: within-group ties count twice."""
        total = 0
        for (a, b), c in self.pair_ties.items():
            total += c * ((a == group) + (b == group))
        return total

    @classmethod
    def from_pairs(cls, pair_ties: Mapping[tuple[str, str], int], group_sizes: Mapping[str, int]) -> TieCounts:
        merged: dict[tuple[str, str], int] = {}
        for (a, b), c in pair_ties.items():
            merged[_pair(a, b)] = merged.get(_pair(a, b), 0) + int(c)
        return cls(merged, sum(merged.values()), dict(group_sizes))


def tie_counts(graph: InteractionGraph, grouping: Grouping, kinds=None) -> TieCounts:
    """Count undirected ties (distinct account pairs) between and within groups.

    Accounts outside the grouping are dropped and counted in ``dropped_nodes``.
    """
    if not grouping.groups:
        raise ValueError("grouping has no groups")
    group_of = grouping.group_of
    sizes = grouping.sizes()
    counts = {_pair(a, b): 0 for a, b in combinations_with_replacement(sorted(sizes), 2)}
    seen = set()
    for e in graph.edges(kinds):
        key = _pair(e.src, e.dst)
        if key in seen:
            continue
        seen.add(key)
        ga, gb = group_of.get(e.src), group_of.get(e.dst)
        if ga is None or gb is None:
            continue
        counts[_pair(ga, gb)] += 1
    dropped = len(graph.nodes - group_of.keys())
    if dropped:
        log.info("tie_counts: %d graph node(s) outside the grouping were dropped", dropped)
    return TieCounts(counts, sum(counts.values()), sizes, dropped)


def expected_ties(counts: TieCounts, pair: tuple[str, str]) -> float:
    """Ties expected between a pair if every tie endpoint of a group reached
    any map account with equal probability.

    Each endpoint carries half a tie; a group with ``d`` endpoints therefore
    sends ``d/2 * n_other / N`` ties to a group of size ``n_other``.
    """
    a, b = pair
    for g in (a, b):
        if g not in counts.group_sizes:
            raise KeyError(f"unknown group {g!r}")
        if counts.group_sizes[g] <= 0:
            raise ValueError(f"group {g!r} has size {counts.group_sizes[g]}")
    n = counts.population
    if a == b:
        return counts.endpoints(a) * counts.group_sizes[a] / (2 * n)
    return (counts.endpoints(a) * counts.group_sizes[b] + counts.endpoints(b) * counts.group_sizes[a]) / (2 * n)


@dataclass(frozen=True)
class HeterophilyMatrix:
    """Symmetric per-pair surfaces; every mapping holds both (a, b) and (b, a).

    ``index`` is ``log_ratio`` shifted so its minimum is 0.
    """

    groups: tuple[str, ...]
    actual: Mapping[tuple[str, str], float]
    expected: Mapping[tuple[str, str], float]
    raw_ratio: Mapping[tuple[str, str], float]
    log_ratio: Mapping[tuple[str, str], float]
    index: Mapping[tuple[str, str], float]
    epsilon: float = field(default=0.0)

    def pairs(self) -> list[tuple[str, str]]:
        """Upper triangle, diagonal included, in group order."""
        g = self.groups
        return [(g[i], g[j]) for i in range(len(g)) for j in range(i, len(g))]

    @classmethod
    def from_index(cls, index: Mapping[tuple[str, str], float]) -> HeterophilyMatrix:
        """Matrix carrying only an index surface (e.g. transcribed from a table)."""
        groups = sorted({g for p in index for g in p})
        full = {}
        for (a, b), v in index.items():
            full[(a, b)] = full[(b, a)] = float(v)
        missing = [(a, b) for a in groups for b in groups if (a, b) not in full]
        if missing:
            raise ValueError(f"index does not cover pairs {missing[:5]}")
        empty = {k: math.nan for k in full}
        return cls(tuple(groups), empty, empty, empty, empty, full)


def heterophily(counts: TieCounts) -> HeterophilyMatrix:
    """Ratio of actual to expected ties per group pair, its natural log, and
    the log shifted to be non-negative.

    Zero ratios are replaced by ``1 / (2 * total_ties)`` before taking logs.
    """
    groups = tuple(counts.groups)
    eps = 1.0 / (2 * max(counts.total_ties, 1))
    actual, expected, ratio, logs = {}, {}, {}, {}
    for a, b in combinations_with_replacement(groups, 2):
        act = counts.actual(a, b)
        exp = expected_ties(counts, (a, b))
        r = act / exp if exp > 0 else 0.0
        lr = math.log(r if r > 0 else eps)
        for key in {(a, b), (b, a)}:
            actual[key], expected[key], ratio[key], logs[key] = float(act), exp, r, lr
    floor = min(logs.values())
    index = {k: v - floor for k, v in logs.items()}
    return HeterophilyMatrix(groups, actual, expected, ratio, logs, index, eps)


# ---------------------------------------------------------------------------
# coverage and consistency


@dataclass(frozen=True)
class HitMatrix:
    """Citation hits from each group to each tracked domain."""

    groups: tuple[str, ...]
    tracked: frozenset[str]
    hits: Mapping[tuple[str, str], int]

    def __post_init__(self):
        for g, d in self.hits:
            if d not in self.tracked:
                raise ValueError(f"domain {d!r} is not tracked")
            if g not in self.groups:
                raise ValueError(f"group {g!r} is unknown")
            if self.hits[(g, d)] < 0:
                raise ValueError("hit counts must be non-negative")

    def group_total(self, group: str) -> int:
        return sum(c for (g, _), c in self.hits.items() if g == group)

    @property
    def total(self) -> int:
        return sum(self.hits.values())


def build_hit_matrix(citations: Iterable[CitationRecord], grouping: Grouping, dictionary: DomainDictionary,
                     categories: Iterable[Category] = TRACKED_CATEGORIES) -> HitMatrix:
    """One hit per citation record whose domain falls in ``categories``.

    Domains are credited to the dictionary entry they match, so a citation of
    ``de.rt.com`` counts as a hit on ``rt.com``.
    """
    categories = frozenset(categories)
    tracked = dictionary.tracked(categories)
    group_of = grouping.group_of
    hits: dict[tuple[str, str], int] = {}
    for c in citations:
        g = group_of.get(c.account)
        if g is None:
            continue
        entry = dictionary.match(c.base_domain)
        if entry is None or dictionary[entry] not in categories:
            continue
        hits[(g, entry)] = hits.get((g, entry), 0) + 1
    return HitMatrix(tuple(grouping.labels), tracked, hits)


def coverage(hits: HitMatrix, group: str) -> float:
    """Percent of tracked domains the group linked to at least once."""
    if not hits.tracked:
        raise ValueError("no tracked domains")
    if group not in hits.groups:
        raise KeyError(f"unknown group {group!r}")
    reached = {d for (g, d), c in hits.hits.items() if g == group and c > 0}
    return 100.0 * len(reached) / len(hits.tracked)


def consistency(hits: HitMatrix, group: str) -> float:
    """Percent of all hits on tracked domains that came from the group."""
    if group not in hits.groups:
        raise KeyError(f"unknown group {group!r}")
    total = hits.total
    if total == 0:
        raise ValueError("no hits on tracked domains")
    return 100.0 * hits.group_total(group) / total

