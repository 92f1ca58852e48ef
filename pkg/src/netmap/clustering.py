"""Bipartite affiliation, structural similarity and agglomerative clustering
of map accounts into segments, then segments into labeled groups."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import AssignmentError, InputFormatError, MissingNodesError
from .graph import EdgeKind, InteractionGraph, _open_lines

RESIDUAL_LABEL = "Other"


@dataclass(frozen=True, eq=False)
class AffiliationMatrix:
    """Binary incidence of map accounts (rows) against the entities they
    point to (columns). Rows are sorted account ids."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    cells: sp.csr_matrix
    relation: EdgeKind = EdgeKind.FOLLOW

    def __post_init__(self):
        if self.cells.shape != (len(self.rows), len(self.cols)):
            raise ValueError(f"cells shape {self.cells.shape} does not match {len(self.rows)}x{len(self.cols)}")

    @cached_property
    def row_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.rows)}

    @cached_property
    def row_counts(self) -> np.ndarray:
        return np.asarray(self.cells.sum(axis=1)).ravel().astype(np.int64)

    @property
    def empty_rows(self) -> tuple[str, ...]:
        """Accounts with no affiliation at all."""
        return tuple(a for a, c in zip(self.rows, self.row_counts) if c == 0)

    def _row(self, r: int | str) -> int:
        return self.row_index[r] if isinstance(r, str) else int(r)

    def row_set(self, r: int | str) -> frozenset[str]:
        i = self._row(r)
        start, stop = self.cells.indptr[i], self.cells.indptr[i + 1]
        return frozenset(self.cols[j] for j in self.cells.indices[start:stop])

    def dense(self) -> np.ndarray:
        return self.cells.toarray().astype(np.int8)

    def select_columns(self, keep: np.ndarray) -> AffiliationMatrix:
        cells = self.cells[:, keep]
        cols = tuple(c for c, k in zip(self.cols, keep) if k)
        nonzero = np.asarray(cells.sum(axis=0)).ravel() > 0
        return AffiliationMatrix(self.rows, tuple(c for c, k in zip(cols, nonzero) if k),
                                 sp.csr_matrix(cells[:, nonzero]), self.relation)


def build_affiliation(graph: InteractionGraph, map_accounts: Iterable[str],
                      relation=EdgeKind.FOLLOW) -> AffiliationMatrix:
    """Cell (a, e) is 1 when map account ``a`` has a ``relation`` edge to ``e``.

    Entities can be any account in ``graph``, inside or outside the map.
    """
    relation = EdgeKind.parse(relation)
    rows = tuple(sorted(set(map_accounts)))
    if not rows:
        raise ValueError("map_accounts is empty")
    missing = set(rows) - graph.nodes
    if missing:
        raise MissingNodesError(missing)
    targets = sorted({e for a in rows for e in graph.successors(a, relation)})
    col_index = {e: j for j, e in enumerate(targets)}
    indptr = [0]
    indices: list[int] = []
    for a in rows:
        indices.extend(sorted(col_index[e] for e in graph.successors(a, relation)))
        indptr.append(len(indices))
    data = np.ones(len(indices), dtype=np.int8)
    cells = sp.csr_matrix((data, np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
                          shape=(len(rows), len(targets)))
    return AffiliationMatrix(rows, tuple(targets), cells, relation)


def similarity(matrix: AffiliationMatrix, a: int | str, b: int | str) -> float:
    """Cosine similarity of two binary affiliation rows; 0 if either is empty."""
    sa, sb = matrix.row_set(a), matrix.row_set(b)
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / math.sqrt(len(sa) * len(sb))


def similarity_matrix(matrix: AffiliationMatrix) -> np.ndarray:
    """Dense pairwise cosine similarity; rows with no affiliation score 0."""
    x = matrix.cells.astype(np.float64)
    overlap = (x @ x.T).toarray()
    counts = matrix.row_counts.astype(np.float64)
    # sqrt of the exact integer product, matching similarity() bit for bit
    denom = np.sqrt(np.outer(counts, counts))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, overlap / denom, 0.0)
    return np.clip(out, 0.0, 1.0)


class Linkage(str, Enum):
    AVERAGE = "average"
    COMPLETE = "complete"
    SINGLE = "single"


@dataclass(frozen=True)
class HacParams:
    """Linkage plus exactly one cut: a segment count or a similarity threshold.

    Ties between equally similar cluster pairs go to the pair whose
    smallest member ids sort first (``tie_break="min-member"``), which is
    the same as the smallest row-index pair when rows are in id order.
    """

    linkage: Linkage = Linkage.AVERAGE
    n_segments: int | None = None
    threshold: float | None = None
    tie_break: str = "min-member"

    def __post_init__(self):
        object.__setattr__(self, "linkage", Linkage(self.linkage))
        if (self.n_segments is None) == (self.threshold is None):
            raise ValueError("exactly one of n_segments or threshold must be set")
        if self.n_segments is not None and self.n_segments < 1:
            raise ValueError(f"n_segments must be positive, got {self.n_segments}")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.tie_break != "min-member":
            raise ValueError(f"unknown tie_break rule {self.tie_break!r}")


@dataclass(frozen=True)
class Segment:
    id: int
    members: frozenset[str]
    label: str | None = None

    def __post_init__(self):
        if not self.members:
            raise ValueError(f"segment {self.id} has no members")


@dataclass(frozen=True)
class Merge:
    left: str
    right: str
    similarity: float
    size: int


@dataclass
class HacResult:
    segments: list[Segment]
    merges: list[Merge] = field(default_factory=list)
    residual: tuple[str, ...] = ()


def _agglomerate(sim: np.ndarray, keys: np.ndarray, linkage: Linkage,
                 n_clusters: int | None, threshold: float | None) -> tuple[list[list[int]], list[tuple[int, int, float, int]]]:
    n = sim.shape[0]
    S = np.array(sim, dtype=np.float64, copy=True)
    np.fill_diagonal(S, -np.inf)
    keys = np.array(keys, dtype=np.int64, copy=True)
    size = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    members = [[i] for i in range(n)]
    nn = np.full(n, -1, dtype=np.int64)
    nn_sim = np.full(n, -np.inf)

    def refresh(i: int) -> None:
        row = S[i]
        m = row.max()
        if m == -np.inf:
            nn[i], nn_sim[i] = -1, -np.inf
            return
        cand = np.flatnonzero(row == m)
        nn[i] = cand[np.argmin(keys[cand])]
        nn_sim[i] = m

    for i in range(n):
        refresh(i)

    merges = []
    n_active = n
    stop_at = n_clusters if n_clusters is not None else 1
    while n_active > stop_at:
        best = nn_sim.max()
        if best == -np.inf or (threshold is not None and best < threshold):
            break
        rows = np.flatnonzero(nn_sim == best)
        lo = np.minimum(keys[rows], keys[nn[rows]])
        hi = np.maximum(keys[rows], keys[nn[rows]])
        pick = np.lexsort((hi, lo))[0]
        a, b = int(rows[pick]), int(nn[rows[pick]])
        s, o = (a, b) if keys[a] < keys[b] else (b, a)
        merges.append((s, o, float(best), int(size[s] + size[o])))

        if linkage is Linkage.AVERAGE:
            new = (size[s] * S[s] + size[o] * S[o]) / (size[s] + size[o])
        elif linkage is Linkage.COMPLETE:
            new = np.minimum(S[s], S[o])
        else:
            new = np.maximum(S[s], S[o])
        new[~active] = -np.inf
        new[o] = -np.inf
        new[s] = -np.inf
        S[s, :] = new
        S[:, s] = new
        S[o, :] = -np.inf
        S[:, o] = -np.inf
        active[o] = False
        nn[o], nn_sim[o] = -1, -np.inf
        size[s] += size[o]
        members[s].extend(members[o])
        members[o] = []
        n_active -= 1

        refresh(s)
        stale = np.flatnonzero(active & ((nn == s) | (nn == o)))
        for i in stale:
            if i != s:
                refresh(int(i))
        others = np.flatnonzero(active)
        others = others[(others != s) & (nn[others] != s) & (nn[others] != o)]
        if others.size:
            v = S[others, s]
            better = (v > nn_sim[others]) | ((v == nn_sim[others]) & (keys[s] < keys[np.maximum(nn[others], 0)]))
            better &= v > -np.inf
            upd = others[better]
            nn[upd] = s
            nn_sim[upd] = v[better]

    clusters = [sorted(members[i]) for i in range(n) if active[i]]
    return clusters, merges


def run_hac(matrix: AffiliationMatrix, params: HacParams, sim: np.ndarray | None = None) -> HacResult:
    """Cluster the rows of ``matrix``; also returns the merge history.

    Rows without any affiliation are held out of the merging and returned
    together as a residual segment labeled ``"Other"``. With a segment-count
    cut the residual counts towards the requested number.
    """
    n = len(matrix.rows)
    if n < 1:
        raise ValueError("affiliation matrix has no rows")
    if params.n_segments is not None and params.n_segments > n:
        raise ValueError(f"cut target {params.n_segments} exceeds row count {n}")
    if sim is None:
        sim = similarity_matrix(matrix)

    counts = matrix.row_counts
    live = np.flatnonzero(counts > 0)
    empty = np.flatnonzero(counts == 0)
    residual = tuple(matrix.rows[i] for i in empty)

    target = params.n_segments
    if target is not None and len(empty):
        if target == 1:
            live = np.arange(n)
            empty = np.array([], dtype=np.int64)
            residual = ()
        else:
            target -= 1
        if target > len(live):
            raise ValueError(f"cut target {params.n_segments} exceeds the {len(live)} rows with affiliations "
                             f"plus one residual segment")

    clusters: list[list[str]] = []
    merges: list[Merge] = []
    if len(live):
        # tie-break keys are account-id ranks, so the result ignores row order
        ranks = np.empty(n, dtype=np.int64)
        ranks[np.argsort(np.array(matrix.rows, dtype=object), kind="stable")] = np.arange(n)
        sub = sim[np.ix_(live, live)]
        local, raw_merges = _agglomerate(sub, ranks[live], params.linkage, target, params.threshold)
        clusters = [[matrix.rows[live[i]] for i in c] for c in local]
        merges = [Merge(matrix.rows[live[a]], matrix.rows[live[b]], s, size) for a, b, s, size in raw_merges]

    clusters.sort(key=lambda c: (-len(c), min(c)))
    segments = [Segment(i, frozenset(c)) for i, c in enumerate(clusters)]
    if len(empty):
        segments.append(Segment(len(segments), frozenset(residual), RESIDUAL_LABEL))
    return HacResult(segments, merges, residual)


def hac_cluster(matrix: AffiliationMatrix, params: HacParams) -> list[Segment]:
    return run_hac(matrix, params).segments


def partition_labels(segments: Sequence[Segment], order: Sequence[str]) -> list[int]:
    """Segment id of every account in ``order``."""
    lookup = {a: s.id for s in segments for a in s.members}
    return [lookup[a] for a in order]


def adjusted_rand_index(labels_a: Sequence, labels_b: Sequence) -> float:
    """Adjusted Rand Index between two flat labelings of the same items."""
    if len(labels_a) != len(labels_b):
        raise ValueError("labelings differ in length")
    n = len(labels_a)
    if n < 2:
        return 1.0
    pairs = Counter(zip(labels_a, labels_b))
    comb = lambda x: x * (x - 1) / 2  # noqa: E731
    index = sum(comb(v) for v in pairs.values())
    sum_a = sum(comb(v) for v in Counter(labels_a).values())
    sum_b = sum(comb(v) for v in Counter(labels_b).values())
    expected = sum_a * sum_b / comb(n)
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


def stability_ari(matrix: AffiliationMatrix, params: HacParams, runs: int = 5,
                  column_fraction: float = 0.9, seed: int = 0) -> list[float]:
    """Re-cluster on random column subsamples and report the ARI of each
    run against the full-data partition. A diagnostic only."""
    base = partition_labels(hac_cluster(matrix, params), matrix.rows)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(runs):
        keep = rng.random(len(matrix.cols)) < column_fraction
        sub = matrix.select_columns(keep)
        p = params
        if p.n_segments is not None:
            p = HacParams(p.linkage, n_segments=min(p.n_segments, len(sub.rows)))
        other = partition_labels(hac_cluster(sub, p), matrix.rows)
        out.append(adjusted_rand_index(base, other))
    return out


def diagnostics_report(matrix: AffiliationMatrix, result: HacResult, params: HacParams,
                       stability: Sequence[float] = ()) -> dict:
    report = {
        "rows": len(matrix.rows),
        "entities": len(matrix.cols),
        "relation": matrix.relation.value,
        "params": {
            "linkage": params.linkage.value,
            "n_segments": params.n_segments,
            "threshold": params.threshold,
            "tie_break": params.tie_break,
        },
        "empty_rows": list(matrix.empty_rows),
        "segments": [{"id": s.id, "size": len(s.members), "label": s.label} for s in result.segments],
        "merges": [
            {"step": i, "left": m.left, "right": m.right, "similarity": round(m.similarity, 12), "size": m.size}
            for i, m in enumerate(result.merges)
        ],
    }
    if stability:
        report["stability_ari"] = [round(v, 12) for v in stability]
    return report


def write_diagnostics(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# segments into groups


@dataclass(frozen=True)
class Grouping:
    segments: tuple[Segment, ...]
    groups: tuple[tuple[str, frozenset[int]], ...]

    def __post_init__(self):
        seg_ids = [s.id for s in self.segments]
        if len(set(seg_ids)) != len(seg_ids):
            raise ValueError("duplicate segment ids")
        seen: set[str] = set()
        for s in self.segments:
            if seen & s.members:
                raise ValueError(f"segment {s.id} overlaps another segment")
            seen |= s.members
        labels = [g for g, _ in self.groups]
        if len(set(labels)) != len(labels):
            raise ValueError("group labels must be unique")
        owners = Counter(i for _, ids in self.groups for i in ids)
        if any(not ids for _, ids in self.groups):
            raise ValueError("every group needs at least one segment")
        bad = sorted(i for i in seg_ids if owners[i] != 1)
        unknown = sorted(set(owners) - set(seg_ids))
        if bad or unknown:
            raise AssignmentError(
                missing=[i for i in bad if owners[i] == 0],
                duplicate=[i for i in bad if owners[i] > 1],
                unknown=unknown)

    @property
    def labels(self) -> list[str]:
        return [g for g, _ in self.groups]

    @cached_property
    def _segment_by_id(self) -> dict[int, Segment]:
        return {s.id: s for s in self.segments}

    def members(self, label: str) -> frozenset[str]:
        ids = dict(self.groups)[label]
        return frozenset().union(*(self._segment_by_id[i].members for i in ids))

    @cached_property
    def group_of(self) -> dict[str, str]:
        return {a: g for g, _ in self.groups for a in self.members(g)}

    def sizes(self) -> dict[str, int]:
        return {g: len(self.members(g)) for g in self.labels}

    @property
    def population(self) -> int:
        return sum(len(s.members) for s in self.segments)


def load_assignment(source) -> list[tuple[int, str]]:
    """Read ``segment_id<TAB>group_label`` lines."""
    lines, name, fh = _open_lines(source)
    out = []
    try:
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split("\t")]
            if len(fields) != 2 or not fields[1]:
                raise InputFormatError(f"expected 'segment_id<TAB>group_label', got {line!r}", lineno, name)
            try:
                out.append((int(fields[0]), fields[1]))
            except ValueError:
                raise InputFormatError(f"segment id {fields[0]!r} is not an integer", lineno, name) from None
    finally:
        if fh is not None:
            fh.close()
    return out


def group_segments(segments: Sequence[Segment], assignment: Mapping[int, str] | Iterable[tuple[int, str]]) -> Grouping:
    """Assemble segments into groups; reports every missing, duplicated or
    unknown segment id at once."""
    pairs = list(assignment.items()) if isinstance(assignment, Mapping) else list(assignment)
    ids = {s.id for s in segments}
    counts = Counter(i for i, _ in pairs)
    missing = ids - set(counts)
    duplicate = {i for i, c in counts.items() if c > 1}
    unknown = set(counts) - ids
    if missing or duplicate or unknown:
        raise AssignmentError(missing, duplicate, unknown)
    by_label: dict[str, set[int]] = {}
    for i, label in pairs:
        by_label.setdefault(label, set()).add(i)
    groups = tuple((g, frozenset(by_label[g])) for g in sorted(by_label))
    return Grouping(tuple(sorted(segments, key=lambda s: s.id)), groups)


def format_segments(segments: Sequence[Segment]) -> str:
    lines = ["# segment_id\tlabel\taccount"]
    for s in sorted(segments, key=lambda s: s.id):
        for a in sorted(s.members):
            lines.append(f"{s.id}\t{s.label or ''}\t{a}")
    return "\n".join(lines) + "\n"


def load_segments(source) -> list[Segment]:
    lines, name, fh = _open_lines(source)
    members: dict[int, set[str]] = {}
    labels: dict[int, str | None] = {}
    try:
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3 or not fields[2]:
                raise InputFormatError(f"expected 'segment_id<TAB>label<TAB>account', got {line!r}", lineno, name)
            try:
                sid = int(fields[0])
            except ValueError:
                raise InputFormatError(f"segment id {fields[0]!r} is not an integer", lineno, name) from None
            members.setdefault(sid, set()).add(fields[2])
            labels[sid] = fields[1] or None
    finally:
        if fh is not None:
            fh.close()
    return [Segment(i, frozenset(members[i]), labels[i]) for i in sorted(members)]


def format_grouping(grouping: Grouping) -> str:
    lines = ["# group\tsegment_id\taccount"]
    seg = {s.id: s for s in grouping.segments}
    for label, ids in grouping.groups:
        for i in sorted(ids):
            for a in sorted(seg[i].members):
                lines.append(f"{label}\t{i}\t{a}")
    return "\n".join(lines) + "\n"


def load_grouping(source) -> Grouping:
    lines, name, fh = _open_lines(source)
    members: dict[int, set[str]] = {}
    assignment: dict[int, str] = {}
    try:
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise InputFormatError(f"expected 'group<TAB>segment_id<TAB>account', got {line!r}", lineno, name)
            try:
                sid = int(fields[1])
            except ValueError:
                raise InputFormatError(f"segment id {fields[1]!r} is not an integer", lineno, name) from None
            if assignment.setdefault(sid, fields[0]) != fields[0]:
                raise InputFormatError(f"segment {sid} listed under two groups", lineno, name)
            members.setdefault(sid, set()).add(fields[2])
    finally:
        if fh is not None:
            fh.close()
    segments = [Segment(i, frozenset(members[i])) for i in sorted(members)]
    return group_segments(segments, assignment)
