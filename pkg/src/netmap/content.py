"""News-source classification of cited URLs, per-group share tables and
amplifier-account detection."""

from __future__ import annotations

import logging
import re
import statistics
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping

from .domains import domain_ancestors, normalize_domain
from .errors import DomainError, InputFormatError
from .graph import CitationRecord, _open_lines

log = logging.getLogger(__name__)


class Category(str, Enum):
    JUNK = "Junk"
    PROFESSIONAL = "Professional"
    STATE_SPONSORED = "StateSponsored"
    VETOPS = "VetOps"
    UNCLASSIFIED = "Unclassified"

    @classmethod
    def parse(cls, value: str | Category) -> Category:
        if isinstance(value, cls):
            return value
        key = re.sub(r"[^a-z]", "", str(value).lower())
        key = _ALIASES.get(key, key)
        for c in cls:
            if c.value.lower() == key and c is not cls.UNCLASSIFIED:
                return c
        raise ValueError(f"unknown news category {value!r}")

    def __str__(self) -> str:
        return self.value


_ALIASES = {
    "junknews": "junk",
    "professionalnews": "professional",
    "state": "statesponsored",
    "statesponsorednews": "statesponsored",
    "vetopsnews": "vetops",
}

# column order of the share table
NEWS_CATEGORIES = (Category.JUNK, Category.PROFESSIONAL, Category.STATE_SPONSORED, Category.VETOPS)
# domains whose hits feed coverage and consistency
TRACKED_CATEGORIES = (Category.JUNK, Category.STATE_SPONSORED, Category.VETOPS)
CATEGORY_TITLES = {
    Category.JUNK: "Junk",
    Category.PROFESSIONAL: "Professional",
    Category.STATE_SPONSORED: "State Sponsored",
    Category.VETOPS: "VetOps",
}


class DomainDictionary(Mapping[str, Category]):
    """Normalized base domain -> news category."""

    def __init__(self, entries: Mapping[str, Category | str] | Iterable[tuple[str, Category | str]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        self._entries: dict[str, Category] = {}
        for domain, cat in items:
            norm = normalize_domain(domain)
            cat = Category.parse(cat)
            prev = self._entries.get(norm)
            if prev is not None and prev is not cat:
                raise ValueError(f"domain {norm!r} listed as both {prev} and {cat}")
            self._entries[norm] = cat

    def __getitem__(self, domain: str) -> Category:
        return self._entries[domain]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._entries))

    def __len__(self) -> int:
        return len(self._entries)

    def match(self, domain: str) -> str | None:
        """Most specific dictionary entry covering ``domain`` (itself or a
        parent up to its registrable domain)."""
        for cand in domain_ancestors(domain):
            if cand in self._entries:
                return cand
        return None

    def tracked(self, categories: Iterable[Category]) -> frozenset[str]:
        categories = set(categories)
        return frozenset(d for d, c in self._entries.items() if c in categories)


def load_dictionary(source) -> DomainDictionary:
    """Read ``domain<TAB>category`` lines."""
    lines, name, fh = _open_lines(source)
    pairs = []
    seen: dict[str, tuple[int, Category]] = {}
    try:
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split("\t")]
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise InputFormatError(f"expected 'domain<TAB>category', got {line!r}", lineno, name)
            try:
                domain = normalize_domain(fields[0])
                cat = Category.parse(fields[1])
            except (DomainError, ValueError) as exc:
                raise InputFormatError(str(exc), lineno, name) from None
            if domain in seen and seen[domain][1] is not cat:
                raise InputFormatError(
                    f"{domain!r} already classified as {seen[domain][1]} on line {seen[domain][0]}", lineno, name)
            seen[domain] = (lineno, cat)
            pairs.append((domain, cat))
    finally:
        if fh is not None:
            fh.close()
    return DomainDictionary(pairs)


def classify_source(domain: str, dictionary: DomainDictionary) -> Category:
    entry = dictionary.match(domain)
    return Category.UNCLASSIFIED if entry is None else dictionary[entry]


@dataclass(frozen=True)
class ShareRow:
    percent: Mapping[Category, float]
    n: int

    @property
    def total_percent(self) -> float:
        return sum(self.percent.values())


@dataclass(frozen=True)
class ShareTable:
    rows: Mapping[str, ShareRow]
    overall: ShareRow
    unclassified: int = 0
    unmapped: int = 0


def _row(counts: Mapping[Category, int]) -> ShareRow:
    n = sum(counts.values())
    if n == 0:
        return ShareRow({c: 0.0 for c in NEWS_CATEGORIES}, 0)
    return ShareRow({c: 100.0 * counts.get(c, 0) / n for c in NEWS_CATEGORIES}, n)


def share_table(citations: Iterable[CitationRecord], grouping, dictionary: DomainDictionary) -> ShareTable:
    """Percent of each group's classified links falling in each category.

    Unclassified links are left out of the denominators. Citations from
    accounts outside the grouping are dropped and counted in ``unmapped``.
    """
    group_of = grouping.group_of
    per_group: dict[str, dict[Category, int]] = {g: {} for g in grouping.labels}
    overall: dict[Category, int] = {}
    unclassified = unmapped = 0
    for c in citations:
        g = group_of.get(c.account)
        if g is None:
            unmapped += 1
            continue
        cat = classify_source(c.base_domain, dictionary)
        if cat is Category.UNCLASSIFIED:
            unclassified += 1
            continue
        per_group[g][cat] = per_group[g].get(cat, 0) + 1
        overall[cat] = overall.get(cat, 0) + 1
    if not overall:
        raise ValueError("no classifiable citations from grouped accounts")
    if unmapped:
        log.info("share_table: dropped %d citation(s) from ungrouped accounts", unmapped)
    return ShareTable({g: _row(per_group[g]) for g in grouping.labels}, _row(overall), unclassified, unmapped)


@dataclass(frozen=True)
class Amplifier:
    account: str
    out_share_count: int
    median_reshares: float
    categories: tuple[Category, ...]


@dataclass(frozen=True)
class AmplifierReport:
    accounts: tuple[Amplifier, ...]
    min_shares: int
    max_median_reshare: float

    def __len__(self) -> int:
        return len(self.accounts)

    @property
    def ids(self) -> list[str]:
        return [a.account for a in self.accounts]


AMPLIFIED_CATEGORIES = (Category.JUNK, Category.STATE_SPONSORED)


def detect_amplifiers(citations: Iterable[CitationRecord], dictionary: DomainDictionary,
                      min_shares: int = 50, max_median_reshare: float = 1) -> AmplifierReport:
    """Accounts that push out many junk or state-sponsored links that hardly
    anyone reshares.

    An account is flagged when its link count in Junk or in StateSponsored
    reaches ``min_shares`` and the median reshare count over all of its
    Junk and StateSponsored posts is at most ``max_median_reshare``.
    """
    if min_shares < 1:
        raise ValueError(f"min_shares must be positive, got {min_shares}")
    if max_median_reshare < 0:
        raise ValueError(f"max_median_reshare must be non-negative, got {max_median_reshare}")
    per_account: dict[str, dict[Category, list[int]]] = {}
    for c in citations:
        cat = classify_source(c.base_domain, dictionary)
        if cat in AMPLIFIED_CATEGORIES:
            per_account.setdefault(c.account, {}).setdefault(cat, []).append(c.shares)
    found = []
    for account, by_cat in per_account.items():
        flagged = tuple(cat for cat in AMPLIFIED_CATEGORIES if len(by_cat.get(cat, ())) >= min_shares)
        if not flagged:
            continue
        reshares = [s for v in by_cat.values() for s in v]
        med = statistics.median(reshares)
        if med <= max_median_reshare:
            found.append(Amplifier(account, len(reshares), float(med), flagged))
    found.sort(key=lambda a: (-a.out_share_count, a.account))
    return AmplifierReport(tuple(found), min_shares, max_median_reshare)
