"""CSV emission of the group, heterophily, share and amplifier tables.

Integer rounding for display happens here and nowhere else.
"""

from __future__ import annotations

import csv
import io

from .clustering import Grouping
from .content import CATEGORY_TITLES, NEWS_CATEGORIES, AmplifierReport, ShareTable
from .metrics import HeterophilyMatrix, HitMatrix, consistency, coverage


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _int(v: float) -> str:
    return f"{v:.0f}"


def groups_table(grouping: Grouping, hits: HitMatrix) -> str:
    """Users N, Users %, Coverage and Consistency per group plus a Total row."""
    sizes = grouping.sizes()
    total = sum(sizes.values())
    has_hits = hits.total > 0
    rows = [["Group", "Users N", "Users %", "Coverage", "Consistency"]]
    for g in grouping.labels:
        cov = _int(coverage(hits, g)) if hits.tracked else "NA"
        con = _int(consistency(hits, g)) if has_hits else "NA"
        rows.append([g, sizes[g], _int(100.0 * sizes[g] / total), cov, con])
    rows.append(["Total", total, "", "", ""])
    return _csv(rows)


def heterophily_table(matrix: HeterophilyMatrix) -> str:
    """Upper-triangle index table with ``-`` below the diagonal."""
    g = list(matrix.groups)
    rows = [["Group", *g]]
    for i, a in enumerate(g):
        rows.append([a] + ["-" if j < i else _int(matrix.index[(a, b)]) for j, b in enumerate(g)])
    return _csv(rows)


def heterophily_detail(matrix: HeterophilyMatrix) -> str:
    rows = [["group_a", "group_b", "actual", "expected", "raw_ratio", "log_ratio", "index"]]
    for a, b in matrix.pairs():
        k = (a, b)
        rows.append([a, b, f"{matrix.actual[k]:.0f}", f"{matrix.expected[k]:.6f}", f"{matrix.raw_ratio[k]:.6f}",
                     f"{matrix.log_ratio[k]:.6f}", f"{matrix.index[k]:.6f}"])
    return _csv(rows)


def share_table_csv(table: ShareTable) -> str:
    header = ["Group"] + [f"{CATEGORY_TITLES[c]} %" for c in NEWS_CATEGORIES] + ["Total %", "N"]
    rows = [header]

    def line(label, row):
        pct = [f"{row.percent[c]:.1f}" for c in NEWS_CATEGORIES]
        return [label, *pct, f"{row.total_percent:.0f}" if row.n else "0", row.n]

    for g, row in table.rows.items():
        rows.append(line(g, row))
    rows.append(line("Total", table.overall))
    return _csv(rows)


def amplifiers_csv(report: AmplifierReport) -> str:
    rows = [["account", "out_share_count", "median_reshares", "categories"]]
    for a in report.accounts:
        rows.append([a.account, a.out_share_count, f"{a.median_reshares:g}", ";".join(c.value for c in a.categories)])
    return _csv(rows)
