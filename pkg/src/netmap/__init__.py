"""Social-network map building from offline interaction data.

Snowball sampling and k-core reduction of an account graph, clustering of
the core into segments and labeled groups, between-group heterophily,
coverage and consistency of junk-news citations, news-source share tables,
amplifier detection, and force-directed SVG maps.
"""

__version__ = "0.1.0"

from .clustering import (  # noqa: E402
    AffiliationMatrix,
    Grouping,
    HacParams,
    Linkage,
    Segment,
    adjusted_rand_index,
    build_affiliation,
    group_segments,
    hac_cluster,
    similarity,
)
from .content import (  # noqa: E402
    AmplifierReport,
    Category,
    DomainDictionary,
    ShareTable,
    classify_source,
    detect_amplifiers,
    share_table,
)
from .domains import normalize_domain  # noqa: E402
from .graph import (  # noqa: E402
    CitationRecord,
    Edge,
    EdgeKind,
    InteractionGraph,
    KCoreParams,
    kcore_decompose,
    load_edge_list,
    select_k_for_target,
    snowball_expand,
)
from .layout import GroupGraph, LayoutConfig, NodeLayout, aggregate_group_graph, fr_layout, render_svg  # noqa: E402
from .metrics import HeterophilyMatrix, HitMatrix, TieCounts, consistency, coverage, expected_ties, heterophily, tie_counts  # noqa: E402
