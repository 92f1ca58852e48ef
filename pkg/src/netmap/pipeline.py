"""Stage orchestration: ingest -> snowball -> kcore -> cluster -> metrics ->
classify -> layout -> report.

Each stage reads what upstream stages left in the output directory, so any
stage can be rerun on its own. Deliverables go to the output directory;
intermediates go to ``<output>/work``. A stage commits its files only after
it has computed all of them, and removes what it wrote if committing fails.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

from . import __version__
from .clustering import (
    build_affiliation,
    diagnostics_report,
    format_grouping,
    format_segments,
    group_segments,
    load_assignment,
    load_grouping,
    run_hac,
    stability_ari,
)
from .config import PipelineConfig
from .content import detect_amplifiers, load_dictionary, share_table
from .domains import psl_version
from .errors import StageError
from .graph import (
    InteractionGraph,
    format_edge_list,
    load_account_list,
    load_citations,
    load_edge_list,
    reduce_graph,
    snowball_expand,
)
from .layout import aggregate_group_graph, fr_layout, render_svg
from .metrics import build_hit_matrix, heterophily, tie_counts
from .reports import amplifiers_csv, groups_table, heterophily_detail, heterophily_table, share_table_csv

log = logging.getLogger(__name__)

STAGES = ("ingest", "snowball", "kcore", "cluster", "metrics", "classify", "layout", "report")

WORK = "work"
GRAPH = f"{WORK}/graph.tsv"
SAMPLE = f"{WORK}/sample.txt"
DIAGNOSTICS = f"{WORK}/clustering_diagnostics.json"
HETEROPHILY_DETAIL = f"{WORK}/heterophily_detail.csv"
POSITIONS_ACCOUNTS = f"{WORK}/positions_accounts.csv"
POSITIONS_GROUPS = f"{WORK}/positions_groups.csv"

REDUCED_GRAPH = "reduced_graph.tsv"
SEGMENTS = "segments.tsv"
GROUPING = "grouping.tsv"
HETEROPHILY = "heterophily.csv"
GROUPS = "groups.csv"
SHARE_TABLE = "share_table.csv"
AMPLIFIERS = "amplifiers.csv"
MAP_ACCOUNTS = "map_accounts.svg"
MAP_GROUPS = "map_groups.svg"
MANIFEST = "manifest.json"

ARTIFACTS = (REDUCED_GRAPH, SEGMENTS, GROUPING, HETEROPHILY, GROUPS, SHARE_TABLE, AMPLIFIERS, MAP_ACCOUNTS, MAP_GROUPS)
INTERMEDIATES = (GRAPH, SAMPLE, DIAGNOSTICS, HETEROPHILY_DETAIL, POSITIONS_ACCOUNTS, POSITIONS_GROUPS)

STAGE_OUTPUTS = {
    "ingest": (GRAPH,),
    "snowball": (SAMPLE,),
    "kcore": (REDUCED_GRAPH,),
    "cluster": (SEGMENTS, GROUPING, DIAGNOSTICS),
    "metrics": (HETEROPHILY, GROUPS, HETEROPHILY_DETAIL),
    "classify": (SHARE_TABLE, AMPLIFIERS),
    "layout": (MAP_ACCOUNTS, MAP_GROUPS, POSITIONS_ACCOUNTS, POSITIONS_GROUPS),
    "report": (MANIFEST,),
}


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunManifest:
    config_hash: str
    netmap_version: str
    public_suffix_list: str | None
    inputs: dict[str, str]
    stages: list[dict]
    artifacts: list[dict] = field(default_factory=list)
    intermediates: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def checksums(self) -> dict[str, str]:
        return {a["path"]: a["sha256"] for a in self.artifacts}


class Pipeline:
    """Runs stages against one config; keeps loaded inputs for reuse."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.output)
        self.timings: list[dict] = []
        self._cache: dict[str, object] = {}

    # -- io helpers -------------------------------------------------------

    def path(self, name: str) -> Path:
        return self.out / name

    def require(self, name: str, producer: str) -> Path:
        p = self.path(name)
        if not p.is_file():
            raise FileNotFoundError(f"{p} is missing; run the {producer!r} stage first")
        return p

    def _commit(self, outputs: dict[str, str]) -> None:
        written = []
        try:
            for name in sorted(outputs):
                _atomic_write(self.path(name), outputs[name])
                written.append(name)
        except BaseException:
            for name in written:
                self.path(name).unlink(missing_ok=True)
            raise

    def _cached(self, key: str, load: Callable[[], object]):
        if key not in self._cache:
            self._cache[key] = load()
        return self._cache[key]

    def citations(self):
        return self._cached("citations", lambda: load_citations(self.config.citations))

    def dictionary(self):
        return self._cached("dictionary", lambda: load_dictionary(self.config.dictionary))

    def full_graph(self) -> InteractionGraph:
        return self._cached("graph", lambda: load_edge_list(self.require(GRAPH, "ingest")))

    def reduced_graph(self) -> InteractionGraph:
        return self._cached("reduced", lambda: load_edge_list(self.require(REDUCED_GRAPH, "kcore")))

    def grouping(self):
        return self._cached("grouping", lambda: load_grouping(self.require(GROUPING, "cluster")))

    # -- stages -----------------------------------------------------------

    def stage_ingest(self) -> dict[str, str]:
        nodes, edges, dropped = set(), [], 0
        for src in self.config.edges:
            g = load_edge_list(src.path, src.kind)
            nodes |= g.nodes
            edges.extend(g.edges())
            dropped += g.dropped_self_loops
        graph = InteractionGraph(nodes, edges)
        self._cache["graph"] = graph
        log.info("ingest: %d accounts, %d edges, %d self-loops skipped", len(graph), graph.edge_count(), dropped)
        return {GRAPH: format_edge_list(graph)}

    def stage_snowball(self) -> dict[str, str]:
        graph = self.full_graph()
        if self.config.seeds is None:
            sample = graph.nodes
        else:
            seeds = load_account_list(self.config.seeds)
            sample = snowball_expand(graph, seeds, self.config.sample_depth, self.config.sample_kinds)
        log.info("snowball: %d of %d accounts sampled", len(sample), len(graph))
        return {SAMPLE: "".join(f"{a}\n" for a in sorted(sample))}

    def stage_kcore(self) -> dict[str, str]:
        graph = self.full_graph()
        sample = load_account_list(self.require(SAMPLE, "snowball"))
        sub = graph.subgraph(sample)
        k, core = reduce_graph(sub, self.config.kcore, kinds=[self.config.relation])
        log.info("kcore: k=%d keeps %d of %d sampled accounts", k, len(core), len(sub))
        self._cache["reduced"] = core
        return {REDUCED_GRAPH: format_edge_list(core)}

    def stage_cluster(self) -> dict[str, str]:
        graph = self.full_graph()
        core = self.reduced_graph()
        matrix = build_affiliation(graph, core.nodes, self.config.relation)
        result = run_hac(matrix, self.config.hac)
        stability = ()
        if self.config.stability_runs:
            stability = stability_ari(matrix, self.config.hac, self.config.stability_runs)
        segments = result.segments
        if self.config.assignment is not None:
            assignment = load_assignment(self.config.assignment)
        else:
            assignment = [(s.id, s.label or f"segment-{s.id:02d}") for s in segments]
        grouping = group_segments(segments, assignment)
        self._cache["grouping"] = grouping
        report = diagnostics_report(matrix, result, self.config.hac, stability)
        log.info("cluster: %d segments in %d groups (%d accounts without affiliations)",
                 len(segments), len(grouping.groups), len(result.residual))
        return {
            SEGMENTS: format_segments(segments),
            GROUPING: format_grouping(grouping),
            DIAGNOSTICS: json.dumps(report, indent=2, sort_keys=True) + "\n",
        }

    def stage_metrics(self) -> dict[str, str]:
        core = self.reduced_graph()
        grouping = self.grouping()
        counts = tie_counts(core, grouping, kinds=[self.config.relation])
        matrix = heterophily(counts)
        hits = build_hit_matrix(self.citations(), grouping, self.dictionary())
        return {
            HETEROPHILY: heterophily_table(matrix),
            HETEROPHILY_DETAIL: heterophily_detail(matrix),
            GROUPS: groups_table(grouping, hits),
        }

    def stage_classify(self) -> dict[str, str]:
        grouping = self.grouping()
        table = share_table(self.citations(), grouping, self.dictionary())
        grouped = [c for c in self.citations() if c.account in grouping.group_of]
        report = detect_amplifiers(grouped, self.dictionary(), self.config.min_shares,
                                   self.config.max_median_reshare)
        log.info("classify: %d unclassified links, %d amplifier account(s)", table.unclassified, len(report))
        return {SHARE_TABLE: share_table_csv(table), AMPLIFIERS: amplifiers_csv(report)}

    def stage_layout(self) -> dict[str, str]:
        core = self.reduced_graph()
        grouping = self.grouping()
        relation = [self.config.relation]
        accounts = fr_layout(core, self.config.layout, kinds=relation)
        account_svg = render_svg(accounts, core, {"node_groups": grouping.group_of}, kinds=relation)

        matrix = heterophily(tie_counts(core, grouping, kinds=relation))
        group_graph = aggregate_group_graph(grouping, matrix)
        groups = fr_layout(group_graph, self.config.layout)
        group_svg = render_svg(groups, group_graph, {
            "node_min_radius": 8.0, "node_max_radius": 60.0, "edge_max_width": 12.0, "labels": True,
            "node_groups": {g: g for g in group_graph.nodes},
        })
        return {
            MAP_ACCOUNTS: account_svg,
            MAP_GROUPS: group_svg,
            POSITIONS_ACCOUNTS: accounts.to_csv(),
            POSITIONS_GROUPS: groups.to_csv(),
        }

    def manifest(self) -> RunManifest:
        def entries(names):
            out = []
            for name in names:
                p = self.path(name)
                if p.is_file():
                    out.append({"path": name, "sha256": sha256_file(p), "bytes": p.stat().st_size})
            return out

        return RunManifest(
            config_hash=self.config.digest(),
            netmap_version=__version__,
            public_suffix_list=psl_version(),
            inputs={k: sha256_file(v) for k, v in sorted(self.config.input_files().items())},
            stages=list(self.timings),
            artifacts=entries(ARTIFACTS),
            intermediates=entries(INTERMEDIATES),
        )

    def stage_report(self) -> dict[str, str]:
        return {MANIFEST: self.manifest().to_json()}

    def run_stage(self, name: str) -> list[str]:
        if name not in STAGES:
            raise ValueError(f"unknown stage {name!r}; expected one of {', '.join(STAGES)}")
        start = time.perf_counter()
        try:
            outputs = getattr(self, f"stage_{name}")()
            self._commit(outputs)
        except Exception as exc:
            raise StageError(name, exc) from exc
        self.timings.append({"stage": name, "seconds": round(time.perf_counter() - start, 6)})
        return sorted(outputs)


def run_pipeline(config: PipelineConfig, stages=STAGES) -> RunManifest:
    """Run ``stages`` in order and return the manifest of the output directory.

    The manifest file is written (atomically) only when ``report`` is among
    the stages.
    """
    pipe = Pipeline(config)
    pipe.out.mkdir(parents=True, exist_ok=True)
    for name in stages:
        pipe.run_stage(name)
    if "report" in stages:
        return RunManifest(**json.loads(pipe.path(MANIFEST).read_text(encoding="utf-8")))
    return pipe.manifest()

