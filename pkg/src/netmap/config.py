"""Pipeline configuration: YAML file -> validated :class:`PipelineConfig`.

Validation collects every problem before failing. Relative paths are
resolved against the directory holding the config file.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .clustering import HacParams, Linkage
from .errors import ConfigError
from .graph import EdgeKind, KCoreParams
from .layout import LayoutConfig

# Documented defaults; README mirrors this table.
DEFAULTS: dict[str, dict[str, Any]] = {
    "inputs": {"seeds": None, "assignment": None},
    "sample": {"depth": 1, "kinds": None},
    "kcore": {"k": None, "target_size": None},
    "clustering": {"linkage": "average", "segments": 45, "threshold": None, "stability_runs": 0},
    "layout": {"width": 1000.0, "height": 1000.0, "iterations": 500, "initial_temperature": None, "seed": 0},
    "amplifiers": {"min_shares": 50, "max_median_reshare": 1},
}
DEFAULT_RELATION = "follow"
DEFAULT_OUTPUT = "out"
DEFAULT_K = 1  # applied when neither kcore.k nor kcore.target_size is given

REQUIRED_INPUTS = ("edges", "citations", "dictionary")
TOP_LEVEL = ("inputs", "output", "relation", "sample", "kcore", "clustering", "layout", "amplifiers")


@dataclass(frozen=True)
class EdgeSource:
    path: Path
    kind: EdgeKind


@dataclass(frozen=True)
class PipelineConfig:
    edges: tuple[EdgeSource, ...]
    citations: Path
    dictionary: Path
    output: Path
    seeds: Path | None = None
    assignment: Path | None = None
    relation: EdgeKind = EdgeKind.FOLLOW
    sample_depth: int = 1
    sample_kinds: tuple[EdgeKind, ...] | None = None
    kcore: KCoreParams = field(default_factory=lambda: KCoreParams(k=DEFAULT_K))
    hac: HacParams = field(default_factory=lambda: HacParams(n_segments=45))
    stability_runs: int = 0
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    min_shares: int = 50
    max_median_reshare: float = 1
    base_dir: Path = Path(".")

    def input_files(self) -> dict[str, Path]:
        files = {f"edges[{i}]": e.path for i, e in enumerate(self.edges)}
        files["citations"] = self.citations
        files["dictionary"] = self.dictionary
        if self.seeds is not None:
            files["seeds"] = self.seeds
        if self.assignment is not None:
            files["assignment"] = self.assignment
        return files

    def _rel(self, p: Path) -> str:
        try:
            return Path(os.path.relpath(p, self.base_dir)).as_posix()
        except ValueError:
            return p.as_posix()

    def effective(self) -> dict:
        """Fully-defaulted config as plain data, paths relative to the config file."""
        return {
            "inputs": {
                "edges": [{"path": self._rel(e.path), "kind": e.kind.value} for e in self.edges],
                "citations": self._rel(self.citations),
                "dictionary": self._rel(self.dictionary),
                "seeds": None if self.seeds is None else self._rel(self.seeds),
                "assignment": None if self.assignment is None else self._rel(self.assignment),
            },
            "output": self._rel(self.output),
            "relation": self.relation.value,
            "sample": {
                "depth": self.sample_depth,
                "kinds": None if self.sample_kinds is None else [k.value for k in self.sample_kinds],
            },
            "kcore": {"k": self.kcore.k, "target_size": self.kcore.target_size},
            "clustering": {
                "linkage": self.hac.linkage.value,
                "segments": self.hac.n_segments,
                "threshold": self.hac.threshold,
                "stability_runs": self.stability_runs,
            },
            "layout": {
                "width": float(self.layout.width),
                "height": float(self.layout.height),
                "iterations": self.layout.iterations,
                "initial_temperature": self.layout.initial_temperature,
                "seed": self.layout.seed,
            },
            "amplifiers": {"min_shares": self.min_shares, "max_median_reshare": self.max_median_reshare},
        }

    def dump(self) -> str:
        return yaml.safe_dump(self.effective(), sort_keys=False, default_flow_style=False)

    def digest(self) -> str:
        """Hash of everything that shapes the results; the output location is left out."""
        settings = self.effective()
        del settings["output"]
        blob = json.dumps(settings, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def with_overrides(self, output: str | os.PathLike | None = None, seed: int | None = None) -> PipelineConfig:
        cfg = self
        if output is not None:
            cfg = replace(cfg, output=Path(output).resolve())
        if seed is not None:
            cfg = replace(cfg, layout=replace(cfg.layout, seed=int(seed)))
        return cfg


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, msg: str) -> None:
        self.errors.append(msg)

    def section(self, raw: dict, name: str) -> dict:
        value = raw.get(name, {})
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.add(f"{name}: expected a mapping, got {type(value).__name__}")
            return {}
        allowed = DEFAULTS.get(name, {}).keys() | ({"edges", "citations", "dictionary"} if name == "inputs" else set())
        for key in value:
            if key not in allowed:
                self.add(f"{name}.{key}: unknown key")
        return value

    def integer(self, where: str, value, minimum: int | None = None, optional: bool = False):
        if value is None and optional:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            self.add(f"{where}: expected an integer, got {value!r}")
            return None
        if minimum is not None and value < minimum:
            self.add(f"{where}: must be >= {minimum}, got {value}")
            return None
        return value

    def number(self, where: str, value, positive: bool = False, minimum: float | None = None,
               optional: bool = False):
        if value is None and optional:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.add(f"{where}: expected a number, got {value!r}")
            return None
        if positive and value <= 0:
            self.add(f"{where}: must be positive, got {value}")
            return None
        if minimum is not None and value < minimum:
            self.add(f"{where}: must be >= {minimum}, got {value}")
            return None
        return value

    def kind(self, where: str, value):
        try:
            return EdgeKind.parse(value)
        except ValueError as exc:
            self.add(f"{where}: {exc}")
            return None


def _get(section: dict, name: str, key: str):
    return section.get(key, DEFAULTS[name][key])


def parse_config(raw: Any, base_dir: Path, check_files: bool = True) -> PipelineConfig:
    """Validate an already-loaded YAML document."""
    c = _Collector()
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError([f"top level: expected a mapping, got {type(raw).__name__}"])
    for key in raw:
        if key not in TOP_LEVEL:
            c.add(f"{key}: unknown key")

    def path_of(where: str, value, required: bool) -> Path | None:
        if value is None:
            if required:
                c.add(f"{where}: required")
            return None
        if not isinstance(value, str) or not value:
            c.add(f"{where}: expected a path string, got {value!r}")
            return None
        p = (base_dir / value).resolve()
        if check_files and not p.is_file():
            c.add(f"{where}: file not found: {p}")
        return p

    inputs = c.section(raw, "inputs")
    relation = c.kind("relation", raw.get("relation", DEFAULT_RELATION)) or EdgeKind.FOLLOW

    edges: list[EdgeSource] = []
    raw_edges = inputs.get("edges")
    if raw_edges is None:
        c.add("inputs.edges: required")
    elif isinstance(raw_edges, str):
        p = path_of("inputs.edges", raw_edges, True)
        if p is not None:
            edges.append(EdgeSource(p, relation))
    elif isinstance(raw_edges, list) and raw_edges:
        for i, item in enumerate(raw_edges):
            where = f"inputs.edges[{i}]"
            if isinstance(item, str):
                item = {"path": item}
            if not isinstance(item, dict):
                c.add(f"{where}: expected a path or a mapping with 'path' and 'kind'")
                continue
            for key in item:
                if key not in ("path", "kind"):
                    c.add(f"{where}.{key}: unknown key")
            p = path_of(f"{where}.path", item.get("path"), True)
            k = c.kind(f"{where}.kind", item.get("kind", relation.value))
            if p is not None and k is not None:
                edges.append(EdgeSource(p, k))
    else:
        c.add("inputs.edges: expected a path or a non-empty list of edge files")

    citations = path_of("inputs.citations", inputs.get("citations"), True)
    dictionary = path_of("inputs.dictionary", inputs.get("dictionary"), True)
    seeds = path_of("inputs.seeds", inputs.get("seeds"), False)
    assignment = path_of("inputs.assignment", inputs.get("assignment"), False)

    out_raw = raw.get("output", DEFAULT_OUTPUT)
    output = None
    if not isinstance(out_raw, str) or not out_raw:
        c.add(f"output: expected a directory path, got {out_raw!r}")
    else:
        output = (base_dir / out_raw).resolve()
        if check_files:
            probe = output
            while not probe.exists() and probe != probe.parent:
                probe = probe.parent
            if not probe.is_dir() or not os.access(probe, os.W_OK):
                c.add(f"output: directory {output} is not writable")

    sample = c.section(raw, "sample")
    depth = c.integer("sample.depth", _get(sample, "sample", "depth"), minimum=1)
    kinds_raw = _get(sample, "sample", "kinds")
    sample_kinds = None
    if kinds_raw is not None:
        if not isinstance(kinds_raw, list) or not kinds_raw:
            c.add("sample.kinds: expected a non-empty list of edge kinds or null")
        else:
            parsed = [c.kind(f"sample.kinds[{i}]", k) for i, k in enumerate(kinds_raw)]
            if all(parsed):
                sample_kinds = tuple(sorted(set(parsed), key=lambda k: k.value))

    kc = c.section(raw, "kcore")
    k = c.integer("kcore.k", _get(kc, "kcore", "k"), minimum=0, optional=True)
    target = c.integer("kcore.target_size", _get(kc, "kcore", "target_size"), minimum=1, optional=True)
    kcore = None
    if kc.get("k") is not None and kc.get("target_size") is not None:
        c.add("kcore: set either k or target_size, not both")
    elif k is not None or target is not None:
        kcore = KCoreParams(k=k, target_size=target)
    elif kc.get("k") is None and kc.get("target_size") is None:
        kcore = KCoreParams(k=DEFAULT_K)

    cl = c.section(raw, "clustering")
    linkage = _get(cl, "clustering", "linkage")
    try:
        linkage = Linkage(linkage)
    except ValueError:
        c.add(f"clustering.linkage: expected one of {[x.value for x in Linkage]}, got {linkage!r}")
        linkage = None
    threshold = c.number("clustering.threshold", cl.get("threshold"), minimum=0.0, optional=True)
    if threshold is not None and threshold > 1:
        c.add(f"clustering.threshold: must be <= 1, got {threshold}")
        threshold = None
    segments_raw = cl.get("segments", None if "threshold" in cl and cl["threshold"] is not None
                          else DEFAULTS["clustering"]["segments"])
    segments = c.integer("clustering.segments", segments_raw, minimum=1, optional=True)
    if segments is not None and threshold is not None:
        c.add("clustering: set either segments or threshold, not both")
    stability = c.integer("clustering.stability_runs", _get(cl, "clustering", "stability_runs"), minimum=0)

    lay = c.section(raw, "layout")
    width = c.number("layout.width", _get(lay, "layout", "width"), positive=True)
    height = c.number("layout.height", _get(lay, "layout", "height"), positive=True)
    iterations = c.integer("layout.iterations", _get(lay, "layout", "iterations"), minimum=1)
    temp = c.number("layout.initial_temperature", _get(lay, "layout", "initial_temperature"), positive=True,
                    optional=True)
    seed = c.integer("layout.seed", _get(lay, "layout", "seed"))

    amp = c.section(raw, "amplifiers")
    min_shares = c.integer("amplifiers.min_shares", _get(amp, "amplifiers", "min_shares"), minimum=1)
    max_median = c.number("amplifiers.max_median_reshare", _get(amp, "amplifiers", "max_median_reshare"),
                          minimum=0)

    if c.errors:
        raise ConfigError(c.errors)
    hac = HacParams(linkage, n_segments=segments if threshold is None else None, threshold=threshold)
    return PipelineConfig(
        edges=tuple(edges),
        citations=citations,
        dictionary=dictionary,
        output=output,
        seeds=seeds,
        assignment=assignment,
        relation=relation,
        sample_depth=depth,
        sample_kinds=sample_kinds,
        kcore=kcore,
        hac=hac,
        stability_runs=stability,
        layout=LayoutConfig(float(width), float(height), iterations,
                            None if temp is None else float(temp), seed),
        min_shares=min_shares,
        max_median_reshare=max_median,
        base_dir=base_dir,
    )


def validate_config(path: str | os.PathLike, check_files: bool = True) -> PipelineConfig:
    """Load and validate a YAML config; raises :class:`ConfigError` listing
    every problem found."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config: {exc.strerror or exc}"]) from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark is not None else str(path)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError([f"{where}: syntax error: {problem}"]) from None
    return parse_config(raw, path.resolve().parent, check_files=check_files)
