"""Fruchterman-Reingold placement, group-level aggregation and SVG output."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .clustering import Grouping
from .graph import InteractionGraph
from .metrics import HeterophilyMatrix


@dataclass(frozen=True)
class LayoutConfig:
    width: float = 1000.0
    height: float = 1000.0
    iterations: int = 500
    initial_temperature: float | None = None  # None: width / 10
    seed: int = 0
    optimal_distance_scale: float = 1.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("canvas dimensions must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.initial_temperature is not None and self.initial_temperature <= 0:
            raise ValueError("initial_temperature must be positive")

    @property
    def temperature(self) -> float:
        return self.initial_temperature if self.initial_temperature is not None else self.width / 10.0


@dataclass(frozen=True)
class NodeLayout:
    positions: Mapping[str, tuple[float, float]]
    display_size: Mapping[str, float]
    width: float
    height: float

    def to_csv(self) -> str:
        lines = ["node,x,y,size"]
        for n in sorted(self.positions):
            x, y = self.positions[n]
            lines.append(f"{_csv_field(n)},{x:.4f},{y:.4f},{self.display_size[n]:g}")
        return "\n".join(lines) + "\n"


def _csv_field(text: str) -> str:
    if any(ch in text for ch in ',"\n\r'):
        return '"' + text.replace('"', '""') + '"'
    return text


@dataclass(frozen=True)
class GroupGraph:
    """One node per group (value: member count); edges weighted by index."""

    nodes: Mapping[str, int]
    edges: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        for (a, b), w in self.edges.items():
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge ({a}, {b}) refers to an unknown group")
            if w < 0:
                raise ValueError("edge weights must be non-negative")


def aggregate_group_graph(grouping: Grouping, heterophily: HeterophilyMatrix) -> GroupGraph:
    labels = sorted(grouping.labels)
    if labels != sorted(heterophily.groups):
        raise ValueError(f"grouping labels {labels} do not match heterophily groups {sorted(heterophily.groups)}")
    sizes = grouping.sizes()
    edges = {}
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            w = heterophily.index[(a, b)]
            if w > 0:
                edges[(a, b)] = float(w)
    return GroupGraph({g: sizes[g] for g in labels}, edges)


def _structure(graph, kinds) -> tuple[list[str], np.ndarray, np.ndarray, np.ndarray, dict[str, float]]:
    if isinstance(graph, GroupGraph):
        nodes = sorted(graph.nodes)
        idx = {n: i for i, n in enumerate(nodes)}
        pairs = sorted(graph.edges)
        src = np.array([idx[a] for a, _ in pairs], dtype=np.int64)
        dst = np.array([idx[b] for _, b in pairs], dtype=np.int64)
        w = np.array([graph.edges[p] for p in pairs], dtype=np.float64)
        sizes = {n: float(graph.nodes[n]) for n in nodes}
        return nodes, src, dst, w, sizes
    nodes = sorted(graph.nodes)
    idx = {n: i for i, n in enumerate(nodes)}
    pairs = sorted({(min(e.src, e.dst), max(e.src, e.dst)) for e in graph.edges(kinds)})
    src = np.array([idx[a] for a, _ in pairs], dtype=np.int64)
    dst = np.array([idx[b] for _, b in pairs], dtype=np.int64)
    w = np.ones(len(pairs), dtype=np.float64)
    indeg = dict.fromkeys(nodes, 0)
    for e in graph.edges(kinds):
        indeg[e.dst] += 1
    # +1 keeps accounts nobody in the map points to visible
    sizes = {n: float(indeg[n] + 1) for n in nodes}
    return nodes, src, dst, w, sizes


def fr_layout(graph: InteractionGraph | GroupGraph, config: LayoutConfig = LayoutConfig(), kinds=None) -> NodeLayout:
    """Force-directed placement: every pair of nodes repels with k^2/d, each
    edge attracts with weight * d^2/k, k = C * sqrt(area / n). The step
    length is capped by a temperature that falls linearly to zero and nodes
    are clamped to the canvas after every step.

    Initial positions are a uniform scatter drawn from ``config.seed`` and
    handed out in sorted node order.
    """
    nodes, src, dst, weight, sizes = _structure(graph, kinds)
    n = len(nodes)
    if n == 0:
        raise ValueError("cannot lay out an empty graph")
    W, H = float(config.width), float(config.height)
    if n == 1:
        return NodeLayout({nodes[0]: (W / 2, H / 2)}, sizes, W, H)

    rng = np.random.default_rng(config.seed)
    x = rng.uniform(0.0, W, n)
    y = rng.uniform(0.0, H, n)
    k = config.optimal_distance_scale * math.sqrt(W * H / n)
    k2 = k * k
    t0 = config.temperature
    for it in range(config.iterations):
        t = t0 * (1.0 - it / config.iterations)
        dx = x[:, None] - x[None, :]
        dy = y[:, None] - y[None, :]
        d2 = np.maximum(dx * dx + dy * dy, 1e-4)
        rep = k2 / d2
        np.fill_diagonal(rep, 0.0)
        fx = (dx * rep).sum(axis=1)
        fy = (dy * rep).sum(axis=1)
        if src.size:
            ex = x[src] - x[dst]
            ey = y[src] - y[dst]
            att = weight * np.sqrt(ex * ex + ey * ey) / k
            np.add.at(fx, src, -ex * att)
            np.add.at(fy, src, -ey * att)
            np.add.at(fx, dst, ex * att)
            np.add.at(fy, dst, ey * att)
        length = np.sqrt(fx * fx + fy * fy)
        step = np.where(length > 0, np.minimum(length, t) / np.where(length > 0, length, 1.0), 0.0)
        x = np.clip(x + fx * step, 0.0, W)
        y = np.clip(y + fy * step, 0.0, H)
    positions = {nodes[i]: (float(x[i]), float(y[i])) for i in range(n)}
    return NodeLayout(positions, sizes, W, H)


# ---------------------------------------------------------------------------
# SVG

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

DEFAULT_STYLE = {
    "margin": 20.0,
    "background": "#ffffff",
    "node_min_radius": 2.0,
    "node_max_radius": 12.0,
    "node_color": "#1f77b4",
    "node_opacity": 0.9,
    "edge_min_width": 0.5,
    "edge_max_width": 4.0,
    "edge_color": "#999999",
    "edge_opacity": 0.35,
    "labels": False,
    "font_size": 12.0,
    "palette": PALETTE,
    # node -> group label; nodes in the same group share a palette color
    "node_groups": None,
}


def _num(v: float) -> str:
    return f"{v:.2f}"


def render_svg(layout: NodeLayout, graph: InteractionGraph | GroupGraph, style: Mapping | None = None,
               kinds=None) -> str:
    """Static SVG map. Radii scale with sqrt(display size) and stroke widths
    linearly with edge weight, both between the style's min and max."""
    st = dict(DEFAULT_STYLE)
    st.update(style or {})
    nodes, src, dst, weight, _ = _structure(graph, kinds)
    missing = [n for n in nodes if n not in layout.positions]
    if missing:
        raise ValueError(f"layout lacks positions for {missing[:5]}")
    m = float(st["margin"])
    W, H = layout.width + 2 * m, layout.height + 2 * m

    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": _num(W),
        "height": _num(H),
        "viewBox": f"0 0 {_num(W)} {_num(H)}",
    })
    ET.SubElement(svg, "rect", {"x": "0", "y": "0", "width": _num(W), "height": _num(H), "fill": st["background"]})

    def pos(n: str) -> tuple[float, float]:
        px, py = layout.positions[n]
        return px + m, py + m

    edges_el = ET.SubElement(svg, "g", {
        "class": "edges", "stroke": st["edge_color"], "stroke-opacity": str(st["edge_opacity"]),
    })
    if weight.size:
        wmax = float(weight.max())
        lo, hi = float(st["edge_min_width"]), float(st["edge_max_width"])
        for a, b, w in zip(src, dst, weight):
            x1, y1 = pos(nodes[a])
            x2, y2 = pos(nodes[b])
            width = lo + (hi - lo) * (w / wmax if wmax > 0 else 0.0)
            ET.SubElement(edges_el, "line", {
                "x1": _num(x1), "y1": _num(y1), "x2": _num(x2), "y2": _num(y2),
                "stroke-width": _num(width),
            })

    groups = st["node_groups"] or {}
    palette = list(st["palette"])
    color_of = {g: palette[i % len(palette)] for i, g in enumerate(sorted(set(groups.values())))}
    sizes = [layout.display_size[n] for n in nodes]
    smax = max(sizes) if sizes else 1.0
    rlo, rhi = float(st["node_min_radius"]), float(st["node_max_radius"])
    nodes_el = ET.SubElement(svg, "g", {"class": "nodes", "fill-opacity": str(st["node_opacity"])})
    for n, s in zip(nodes, sizes):
        cx, cy = pos(n)
        r = rlo + (rhi - rlo) * math.sqrt(s / smax) if smax > 0 else rlo
        fill = color_of.get(groups.get(n), st["node_color"])
        circle = ET.SubElement(nodes_el, "circle", {"cx": _num(cx), "cy": _num(cy), "r": _num(r), "fill": fill})
        ET.SubElement(circle, "title").text = n
    if st["labels"]:
        text_el = ET.SubElement(svg, "g", {
            "class": "labels", "font-family": "sans-serif", "font-size": _num(float(st["font_size"])),
            "text-anchor": "middle",
        })
        for n in nodes:
            cx, cy = pos(n)
            ET.SubElement(text_el, "text", {"x": _num(cx), "y": _num(cy)}).text = n
    body = ET.tostring(svg, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"
