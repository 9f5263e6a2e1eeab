"""Threshold networks, temporal stacking and graph export."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import quoteattr

import numpy as np

from .corrwin import CorrelationMatrix, Window
from .errors import CorrnetError
from .ingest import AssetKind, AssetRecord

DEFAULT_QUANTILE = 0.0625
FORMATS = ("edge_list", "graphml", "dot")


class NetworkError(CorrnetError, ValueError):
    module = "network"


@dataclass(frozen=True)
class ThresholdSpec:
    quantile: float = DEFAULT_QUANTILE

    def __post_init__(self):
        if not 0 < self.quantile <= 1:
            raise NetworkError(f"quantile must be in (0, 1], got {self.quantile}")


def edge_count(quantile: float, n_pairs: int) -> int:
    """``ceil(quantile * n_pairs)``, ignoring sub-1e-9 float noise in the product."""
    return min(n_pairs, math.ceil(round(quantile * n_pairs, 9)))


@dataclass(frozen=True, eq=False)
class CorrelationNetwork:
    """Edges are stored as an upper-triangular adjacency over ``nodes``."""

    window: Window
    nodes: tuple[AssetRecord, ...]
    adjacency: np.ndarray
    defined: np.ndarray
    rho: np.ndarray
    quantile: float = DEFAULT_QUANTILE

    @property
    def asset_ids(self) -> tuple[str, ...]:
        return tuple(n.asset_id for n in self.nodes)

    @property
    def n_defined_pairs(self) -> int:
        return int(np.triu(self.defined, 1).sum())

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    @property
    def density(self) -> float:
        n = len(self.nodes)
        return self.n_edges / (n * (n - 1) / 2) if n > 1 else float("nan")

    @property
    def global_density(self) -> float:
        """Edges over defined pairs."""
        p = self.n_defined_pairs
        return self.n_edges / p if p else float("nan")

    def edges(self) -> list[tuple[str, str, float]]:
        """Edges as ``(a, b, rho)`` with ``a < b``, sorted."""
        ids = self.asset_ids
        out = []
        for i, j in zip(*np.nonzero(np.triu(self.adjacency, 1))):
            a, b = sorted((ids[i], ids[j]))
            out.append((a, b, float(self.rho[i, j])))
        return sorted(out)

    def node(self, asset_id: str) -> AssetRecord:
        return self.nodes[self.asset_ids.index(asset_id)]


def build_threshold_network(
    corr: CorrelationMatrix,
    spec: ThresholdSpec = ThresholdSpec(),
    records: Mapping[str, AssetRecord] | None = None,
) -> CorrelationNetwork:
    """Keep the ``ceil(q * P)`` largest-correlation defined pairs as edges.

    ``P`` counts defined pairs only; index nodes share the pool with stocks.
    Ties at the cutoff go to the lexicographically smaller ``(asset_i,
    asset_j)`` pair, ids ordered within each pair.
    """
    ids = corr.assets
    n = len(ids)
    iu, ju = np.triu_indices(n, 1)
    vals = corr.rho[iu, ju]
    ok = ~np.isnan(vals)
    iu, ju, vals = iu[ok], ju[ok], vals[ok]
    if len(vals) == 0:
        raise NetworkError(f"no defined pairs in window {corr.window}")
    name_rank = np.argsort(np.argsort(np.array(ids, dtype=object)))
    lo = np.minimum(name_rank[iu], name_rank[ju])
    hi = np.maximum(name_rank[iu], name_rank[ju])
    order = np.lexsort((hi, lo, -vals))
    keep = order[: edge_count(spec.quantile, len(vals))]
    adj = np.zeros((n, n), dtype=bool)
    adj[iu[keep], ju[keep]] = True
    adj |= adj.T
    defined = ~np.isnan(corr.rho)
    np.fill_diagonal(defined, False)
    if records is None:
        nodes = tuple(AssetRecord(a) for a in ids)
    else:
        nodes = tuple(records.get(a, AssetRecord(a)) for a in ids)
    return CorrelationNetwork(corr.window, nodes, adj, defined, corr.rho, spec.quantile)


@dataclass(frozen=True, eq=False)
class TemporalNetwork:
    layers: tuple[CorrelationNetwork, ...]
    identity_edges: tuple[tuple[str, int, int], ...] = field(default=())


def stack_temporal(layers: Sequence[CorrelationNetwork]) -> TemporalNetwork:
    """Stack non-overlapping layers, linking each asset to itself in the next layer."""
    layers = tuple(layers)
    for t in range(len(layers) - 1):
        a, b = layers[t].window, layers[t + 1].window
        if b.start < a.start:
            raise NetworkError("layers must be ordered by window start")
        if b.start < a.end:
            raise NetworkError(f"layer windows {a} and {b} overlap")
    ident = []
    for t in range(len(layers) - 1):
        shared = set(layers[t].asset_ids) & set(layers[t + 1].asset_ids)
        ident.extend((a, t, t + 1) for a in sorted(shared))
    return TemporalNetwork(layers, tuple(ident))


def _fmt(x: float) -> str:
    return repr(float(x))


def _node_attrs(rec: AssetRecord) -> dict[str, str]:
    major = minor = ""
    if rec.sector is not None:
        major, minor = rec.sector.major.value, rec.sector.minor.value
    return {"sector_major": major, "sector_minor": minor, "kind": rec.kind.value}


def _graph_parts(net):
    """Flatten a (temporal) network into sorted node and edge lists.

    Nodes are ``(node_id, attrs)``; edges ``(u, v, rho or None, identity,
    window_start)``.
    """
    if isinstance(net, CorrelationNetwork):
        nodes = sorted((r.asset_id, _node_attrs(r)) for r in net.nodes)
        edges = [(a, b, rho, False, str(net.window.start)) for a, b, rho in net.edges()]
        return nodes, edges
    nodes, edges = [], []
    labels = [layer.window.label for layer in net.layers]
    for layer, label in zip(net.layers, labels):
        for r in layer.nodes:
            attrs = _node_attrs(r)
            attrs["layer"] = label
            nodes.append((f"{r.asset_id}@{label}", attrs))
        edges.extend(
            (f"{a}@{label}", f"{b}@{label}", rho, False, str(layer.window.start))
            for a, b, rho in layer.edges()
        )
    for asset, t, u in net.identity_edges:
        edges.append(
            (f"{asset}@{labels[t]}", f"{asset}@{labels[u]}", None, True, str(net.layers[t].window.start))
        )
    nodes.sort()
    edges.sort(key=lambda e: (e[3], e[0], e[1]))
    return nodes, edges


def render_edge_list(net) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    temporal = isinstance(net, TemporalNetwork)
    header = ["asset_i", "asset_j", "rho", "window_start"]
    w.writerow(header + ["identity"] if temporal else header)
    for u, v, rho, ident, ws in _graph_parts(net)[1]:
        row = [u, v, "" if rho is None else _fmt(rho), ws]
        w.writerow(row + [str(ident).lower()] if temporal else row)
    return buf.getvalue()


def render_graphml(net) -> str:
    nodes, edges = _graph_parts(net)
    temporal = isinstance(net, TemporalNetwork)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="sector_major" for="node" attr.name="sector_major" attr.type="string"/>',
        '  <key id="sector_minor" for="node" attr.name="sector_minor" attr.type="string"/>',
        '  <key id="kind" for="node" attr.name="kind" attr.type="string"/>',
    ]
    if temporal:
        out.append('  <key id="layer" for="node" attr.name="layer" attr.type="string"/>')
    out += [
        '  <key id="rho" for="edge" attr.name="rho" attr.type="double"/>',
        '  <key id="identity" for="edge" attr.name="identity" attr.type="boolean"/>',
        '  <key id="window_start" for="edge" attr.name="window_start" attr.type="string"/>',
        '  <graph id="G" edgedefault="undirected">',
    ]
    for node_id, attrs in nodes:
        out.append(f"    <node id={quoteattr(node_id)}>")
        for k, v in attrs.items():
            out.append(f'      <data key="{k}">{v}</data>')
        out.append("    </node>")
    for u, v, rho, ident, ws in edges:
        out.append(f"    <edge source={quoteattr(u)} target={quoteattr(v)}>")
        if rho is not None:
            out.append(f'      <data key="rho">{_fmt(rho)}</data>')
        out.append(f'      <data key="identity">{str(ident).lower()}</data>')
        out.append(f'      <data key="window_start">{ws}</data>')
        out.append("    </edge>")
    out += ["  </graph>", "</graphml>", ""]
    return "\n".join(out)


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_dot(net) -> str:
    nodes, edges = _graph_parts(net)
    out = ["graph corrnet {"]
    for node_id, attrs in nodes:
        body = ", ".join(f"{k}={_dot_id(v)}" for k, v in attrs.items())
        out.append(f"  {_dot_id(node_id)} [{body}];")
    for u, v, rho, ident, ws in edges:
        attrs = []
        if rho is not None:
            attrs.append(f"rho={_fmt(rho)}")
        attrs.append(f"identity={str(ident).lower()}")
        attrs.append(f"window_start={_dot_id(ws)}")
        out.append(f"  {_dot_id(u)} -- {_dot_id(v)} [{', '.join(attrs)}];")
    out += ["}", ""]
    return "\n".join(out)


_RENDERERS = {"edge_list": render_edge_list, "graphml": render_graphml, "dot": render_dot}


def export_network(net, path, format: str = "edge_list") -> Path:
    """Serialize ``net`` to ``path``; output is byte-stable for equal input."""
    try:
        render = _RENDERERS[format]
    except KeyError:
        raise NetworkError(f"unknown export format {format!r}; choose from {FORMATS}") from None
    text = render(net)
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def load_edge_list(path) -> CorrelationNetwork:
    """Rebuild a single-window network from an ``edge_list`` export.

    Only the edges survive the round trip: every listed pair is defined and
    linked, nodes are the edge endpoints and carry no sector labels.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:4] != ["asset_i", "asset_j", "rho", "window_start"] or len(header) != 4:
        raise NetworkError(f"{path}: not a single-window edge list")
    ids = sorted({r[0] for r in body} | {r[1] for r in body})
    pos = {a: i for i, a in enumerate(ids)}
    n = len(ids)
    rho = np.full((n, n), np.nan)
    adj = np.zeros((n, n), dtype=bool)
    for a, b, r, _ in body:
        i, j = pos[a], pos[b]
        rho[i, j] = rho[j, i] = float(r)
        adj[i, j] = adj[j, i] = True
    start = np.datetime64(body[0][3], "D") if body else np.datetime64("1970-01-01")
    window = Window(start, start)
    return CorrelationNetwork(
        window, tuple(AssetRecord(a) for a in ids), adj, adj.copy(), rho, quantile=1.0
    )


def index_nodes(net: CorrelationNetwork) -> list[str]:
    return [r.asset_id for r in net.nodes if r.kind is AssetKind.INDEX]
