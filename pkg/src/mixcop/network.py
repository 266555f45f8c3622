"""Thresholded correlation networks and their serializations."""
import csv
import io
import json
from dataclasses import dataclass
from xml.etree import ElementTree as ET

import numpy as np

from .estimator import CorrelationMatrix

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"
FORMATS = ("graphml", "dot", "edge_csv", "json")


@dataclass
class CorrelationNetwork:
    """Undirected weighted graph; ``edges`` are ``(i, j, weight)`` with i < j."""

    names: list
    types: list
    edges: list
    threshold: float
    n_missing: int = 0

    @property
    def edge_set(self):
        return {(self.names[i], self.names[j], w) for i, j, w in self.edges}


def build_network(corr, names=None, types=None, t=0.3):
    """Edge (i, j) iff |rho_ij| >= t and the entry is present.

    Every variable is a node, isolated or not; missing entries never
    produce edges and are counted in ``n_missing``.
    """
    if isinstance(corr, CorrelationMatrix):
        names = names if names is not None else corr.names
        corr = corr.values
    corr = np.asarray(corr, dtype=float)
    d = corr.shape[0]
    if corr.ndim != 2 or corr.shape[1] != d:
        raise ValueError("correlation matrix must be square")
    if names is None:
        names = [f"x{k + 1}" for k in range(d)]
    if len(names) != d:
        raise ValueError(f"{len(names)} names for a {d}x{d} matrix")
    types = list(types) if types is not None else [""] * d
    if len(types) != d:
        raise ValueError(f"{len(types)} type tags for a {d}x{d} matrix")
    if not 0.0 <= t <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    iu, ju = np.triu_indices(d, 1)
    w = corr[iu, ju]
    missing = np.isnan(w)
    keep = ~missing & (np.abs(w) >= t)
    edges = [(int(i), int(j), float(x)) for i, j, x in zip(iu[keep], ju[keep], w[keep])]
    return CorrelationNetwork(list(names), types, edges, float(t), int(missing.sum()))


def degrees(net, min_degree=0):
    """``{name: degree}`` for nodes with degree >= ``min_degree``, in node order."""
    deg = [0] * len(net.names)
    for i, j, _ in net.edges:
        deg[i] += 1
        deg[j] += 1
    return {nm: k for nm, k in zip(net.names, deg) if k >= min_degree}


def edge_counts_by_type(net):
    """Number of edges per unordered pair of node type tags."""
    counts = {}
    for i, j, _ in net.edges:
        key = tuple(sorted((net.types[i], net.types[j])))
        counts[key] = counts.get(key, 0) + 1
    return counts


# --- serialization ---------------------------------------------------------------

def _to_graphml(net):
    ET.register_namespace("", GRAPHML_NS)
    q = lambda tag: f"{{{GRAPHML_NS}}}{tag}"  # noqa: E731
    root = ET.Element(q("graphml"))
    ET.SubElement(root, q("key"), {"id": "type", "for": "node", "attr.name": "type",
                                   "attr.type": "string"})
    ET.SubElement(root, q("key"), {"id": "weight", "for": "edge", "attr.name": "weight",
                                   "attr.type": "double"})
    graph = ET.SubElement(root, q("graph"), {"id": "G", "edgedefault": "undirected"})
    for name, typ in zip(net.names, net.types):
        node = ET.SubElement(graph, q("node"), {"id": name})
        ET.SubElement(node, q("data"), {"key": "type"}).text = typ
    for k, (i, j, w) in enumerate(net.edges):
        edge = ET.SubElement(graph, q("edge"), {"id": f"e{k}", "source": net.names[i],
                                                "target": net.names[j]})
        ET.SubElement(edge, q("data"), {"key": "weight"}).text = repr(w)
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def _dot_id(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _to_dot(net):
    lines = ["graph correlation_network {", f"  // threshold {net.threshold!r}"]
    for name, typ in zip(net.names, net.types):
        lines.append(f"  {_dot_id(name)} [type={_dot_id(typ)}];")
    for i, j, w in net.edges:
        sign = "positive" if w >= 0 else "negative"
        lines.append(
            f"  {_dot_id(net.names[i])} -- {_dot_id(net.names[j])} "
            f"[weight={w!r}, label={_dot_id(repr(w))}, sign={sign}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def _to_edge_csv(net):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source", "target", "weight"])
    for i, j, x in net.edges:
        w.writerow([net.names[i], net.names[j], repr(x)])
    return buf.getvalue()


def _to_json(net):
    doc = {
        "nodes": [{"id": nm, "type": ty} for nm, ty in zip(net.names, net.types)],
        "edges": [{"source": net.names[i], "target": net.names[j], "weight": w}
                  for i, j, w in net.edges],
        "threshold": net.threshold,
        "n_missing": net.n_missing,
    }
    return json.dumps(doc, indent=2) + "\n"


_WRITERS = {"graphml": _to_graphml, "dot": _to_dot, "edge_csv": _to_edge_csv, "json": _to_json}


def export(net, fmt):
    try:
        writer = _WRITERS[fmt]
    except KeyError:
        raise ValueError(f"unsupported format {fmt!r}; choose from {FORMATS}") from None
    return writer(net)


def parse_edge_csv(text):
    """Edge set ``{(source, target, weight)}`` of an edge_csv document."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["source", "target", "weight"]:
        raise ValueError("edge_csv must start with the header source,target,weight")
    return {(a, b, float(w)) for a, b, w in rows[1:]}


def parse_json(text):
    """Rebuild a CorrelationNetwork from its json export."""
    doc = json.loads(text)
    names = [n["id"] for n in doc["nodes"]]
    index = {nm: k for k, nm in enumerate(names)}
    edges = [(index[e["source"]], index[e["target"]], float(e["weight"])) for e in doc["edges"]]
    return CorrelationNetwork(names, [n["type"] for n in doc["nodes"]], edges,
                              float(doc["threshold"]), int(doc.get("n_missing", 0)))


def diagnostics_line(net):
    return (f"threshold={net.threshold:g} nodes={len(net.names)} edges={len(net.edges)} "
            f"missing_pairs={net.n_missing}")


__all__ = ["CorrelationNetwork", "FORMATS", "build_network", "degrees", "diagnostics_line",
           "edge_counts_by_type", "export", "parse_edge_csv", "parse_json"]

