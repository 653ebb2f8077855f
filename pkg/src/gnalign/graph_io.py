"""Networks, similarity tables and their text formats.

Supported inputs are a small GML subset, undirected GraphML, and two
tab-separated sidecars (node similarities and node annotations).  External
string ids are the join key between files; inside a :class:`Network` nodes
are addressed by dense indices assigned in file order.
"""

from __future__ import annotations

import math
import re
import warnings
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "GraphFormatError",
    "Network",
    "SimilarityTable",
    "parse_gml",
    "parse_graphml",
    "parse_similarity_tsv",
    "parse_annotation_tsv",
    "write_gml",
    "write_graphml",
    "write_similarity_tsv",
    "read_network",
    "annotate",
]


class GraphFormatError(ValueError):
    """Raised for malformed or unsupported input files."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        if line is not None:
            message = f"line {line}, column {col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


@dataclass(frozen=True, eq=False)
class Network:
    """A simple undirected graph with stable external node ids.

    ``edges`` holds index pairs ``(u, v)`` with ``u < v``.  The constructor
    validates the simple-graph invariants and raises ``ValueError`` on
    violation; parsers normalise their input before getting here.
    """

    ids: tuple[str, ...]
    edges: tuple[tuple[int, int], ...] = ()
    annotations: tuple[Counter | None, ...] | None = None
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    _index: dict[str, int] = field(init=False, repr=False)
    _edge_set: frozenset[tuple[int, int]] = field(init=False, repr=False)

    def __post_init__(self):
        ids = tuple(str(x) for x in self.ids)
        object.__setattr__(self, "ids", ids)
        index = {}
        for pos, ext in enumerate(ids):
            if ext in index:
                raise ValueError(f"duplicate node id {ext!r}")
            index[ext] = pos
        n = len(ids)
        edges = []
        seen = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) references a missing node")
            if u == v:
                raise ValueError(f"self-loop on node {ids[u]!r}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise ValueError(f"duplicate edge ({ids[key[0]]!r}, {ids[key[1]]!r})")
            seen.add(key)
            edges.append(key)
        edges.sort()
        neigh: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            neigh[u].append(v)
            neigh[v].append(u)
        if self.annotations is not None and len(self.annotations) != n:
            raise ValueError("annotations must have one entry per node")
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(a)) for a in neigh))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_edge_set", frozenset(edges))

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return len(self.edges)

    def index(self, ext_id: str) -> int:
        try:
            return self._index[ext_id]
        except KeyError:
            raise KeyError(f"unknown node id {ext_id!r}") from None

    def __contains__(self, ext_id) -> bool:
        return ext_id in self._index

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._edge_set

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def edge_array(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    def same_structure(self, other: "Network") -> bool:
        return self.ids == other.ids and self.edges == other.edges

    def __repr__(self):
        return f"Network(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class SimilarityTable:
    """Node-to-node similarity rows ``(id1, id2, value)``.

    ``kind`` is ``"evalue"`` (smaller is better) or ``"bitscore"`` (larger is
    better).
    """

    entries: tuple[tuple[str, str, float], ...]
    kind: str = "evalue"

    def __post_init__(self):
        if self.kind not in ("evalue", "bitscore"):
            raise ValueError(f"unknown similarity kind {self.kind!r}")
        seen = set()
        for a, b, val in self.entries:
            if (a, b) in seen:
                raise ValueError(f"duplicate similarity pair ({a!r}, {b!r})")
            seen.add((a, b))
            if not math.isfinite(val) or val < 0:
                raise ValueError(f"similarity value for ({a!r}, {b!r}) must be finite and >= 0")

    def __len__(self):
        return len(self.entries)


# --------------------------------------------------------------------- GML

_GML_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<open>\[)
  | (?P<close>\])
  | (?P<string>"[^"]*")
  | (?P<real>[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)|[+-]?(?:\d+\.\d*|\.\d+))
  | (?P<int>[+-]?\d+)
  | (?P<key>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


def _gml_tokens(text: str):
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _GML_TOKEN.match(text, pos)
        if m is None:
            raise GraphFormatError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        where = (line, pos - line_start + 1)
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
        if kind in ("ws", "comment"):
            continue
        yield kind, tok, where


def _gml_unescape(s: str) -> str:
    return s.replace("&quot;", '"').replace("&amp;", "&")


def _gml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace('"', "&quot;")


def _parse_gml_list(tokens, opened_at=None):
    """Parse ``key value`` pairs up to the matching ``]`` (or EOF at top level)."""
    closing = opened_at is not None
    items = []
    for kind, tok, where in tokens:
        if kind == "close":
            if not closing:
                raise GraphFormatError("unbalanced ']'", *where)
            return items
        if kind != "key":
            raise GraphFormatError(f"expected a key, got {tok!r}", *where)
        try:
            vkind, vtok, vwhere = next(tokens)
        except StopIteration:
            raise GraphFormatError(f"missing value for key {tok!r}", *where) from None
        if vkind == "open":
            value = _parse_gml_list(tokens, opened_at=vwhere)
        elif vkind == "int":
            value = int(vtok)
        elif vkind == "real":
            value = float(vtok)
        elif vkind == "string":
            value = _gml_unescape(vtok[1:-1])
        else:
            raise GraphFormatError(f"invalid value {vtok!r} for key {tok!r}", *vwhere)
        items.append((tok, value, where))
    if closing:
        raise GraphFormatError("unexpected end of input: '[' opened here is never closed", *opened_at)
    return items


def parse_gml(text: str) -> Network:
    """Parse the GML subset ``graph [ node [ id label ] edge [ source target ] ]``.

    The node ``label`` is the external id when present, otherwise the
    stringified numeric ``id``.  Duplicate undirected edges are collapsed
    with a warning; self-loops are rejected.
    """
    top = _parse_gml_list(_gml_tokens(text))
    graphs = [(v, w) for k, v, w in top if k == "graph"]
    if len(graphs) != 1:
        raise GraphFormatError(f"expected exactly one 'graph' block, found {len(graphs)}")
    body, gwhere = graphs[0]
    if not isinstance(body, list):
        raise GraphFormatError("'graph' must be a list", *gwhere)

    gml_ids: dict[int, int] = {}
    ext_ids: list[str] = []
    raw_edges = []
    for key, value, where in body:
        if key == "directed" and value not in (0,):
            raise GraphFormatError("directed graphs are not supported", *where)
        if key == "node":
            if not isinstance(value, list):
                raise GraphFormatError("'node' must be a list", *where)
            attrs = {k: (v, w) for k, v, w in value}
            if "id" not in attrs or not isinstance(attrs["id"][0], int):
                raise GraphFormatError("node without integer 'id'", *where)
            nid = attrs["id"][0]
            if nid in gml_ids:
                raise GraphFormatError(f"duplicate node id {nid}", *attrs["id"][1])
            label = attrs.get("label", (None, None))[0]
            ext = str(label) if label is not None else str(nid)
            if ext in ext_ids:
                raise GraphFormatError(f"duplicate node label {ext!r}", *where)
            gml_ids[nid] = len(ext_ids)
            ext_ids.append(ext)
        elif key == "edge":
            if not isinstance(value, list):
                raise GraphFormatError("'edge' must be a list", *where)
            attrs = {k: v for k, v, _ in value}
            src, tgt = attrs.get("source"), attrs.get("target")
            if not isinstance(src, int) or not isinstance(tgt, int):
                raise GraphFormatError("edge without integer 'source'/'target'", *where)
            raw_edges.append((src, tgt, where))

    edges = []
    for src, tgt, where in raw_edges:
        if src not in gml_ids or tgt not in gml_ids:
            bad = src if src not in gml_ids else tgt
            raise GraphFormatError(f"edge references undeclared node {bad}", *where)
        if src == tgt:
            raise GraphFormatError(f"self-loop on node {src}", *where)
        edges.append((gml_ids[src], gml_ids[tgt]))
    return Network(tuple(ext_ids), _collapse_duplicates(edges, ext_ids))


def _collapse_duplicates(edges, ext_ids) -> tuple[tuple[int, int], ...]:
    seen = set()
    out = []
    dups = 0
    for u, v in edges:
        key = (u, v) if u < v else (v, u)
        if key in seen:
            dups += 1
            continue
        seen.add(key)
        out.append(key)
    if dups:
        warnings.warn(f"collapsed {dups} duplicate undirected edge(s)", stacklevel=3)
    return tuple(out)


def write_gml(net: Network) -> str:
    """Canonical GML: nodes in index order, edges sorted, labels are external ids."""
    lines = ["graph ["]
    for i, ext in enumerate(net.ids):
        lines += ["  node [", f"    id {i}", f'    label "{_gml_escape(ext)}"', "  ]"]
    for u, v in net.edges:
        lines += ["  edge [", f"    source {u}", f"    target {v}", "  ]"]
    lines.append("]")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- GraphML

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_graphml(text: str) -> Network:
    """Parse an undirected GraphML document with a single graph.

    Node ``id`` attributes become external ids.  Duplicate edges (in either
    orientation) are collapsed with a warning.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise GraphFormatError(f"malformed XML: {exc}", line, col + 1) from None
    if _local(root.tag) != "graphml":
        raise GraphFormatError(f"root element is <{_local(root.tag)}>, expected <graphml>")
    graphs = [el for el in root if _local(el.tag) == "graph"]
    if len(graphs) != 1:
        raise GraphFormatError(f"expected exactly one <graph>, found {len(graphs)}")
    graph = graphs[0]
    if graph.get("edgedefault", "undirected") != "undirected":
        raise GraphFormatError("directed graphs are not supported")

    ext_ids: list[str] = []
    index: dict[str, int] = {}
    raw = []
    for el in graph:
        tag = _local(el.tag)
        if tag == "node":
            nid = el.get("id")
            if nid is None:
                raise GraphFormatError("<node> without id")
            if nid in index:
                raise GraphFormatError(f"duplicate node id {nid!r}")
            index[nid] = len(ext_ids)
            ext_ids.append(nid)
        elif tag == "edge":
            if el.get("directed", "false").lower() == "true":
                raise GraphFormatError("directed edges are not supported")
            raw.append((el.get("source"), el.get("target")))
        elif tag == "hyperedge":
            raise GraphFormatError("hyperedges are not supported")

    edges = []
    for s, t in raw:
        if s not in index or t not in index:
            raise GraphFormatError(f"edge ({s!r}, {t!r}) references an undeclared node")
        if s == t:
            raise GraphFormatError(f"self-loop on node {s!r}")
        edges.append((index[s], index[t]))
    return Network(tuple(ext_ids), _collapse_duplicates(edges, ext_ids))


def write_graphml(net: Network) -> str:
    root = ET.Element("graphml", xmlns="http://graphml.graphdrawing.org/xmlns")
    graph = ET.SubElement(root, "graph", id="G", edgedefault="undirected")
    for ext in net.ids:
        ET.SubElement(graph, "node", id=ext)
    for u, v in net.edges:
        ET.SubElement(graph, "edge", source=net.ids[u], target=net.ids[v])
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


# ------------------------------------------------------------- TSV sidecars

def _tsv_rows(text: str, ncols: int):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.rstrip("\r\n").split("\t")
        if len(fields) != ncols:
            raise GraphFormatError(f"expected {ncols} tab-separated fields, got {len(fields)}", lineno, 1)
        yield lineno, fields


def parse_similarity_tsv(text: str, kind: str = "evalue") -> SimilarityTable:
    entries = []
    seen = set()
    for lineno, (a, b, raw) in _tsv_rows(text, 3):
        try:
            val = float(raw)
        except ValueError:
            raise GraphFormatError(f"non-numeric similarity value {raw!r}", lineno, 1) from None
        if not math.isfinite(val):
            raise GraphFormatError(f"non-finite similarity value {raw!r}", lineno, 1)
        if val < 0:
            raise GraphFormatError(f"negative similarity value {raw!r}", lineno, 1)
        if (a, b) in seen:
            raise GraphFormatError(f"duplicate similarity pair ({a!r}, {b!r})", lineno, 1)
        seen.add((a, b))
        entries.append((a, b, val))
    return SimilarityTable(tuple(entries), kind)


def write_similarity_tsv(table: SimilarityTable) -> str:
    return "".join(f"{a}\t{b}\t{val!r}\n" for a, b, val in table.entries)


def parse_annotation_tsv(text: str) -> dict[str, Counter]:
    """``id<TAB>term`` rows; repeated rows add multiplicity."""
    out: dict[str, Counter] = {}
    for _, (ext, term) in _tsv_rows(text, 2):
        out.setdefault(ext, Counter())[term] += 1
    return out


def annotate(net: Network, annotations: Mapping[str, Iterable[str] | Counter]) -> Network:
    """Return a copy of ``net`` carrying annotation multisets for known ids.

    Ids in ``annotations`` that are not nodes of ``net`` are ignored so that
    one sidecar can cover both networks.
    """
    per_node = []
    for ext in net.ids:
        terms = annotations.get(ext)
        per_node.append(Counter(terms) if terms is not None else None)
    return Network(net.ids, net.edges, tuple(per_node))


def read_network(path: str | Path) -> Network:
    path = Path(path)
    text = path.read_text()
    suffix = path.suffix.lower()
    if suffix == ".gml":
        return parse_gml(text)
    if suffix in (".graphml", ".xml"):
        return parse_graphml(text)
    raise GraphFormatError(f"cannot infer graph format from {path.name!r} (use .gml or .graphml)")
