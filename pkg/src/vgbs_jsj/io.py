"""The "vgbs-v1" JSON document format and DOT export."""

from __future__ import annotations

import json
from typing import Any

from .errors import NotUnimodular, ParseError, UnsupportedVertexKind
from .graph import Abelian, Edge, GraphOfGroups, Opaque, Polycyclic, edge_type
from .lattice import UnimodularAuto, encode_int, matrix_from_json, matrix_to_json

FORMAT = "vgbs-v1"


class _Collector:
    def __init__(self):
        self.diags: list[tuple[str, str]] = []

    def err(self, path: str, msg: str) -> None:
        self.diags.append((path, msg))

    def field(self, obj: dict, key: str, path: str, kind, required: bool = True):
        if key not in obj:
            if required:
                self.err(f"{path}/{key}", "missing required field")
            return None
        val = obj[key]
        if kind is int:
            if isinstance(val, bool) or not isinstance(val, (int, str)):
                self.err(f"{path}/{key}", "expected an integer")
                return None
            try:
                return int(val)
            except ValueError:
                self.err(f"{path}/{key}", "expected an integer")
                return None
        if not isinstance(val, kind):
            self.err(f"{path}/{key}", f"expected {kind.__name__}")
            return None
        return val

    def matrix(self, obj: dict, key: str, path: str, nrows=None, ncols=None):
        if key not in obj:
            self.err(f"{path}/{key}", "missing required field")
            return None
        try:
            return matrix_from_json(obj[key], nrows, ncols)
        except (TypeError, ValueError) as exc:
            self.err(f"{path}/{key}", str(exc))
            return None


def graph_from_obj(doc: Any, path: str = "") -> GraphOfGroups:
    c = _Collector()
    g = _graph(doc, path, c)
    if c.diags:
        raise ParseError(c.diags)
    return g


def _graph(doc: Any, path: str, c: _Collector) -> GraphOfGroups | None:
    if not isinstance(doc, dict):
        c.err(path or "/", "expected an object")
        return None
    if path == "" and doc.get("format") != FORMAT:
        c.err("/format", f'expected "{FORMAT}"')
    vertices, edges = {}, {}
    vlist = c.field(doc, "vertices", path, list)
    for i, v in enumerate(vlist or []):
        p = f"{path}/vertices/{i}"
        if not isinstance(v, dict):
            c.err(p, "expected an object")
            continue
        vid = c.field(v, "id", p, str)
        kind = c.field(v, "kind", p, str)
        if vid is not None and vid in vertices:
            c.err(f"{p}/id", f"duplicate vertex id {vid!r}")
        if kind == "abelian":
            rank = c.field(v, "rank", p, int)
            vg = Abelian(rank) if rank is not None else None
        elif kind == "polycyclic":
            rank = c.field(v, "rank", p, int)
            vg = None
            if rank is not None:
                m = c.matrix(v, "automorphism", p, rank, rank)
                if m is not None:
                    try:
                        vg = Polycyclic(rank, UnimodularAuto(m))
                    except NotUnimodular as exc:
                        c.err(f"{p}/automorphism", str(exc))
        elif kind == "opaque":
            sub = _graph(v.get("subgraph"), f"{p}/subgraph", c) if "subgraph" in v else None
            if "subgraph" not in v:
                c.err(f"{p}/subgraph", "missing required field")
            vg = Opaque(sub) if sub is not None else None
        else:
            if kind is not None:
                c.err(f"{p}/kind", f"unknown vertex kind {kind!r}")
            vg = None
        if vid is not None and vg is not None:
            vertices[vid] = vg
    elist = c.field(doc, "edges", path, list)
    for i, e in enumerate(elist or []):
        p = f"{path}/edges/{i}"
        if not isinstance(e, dict):
            c.err(p, "expected an object")
            continue
        eid = c.field(e, "id", p, str)
        src = c.field(e, "from", p, str)
        dst = c.field(e, "to", p, str)
        rank = c.field(e, "rank", p, int)
        af = c.matrix(e, "att_from", p, ncols=rank)
        at = c.matrix(e, "att_to", p, ncols=rank)
        anc_f = c.field(e, "anchor_from", p, str, required=False)
        anc_t = c.field(e, "anchor_to", p, str, required=False)
        if eid is not None and eid in edges:
            c.err(f"{p}/id", f"duplicate edge id {eid!r}")
        if None not in (eid, src, dst, rank, af, at):
            edges[eid] = Edge(eid, src, dst, rank, af, at, anc_f, anc_t)
    return GraphOfGroups(vertices, edges)


def parse(text: str) -> GraphOfGroups:
    """Parse a vgbs-v1 document; raises ParseError with JSON-pointer paths."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError([("/", f"invalid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}")])
    return graph_from_obj(doc)


def graph_to_obj(g: GraphOfGroups, top: bool = True) -> dict:
    vertices = []
    for vid, vg in g.vertices.items():
        item: dict = {"id": vid, "kind": vg.kind}
        if isinstance(vg, Opaque):
            item["subgraph"] = graph_to_obj(vg.subgraph, top=False)
        else:
            item["rank"] = encode_int(vg.rank)
        if isinstance(vg, Polycyclic):
            item["automorphism"] = matrix_to_json(vg.automorphism)
        vertices.append(item)
    edges = []
    for eid, e in g.edges.items():
        item = {"id": eid, "from": e.source, "to": e.target, "rank": e.rank,
                "att_from": matrix_to_json(e.att_from), "att_to": matrix_to_json(e.att_to)}
        if e.anchor_from is not None:
            item["anchor_from"] = e.anchor_from
        if e.anchor_to is not None:
            item["anchor_to"] = e.anchor_to
        edges.append(item)
    out = {"vertices": vertices, "edges": edges}
    if top:
        out["format"] = FORMAT
    return out


def _item(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(", ", ": "))


def _block(key: str, items: list[dict], last: bool) -> list[str]:
    tail = "" if last else ","
    if not items:
        return [f'  "{key}": []{tail}']
    body = [f"    {_item(x)}," for x in items]
    body[-1] = body[-1][:-1]
    return [f'  "{key}": ['] + body + [f"  ]{tail}"]


def serialize(g: GraphOfGroups) -> str:
    """Canonical text: sorted keys, one vertex or edge object per line."""
    obj = graph_to_obj(g)
    lines = ["{"] + _block("edges", obj["edges"], False)
    lines.append(f'  "format": "{FORMAT}",')
    lines += _block("vertices", obj["vertices"], True) + ["}"]
    return "\n".join(lines) + "\n"


def _fmt_index(x) -> str:
    return "inf" if x == float("inf") else str(x)


def to_dot(g: GraphOfGroups) -> str:
    """Undirected DOT text; vertices labelled by kind and rank, edges by id, rank and type."""
    lines = ["graph G {"]
    for vid, vg in g.vertices.items():
        if isinstance(vg, Opaque):
            label = f"opaque {len(vg.subgraph.vertices)}v/{len(vg.subgraph.edges)}e"
        else:
            label = f"{vg.kind} {vg.rank}"
        lines.append(f"  {json.dumps(vid)} [label={json.dumps(label)}];")
    for eid, e in g.edges.items():
        try:
            m, n = edge_type(g, eid)
            kind = f"{_fmt_index(m)}-{_fmt_index(n)}"
        except UnsupportedVertexKind:
            kind = "n/a"
        label = f"{eid}, rank {e.rank}, {kind}"
        lines.append(f"  {json.dumps(e.source)} -- {json.dumps(e.target)} [label={json.dumps(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
