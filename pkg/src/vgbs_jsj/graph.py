"""Graphs of groups with free-abelian edge groups.

Vertex groups are Abelian (Z^n), Polycyclic (Z^n x|_phi Z, attachments land
in the fiber Z^n) or Opaque (a collapsed subgraph; edges touching it name the
subgraph vertex they really attach to through ``anchor_from``/``anchor_to``).

Values are immutable; every move returns a new graph plus a ``MoveRecord``.
Loop convention: the stable letter t of a loop e satisfies
t * att_from(g) * t^-1 = att_to(g), so the modulus of a 1-1 loop is
att_to @ att_from^-1.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Union

from .errors import (
    NoDeficiencyOne,
    NotOneOneLoop,
    NotTwoTwoEdge,
    RankTooSmall,
    UnsupportedVertexKind,
    WitnessInvalid,
)
from .lattice import (
    IntMatrix,
    Sublattice,
    UnimodularAuto,
    hnf_basis,
    index,
    invariant_factors,
    is_saturated,
    matrix_to_json,
    primitive_complement,
    saturation,
    solve_in_basis,
)
from .normal_forms import KleinNormalForm, normalize_22

FROM, TO = "from", "to"
SIDES = (FROM, TO)


@dataclass(frozen=True)
class Abelian:
    rank: int
    kind = "abelian"


@dataclass(frozen=True)
class Polycyclic:
    fiber_rank: int
    automorphism: UnimodularAuto
    kind = "polycyclic"

    @property
    def rank(self) -> int:
        return self.fiber_rank


@dataclass(frozen=True, eq=True)
class Opaque:
    subgraph: "GraphOfGroups"
    kind = "opaque"


VertexGroup = Union[Abelian, Polycyclic, Opaque]


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str
    rank: int
    att_from: IntMatrix
    att_to: IntMatrix
    anchor_from: str | None = None
    anchor_to: str | None = None

    @property
    def is_loop(self) -> bool:
        return self.source == self.target

    def end(self, side: str) -> str:
        return self.source if side == FROM else self.target

    def att(self, side: str) -> IntMatrix:
        return self.att_from if side == FROM else self.att_to

    def anchor(self, side: str) -> str | None:
        return self.anchor_from if side == FROM else self.anchor_to

    def with_side(self, side: str, vertex: str, att: IntMatrix, anchor: str | None = None) -> "Edge":
        if side == FROM:
            return replace(self, source=vertex, att_from=att, anchor_from=anchor)
        return replace(self, target=vertex, att_to=att, anchor_to=anchor)


@dataclass(frozen=True)
class GraphOfGroups:
    vertices: Mapping[str, VertexGroup]
    edges: Mapping[str, Edge] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vertices", {k: self.vertices[k] for k in sorted(self.vertices)})
        object.__setattr__(self, "edges", {k: self.edges[k] for k in sorted(self.edges)})

    __hash__ = None  # mappings are not hashable

    def vertex_ids(self) -> list[str]:
        return list(self.vertices)

    def edge_ids(self) -> list[str]:
        return list(self.edges)

    def incident(self, v: str) -> Iterator[tuple[Edge, str]]:
        """(edge, side) pairs at v in edge-id order; loops appear twice."""
        for e in self.edges.values():
            for side in SIDES:
                if e.end(side) == v:
                    yield e, side

    def with_changes(self, vertices=None, edges=None) -> "GraphOfGroups":
        return GraphOfGroups(self.vertices if vertices is None else vertices,
                             self.edges if edges is None else edges)


@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class MoveRecord:
    kind: str  # reduce | collapse_11 | collapse_22 | expand
    edges: tuple[str, ...]
    vertices: tuple[str, ...]
    witness: dict
    reason: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "edges": list(self.edges), "vertices": list(self.vertices),
                "witness": self.witness, "reason": self.reason}


# ---------------------------------------------------------------------------
# Ranks and validation


def vertex_rank(g: GraphOfGroups, v: str, anchor: str | None = None) -> int:
    """Rank of the lattice that attachments at v (through ``anchor``) land in."""
    vg = g.vertices[v]
    if isinstance(vg, Opaque):
        sub = vg.subgraph
        if anchor is None or anchor not in sub.vertices:
            raise KeyError(f"unresolved anchor {anchor!r} at opaque vertex {v}")
        inner = sub.vertices[anchor]
        if isinstance(inner, Opaque):
            raise UnsupportedVertexKind("nested opaque vertices need a nested anchor")
        return inner.rank
    return vg.rank


def _validate_vertex(path: str, vg, out: list[Diagnostic]) -> None:
    if isinstance(vg, Abelian):
        if not isinstance(vg.rank, int) or vg.rank < 1:
            out.append(Diagnostic(path, "rank must be at least 1"))
    elif isinstance(vg, Polycyclic):
        if vg.fiber_rank < 1:
            out.append(Diagnostic(path, "rank must be at least 1"))
        elif vg.automorphism.n != vg.fiber_rank:
            out.append(Diagnostic(path, "automorphism size differs from fiber rank"))
    elif isinstance(vg, Opaque):
        out.extend(Diagnostic(f"{path}/subgraph/{d.path}", d.message) for d in validate(vg.subgraph))
        if any(isinstance(x, Opaque) for x in vg.subgraph.vertices.values()):
            out.append(Diagnostic(path, "nested opaque vertices are not supported"))
    else:
        out.append(Diagnostic(path, f"unknown vertex kind {type(vg).__name__}"))


def validate(g: GraphOfGroups) -> list[Diagnostic]:
    """All violated invariants as diagnostics; an empty list means ok."""
    out: list[Diagnostic] = []
    if not g.vertices:
        out.append(Diagnostic("graph", "graph has no vertices"))
        return out
    for vid, vg in g.vertices.items():
        _validate_vertex(f"vertex {vid}", vg, out)
    for eid, e in g.edges.items():
        path = f"edge {eid}"
        if not isinstance(e.rank, int) or e.rank < 1:
            out.append(Diagnostic(path, "rank must be at least 1"))
            continue
        for side in SIDES:
            v = e.end(side)
            if v not in g.vertices:
                out.append(Diagnostic(path, f"endpoint {v!r} does not exist"))
                continue
            vg, anchor = g.vertices[v], e.anchor(side)
            if isinstance(vg, Opaque):
                if anchor is None or anchor not in vg.subgraph.vertices:
                    out.append(Diagnostic(path, f"anchor at opaque endpoint {v} is missing or unknown"))
                    continue
            elif anchor is not None:
                out.append(Diagnostic(path, f"anchor given at non-opaque endpoint {v}"))
            try:
                n = vertex_rank(g, v, anchor)
            except (KeyError, UnsupportedVertexKind) as exc:
                out.append(Diagnostic(path, str(exc)))
                continue
            att = e.att(side)
            if att.shape != (n, e.rank):
                out.append(Diagnostic(path, f"att_{side} has shape {att.shape}, expected {(n, e.rank)}"))
            elif att.rank() != e.rank:
                out.append(Diagnostic(path, f"attachment not injective (att_{side})"))
    if not out and not _connected(g):
        out.append(Diagnostic("graph", "not connected"))
    return out


def _connected(g: GraphOfGroups) -> bool:
    ids = g.vertex_ids()
    adj: dict[str, set[str]] = {v: set() for v in ids}
    for e in g.edges.values():
        adj[e.source].add(e.target)
        adj[e.target].add(e.source)
    seen, todo = {ids[0]}, [ids[0]]
    while todo:
        for w in adj[todo.pop()]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return len(seen) == len(ids)


# ---------------------------------------------------------------------------
# Local queries


def _require_abelian(g: GraphOfGroups, v: str) -> Abelian:
    vg = g.vertices[v]
    if not isinstance(vg, Abelian):
        raise UnsupportedVertexKind(f"vertex {v} is {vg.kind}, expected abelian")
    return vg


def _is_unimodular(m: IntMatrix) -> bool:
    return m.rows == m.cols and m.det() in (1, -1)


def edge_type(g: GraphOfGroups, e: str) -> tuple:
    """Sorted pair of indices of the edge group in its endpoint groups."""
    edge = g.edges[e]
    idx = []
    for side in SIDES:
        n = _require_abelian(g, edge.end(side)).rank
        idx.append(index(hnf_basis(edge.att(side)), Sublattice.full(n)))
    return tuple(sorted(idx))


def is_one_one_loop(g: GraphOfGroups, e: str) -> bool:
    edge = g.edges[e]
    return (edge.is_loop and isinstance(g.vertices[edge.source], Abelian)
            and _is_unimodular(edge.att_from) and _is_unimodular(edge.att_to))


def is_two_two_edge(g: GraphOfGroups, e: str) -> bool:
    edge = g.edges[e]
    if edge.is_loop:
        return False
    if not all(isinstance(g.vertices[edge.end(s)], Abelian) for s in SIDES):
        return False
    return all(edge.att(s).rows == edge.att(s).cols and abs(edge.att(s).det()) == 2 for s in SIDES)


def modulus(g: GraphOfGroups, e: str) -> UnimodularAuto:
    if not is_one_one_loop(g, e):
        raise NotOneOneLoop(f"edge {e} is not a 1-1 loop at an abelian vertex")
    edge = g.edges[e]
    inv = UnimodularAuto(edge.att_from).inverse().matrix
    return UnimodularAuto(edge.att_to @ inv)


def adjacent_columns(g: GraphOfGroups, v: str, exclude: str | None = None) -> list[tuple[int, ...]]:
    """Attachment columns landing at v (fiber coordinates for polycyclic v)."""
    cols = []
    for edge, side in g.incident(v):
        if edge.id != exclude:
            cols.extend(edge.att(side).columns())
    return cols


def tilde_group(g: GraphOfGroups, v: str, exclude: str | None = None) -> Sublattice:
    n = _require_abelian(g, v).rank
    cols = adjacent_columns(g, v, exclude)
    return hnf_basis(IntMatrix.from_columns(cols, n)) if cols else Sublattice.zero(n)


# ---------------------------------------------------------------------------
# Moves


def _carries_11_loop(g: GraphOfGroups, v: str) -> bool:
    return any(edge.is_loop and is_one_one_loop(g, edge.id) for edge, _ in g.incident(v))


def _absorbable_sides(g: GraphOfGroups, edge: Edge) -> list[str]:
    """Sides whose endpoint is abelian and receives the edge bijectively."""
    if edge.is_loop:
        return []
    if any(isinstance(g.vertices[edge.end(s)], Opaque) for s in SIDES):
        return []
    return [s for s in SIDES
            if isinstance(g.vertices[edge.end(s)], Abelian) and _is_unimodular(edge.att(s))]


def reducible_edges(g: GraphOfGroups, pin_loop_bridges: bool = False) -> list[str]:
    out = []
    for eid, edge in g.edges.items():
        sides = _absorbable_sides(g, edge)
        if pin_loop_bridges:
            sides = [s for s in sides if not _carries_11_loop(g, edge.end(s))]
        if sides:
            out.append(eid)
    return out


def contract_edge(g: GraphOfGroups, e: str, absorbed_side: str) -> tuple[GraphOfGroups, MoveRecord]:
    """Contract e, folding its bijective endpoint into the other one."""
    edge = g.edges[e]
    w, u = edge.end(absorbed_side), edge.end(TO if absorbed_side == FROM else FROM)
    keep_side = TO if absorbed_side == FROM else FROM
    iota = edge.att(keep_side) @ UnimodularAuto(edge.att(absorbed_side)).inverse().matrix
    edges = {}
    for fid, f in g.edges.items():
        if fid == e:
            continue
        for side in SIDES:
            if f.end(side) == w:
                f = f.with_side(side, u, iota @ f.att(side), edge.anchor(keep_side))
        edges[fid] = f
    vertices = {k: vg for k, vg in g.vertices.items() if k != w}
    rec = MoveRecord("reduce", (e,), (w, u), {"inclusion": matrix_to_json(iota)},
                     f"edge {e} is bijective at {w}; {w} folded into {u}")
    return g.with_changes(vertices, edges), rec


def reduce_steps(g: GraphOfGroups, pin_loop_bridges: bool = False) -> Iterator[tuple[GraphOfGroups, MoveRecord]]:
    """Yield (graph, record) after each contraction performed by ``reduce``."""
    while True:
        cands = reducible_edges(g, pin_loop_bridges)
        if not cands:
            return
        edge = g.edges[cands[0]]
        sides = _absorbable_sides(g, edge)
        if pin_loop_bridges:
            sides = [s for s in sides if not _carries_11_loop(g, edge.end(s))]
        g, rec = contract_edge(g, edge.id, max(sides, key=edge.end))
        yield g, rec


def reduce(g: GraphOfGroups, pin_loop_bridges: bool = False) -> tuple[GraphOfGroups, list[MoveRecord]]:
    """Contract non-loop edges that are bijective at an abelian endpoint.

    Always contracts the smallest eligible edge id; when both sides qualify
    the endpoint with the larger id is absorbed.  With ``pin_loop_bridges``,
    sides whose endpoint carries a 1-1 loop are not absorbed.
    """
    records: list[MoveRecord] = []
    for g, rec in reduce_steps(g, pin_loop_bridges):
        records.append(rec)
    return g, records


def collapse_11_loop(g: GraphOfGroups, e: str) -> tuple[GraphOfGroups, MoveRecord]:
    phi = modulus(g, e)
    v = g.edges[e].source
    vertices = dict(g.vertices)
    vertices[v] = Polycyclic(phi.n, phi)
    edges = {k: x for k, x in g.edges.items() if k != e}
    rec = MoveRecord("collapse_11", (e,), (v,), {"modulus": matrix_to_json(phi)},
                     f"1-1 loop {e} is not universally elliptic")
    return g.with_changes(vertices, edges), rec


def check_22_witness(g: GraphOfGroups, e: str, H: Sublattice) -> str | None:
    """The first failed witness condition for collapsing the 2-2 edge e, or None."""
    edge = g.edges[e]
    n = edge.rank
    if H.ambient != n:
        return "H does not live in the edge group"
    if H.rank != n - 1:
        return "H is not of corank one in the edge group"
    if not is_saturated(H):
        return "H is not saturated in the edge group"
    for side in SIDES:
        v, att = edge.end(side), edge.att(side)
        image = H.image(att)
        if not is_saturated(image):
            return f"image of H is not saturated in vertex {v}"
        for col in adjacent_columns(g, v, exclude=e):
            if col not in image:
                return f"adjacent image {col} at vertex {v} is not inside H"
    return None


def collapse_22_edge(g: GraphOfGroups, e: str, H: Sublattice) -> tuple[GraphOfGroups, MoveRecord]:
    """Merge the endpoints of a 2-2 edge into one polycyclic vertex.

    H (edge coordinates) must pass ``check_22_witness``.  Every other
    attachment at either endpoint is rewritten as (0, z) in the fiber basis
    (x, h_1, ..., h_{n-1}) of the Klein normal form.
    """
    if not is_two_two_edge(g, e):
        raise NotTwoTwoEdge(f"edge {e} is not a 2-2 edge between abelian vertices")
    edge = g.edges[e]
    v, vp = edge.source, edge.target
    if g.vertices[v].rank != edge.rank or g.vertices[vp].rank != edge.rank:
        raise NotTwoTwoEdge(f"edge {e} does not join lattices of its own rank")
    failed = check_22_witness(g, e, H)
    if failed is not None:
        raise WitnessInvalid(failed)
    knf: KleinNormalForm = normalize_22(edge.rank, edge.att_from, edge.att_to, H)
    merged = min(v, vp)

    def to_fiber(att_vertex: IntMatrix, m: IntMatrix) -> IntMatrix:
        y = solve_in_basis(att_vertex, m)
        z = solve_in_basis(knf.fiber_h, y)
        return IntMatrix.from_rows([[0] * m.cols] + [list(r) for r in z.data], cols=m.cols)

    edges = {}
    for fid, f in g.edges.items():
        if fid == e:
            continue
        for side in SIDES:
            end = f.end(side)
            if end == v:
                f = f.with_side(side, merged, to_fiber(edge.att_from, f.att(side)))
            elif end == vp:
                f = f.with_side(side, merged, to_fiber(edge.att_to, f.att(side)))
        edges[fid] = f
    vertices = {k: x for k, x in g.vertices.items() if k not in (v, vp)}
    vertices[merged] = Polycyclic(edge.rank, knf.automorphism)
    witness = {"H": matrix_to_json(H.basis), **knf.to_json()}
    rec = MoveRecord("collapse_22", (e,), (v, vp), witness,
                     f"2-2 edge {e} is not universally elliptic ({knf.kind} Klein amalgam)")
    return g.with_changes(vertices, edges), rec


def _fresh_edge_id(g: GraphOfGroups, base: str) -> str:
    if base not in g.edges:
        return base
    k = 2
    while f"{base}{k}" in g.edges:
        k += 1
    return f"{base}{k}"


def expand_vertex(g: GraphOfGroups, v: str) -> tuple[GraphOfGroups, MoveRecord]:
    """Replace G_v = <x> + H (H the saturated adjacent subgroup) by H with an identity loop."""
    n = _require_abelian(g, v).rank
    if n < 2:
        raise RankTooSmall(f"vertex {v} has rank {n} < 2")
    tilde = tilde_group(g, v)
    if tilde.rank != n - 1:
        raise NoDeficiencyOne(f"adjacent subgroup at {v} has rank {tilde.rank}, expected {n - 1}")
    H = saturation(tilde)
    S = H.basis
    x = primitive_complement(H)
    edges = {}
    for fid, f in g.edges.items():
        for side in SIDES:
            if f.end(side) == v:
                f = f.with_side(side, v, solve_in_basis(S, f.att(side)))
        edges[fid] = f
    loop = _fresh_edge_id(g, f"{v}/loop")
    I = IntMatrix.identity(n - 1)
    edges[loop] = Edge(loop, v, v, n - 1, I, I)
    vertices = dict(g.vertices)
    vertices[v] = Abelian(n - 1)
    rec = MoveRecord("expand", (loop,), (v,),
                     {"H": matrix_to_json(S), "stable_letter": list(x)},
                     f"adjacent subgroup at {v} has corank one")
    return g.with_changes(vertices, edges), rec


# ---------------------------------------------------------------------------
# Abelianization


def flatten(g: GraphOfGroups) -> GraphOfGroups:
    """Inline every opaque vertex's subgraph, prefixing its ids with '<vertex>::'."""
    if not any(isinstance(vg, Opaque) for vg in g.vertices.values()):
        return g
    vertices: dict[str, VertexGroup] = {}
    edges: dict[str, Edge] = {}
    for vid, vg in g.vertices.items():
        if isinstance(vg, Opaque):
            sub = flatten(vg.subgraph)
            for sid, svg in sub.vertices.items():
                vertices[f"{vid}::{sid}"] = svg
            for sid, se in sub.edges.items():
                edges[f"{vid}::{sid}"] = replace(se, id=f"{vid}::{sid}",
                                                 source=f"{vid}::{se.source}",
                                                 target=f"{vid}::{se.target}")
        else:
            vertices[vid] = vg
    for eid, e in g.edges.items():
        for side in SIDES:
            end = e.end(side)
            if isinstance(g.vertices[end], Opaque):
                e = e.with_side(side, f"{end}::{e.anchor(side)}", e.att(side))
        edges[eid] = e
    return GraphOfGroups(vertices, edges)


def abelianization(g: GraphOfGroups) -> tuple[int, list[int]]:
    """(free rank, torsion divisors > 1) of the abelianized fundamental group."""
    g = flatten(g)
    offset: dict[str, int] = {}
    ngen = 0
    for vid, vg in g.vertices.items():
        offset[vid] = ngen
        ngen += vg.rank + (1 if isinstance(vg, Polycyclic) else 0)
    # Stable letters of non-tree edges occur in no abelian relation.
    ngen += len(g.edges) - len(g.vertices) + 1
    relations: list[list[int]] = []
    for vid, vg in g.vertices.items():
        if isinstance(vg, Polycyclic):
            n, o = vg.fiber_rank, offset[vid]
            for j in range(n):
                col = [0] * ngen
                for i in range(n):
                    col[o + i] = vg.automorphism.matrix.data[i][j] - int(i == j)
                relations.append(col)
    for e in g.edges.values():
        for j in range(e.rank):
            col = [0] * ngen
            for side, sign in ((FROM, 1), (TO, -1)):
                o = offset[e.end(side)]
                for i, c in enumerate(e.att(side).column(j)):
                    col[o + i] += sign * c
            relations.append(col)
    if not relations:
        return ngen, []
    d = invariant_factors(IntMatrix.from_columns(relations, ngen))
    return ngen - len(d), [x for x in d if x > 1]


def spanning_tree(g: GraphOfGroups) -> list[str]:
    """BFS tree from the smallest vertex id over edges in id order."""
    root = g.vertex_ids()[0]
    seen, tree, todo = {root}, [], deque([root])
    while todo:
        v = todo.popleft()
        for edge, side in g.incident(v):
            w = edge.end(TO if side == FROM else FROM)
            if w not in seen:
                seen.add(w)
                tree.append(edge.id)
                todo.append(w)
    return tree

