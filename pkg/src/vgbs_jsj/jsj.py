"""Universal-ellipticity decisions and the JSJ pipeline.

Only 1-1 loops and 2-2 edges can carry a non-universally-elliptic group;
every other edge is universally elliptic by its type alone.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import (
    AdjacencyViolation,
    NotOneOneLoop,
    NotReduced,
    NotTwoTwoEdge,
    UnsupportedVertexKind,
    ValidationError,
)
from .graph import (
    SIDES,
    Abelian,
    Edge,
    GraphOfGroups,
    MoveRecord,
    Opaque,
    abelianization,
    adjacent_columns,
    check_22_witness,
    collapse_11_loop,
    collapse_22_edge,
    expand_vertex,
    is_one_one_loop,
    is_two_two_edge,
    modulus,
    reduce_steps,
    reducible_edges,
    tilde_group,
    validate,
)
from .lattice import (
    IntMatrix,
    Sublattice,
    column_matrix,
    hnf_basis,
    kernel_lattice,
    matrix_to_json,
    quotient_invariants,
    saturation,
    solve_in_basis,
    span,
)
from .normal_forms import (
    FORM_A,
    FORM_B,
    block_form,
    form_a_hyperplane,
    form_b_hyperplane,
    is_form_b_conjugate,
)

UE = "UniversallyElliptic"
NOT_UE = "NotUniversallyElliptic"
RIGID = "Rigid"
FLEXIBLE = "Flexible"


@dataclass(frozen=True)
class Verdict:
    edge: str
    universally_elliptic: bool
    reason: str
    witness: dict | None = None
    diagnostics: dict = field(default_factory=dict)
    hyperplane: Sublattice | None = None
    # UE/NotUE answer of the single-branch test for finite-order moduli; None when not applicable.
    shortcut_universally_elliptic: bool | None = None

    @property
    def shortcut_disagrees(self) -> bool:
        return (self.shortcut_universally_elliptic is not None
                and self.shortcut_universally_elliptic != self.universally_elliptic)

    def to_json(self) -> dict:
        out = {"edge": self.edge, "decision": UE if self.universally_elliptic else NOT_UE,
               "reason": self.reason, "diagnostics": self.diagnostics}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.shortcut_universally_elliptic is not None:
            out["shortcut_decision"] = UE if self.shortcut_universally_elliptic else NOT_UE
        return out


def _require_pinned_reduced(g: GraphOfGroups) -> None:
    pending = reducible_edges(g, pin_loop_bridges=True)
    if pending:
        raise NotReduced(f"edges {pending} can still be contracted")


def is_11_loop_universally_elliptic(g: GraphOfGroups, e: str, check_reduced: bool = True) -> Verdict:
    """NotUE iff some form-(a) or form-(b) hyperplane of the modulus contains tilde."""
    if not is_one_one_loop(g, e):
        raise NotOneOneLoop(f"edge {e} is not a 1-1 loop at an abelian vertex")
    if check_reduced:
        _require_pinned_reduced(g)
    v = g.edges[e].source
    phi = modulus(g, e).matrix
    tilde = tilde_group(g, v, exclude=e)
    hb = form_b_hyperplane(phi, tilde)
    ha, diag = form_a_hyperplane(phi, tilde)
    diag = {**diag, "tilde_rank": tilde.rank, "form_b_hyperplane": hb is not None,
            "form_a_hyperplane": ha is not None}
    shortcut = None
    if diag["case"] == "finite_order":
        shortcut_not_ue = (hb is not None) if is_form_b_conjugate(phi) else (ha is not None)
        shortcut = not shortcut_not_ue
    if hb is None and ha is None:
        return Verdict(e, True, "no invariant hyperplane of the required form contains the adjacent groups",
                       None, diag, None, shortcut)
    tag, H = (FORM_B, hb) if hb is not None else (FORM_A, ha)
    w = block_form(phi, H, tag)
    assert tilde.issubset(H)
    witness = {"form": tag, **{k: v for k, v in w.to_json().items() if k != "tag"},
               "hyperplane": matrix_to_json(H.basis)}
    return Verdict(e, False, f"modulus has a {tag} hyperplane containing the adjacent groups",
                   witness, diag, H, shortcut)


def _hyperplane_avoiding(bar: Sublattice, atts: list[IntMatrix]) -> Sublattice | None:
    """A hyperplane H >= bar of Z^n whose image is saturated under every att.

    H = ker f for a primitive functional f vanishing on bar; the image att(H)
    is saturated exactly when f is not of the form g @ att.  Candidates are
    0/1 combinations of a basis of the annihilator of bar, lightest first.
    """
    n = bar.ambient
    ann = kernel_lattice(bar.basis.T) if bar.rank else Sublattice.full(n)
    rowspaces = [hnf_basis(a.T) for a in atts]
    k = ann.rank
    combos = sorted((c for c in itertools.product((0, 1), repeat=k) if any(c)),
                    key=lambda c: (sum(c), tuple(-x for x in c)))
    for c in combos:
        f = ann.basis.apply(c)
        if all(f not in R for R in rowspaces):
            return kernel_lattice(IntMatrix.from_rows([f], cols=n))
    return None


def is_22_edge_universally_elliptic(g: GraphOfGroups, e: str, check_reduced: bool = True) -> Verdict:
    if not is_two_two_edge(g, e):
        raise NotTwoTwoEdge(f"edge {e} is not a 2-2 edge between abelian vertices")
    if check_reduced:
        _require_pinned_reduced(g)
    edge = g.edges[e]
    n = edge.rank
    pulled = []
    for side in SIDES:
        v, att = edge.end(side), edge.att(side)
        image = hnf_basis(att)
        for col in adjacent_columns(g, v, exclude=e):
            if col not in image:
                return Verdict(e, True, f"adjacent image {list(col)} at {v} is not inside the edge group",
                               diagnostics={"vertex": v})
            pulled.append(solve_in_basis(att, column_matrix(col)).column(0))
    tilde_e = span(pulled, n) if pulled else Sublattice.zero(n)
    bar = saturation(tilde_e)
    diag: dict = {"bar_rank": bar.rank}
    for side in SIDES:
        free, torsion = quotient_invariants(bar.image(edge.att(side)), Sublattice.full(n))
        diag[f"torsion_{side}"] = torsion
        if torsion:
            return Verdict(e, True, f"quotient of vertex {edge.end(side)} by the saturated adjacent group has torsion",
                           diagnostics=diag)
    H = _hyperplane_avoiding(bar, [edge.att_from, edge.att_to])
    failed = "no hyperplane candidate" if H is None else check_22_witness(g, e, H)
    if failed is not None:
        diag["witness_failure"] = failed
        return Verdict(e, True, "torsion test passed but no valid hyperplane witness was found",
                       diagnostics=diag)
    return Verdict(e, False, "a hyperplane of the edge group is saturated on both sides and contains the adjacent groups",
                   {"hyperplane": matrix_to_json(H.basis)}, diag, H)


def evaluate_edge(g: GraphOfGroups, e: str) -> Verdict:
    edge = g.edges[e]
    if not all(isinstance(g.vertices[edge.end(s)], Abelian) for s in SIDES):
        return Verdict(e, True, "endpoint already collapsed")
    if is_one_one_loop(g, e):
        return is_11_loop_universally_elliptic(g, e, check_reduced=False)
    if is_two_two_edge(g, e):
        return is_22_edge_universally_elliptic(g, e, check_reduced=False)
    return Verdict(e, True, "type filter")


def check_non_adjacent(g: GraphOfGroups, verdicts: list[Verdict]) -> None:
    seen: dict[str, str] = {}
    for vd in verdicts:
        if vd.universally_elliptic:
            continue
        edge = g.edges[vd.edge]
        for v in {edge.source, edge.target}:
            if v in seen:
                raise AdjacencyViolation(f"edges {seen[v]} and {vd.edge} are adjacent at {v} and both collapse")
            seen[v] = vd.edge


def expansion_sites(g: GraphOfGroups) -> list[str]:
    return [v for v, vg in g.vertices.items()
            if isinstance(vg, Abelian) and vg.rank >= 2 and tilde_group(g, v).rank == vg.rank - 1]


def classify_vertex(g: GraphOfGroups, v: str) -> str:
    vg = g.vertices[v]
    if isinstance(vg, Abelian) and tilde_group(g, v).rank == vg.rank:
        return RIGID
    return FLEXIBLE


def _abel_json(a: tuple[int, list[int]]) -> dict:
    return {"free_rank": a[0], "torsion": list(a[1])}


@dataclass
class Report:
    moves: list[MoveRecord]
    verdicts: list[Verdict]
    vertices: dict[str, str]
    abelianization_before: tuple[int, list[int]]
    abelianization_after: tuple[int, list[int]]
    fixed_point: bool | None
    flags: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "moves": [m.to_json() for m in self.moves],
            "verdicts": [v.to_json() for v in self.verdicts],
            "vertices": [{"id": k, "classification": c} for k, c in self.vertices.items()],
            "abelianization": {"before": _abel_json(self.abelianization_before),
                               "after": _abel_json(self.abelianization_after)},
            "fixed_point": self.fixed_point,
            "flags": self.flags,
            "notes": self.notes,
        }


class _Tracker:
    def __init__(self, g: GraphOfGroups, checked: bool):
        self.g, self.checked = g, checked
        self.moves: list[MoveRecord] = []
        self.ab = abelianization(g) if checked else None

    def apply(self, result: tuple[GraphOfGroups, MoveRecord]) -> None:
        self.g, rec = result
        self.moves.append(rec)
        if self.checked:
            ab = abelianization(self.g)
            if ab != self.ab:
                raise AssertionError(f"move {rec.kind} on {rec.edges} changed the abelianization {self.ab} -> {ab}")


def compute_jsj(g: GraphOfGroups, checked: bool = False, attest: bool = True) -> tuple[GraphOfGroups, Report]:
    """Reduce, decide, collapse, expand; then classify the vertices.

    Edges bijective at an endpoint carrying a 1-1 loop are left uncontracted,
    which keeps expansion outputs stable under a second run.
    """
    diags = validate(g)
    if diags:
        raise ValidationError(diags)
    if any(isinstance(vg, Opaque) for vg in g.vertices.values()):
        raise UnsupportedVertexKind("opaque vertices are not accepted as pipeline input")
    before = abelianization(g)
    t = _Tracker(g, checked)
    for step in reduce_steps(g, pin_loop_bridges=True):
        t.apply(step)

    verdicts = [evaluate_edge(t.g, e) for e in t.g.edge_ids()]
    check_non_adjacent(t.g, verdicts)
    for vd in verdicts:
        if vd.universally_elliptic:
            continue
        if is_one_one_loop(t.g, vd.edge):
            t.apply(collapse_11_loop(t.g, vd.edge))
        else:
            t.apply(collapse_22_edge(t.g, vd.edge, vd.hyperplane))
    for v in expansion_sites(t.g):
        t.apply(expand_vertex(t.g, v))

    out = t.g
    flags = []
    for vd in verdicts:
        if vd.shortcut_disagrees:
            flags.append({"edge": vd.edge, "kind": "shortcut_disagreement",
                          "decision": NOT_UE if not vd.universally_elliptic else UE,
                          "shortcut_decision": UE if vd.shortcut_universally_elliptic else NOT_UE})
        if "witness_failure" in vd.diagnostics:
            flags.append({"edge": vd.edge, "kind": "witness_failure",
                          "detail": vd.diagnostics["witness_failure"]})
    notes = [f"vertex {v} has rank 1 and no adjacent edges; left unchanged"
             for v, vg in out.vertices.items()
             if isinstance(vg, Abelian) and vg.rank == 1 and tilde_group(out, v).rank == 0]
    fixed = None
    if attest:
        _, again = compute_jsj(out, checked=False, attest=False)
        fixed = not again.moves
    report = Report(t.moves, verdicts, {v: classify_vertex(out, v) for v in out.vertex_ids()},
                    before, abelianization(out), fixed, flags, notes)
    return out, report


def bounded_rank_jsj(g: GraphOfGroups, n: int) -> GraphOfGroups:
    """Collapse every connected subgraph spanned by edges of rank > n to an opaque vertex."""
    parent = {v: v for v in g.vertices}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    heavy = [e for e in g.edges.values() if e.rank > n]
    for e in heavy:
        a, b = find(e.source), find(e.target)
        if a != b:
            parent[max(a, b)] = min(a, b)
    members: dict[str, list[str]] = {}
    for e in heavy:
        root = find(e.source)
        members.setdefault(root, [])
    for v in g.vertices:
        if find(v) in members:
            members[find(v)].append(v)
    owner = {v: min(vs) for vs in members.values() for v in vs}

    vertices: dict = {}
    for v, vg in g.vertices.items():
        if v not in owner:
            vertices[v] = vg
    for vs in members.values():
        inside = set(vs)
        sub = GraphOfGroups({v: g.vertices[v] for v in vs},
                            {e.id: e for e in heavy if e.source in inside})
        vertices[min(vs)] = Opaque(sub)
    edges: dict[str, Edge] = {}
    for eid, e in g.edges.items():
        if e.rank > n:
            continue
        for side in SIDES:
            end = e.end(side)
            if end in owner:
                e = e.with_side(side, owner[end], e.att(side), anchor=end)
        edges[eid] = e
    return GraphOfGroups(vertices, edges)
