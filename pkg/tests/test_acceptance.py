"""One pass/fail line per acceptance criterion, printed in the terminal summary."""

import json
import time

import pytest
import sympy

from conftest import ACCEPTANCE_LINES, load, read
from oracles import conjugate_sympy, eigen_class_2x2, unimodular_2x2
from vgbs_jsj.errors import AdjacencyViolation
from vgbs_jsj.generate import corpus_params, generate_random
from vgbs_jsj.graph import Opaque, Polycyclic, abelianization, reduce
from vgbs_jsj.io import serialize
from vgbs_jsj.jsj import bounded_rank_jsj, compute_jsj, evaluate_edge, is_11_loop_universally_elliptic
from vgbs_jsj.lattice import IntMatrix, UnimodularAuto, span
from vgbs_jsj.normal_forms import FORM_A, FORM_B, classify_semidirect

CORPUS_SIZE = 1000


def record(num: int, name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {name}: {detail}")


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_1_expansion_golden():
    with Clock() as c:
        out, _ = compute_jsj(load("expansion_chain.json"), checked=True)
        text = serialize(out)
    same = text == read("expansion_chain_jsj.golden.json")
    ok = same and c.elapsed < 1
    record(1, "expansion chain-with-loop", ok, f"golden match={same}, {c.elapsed:.3f} s (limit 1 s)")
    assert ok


def test_criterion_2_loop_collapse_threshold():
    with Clock() as c:
        k1 = is_11_loop_universally_elliptic(load("loop_k1.json"), "l")
        k2 = is_11_loop_universally_elliptic(load("loop_k2.json"), "l")
    ok = (not k1.universally_elliptic) and k2.universally_elliptic and c.elapsed < 1
    record(2, "k=1 collapses, k=2 does not", ok,
           f"k=1 UE={k1.universally_elliptic}, k=2 UE={k2.universally_elliptic}, {c.elapsed:.3f} s (limit 1 s)")
    assert ok


def test_criterion_3_klein_collapse():
    with Clock() as c:
        g = load("klein_leaves.json")
        out, rep = compute_jsj(g, checked=True)
    (vd,) = [v for v in rep.verdicts if v.edge == "m"]
    poly = {v: vg for v, vg in out.vertices.items() if isinstance(vg, Polycyclic)}
    atts = sorted(e.att_to.column(0) for e in out.edges.values())
    phi = sympy.Matrix(next(iter(poly.values())).automorphism.matrix.tolist()) if len(poly) == 1 else None
    checks = {
        "NotUE": not vd.universally_elliptic,
        "H=<b>": vd.hyperplane == span([(0, 1)], 2),
        "one flexible Polycyclic{2}": len(poly) == 1 and len(out.vertices) == 6
        and all(vg.fiber_rank == 2 and rep.vertices[v] == "Flexible" for v, vg in poly.items()),
        "phi ~ diag(-1,1)": phi is not None and phi.is_diagonalizable() and sorted(phi.eigenvals()) == [-1, 1],
        "attachments": atts == sorted([(0, 3), (0, 4), (0, 2), (0, 7), (0, 3)]),
        "golden": serialize(out) == read("klein_leaves_jsj.golden.json"),
        "abelianization": abelianization(g) == abelianization(out),
    }
    ok = all(checks.values()) and c.elapsed < 1
    failed = [k for k, v in checks.items() if not v]
    record(3, "2-2 edge collapse to Klein polycyclic", ok,
           f"failed checks={failed or 'none'}, {c.elapsed:.3f} s (limit 1 s)")
    assert ok


def _block_shape_ok(phi, cls) -> bool:
    C = conjugate_sympy(phi, cls.basis_change.matrix.tolist())
    eps = 1 if cls.tag == FORM_A else -1
    m = cls.M.tolist()[0][0]
    allowed = (1, -1) if cls.tag == FORM_A else (1,)
    return C[0] == [eps, 0] and C[1] == [cls.p[0], m] and m in allowed


def test_criterion_4_classification_battery():
    mismatches, bad_witness, total = [], [], 0
    with Clock() as c:
        for phi in unimodular_2x2(-2, 2):
            total += 1
            cls = classify_semidirect(UnimodularAuto(IntMatrix.from_rows(phi)))
            tag, has_a = eigen_class_2x2(phi)
            aux = cls.auxiliary is not None and cls.auxiliary.tag == FORM_A
            if cls.tag != tag or (tag == FORM_B and aux != has_a):
                mismatches.append(phi)
            for w in (cls, cls.auxiliary):
                if w is not None and w.tag in (FORM_A, FORM_B) and not _block_shape_ok(phi, w):
                    bad_witness.append(phi)
    ok = not mismatches and not bad_witness and c.elapsed < 10
    record(4, "2x2 classification vs eigen oracle", ok,
           f"{total} matrices, {len(mismatches)} tag mismatches, {len(bad_witness)} bad witnesses, "
           f"{c.elapsed:.2f} s (limit 10 s)")
    assert ok


@pytest.fixture(scope="module")
def corpus():
    """Runs the checked pipeline over the corpus once; checked mode recomputes invariants after every move."""
    results = []
    with Clock() as c:
        for seed in range(CORPUS_SIZE):
            g = generate_random(corpus_params(seed))
            try:
                out, rep = compute_jsj(g, checked=True)
                results.append((seed, g, out, rep, None))
            except (AssertionError, AdjacencyViolation) as exc:
                results.append((seed, g, None, None, exc))
    return results, c.elapsed


def test_criterion_5_move_invariance(corpus):
    results, elapsed = corpus
    broken = [s for s, _, _, _, exc in results if isinstance(exc, AssertionError)
              and not isinstance(exc, AdjacencyViolation)]
    moves = sum(len(rep.moves) for *_, rep, exc in results if exc is None)
    ends = [s for s, g, out, _, exc in results if exc is None and abelianization(out) != abelianization(g)]
    ok = not broken and not ends and elapsed < 60
    record(5, "every move preserves abelianization", ok,
           f"{len(results)} graphs, {moves} moves, {len(broken) + len(ends)} violations, "
           f"{elapsed:.1f} s (limit 60 s)")
    assert ok


def test_criterion_6_non_adjacency(corpus):
    results, _ = corpus
    violations = [s for s, _, _, _, exc in results if isinstance(exc, AdjacencyViolation)]
    for seed, g, *_ in results:
        reduced, _ = reduce(g, pin_loop_bridges=True)
        collapsing = [reduced.edges[e] for e in reduced.edge_ids() if not evaluate_edge(reduced, e).universally_elliptic]
        ends = [v for e in collapsing for v in {e.source, e.target}]
        if len(ends) != len(set(ends)) and seed not in violations:
            violations.append(seed)
    ok = not violations
    record(6, "collapsing edges pairwise non-adjacent", ok, f"{len(results)} graphs, {len(violations)} violations")
    assert ok


def test_criterion_7_idempotence(corpus):
    results, _ = corpus
    nonzero = []
    for seed, _, out, _, exc in results:
        if exc is not None:
            nonzero.append(seed)
            continue
        _, again = compute_jsj(out, attest=False)
        if again.moves:
            nonzero.append(seed)
    ok = not nonzero
    record(7, "second run performs zero moves", ok, f"{len(results)} graphs, {len(nonzero)} with moves")
    assert ok


def test_criterion_8_bounded_rank(corpus):
    results, _ = corpus
    bad, checked = [], 0
    for seed, _, out, _, exc in results:
        if exc is not None:
            bad.append(seed)
            continue
        for n in (1, 2, 3):
            checked += 1
            b = bounded_rank_jsj(out, n)
            light = {e for e, ed in out.edges.items() if ed.rank <= n}
            inner = [e for vg in b.vertices.values() if isinstance(vg, Opaque) for e in vg.subgraph.edges.values()]
            structural = (set(b.edges) == light
                          and all(e.rank > n for e in inner)
                          and sorted(e.id for e in inner) == sorted(set(out.edges) - light))
            if not structural or abelianization(b) != abelianization(out):
                bad.append((seed, n))
    ok = not bad
    record(8, "bounded-rank collapse consistency", ok, f"{checked} (graph, n) pairs, {len(bad)} failures")
    assert ok


def test_criterion_9_shortcut_flag_golden():
    out, rep = compute_jsj(load("shortcut_flag.json"))
    text = json.dumps(rep.to_json(), sort_keys=True, indent=2) + "\n"
    golden = text == read("shortcut_flag_report.golden.json")
    (vd,) = [v for v in rep.verdicts if v.edge == "l"]
    flagged = any(f["edge"] == "l" and f["kind"] == "shortcut_disagreement" for f in rep.flags)
    ok = golden and not vd.universally_elliptic and flagged
    record(9, "single-branch disagreement surfaced", ok,
           f"NotUE={not vd.universally_elliptic}, flagged={flagged}, golden match={golden}")
    assert ok
