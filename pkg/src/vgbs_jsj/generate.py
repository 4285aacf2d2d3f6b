"""Seeded random vGBS instances for the property suites."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import ParamError
from .graph import Abelian, Edge, GraphOfGroups, validate
from .lattice import IntMatrix

SHAPES = ("generic", "bijective", "loop", "one_one", "two_two")


@dataclass(frozen=True)
class GenParams:
    seed: int
    max_rank: int = 3
    n_vertices: int = 3
    n_edges: int = 4
    max_entry: int = 3
    w_generic: float = 3.0
    w_bijective: float = 1.0
    w_loop: float = 1.0
    w_one_one: float = 2.0
    w_two_two: float = 2.0

    def weights(self) -> list[float]:
        return [self.w_generic, self.w_bijective, self.w_loop, self.w_one_one, self.w_two_two]


def corpus_params(seed: int) -> GenParams:
    """Parameters of the standard corpus: ranks <= 4, <= 6 edges, entries <= 3."""
    r = random.Random(seed ^ 0x5EED)
    n_vertices = r.randint(1, 4)
    n_edges = r.randint(max(n_vertices - 1, 0), 6)
    return GenParams(seed, max_rank=4, n_vertices=n_vertices, n_edges=n_edges, max_entry=3)


def _check(p: GenParams) -> None:
    if p.max_rank < 1 or p.n_vertices < 1 or p.max_entry < 1:
        raise ParamError("max_rank, n_vertices and max_entry must be positive")
    if p.n_edges < p.n_vertices - 1:
        raise ParamError("n_edges must be at least n_vertices - 1 for a connected graph")
    if p.seed < 0 or p.seed >= 2 ** 64:
        raise ParamError("seed must be a 64-bit unsigned integer")
    if any(w < 0 for w in p.weights()) or sum(p.weights()) <= 0:
        raise ParamError("shape weights must be nonnegative and not all zero")


class _Builder:
    def __init__(self, p: GenParams):
        self.p = p
        self.rng = random.Random(p.seed)

    def small_rank(self, hi: int) -> int:
        ks = list(range(1, hi + 1))
        return self.rng.choices(ks, weights=[1 / k for k in ks])[0]

    def bounded(self, m: IntMatrix) -> bool:
        return all(abs(x) <= self.p.max_entry for row in m.data for x in row)

    def unimodular(self, n: int) -> IntMatrix:
        perm = list(range(n))
        self.rng.shuffle(perm)
        base = IntMatrix.from_rows([[self.rng.choice((1, -1)) if perm[i] == j else 0 for j in range(n)]
                                    for i in range(n)], cols=n)
        for _ in range(20):
            m = [list(r) for r in base.data]
            for _ in range(self.rng.randint(0, 2 * n)):
                i, j = self.rng.sample(range(n), 2) if n > 1 else (0, 0)
                if i == j:
                    break
                c = self.rng.choice((1, -1))
                for k in range(n):
                    m[i][k] += c * m[j][k]
            cand = IntMatrix.from_rows(m, cols=n)
            if self.bounded(cand):
                return cand
        return base

    def index_two(self, n: int) -> IntMatrix:
        d = IntMatrix.from_rows([[2 if i == j == 0 else int(i == j) for j in range(n)] for i in range(n)], cols=n)
        for _ in range(20):
            cand = self.unimodular(n) @ d @ self.unimodular(n)
            if self.bounded(cand):
                return cand
        return d

    def injective(self, n: int, r: int) -> IntMatrix:
        e = self.p.max_entry
        while True:
            m = IntMatrix.from_rows([[self.rng.randint(-e, e) for _ in range(r)] for _ in range(n)], cols=r)
            if m.rank() == r:
                return m


def generate_random(p: GenParams) -> GraphOfGroups:
    """A connected, validated graph; identical parameters give identical graphs."""
    _check(p)
    b = _Builder(p)
    rng = b.rng
    ranks = {f"v{i}": b.small_rank(p.max_rank) for i in range(p.n_vertices)}
    ids = list(ranks)
    edges: dict[str, Edge] = {}

    def add(u: str, w: str, shape: str) -> None:
        nu, nw = ranks[u], ranks[w]
        eid = f"e{len(edges)}"
        if shape == "one_one":
            edges[eid] = Edge(eid, u, u, nu, b.unimodular(nu), b.unimodular(nu))
        elif shape == "loop":
            r = b.small_rank(nu)
            edges[eid] = Edge(eid, u, u, r, b.injective(nu, r), b.injective(nu, r))
        elif shape == "two_two" and nu == nw:
            edges[eid] = Edge(eid, u, w, nu, b.index_two(nu), b.index_two(nw))
        elif shape == "bijective":
            if nu > nw:
                u, w, nu, nw = w, u, nw, nu
            edges[eid] = Edge(eid, u, w, nu, b.unimodular(nu), b.injective(nw, nu))
        else:
            r = b.small_rank(min(nu, nw))
            edges[eid] = Edge(eid, u, w, r, b.injective(nu, r), b.injective(nw, r))

    tree_shapes = ("generic", "bijective", "two_two")
    tree_w = [p.w_generic, p.w_bijective, p.w_two_two]
    for i in range(1, p.n_vertices):
        u, w = ids[rng.randrange(i)], ids[i]
        if p.w_two_two > 0 and rng.random() < 0.5:
            ranks[w] = ranks[u]  # bias toward equal ranks so 2-2 edges can occur
        add(u, w, rng.choices(tree_shapes, weights=tree_w)[0] if sum(tree_w) > 0 else "generic")
    for _ in range(p.n_edges - (p.n_vertices - 1)):
        shape = rng.choices(SHAPES, weights=p.weights())[0]
        u = rng.choice(ids)
        w = u if shape in ("loop", "one_one") else rng.choice(ids)
        if u == w and shape not in ("loop", "one_one"):
            shape = "loop"
        add(u, w, shape)
    g = GraphOfGroups({v: Abelian(n) for v, n in ranks.items()}, edges)
    assert not validate(g), validate(g)
    return g
