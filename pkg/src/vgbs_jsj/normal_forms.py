"""Normal forms for the polycyclic pieces Z^n x|_phi Z.

``classify_semidirect`` decides which of the two flexible block shapes an
automorphism admits in some basis (x, h_1, ..., h_{n-1}):

    FormA:  [[1, 0], [p, M]]   with M of finite order
    FormB:  [[-1, 0], [p, Id]]

and returns the basis change as a witness.  ``normalize_22`` rewrites an
amalgam of two rank-n lattices over a common index-two sublattice as such a
semidirect product (the untwisted or twisted Klein bottle case).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NotIndexTwo, WitnessInvalid
from .lattice import (
    IntMatrix,
    Sublattice,
    UnimodularAuto,
    as_matrix,
    column_matrix,
    complete_basis,
    coordinates,
    hnf_basis,
    invariant_closure,
    is_saturated,
    kernel_lattice,
    matrix_order,
    matrix_to_json,
    order_exponent,
    primitive_complement,
    primitive_normal,
    saturation,
    solve_in_basis,
    span,
    INFINITE,
)

FORM_A = "FormA"
FORM_B = "FormB"
UNIQUE = "UniqueJSJ"
UNTWISTED = "Untwisted"
TWISTED = "Twisted"


@dataclass(frozen=True)
class SemidirectClass:
    tag: str
    basis_change: UnimodularAuto | None = None
    M: IntMatrix | None = None
    p: tuple[int, ...] | None = None
    auxiliary: "SemidirectClass | None" = None

    @property
    def hyperplane(self) -> Sublattice | None:
        if self.basis_change is None:
            return None
        T = self.basis_change.matrix
        return hnf_basis(T.block(0, T.rows, 1, T.cols))

    def to_json(self) -> dict:
        out: dict = {"tag": self.tag}
        if self.basis_change is not None:
            out["basis_change"] = matrix_to_json(self.basis_change)
            out["M"] = matrix_to_json(self.M)
            out["p"] = list(self.p)
        if self.auxiliary is not None:
            out["auxiliary"] = self.auxiliary.to_json()
        return out


def conjugate(phi, T) -> IntMatrix:
    """T^-1 phi T."""
    T = UnimodularAuto.of(T)
    return T.inverse().matrix @ as_matrix(phi) @ T.matrix


def block_form(phi, H: Sublattice, tag: str) -> SemidirectClass:
    """Witness for ``tag`` with hyperplane H, or WitnessInvalid if the shape fails."""
    phi = as_matrix(phi)
    T = complete_basis(H)
    C = conjugate(phi, T)
    n = phi.rows
    eps = 1 if tag == FORM_A else -1
    if C.data[0] != (eps,) + (0,) * (n - 1):
        raise WitnessInvalid(f"first row of the conjugated matrix is {C.data[0]}, not ({eps}, 0, ...)")
    M = C.block(1, n, 1, n)
    p = C.column(0)[1:]
    if tag == FORM_A and matrix_order(M) == INFINITE:
        raise WitnessInvalid("hyperplane block has infinite order")
    if tag == FORM_B and not M.is_identity():
        raise WitnessInvalid("hyperplane block is not the identity")
    return SemidirectClass(tag, T, M, p)


def verify_block_form(phi, w: SemidirectClass) -> bool:
    """Pure predicate: does the witness conjugate phi into its claimed shape?"""
    if w.tag not in (FORM_A, FORM_B) or w.basis_change is None:
        return False
    phi = as_matrix(phi)
    n = phi.rows
    C = conjugate(phi, w.basis_change)
    eps = 1 if w.tag == FORM_A else -1
    if C.data[0] != (eps,) + (0,) * (n - 1):
        return False
    if C.block(1, n, 1, n) != w.M or C.column(0)[1:] != tuple(w.p):
        return False
    if w.tag == FORM_A:
        return matrix_order(w.M) != INFINITE
    return w.M.is_identity()


def form_b_hyperplane(phi, tilde: Sublattice) -> Sublattice | None:
    """The fixed hyperplane when phi is of form (b) and fixes ``tilde`` pointwise."""
    phi = as_matrix(phi)
    n = phi.rows
    if phi.det() != -1:
        return None
    fixed = kernel_lattice(phi - IntMatrix.identity(n))
    if fixed.rank != n - 1 or not tilde.issubset(fixed):
        return None
    return fixed


def is_form_b_conjugate(phi) -> bool:
    phi = as_matrix(phi)
    n = phi.rows
    return phi.det() == -1 and kernel_lattice(phi - IntMatrix.identity(n)).rank == n - 1


def form_a_hyperplane(phi, tilde: Sublattice) -> tuple[Sublattice | None, dict]:
    """Search for a form-(a) hyperplane containing ``tilde``.

    Splits on the rank of the saturated fixed lattice E of phi^N, N the
    exact finite-order exponent for rank n.  Returns the hyperplane (or
    None) together with the diagnostics of the case taken.
    """
    phi = as_matrix(phi)
    n = phi.rows
    I = IntMatrix.identity(n)
    N = order_exponent(n)
    E = saturation(kernel_lattice(phi ** N - I))
    diag: dict = {"E_rank": E.rank, "exponent": N}
    if E.rank < n - 1:
        diag["case"] = "E_rank<n-1"
        return None, diag
    if E.rank == n - 1:
        diag["case"] = "E_rank=n-1"
        x = primitive_complement(E)
        shift = tuple(a - b for a, b in zip(phi.apply(x), x))
        inside = tilde.issubset(E)
        trivial_quotient = shift in E
        diag.update(tilde_in_E=inside, trivial_on_quotient=trivial_quotient)
        return (E if inside and trivial_quotient else None), diag

    diag["case"] = "finite_order"
    power_sum = IntMatrix.zeros(n, n)
    P = I
    for _ in range(N):
        power_sum = power_sum + P
        P = P @ phi
    F = kernel_lattice(power_sum) + tilde
    C = invariant_closure(phi, F)
    diag.update(nontrivial_eigen_rank=kernel_lattice(power_sum).rank, closure_rank=C.rank)
    if C.rank == n:
        return None, diag
    # Pad the closure with fixed vectors up to corank one; the span stays invariant.
    L = C
    for v in kernel_lattice(phi - I).basis.columns():
        if L.rank == n - 1:
            break
        cand = L + span([v], n)
        if cand.rank > L.rank:
            L = cand
    return saturation(L), diag


def classify_semidirect(phi) -> SemidirectClass:
    phi = as_matrix(UnimodularAuto.of(phi))
    n = phi.rows
    zero = Sublattice.zero(n)
    hb = form_b_hyperplane(phi, zero)
    ha, _ = form_a_hyperplane(phi, zero)
    wa = block_form(phi, ha, FORM_A) if ha is not None else None
    if hb is not None:
        wb = block_form(phi, hb, FORM_B)
        return SemidirectClass(wb.tag, wb.basis_change, wb.M, wb.p, auxiliary=wa)
    if wa is not None:
        return wa
    return SemidirectClass(UNIQUE)


def klein_kind(p) -> str:
    return UNTWISTED if all(c % 2 == 0 for c in p) else TWISTED


@dataclass(frozen=True)
class KleinNormalForm:
    """A 2-2 amalgam rewritten as fiber x| Z.

    Fiber basis: x = x_v - x_vp (x_v in the first vertex lattice, x_vp in the
    second), followed by the columns of ``fiber_h`` (edge coordinates).  The
    stable letter is x_v.
    """

    kind: str
    fiber_rank: int
    automorphism: UnimodularAuto
    x_v: tuple[int, ...]
    x_vp: tuple[int, ...]
    fiber_h: IntMatrix
    offset_parity: tuple[int, ...] = field(default=())

    @property
    def stable_letter(self) -> tuple[int, ...]:
        return self.x_v

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "fiber_rank": self.fiber_rank,
            "automorphism": matrix_to_json(self.automorphism),
            "x_v": list(self.x_v),
            "x_vp": list(self.x_vp),
            "fiber_h": matrix_to_json(self.fiber_h),
        }


def normalize_22(n: int, att_v, att_vp, H: Sublattice) -> KleinNormalForm:
    """Klein normal form of Z^n *_{Z^n} Z^n with both inclusions of index two.

    ``H`` is a hyperplane of the edge lattice whose images are saturated in
    both vertex lattices.
    """
    att_v, att_vp = as_matrix(att_v), as_matrix(att_vp)
    for a in (att_v, att_vp):
        if a.shape != (n, n) or abs(a.det()) != 2:
            raise NotIndexTwo("attachment is not an index-two inclusion of rank n")
    if H.ambient != n or H.rank != n - 1:
        raise WitnessInvalid("H is not a hyperplane of the edge group")
    if not is_saturated(H):
        raise WitnessInvalid("H is not saturated in the edge group")
    Hv, Hvp = H.image(att_v), H.image(att_vp)
    if not is_saturated(Hv):
        raise WitnessInvalid("image of H is not saturated in the first vertex group")
    if not is_saturated(Hvp):
        raise WitnessInvalid("image of H is not saturated in the second vertex group")

    x_v = primitive_complement(Hv)
    x_vp = primitive_complement(Hvp)
    g_v = solve_in_basis(att_v, column_matrix([2 * c for c in x_v])).column(0)
    g_vp = solve_in_basis(att_vp, column_matrix([2 * c for c in x_vp])).column(0)
    f = primitive_normal(H)
    fv = sum(a * b for a, b in zip(f, g_v))
    fvp = sum(a * b for a, b in zip(f, g_vp))
    assert abs(fv) == 1 and abs(fvp) == 1
    if fv != fvp:
        x_vp = tuple(-c for c in x_vp)
        g_vp = tuple(-c for c in g_vp)

    # x_v^2 = x_vp^2 h with h in H; shifting x_vp by h' changes h by -2h'.
    h = tuple(a - b for a, b in zip(g_v, g_vp))
    c = coordinates(H, h)
    parity = tuple(ci % 2 for ci in c)
    half = [(ci - pi) // 2 for ci, pi in zip(c, parity)]
    shift = H.basis.apply(half) if H.rank else (0,) * n
    x_vp = tuple(a + b for a, b in zip(x_vp, att_vp.apply(shift)))

    kind = klein_kind(c)
    hb = H.basis
    k = n - 1
    if kind == TWISTED:
        # Re-base H so the primitive h = sum(parity_i h_i) comes first.
        i0 = parity.index(1)
        B_cols = [parity] + [tuple(int(r == j) for r in range(k)) for j in range(k) if j != i0]
        hb = hb @ IntMatrix.from_columns(B_cols, k)
        p = (1,) + (0,) * (k - 1)
    else:
        p = (0,) * k
    rows = [[-1] + [0] * k] + [[p[i]] + [int(i == j) for j in range(k)] for i in range(k)]
    auto = UnimodularAuto(IntMatrix.from_rows(rows, cols=n))
    assert (auto ** 2).matrix.is_identity()
    return KleinNormalForm(kind, n, auto, tuple(x_v), tuple(x_vp), hb, parity)
