import math

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.matrices.normalforms import smith_normal_form

from conftest import M, int_matrix, unimodular
from vgbs_jsj.errors import NotContained, NotCorankOne, NotRepresentable, NotSaturated, NotUnimodular
from vgbs_jsj.lattice import (
    INFINITE,
    IntMatrix,
    Sublattice,
    UnimodularAuto,
    complete_basis,
    contains,
    decode_int,
    encode_int,
    hnf_basis,
    index,
    invariant_closure,
    invariant_factors,
    is_saturated,
    kernel_lattice,
    matrix_from_json,
    matrix_order,
    matrix_to_json,
    order_exponent,
    primitive_complement,
    quotient_invariants,
    saturation,
    snf,
    solve_in_basis,
    span,
)


def cols(*vs):
    return IntMatrix.from_columns(list(vs), len(vs[0]))


# hnf_basis

def test_hnf_identity_columns():
    L = hnf_basis(cols((1, 0), (0, 1)))
    assert L.basis == IntMatrix.identity(2) and L.rank == 2


def test_hnf_single_column():
    assert hnf_basis(cols((2, 4))).generators() == [(2, 4)]


def test_hnf_gcd_of_parallel_columns():
    assert hnf_basis(cols((2, 0), (1, 0))).generators() == [(1, 0)]


def test_hnf_empty_is_zero():
    assert hnf_basis(IntMatrix.zeros(3, 0)) == Sublattice.zero(3)
    assert hnf_basis(cols((0, 0, 0))) == Sublattice.zero(3)


# snf

@pytest.mark.parametrize("A,diag", [
    ([[2, 0], [0, 2]], [2, 2]),
    ([[2, 1], [1, 0]], [1, 1]),
    ([[2, 0], [0, 3]], [1, 6]),
])
def test_snf_examples(A, diag):
    S, U, V = snf(A)
    assert U.matrix @ M(A) @ V.matrix == S
    assert [S.data[i][i] for i in range(2)] == diag


# index, contains, saturation, quotients

def test_index_examples():
    Z2 = Sublattice.full(2)
    assert index(span([(2, 0), (0, 1)], 2), Z2) == 2
    assert index(span([(0, 1)], 2), Z2) == INFINITE
    assert index(span([(2, 0), (0, 3)], 2), Z2) == 6


def test_index_requires_containment():
    with pytest.raises(NotContained):
        index(span([(1, 0)], 2), span([(2, 0)], 2))


def test_contains_examples():
    L = span([(2, 0), (0, 1)], 2)
    assert contains(L, (4, 3))
    assert not contains(L, (1, 0))
    assert contains(span([(1, 2)], 2), (3, 6))


def test_saturation_examples():
    assert saturation(span([(2, 0)], 2)) == span([(1, 0)], 2)
    assert saturation(span([(2, 0), (0, 3)], 2)) == Sublattice.full(2)
    assert saturation(span([(2, 4)], 2)) == span([(1, 2)], 2)


def test_quotient_invariants_examples():
    Z2 = Sublattice.full(2)
    assert quotient_invariants(span([(0, 1)], 2), Z2) == (1, [])
    assert quotient_invariants(span([(2, 0), (0, 1)], 2), Z2) == (0, [2])
    assert quotient_invariants(Sublattice.zero(2), Z2) == (2, [])


# complements and kernels

@pytest.mark.parametrize("h,x", [((1, 0), (0, 1)), ((1, 2), (0, 1)), ((2, 1), (1, 0))])
def test_primitive_complement_examples(h, x):
    H = span([h], 2)
    assert primitive_complement(H) == x
    assert abs(complete_basis(H).det()) == 1


def test_primitive_complement_errors():
    with pytest.raises(NotCorankOne):
        primitive_complement(Sublattice.zero(2))
    with pytest.raises(NotSaturated):
        primitive_complement(span([(2, 0)], 2))


def test_kernel_examples():
    assert kernel_lattice([[-1, -1], [1, -1]]) == Sublattice.zero(2)
    assert kernel_lattice([[0, 0], [1, 0]]) == span([(0, 1)], 2)
    assert kernel_lattice([[0, 0], [0, 0]]) == Sublattice.full(2)


# finite order

@pytest.mark.parametrize("k,N", [(0, 1), (1, 2), (2, 12), (4, 120)])
def test_order_exponent(k, N):
    assert order_exponent(k) == N


def _order_exponent_oracle(k):
    # lcm of q = p^a with Euler phi(q) <= k, by brute force over q
    N = 1
    for q in range(2, 4 * k + 3):
        if len(sympy.factorint(q)) == 1 and sympy.totient(q) <= k:
            N = math.lcm(N, q)
    return N


@pytest.mark.parametrize("k", range(0, 9))
def test_order_exponent_matches_oracle(k):
    assert order_exponent(k) == _order_exponent_oracle(k)


def test_matrix_order_examples():
    assert matrix_order([[0, -1], [1, 0]]) == 4
    assert matrix_order([[1, 1], [0, 1]]) == INFINITE
    assert matrix_order([[-1, 0], [1, 1]]) == 2


def test_invariant_closure_examples():
    F = span([(3, 1)], 2)
    assert invariant_closure(IntMatrix.identity(2), F) == F
    assert invariant_closure([[0, -1], [1, 0]], span([(1, 0)], 2)) == Sublattice.full(2)
    assert invariant_closure([[1, 0], [1, 1]], span([(0, 1)], 2)) == span([(0, 1)], 2)


def test_solve_examples():
    assert solve_in_basis(cols((1, 0)), cols((3, 0))).tolist() == [[3]]
    assert solve_in_basis(cols((1, 2)), cols((2, 4))).tolist() == [[2]]
    assert solve_in_basis(cols((2, 0), (0, 1)), cols((4, 3))).column(0) == (2, 3)
    with pytest.raises(NotRepresentable):
        solve_in_basis(cols((2, 0), (0, 1)), cols((1, 0)))


def test_unimodular_checked():
    with pytest.raises(NotUnimodular):
        UnimodularAuto(M([[2, 0], [0, 1]]))
    with pytest.raises(NotUnimodular):
        UnimodularAuto(IntMatrix.zeros(2, 3))


def test_int_matrix_shape_checked():
    with pytest.raises(ValueError):
        IntMatrix(2, 2, ((1, 2),))


def test_json_big_integers():
    big = 2 ** 80 + 1
    m = IntMatrix.from_rows([[big, -3]])
    enc = matrix_to_json(m)
    assert enc == [[str(big), -3]]
    assert matrix_from_json(enc) == m
    assert encode_int(2 ** 53 - 1) == 2 ** 53 - 1 and encode_int(-(2 ** 53)) == str(-(2 ** 53))
    with pytest.raises(TypeError):
        decode_int(True)


# properties

@settings(max_examples=60, deadline=None)
@given(int_matrix(), st.data())
def test_hnf_canonical_under_unimodular_resampling(B, data):
    V = data.draw(unimodular(B.cols))
    assert hnf_basis(B) == hnf_basis(B @ V)


@settings(max_examples=60, deadline=None)
@given(int_matrix())
def test_snf_contract(A):
    S, U, V = snf(A)
    assert U.matrix @ A @ V.matrix == S
    d = [S.data[i][i] for i in range(min(A.rows, A.cols))]
    assert all(x >= 0 for x in d)
    assert all(S.data[i][j] == 0 for i in range(S.rows) for j in range(S.cols) if i != j)
    nz = [x for x in d if x]
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    assert d[len(nz):] == [0] * (len(d) - len(nz))
    if A.rows == A.cols and A.det() != 0:
        assert math.prod(d) == abs(A.det())


@settings(max_examples=60, deadline=None)
@given(int_matrix())
def test_invariant_factors_match_sympy(A):
    S = smith_normal_form(sympy.Matrix(A.tolist()), domain=sympy.ZZ)
    oracle = [abs(int(S[i, i])) for i in range(min(A.rows, A.cols)) if S[i, i] != 0]
    assert invariant_factors(A) == sorted(oracle)


@settings(max_examples=60, deadline=None)
@given(int_matrix())
def test_kernel_matches_sympy_nullspace(A):
    K = kernel_lattice(A)
    assert K.rank == len(sympy.Matrix(A.tolist()).nullspace())
    for v in K.generators():
        assert A.apply(v) == (0,) * A.rows
    assert is_saturated(K)


@settings(max_examples=60, deadline=None)
@given(int_matrix())
def test_saturation_properties(B):
    L = hnf_basis(B)
    S = saturation(L)
    assert L.issubset(S) and saturation(S) == S and S.rank == L.rank
    assert quotient_invariants(L, S)[0] == 0
    assert quotient_invariants(S, Sublattice.full(L.ambient))[1] == []


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_index_multiplicative(data):
    n = data.draw(st.integers(1, 3))
    C = Sublattice.full(n)
    B = hnf_basis(data.draw(unimodular(n)) @ IntMatrix.from_rows(
        [[data.draw(st.integers(1, 3)) if i == j else 0 for j in range(n)] for i in range(n)], cols=n))
    A = hnf_basis(B.basis @ IntMatrix.from_rows(
        [[data.draw(st.integers(1, 3)) if i == j else 0 for j in range(n)] for i in range(n)], cols=n))
    assert index(A, C) == index(A, B) * index(B, C)


@settings(max_examples=60, deadline=None)
@given(int_matrix(), st.lists(st.integers(-6, 6), min_size=4, max_size=4))
def test_contains_consistent_with_span(B, v):
    L = hnf_basis(B)
    v = tuple(v[:L.ambient])
    assert contains(L, v) == (hnf_basis(L.basis.hstack(IntMatrix.from_columns([v], L.ambient))) == L)


@settings(max_examples=60, deadline=None)
@given(unimodular(steps=4))
def test_matrix_order_properties(Mx):
    k = matrix_order(Mx)
    if k == INFINITE:
        assert not (Mx ** order_exponent(Mx.rows)).is_identity()
    else:
        assert (Mx ** k).is_identity()
        assert all(not (Mx ** d).is_identity() for d in range(1, k) if k % d == 0)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_invariant_closure_properties(data):
    n = data.draw(st.integers(1, 3))
    phi = data.draw(unimodular(n))
    F = hnf_basis(data.draw(int_matrix(rows=n, lo=-2, hi=2)))
    C = invariant_closure(phi, F)
    assert F.issubset(C)
    assert C.image(phi) == C
    assert C + C.image(phi) == C


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_primitive_complement_completes_basis(data):
    n = data.draw(st.integers(2, 4))
    T = data.draw(unimodular(n))
    H = hnf_basis(T.block(0, n, 1, n))
    x = primitive_complement(H)
    assert abs(IntMatrix.from_columns([x], n).hstack(H.basis).det()) == 1
