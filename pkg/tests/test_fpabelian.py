import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohomolab.fpabelian import (CompositionNotZero, FpAbGroup, GroupMap, IntMatrix, Lattice,
                                 NotInSubgroup, Subquotient, homology_at, invariant_factors,
                                 kernel_basis, smith_normal_form, solve_in_group, zero_map)


# -- independent oracle: determinantal divisors ------------------------------

def _det(rows):
    if not rows:
        return 1
    return sum((-1) ** j * rows[0][j] * _det([r[:j] + r[j + 1:] for r in rows[1:]])
               for j in range(len(rows)))


def _determinantal_invariants(rows):
    """Nonzero Smith diagonal from gcds of k x k minors."""
    m = len(rows)
    n = len(rows[0]) if rows else 0
    prev, out = 1, []
    for k in range(1, min(m, n) + 1):
        g = 0
        for ri in itertools.combinations(range(m), k):
            for ci in itertools.combinations(range(n), k):
                g = math.gcd(g, _det([[rows[i][j] for j in ci] for i in ri]))
        if g == 0:
            break
        out.append(g // prev)
        prev = g
    return out


small_matrices = st.integers(1, 3).flatmap(lambda m: st.integers(1, 3).flatmap(
    lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=m, max_size=m)))


# -- smith normal form -------------------------------------------------------

def test_snf_known_example():
    M = IntMatrix.from_rows([[2, 4], [6, 8]])
    S, U, W = smith_normal_form(M)
    assert S.to_rows() == [[2, 0], [0, 4]]
    assert (U @ M @ W) == S


def test_snf_zero_matrix():
    S, _, _ = smith_normal_form(IntMatrix.zeros(2, 3))
    assert S.is_zero() and (S.rows, S.cols) == (2, 3)


def test_snf_identity():
    S, _, _ = smith_normal_form(IntMatrix.identity(4))
    assert S == IntMatrix.identity(4)


@settings(max_examples=150, deadline=None)
@given(small_matrices)
def test_snf_matches_determinantal_divisors(rows):
    M = IntMatrix.from_rows(rows, len(rows[0]))
    S, U, W = smith_normal_form(M)
    assert U @ M @ W == S
    diag = [S[i, i] for i in range(min(S.rows, S.cols))]
    assert all(S[i, j] == 0 for i in range(S.rows) for j in range(S.cols) if i != j)
    nonzero = [d for d in diag if d]
    assert nonzero == _determinantal_invariants(rows)
    assert all(b % a == 0 for a, b in zip(nonzero, nonzero[1:]))
    assert abs(_det(U.to_rows())) == 1 and abs(_det(W.to_rows())) == 1


@settings(max_examples=150, deadline=None)
@given(small_matrices)
def test_cokernel_invariants_match_snf(rows):
    M = IntMatrix.from_rows(rows, len(rows[0]))
    torsion, free = FpAbGroup(M.rows, M).invariants()
    divs = _determinantal_invariants(rows)
    assert torsion == tuple(d for d in divs if d > 1)
    assert free == M.rows - len(divs)


# -- kernels -----------------------------------------------------------------

def test_kernel_rank_one_row():
    K = kernel_basis(IntMatrix.from_rows([[1, 1]]))
    assert K.cols == 1
    v = [K[0, 0], K[1, 0]]
    assert v in ([1, -1], [-1, 1])


def test_kernel_identity_empty():
    assert kernel_basis(IntMatrix.identity(3)).cols == 0


def test_kernel_symmetric_matrix():
    K = kernel_basis(IntMatrix.from_rows([[2, -2], [-2, 2]]))
    assert K.cols == 1
    v = [K[0, 0], K[1, 0]]
    assert v in ([1, 1], [-1, -1])


@settings(max_examples=100, deadline=None)
@given(small_matrices)
def test_kernel_basis_spans_kernel(rows):
    M = IntMatrix.from_rows(rows, len(rows[0]))
    K = kernel_basis(M)
    assert (M @ K).is_zero()
    lat = Lattice(M.cols, list(K.iter_columns()))
    # every small kernel vector is an integer combination of the basis
    for x in itertools.product(range(-2, 3), repeat=M.cols):
        if not M.apply(list(x)):
            assert lat.contains(list(x))


# -- homology ----------------------------------------------------------------

def test_homology_zero_maps():
    Z2 = FpAbGroup.free(2)
    H = homology_at(zero_map(Z2, FpAbGroup.free(0)), zero_map(FpAbGroup.free(0), Z2))
    assert H == FpAbGroup.free(2)


def test_homology_forced_cyclic():
    Z = FpAbGroup.free(1)
    d_out = GroupMap(Z, Z, IntMatrix.from_rows([[0]]))
    d_in = GroupMap(Z, Z, IntMatrix.from_rows([[2]]))
    assert str(homology_at(d_out, d_in)) == "Z/2"


def test_homology_rejects_nonzero_composition():
    Z = FpAbGroup.free(1)
    one = GroupMap(Z, Z, IntMatrix.identity(1))
    with pytest.raises(CompositionNotZero) as info:
        homology_at(one, one)
    assert info.value.witness["generator"] == 0


def test_homology_with_torsion_coefficients():
    # Z/4 --x2--> Z/4 --x2--> Z/4 : ker = 2Z/4, im = 2Z/4
    Z4 = FpAbGroup.from_orders([4])
    two = GroupMap(Z4, Z4, IntMatrix.from_rows([[2]]))
    assert homology_at(two, two).is_trivial()


# -- solving -----------------------------------------------------------------

def test_solve_identity():
    G = FpAbGroup.free(3)
    assert solve_in_group(GroupMap(G, G, IntMatrix.identity(3)), [4, -1, 7]) == [4, -1, 7]


def test_solve_parity_obstruction():
    Z = FpAbGroup.free(1)
    assert solve_in_group(GroupMap(Z, Z, IntMatrix.from_rows([[2]])), [3]) is None


def test_solve_into_torsion():
    f = GroupMap(FpAbGroup.free(1), FpAbGroup.from_orders([4]), IntMatrix.from_rows([[2]]))
    x = solve_in_group(f, [2])
    assert x is not None and (2 * x[0] - 2) % 4 == 0


@settings(max_examples=100, deadline=None)
@given(small_matrices, st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_solve_finds_image_points(rows, x):
    M = IntMatrix.from_rows(rows, len(rows[0]))
    f = GroupMap(FpAbGroup.free(M.cols), FpAbGroup.free(M.rows), M)
    b = [M.apply(x[:M.cols]).get(i, 0) for i in range(M.rows)]
    y = solve_in_group(f, b)
    assert y is not None
    assert [M.apply(y).get(i, 0) for i in range(M.rows)] == b


# -- groups and subquotients -------------------------------------------------

def test_invariant_factors_canonical():
    assert invariant_factors([2, 3]) == (6,)
    assert invariant_factors([2, 2]) == (2, 2)
    assert invariant_factors([4, 6]) == (2, 12)
    assert invariant_factors([0, 1, 5]) == (5,)


def test_group_equality_is_isomorphism():
    assert FpAbGroup.from_orders([2, 3]) == FpAbGroup.from_orders([6])
    assert FpAbGroup.from_orders([2, 2]) != FpAbGroup.from_orders([4])
    assert str(FpAbGroup.from_orders([0, 2, 0])) == "Z/2+Z^2"


def test_subquotient_coordinates():
    num = Lattice(2, [[1, 0], [0, 1]])
    sq = Subquotient(num, [[2, 0]])
    assert str(sq) == "Z/2+Z"
    assert sq.is_zero_class([2, 0])
    assert not sq.is_zero_class([1, 0])
    with pytest.raises(NotInSubgroup):
        Subquotient(Lattice(2, [[1, 0]]), [[0, 1]])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 6).map(lambda o: 0 if o == 1 else o), min_size=1, max_size=4))
def test_from_orders_roundtrip(orders):
    G = FpAbGroup.from_orders(orders)
    torsion, free = G.invariants()
    assert free == orders.count(0)
    prod = math.prod(o for o in orders if o > 1)
    assert math.prod(torsion) == prod
