import pytest
from hypothesis import given, settings

from cohomolab.cochain import (Cochain, GModule, NotInCochainGroup, RegionArityMismatch,
                               act_on_cochain, build_cochain_group, cochain_cohomology,
                               cochain_complex, fixed_subgroup, simplicial_differential,
                               variant_region, VARIANTS)
from cohomolab.finspace import (FiniteSpace, diagonal_neighborhood, minimal_open_cover)
from cohomolab.fpabelian import FpAbGroup

from conftest import shipped, sierpinski
from test_finspace import spaces

Z = FpAbGroup.free(1)
ZERO = FpAbGroup.free(0)


def _str(groups):
    return [str(g) for g in groups]


# -- groups ------------------------------------------------------------------

@pytest.mark.parametrize("n", [0, 1, 2])
def test_point_full_continuity(n):
    X = FiniteSpace.discrete(["p"])
    A = build_cochain_group(X, GModule([0]), n, "full")
    assert A.realized == Z


def test_discrete_two_points_degree_zero():
    X = FiniteSpace.discrete(["u", "v"])
    A = build_cochain_group(X, GModule([0]), 0, "full")
    assert A.realized == FpAbGroup.free(2)


def test_sierpinski_degree_zero_constants():
    A = build_cochain_group(sierpinski(), GModule([0]), 0, "full")
    assert A.realized == Z


def test_region_arity_checked():
    X = sierpinski()
    U1 = diagonal_neighborhood(minimal_open_cover(X), 1)
    with pytest.raises(RegionArityMismatch):
        build_cochain_group(X, GModule([0]), 2, U1)


def test_discontinuous_function_rejected():
    X = sierpinski()
    A = build_cochain_group(X, GModule([0]), 0, "full")
    with pytest.raises(NotInCochainGroup):
        A.from_function({(0,): (1,), (1,): (0,)})


# -- differential ------------------------------------------------------------

def test_constant_zero_cochain_is_cocycle():
    X = sierpinski()
    A0 = build_cochain_group(X, GModule([0]), 0)
    A1 = build_cochain_group(X, GModule([0]), 1)
    d = simplicial_differential(A0, A1)
    f = A0.from_function({(0,): (5,), (1,): (5,)})
    assert d.matrix.apply(f) == {}


def test_differential_sign_convention():
    X = FiniteSpace.discrete(["u", "v"])
    A0 = build_cochain_group(X, GModule([0]), 0)
    A1 = build_cochain_group(X, GModule([0]), 1)
    d = simplicial_differential(A0, A1)
    f = A0.from_function({(0,): (1,), (1,): (0,)})
    df = [d.matrix.apply(f).get(i, 0) for i in range(A1.generator_count)]
    assert A1.value(df, (0, 1)) == (-1,)
    assert A1.value(df, (1, 0)) == (1,)


@settings(max_examples=25, deadline=None)
@given(spaces(3))
def test_dd_zero_all_variants(X):
    V = GModule([0, 2])
    cover = minimal_open_cover(X)
    for variant in VARIANTS:
        _, maps = cochain_complex(X, V, 2, variant_region(variant, cover))
        for n in range(2):
            assert maps[n + 1].compose(maps[n]).is_zero()


@settings(max_examples=25, deadline=None)
@given(spaces(3))
def test_standard_complex_is_acyclic(X):
    hs = cochain_cohomology(X, GModule([0]), 2, "standard")
    assert _str(hs) == ["Z", "0", "0"]


@settings(max_examples=25, deadline=None)
@given(spaces(3))
def test_degree_zero_is_constants(X):
    # every variant lives on all of X^{n+1}, so df(x0, x1) = f(x1) - f(x0) = 0 forces constants
    for variant in VARIANTS:
        assert cochain_cohomology(X, GModule([0]), 1, variant)[0] == Z


# -- group action ------------------------------------------------------------

def _z2(model="z2_regular"):
    m = shipped(model)
    return m.space, m.module, m.action


def test_act_identity_and_swap():
    X, V, act = _z2()
    A = build_cochain_group(X, V, 0, action=act)
    f = Cochain(A, A.from_function({(0,): (1,), (1,): (0,)}))
    assert act_on_cochain(act.identity, f).coords == f.coords
    s = next(g for g in range(act.order) if g != act.identity)
    assert act_on_cochain(s, f).function() == {(0,): (0,), (1,): (1,)}


def test_equivariant_cochain_fixed():
    X, V, act = _z2()
    A = build_cochain_group(X, V, 1, equivariant=True, action=act)
    plain = build_cochain_group(X, V, 1, action=act)
    f = Cochain(plain, plain.from_function(A.to_function(A.basis_element(0))))
    for g in range(act.order):
        assert act_on_cochain(g, f).coords == f.coords


def test_fixed_subgroup_trivial_group():
    A = build_cochain_group(sierpinski(), GModule([0]), 1)
    assert fixed_subgroup(A).realized == A.realized


def test_fixed_subgroup_translation():
    X, V, act = _z2()
    A = build_cochain_group(X, V, 0, action=act)
    assert fixed_subgroup(A).realized == Z


def test_fixed_subgroup_sign_action():
    X, V, act = _z2("z2_sign")
    A = build_cochain_group(X, V, 0, action=act)
    F = fixed_subgroup(A)
    assert F.realized == Z
    f = F.to_function(F.basis_element(0))
    assert f[(1,)] == tuple(-x for x in f[(0,)])


# -- cohomology --------------------------------------------------------------

def test_point_all_variants():
    m = shipped("point")
    for v in VARIANTS:
        assert _str(cochain_cohomology(m.space, m.module, 3, v)) == ["Z", "0", "0", "0"]


def test_regular_z2_continuous_equivariant():
    X, V, _ = _z2()
    hs = cochain_cohomology(X, V, 3, "continuous", equivariant=True)
    assert _str(hs) == ["Z", "0", "Z/2", "0"]


def test_sierpinski_continuous():
    hs = cochain_cohomology(sierpinski(), GModule([0]), 3, "continuous")
    assert _str(hs) == ["Z", "0", "0", "0"]


def test_gmodule_validation():
    X, _, act = _z2()
    with pytest.raises(ValueError):
        GModule([2], act, [[[1]], [[2]]])  # 2 is not invertible mod 2
    with pytest.raises(ValueError):
        GModule([1])
