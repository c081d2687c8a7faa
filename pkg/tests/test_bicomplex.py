import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohomolab.bicomplex import (DoubleComplex, NotACocycle, NotContinuous, NotEquivariantizable,
                                 NotGInvariantCovering, SIGN_PROFILES, SignProfileFailure,
                                 augmentation_comparison, cocycle_basis, column_analysis,
                                 component_section, equivariantize, equivariantize_instance,
                                 fix_sign_profile, psi_bridge, structural_defects)
from cohomolab.cochain import apply_map
from cohomolab.finspace import Covering

from conftest import shipped


def _dc(name, equivariant=False, N=2, fault=None, cover=None):
    m = shipped(name)
    return DoubleComplex(m.space, m.module, cover, equivariant, N, m.action, fault=fault)


def _add(a, b, sign=1):
    return [x + sign * y for x, y in zip(a, b)]


# -- structure ---------------------------------------------------------------

def test_point_grid_and_total_cohomology():
    dc = _dc("point", N=3)
    for p in range(3):
        for q in range(3 - p):
            assert str(dc.grid(p, q).realized) == "Z"
    assert [str(dc.tot_cohomology(n)) for n in range(4)] == ["Z", "0", "0", "0"]


@pytest.mark.parametrize("name", ["cone", "sierpinski", "z2_regular", "klein_discrete"])
@pytest.mark.parametrize("equivariant", [False, True])
def test_structural_identities(name, equivariant):
    assert structural_defects(_dc(name, equivariant)) == []


@pytest.mark.parametrize("fault", ["sign", "differential"])
def test_faults_break_identities(fault):
    bad = structural_defects(_dc("z2_regular", fault=fault))
    assert bad and "identity" in bad[0] and "generator" in bad[0]


def test_unknown_fault_rejected():
    with pytest.raises(ValueError):
        _dc("point", fault="typo")


def test_noninvariant_covering_rejected():
    m = shipped("cone")
    a, t = m.space.index("a"), m.space.index("t")
    b = m.space.index("b")
    cov = Covering(m.space, (frozenset({a, t}), frozenset({b, t})))
    DoubleComplex(m.space, m.module, cov, True, 2, m.action)  # swapped members: invariant
    lopsided = Covering(m.space, (frozenset({a, t}), frozenset({a, b, t})))
    with pytest.raises(NotGInvariantCovering):
        DoubleComplex(m.space, m.module, lopsided, True, 2, m.action)


def test_horizontal_differential_telescopes():
    # at p = 0, a cochain ignoring the first block has d_h f = f(x_1, x') - f(x_0, x') = 0
    dc = _dc("z2_regular")
    g = dc.grid(0, 1)
    f = g.from_function(lambda t: (t[1] + 2 * t[2],))
    assert not any(apply_map(dc.d_h(0, 1), f))


# -- row contraction ---------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(["cone", "sierpinski", "pseudocircle"]),
       st.booleans())
def test_row_contraction_identity(seed, name, equivariant):
    dc = _dc(name, equivariant)
    rng = random.Random(seed)
    q = rng.randrange(0, 2)
    p = rng.randrange(1, dc.top - q)
    f = dc.grid(p, q).random_element(rng)
    hf = dc.row_contraction(p, q, f)
    dhf = apply_map(dc.d_h(p - 1, q), hf)
    hdf = dc.row_contraction(p + 1, q, apply_map(dc.d_h(p, q), f))
    assert dc.grid(p, q).reduce(_add(dhf, hdf)) == dc.grid(p, q).reduce(f)


def test_row_contraction_of_zero():
    dc = _dc("cone")
    assert not any(dc.row_contraction(1, 0, dc.grid(1, 0).zero()))


@pytest.mark.parametrize("equivariant", [False, True])
def test_signed_contraction_verifies(equivariant):
    dc = _dc("pseudocircle", equivariant)
    for q in range(dc.N + 1):
        assert dc.verify_row_contraction(q) == []


def test_unsigned_contraction_fails():
    # negative control: without the (-1)^p factor the homotopy identity breaks
    # (on a disconnected space, where the first block is not forced to be constant)
    dc = _dc("z2_regular")
    fails = dc.verify_row_contraction(0, signed=False)
    assert fails and "identity" in fails[0]


@pytest.mark.parametrize("name", ["cone", "pseudocircle"])
def test_augmented_rows_exact(name):
    dc = _dc(name)
    for q in range(dc.N + 1):
        assert all(h.is_trivial() for _, h in dc.augmented_row_cohomology(q))


@pytest.mark.parametrize("name", ["cone", "pseudocircle", "z2_regular"])
@pytest.mark.parametrize("equivariant", [False, True])
def test_row_augmentation_is_quasi_isomorphism(name, equivariant):
    dc = _dc(name, equivariant)
    for n in range(dc.N + 1):
        cmp = augmentation_comparison(dc, n)
        assert cmp.bijective, cmp.witness


# -- augmentations and the bridge --------------------------------------------

def test_degree_zero_augmentations_agree():
    dc = _dc("cone")
    const = {(x,): (3,) for x in range(3)}
    assert dc.apply_i(0, const) == dc.apply_j(0, const)
    assert set(dc.apply_i(0, const)) == {3}


@pytest.mark.parametrize("name", ["z2_regular", "pseudocircle", "two_sierpinski"])
def test_bridge_profile_is_consistent(name):
    dc = _dc(name, True)
    cocycles = {n: cocycle_basis(dc, n) for n in range(1, dc.N + 1)}
    profile, _ = fix_sign_profile(dc, cocycles)
    assert profile == "-1"
    for n, fs in cocycles.items():
        for f in fs:
            res = psi_bridge(dc, n, f, [profile])
            Dc = apply_map(dc.D(n - 1), res.c)
            goal = _add(apply_map(dc.augmentation_j(n), f),
                        dc.apply_i(n, dc.ac(n).to_function(f)), -1)
            assert dc.tot(n).reduce(_add(Dc, goal, -1)) == {}


def test_bridge_fails_under_sign_fault():
    dc = _dc("z2_regular", True, fault="sign")
    cocycles = {n: cocycle_basis(dc, n) for n in range(1, dc.N + 1)}
    profile, rejected = fix_sign_profile(dc, cocycles)
    assert profile is None
    assert set(rejected) == set(SIGN_PROFILES)
    assert all("coordinate" in w for w in rejected.values())


def test_bridge_rejects_non_cocycle():
    dc = _dc("z2_regular", True)
    d = dc.ac_differential(1)
    f = next(dc.ac(1).basis_element(j) for j in range(dc.ac(1).generator_count)
             if any(apply_map(d, dc.ac(1).basis_element(j))))
    with pytest.raises(NotACocycle):
        psi_bridge(dc, 1, f)


def test_bridge_rejects_discontinuous_function():
    dc = _dc("cone", True)
    f = {t: (1 if t == (0, 2) or t == (1, 2) else 0,) for t in dc.grid(0, 0).tuples}
    with pytest.raises(NotContinuous):
        psi_bridge(dc, 1, f)


def test_bridge_failure_has_witness():
    dc = _dc("z2_regular", True, fault="differential")
    f = cocycle_basis(dc, 2)[0]
    with pytest.raises(SignProfileFailure) as info:
        psi_bridge(dc, 2, f)
    assert "coordinate" in info.value.witness


# -- equivariantization ------------------------------------------------------

def test_section_requires_free_components():
    with pytest.raises(NotEquivariantizable):
        component_section(shipped("cone").action)
    with pytest.raises(NotEquivariantizable):
        component_section(shipped("klein_discrete").action)
    gamma = component_section(shipped("two_sierpinski").action)
    assert len(set(gamma)) == 2


def test_equivariantize_fixes_equivariant_input():
    plain, eq = _dc("z2_regular"), _dc("z2_regular", True)
    rng = random.Random(1)
    u = eq.grid(1, 0).random_element(rng)
    fprime = plain.grid(1, 0).from_function(eq.grid(1, 0).to_function(u))
    assert equivariantize(plain, eq, 1, 0, fprime) == u


def test_equivariantize_trivial_group_is_identity():
    m = shipped("sierpinski")
    plain = DoubleComplex(m.space, m.module, None, False, 2, m.action)
    eq = DoubleComplex(m.space, m.module, None, True, 2, m.action)
    f = plain.grid(0, 1).random_element(random.Random(3))
    assert equivariantize(plain, eq, 0, 1, f) == eq.grid(0, 1).reduce(f)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(["z2_regular", "two_sierpinski"]))
def test_equivariantize_preserves_equivariant_dv(seed, name):
    plain, eq = _dc(name), _dc(name, True)
    rng = random.Random(seed)
    p = rng.randrange(0, 2)
    q = rng.randrange(0, 2 - p)
    res = equivariantize_instance(plain, eq, rng, p, q)
    assert res["ok"], res["witness"]


# -- columns -----------------------------------------------------------------

def test_column_analysis_cone():
    col = column_analysis(_dc("cone", N=3), 0)
    assert col.exact_global
    assert [str(h) for h in col.continuous_cohomology] == ["Z", "0", "0", "0"]


def test_column_analysis_pseudocircle_first_column():
    # U_min[q] is connected and continuous germs see only H^0 here
    col = column_analysis(_dc("pseudocircle", N=2), 0)
    assert col.exact_global
    assert [str(h) for h in col.continuous_cohomology] == ["Z", "0", "0"]


@pytest.mark.parametrize("name", ["closed_cone", "double_cone", "sierpinski"])
def test_restriction_kernels_coincide(name):
    col = column_analysis(_dc(name), 0)
    assert all(col.kernels_coincide.values()) and all(col.cr_inside_global.values())


def test_restriction_kernels_differ_off_region():
    # (a, a, b) lies outside X x U_min[1] on the cone, so the grid leaves it free
    # while the global column forces local constancy in the first block there
    col = column_analysis(_dc("cone"), 0)
    assert col.kernels_coincide == {0: True, 1: False, 2: False}
    assert col.kernel_witness[1] == {"in": "ker res_cr only", "tuple": "(a,a,b)", "value": 1}
    assert col.cr_inside_global[1] is False


def test_column_analysis_bad_basepoint():
    from cohomolab.bicomplex import BasepointInvalid
    with pytest.raises(BasepointInvalid):
        column_analysis(_dc("cone"), 0, basepoint="zz")
