import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohomolab.fpabelian import FpAbGroup
from cohomolab.finspace import FiniteSpace, minimal_open_cover, trivial_cover
from cohomolab.oracle import bar_complex, bar_group_cohomology, cech_nerve_cohomology

from conftest import pseudocircle, shipped


def cyclic(n):
    return [[(a + b) % n for b in range(n)] for a in range(n)]


KLEIN = [[a ^ b for b in range(4)] for a in range(4)]


class _Sign:
    """``Z`` with the generator of ``Z/2`` acting by ``-1``."""
    orders = (0,)
    rho = [[[1]], [[-1]]]


def _str(groups):
    return [str(g) for g in groups]


# -- bar complex -------------------------------------------------------------

def test_trivial_group():
    assert _str(bar_group_cohomology(cyclic(1), [0], 3)) == ["Z", "0", "0", "0"]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cyclic_integer_coefficients(n):
    assert _str(bar_group_cohomology(cyclic(n), [0], 3)) == ["Z", "0", f"Z/{n}", "0"]


def test_cyclic_sign_module():
    assert _str(bar_group_cohomology(cyclic(2), _Sign, 3)) == ["0", "Z/2", "0", "Z/2"]


def test_klein_four():
    hs = bar_group_cohomology(KLEIN, [0], 3)
    assert _str(hs) == ["Z", "0", "Z/2+Z/2", "Z/2"]


def test_z2_with_z2_coefficients():
    assert _str(bar_group_cohomology(cyclic(2), [2], 3)) == ["Z/2"] * 4


def test_coprime_orders_vanish():
    assert _str(bar_group_cohomology(cyclic(3), [2], 3)) == ["Z/2", "0", "0", "0"]


def test_bar_differential_squares_to_zero():
    levels = bar_complex(KLEIN, [0, 2], 2)
    for a, b in zip(levels, levels[1:]):
        assert b.differential.compose(a.differential).is_zero()


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.integers(2, 6))
def test_first_cohomology_is_hom(n, k):
    # trivial coefficients: H^1 = Hom(Z/n, Z/k) = Z/gcd(n, k)
    h1 = bar_group_cohomology(cyclic(n), [k], 1)[1]
    g = math.gcd(n, k)
    assert str(h1) == ("0" if g == 1 else f"Z/{g}")


def test_gmodule_is_accepted():
    m = shipped("z2_sign")
    assert _str(bar_group_cohomology(m.action, m.module, 2)) == ["0", "Z/2", "0"]


# -- Cech nerve --------------------------------------------------------------

def test_trivial_cover_gives_constants():
    X = pseudocircle()
    assert _str(cech_nerve_cohomology(X, trivial_cover(X), [0], 2)) == ["Z", "0", "0"]


def test_pseudocircle_nerve_sees_the_circle():
    X = pseudocircle()
    assert _str(cech_nerve_cohomology(X, minimal_open_cover(X), [0], 2)) == ["Z", "Z", "0"]


def test_cone_nerve_is_acyclic():
    X = FiniteSpace.from_relations("abt", [("a", "t"), ("b", "t")])
    assert _str(cech_nerve_cohomology(X, minimal_open_cover(X), [0], 2)) == ["Z", "0", "0"]


def test_discrete_nerve_counts_points():
    # each of the 3 members carries Z/2 per component of X x U_s, and X has 3 components
    X = FiniteSpace.discrete(["u", "v", "w"])
    h0, h1 = cech_nerve_cohomology(X, minimal_open_cover(X), [2], 1)
    assert h0 == FpAbGroup.from_orders([2] * 9)
    assert h1.is_trivial()
