import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobkp.diffring import JetPoly, field_element
from frobkp.dkp import (
    LaurentSymbol,
    dispersionless_limit_check,
    dkp_brackets,
    dkp_dirac,
    dkp_equation,
    dkp_flows,
    dkp_gd_flow,
    dkp_lax,
    poisson_symbol,
)
from frobkp.frobenius import build_zn
from frobkp.hamiltonian import BracketKind
from frobkp.hierarchy import GDLax
from frobkp.psido import GradOperator
from frobkp.sampling import random_functional, random_operator

Z2 = build_zn(2, 1)
P = LaurentSymbol.monomial(Z2, 1)


def test_canonical_bracket():
    u = LaurentSymbol.function(field_element(Z2, "u"))
    assert poisson_symbol(P, u) == LaurentSymbol.function(field_element(Z2, "u").dx())


def test_product_is_commutative():
    u = LaurentSymbol.function(field_element(Z2, "u"))
    assert P.compose(u) == u.compose(P)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_jacobi(seed):
    rng = random.Random(seed)
    A, B, C = (random_operator(rng, Z2, rng.randint(0, 2), 4, cls=LaurentSymbol, terms=2) for _ in range(3))
    J = (poisson_symbol(A, poisson_symbol(B, C)) + poisson_symbol(B, poisson_symbol(C, A))
         + poisson_symbol(C, poisson_symbol(A, B)))
    assert not J.coeffs


def test_flows():
    F1 = dkp_flows(Z2, 1)
    assert all(rhs == JetPoly.var(lab, q, 1) for (lab, q), rhs in F1.rules.items())
    assert dkp_equation(Z2).holds
    assert dkp_equation(build_zn(3, 1)).holds


def test_dispersionless_kdv():
    flow = dkp_gd_flow(Z2, 2, 3)
    V = field_element(Z2, "V0")
    from frobkp.frobenius import mul

    want = mul(V, V.dx()) * Fraction(3, 2)
    assert flow.component("V0") == want


def test_dirac_symbol_m2_and_m3():
    X0 = field_element(Z2, "X0")
    assert not dkp_dirac(GradOperator(Z2, {0: X0}, LaurentSymbol), dkp_lax(Z2, 2)).component(1)
    lax = dkp_lax(Z2, 3)
    X = dkp_dirac(GradOperator(Z2, {0: X0, 1: field_element(Z2, "X1")}, LaurentSymbol), lax)
    from frobkp.frobenius import mul

    assert X.component(2) == mul(X0, lax.field(1)) * Fraction(-1, 3)


def test_brackets_need_symbol_lax():
    lax = GDLax(Z2, 2)
    f = random_functional(random.Random(0), Z2, lax.labels)
    with pytest.raises(ValueError):
        dkp_brackets(f, f, BracketKind.FirstInfinity, lax)
    slax = dkp_lax(Z2, 2)
    g = random_functional(random.Random(1), Z2, slax.labels)
    assert (dkp_brackets(f, g, BracketKind.SecondZeroDirac, slax)
            + dkp_brackets(g, f, BracketKind.SecondZeroDirac, slax)).is_zero()


@pytest.mark.parametrize("m,r", [(2, 3), (3, 2), (3, 4)])
def test_limit_check(m, r):
    rep = dispersionless_limit_check(m, r)
    assert rep["status"] == "pass", rep["mismatches"]
    assert rep["flow_matches"] is True
    assert len(rep["brackets"]) == 4


def test_limit_check_other_trace():
    assert dispersionless_limit_check(2, 3, build_zn(3, 0))["status"] == "pass"
