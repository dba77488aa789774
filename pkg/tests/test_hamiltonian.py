import random
from fractions import Fraction

import pytest

from frobkp.diffring import Functional, JetPoly, field_element, is_total_derivative
from frobkp.frobenius import build_zn, mul, trace
from frobkp.hamiltonian import (
    BracketKind,
    ConventionMismatchError,
    NonTangentError,
    _check_tangent,
    adler_inf,
    apply_map,
    bracket,
    dirac_closed_form,
    dirac_complete,
    grad,
    hamiltonian_densities,
    kdv_bracket_pair,
    verify_bihamiltonian,
)
from frobkp.hierarchy import GDLax
from frobkp.psido import GradOperator, PsiDO
from frobkp.sampling import random_functional

Z2 = build_zn(2, 1)


def test_bracket_kind_parse():
    assert BracketKind.parse("first") is BracketKind.FirstInfinity
    assert BracketKind.parse("second-dirac") is BracketKind.SecondZeroDirac
    with pytest.raises(ValueError):
        BracketKind.parse("third")


def test_dirac_m3_closed_form():
    lax = GDLax(Z2, 3)
    X0, X1 = field_element(Z2, "X0"), field_element(Z2, "X1")
    X = dirac_complete(GradOperator(Z2, {0: X0, 1: X1}), lax)
    V1 = lax.field(1)
    want = X1.dx() - X0.dx().dx() * Fraction(1, 3) - mul(X0, V1) * Fraction(1, 3)
    assert X.component(2) == want


def test_dirac_needs_reduced():
    with pytest.raises(ValueError):
        dirac_complete(GradOperator(Z2, {}), GDLax(Z2, 2, reduced=False))


def test_second_map_requires_completion():
    lax = GDLax(Z2, 3, reduced=False)
    X = GradOperator(Z2, {i: field_element(Z2, f"X{i}") for i in range(3)})
    H = apply_map(BracketKind.SecondZero, X, lax)
    assert set(H.coeffs) <= set(lax.indices)
    with pytest.raises(ValueError):
        apply_map(BracketKind.SecondZero, X, GDLax(Z2, 3))


def test_tangency_check():
    lax = GDLax(Z2, 2)
    with pytest.raises(NonTangentError):
        _check_tangent(PsiDO.monomial(Z2, 1), lax)


def test_gradient_of_hamiltonian():
    lax = GDLax(Z2, 2)
    h = Functional(trace(mul(lax.field(0), lax.field(0))) * Fraction(1, 2))
    X = grad(h, lax)
    assert X.component(0) == lax.field(0)


def test_first_bracket_is_derivative():
    lax = GDLax(Z2, 2)
    X = GradOperator(Z2, {0: field_element(Z2, "X0")})
    assert adler_inf(X, lax.op).coeff(0) == field_element(Z2, "X0").dx() * -2


def test_hamiltonian_densities_kdv():
    lax = GDLax(build_zn(1, 0), 2)
    h, g = hamiltonian_densities(lax, 1)
    V = JetPoly.var("V0")
    # h_1 = 2 res L = V / 1, g_1 = -(2/3) res L^3
    assert h.density == V
    assert is_total_derivative(g.density + Fraction(1, 4) * V * V)


@pytest.mark.parametrize("n,m,r", [(1, 2, 3), (2, 2, 2), (3, 3, 4), (2, 4, 1)])
def test_bihamiltonian_more_cases(n, m, r):
    rep = verify_bihamiltonian(build_zn(n, 0), m, r)
    assert rep["status"] == "pass", rep["mismatches"]


def test_unreduced_bihamiltonian():
    rep = verify_bihamiltonian(build_zn(2, 0), 2, 3, reduced=False)
    assert rep["status"] == "pass", rep["mismatches"]


@pytest.mark.parametrize("kind", [BracketKind.FirstInfinity, BracketKind.SecondZeroDirac])
def test_skew_symmetry(kind):
    rng = random.Random(5)
    lax = GDLax(build_zn(3, 1), 3)
    for _ in range(4):
        f, g = (random_functional(rng, lax.algebra, lax.labels) for _ in range(2))
        assert (bracket(f, g, kind, lax) + bracket(g, f, kind, lax)).is_zero()


def test_kdv_pair_symbol_variant():
    from frobkp.dkp import LaurentSymbol

    rep = kdv_bracket_pair(Z2, cls=LaurentSymbol)
    assert rep["matrices_match"]
    assert all(rep["regenerates_flow"].values())


def test_closed_form_signals_mismatch(monkeypatch):
    import frobkp.hamiltonian as hm

    lax = GDLax(Z2, 2)
    monkeypatch.setattr(hm, "dirac_closed_form", lambda X, lax: lax.field(0))
    with pytest.raises(ConventionMismatchError):
        dirac_complete(GradOperator(Z2, {0: field_element(Z2, "X0")}), lax)
    assert dirac_closed_form is not hm.dirac_closed_form
