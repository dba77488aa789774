import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobkp.diffring import JetPoly, field_element
from frobkp.frobenius import build_zn, mul
from frobkp.psido import (
    GradOperator,
    NonMonicError,
    PsiDO,
    TrustUnderflowError,
    adjoint,
    binom,
    inverse,
    mth_root,
    power,
)
from frobkp.sampling import random_operator

Z2 = build_zn(2, 1)
D = PsiDO.monomial(Z2, 1)
seeds = st.integers(0, 10**6)


def f(label="f"):
    return PsiDO.function(field_element(Z2, label))


def test_binom_generalized():
    assert binom(-1, 3) == -1
    assert binom(-2, 2) == 3
    assert binom(3, 5) == 0


def test_leibniz_rule():
    # d o f = f d + f'
    got = D.compose(f())
    assert got.coeff(1) == field_element(Z2, "f")
    assert got.coeff(0) == field_element(Z2, "f").dx()


def test_inverse_derivative_expansion():
    # d^-1 o f = f d^-1 - f' d^-2 + f'' d^-3 - ...
    Dinv = PsiDO.monomial(Z2, -1)
    got = Dinv.compose(f(), min_order=-4)
    F = field_element(Z2, "f")
    assert got.coeff(-1) == F
    assert got.coeff(-2) == -F.dx()
    assert got.coeff(-3) == F.dx().dx()
    assert got.trusted_min == -4


def test_trust_propagates_and_truncates():
    A = random_operator(random.Random(0), Z2, 1, 3)
    B = random_operator(random.Random(1), Z2, 2, 3)
    C = A.compose(B)
    assert C.trusted_min == -3 + 2
    assert all(o >= C.trusted_min for o in C.coeffs)
    with pytest.raises(TrustUnderflowError):
        PsiDO(Z2, {2: Z2.unit()}, 1).plus()


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_associativity(seed):
    rng = random.Random(seed)
    A, B, C = (random_operator(rng, Z2, rng.randint(0, 2), 4, terms=2) for _ in range(3))
    assert A.compose(B).compose(C).agrees_with(A.compose(B.compose(C)))


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_adjoint_antihomomorphism_and_involution(seed):
    rng = random.Random(seed)
    A, B = (random_operator(rng, Z2, rng.randint(0, 2), 4, terms=2) for _ in range(2))
    assert adjoint(A.compose(B)).agrees_with(adjoint(B).compose(adjoint(A)))
    assert adjoint(adjoint(A)).agrees_with(A)


def test_adjoint_of_derivative():
    assert adjoint(D) == PsiDO.monomial(Z2, 1).scale(-1)


def test_inverse_and_root():
    U = field_element(Z2, "U")
    L = PsiDO(Z2, {2: Z2.unit(), 0: U}, None)
    Linv = inverse(L, 5)
    one = L.compose(Linv)
    assert one.agrees_with(PsiDO.monomial(Z2, 0))
    R = mth_root(L, 2, 5)
    assert R.compose(R).agrees_with(L)
    assert R.coeff(-1) == U * Fraction(1, 2)
    with pytest.raises(NonMonicError):
        mth_root(L.scale(2), 2, 3)


def test_power_and_parts():
    L = PsiDO(Z2, {1: Z2.unit(), -1: field_element(Z2, "U1")}, -3)
    B2 = power(L, 2, min_order=0).plus()
    assert sorted(B2.coeffs) == [0, 2]
    assert B2.coeff(0) == field_element(Z2, "U1") * 2
    assert L.minus().res() == field_element(Z2, "U1")


def test_apply_differential_operator():
    F = field_element(Z2, "f")
    P = PsiDO(Z2, {2: Z2.unit(), 0: field_element(Z2, "V")}, None)
    assert P.apply(F) == F.dx().dx() + mul(field_element(Z2, "V"), F)
    with pytest.raises(ValueError):
        PsiDO.monomial(Z2, -1).apply(F)


def test_grad_operator_roundtrip():
    X = GradOperator(Z2, {0: field_element(Z2, "X0"), 1: field_element(Z2, "X1")})
    S = X.to_series(-4)
    back = GradOperator.from_series(S, [0, 1])
    assert back.component(0) == X.component(0)
    assert back.component(1) == X.component(1)


def test_mixed_algebras_rejected():
    with pytest.raises(ValueError):
        D + PsiDO.monomial(build_zn(3, 0), 1)


def test_render():
    P = PsiDO(Z2, {1: Z2.unit(), 0: field_element(Z2, "V")}, None)
    assert "d^1" in P.render()
    assert JetPoly.var("V").to_ascii() in P.render()
