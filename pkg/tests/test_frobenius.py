import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobkp.frobenius import (
    AlgebraError,
    DegenerateTraceError,
    FrobeniusAlgebra,
    algebra_to_json,
    build_trn,
    build_z2_eps_mu,
    build_zn,
    check_frobenius,
    exp,
    inv,
    load_algebra,
    mul,
    pair,
    parse_algebra,
    trace,
    trn_weights,
    trn_weights_from_matrix,
)

fracs = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def elements(alg, values=fracs):
    return st.lists(values, min_size=alg.dim, max_size=alg.dim).map(alg.element)


Z3 = build_zn(3, 1)


@pytest.mark.parametrize("n", range(1, 7))
def test_builtins_are_frobenius(n):
    for k in range(n):
        assert check_frobenius(build_zn(n, k))
    assert check_frobenius(build_trn(n))


def test_zn_product_is_truncated_polynomial():
    alg = build_zn(4, 0)
    lam = alg.basis(1)
    assert mul(lam, lam) == alg.basis(2)
    assert mul(mul(lam, lam), mul(lam, lam)) == alg.zero()


def test_basic_trace_weights():
    assert build_zn(3, 0).trace_weights == (1, 0, 1)
    assert build_zn(3, 2).trace_weights == (0, 0, 1)


def test_trn_weights_match_matrix_definition():
    for n in range(1, 7):
        assert trn_weights(n) == trn_weights_from_matrix(n)


def test_z2_family_gram():
    assert build_z2_eps_mu(1, 0, 1).gram == ((1, 0), (0, 1))
    with pytest.raises(DegenerateTraceError):
        build_z2_eps_mu(0, 1, 1)
    with pytest.raises(AlgebraError):
        build_z2_eps_mu(1, 0, 3)


def test_broken_algebra_is_reported():
    # non-associative: e2 e2 = e2 but e1 is not a unit for e2
    bad = FrobeniusAlgebra(2, [[[1, 0], [0, 0]], [[0, 0], [0, 1]]], [1, 0], [1, 1], "bad")
    rep = check_frobenius(bad)
    assert not rep
    assert any(ax == "unit" for ax, _ in rep.failures)
    assert "FAIL" in str(rep)


@given(elements(Z3), elements(Z3), elements(Z3))
def test_multiplication_laws(a, b, c):
    assert mul(a, b) == mul(b, a)
    assert mul(mul(a, b), c) == mul(a, mul(b, c))
    assert mul(a, Z3.unit()) == a
    assert pair(mul(a, b), c) == pair(a, mul(b, c))


@given(elements(Z3, st.fractions(min_value=1, max_value=5, max_denominator=3)))
def test_inverse(a):
    assert mul(a, inv(a)) == Z3.unit()


def test_inverse_of_nilpotent_fails():
    with pytest.raises(AlgebraError):
        inv(Z3.basis(1))


def test_exact_exp_of_nilpotent():
    alg = build_zn(3, 0)
    lam = alg.basis(1)
    e = exp(lam)
    assert e == alg.element([1, 1, Fraction(1, 2)])
    with pytest.raises(AlgebraError):
        exp(alg.unit())


@settings(max_examples=30)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_float_exp_is_homomorphism(s, t):
    alg = build_z2_eps_mu(1, 1, 2)
    a, b = alg.element([s, t]), alg.element([t, s])
    lhs = exp(a + b)
    rhs = mul(exp(a), exp(b))
    assert all(abs(x - y) <= 1e-9 * max(1, abs(y)) for x, y in zip(lhs.coords, rhs.coords))


def test_trace_linear():
    alg = build_zn(2, 1)
    assert trace(alg.element([3, 5])) == 5


@pytest.mark.parametrize(
    "text,name",
    [("zn:3:1", "zn:3:1"), ("z2", "zn:2:1"), ("scalar", "zn:1:0"), ("trn:4", "trn:4"), ("z2:1:0:1", "z2:1:0:1")],
)
def test_parse_algebra(text, name):
    assert parse_algebra(text).name == name


@pytest.mark.parametrize("text", ["zn:3:7", "bogus", "z2:a:0:1", "zn:0:0"])
def test_parse_algebra_rejects(text):
    with pytest.raises(AlgebraError):
        parse_algebra(text)


def test_json_roundtrip(tmp_path):
    alg = build_z2_eps_mu(Fraction(1, 3), 2, 2)
    path = tmp_path / "alg.json"
    path.write_text(json.dumps(algebra_to_json(alg)))
    back = load_algebra(str(path))
    assert back.structure_constants == alg.structure_constants
    assert back.trace_weights == alg.trace_weights
    assert parse_algebra(str(path)).gram == alg.gram
