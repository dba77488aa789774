from fractions import Fraction

import pytest

from frobkp.diffring import JetPoly
from frobkp.frobenius import build_z2_eps_mu, build_zn
from frobkp.hierarchy import (
    GDLax,
    coupled_kdv_rhs,
    flow_equations,
    gd_flow_in_u,
    gd_reduction,
    generic_L,
    kp_equation,
    kp_flow_identities,
    closed_z2_kp,
    zero_curvature_check,
)
from frobkp.psido import TrustUnderflowError

Z2 = build_zn(2, 1)


def test_t1_flow_is_translation():
    L = generic_L(Z2, 4)
    F = flow_equations(L, 1)
    for (label, q), rhs in F.rules.items():
        assert rhs == JetPoly.var(label, q, 1)


def test_scalar_kp_identities():
    ids = kp_flow_identities(build_zn(1, 0))
    assert not ids["U1_t2"] and not ids["U1_t3"]


@pytest.mark.parametrize("eps,mu,k", [(1, 0, 1), (0, 0, 2), (Fraction(-2, 3), 4, 2)])
def test_component_kp(eps, mu, k):
    eq = kp_equation(build_z2_eps_mu(eps, mu, k))
    assert eq.holds
    assert tuple(eq.expression.coords) == closed_z2_kp(eps, mu)
    assert "v_t" in eq.render()


def test_kp_rejects_wrong_closed_form():
    eq = kp_equation(build_z2_eps_mu(1, 1, 2))
    assert tuple(eq.expression.coords) != closed_z2_kp(1, 0)


def test_zero_curvature_small():
    assert zero_curvature_check(generic_L(build_zn(3, 0), 5), 2, 3)


def test_ckdv():
    flow = gd_flow_in_u(gd_reduction(Z2, 2, 3))
    assert flow.component("u") == coupled_kdv_rhs(Z2)
    assert flow.render({("u", 1): "v", ("u", 2): "w"}).splitlines()[0] == "dv/dt3 = 1/4*v''' + 3*v*v'"


def test_trivial_and_tangent_notes():
    assert "trivial" in gd_reduction(Z2, 2, 2).note
    assert gd_reduction(Z2, 2, 2).is_zero()
    assert gd_reduction(Z2, 3, 2).note == ""


def test_boussinesq_flow():
    # m = 3, r = 2 on the reduced operator d^3 + V1 d + V0
    flow = gd_reduction(build_zn(1, 0), 3, 2)
    V0, V1 = JetPoly.var("V0"), JetPoly.var("V1")
    assert flow.rules[("V1", 1)] == 2 * V0.dx() - V1.dx_n(2)
    assert flow.rules[("V0", 1)] == V0.dx_n(2) - Fraction(2, 3) * V1.dx_n(3) - Fraction(2, 3) * V1 * V1.dx()


def test_unreduced_keeps_top_field():
    lax = GDLax(Z2, 3, reduced=False)
    assert lax.indices == [0, 1, 2]
    flow = gd_reduction(Z2, 3, 2, reduced=False)
    assert ("V2", 1) in flow.rules


def test_shallow_operator_refused():
    L = generic_L(Z2, 1)
    with pytest.raises(TrustUnderflowError):
        flow_equations(L, 4)
