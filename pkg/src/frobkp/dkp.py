"""Dispersionless twin: Laurent symbols in ``p`` with the canonical Poisson bracket.

The hierarchy and Hamiltonian engines are shared with the dispersive case;
only the composition law differs (commutative product, commutator replaced by
the Poisson bracket of symbols).
"""

from __future__ import annotations

from .diffring import Functional, JetPoly, derivative_count_part, field_element, is_total_derivative
from .frobenius import FrobeniusAlgebra, build_zn, mul
from .hamiltonian import BracketKind, bracket, bracket_density, dirac_complete
from .hierarchy import FlowSystem, GDLax, flow_equations, generic_L, gd_reduction, kp_equation
from .psido import GradOperator, Series, _product_floor

__all__ = [
    "LaurentSymbol",
    "poisson_symbol",
    "dkp_lax",
    "dkp_flows",
    "dkp_equation",
    "dkp_gd_flow",
    "dkp_brackets",
    "dkp_dirac",
    "dispersionless_limit_check",
]


class LaurentSymbol(Series):
    """``sum_i A_i p^i`` with the commutative product."""

    __slots__ = ()
    symbol = "p"
    commutative = True

    def compose(self, other: "LaurentSymbol", min_order: int | None = None) -> "LaurentSymbol":
        self._check(other)
        if (not self.coeffs and self.trusted_min is None) or (not other.coeffs and other.trusted_min is None):
            return LaurentSymbol(self.algebra, {}, None)
        floor = _product_floor(self, other, min_order)
        acc: dict = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                o = i + j
                if floor is not None and o < floor:
                    continue
                t = mul(a, b)
                acc[o] = acc[o] + t if o in acc else t
        return LaurentSymbol(self.algebra, acc, floor)

    def commutator(self, other: "LaurentSymbol", min_order: int | None = None) -> "LaurentSymbol":
        return poisson_symbol(self, other, min_order)

    def dp(self) -> "LaurentSymbol":
        tmin = None if self.trusted_min is None else self.trusted_min - 1
        return LaurentSymbol(
            self.algebra, {i - 1: c * i for i, c in self.coeffs.items() if i}, tmin
        )

    def dx(self) -> "LaurentSymbol":
        return self.map_coeffs(lambda c: c.dx())


def poisson_symbol(A: LaurentSymbol, B: LaurentSymbol, min_order: int | None = None) -> LaurentSymbol:
    """``{A, B} = A_p B_x - A_x B_p``."""
    return A.dp().compose(B.dx(), min_order) - A.dx().compose(B.dp(), min_order)


def dkp_lax(alg: FrobeniusAlgebra, m: int, reduced: bool = True) -> GDLax:
    return GDLax(alg, m, reduced, LaurentSymbol)


def dkp_flows(alg: FrobeniusAlgebra, r: int, depth: int | None = None) -> FlowSystem:
    """``dL/dt_r = {(L^r)_+, L}`` for ``L = p + U_1 p^-1 + ...``."""
    L = generic_L(alg, depth or r + 3, cls=LaurentSymbol)
    return flow_equations(L, r)


def dkp_equation(alg: FrobeniusAlgebra):
    """``(4U_t - 12 U o U_x)_x - 3U_yy = 0`` from the t_2, t_3 flows."""
    return kp_equation(alg, cls=LaurentSymbol)


def dkp_gd_flow(alg: FrobeniusAlgebra, m: int, r: int, reduced: bool = True) -> FlowSystem:
    return gd_reduction(alg, m, r, reduced, cls=LaurentSymbol)


def dkp_brackets(f, g, kind: BracketKind, lax: GDLax) -> Functional:
    if lax.cls is not LaurentSymbol:
        raise ValueError("dkp_brackets needs a symbol Lax operator (see dkp_lax)")
    return bracket(f, g, kind, lax)


def dkp_dirac(X: GradOperator, lax: GDLax) -> GradOperator:
    """Solve ``res{Lm, X} = 0`` for ``X_{m-1}``."""
    return dirac_complete(X, lax)


def _free_gradient(alg: FrobeniusAlgebra, lax: GDLax, prefix: str, cls) -> GradOperator:
    return GradOperator(alg, {i: field_element(alg, f"{prefix}{i}") for i in lax.indices}, cls)


def dispersionless_limit_check(m: int, r: int | None = None, alg: FrobeniusAlgebra | None = None) -> dict:
    """Compare dispersive and symbol brackets under the derivative grading.

    Each ``d/dx`` carries weight ``eps``; the dispersive bracket densities
    (with free gradient components) must have no weight-0 part and their
    weight-1 part must equal the symbol density modulo total derivatives.
    With ``r`` given, the weight-1 part of the GD flow must equal the symbol
    flow exactly.
    """
    alg = alg or build_zn(2, 1)
    results = []
    configs = [(True, BracketKind.FirstInfinity), (True, BracketKind.SecondZeroDirac),
               (False, BracketKind.FirstInfinity), (False, BracketKind.SecondZero)]
    from .psido import PsiDO

    for reduced, kind in configs:
        disp = GDLax(alg, m, reduced, PsiDO)
        sym = GDLax(alg, m, reduced, LaurentSymbol)
        X, Y = _free_gradient(alg, disp, "X", PsiDO), _free_gradient(alg, disp, "Y", PsiDO)
        Xs, Ys = _free_gradient(alg, sym, "X", LaurentSymbol), _free_gradient(alg, sym, "Y", LaurentSymbol)
        if reduced and kind is BracketKind.FirstInfinity:
            # the first map ignores X_{m-1}; pair against completed Y for both
            Y, Ys = dirac_complete(Y, disp), dirac_complete(Ys, sym)
        D = bracket_density(X, Y, kind, disp)
        d = bracket_density(Xs, Ys, kind, sym)
        lead = derivative_count_part(D, 1)
        results.append({
            "bracket": kind.value,
            "reduced": reduced,
            "weight0_vanishes": is_total_derivative(derivative_count_part(D, 0)),
            "leading_matches": is_total_derivative(lead - d),
            "difference": (lead - d).to_ascii(),
        })
    flow_ok = None
    if r is not None:
        F = gd_reduction(alg, m, r)
        Fd = gd_reduction(alg, m, r, cls=LaurentSymbol)
        flow_ok = all(
            derivative_count_part(F.rules[k], 1) == Fd.rules.get(k, JetPoly.zero()) for k in F.rules
        )
    ok = all(x["weight0_vanishes"] and x["leading_matches"] for x in results) and flow_ok is not False
    return {
        "check": "dispersionless-limit",
        "algebra": alg.name,
        "m": m,
        "r": r,
        "status": "pass" if ok else "fail",
        "brackets": results,
        "flow_matches": flow_ok,
        "mismatches": [x for x in results if not (x["weight0_vanishes"] and x["leading_matches"])],
    }
