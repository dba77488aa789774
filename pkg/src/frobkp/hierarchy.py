"""Lax operators, hierarchy flows, Gelfand-Dickey reductions and the KP equation."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .diffring import JetPoly, evolve, field_element
from .frobenius import AlgebraElement, FrobeniusAlgebra, mul
from .psido import PsiDO, Series, TrustUnderflowError, mth_root, power

__all__ = [
    "FlowSystem",
    "GDLax",
    "generic_L",
    "flow_equations",
    "evolve_series",
    "zero_curvature_check",
    "kp_flow_identities",
    "KPEquation",
    "kp_equation",
    "closed_z2_kp",
    "gd_reduction",
    "gd_flow_in_u",
    "coupled_kdv_rhs",
]


@dataclass
class FlowSystem:
    """Evolution rules ``d(label,q)/dt_r = rules[(label, q)]``."""

    time_label: object
    rules: dict
    algebra: FrobeniusAlgebra | None = None
    note: str = ""

    def component(self, label: str) -> AlgebraElement:
        n = self.algebra.dim
        return AlgebraElement(
            self.algebra,
            tuple(self.rules.get((label, q + 1), JetPoly.zero()) for q in range(n)),
        )

    def labels(self) -> list:
        return sorted({lab for lab, _ in self.rules}, key=_label_key)

    def is_zero(self) -> bool:
        return not any(self.rules.values())

    def render(self, names=None, latex: bool = False) -> str:
        lines = []
        for key in sorted(self.rules, key=lambda k: (_label_key(k[0]), k[1])):
            label, q = key
            rhs = self.rules[key]
            body = rhs.to_latex(names) if latex else rhs.to_ascii(names)
            lhs = names.get(key, f"{label}[{q}]") if names else f"{label}[{q}]"
            if latex:
                lines.append(f"\\partial_{{t_{{{self.time_label}}}}} {lhs} = {body}")
            else:
                lines.append(f"d{lhs}/dt{self.time_label} = {body}")
        if self.note:
            lines.append(f"# {self.note}")
        return "\n".join(lines)


def _label_key(label: str):
    head = label.rstrip("0123456789")
    tail = label[len(head):]
    return (head, int(tail) if tail else -1)


def generic_L(alg: FrobeniusAlgebra, depth: int, with_U0: bool = False, cls=PsiDO, prefix: str = "U") -> Series:
    """``unit*d + U_0 + U_1 d^-1 + ... + U_depth d^-depth`` with fresh jet fields.

    Orders below ``-depth`` are left uncertified.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    coeffs = {1: alg.unit()}
    if with_U0:
        coeffs[0] = field_element(alg, f"{prefix}0")
    for i in range(1, depth + 1):
        coeffs[-i] = field_element(alg, f"{prefix}{i}")
    return cls(alg, coeffs, -depth)


def _field_label(c: AlgebraElement):
    """Label of a coefficient made of bare jets ``label[q]``, else None."""
    label = None
    for q, p in enumerate(c.coords):
        if len(p.terms) != 1:
            return None
        ((mono, coef),) = p.terms.items()
        if coef != 1 or len(mono) != 1:
            return None
        (v, e), = mono
        if e != 1 or v[1] != q + 1 or v[2] != 0:
            return None
        if label is not None and v[0] != label:
            return None
        label = v[0]
    return label


def _fields_by_order(L: Series) -> dict:
    out = {}
    for o, c in L.coeffs.items():
        lab = _field_label(c)
        if lab is not None:
            out[o] = lab
    return out


def flow_equations(L: Series, r: int) -> FlowSystem:
    """Coefficientwise evolution from ``dL/dt_r = [B_r, L]``, ``B_r = (L^r)_+``.

    Only fields whose order lies in the certified window of the commutator
    receive rules.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    B = power(L, r, min_order=0).plus()
    C = B.commutator(L)
    rules = {}
    alg = L.algebra
    for o, lab in _fields_by_order(L).items():
        if C.trusted_min is not None and o < C.trusted_min:
            continue
        coeff = C.coeff(o)
        for q in range(alg.dim):
            rules[(lab, q + 1)] = coeff.coords[q]
    top = C.max_order
    note = ""
    if top is not None and top > max((o for o in L.coeffs if o < 1), default=0):
        note = f"commutator has order {top}: flow leaves the Lax shape"
    return FlowSystem(r, rules, alg, note)


def evolve_series(P: Series, flow: FlowSystem) -> Series:
    """Apply the time derivative of ``flow`` to every coefficient of ``P``."""
    known = set(flow.rules)
    for c in P.coeffs.values():
        for p in c.coords:
            for lab_q in p.fields():
                if lab_q not in known:
                    raise TrustUnderflowError(
                        f"no certified t_{flow.time_label} rule for {lab_q[0]}[{lab_q[1]}]"
                    )
    return P.map_coeffs(lambda c: c.map(lambda p: evolve(p, flow.rules)))


def zero_curvature_check(L: Series, r: int, l: int) -> bool:
    """``dB_l/dt_r - dB_r/dt_l + [B_l, B_r] = 0`` after substituting both flows."""
    return not zero_curvature_residual(L, r, l)


def zero_curvature_residual(L: Series, r: int, l: int) -> list:
    Br = power(L, r, min_order=0).plus()
    Bl = power(L, l, min_order=0).plus()
    Fr, Fl = flow_equations(L, r), flow_equations(L, l)
    Z = evolve_series(Bl, Fr) - evolve_series(Br, Fl) + Bl.commutator(Br)
    return [(o, c) for o, c in Z.coeffs.items() if c]


def kp_flow_identities(alg: FrobeniusAlgebra, depth: int = 5) -> dict:
    """Residuals of ``U1_t2 = U1'' + 2U2'`` and
    ``2U1_t3 = 2U1''' + 3U2'' + 3U2_t2 + 6 U1 U1'`` (zero when they hold)."""
    L = generic_L(alg, depth)
    F2, F3 = flow_equations(L, 2), flow_equations(L, 3)
    U1 = field_element(alg, "U1")
    U2 = field_element(alg, "U2")
    t2_u1 = F2.component("U1")
    t2_u2 = F2.component("U2")
    t3_u1 = F3.component("U1")
    first = t2_u1 - (U1.dx().dx() + U2.dx() * 2)
    second = t3_u1 * 2 - (
        U1.dx().dx().dx() * 2 + U2.dx().dx() * 3 + t2_u2 * 3 + mul(U1, U1.dx()) * 6
    )
    return {"U1_t2": first, "U1_t3": second, "flows": (F2, F3)}


@dataclass
class KPEquation:
    """``(4U_t - 12 U o U_x - U_xxx)_x - 3U_yy`` (or its dispersionless twin).

    ``expression`` is written in jets of ``U``, ``U_t`` and ``U_yy``;
    ``residual`` is the expression after substituting the t_2 = y and t_3 = t
    flows and must vanish.
    """

    algebra: FrobeniusAlgebra
    expression: AlgebraElement
    residual: AlgebraElement
    dispersive: bool = True

    @property
    def holds(self) -> bool:
        return not self.residual

    def component_names(self) -> dict:
        n = self.algebra.dim
        letters = ["v", "w"] if n == 2 else ["u"] if n == 1 else [f"u{q}" for q in range(1, n + 1)]
        names = {}
        for q in range(1, n + 1):
            base = letters[q - 1]
            names[("U", q)] = base
            names[("U_t", q)] = f"{base}_t"
            names[("U_yy", q)] = f"{base}_yy"
        return names

    def render(self, latex: bool = False) -> str:
        names = self.component_names()
        lines = []
        for q, comp in enumerate(self.expression.coords, start=1):
            body = comp.to_latex(names) if latex else comp.to_ascii(names)
            lines.append(f"component {q}: {body} = 0")
        return "\n".join(lines)


def _kp_expression(alg, dispersive: bool) -> AlgebraElement:
    U = field_element(alg, "U")
    Ut = field_element(alg, "U_t")
    Uyy = field_element(alg, "U_yy")
    inner = Ut * 4 - mul(U, U.dx()) * 12
    if dispersive:
        inner = inner - U.dx().dx().dx()
    return inner.dx() - Uyy * 3


def kp_equation(alg: FrobeniusAlgebra, cls=PsiDO, depth: int = 5) -> KPEquation:
    """Eliminate ``U_2`` from the t_2, t_3 flows with ``U = U_1``."""
    dispersive = cls is PsiDO
    L = generic_L(alg, depth, cls=cls)
    F2, F3 = flow_equations(L, 2), flow_equations(L, 3)
    expr = _kp_expression(alg, dispersive)
    uyy = {}
    for q in range(1, alg.dim + 1):
        uyy[q] = evolve(F2.rules[("U1", q)], F2.rules)

    def rule(v):
        label, q, j = v
        if label == "U":
            return JetPoly.var("U1", q, j)
        if label == "U_t":
            return F3.rules[("U1", q)].dx_n(j)
        if label == "U_yy":
            return uyy[q].dx_n(j)
        return None

    residual = expr.map(lambda p: p.substitute(rule))
    return KPEquation(alg, expr, residual, dispersive)


def closed_z2_kp(eps, mu, dispersive: bool = True) -> tuple:
    """Component form for ``U = v e1 + w e2`` on ``e2 o e2 = eps e1 + mu e2``."""
    eps, mu = Fraction(eps), Fraction(mu)
    v, w = JetPoly.var("U", 1), JetPoly.var("U", 2)
    vt, wt = JetPoly.var("U_t", 1), JetPoly.var("U_t", 2)
    vyy, wyy = JetPoly.var("U_yy", 1), JetPoly.var("U_yy", 2)
    a = 4 * vt - 12 * v * v.dx() - 12 * eps * w * w.dx()
    b = 4 * wt - 12 * (v * w).dx() - 12 * mu * w * w.dx()
    if dispersive:
        a = a - v.dx_n(3)
        b = b - w.dx_n(3)
    return (a.dx() - 3 * vyy, b.dx() - 3 * wyy)


@dataclass
class GDLax:
    """``unit*d^m + V_{m-1} d^(m-1) + ... + V_0`` in dynamical coordinates.

    With ``reduced`` the top field ``V_{m-1}`` is set to zero.
    """

    algebra: FrobeniusAlgebra
    m: int
    reduced: bool = True
    cls: type = PsiDO
    prefix: str = "V"
    op: Series = field(init=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        coeffs = {self.m: self.algebra.unit()}
        for i in self.indices:
            coeffs[i] = field_element(self.algebra, self.label(i))
        self.op = self.cls(self.algebra, coeffs, None)

    @property
    def indices(self) -> list:
        top = self.m - 1 if self.reduced else self.m
        return list(range(top))

    def label(self, i: int) -> str:
        return f"{self.prefix}{i}"

    @property
    def labels(self) -> list:
        return [self.label(i) for i in self.indices]

    def root(self, depth: int) -> Series:
        return mth_root(self.op, self.m, depth)

    def field(self, i: int) -> AlgebraElement:
        if i not in self.indices:
            return AlgebraElement(self.algebra, (JetPoly.zero(),) * self.algebra.dim)
        return field_element(self.algebra, self.label(i))


def gd_reduction(alg: FrobeniusAlgebra, m: int, r: int, reduced: bool = True, cls=PsiDO) -> FlowSystem:
    """Flow ``dLm/dt_r = [(Lm^(r/m))_+, Lm]`` in the V-coordinates."""
    if m < 2:
        raise ValueError("m must be >= 2")
    lax = GDLax(alg, m, reduced, cls)
    L = lax.root(r + 2)
    B = power(L, r, min_order=0).plus()
    C = B.commutator(lax.op)
    rules = {}
    for i in lax.indices:
        c = C.coeff(i)
        for q in range(alg.dim):
            rules[(lax.label(i), q + 1)] = c.coords[q]
    extra = [o for o in C.coeffs if o not in lax.indices]
    note = ""
    if extra:
        note = f"non-tangent orders {sorted(extra)} in commutator"
    elif not any(rules.values()):
        note = f"t_{r} flow is trivial (r divisible by m)" if r % m == 0 else "zero flow"
    return FlowSystem(r, rules, alg, note)


def gd_flow_in_u(flow: FlowSystem, m: int = 2, label: str = "u") -> FlowSystem:
    """Rewrite the reduced m=2 flow in ``u = U_1 = V_0 / 2``."""
    if m != 2:
        raise ValueError("coordinate change implemented for m = 2")
    half = Fraction(1, 2)

    def rule(v):
        lab, q, j = v
        if lab == "V0":
            return JetPoly.var(label, q, j) * 2
        return None

    rules = {}
    for (lab, q), rhs in flow.rules.items():
        if lab == "V0":
            rules[(label, q)] = rhs.substitute(rule) * half
    return FlowSystem(flow.time_label, rules, flow.algebra, flow.note)


def coupled_kdv_rhs(alg: FrobeniusAlgebra, label: str = "u", dispersive: bool = True) -> AlgebraElement:
    """``u_t`` from ``4u_t = 12 u o u_x + u_xxx`` (no ``u_xxx`` if not dispersive)."""
    u = field_element(alg, label)
    rhs = mul(u, u.dx()) * 3
    if dispersive:
        rhs = rhs + u.dx().dx().dx() * Fraction(1, 4)
    return rhs
