"""Gradients, the two Adler maps, Poisson brackets and their reductions."""

from __future__ import annotations

import enum
from fractions import Fraction

from .diffring import (
    Functional,
    JetPoly,
    NotExactError,
    field_element,
    functional_equal,
    integrate_x,
    is_total_derivative,
    variational_gradient,
)
from .frobenius import AlgebraElement, FrobeniusAlgebra, mul, trace
from .hierarchy import GDLax, coupled_kdv_rhs
from .psido import GradOperator, Series, binom, inverse, power

__all__ = [
    "BracketKind",
    "ConventionMismatchError",
    "NonTangentError",
    "HamiltonianDensity",
    "grad",
    "adler_zero",
    "adler_inf",
    "apply_map",
    "bracket",
    "bracket_density",
    "dirac_complete",
    "dirac_closed_form",
    "hamiltonian_densities",
    "verify_bihamiltonian",
    "walgebra_boussinesq",
    "boussinesq_closed_brackets",
    "component_operator",
    "kdv_bracket_pair",
]


class BracketKind(enum.Enum):
    FirstInfinity = "first"
    SecondZero = "second"
    SecondZeroDirac = "second-dirac"

    @classmethod
    def parse(cls, text: str) -> "BracketKind":
        for k in cls:
            if text in (k.value, k.name):
                return k
        raise ValueError(f"unknown bracket kind {text!r}")


class ConventionMismatchError(RuntimeError):
    """The direct Dirac solve and the closed form disagree."""


class NonTangentError(RuntimeError):
    """An Adler image leaves the constrained Lax manifold."""


class HamiltonianDensity:
    """A density ``tr res L^k`` scaled by ``factor`` with its provenance."""

    def __init__(self, functional: Functional, m: int, r: int, power: int, factor: Fraction, trace_name: str):
        self.functional = functional
        self.m, self.r, self.power, self.factor = m, r, power, factor
        self.trace_name = trace_name

    @property
    def density(self) -> JetPoly:
        return self.functional.density

    def __repr__(self):
        return f"HamiltonianDensity({self.factor} tr res L^{self.power}, m={self.m}, trace={self.trace_name})"


def _density(h) -> JetPoly:
    if isinstance(h, HamiltonianDensity):
        return h.density
    if isinstance(h, Functional):
        return h.density
    return h


def grad(h, lax: GDLax) -> GradOperator:
    """``delta h / delta Lm = sum_i d^(-i-1) o delta h / delta V_i``."""
    comps = variational_gradient(_density(h), lax.algebra, lax.labels)
    return GradOperator(
        lax.algebra, {i: comps[lax.label(i)] for i in lax.indices}, lax.cls
    )


def _as_series(X, Lm: Series) -> Series:
    if isinstance(X, Series):
        return X
    m = Lm.max_order
    low = min(Lm.coeffs)
    return X.to_series(min_order=-m - 1 - max(0, -low))


def adler_zero(X, Lm: Series) -> Series:
    """``(Lm o X)_+ o Lm - Lm o (X o Lm)_+``.

    For commutative symbol laws the product form vanishes identically, so the
    equivalent commutator form ``[(X Lm)_+, Lm] + [Lm, X]_+ Lm`` is used; with
    Poisson brackets in place of commutators this is the dispersionless map.
    """
    Xs = _as_series(X, Lm)
    if getattr(Lm, "commutative", False):
        return (Xs.compose(Lm)).plus().commutator(Lm) + Lm.commutator(Xs).plus().compose(Lm)
    return Lm.compose(Xs).plus().compose(Lm) - Lm.compose(Xs.compose(Lm).plus())


def adler_inf(X, Lm: Series) -> Series:
    """``[Lm_-, X_+]_- - [Lm_+, X_-]_+``."""
    Xs = _as_series(X, Lm)
    Lminus = Lm.minus() if any(o < 0 for o in Lm.coeffs) else None
    out = Lm.plus().commutator(Xs.minus()).plus().scale(-1)
    if Lminus is not None and Lminus.coeffs:
        out = out + Lminus.commutator(Xs.plus()).minus()
    return out


def _dirac_probe(lax: GDLax):
    """``res[Lm, d^-m o Z] = c Z'``; returns ``c``."""
    alg = lax.algebra
    Z = field_element(alg, "__dirac_probe")
    probe = GradOperator(alg, {lax.m - 1: Z}, lax.cls)
    R = lax.op.commutator(probe.to_series(-lax.m - 1)).res()
    var = ("__dirac_probe", 1, 1)
    c = R.coords[0].diff(var).constant_term()
    if c == 0 or R != Z.dx() * c:
        raise ConventionMismatchError("constraint is not of the form c * X_{m-1}'")
    return c


def dirac_complete(X: GradOperator, lax: GDLax, cross_check: bool = True) -> GradOperator:
    """Fill ``X_{m-1}`` from ``res[Lm, X] = 0`` on ``V_{m-1} = 0``.

    The constraint is linear: ``R_0 + c X_{m-1}' = 0`` with ``R_0`` the
    residue computed without ``X_{m-1}`` and ``c`` found by a probe field.
    The closed binomial form is checked against the result for operators.
    """
    if not lax.reduced:
        raise ValueError("Dirac completion needs the reduced operator (V_{m-1} = 0)")
    m = lax.m
    base = GradOperator(
        lax.algebra, {i: x for i, x in X.components.items() if i != m - 1}, lax.cls
    )
    R0 = lax.op.commutator(base.to_series(-m - 1)).res()
    c = _dirac_probe(lax)
    try:
        coords = tuple(integrate_x(p) * (-1 / c) for p in R0.coords)
    except NotExactError as exc:
        raise ConventionMismatchError(f"constraint residue is not exact: {exc}") from exc
    out = base.with_component(m - 1, AlgebraElement(lax.algebra, coords))
    if cross_check and not getattr(lax.op, "commutative", False):
        closed = dirac_closed_form(base, lax)
        if closed != out.component(m - 1):
            raise ConventionMismatchError(
                f"direct solve {out.component(m - 1)} differs from closed form {closed}"
            )
    return out


def dirac_closed_form(X: GradOperator, lax: GDLax) -> AlgebraElement:
    """Closed-form ``X_{m-1}`` as a binomial sum over lower components."""
    m = lax.m
    total = AlgebraElement(lax.algebra, (JetPoly.zero(),) * lax.algebra.dim)
    for i in range(m - 1):
        Xi = X.component(i)
        term = _dn(Xi, m - i - 1) * binom(-i - 1, m - i)
        for j in range(i + 1, m):
            Vj = lax.field(j)
            term = term + _dn(mul(Xi, Vj), j - i - 1) * binom(-i - 1, j - i)
        total = total + term
    return total * Fraction(1, m)


def _dn(a: AlgebraElement, n: int) -> AlgebraElement:
    for _ in range(n):
        a = a.dx()
    return a


def apply_map(kind: BracketKind, X: GradOperator, lax: GDLax) -> Series:
    """Adler image of ``X``, Dirac-completed first when ``kind`` asks for it."""
    if kind is BracketKind.SecondZeroDirac:
        X = dirac_complete(X, lax)
        H = adler_zero(X, lax.op)
    elif kind is BracketKind.SecondZero:
        if lax.reduced:
            raise ValueError("SecondZero needs the unreduced operator; use SecondZeroDirac")
        H = adler_zero(X, lax.op)
    else:
        H = adler_inf(X, lax.op)
    _check_tangent(H, lax)
    return H


def _check_tangent(H: Series, lax: GDLax) -> None:
    allowed = set(lax.indices)
    bad = [o for o in H.coeffs if o not in allowed]
    if bad:
        raise NonTangentError(f"Adler image has coefficients at orders {sorted(bad)}")


def bracket_density(X: GradOperator, Y: GradOperator, kind: BracketKind, lax: GDLax) -> JetPoly:
    """``tr res(H(X) o Y)`` for gradients ``X``, ``Y``."""
    H = apply_map(kind, X, lax)
    Ys = Y.to_series(-lax.m - 1)
    return trace(H.compose(Ys).res())


def bracket(f, g, kind: BracketKind, lax: GDLax) -> Functional:
    """Poisson bracket of two functionals of the Lax coefficients."""
    return Functional(bracket_density(grad(f, lax), grad(g, lax), kind, lax))


# -- bi-Hamiltonian verification ------------------------------------------------


def hamiltonian_densities(lax: GDLax, r: int, L: Series | None = None) -> tuple:
    """``(h_r, g_r)`` with ``h_r = (m/r) tr res L^r``, ``g_r = -m/(r+m) tr res L^(m+r)``."""
    m = lax.m
    if L is None:
        L = lax.root(m + r + 2)
    fh = Fraction(m, r)
    fg = Fraction(-m, r + m)
    h = trace(power(L, r, min_order=-1).res()) * fh
    g = trace(power(L, m + r, min_order=-1).res()) * fg
    name = lax.algebra.name
    return (
        HamiltonianDensity(Functional(h), m, r, r, fh, name),
        HamiltonianDensity(Functional(g), m, r, m + r, fg, name),
    )


def _mismatches(label: str, A: Series, B: Series, orders=None) -> list:
    out = []
    for o, d in A.differences(B):
        if orders is not None and o not in orders:
            continue
        for q, p in enumerate(d.coords):
            if p:
                out.append({"expression": label, "order": o, "basis_index": q, "difference": p.to_ascii()})
    return out


def verify_bihamiltonian(alg: FrobeniusAlgebra, m: int, r: int, depth: int | None = None, reduced: bool = True) -> dict:
    """Check ``dLm/dt_r = H0(grad h_r) = Hinf(grad g_r) = [B_r, Lm]`` exactly.

    Also checks the gradients against ``L^(r-m)`` and ``-L^r`` on the orders
    ``-1 .. -m`` (the prefactors of ``h_r`` and ``g_r`` cancel the ``k/m`` in
    ``grad tr res L^k = (k/m) L^(k-m)``).
    """
    lax = GDLax(alg, m, reduced)
    depth = max(depth or 0, m + r + 2)
    L = lax.root(depth)
    flow = power(L, r, min_order=0).plus().commutator(lax.op)
    h, g = hamiltonian_densities(lax, r, L)
    Xh, Xg = grad(h, lax), grad(g, lax)
    if reduced:
        Xh, Xg = dirac_complete(Xh, lax), dirac_complete(Xg, lax)
    window = list(range(-1, -m - 1, -1))
    mismatches = []

    if r >= m:
        Lrm = power(L, r - m, min_order=-m) if r > m else lax.cls.monomial(alg, 0)
    else:
        Lrm = power(inverse(L, depth), m - r, min_order=-m)
    expected_h = Lrm.truncate(-m)
    expected_g = power(L, r, min_order=-m).truncate(-m).scale(-1)
    mismatches += _mismatches("grad h_r - L^(r-m)", Xh.to_series(-m), expected_h, window)
    mismatches += _mismatches("grad g_r + L^r", Xg.to_series(-m), expected_g, window)

    H0 = adler_zero(Xh, lax.op)
    Hinf = adler_inf(Xg, lax.op)
    mismatches += _mismatches("H0(grad h_r) - [B_r, Lm]", H0, flow)
    mismatches += _mismatches("Hinf(grad g_r) - [B_r, Lm]", Hinf, flow)
    for label, H in (("H0", H0), ("Hinf", Hinf), ("[B_r, Lm]", flow)):
        bad = [o for o in H.coeffs if o not in lax.indices]
        for o in bad:
            mismatches.append({"expression": f"{label} tangency", "order": o, "basis_index": None,
                               "difference": "nonzero coefficient outside the Lax shape"})
    return {
        "check": "bihamiltonian",
        "algebra": alg.name,
        "m": m,
        "r": r,
        "status": "pass" if not mismatches else "fail",
        "mismatches": mismatches,
        "flow_trivial": not flow.coeffs,
    }


# -- Boussinesq W-algebra ---------------------------------------------------------


def _W(lax: GDLax):
    V0, V1 = lax.field(0), lax.field(1)
    return {2: V1, 3: V0 - V1.dx() * Fraction(1, 2)}


def _closed_w_relations(alg: FrobeniusAlgebra, W: dict) -> dict:
    F = field_element(alg, "F")
    G = field_element(alg, "G")
    W2, W3 = W[2], W[3]
    F1, F2, F3 = F.dx(), F.dx().dx(), _dn(F, 3)
    G1, G2, G3, G5 = G.dx(), G.dx().dx(), _dn(G, 3), _dn(G, 5)
    r22 = mul(F3 * 2 + mul(W2, F1) * 2 + mul(W2.dx(), F), G)
    r23 = mul(mul(W3, F1) * 3 + mul(W3.dx(), F), G)
    r33 = (mul(mul(F, G1) * 2 - mul(F1, G) * 2, mul(W2, W2)) + mul(F, G5)) * Fraction(1, 6) + mul(
        mul(F, G3) * 2 - mul(F3, G) * 2 + mul(F2, G1) * 3 - mul(F1, G2) * 3, W2
    ) * Fraction(1, 12)
    return {(2, 2): trace(r22), (2, 3): trace(r23), (3, 3): trace(r33)}


def walgebra_boussinesq(alg: FrobeniusAlgebra) -> dict:
    """``{tr int F W_a, tr int G W_b}`` for the Dirac-reduced second bracket, m = 3."""
    lax = GDLax(alg, 3, reduced=True)
    W = _W(lax)
    F = field_element(alg, "F")
    G = field_element(alg, "G")
    closed = _closed_w_relations(alg, W)
    out = {}
    for a, b in ((2, 2), (2, 3), (3, 3)):
        f = Functional(trace(mul(F, W[a])))
        g = Functional(trace(mul(G, W[b])))
        got = bracket(f, g, BracketKind.SecondZeroDirac, lax)
        diff = got.density - closed[(a, b)]
        out[(a, b)] = {
            "computed": got.density,
            "closed_form": closed[(a, b)],
            "equal": is_total_derivative(diff),
            "difference": diff,
        }
    return out


def boussinesq_closed_brackets(alg: FrobeniusAlgebra) -> dict:
    """Both m = 3 brackets with free gradient components against their closed forms."""
    lax = GDLax(alg, 3, reduced=True)
    X0, X1 = field_element(alg, "X0"), field_element(alg, "X1")
    Y0, Y1 = field_element(alg, "Y0"), field_element(alg, "Y1")
    V0, V1 = lax.field(0), lax.field(1)
    X = GradOperator(alg, {0: X0, 1: X1})
    Y = GradOperator(alg, {0: Y0, 1: Y1})
    Yc = dirac_complete(Y, lax)
    first = bracket_density(X, Yc, BracketKind.FirstInfinity, lax)
    second = bracket_density(X, Yc, BracketKind.SecondZeroDirac, lax)
    d = _dn
    p_first = trace(mul(X1, Y0.dx()) + mul(X0, Y1.dx())) * 3
    p_second = trace(
        mul(X0, d(Y0, 5)) * Fraction(2, 3) - mul(X0, d(Y1, 4)) + mul(X1, d(Y0, 4)) - mul(X1, d(Y1, 3)) * 2
        + mul(mul(X0, Y0.dx()) * Fraction(1, 3) - mul(X0.dx(), Y0) * Fraction(1, 3), mul(V1, V1))
        + mul(
            mul(X0, d(Y0, 3)) * Fraction(2, 3) - mul(d(X0, 3), Y0) * Fraction(2, 3) + mul(d(X1, 2), Y0)
            - mul(X0, d(Y1, 2)) + mul(X1.dx(), Y1) - mul(X1, Y1.dx()),
            V1,
        )
        + mul(
            mul(X0, d(Y0, 2)) - mul(d(X0, 2), Y0) + mul(X1.dx(), Y0) * 2 - mul(X1, Y0.dx())
            + mul(X0.dx(), Y1) - mul(X0, Y1.dx()) * 2,
            V0,
        )
    )
    return {
        "first": {"computed": first, "closed_form": p_first, "equal": is_total_derivative(first - p_first)},
        "second": {"computed": second, "closed_form": p_second, "equal": is_total_derivative(second - p_second)},
    }


# -- component form and the m = 2 bracket pair --------------------------------------


def component_operator(expr: AlgebraElement, label: str, alg: FrobeniusAlgebra) -> list:
    """Matrix ``M[a][q] = {k: coeff}`` with ``expr_a = sum_{q,k} coeff * X[q]^(k)``.

    ``expr`` must be linear in the jets of ``label``.
    """
    n = alg.dim
    M = [[{} for _ in range(n)] for _ in range(n)]
    for a, p in enumerate(expr.coords):
        for mono, c in p.terms.items():
            hits = [(v, e) for v, e in mono if v[0] == label]
            if len(hits) != 1 or hits[0][1] != 1:
                raise ValueError(f"expression is not linear in {label}")
            (v, _), = hits
            rest = JetPoly._raw({tuple(x for x in mono if x[0][0] != label): c})
            slot = M[a][v[1] - 1]
            slot[v[2]] = slot.get(v[2], JetPoly.zero()) + rest
    return [[{k: c for k, c in cell.items() if c} for cell in row] for row in M]


def hamiltonian_matrix(expr: AlgebraElement, label: str, alg: FrobeniusAlgebra) -> list:
    """Component Hamiltonian operator: ``component_operator`` times the inverse Gram."""
    M = component_operator(expr, label, alg)
    ginv = alg.gram_inverse
    n = alg.dim
    out = [[{} for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(n):
            cell: dict = {}
            for p in range(n):
                if not ginv[p][b]:
                    continue
                for k, c in M[a][p].items():
                    cell[k] = cell.get(k, JetPoly.zero()) + c * ginv[p][b]
            out[a][b] = {k: c for k, c in cell.items() if c}
    return out


def apply_matrix(P: list, phis: list) -> list:
    out = []
    for row in P:
        acc = JetPoly.zero()
        for cell, phi in zip(row, phis):
            for k, c in cell.items():
                acc = acc + c * phi.dx_n(k)
        out.append(acc)
    return out


def component_bracket(f: JetPoly, g: JetPoly, P: list, label: str, n: int) -> Functional:
    """``int sum_ab (df/du_a) P_ab (dg/du_b)`` with componentwise Euler derivatives."""
    from .diffring import euler

    df = [euler(f, label, q + 1) for q in range(n)]
    dg = [euler(g, label, q + 1) for q in range(n)]
    Pg = apply_matrix(P, dg)
    return Functional(sum((a * b for a, b in zip(df, Pg)), JetPoly.zero()))


def _kdv_u_operators(alg: FrobeniusAlgebra, label: str = "u", cls=None) -> tuple:
    """Adler maps for ``d^2 + V`` rewritten in ``u = V/2`` and rescaled.

    Returns ``(P1(Y), P2(Y))`` as A-valued expressions in jets of ``Y``; with
    ``V = 2u`` the raw maps are ``-P1/2`` and ``P2/2`` on the u-gradient.
    """
    lax = GDLax(alg, 2, reduced=True, cls=cls) if cls else GDLax(alg, 2, reduced=True)
    Y = field_element(alg, "Y")
    grad_op = GradOperator(alg, {0: Y}, lax.cls)
    first = apply_map(BracketKind.FirstInfinity, grad_op, lax).coeff(0)
    second = apply_map(BracketKind.SecondZeroDirac, grad_op, lax).coeff(0)

    def to_u(p: JetPoly) -> JetPoly:
        return p.substitute(lambda v: JetPoly.var(label, v[1], v[2]) * 2 if v[0] == "V0" else None)

    # u_t = V_t / 2 and grad_V = grad_u / 2
    quarter = Fraction(1, 4)
    P1 = first.map(to_u) * quarter * -2
    P2 = second.map(to_u) * quarter * 2
    return P1, P2


def kdv_bracket_pair(alg: FrobeniusAlgebra, label: str = "u", cls=None) -> dict:
    """The m = 2 bracket pair, its component matrices and the regenerated flow.

    ``cls`` selects the composition law; with the symbol law every
    dispersive term (``d^3`` in ``J_0``, ``u''`` in ``H_2``) is dropped.
    """
    if alg.dim != 2:
        raise ValueError("component matrices are reported for two-dimensional algebras")
    n = alg.dim
    P1, P2 = _kdv_u_operators(alg, label, cls)
    dispersive = cls is None or not getattr(cls, "commutative", False)
    eps = 1 if dispersive else 0
    u = field_element(alg, label)
    Y = field_element(alg, "Y")
    K = _dn(Y, 3) * Fraction(eps, 4) + mul(u, Y.dx()) + mul(u, Y).dx()
    H1 = trace(mul(u, u)) * Fraction(1, 2)
    H2 = trace(mul(mul(u, u), u) * Fraction(1, 2) + mul(u, u.dx().dx()) * Fraction(eps, 8))

    M1 = hamiltonian_matrix(P1, "Y", alg)
    M2 = hamiltonian_matrix(P2, "Y", alg)
    v, w = JetPoly.var(label, 1), JetPoly.var(label, 2)
    J0 = {1: v * 2, 0: v.dx()}
    if dispersive:
        J0[3] = JetPoly.const(Fraction(1, 4))
    J1 = {1: w * 2, 0: w.dx()}
    d = {1: JetPoly.const(1)}
    zero: dict = {}

    def sub(a, b):
        out = dict(a)
        for k, c in b.items():
            out[k] = out.get(k, JetPoly.zero()) - c
        return {k: c for k, c in out.items() if c}

    if list(alg.trace_weights) == [0, 1]:
        want1 = [[zero, d], [d, zero]]
        want2 = [[zero, J0], [J0, J1]]
    elif list(alg.trace_weights) == [1, 1]:
        want1 = [[zero, d], [d, {1: JetPoly.const(-1)}]]
        want2 = [[zero, J0], [J0, sub(J1, J0)]]
    else:
        want1 = want2 = None

    rhs = coupled_kdv_rhs(alg, label, dispersive)
    phi = JetPoly.var("phi")
    regenerated = {}
    for name, P, H in (("first", M1, H2), ("second", M2, H1)):
        rows = []
        for a in range(n):
            f = phi * JetPoly.var(label, a + 1)
            got = component_bracket(f, H, P, label, n)
            rows.append(functional_equal(got, Functional(phi * rhs.coords[a])))
        regenerated[name] = all(rows)

    names = {(label, 1): "v", (label, 2): "w"}
    H_closed = {}
    if not dispersive:
        pass
    elif list(alg.trace_weights) == [0, 1]:
        H_closed = {"H1": v * w, "H2": Fraction(3, 2) * v * v * w + Fraction(1, 4) * v * w.dx_n(2)}
    elif list(alg.trace_weights) == [1, 1]:
        H_closed = {
            "H1": Fraction(1, 2) * v * v + v * w,
            "H2": Fraction(3, 2) * v * v * w + Fraction(1, 4) * v * w.dx_n(2)
            + Fraction(1, 2) * v ** 3 + Fraction(1, 8) * v * v.dx_n(2),
        }
    hams = {"H1": H1, "H2": H2}
    return {
        "operators_match": P1 == Y.dx() and P2 == K,
        "matrices": (M1, M2),
        "expected_matrices": (want1, want2),
        "matrices_match": want1 is not None and M1 == want1 and M2 == want2,
        "hamiltonians": hams,
        "hamiltonians_match": all(
            is_total_derivative(hams[k] - H_closed[k]) for k in H_closed
        ) if H_closed else None,
        "regenerates_flow": regenerated,
        "names": names,
    }
