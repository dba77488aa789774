"""Differential polynomials in jet variables with exact rational coefficients.

A jet variable is a plain tuple ``(label, q, j)``: field label, 1-based basis
index and x-derivative order.  ``JetPoly`` maps monomials (sorted tuples of
``(var, exponent)``) to ``Fraction`` coefficients.  Integrals of densities
are compared modulo total derivatives through the kernel of the Euler
operator.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping

from .frobenius import AlgebraElement, FrobeniusAlgebra

__all__ = [
    "JetVar",
    "JetPoly",
    "Functional",
    "NotExactError",
    "jet",
    "field_element",
    "total_x",
    "euler",
    "functional_equal",
    "variational_gradient",
    "integrate_x",
    "evolve",
    "derivative_count_part",
]

JetVar = tuple  # (label: str, q: int, j: int)

_ZERO = Fraction(0)
_ONE = Fraction(1)


class NotExactError(ValueError):
    """A density is not a total x-derivative."""


@lru_cache(maxsize=None)
def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        va, ea = a[i]
        vb, eb = b[j]
        if va == vb:
            out.append((va, ea + eb))
            i += 1
            j += 1
        elif va < vb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


@lru_cache(maxsize=None)
def _mono_dx(m: tuple) -> tuple:
    """Total derivative of a monomial as ``((mono, int_coeff), ...)``."""
    acc: dict = {}
    for idx, (var, e) in enumerate(m):
        label, q, j = var
        rest = m[:idx] + m[idx + 1:]
        if e > 1:
            rest = _mono_mul(rest, ((var, e - 1),))
        new = _mono_mul(rest, (((label, q, j + 1), 1),))
        acc[new] = acc.get(new, 0) + e
    return tuple(acc.items())


@lru_cache(maxsize=None)
def _mono_diff(m: tuple, var: tuple):
    """Partial derivative of a monomial w.r.t. ``var``: ``(mono, int)`` or None."""
    for idx, (v, e) in enumerate(m):
        if v == var:
            rest = m[:idx] + m[idx + 1:]
            if e > 1:
                rest = _mono_mul(rest, ((v, e - 1),))
            return rest, e
    return None


class JetPoly:
    """Immutable sparse differential polynomial."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping | None = None):
        if terms is None:
            self.terms = {}
        else:
            self.terms = {m: c for m, c in terms.items() if c != 0}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "JetPoly":
        obj = cls.__new__(cls)
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c) -> "JetPoly":
        c = Fraction(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def var(cls, label: str, q: int = 1, j: int = 0) -> "JetPoly":
        return cls._raw({(((label, q, j), 1),): _ONE})

    @classmethod
    def zero(cls) -> "JetPoly":
        return cls._raw({})

    # -- arithmetic -------------------------------------------------------
    def __bool__(self):
        return bool(self.terms)

    def _coerce(self, other):
        if isinstance(other, JetPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return JetPoly.const(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.terms:
            return self
        if not self.terms:
            return o
        t = dict(self.terms)
        for m, c in o.terms.items():
            v = t.get(m, _ZERO) + c
            if v:
                t[m] = v
            else:
                t.pop(m, None)
        return JetPoly._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return JetPoly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.terms:
            return self
        t = dict(self.terms)
        for m, c in o.terms.items():
            v = t.get(m, _ZERO) - c
            if v:
                t[m] = v
            else:
                t.pop(m, None)
        return JetPoly._raw(t)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return JetPoly._raw({})
            if other == 1:
                return self
            return JetPoly._raw({m: c * other for m, c in self.terms.items()})
        if not isinstance(other, JetPoly):
            return NotImplemented
        if not self.terms or not other.terms:
            return JetPoly._raw({})
        t: dict = defaultdict(Fraction)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                t[_mono_mul(m1, m2)] += c1 * c2
        return JetPoly._raw({m: c for m, c in t.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (_ONE / other)
        return NotImplemented

    def __pow__(self, k: int):
        out = JetPoly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # -- calculus ---------------------------------------------------------
    def dx(self) -> "JetPoly":
        """Total x-derivative."""
        t: dict = defaultdict(Fraction)
        for m, c in self.terms.items():
            for nm, k in _mono_dx(m):
                t[nm] += c * k
        return JetPoly._raw({m: c for m, c in t.items() if c})

    def dx_n(self, n: int) -> "JetPoly":
        p = self
        for _ in range(n):
            p = p.dx()
        return p

    def diff(self, var: JetVar) -> "JetPoly":
        """Partial derivative with respect to a single jet variable."""
        t: dict = defaultdict(Fraction)
        for m, c in self.terms.items():
            r = _mono_diff(m, var)
            if r is not None:
                t[r[0]] += c * r[1]
        return JetPoly._raw({m: c for m, c in t.items() if c})

    def variables(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def fields(self) -> set:
        return {(v[0], v[1]) for v in self.variables()}

    def labels(self) -> set:
        return {v[0] for v in self.variables()}

    def max_order(self, label: str | None = None) -> int:
        orders = [v[2] for v in self.variables() if label is None or v[0] == label]
        return max(orders, default=-1)

    def constant_term(self) -> Fraction:
        return self.terms.get((), _ZERO)

    def without_constant(self) -> "JetPoly":
        return JetPoly._raw({m: c for m, c in self.terms.items() if m})

    def substitute(self, rule: Callable[[JetVar], "JetPoly | None"]) -> "JetPoly":
        """Replace each jet variable ``v`` by ``rule(v)`` (``None`` keeps it)."""
        cache: dict = {}
        out = JetPoly.zero()
        for m, c in self.terms.items():
            term = JetPoly.const(c)
            keep = []
            for v, e in m:
                if v not in cache:
                    cache[v] = rule(v)
                r = cache[v]
                if r is None:
                    keep.append((v, e))
                else:
                    for _ in range(e):
                        term = term * r
            if keep:
                term = term * JetPoly._raw({tuple(keep): _ONE})
            out = out + term
        return out

    def rename(self, mapping: Mapping[str, str]) -> "JetPoly":
        def fix(m):
            return tuple(sorted(((mapping.get(v[0], v[0]), v[1], v[2]), e) for v, e in m))

        t: dict = defaultdict(Fraction)
        for m, c in self.terms.items():
            t[fix(m)] += c
        return JetPoly._raw({m: c for m, c in t.items() if c})

    # -- rendering ----------------------------------------------------------
    def sorted_terms(self):
        def key(item):
            m, _ = item
            deg = sum(e for _, e in m)
            return (deg, [(v[0], v[1], v[2], e) for v, e in m])

        return sorted(self.terms.items(), key=key)

    def to_ascii(self, names: Mapping | None = None) -> str:
        return _render(self, names, latex=False)

    def to_latex(self, names: Mapping | None = None) -> str:
        return _render(self, names, latex=True)

    def __str__(self):
        return self.to_ascii()

    def __repr__(self):
        return f"JetPoly({self.to_ascii()})"


def _var_ascii(v, names):
    label, q, j = v
    if names and (label, q) in names:
        base = names[(label, q)]
    else:
        base = f"{label}[{q}]"
    if j == 0:
        return base
    if j <= 3:
        return base + "'" * j
    return f"{base}^({j})"


def _var_latex(v, names):
    label, q, j = v
    if names and (label, q) in names:
        base = names[(label, q)]
        sub = ""
    else:
        base = label
        sub = f"_{{[{q}]}}"
    sup = f"^{{({j})}}" if j else ""
    return f"{base}{sub}{sup}"


def _frac_text(c: Fraction, latex: bool) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    if latex:
        return f"\\frac{{{c.numerator}}}{{{c.denominator}}}"
    return f"{c.numerator}/{c.denominator}"


def _render(p: JetPoly, names, latex: bool) -> str:
    if not p.terms:
        return "0"
    pieces = []
    for m, c in p.sorted_terms():
        sign = "-" if c < 0 else "+"
        a = abs(c)
        factors = []
        for v, e in m:
            s = _var_latex(v, names) if latex else _var_ascii(v, names)
            if e > 1:
                s = f"{{{s}}}^{{{e}}}" if latex else f"{s}^{e}"
            factors.append(s)
        body = (" " if latex else "*").join(factors)
        if not factors:
            text = _frac_text(a, latex)
        elif a == 1:
            text = body
        else:
            text = _frac_text(a, latex) + (" " if latex else "*") + body
        pieces.append((sign, text))
    first_sign, first = pieces[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, text in pieces[1:]:
        out += f" {sign} {text}"
    return out


def jet(label: str, q: int = 1, j: int = 0) -> JetPoly:
    return JetPoly.var(label, q, j)


def field_element(alg: FrobeniusAlgebra, label: str, j: int = 0) -> AlgebraElement:
    """A-valued field ``sum_q label[q]^(j) e_q`` with fresh jet coordinates."""
    return AlgebraElement(alg, tuple(JetPoly.var(label, q + 1, j) for q in range(alg.dim)))


def total_x(p: JetPoly) -> JetPoly:
    return p.dx()


def euler(p: JetPoly, label: str, q: int = 1) -> JetPoly:
    """Variational derivative ``sum_j (-D)^j dp/dv^(j)`` for field ``(label, q)``."""
    orders = sorted({v[2] for v in p.variables() if v[0] == label and v[1] == q})
    out = JetPoly.zero()
    for j in orders:
        term = p.diff((label, q, j))
        for _ in range(j):
            term = -term.dx()
        out = out + term
    return out


class Functional:
    """The integral of a scalar density, up to total derivatives and constants."""

    __slots__ = ("density",)

    def __init__(self, density: JetPoly):
        if not isinstance(density, JetPoly):
            density = JetPoly.const(density)
        self.density = density

    def __add__(self, other: "Functional") -> "Functional":
        return Functional(self.density + other.density)

    def __sub__(self, other: "Functional") -> "Functional":
        return Functional(self.density - other.density)

    def __neg__(self):
        return Functional(-self.density)

    def __mul__(self, c):
        return Functional(self.density * c)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return is_total_derivative(self.density)

    def __eq__(self, other):
        if not isinstance(other, Functional):
            return NotImplemented
        return functional_equal(self, other)

    __hash__ = None

    def __repr__(self):
        return f"Functional(int {self.density.to_ascii()} dx)"


def is_total_derivative(p: JetPoly) -> bool:
    p = p.without_constant()
    for label, q in sorted(p.fields()):
        if euler(p, label, q):
            return False
    return True


def functional_equal(f: Functional, g: Functional) -> bool:
    return is_total_derivative(f.density - g.density)


def variational_gradient(
    h: Functional | JetPoly, alg: FrobeniusAlgebra, labels: Iterable[str]
) -> dict:
    """A-valued gradients ``G`` with ``tr(G o dV) = sum_q (dh/dv_q) dv_q``.

    Returns ``{label: AlgebraElement}``; the componentwise Euler derivatives
    are mapped through the inverse Gram matrix of the trace form.
    """
    density = h.density if isinstance(h, Functional) else h
    ginv = alg.gram_inverse
    out = {}
    for label in labels:
        comps = [euler(density, label, q + 1) for q in range(alg.dim)]
        coords = []
        for p in range(alg.dim):
            acc = JetPoly.zero()
            for q in range(alg.dim):
                if ginv[p][q] and comps[q]:
                    acc = acc + comps[q] * ginv[p][q]
            coords.append(acc)
        out[label] = AlgebraElement(alg, tuple(coords))
    return out


def _var_key(v):
    # jets ordered by derivative order first so the top jet is found first
    return (v[2], v[0], v[1])


def integrate_x(p: JetPoly) -> JetPoly:
    """Return ``P`` without constant term such that ``dP/dx = p``.

    Raises ``NotExactError`` if ``p`` is not a total derivative.
    """
    if p.constant_term() or not is_total_derivative(p):
        raise NotExactError(f"not a total derivative: {p.to_ascii()}")
    rem = p
    acc = JetPoly.zero()
    guard = 0
    while rem:
        guard += 1
        if guard > 100000:
            raise NotExactError("integration did not terminate")
        top = max(rem.variables(), key=_var_key)
        if top[2] == 0:
            raise NotExactError(f"not a total derivative: {rem.to_ascii()}")
        coeff = rem.diff(top)
        if any(v[2] >= top[2] for v in coeff.variables()):
            raise NotExactError(f"not a total derivative: {rem.to_ascii()}")
        lower = (top[0], top[1], top[2] - 1)
        piece = _antiderivative(coeff, lower)
        acc = acc + piece
        rem = rem - piece.dx()
    return acc


def _antiderivative(p: JetPoly, var: tuple) -> JetPoly:
    """Polynomial antiderivative of ``p`` in the single jet ``var``."""
    out = {}
    for mono, c in p.terms.items():
        exps = dict(mono)
        e = exps.get(var, 0)
        exps[var] = e + 1
        out[tuple(sorted(exps.items()))] = c / (e + 1)
    return JetPoly._raw(out)


def evolve(p: JetPoly, rules: Mapping) -> JetPoly:
    """Apply the evolutionary derivation with ``d(label,q)/dt = rules[(label,q)]``.

    Jets of fields without a rule are treated as time independent.
    """
    cache: dict = {}
    out = JetPoly.zero()
    for var in p.variables():
        label, q, j = var
        rule = rules.get((label, q))
        if rule is None:
            continue
        key = (label, q, j)
        if key not in cache:
            cache[key] = rule.dx_n(j)
        if cache[key]:
            out = out + p.diff(var) * cache[key]
    return out


def derivative_count_part(p: JetPoly, count: int) -> JetPoly:
    """Terms whose total number of x-derivatives equals ``count``."""
    return JetPoly._raw(
        {m: c for m, c in p.terms.items() if sum(v[2] * e for v, e in m) == count}
    )
