"""A-valued pseudo-differential operators with explicit truncation tracking.

Coefficients sit on the left of powers of ``d = d/dx``.  Every operator
records ``trusted_min``: coefficients of orders below it are *unknown*
(never silently zero).  ``trusted_min is None`` marks an operator that is
known exactly, i.e. every unstored coefficient is zero.
"""

from __future__ import annotations

import os
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .diffring import JetPoly
from .frobenius import AlgebraElement, FrobeniusAlgebra, mul

__all__ = [
    "TrustUnderflowError",
    "NonMonicError",
    "binom",
    "Series",
    "PsiDO",
    "GradOperator",
    "default_depth",
    "compose",
    "plus_part",
    "minus_part",
    "res",
    "adjoint",
    "power",
    "inverse",
    "mth_root",
]


class TrustUnderflowError(ValueError):
    """A coefficient below the certified window was requested."""


class NonMonicError(ValueError):
    """Root extraction needs a unit leading coefficient."""


def default_depth() -> int:
    return int(os.environ.get("FROBKP_DEPTH_DEFAULT", "8"))


@lru_cache(maxsize=None)
def binom(a: int, k: int) -> Fraction:
    """Generalized binomial ``a(a-1)...(a-k+1)/k!`` for any integer ``a``."""
    if k < 0:
        return Fraction(0)
    num = Fraction(1)
    for t in range(k):
        num *= a - t
        num /= t + 1
    return num


def _lift(elem: AlgebraElement) -> AlgebraElement:
    coords = elem.coords
    if all(isinstance(c, JetPoly) for c in coords):
        return elem
    return AlgebraElement(
        elem.algebra, tuple(c if isinstance(c, JetPoly) else JetPoly.const(c) for c in coords)
    )


def _tmax(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


class Series:
    """Shared storage and trust discipline for operators and symbols."""

    __slots__ = ("algebra", "coeffs", "trusted_min")

    def __init__(self, algebra: FrobeniusAlgebra, coeffs: dict | None = None, trusted_min=None):
        self.algebra = algebra
        self.trusted_min = trusted_min
        out = {}
        for order, c in (coeffs or {}).items():
            if trusted_min is not None and order < trusted_min:
                continue
            if c:
                out[order] = _lift(c)
        self.coeffs = out

    @classmethod
    def _make(cls, algebra, coeffs, trusted_min):
        return cls(algebra, coeffs, trusted_min)

    @classmethod
    def monomial(cls, algebra: FrobeniusAlgebra, order: int, coeff: AlgebraElement | None = None):
        if coeff is None:
            coeff = algebra.unit()
        return cls(algebra, {order: coeff})

    @classmethod
    def function(cls, coeff: AlgebraElement):
        """Multiplication by an A-valued function (order 0)."""
        return cls(coeff.algebra, {0: coeff})

    @classmethod
    def zero(cls, algebra: FrobeniusAlgebra, trusted_min=None):
        return cls(algebra, {}, trusted_min)

    # -- inspection -------------------------------------------------------
    @property
    def max_order(self):
        return max(self.coeffs, default=None)

    @property
    def exact(self) -> bool:
        return self.trusted_min is None

    def _emax(self):
        """Highest order that may be nonzero, counting the unknown tail."""
        m = self.max_order
        if self.trusted_min is not None:
            tail = self.trusted_min - 1
            m = tail if m is None else max(m, tail)
        return m

    def zero_coeff(self) -> AlgebraElement:
        return AlgebraElement(self.algebra, (JetPoly.zero(),) * self.algebra.dim)

    def coeff(self, order: int) -> AlgebraElement:
        if self.trusted_min is not None and order < self.trusted_min:
            raise TrustUnderflowError(
                f"order {order} requested but only orders >= {self.trusted_min} are certified"
            )
        c = self.coeffs.get(order)
        return c if c is not None else self.zero_coeff()

    __getitem__ = coeff

    def orders(self):
        return sorted(self.coeffs, reverse=True)

    # -- linear structure ---------------------------------------------------
    def _check(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.algebra is not self.algebra and other.algebra != self.algebra:
            raise ValueError("operands have different algebras")

    def __add__(self, other):
        self._check(other)
        t = _tmax(self.trusted_min, other.trusted_min)
        coeffs = dict(self.coeffs)
        for o, c in other.coeffs.items():
            coeffs[o] = coeffs[o] + c if o in coeffs else c
        return self._make(self.algebra, coeffs, t)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self._make(self.algebra, {o: -c for o, c in self.coeffs.items()}, self.trusted_min)

    def scale(self, c) -> "Series":
        """Multiply every coefficient by a rational or (on the left) an element."""
        if isinstance(c, AlgebraElement):
            c = _lift(c)
            return self._make(self.algebra, {o: mul(c, v) for o, v in self.coeffs.items()}, self.trusted_min)
        return self._make(self.algebra, {o: v * c for o, v in self.coeffs.items()}, self.trusted_min)

    def truncate(self, min_order: int):
        """Forget coefficients below ``min_order`` (they become unknown)."""
        return self._make(self.algebra, self.coeffs, _tmax(self.trusted_min, min_order))

    def plus(self):
        if self.trusted_min is not None and self.trusted_min > 0:
            raise TrustUnderflowError(f"plus part needs orders >= 0, trusted from {self.trusted_min}")
        return self._make(self.algebra, {o: c for o, c in self.coeffs.items() if o >= 0}, None)

    def minus(self):
        if self.trusted_min is not None and self.trusted_min > -1:
            raise TrustUnderflowError(f"minus part needs order -1, trusted from {self.trusted_min}")
        return self._make(self.algebra, {o: c for o, c in self.coeffs.items() if o < 0}, self.trusted_min)

    def res(self) -> AlgebraElement:
        return self.coeff(-1)

    def map_coeffs(self, fn):
        return self._make(self.algebra, {o: fn(c) for o, c in self.coeffs.items()}, self.trusted_min)

    def agrees_with(self, other, min_order: int | None = None) -> bool:
        """Coefficientwise equality over the common certified window."""
        lo = _tmax(self.trusted_min, other.trusted_min)
        lo = _tmax(lo, min_order)
        keys = set(self.coeffs) | set(other.coeffs)
        for o in keys:
            if lo is not None and o < lo:
                continue
            if self.coeff(o) != other.coeff(o):
                return False
        return True

    def differences(self, other, min_order: int | None = None) -> list:
        lo = _tmax(_tmax(self.trusted_min, other.trusted_min), min_order)
        out = []
        for o in sorted(set(self.coeffs) | set(other.coeffs), reverse=True):
            if lo is not None and o < lo:
                continue
            d = self.coeff(o) - other.coeff(o)
            if d:
                out.append((o, d))
        return out

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.trusted_min == other.trusted_min and self.agrees_with(other)

    __hash__ = None

    # -- composition law (overridden) ----------------------------------------
    def compose(self, other, min_order=None):
        raise NotImplementedError

    def commutator(self, other, min_order=None):
        raise NotImplementedError

    def __mul__(self, other):
        if isinstance(other, Series):
            return self.compose(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    # -- rendering ------------------------------------------------------------
    symbol = "d"

    def render(self, names=None, latex: bool = False) -> str:
        parts = []
        for o in self.orders():
            c = self.coeffs[o]
            comps = [p.to_latex(names) if latex else p.to_ascii(names) for p in c.coords]
            coeff = "(" + ", ".join(comps) + ")"
            if o == 0:
                parts.append(coeff)
            elif latex:
                parts.append(f"{coeff}\\partial^{{{o}}}" if self.symbol == "d" else f"{coeff}p^{{{o}}}")
            else:
                parts.append(f"{coeff}*{self.symbol}^{o}")
        body = " + ".join(parts) if parts else "0"
        if self.trusted_min is not None:
            body += f" + O({self.symbol}^{self.trusted_min - 1})"
        return body

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"{type(self).__name__}({self.render()})"


class PsiDO(Series):
    """Pseudo-differential operator ``sum_i P_i d^i`` (coefficients on the left)."""

    __slots__ = ()
    symbol = "d"

    def compose(self, other: "PsiDO", min_order: int | None = None) -> "PsiDO":
        return compose(self, other, min_order)

    def commutator(self, other: "PsiDO", min_order: int | None = None) -> "PsiDO":
        return compose(self, other, min_order) - compose(other, self, min_order)

    def adjoint(self, min_order: int | None = None) -> "PsiDO":
        return adjoint(self, min_order)

    def apply(self, f: AlgebraElement) -> AlgebraElement:
        """Action of a differential operator on a function."""
        if self.trusted_min is not None or any(o < 0 for o in self.coeffs):
            raise ValueError("only exact differential operators act on functions")
        f = _lift(f)
        out = self.zero_coeff()
        deriv = f
        for o in range(0, (self.max_order or 0) + 1):
            if o in self.coeffs:
                out = out + mul(self.coeffs[o], deriv)
            deriv = deriv.dx()
        return out


def _product_floor(P: Series, Q: Series, min_order):
    bounds = []
    eP, eQ = P._emax(), Q._emax()
    if P.trusted_min is not None and eQ is not None:
        bounds.append(P.trusted_min + eQ)
    if Q.trusted_min is not None and eP is not None:
        bounds.append(eP + Q.trusted_min)
    floor = max(bounds) if bounds else None
    return _tmax(floor, min_order)


def compose(P: PsiDO, Q: PsiDO, min_order: int | None = None) -> PsiDO:
    """Composition by the generalized Leibniz rule
    ``d^i o f = sum_k C(i, k) f^(k) d^(i-k)``.

    The result is certified for orders ``>= trusted_min``, which is the
    tightest bound implied by the operands' trust windows and
    ``min_order``.  Exact operands with negative orders produce infinite
    series; these are cut at ``-default_depth()`` unless ``min_order`` is
    given.
    """
    P._check(Q)
    alg = P.algebra
    if (not P.coeffs and P.trusted_min is None) or (not Q.coeffs and Q.trusted_min is None):
        return PsiDO(alg, {}, None)
    floor = _product_floor(P, Q, min_order)
    if floor is None and any(i < 0 for i in P.coeffs):
        if any(any(c.variables() for c in b.coords) for b in Q.coeffs.values()):
            floor = -default_depth()
    acc: dict = {}
    for j, b in Q.coeffs.items():
        derivs = [b]
        for i, a in P.coeffs.items():
            top = i + j
            if floor is not None and top < floor:
                continue
            if i >= 0:
                kmax = i if floor is None else min(i, top - floor)
            else:
                kmax = top - floor if floor is not None else 0
            for k in range(kmax + 1):
                while len(derivs) <= k:
                    derivs.append(derivs[-1].dx())
                bk = derivs[k]
                if not bk:
                    break
                c = binom(i, k)
                if not c:
                    continue
                term = mul(a, bk)
                if c != 1:
                    term = term * c
                o = top - k
                acc[o] = acc[o] + term if o in acc else term
    return PsiDO(alg, acc, floor)


def plus_part(P: Series) -> Series:
    return P.plus()


def minus_part(P: Series) -> Series:
    return P.minus()


def res(P: Series) -> AlgebraElement:
    return P.res()


def adjoint(P: PsiDO, min_order: int | None = None) -> PsiDO:
    """Formal adjoint ``P* = sum_i (-1)^i d^i o P_i``."""
    floor = _tmax(P.trusted_min, min_order)
    if floor is None and any(i < 0 for i in P.coeffs):
        floor = -default_depth()
    acc: dict = {}
    for i, a in P.coeffs.items():
        sign = -1 if i % 2 else 1
        if i >= 0:
            kmax = i if floor is None else min(i, i - floor)
        else:
            kmax = i - floor
        deriv = a
        for k in range(kmax + 1):
            if k:
                deriv = deriv.dx()
            if not deriv:
                break
            c = binom(i, k) * sign
            if c:
                o = i - k
                acc[o] = acc[o] + deriv * c if o in acc else deriv * c
    return PsiDO(P.algebra, acc, floor)


def power(P: Series, r: int, min_order: int | None = None) -> Series:
    if r < 1:
        raise ValueError("power needs r >= 1")
    # intermediate powers need extra room: each remaining factor can raise orders
    lift = max(P._emax() or 0, 0)
    out = P
    for step in range(1, r):
        floor = None if min_order is None else min_order - (r - 1 - step) * lift
        out = out.compose(P, floor)
    return out


def _check_monic(P: Series, m: int):
    if P.max_order != m or P.coeff(m) != P.algebra.unit():
        raise NonMonicError(f"operator must be monic of order {m}")


def inverse(P: Series, depth: int) -> Series:
    """Inverse of a monic operator of order ``k``, certified down to ``-k - depth``."""
    k = P.max_order
    _check_monic(P, k)
    cls = type(P)
    alg = P.algebra
    coeffs = {-k: alg.unit()}
    for l in range(1, depth + 1):
        Q = cls(alg, coeffs, None)
        prod = P.compose(Q, min_order=-l)
        coeffs[-k - l] = -prod.coeff(-l)
    return cls(alg, coeffs, -k - depth)


def mth_root(Lm: Series, m: int, depth: int) -> Series:
    """The monic ``m``-th root ``d + u_0 + u_1 d^-1 + ...`` certified down to
    order ``-depth``, solved order by order."""
    _check_monic(Lm, m)
    cls = type(Lm)
    alg = Lm.algebra
    coeffs = {1: alg.unit()}
    for k in range(0, depth + 1):
        approx = cls(alg, coeffs, None)
        target = m - 1 - k
        pw = power(approx, m, min_order=target)
        u = (Lm.coeff(target) - pw.coeff(target)) * Fraction(1, m)
        coeffs[-k] = u
    return cls(alg, coeffs, -depth)


class GradOperator:
    """Right-stored operator ``sum_i d^(-i-1) o X_i``.

    Used for functional gradients; ``components`` maps ``i`` to ``X_i``.
    """

    def __init__(self, algebra: FrobeniusAlgebra, components: dict, cls=PsiDO):
        self.algebra = algebra
        self.components = {i: _lift(x) for i, x in components.items()}
        self.cls = cls

    def component(self, i: int) -> AlgebraElement:
        x = self.components.get(i)
        if x is None:
            return AlgebraElement(self.algebra, (JetPoly.zero(),) * self.algebra.dim)
        return x

    def with_component(self, i: int, x: AlgebraElement) -> "GradOperator":
        comps = dict(self.components)
        comps[i] = x
        return GradOperator(self.algebra, comps, self.cls)

    def to_series(self, min_order: int) -> Series:
        """Left-coefficient form, exact for orders ``>= min_order``."""
        total = self.cls(self.algebra, {}, min_order)
        for i, x in self.components.items():
            if not x:
                continue
            term = self.cls.monomial(self.algebra, -i - 1).compose(
                self.cls.function(x), min_order=min_order
            )
            total = total + term
        return total

    @classmethod
    def from_series(cls, P: Series, indices: Iterable[int]) -> "GradOperator":
        """Invert ``to_series`` on the orders ``-1 ... -(max(indices)+1)``."""
        indices = sorted(indices)
        comps: dict = {}
        op_cls = type(P)
        for i in range(0, max(indices) + 1):
            acc = P.coeff(-i - 1)
            for l, xl in comps.items():
                # coefficient of d^(-i-1) in d^(-l-1) o X_l
                probe = op_cls.monomial(P.algebra, -l - 1).compose(
                    op_cls.function(xl), min_order=-i - 1
                )
                acc = acc - probe.coeff(-i - 1)
            comps[i] = acc
        return cls(P.algebra, {i: comps[i] for i in indices}, op_cls)

    def __neg__(self):
        return GradOperator(self.algebra, {i: -x for i, x in self.components.items()}, self.cls)

    def scale(self, c):
        return GradOperator(self.algebra, {i: x * c for i, x in self.components.items()}, self.cls)

    def __repr__(self):
        return "GradOperator(" + ", ".join(f"X_{i}={x}" for i, x in sorted(self.components.items())) + ")"
