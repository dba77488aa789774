"""Seeded random objects for property checks."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from .diffring import Functional, JetPoly
from .frobenius import AlgebraElement, FrobeniusAlgebra
from .psido import PsiDO, Series


def random_rational(rng: random.Random, span: int = 3) -> Fraction:
    num = rng.randint(-span, span)
    den = rng.choice((1, 1, 2, 3))
    return Fraction(num, den)


def random_jetpoly(
    rng: random.Random,
    labels: Sequence[str],
    dim: int,
    degree: int = 2,
    max_jet: int = 2,
    terms: int = 3,
    constant: bool = True,
) -> JetPoly:
    out = JetPoly.const(random_rational(rng)) if constant else JetPoly.zero()
    for _ in range(terms):
        mono = JetPoly.const(random_rational(rng))
        for _ in range(rng.randint(1, degree)):
            mono = mono * JetPoly.var(rng.choice(labels), rng.randint(1, dim), rng.randint(0, max_jet))
        out = out + mono
    return out


def random_element(rng: random.Random, alg: FrobeniusAlgebra, labels: Sequence[str] = ("A",), **kw) -> AlgebraElement:
    return AlgebraElement(alg, tuple(random_jetpoly(rng, labels, alg.dim, **kw) for _ in range(alg.dim)))


def random_constant_element(rng: random.Random, alg: FrobeniusAlgebra) -> AlgebraElement:
    return AlgebraElement(alg, tuple(random_rational(rng) for _ in range(alg.dim)))


def random_operator(
    rng: random.Random,
    alg: FrobeniusAlgebra,
    max_order: int = 2,
    depth: int = 6,
    labels: Sequence[str] = ("A",),
    cls=PsiDO,
    **kw,
) -> Series:
    """Operator with random coefficients at orders ``max_order .. -depth``."""
    coeffs = {}
    for o in range(max_order, -depth - 1, -1):
        if o == max_order or rng.random() < 0.7:
            coeffs[o] = random_element(rng, alg, labels, **kw)
    return cls(alg, coeffs, -depth)


def random_functional(
    rng: random.Random, alg: FrobeniusAlgebra, labels: Sequence[str], degree: int = 2, max_jet: int = 3, terms: int = 3
) -> Functional:
    return Functional(random_jetpoly(rng, labels, alg.dim, degree, max_jet, terms, constant=False))
