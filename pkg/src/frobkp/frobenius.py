"""Finite-dimensional commutative Frobenius algebras over exact rationals.

An algebra is pure data: structure constants ``c[i][j][k]`` (``e_i e_j =
sum_k c[i][j][k] e_k``), the coordinates of the unit and a weight vector for
the trace form.  Elements carry coordinates over any commutative ring that
supports ``+``, ``-``, ``*`` and multiplication by rationals, so the same
algebra serves exact numbers, differential polynomials and floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Sequence

__all__ = [
    "AlgebraError",
    "DegenerateTraceError",
    "FrobeniusAlgebra",
    "AlgebraElement",
    "FrobeniusReport",
    "build_zn",
    "build_z2_eps_mu",
    "build_trn",
    "trn_weights",
    "trn_weights_from_matrix",
    "check_frobenius",
    "mul",
    "trace",
    "pair",
    "inv",
    "exp",
    "parse_algebra",
    "load_algebra",
    "algebra_to_json",
]

EXP_TOL = 1e-14


class AlgebraError(ValueError):
    """Invalid algebra data or an operation outside an element's domain."""


class DegenerateTraceError(AlgebraError):
    """The trace form induces a singular Gram matrix."""


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


def _solve(matrix, rhs):
    """Gauss-Jordan over any field; ``rhs`` is a list of right-hand columns."""
    n = len(matrix)
    a = [list(row) + [col[i] for col in rhs] for i, row in enumerate(matrix)]
    width = len(a[0])
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            raise AlgebraError("singular matrix")
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [v / p for v in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [vr - f * vc for vr, vc in zip(a[r], a[c])]
    return [[a[r][n + k] for r in range(n)] for k in range(width - n)]


def _det(matrix) -> Fraction:
    n = len(matrix)
    a = [list(map(to_fraction, row)) for row in matrix]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            if a[r][c] != 0:
                f = a[r][c] / a[c][c]
                a[r] = [vr - f * vc for vr, vc in zip(a[r], a[c])]
    return det


@dataclass(frozen=True)
class FrobeniusAlgebra:
    """The data ``{A, o, e, omega}`` of a commutative Frobenius algebra.

    Indices are 0-based internally; basis element ``e_{k+1}`` of the usual
    1-based notation is index ``k``.
    """

    dim: int
    structure_constants: tuple
    unit_coords: tuple
    trace_weights: tuple
    name: str = "A"

    def __post_init__(self):
        n = self.dim
        sc = tuple(
            tuple(tuple(to_fraction(v) for v in row) for row in plane)
            for plane in self.structure_constants
        )
        if len(sc) != n or any(len(p) != n or any(len(r) != n for r in p) for p in sc):
            raise AlgebraError(f"structure constants must have shape {n}x{n}x{n}")
        unit = tuple(to_fraction(v) for v in self.unit_coords)
        weights = tuple(to_fraction(v) for v in self.trace_weights)
        if len(unit) != n or len(weights) != n:
            raise AlgebraError("unit and trace weights must have length dim")
        object.__setattr__(self, "structure_constants", sc)
        object.__setattr__(self, "unit_coords", unit)
        object.__setattr__(self, "trace_weights", weights)

    # -- derived tables ---------------------------------------------------
    @cached_property
    def mult_table(self) -> dict:
        """``{(i, j): [(k, c), ...]}`` over nonzero structure constants."""
        table = {}
        for i in range(self.dim):
            for j in range(self.dim):
                entries = [
                    (k, c) for k, c in enumerate(self.structure_constants[i][j]) if c != 0
                ]
                if entries:
                    table[(i, j)] = entries
        return table

    @cached_property
    def gram(self) -> tuple:
        w = self.trace_weights
        return tuple(
            tuple(
                sum((c * w[k] for k, c in enumerate(self.structure_constants[i][j])), Fraction(0))
                for j in range(self.dim)
            )
            for i in range(self.dim)
        )

    @cached_property
    def gram_det(self) -> Fraction:
        return _det(self.gram)

    @cached_property
    def gram_inverse(self) -> tuple:
        if self.gram_det == 0:
            raise DegenerateTraceError(f"{self.name}: trace form is degenerate")
        n = self.dim
        ident = [[Fraction(int(i == k)) for i in range(n)] for k in range(n)]
        cols = _solve(self.gram, ident)
        return tuple(tuple(cols[j][i] for j in range(n)) for i in range(n))

    # -- element constructors ---------------------------------------------
    def element(self, coords: Sequence) -> "AlgebraElement":
        return AlgebraElement(self, tuple(coords))

    def unit(self) -> "AlgebraElement":
        return AlgebraElement(self, self.unit_coords)

    def zero(self, zero=Fraction(0)) -> "AlgebraElement":
        return AlgebraElement(self, (zero,) * self.dim)

    def basis(self, k: int) -> "AlgebraElement":
        return AlgebraElement(self, tuple(Fraction(int(i == k)) for i in range(self.dim)))

    def regular_matrix(self, coords: Sequence) -> list:
        """Matrix of ``b -> a o b`` acting on coordinate columns."""
        n = self.dim
        m = [[0] * n for _ in range(n)]
        for (i, j), entries in self.mult_table.items():
            if coords[i] == 0:
                continue
            for k, c in entries:
                m[k][j] = m[k][j] + c * coords[i]
        return m

    def with_trace(self, weights: Sequence, name: str | None = None) -> "FrobeniusAlgebra":
        return FrobeniusAlgebra(
            self.dim, self.structure_constants, self.unit_coords, tuple(weights),
            name or self.name,
        )


@dataclass(frozen=True)
class AlgebraElement:
    """Coordinates of an element over some commutative scalar ring."""

    algebra: FrobeniusAlgebra
    coords: tuple

    def __post_init__(self):
        if len(self.coords) != self.algebra.dim:
            raise AlgebraError(
                f"element has {len(self.coords)} coordinates, algebra dim is {self.algebra.dim}"
            )

    def _check(self, other: "AlgebraElement"):
        if other.algebra is not self.algebra and other.algebra != self.algebra:
            raise AlgebraError("elements belong to different algebras")

    def __add__(self, other):
        if isinstance(other, AlgebraElement):
            self._check(other)
            return AlgebraElement(self.algebra, tuple(a + b for a, b in zip(self.coords, other.coords)))
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, AlgebraElement):
            self._check(other)
            return AlgebraElement(self.algebra, tuple(a - b for a, b in zip(self.coords, other.coords)))
        return NotImplemented

    def __neg__(self):
        return AlgebraElement(self.algebra, tuple(-a for a in self.coords))

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return mul(self, other)
        return AlgebraElement(self.algebra, tuple(a * other for a in self.coords))

    def __rmul__(self, other):
        return AlgebraElement(self.algebra, tuple(other * a for a in self.coords))

    def __bool__(self):
        return any(bool(c) for c in self.coords)

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.algebra == other.algebra and all(
            not (a - b) for a, b in zip(self.coords, other.coords)
        )

    def __hash__(self):
        return hash(self.coords)

    def map(self, fn) -> "AlgebraElement":
        return AlgebraElement(self.algebra, tuple(fn(c) for c in self.coords))

    def dx(self) -> "AlgebraElement":
        """Total x-derivative of the coordinates (zero for plain numbers)."""
        return self.map(_dx)

    def trace(self):
        return trace(self)

    def __repr__(self):
        return f"{self.algebra.name}{list(self.coords)}"


def _dx(c):
    d = getattr(c, "dx", None)
    if d is None:
        return 0 * c
    return d()


def _zero_like(c):
    return c - c


def mul(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    a._check(b)
    alg = a.algebra
    zero = _zero_like(a.coords[0])
    out = [zero] * alg.dim
    for (i, j), entries in alg.mult_table.items():
        ai, bj = a.coords[i], b.coords[j]
        if not ai or not bj:
            continue
        prod = ai * bj
        for k, c in entries:
            out[k] = out[k] + (prod if c == 1 else prod * c)
    return AlgebraElement(alg, tuple(out))


def trace(a: AlgebraElement):
    w = a.algebra.trace_weights
    acc = _zero_like(a.coords[0])
    for wk, ck in zip(w, a.coords):
        if wk != 0 and ck:
            acc = acc + (ck if wk == 1 else ck * wk)
    return acc


def pair(a: AlgebraElement, b: AlgebraElement):
    return trace(mul(a, b))


def inv(a: AlgebraElement) -> AlgebraElement:
    """Inverse via the regular representation; exact for rational coordinates."""
    alg = a.algebra
    m = alg.regular_matrix(a.coords)
    numeric = any(isinstance(c, float) for c in a.coords)
    if numeric:
        import numpy as np

        mat = np.array(m, dtype=float)
        if abs(np.linalg.det(mat)) < 1e-300:
            raise AlgebraError("element is not invertible")
        x = np.linalg.solve(mat, np.array([float(u) for u in alg.unit_coords]))
        return AlgebraElement(alg, tuple(float(v) for v in x))
    m = [[to_fraction(v) for v in row] for row in m]
    try:
        (x,) = _solve(m, [list(alg.unit_coords)])
    except AlgebraError:
        raise AlgebraError("element is not invertible") from None
    return AlgebraElement(alg, tuple(x))


def _scalar_part(a: AlgebraElement):
    """Return ``(s, N)`` with ``a = s*unit + N`` if ``N`` is nilpotent, else None."""
    alg = a.algebra
    m = alg.regular_matrix(a.coords)
    s = sum(m[i][i] for i in range(alg.dim))
    s = s / alg.dim if isinstance(s, float) else Fraction(s) / alg.dim
    nil = a - alg.unit() * s if not isinstance(s, float) else AlgebraElement(
        alg, tuple(c - s * float(u) for c, u in zip(a.coords, alg.unit_coords))
    )
    p = nil
    for _ in range(alg.dim):
        p = mul(p, nil)
    if isinstance(s, float):
        scale = max(1.0, max(abs(float(c)) for c in a.coords)) ** (alg.dim + 1)
        if all(abs(float(c)) <= 1e-12 * scale for c in p.coords):
            return s, nil
        return None
    return (s, nil) if not p else None


def exp(a: AlgebraElement) -> AlgebraElement:
    """Exponential of an element.

    Exact coordinates require ``a`` to be nilpotent (the series then
    terminates).  Float coordinates use ``e^s * sum N^k/k!`` when
    ``a = s*unit + N`` with ``N`` nilpotent, and otherwise a scaled power
    series in the regular representation.
    """
    alg = a.algebra
    numeric = any(isinstance(c, float) for c in a.coords)
    split = _scalar_part(a)
    if not numeric:
        if split is None or split[0] != 0:
            raise AlgebraError("exact exponential needs a nilpotent element")
        _, nil = split
        return _nilpotent_exp(nil, Fraction(1))
    if split is not None:
        s, nil = split
        nil = nil.map(float)
        return _nilpotent_exp(nil, 1.0).map(lambda c: math.exp(s) * c)
    return _series_exp(a)


def _nilpotent_exp(nil: AlgebraElement, one) -> AlgebraElement:
    alg = nil.algebra
    unit = alg.unit().map(lambda c: c * one)
    total, term = unit, unit
    for k in range(1, alg.dim + 1):
        term = mul(term, nil) * (one / k)
        if not term:
            break
        total = total + term
    return total


def _series_exp(a: AlgebraElement) -> AlgebraElement:
    import numpy as np

    alg = a.algebra
    m = np.array(alg.regular_matrix([float(c) for c in a.coords]), dtype=float)
    norm = np.abs(m).sum(axis=0).max()
    squarings = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0.5 else 0
    m = m / (2**squarings)
    result = np.eye(alg.dim)
    term = np.eye(alg.dim)
    for k in range(1, 200):
        term = term @ m / k
        result = result + term
        if np.abs(term).max() < EXP_TOL:
            break
    for _ in range(squarings):
        result = result @ result
    col = result @ np.array([float(u) for u in alg.unit_coords])
    return AlgebraElement(alg, tuple(float(v) for v in col))


# -- built-in algebras -----------------------------------------------------


def _zn_constants(n: int):
    sc = [[[0] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i + j < n:  # 1-based: i+j-1 <= n
                sc[i][j][i + j] = 1
    return sc


def _zn_trace(n: int, k: int):
    """Weights of the basic trace form with 0-based index k."""
    w = [0] * n
    w[k] += 1
    if k != n - 1:
        w[n - 1] += 1
    return w


def build_zn(n: int, k: int) -> FrobeniusAlgebra:
    """Truncated polynomial algebra ``R[L]/(L^n)`` with basic trace form ``k``."""
    if n < 1:
        raise AlgebraError("n must be positive")
    if not 0 <= k <= n - 1:
        raise AlgebraError(f"trace index must lie in 0..{n - 1}, got {k}")
    unit = [1] + [0] * (n - 1)
    return FrobeniusAlgebra(n, _zn_constants(n), unit, _zn_trace(n, k), f"zn:{n}:{k}")


def build_z2_eps_mu(eps, mu, k: int) -> FrobeniusAlgebra:
    """Two-dimensional algebra with ``e2 o e2 = eps e1 + mu e2``."""
    if k not in (1, 2):
        raise AlgebraError("trace index must be 1 or 2")
    eps, mu = to_fraction(eps), to_fraction(mu)
    sc = [[[1, 0], [0, 1]], [[0, 1], [eps, mu]]]
    delta_eps = 1 if eps == 0 else 0
    w = [0, 0]
    w[k - 1] += 1
    if k != 2:
        w[1] += delta_eps
    alg = FrobeniusAlgebra(2, sc, [1, 0], w, f"z2:{eps}:{mu}:{k}")
    if alg.gram_det == 0:
        raise DegenerateTraceError(f"{alg.name}: Gram matrix {alg.gram} is singular")
    return alg


def trn_weights(n: int) -> tuple:
    """Weights of ``tr_n = sum_s omega_s - (n-1) omega_{n-1}`` on ``Z_n``."""
    if n < 1:
        raise AlgebraError("n must be positive")
    w = [Fraction(0)] * n
    for s in range(n):
        for q, c in enumerate(_zn_trace(n, s)):
            w[q] += c
    for q, c in enumerate(_zn_trace(n, n - 1)):
        w[q] -= (n - 1) * c
    return tuple(w)


def trn_weights_from_matrix(n: int) -> tuple:
    """Evaluate ``trace(M A)`` on ``A = Lambda^(k-1)`` with the upper-triangular
    weight matrix ``M[i][j] = 1/(n - (j - i))``."""
    weights = []
    for k in range(n):
        # Lambda^k has ones at (i + k, i)
        total = Fraction(0)
        for i in range(n - k):
            row, col = i + k, i
            # trace(M A) = sum_{r,c} M[c][r] A[r][c]
            total += Fraction(1, n - (row - col))
        weights.append(total)
    return tuple(weights)


def build_trn(n: int) -> FrobeniusAlgebra:
    alg = FrobeniusAlgebra(n, _zn_constants(n), [1] + [0] * (n - 1), trn_weights(n), f"trn:{n}")
    return alg


# -- verification -------------------------------------------------------------


@dataclass
class FrobeniusReport:
    passed: bool
    failures: list = field(default_factory=list)

    def __bool__(self):
        return self.passed

    def __str__(self):
        if self.passed:
            return "frobenius: pass"
        return "frobenius: FAIL\n" + "\n".join(f"  {ax}: {wit}" for ax, wit in self.failures)


def check_frobenius(alg: FrobeniusAlgebra) -> FrobeniusReport:
    """Check the algebra axioms and nondegeneracy of the trace pairing."""
    n, c = alg.dim, alg.structure_constants
    failures = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if c[i][j][k] != c[j][i][k]:
                    failures.append(("commutativity", (i + 1, j + 1, k + 1)))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    lhs = sum(c[i][j][s] * c[s][k][l] for s in range(n))
                    rhs = sum(c[j][k][s] * c[i][s][l] for s in range(n))
                    if lhs != rhs:
                        failures.append(("associativity", (i + 1, j + 1, k + 1, l + 1)))
    u = alg.unit_coords
    for j in range(n):
        for k in range(n):
            val = sum(u[i] * c[i][j][k] for i in range(n))
            if val != int(j == k):
                failures.append(("unit", (j + 1, k + 1)))
    if alg.gram_det == 0:
        failures.append(("nondegeneracy", ("det", 0)))
    return FrobeniusReport(not failures, failures)


# -- definition files and names ----------------------------------------------


def parse_algebra(text: str) -> FrobeniusAlgebra:
    """Resolve ``zn:<n>:<k>``, ``z2:<eps>:<mu>:<k>``, ``trn:<n>``, a short
    alias ``zn`` style like ``z2`` or ``z3`` (trace ``n-1``), ``scalar``, or
    a JSON file path."""
    parts = text.split(":")
    head = parts[0].lower()
    try:
        if head == "zn" and len(parts) == 3:
            return build_zn(int(parts[1]), int(parts[2]))
        if head == "z2" and len(parts) == 4:
            return build_z2_eps_mu(Fraction(parts[1]), Fraction(parts[2]), int(parts[3]))
        if head == "trn" and len(parts) == 2:
            return build_trn(int(parts[1]))
        if head == "scalar" and len(parts) == 1:
            return build_zn(1, 0)
        if len(parts) == 1 and head.startswith("z") and head[1:].isdigit():
            n = int(head[1:])
            return build_zn(n, n - 1)
    except (ValueError, ZeroDivisionError) as exc:
        raise AlgebraError(f"bad algebra description {text!r}: {exc}") from None
    if text.endswith(".json"):
        return load_algebra(text)
    raise AlgebraError(f"unknown algebra description {text!r}")


def _frac_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def algebra_to_json(alg: FrobeniusAlgebra) -> dict[str, Any]:
    return {
        "name": alg.name,
        "dim": alg.dim,
        "structure_constants": [
            [[_frac_str(v) for v in row] for row in plane] for plane in alg.structure_constants
        ],
        "unit": [_frac_str(v) for v in alg.unit_coords],
        "trace_weights": [_frac_str(v) for v in alg.trace_weights],
    }


def load_algebra(path: str) -> FrobeniusAlgebra:
    with open(path) as fh:
        data = json.load(fh)
    try:
        return FrobeniusAlgebra(
            int(data["dim"]),
            data["structure_constants"],
            data["unit"],
            data["trace_weights"],
            data.get("name", path),
        )
    except KeyError as exc:
        raise AlgebraError(f"{path}: missing field {exc}") from None
