"""Closed-form tau functions checked with truncated Taylor (jet) arithmetic.

Jets are bivariate in ``(x, t)`` around a base point and may carry a batch
of base points at once: coefficients have shape ``(*batch, n, d+1, d+1)``
where ``[..., q, a, b]`` multiplies ``e_q xi^a eta^b``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .frobenius import AlgebraElement, FrobeniusAlgebra, exp as alg_exp

__all__ = [
    "TaylorJet",
    "TauFunction",
    "tau_eval",
    "u_from_jet",
    "u_from_tau",
    "component_route",
    "kdv_residual",
    "gauge_check",
    "make_grid",
    "parse_grid",
    "soliton_table",
    "write_csv",
]


def _structure(alg: FrobeniusAlgebra) -> np.ndarray:
    return np.array([[[float(c) for c in row] for row in plane] for plane in alg.structure_constants])


def _mask(order: int) -> np.ndarray:
    a = np.arange(order + 1)
    return (a[:, None] + a[None, :]) <= order


class TaylorJet:
    """Truncated Taylor expansion of an algebra-valued function of ``(x, t)``."""

    __slots__ = ("algebra", "coeffs", "base")

    def __init__(self, algebra: FrobeniusAlgebra, coeffs: np.ndarray, base=None):
        self.algebra = algebra
        order = coeffs.shape[-1] - 1
        self.coeffs = np.where(_mask(order), coeffs, 0.0)
        self.base = base

    # -- construction ---------------------------------------------------------
    @property
    def order(self) -> int:
        return self.coeffs.shape[-1] - 1

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-3]

    @classmethod
    def constant(cls, alg: FrobeniusAlgebra, value, order: int, batch_shape=(), base=None) -> "TaylorJet":
        if isinstance(value, AlgebraElement):
            value = [float(c) for c in value.coords]
        value = np.broadcast_to(np.asarray(value, dtype=float), (*batch_shape, alg.dim))
        c = np.zeros((*batch_shape, alg.dim, order + 1, order + 1))
        c[..., 0, 0] = value
        return cls(alg, c, base)

    @classmethod
    def coordinate(cls, alg: FrobeniusAlgebra, which: str, x0, t0, order: int) -> "TaylorJet":
        """``(x0 + xi) * unit`` or ``(t0 + eta) * unit``."""
        x0, t0 = np.broadcast_arrays(np.asarray(x0, dtype=float), np.asarray(t0, dtype=float))
        unit = np.array([float(u) for u in alg.unit_coords])
        c = np.zeros((*x0.shape, alg.dim, order + 1, order + 1))
        start = x0 if which == "x" else t0
        c[..., 0, 0] = start[..., None] * unit
        if order >= 1:
            if which == "x":
                c[..., 1, 0] = unit
            else:
                c[..., 0, 1] = unit
        return cls(alg, c, (x0, t0))

    def _like(self, coeffs) -> "TaylorJet":
        return TaylorJet(self.algebra, coeffs, self.base)

    def truncate(self, order: int) -> "TaylorJet":
        return self._like(self.coeffs[..., : order + 1, : order + 1])

    def _common(self, other: "TaylorJet") -> tuple:
        d = min(self.order, other.order)
        return self.truncate(d), other.truncate(d)

    def _coerce(self, other) -> "TaylorJet":
        if isinstance(other, TaylorJet):
            return other
        if isinstance(other, AlgebraElement):
            return TaylorJet.constant(self.algebra, other, self.order, self.batch_shape, self.base)
        raise TypeError(f"cannot combine TaylorJet with {type(other).__name__}")

    # -- arithmetic -------------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = AlgebraElement(self.algebra, tuple(float(other) * float(u) for u in self.algebra.unit_coords))
        a, b = self._common(self._coerce(other))
        return a._like(a.coeffs + b.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self._like(self.coeffs * other)
        a, b = self._common(self._coerce(other))
        D = a.order + 1
        X, Y = a.coeffs, b.coeffs
        n = self.algebra.dim
        Z = np.zeros((*np.broadcast_shapes(X.shape[:-3], Y.shape[:-3]), n, n, D, D))
        for a1 in range(D):
            for b1 in range(D - a1):
                xa = X[..., :, None, a1, b1, None, None]
                Z[..., a1:, b1:] += xa * Y[..., None, :, : D - a1, : D - b1]
        out = np.einsum("ijk,...ijab->...kab", _structure(self.algebra), Z)
        return a._like(out)

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return self._like(self.coeffs * other)
        return self._coerce(other) * self

    def __truediv__(self, other):
        return self * other.inv()

    # -- derivatives and values --------------------------------------------------
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0, 0]

    def partial(self, a: int, b: int) -> np.ndarray:
        """``d^a/dx^a d^b/dt^b`` at the base point, shape ``(*batch, n)``."""
        if a + b > self.order:
            raise ValueError(f"partial of total order {a + b} exceeds jet order {self.order}")
        return self.coeffs[..., a, b] * (math.factorial(a) * math.factorial(b))

    def dx(self) -> "TaylorJet":
        D = self.order + 1
        k = np.arange(1, D)
        c = self.coeffs[..., 1:, :-1] * k[:, None]
        return self._like(c)

    def dt(self) -> "TaylorJet":
        D = self.order + 1
        k = np.arange(1, D)
        c = self.coeffs[..., :-1, 1:] * k[None, :]
        return self._like(c)

    def _split(self):
        c0 = self.value()
        rest = self.coeffs.copy()
        rest[..., 0, 0] = 0.0
        return c0, self._like(rest)

    def _regular(self, c0: np.ndarray) -> np.ndarray:
        # R[..., k, j] = sum_i c0_i C[i, j, k]
        return np.einsum("...i,ijk->...kj", c0, _structure(self.algebra))

    def inv(self) -> "TaylorJet":
        c0, delta = self._split()
        R = self._regular(c0)
        unit = np.array([float(u) for u in self.algebra.unit_coords])
        if np.any(np.abs(np.linalg.det(R)) < 1e-300):
            raise ZeroDivisionError("jet has a non-invertible constant term")
        inv0 = np.linalg.solve(R, np.broadcast_to(unit, c0.shape)[..., None])[..., 0]
        base = TaylorJet.constant(self.algebra, 0.0, self.order, self.batch_shape, self.base)
        base.coeffs[..., 0, 0] = inv0
        step = -(base * delta)
        total = base
        term = base
        for _ in range(self.order):
            term = term * step
            total = total + term
        return total

    def exp(self) -> "TaylorJet":
        c0, delta = self._split()
        flat = c0.reshape(-1, self.algebra.dim)
        e0 = np.array([
            [float(v) for v in alg_exp(AlgebraElement(self.algebra, tuple(float(x) for x in row))).coords]
            for row in flat
        ]).reshape(c0.shape)
        base = TaylorJet.constant(self.algebra, 0.0, self.order, self.batch_shape, self.base)
        base.coeffs[..., 0, 0] = e0
        series = TaylorJet.constant(self.algebra, self.algebra.unit(), self.order, self.batch_shape, self.base)
        term = series
        for k in range(1, self.order + 1):
            term = term * delta * (1.0 / k)
            series = series + term
        return base * series

    def log(self) -> "TaylorJet":
        """Logarithm of a jet over a one-dimensional algebra with positive value."""
        if self.algebra.dim != 1:
            raise ValueError("log is provided for scalar jets only")
        c0, delta = self._split()
        if np.any(c0 <= 0):
            raise ValueError("log needs a positive constant term")
        ratio = self._like(delta.coeffs / c0[..., None, None])
        out = TaylorJet.constant(self.algebra, 0.0, self.order, self.batch_shape, self.base)
        out.coeffs[..., 0, 0] = np.log(c0)
        term = None
        for k in range(1, self.order + 1):
            term = ratio if term is None else term * ratio
            out = out + term * ((-1.0) ** (k + 1) / k)
        return out

    def component(self, q: int, scalar_alg: FrobeniusAlgebra) -> "TaylorJet":
        """The ``q``-th coordinate as a jet over a one-dimensional algebra."""
        return TaylorJet(scalar_alg, self.coeffs[..., q : q + 1, :, :], self.base)


@dataclass
class TauFunction:
    """``tau = unit + exp(2 A x + 2 A^3 t)``."""

    generator: AlgebraElement

    @property
    def algebra(self) -> FrobeniusAlgebra:
        return self.generator.algebra

    @classmethod
    def from_params(cls, alg: FrobeniusAlgebra, params: Sequence[float]) -> "TauFunction":
        coords = list(params) + [0.0] * (alg.dim - len(params))
        return cls(AlgebraElement(alg, tuple(float(c) for c in coords[: alg.dim])))


def tau_eval(tau: TauFunction, x0, t0, d: int) -> TaylorJet:
    if d < 4:
        raise ValueError("jet order d must be >= 4")
    alg = tau.algebra
    A = tau.generator
    A3 = A * A * A
    X = TaylorJet.coordinate(alg, "x", x0, t0, d)
    T = TaylorJet.coordinate(alg, "t", x0, t0, d)
    E = X * (A * 2.0) + T * (A3 * 2.0)
    return E.exp() + alg.unit()


def u_from_jet(tj: TaylorJet) -> TaylorJet:
    """``U = d/dx (tau_x o tau^-1)``."""
    return (tj.dx() * tj.inv()).dx()


def u_from_tau(tau: TauFunction, x0, t0, d: int = 5) -> TaylorJet:
    return u_from_jet(tau_eval(tau, x0, t0, d))


def _scalar_algebra() -> FrobeniusAlgebra:
    from .frobenius import build_zn

    return build_zn(1, 0)


def component_route(tau: TauFunction, x0, t0, d: int = 5) -> tuple:
    """``v = (log tau_0)_xx`` and ``w = (tau_1 / tau_0)_xx`` for two-dimensional
    algebras with unit ``e_1`` and ``e_2^2 = 0``."""
    alg = tau.algebra
    if alg.dim != 2:
        raise ValueError("component route is for two-dimensional algebras")
    s = _scalar_algebra()
    tj = tau_eval(tau, x0, t0, d)
    t0j, t1j = tj.component(0, s), tj.component(1, s)
    v = t0j.log().dx().dx()
    w = (t1j * t0j.inv()).dx().dx()
    return v, w


def _kdv_residual_from_u(U: TaylorJet) -> np.ndarray:
    alg = U.algebra
    C = _structure(alg)
    u = U.partial(0, 0)
    ux = U.partial(1, 0)
    ut = U.partial(0, 1)
    uxxx = U.partial(3, 0)
    prod = np.einsum("...i,...j,ijk->...k", u, ux, C)
    return 4.0 * ut - 12.0 * prod - uxxx


def kdv_residual(tau: TauFunction, grid: Iterable, d: int = 5) -> np.ndarray:
    """Per-component max ``|4U_t - 12 U o U_x - U_xxx|`` over ``grid``."""
    pts = np.asarray(list(grid), dtype=float)
    U = u_from_tau(tau, pts[:, 0], pts[:, 1], d)
    return np.abs(_kdv_residual_from_u(U)).max(axis=0)


def gauge_check(tau: TauFunction, C0: AlgebraElement, C1: AlgebraElement, points=None, d: int = 5, tol: float = 1e-10) -> bool:
    """``U`` is unchanged by ``tau -> C0 o exp(C1 x) o tau``."""
    from .frobenius import inv as alg_inv

    alg_inv(C0)  # raises when C0 is not invertible
    if points is None:
        points = make_grid(-2, 2, 5)
    pts = np.asarray(list(points), dtype=float)
    tj = tau_eval(tau, pts[:, 0], pts[:, 1], d)
    X = TaylorJet.coordinate(tau.algebra, "x", pts[:, 0], pts[:, 1], d)
    gauged = (X * C1).exp() * tj * C0
    U1 = u_from_jet(tj).value()
    U2 = u_from_jet(gauged).value()
    return bool(np.abs(U1 - U2).max() <= tol)


def make_grid(lo: float, hi: float, num: int) -> list:
    axis = np.linspace(lo, hi, num)
    return [(float(x), float(t)) for x in axis for t in axis]


def parse_grid(text: str) -> tuple:
    """``"lo:hi:num"`` to ``(lo, hi, num)``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like lo:hi:num, got {text!r}")
    lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
    if num < 1 or hi < lo:
        raise ValueError(f"bad grid {text!r}")
    return lo, hi, num


def soliton_table(tau: TauFunction, grid: list, d: int = 5) -> dict:
    """Values of ``U`` and the KdV residual at every grid point."""
    pts = np.asarray(grid, dtype=float)
    U = u_from_tau(tau, pts[:, 0], pts[:, 1], d)
    return {"points": pts, "u": U.value(), "residual": _kdv_residual_from_u(U)}


def write_csv(stream, table: dict, names: Sequence[str] | None = None) -> None:
    u = table["u"]
    n = u.shape[-1]
    if names is None:
        names = ["v", "w"] if n == 2 else ["u"] if n == 1 else [f"u{q}" for q in range(1, n + 1)]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["x", "t", *names, *[f"residual_{nm}" for nm in names]])
    for (x, t), vals, res in zip(table["points"], u, table["residual"]):
        writer.writerow([f"{x:.6g}", f"{t:.6g}", *[f"{v:.15g}" for v in vals], *[f"{r:.3e}" for r in res]])
