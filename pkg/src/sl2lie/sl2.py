"""Exact 2x2 algebra for SL(2,R) and its Lie algebra.

Elements are stored by value as four floats, row-major
``(alpha, beta; gamma, delta)``.  Nothing here depends on a general
linear-algebra library.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

from .errors import ChartError, DegeneracyError, DomainError, UsageError

Matrix = Tuple[Tuple[float, float], Tuple[float, float]]

DET_TOL = 1e-9


@dataclass(frozen=True)
class SL2Element:
    alpha: float
    beta: float
    gamma: float
    delta: float

    @classmethod
    def identity(cls) -> "SL2Element":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_matrix(cls, m) -> "SL2Element":
        return cls(float(m[0][0]), float(m[0][1]), float(m[1][0]), float(m[1][1]))

    @property
    def det(self) -> float:
        return self.alpha * self.delta - self.beta * self.gamma

    def as_matrix(self) -> Matrix:
        return ((self.alpha, self.beta), (self.gamma, self.delta))

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.delta)

    def is_valid(self, det_tol: float = DET_TOL) -> bool:
        entries = self.as_tuple()
        return all(math.isfinite(e) for e in entries) and abs(self.det - 1.0) <= det_tol

    def check(self, det_tol: float = DET_TOL) -> "SL2Element":
        if not self.is_valid(det_tol):
            raise DegeneracyError(f"not unimodular: det={self.det!r}")
        return self

    def __matmul__(self, other: "SL2Element") -> "SL2Element":
        return compose(self, other)


@dataclass(frozen=True)
class Sl2AlgebraElement:
    """Coefficients of ``c1*a1 + c2*a2 + c3*a3``."""

    c1: float
    c2: float
    c3: float

    def as_matrix(self) -> Matrix:
        return mat_add(
            mat_scale(self.c1, basis(1)),
            mat_add(mat_scale(self.c2, basis(2)), mat_scale(self.c3, basis(3))),
        )


@dataclass(frozen=True)
class CanonicalCoords:
    lambda1: float
    lambda2: float
    lambda3: float


_BASIS = {
    1: ((0.0, 1.0), (0.0, 0.0)),
    2: ((-0.5, 0.0), (0.0, 0.5)),
    3: ((0.0, 0.0), (-1.0, 0.0)),
}


def basis(index: int) -> Matrix:
    """Matrix ``a_index`` of the sl(2,R) basis used throughout the package."""
    try:
        return _BASIS[index]
    except (KeyError, TypeError):
        raise UsageError(f"basis index must be 1, 2 or 3, got {index!r}") from None


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    return (
        (a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
        (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]),
    )


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return ((a[0][0] + b[0][0], a[0][1] + b[0][1]), (a[1][0] + b[1][0], a[1][1] + b[1][1]))


def mat_scale(s: float, a: Matrix) -> Matrix:
    return ((s * a[0][0], s * a[0][1]), (s * a[1][0], s * a[1][1]))


def commutator(a: Matrix, b: Matrix) -> Matrix:
    ab = mat_mul(a, b)
    ba = mat_mul(b, a)
    return ((ab[0][0] - ba[0][0], ab[0][1] - ba[0][1]), (ab[1][0] - ba[1][0], ab[1][1] - ba[1][1]))


def exp_basis(index: int, s: float) -> SL2Element:
    """Closed-form ``exp(s * a_index)``."""
    if index == 1:
        return SL2Element(1.0, s, 0.0, 1.0)
    if index == 2:
        return SL2Element(math.exp(-0.5 * s), 0.0, 0.0, math.exp(0.5 * s))
    if index == 3:
        return SL2Element(1.0, 0.0, -s, 1.0)
    raise UsageError(f"basis index must be 1, 2 or 3, got {index!r}")


def exp_traceless(a: Matrix, trace_tol: float = 1e-12) -> SL2Element:
    """Exponential of a traceless 2x2 matrix via Cayley-Hamilton.

    ``A^2 = -det(A) I``, so with ``theta^2 = -det(A)`` the series collapses
    to ``cosh(theta) I + sinh(theta)/theta A`` (cos/sin when ``theta^2 < 0``).
    """
    (p, q), (r, s) = a
    if abs(p + s) > trace_tol:
        raise DomainError(f"matrix is not traceless (trace={p + s!r})")
    theta2 = -(p * s - q * r)
    if theta2 > 0.0:
        th = math.sqrt(theta2)
        c, k = math.cosh(th), math.sinh(th) / th
    elif theta2 < 0.0:
        th = math.sqrt(-theta2)
        c, k = math.cos(th), math.sin(th) / th
    else:
        c, k = 1.0, 1.0
    return SL2Element(c + k * p, k * q, k * r, c + k * s)


def compose(g: SL2Element, h: SL2Element) -> SL2Element:
    return SL2Element(
        g.alpha * h.alpha + g.beta * h.gamma,
        g.alpha * h.beta + g.beta * h.delta,
        g.gamma * h.alpha + g.delta * h.gamma,
        g.gamma * h.beta + g.delta * h.delta,
    )


def inverse(g: SL2Element) -> SL2Element:
    # exact for det == 1
    return SL2Element(g.delta, -g.beta, -g.gamma, g.alpha)


def project_unimodular(g: SL2Element) -> SL2Element:
    """Rescale ``g`` by ``det(g)**-0.5`` so that its determinant is one."""
    d = g.det
    if not d > 0.0:
        raise DegeneracyError(f"cannot project element with det={d!r} (step too large?)")
    k = 1.0 / math.sqrt(d)
    return SL2Element(k * g.alpha, k * g.beta, k * g.gamma, k * g.delta)


def decompose_second_kind(g: SL2Element) -> CanonicalCoords:
    """Coordinates with ``g = exp(-l3 a3) exp(-l2 a2) exp(-l1 a1)``.

    Only defined on the chart ``alpha > 0`` around the identity.
    """
    if not g.alpha > 0.0:
        raise ChartError("second-kind chart requires alpha > 0", witness=g.alpha)
    return CanonicalCoords(-g.beta / g.alpha, 2.0 * math.log(g.alpha), g.gamma / g.alpha)


def from_second_kind(c: CanonicalCoords) -> SL2Element:
    return compose(
        exp_basis(3, -c.lambda3),
        compose(exp_basis(2, -c.lambda2), exp_basis(1, -c.lambda1)),
    )
