"""Superposition rules built on the sl(2,R) structure.

* the basic rule for ``{x, t} = 2 b1(t)`` (KS-3 with ``c0 = 0``): every
  solution is a PGL(2,R) Moebius image of a single particular solution;
* the mixed rule expressing KS-2 solutions through two solutions of the
  time-dependent harmonic oscillator ``x'' = -b1(t) x``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ChartError, DegeneracyError, DomainError, UsageError
from .systems import CoeffLike, Trajectory, as_coefficient, generators, lie_bracket_fd


# -- PGL(2,R) ---------------------------------------------------------------------

@dataclass(frozen=True)
class PGL2Element:
    """Representative of a projective 2x2 matrix with ``det = I = +-1``."""

    alpha: float
    beta: float
    gamma: float
    delta: float
    I: int = 1

    def __post_init__(self):
        if self.I not in (1, -1):
            raise UsageError("I must be +1 or -1")
        det = self.alpha * self.delta - self.beta * self.gamma
        if abs(det - self.I) > 1e-9:
            raise DegeneracyError(f"det={det!r} does not match I={self.I}")

    @classmethod
    def normalized(cls, alpha, beta, gamma, delta) -> "PGL2Element":
        """Scale any invertible matrix to ``|det| = 1`` with ``alpha > 0`` (else ``gamma > 0``)."""
        det = alpha * delta - beta * gamma
        if det == 0.0 or not math.isfinite(det):
            raise DegeneracyError("matrix is not invertible")
        k = 1.0 / math.sqrt(abs(det))
        if alpha < 0.0 or (alpha == 0.0 and gamma < 0.0):
            k = -k
        return cls(k * alpha, k * beta, k * gamma, k * delta, 1 if det > 0.0 else -1)

    @classmethod
    def identity(cls) -> "PGL2Element":
        return cls(1.0, 0.0, 0.0, 1.0, 1)

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma, self.delta)

    def __matmul__(self, other: "PGL2Element") -> "PGL2Element":
        a, b, c, d = self.as_tuple()
        e, f, g, h = other.as_tuple()
        return PGL2Element(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h, self.I * other.I)


def mobius(A: PGL2Element, x):
    """``(alpha x + beta) / (gamma x + delta)``; works elementwise on arrays."""
    den = A.gamma * np.asarray(x, dtype=float) + A.delta
    if np.any(den == 0.0):
        raise ChartError("Moebius denominator vanishes", witness=0.0)
    out = (A.alpha * np.asarray(x, dtype=float) + A.beta) / den
    return float(out) if np.ndim(out) == 0 else out


def basic_sr_ks3(A: PGL2Element, s):
    """Prolonged Moebius map on ``(x, v, a)``.

    Sends a solution of ``{x, t} = 2 b1(t)`` (as a first-order system) to
    another solution of the same equation.  ``s`` may be a single point
    or an array of shape ``(3, ...)``.
    """
    x, v, a = (np.asarray(c, dtype=float) for c in s)
    den = A.gamma * x + A.delta
    if np.any(den == 0.0):
        raise ChartError("gamma x + delta vanishes", witness=0.0)
    if np.any(v == 0.0):
        raise DomainError("basic superposition rule needs v != 0")
    out = np.array([
        (A.alpha * x + A.beta) / den,
        A.I * v / den**2,
        A.I * (a * den - 2.0 * v * v * A.gamma) / den**3,
    ])
    return out


@dataclass
class MobiusFit:
    element: PGL2Element
    misfit: float
    warning: str | None = None


def fit_mobius_relation(x1, x2, rank_tol: float = 1e-10) -> MobiusFit:
    """Fit ``x2 = (c1 x1 + c2)/(c3 x1 + c4)`` over all samples by total least squares.

    The constraints ``c1 x1 + c2 - c3 x1 x2 - c4 x2 = 0`` are stacked and the
    right singular vector of the smallest singular value is taken.
    """
    a = _as_series(x1)
    b = _as_series(x2)
    if a.shape != b.shape:
        raise UsageError("trajectories must share one grid")
    rows = np.column_stack([a, np.ones_like(a), -a * b, -b])
    col_scale = np.linalg.norm(rows, axis=0)
    col_scale[col_scale == 0.0] = 1.0
    _, sv, vt = np.linalg.svd(rows / col_scale, full_matrices=False)
    if len(sv) < 4 or sv[-2] <= rank_tol * sv[0]:
        msg = "constraint matrix is rank deficient; returning the identity class"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        A = PGL2Element.identity()
        return MobiusFit(A, float(np.max(np.abs(b - a))), msg)
    c = vt[-1] / col_scale
    A = PGL2Element.normalized(*c)
    misfit = float(np.max(np.abs(mobius(A, a) - b)))
    return MobiusFit(A, misfit)


def _as_series(x) -> np.ndarray:
    if isinstance(x, Trajectory):
        return x.states[:, 0]
    return np.asarray(x, dtype=float)


# -- Schwarzian derivative -------------------------------------------------------------

def schwarzian_exact(v, a, j):
    """``j/v - 1.5 (a/v)^2`` for first, second and third derivatives ``v, a, j``."""
    v = np.asarray(v, dtype=float)
    if np.any(v == 0.0):
        raise DomainError("Schwarzian derivative needs a nonzero first derivative")
    out = np.asarray(j) / v - 1.5 * (np.asarray(a) / v) ** 2
    return float(out) if np.ndim(out) == 0 else out


def _fd_derivatives(f, i, h, stride):
    s = stride
    fm3, fm2, fm1, f0, fp1, fp2, fp3 = (f[i + k * s] for k in range(-3, 4))
    d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)
    d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h)
    d3 = (-fp3 + 8.0 * fp2 - 13.0 * fp1 + 13.0 * fm1 - 8.0 * fm2 + fm3) / (8.0 * h**3)
    return d1, d2, d3


def schwarzian_fd(samples, t_index, dt: float | None = None, stride: int = 1):
    """Schwarzian derivative of sampled ``x(t)`` by central differences.

    ``samples`` is a :class:`Trajectory` (first column used) or a 1-D array
    with spacing ``dt``.  Fourth-order stencils (seven points for ``x'''``)
    give all three derivatives; ``stride`` subsamples the grid, which keeps
    rounding under control on fine solver grids.  ``t_index`` may be an int
    or an integer array.
    """
    if isinstance(samples, Trajectory):
        f = samples.states[:, 0]
        dt = samples.dt if dt is None else dt
    else:
        f = np.asarray(samples, dtype=float)
    if dt is None or not dt > 0.0:
        raise UsageError("a positive sample spacing dt is required")
    if stride < 1:
        raise UsageError("stride must be >= 1")
    idx = np.asarray(t_index)
    if np.any(idx - 3 * stride < 0) or np.any(idx + 3 * stride >= len(f)):
        raise UsageError("index too close to the boundary for the centred stencil")
    h = dt * stride
    d1, d2, d3 = _fd_derivatives(f, idx, h, stride)
    if np.any(np.abs(d1) < 1e-12):
        raise DomainError("first derivative vanishes")
    return schwarzian_exact(d1, d2, d3)


# -- symmetries ---------------------------------------------------------------------

def _z_fields():
    def z1(p):
        return np.array([-1.0, 0.0, 0.0])

    def z2(p):
        return np.array([p[0], p[1], p[2]])

    def z3(p):
        x, v, a = p
        return -np.array([x * x, 2.0 * v * x, 2.0 * (a * x + v * v)])

    return {"Z1": z1, "Z2": z2, "Z3": z3}


SYMMETRIES = _z_fields()


def symmetry_residual(which: str, b1: CoeffLike, point, t: float, h: float = 1e-4) -> float:
    """Norm of ``[Z_which, X_t]`` at ``point`` for KS-3 with ``c0 = 0``."""
    try:
        z = SYMMETRIES[which]
    except KeyError:
        raise UsageError(f"unknown symmetry {which!r}") from None
    p = np.asarray(point, dtype=float)
    if p[1] == 0.0:
        raise DomainError("point must satisfy v != 0")
    bt = float(as_coefficient(b1)(t))
    n1, _, n3 = generators("ks3", c0=0.0)

    def xt(q):
        return n3(q) + bt * n1(q)

    return float(np.linalg.norm(lie_bracket_fd(z, xt, p, h)))


# -- mixed rule for KS-2 ------------------------------------------------------------

def wronskian(x1, v1, x2, v2):
    return x1 * v2 - v1 * x2


def first_integral(i: int, joint, c0: float):
    """``(x_i v + 2 x v_i)^2 / x^3 + 4 c0 x x_i^2`` for ``joint = (x, v, x_i, v_i)``.

    ``i`` only labels which oscillator solution is paired with the KS-2
    state; the formula is the same for both.
    """
    if i not in (1, 2):
        raise UsageError("first integral index must be 1 or 2")
    x, v, xi, vi = (np.asarray(c, dtype=float) for c in joint)
    if np.any(x == 0.0):
        raise DomainError("first integral is undefined at x = 0")
    out = (xi * v + 2.0 * x * vi) ** 2 / x**3 + 4.0 * c0 * x * xi * xi
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class MixedConstants:
    """Constants of the mixed rule; ``k2 = I1/(4W^2)``, ``k1 = I2/(4W^2)``."""

    k1: float
    k2: float
    branch: int
    c0: float

    def __post_init__(self):
        if self.branch not in (1, -1):
            raise UsageError("branch must be +1 or -1")

    def invariants(self, w: float):
        """The original constants ``(I1, I2)`` for Wronskian ``w``."""
        return 4.0 * w * w * self.k2, 4.0 * w * w * self.k1

    def discriminant(self, w):
        return self.k1 * self.k2 - self.c0 / (np.asarray(w) ** 2)


DISC_TOL = 1e-12


def mixed_sr_ks2(ho1, ho2, K: MixedConstants):
    """KS-2 state ``(x, v)`` from two harmonic-oscillator states.

        x = 1 / Q,  Q = k1 x1^2 + k2 x2^2 +- 2 x1 x2 sqrt(k1 k2 - c0 / W^2)
        v = -2 (k1 x1 v1 + k2 x2 v2 +- (x1 v2 + v1 x2) sqrt(...)) / Q^2

    Inputs may be scalars or equal-length arrays.  A discriminant within
    ``DISC_TOL`` of zero is snapped to zero: the square root would otherwise
    turn rounding noise of order 1e-16 into jitter of order 1e-8.
    """
    x1, v1 = (np.asarray(c, dtype=float) for c in ho1)
    x2, v2 = (np.asarray(c, dtype=float) for c in ho2)
    w = wronskian(x1, v1, x2, v2)
    if np.any(w == 0.0):
        raise DomainError("oscillator solutions are linearly dependent (W = 0)")
    disc = K.discriminant(w)
    scale = max(1.0, abs(K.k1 * K.k2))
    if np.any(disc < -DISC_TOL * scale):
        raise DomainError(f"k1 k2 - c0/W^2 is negative ({np.min(disc)!r})")
    disc = np.where(np.abs(disc) <= DISC_TOL * scale, 0.0, disc)
    root = K.branch * np.sqrt(disc)
    q = K.k1 * x1 * x1 + K.k2 * x2 * x2 + 2.0 * x1 * x2 * root
    if np.any(q == 0.0):
        raise ChartError("mixed rule denominator vanishes", witness=0.0)
    x = 1.0 / q
    v = -2.0 * (K.k1 * x1 * v1 + K.k2 * x2 * v2 + (x1 * v2 + v1 * x2) * root) / (q * q)
    if np.ndim(x) == 0:
        return np.array([float(x), float(v)])
    return np.array([x, v])


def constants_from_initial(ks2_0, ho1_0, ho2_0, c0: float, tol: float = 1e-8) -> MixedConstants:
    """Constants (and branch) of the mixed rule matching the given initial data."""
    x, v = (float(c) for c in ks2_0)
    x1, v1 = (float(c) for c in ho1_0)
    x2, v2 = (float(c) for c in ho2_0)
    if x == 0.0:
        raise DomainError("KS-2 initial position must be nonzero")
    w = wronskian(x1, v1, x2, v2)
    if w == 0.0:
        raise DomainError("oscillator initial data have zero Wronskian")
    i1 = first_integral(1, (x, v, x1, v1), c0)
    i2 = first_integral(2, (x, v, x2, v2), c0)
    k2 = i1 / (4.0 * w * w)
    k1 = i2 / (4.0 * w * w)
    best = None
    for branch in (1, -1):
        K = MixedConstants(k1, k2, branch, c0)
        try:
            img = mixed_sr_ks2((x1, v1), (x2, v2), K)
        except (DomainError, ChartError):
            continue
        err = float(np.max(np.abs(img - (x, v))) / max(1.0, abs(x), abs(v)))
        if best is None or err < best[0]:
            best = (err, K)
    if best is None or best[0] > tol:
        raise DegeneracyError("neither branch reproduces the KS-2 initial state")
    return best[1]
