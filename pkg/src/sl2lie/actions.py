"""Explicit SL(2,R) actions whose fundamental vector fields are the system generators.

All actions are left actions normalised so that

    d/ds act(exp(-s a_i), p) |_{s=0} = V_i(p)

with ``V_i`` the generators returned by :func:`sl2lie.systems.generators`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ChartError, DomainError, UsageError
from .sl2 import SL2Element, exp_basis
from .systems import generators


@dataclass(frozen=True)
class ActionDomainReport:
    """Whether ``(g, point)`` lies in the chart of an action.

    ``witness`` is the quantity that must stay away from zero (or stay
    positive), e.g. the Moebius denominator or ``F_g``.
    """

    valid: bool
    witness: float


def _sign(x: float) -> float:
    return 1.0 if x >= 0.0 else -1.0


# -- Riccati / Wei-Norman ---------------------------------------------------------

def riccati_domain(g: SL2Element, x: float) -> ActionDomainReport:
    den = -g.gamma * x + g.delta
    return ActionDomainReport(den != 0.0 and math.isfinite(den), den)


def act_riccati(g: SL2Element, x: float) -> float:
    """Moebius action ``(alpha x - beta) / (-gamma x + delta)``."""
    x = float(np.ravel(x)[0]) if np.ndim(x) else float(x)
    den = -g.gamma * x + g.delta
    if den == 0.0:
        raise ChartError("Moebius denominator vanishes", witness=den)
    return (g.alpha * x - g.beta) / den


def act_wn(g: SL2Element, s) -> np.ndarray:
    x, y, z = (float(c) for c in s)
    den = g.delta - g.gamma * x
    if den == 0.0:
        raise ChartError("delta - gamma x vanishes", witness=den)
    return np.array([
        (g.alpha * x - g.beta) / den,
        y - math.log(den * den),
        z - math.exp(y) * g.gamma / den,
    ])


# -- KS-2 -------------------------------------------------------------------------

def ks2_F(g: SL2Element, s, c0: float) -> float:
    x, v = (float(c) for c in s)
    return (g.delta - g.gamma * v / (2.0 * x)) ** 2 + c0 * x * x * g.gamma**2


def ks2_domain(g: SL2Element, s, c0: float) -> ActionDomainReport:
    if float(s[0]) == 0.0:
        return ActionDomainReport(False, 0.0)
    f = ks2_F(g, s, c0)
    return ActionDomainReport(f > 0.0, f)


def act_ks2(g: SL2Element, s, c0: float = 0.0) -> np.ndarray:
    """Action on ``T R_0`` with fundamental fields ``M1, M2, M3``.

    Requires ``F_g(x, v) > 0``, which always holds when ``c0 > 0``.
    """
    x, v = (float(c) for c in s)
    if x == 0.0:
        raise DomainError("ks2 action is undefined at x = 0")
    a, b, c, d = g.as_tuple()
    w = d - c * v / (2.0 * x)
    f = w * w + c0 * x * x * c * c
    if not f > 0.0:
        raise ChartError("F_g is not positive", witness=f)
    return np.array([x / f, ((v * a - 2.0 * x * b) * w - 2.0 * c0 * x**3 * a * c) / (f * f)])


# -- KS-3 -------------------------------------------------------------------------

def _ks3_quadratic(g: SL2Element, s, c0: float):
    """Coefficients ``(A, B, C)`` of ``Fbar(l) = A l^2 + B l + C``."""
    _, v, acc = (float(c) for c in s)
    alpha, beta = g.alpha, g.beta
    k = (acc * alpha - 2.0 * v * beta) / (2.0 * v)
    return k * k + c0 * v * v * alpha * alpha, -2.0 * k / alpha, 1.0 / (alpha * alpha)


def ks3_Fbar(g: SL2Element, s, c0: float, lam: float) -> float:
    """``(1/alpha - (a alpha - 2 v beta) lam / (2 v))^2 + c0 v^2 alpha^2 lam^2``."""
    A, B, C = _ks3_quadratic(g, s, c0)
    return (A * lam + B) * lam + C


def ks3_domain(g: SL2Element, s, c0: float) -> ActionDomainReport:
    """Minimum of ``Fbar`` over the segment ``[0, gamma/alpha]``."""
    if float(s[1]) == 0.0 or g.alpha == 0.0:
        return ActionDomainReport(False, 0.0)
    A, B, C = _ks3_quadratic(g, s, c0)
    end = g.gamma / g.alpha
    lo, hi = min(0.0, end), max(0.0, end)
    candidates = [lo, hi]
    if A > 0.0:
        vertex = -B / (2.0 * A)
        if lo < vertex < hi:
            candidates.append(vertex)
    fmin = min((A * l + B) * l + C for l in candidates)
    return ActionDomainReport(fmin > 0.0, fmin)


def act_ks3(g: SL2Element, s, c0: float = 0.0, quad_tol: float = 1e-10) -> np.ndarray:
    """Action on ``O_2 = {v != 0}`` with fundamental fields ``N1, N2, N3`` (constant ``c0``).

    The position update needs ``int_0^{gamma/alpha} 1/Fbar``, evaluated by
    adaptive quadrature; the acceleration uses the analytic derivative of
    ``1/Fbar``.
    """
    x, v, _ = (float(c) for c in s)
    if v == 0.0:
        raise DomainError("ks3 action is undefined at v = 0")
    if g.alpha == 0.0:
        raise ChartError("ks3 action needs alpha != 0", witness=0.0)
    report = ks3_domain(g, s, c0)
    if not report.valid:
        raise ChartError("Fbar vanishes on the integration segment", witness=report.witness)
    A, B, C = _ks3_quadratic(g, s, c0)
    end = g.gamma / g.alpha
    if end == 0.0:
        integral = 0.0
    else:
        integral, _ = quad(lambda l: 1.0 / ((A * l + B) * l + C), 0.0, end,
                           epsabs=quad_tol, epsrel=quad_tol, limit=200)
    f_end = (A * end + B) * end + C
    df_end = 2.0 * A * end + B
    return np.array([x + v * integral, v / f_end, -v * df_end / (f_end * f_end)])


# -- Milne-Pinney / harmonic oscillator ---------------------------------------

def _mp_parts(g: SL2Element, x: float, v: float, c: float):
    a, b, cc, d = g.as_tuple()
    p = a * v + b * x
    q = cc * v + d * x
    s = p * q + c * a * cc / (x * x)
    den = p * p + c * a * a / (x * x)
    return p, s, den


def act_mp(g: SL2Element, s, c: float) -> np.ndarray:
    """Action on ``T R_+`` for the Milne-Pinney system with ``c > 0``.

    The velocity is computed as ``S / xbar`` with
    ``S = (alpha v + beta x)(gamma v + delta x) + c alpha gamma / x^2``.
    This equals ``kappa * sqrt(...)`` with ``kappa = sign(S)`` but stays
    accurate when the radicand is near zero.
    """
    x, v = (float(comp) for comp in s)
    if not x > 0.0:
        raise DomainError("milne_pinney action requires x > 0")
    if not c > 0.0:
        raise DomainError("milne_pinney action requires c > 0")
    _, sval, den = _mp_parts(g, x, v, c)
    if den == 0.0:
        raise ChartError("(alpha v + beta x)^2 + c alpha^2 / x^2 vanishes", witness=den)
    xbar = math.sqrt((c + sval * sval) / den)
    return np.array([xbar, sval / xbar])


def act_mp_radical(g: SL2Element, s, c: float) -> np.ndarray:
    """Same map written with the sign factor and the square root of the velocity."""
    x, v = (float(comp) for comp in s)
    p, sval, den = _mp_parts(g, x, v, c)
    xbar = math.sqrt((c + sval * sval) / den)
    kappa = _sign(sval)
    rad = p * p + c * g.alpha**2 / (x * x) - c / (xbar * xbar)
    return np.array([xbar, kappa * math.sqrt(max(rad, 0.0))])


def act_ho(g: SL2Element, s) -> np.ndarray:
    """Linear action for the harmonic oscillator: ``(delta x + gamma v, beta x + alpha v)``.

    On ``x > 0`` it agrees with the Milne-Pinney formula at ``c = 0`` and
    extends it to the whole plane.
    """
    x, v = (float(comp) for comp in s)
    return np.array([g.delta * x + g.gamma * v, g.beta * x + g.alpha * v])


# -- dispatch & checks -------------------------------------------------------------

def apply_action(tag: str, g: SL2Element, s, c0: float = 0.0, c: float = 0.0,
                 quad_tol: float = 1e-10) -> np.ndarray:
    """Apply the action belonging to the system ``tag`` and return an array."""
    if tag == "riccati":
        return np.array([act_riccati(g, s)])
    if tag == "ks2":
        return act_ks2(g, s, c0)
    if tag == "ks3":
        return act_ks3(g, s, c0, quad_tol)
    if tag == "milne_pinney":
        return act_mp(g, s, c)
    if tag == "harmonic_oscillator":
        return act_ho(g, s)
    if tag == "wei_norman":
        return act_wn(g, s)
    raise UsageError(f"no action for system {tag!r}")


def fundamental_field_check(tag: str, index: int, point, h: float = 1e-4,
                            c0: float = 0.0, c: float = 0.0) -> float:
    """Norm of ``d/ds act(exp(-s a_index), p)|_0 - V_index(p)`` by central differences."""
    p = np.atleast_1d(np.asarray(point, dtype=float))
    try:
        plus = apply_action(tag, exp_basis(index, -h), p, c0=c0, c=c, quad_tol=1e-13)
        minus = apply_action(tag, exp_basis(index, h), p, c0=c0, c=c, quad_tol=1e-13)
    except (ChartError, DomainError) as exc:
        raise DomainError(f"stencil left the action domain: {exc}") from None
    field = generators(tag, c0=c0, c=c)[index - 1]
    return float(np.linalg.norm((plus - minus) / (2.0 * h) - field(p)))
