"""The t-dependent vector fields of the sl(2,R) family and a direct RK oracle.

Every system here has the form ``X_t = V3 + b1(t) V1`` for a triple of
vector fields ``(V1, V2, V3)`` closing on the sl(2,R) relations
``[V1,V3] = 2 V2, [V1,V2] = V1, [V2,V3] = V3``.  The direct integrator
is the reference used to validate group actions and superposition rules.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DomainError, UsageError

TAGS = (
    "riccati",
    "milne_pinney",
    "harmonic_oscillator",
    "ks2",
    "ks3",
    "wei_norman",
    "reduced_sl2",
)

STATE_DIM = {
    "riccati": 1,
    "milne_pinney": 2,
    "harmonic_oscillator": 2,
    "ks2": 2,
    "ks3": 3,
    "wei_norman": 3,
    "reduced_sl2": 4,
}

STATE_NAMES = {
    "riccati": ("x",),
    "milne_pinney": ("x", "v"),
    "harmonic_oscillator": ("x", "v"),
    "ks2": ("x", "v"),
    "ks3": ("x", "v", "a"),
    "wei_norman": ("x", "y", "z"),
    "reduced_sl2": ("alpha", "beta", "gamma", "delta"),
}


# -- coefficients -----------------------------------------------------------

@dataclass(frozen=True)
class Coefficient:
    """A scalar function of one real variable.

    ``kind`` is one of ``constant`` (``[value]``), ``polynomial``
    (coefficients low to high), ``cosine`` (``[amplitude, frequency,
    phase]``) or ``table`` (flattened ``(t, value)`` pairs, linearly
    interpolated).  The same class serves as ``c0(x)`` for KS-3, where the
    argument is the position instead of time.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.kind == "constant":
            if len(params) != 1:
                raise UsageError("constant coefficient takes exactly one value")
        elif self.kind == "polynomial":
            if not params:
                raise UsageError("polynomial coefficient needs at least one term")
        elif self.kind == "cosine":
            if len(params) not in (1, 2, 3):
                raise UsageError("cosine coefficient takes amplitude[, frequency[, phase]]")
        elif self.kind == "table":
            if len(params) < 4 or len(params) % 2:
                raise UsageError("table coefficient needs at least two (t, value) pairs")
            ts = params[0::2]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise UsageError("table abscissae must be strictly increasing")
        else:
            raise UsageError(f"unknown coefficient kind {self.kind!r}")
        if not all(math.isfinite(p) for p in params):
            raise UsageError("coefficient parameters must be finite")

    @classmethod
    def constant(cls, value: float) -> "Coefficient":
        return cls("constant", (value,))

    @classmethod
    def cosine(cls, amplitude=1.0, frequency=1.0, phase=0.0) -> "Coefficient":
        return cls("cosine", (amplitude, frequency, phase))

    @classmethod
    def polynomial(cls, *coeffs) -> "Coefficient":
        return cls("polynomial", tuple(coeffs))

    @classmethod
    def table(cls, pairs) -> "Coefficient":
        flat = []
        for t, v in pairs:
            flat.extend((t, v))
        return cls("table", tuple(flat))

    @classmethod
    def from_spec(cls, spec) -> "Coefficient":
        """Build from a number or a ``{"kind": ..., "params": [...]}`` mapping."""
        if isinstance(spec, (int, float)):
            return cls.constant(float(spec))
        if isinstance(spec, Coefficient):
            return spec
        try:
            kind = spec["kind"]
            params = spec.get("params", [])
        except (TypeError, KeyError, AttributeError):
            raise UsageError(f"malformed coefficient spec {spec!r}") from None
        if kind == "table":
            params = [p for pair in params for p in pair] if params and isinstance(params[0], (list, tuple)) else params
        return cls(kind, tuple(params))

    def to_spec(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or (self.kind == "polynomial" and all(p == 0.0 for p in self.params[1:]))

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_spec(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __call__(self, t):
        p = self.params
        if self.kind == "constant":
            return p[0] + 0.0 * np.asarray(t) if np.ndim(t) else p[0]
        if self.kind == "polynomial":
            acc = 0.0
            for c in reversed(p):
                acc = acc * t + c
            return acc
        if self.kind == "cosine":
            amp = p[0]
            freq = p[1] if len(p) > 1 else 1.0
            phase = p[2] if len(p) > 2 else 0.0
            return amp * np.cos(freq * t + phase) if np.ndim(t) else amp * math.cos(freq * t + phase)
        ts, vs = p[0::2], p[1::2]
        lo, hi = np.min(t), np.max(t)
        if lo < ts[0] - 1e-12 or hi > ts[-1] + 1e-12:
            raise DomainError(f"table coefficient evaluated outside [{ts[0]}, {ts[-1]}]")
        out = np.interp(t, ts, vs)
        return float(out) if np.ndim(t) == 0 else out


CurveCoefficient = Coefficient
CoeffLike = Union[Coefficient, float]


def as_coefficient(c: CoeffLike) -> Coefficient:
    return c if isinstance(c, Coefficient) else Coefficient.constant(float(c))


# -- system kinds -------------------------------------------------------------

@dataclass(frozen=True)
class SystemKind:
    """A member of the family together with its structural constants.

    ``c0`` is used by ``ks2``/``ks3`` (a constant or a curve coefficient in
    ``x``); ``c`` by ``milne_pinney`` (must be positive).
    ``harmonic_oscillator`` is Milne-Pinney with ``c = 0``.
    """

    tag: str
    c0: CoeffLike = 0.0
    c: float = 0.0

    def __post_init__(self):
        if self.tag not in TAGS:
            raise UsageError(f"unknown system tag {self.tag!r}")
        if self.tag == "milne_pinney" and not self.c > 0.0:
            raise UsageError("milne_pinney requires c > 0")
        if self.tag == "harmonic_oscillator" and self.c != 0.0:
            raise UsageError("harmonic_oscillator is milne_pinney with c = 0")

    @property
    def dim(self) -> int:
        return STATE_DIM[self.tag]

    @property
    def names(self):
        return STATE_NAMES[self.tag]

    @property
    def c0_coefficient(self) -> Coefficient:
        return as_coefficient(self.c0)

    @property
    def c0_value(self) -> float:
        """The constant value of ``c0``; raises if ``c0`` depends on ``x``."""
        coeff = self.c0_coefficient
        if not coeff.is_constant:
            raise UsageError("this operation requires a constant c0")
        return float(coeff.params[0])


def check_state(kind: SystemKind, s) -> np.ndarray:
    """Validate a phase point against the domain of ``kind``."""
    s = np.asarray(s, dtype=float)
    if s.shape[0] != kind.dim:
        raise UsageError(f"{kind.tag} state has dimension {kind.dim}, got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise DomainError(f"non-finite {kind.tag} state")
    if kind.tag == "ks2" and np.any(s[0] == 0.0):
        raise DomainError("ks2 is undefined at x = 0")
    if kind.tag == "ks3" and np.any(s[1] == 0.0):
        raise DomainError("ks3 is undefined at v = 0")
    if kind.tag == "milne_pinney" and np.any(s[0] <= 0.0):
        raise DomainError("milne_pinney requires x > 0")
    if kind.tag == "reduced_sl2":
        det = s[0] * s[3] - s[1] * s[2]
        if np.any(np.abs(det - 1.0) > 1e-6):
            raise DomainError(f"reduced_sl2 state is not unimodular (det={det})")
    return s


def eval_field(kind: SystemKind, b1: CoeffLike, t: float, s) -> np.ndarray:
    """Right-hand side of the system ``kind`` at ``(t, s)``.

    ``s`` may carry extra trailing axes; the formulas are elementwise.
    """
    return _raw_field(kind, as_coefficient(b1), t, check_state(kind, s))


def _raw_field(kind: SystemKind, coeff: Coefficient, t, s) -> np.ndarray:
    b = coeff(t)
    tag = kind.tag
    if tag == "riccati":
        x = s[0]
        return np.array([b + x * x])
    if tag in ("milne_pinney", "harmonic_oscillator"):
        x, v = s
        force = -b * x
        if kind.c:
            force = force + kind.c / x**3
        return np.array([v, force])
    if tag == "ks2":
        x, v = s
        c0 = kind.c0_coefficient(x)
        return np.array([v, 1.5 * v * v / x - 2.0 * c0 * x**3 + 2.0 * b * x])
    if tag == "ks3":
        x, v, a = s
        c0 = kind.c0_coefficient(x)
        return np.array([v, a, 1.5 * a * a / v - 2.0 * c0 * v**3 + 2.0 * b * v])
    if tag == "wei_norman":
        x, y, _ = s
        return np.array([b + x * x, 2.0 * x, -np.exp(y)])
    # dg/dt = -(a3 + b1 a1) g, written entrywise
    alpha, beta, gamma, delta = s
    return np.array([-b * gamma, -b * delta, alpha, beta])


# -- generator families ----------------------------------------------------------

Field = Callable[[np.ndarray], np.ndarray]

FAMILIES = ("ks2", "ks3", "riccati", "milne_pinney", "harmonic_oscillator", "wei_norman")


def generators(family: str, c0: float = 0.0, c: float = 0.0):
    """The three vector fields ``(V1, V2, V3)`` spanning the Lie algebra of ``family``.

    For ks2 these are ``M1, M2, M3``, for ks3 ``N1, N2, N3``, otherwise the
    ``W`` fields of the respective system.
    """
    if family == "ks2":
        def v1(p):
            return np.array([0.0 * p[0], 2.0 * p[0]])

        def v2(p):
            return np.array([p[0], 2.0 * p[1]])

        def v3(p):
            x, v = p
            if np.any(x == 0.0):
                raise DomainError("M3 is undefined at x = 0")
            return np.array([v, 1.5 * v * v / x - 2.0 * c0 * x**3])
    elif family == "ks3":
        def v1(p):
            return np.array([0.0 * p[0], 0.0 * p[0], 2.0 * p[1]])

        def v2(p):
            return np.array([0.0 * p[0], p[1], 2.0 * p[2]])

        def v3(p):
            x, v, a = p
            if np.any(v == 0.0):
                raise DomainError("N3 is undefined at v = 0")
            return np.array([v, a, 1.5 * a * a / v - 2.0 * c0 * v**3])
    elif family == "riccati":
        def v1(p):
            return np.array([1.0 + 0.0 * p[0]])

        def v2(p):
            return np.array([p[0]])

        def v3(p):
            return np.array([p[0] * p[0]])
    elif family in ("milne_pinney", "harmonic_oscillator"):
        cc = c if family == "milne_pinney" else 0.0

        def v1(p):
            return np.array([0.0 * p[0], -p[0]])

        def v2(p):
            return np.array([-0.5 * p[0], 0.5 * p[1]])

        def v3(p):
            x, v = p
            if cc and np.any(x == 0.0):
                raise DomainError("W3 is undefined at x = 0 for c != 0")
            return np.array([v, cc / x**3 if cc else 0.0 * x])
    elif family == "wei_norman":
        def v1(p):
            return np.array([1.0 + 0.0 * p[0], 0.0 * p[0], 0.0 * p[0]])

        def v2(p):
            return np.array([p[0], 1.0 + 0.0 * p[0], 0.0 * p[0]])

        def v3(p):
            x, y, _ = p
            return np.array([x * x, 2.0 * x, -np.exp(y)])
    else:
        raise UsageError(f"unknown generator family {family!r}")
    return v1, v2, v3


def lie_bracket_fd(field_a: Field, field_b: Field, point, h: float = 1e-4) -> np.ndarray:
    """Central-difference approximation of the bracket ``[A, B] = (DB)A - (DA)B``.

    Uses directional derivatives, so only four extra field evaluations are
    needed.  The error is O(h^2) componentwise.
    """
    if not 1e-6 <= h <= 1e-3:
        raise UsageError("h must lie in [1e-6, 1e-3]")
    p = np.asarray(point, dtype=float)
    try:
        a = np.asarray(field_a(p), dtype=float)
        b = np.asarray(field_b(p), dtype=float)
        db_a = (np.asarray(field_b(p + h * a)) - np.asarray(field_b(p - h * a))) / (2.0 * h)
        da_b = (np.asarray(field_a(p + h * b)) - np.asarray(field_a(p - h * b))) / (2.0 * h)
    except (ZeroDivisionError, FloatingPointError) as exc:
        raise DomainError(f"field evaluation failed inside the stencil: {exc}") from None
    out = db_a - da_b
    if not np.all(np.isfinite(out)):
        raise DomainError("field evaluation failed inside the stencil")
    return out


# -- direct integration -------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    method: str = "rk4"
    dt: float = 1e-4
    tol: float = 1e-10
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in ("rk4", "rkf45"):
            raise UsageError(f"unknown solver method {self.method!r}")
        if self.method == "rk4" and not self.dt > 0.0:
            raise UsageError("dt must be positive")
        if self.method == "rkf45" and not (self.tol > 0.0 and self.dt > 0.0):
            raise UsageError("rkf45 needs tol > 0 and an output spacing dt > 0")


DEFAULT_SOLVER = SolverConfig()


@dataclass
class Trajectory:
    """States sampled on the uniform grid ``t0 + k*dt``.

    ``states`` has shape ``(len(times), dim)``.  A truncated trajectory
    stops before ``t1``; ``meta["failure_time"]`` records where.
    """

    tag: str
    times: np.ndarray
    states: np.ndarray
    t0: float
    t1: float
    dt: float
    meta: dict = field(default_factory=dict)

    @property
    def truncated(self) -> bool:
        return bool(self.meta.get("truncated", False))

    @property
    def failure_time(self):
        return self.meta.get("failure_time")

    def __len__(self):
        return len(self.times)

    def column(self, name_or_index) -> np.ndarray:
        if isinstance(name_or_index, str):
            name_or_index = STATE_NAMES[self.tag].index(name_or_index)
        return self.states[:, name_or_index]

    def samples(self):
        return list(zip(self.times.tolist(), self.states))


def make_grid(t0: float, t1: float, dt: float) -> np.ndarray:
    if not t1 >= t0:
        raise UsageError("t1 must not precede t0")
    if not dt > 0.0:
        raise UsageError("dt must be positive")
    n = int(round((t1 - t0) / dt))
    if n and abs(n * dt - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise UsageError(f"interval length {t1 - t0} is not a multiple of dt={dt}")
    return t0 + dt * np.arange(n + 1)


_FEHLBERG_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_FEHLBERG_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_FEHLBERG_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_FEHLBERG_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # difference to the embedded second-order (midpoint) result, a cheap
    # upper bound on the local error
    err = float(np.max(np.abs(y_new - (y + h * k2))))
    return y_new, err


def _rkf45_step(f, t, y, h):
    ks = []
    for ci, row in zip(_FEHLBERG_C, _FEHLBERG_A):
        yi = y
        for aij, kj in zip(row, ks):
            yi = yi + h * aij * kj
        ks.append(f(t + ci * h, yi))
    y4 = y + h * sum(b * k for b, k in zip(_FEHLBERG_B4, ks))
    y5 = y + h * sum(b * k for b, k in zip(_FEHLBERG_B5, ks))
    return y4, y5


def _still_valid(kind: SystemKind, y_old, y_new) -> bool:
    if not np.all(np.isfinite(y_new)):
        return False
    tag = kind.tag
    if tag == "ks2":
        return bool(y_new[0] != 0.0 and np.sign(y_new[0]) == np.sign(y_old[0]))
    if tag == "ks3":
        return bool(y_new[1] != 0.0 and np.sign(y_new[1]) == np.sign(y_old[1]))
    if tag == "milne_pinney":
        return bool(y_new[0] > 0.0)
    if tag == "reduced_sl2":
        return bool(y_new[0] * y_new[3] - y_new[1] * y_new[2] > 0.0)
    return True


def _project(y):
    det = y[0] * y[3] - y[1] * y[2]
    return y / math.sqrt(det)


def integrate(kind: SystemKind, b1: CoeffLike, s0, cfg: SolverConfig = DEFAULT_SOLVER,
              t0: float = 0.0, t1: float = 1.0) -> Trajectory:
    """Integrate ``kind`` directly from ``s0`` and sample on the ``cfg.dt`` grid.

    RK4 steps exactly on the grid; RKF45 adapts its step inside each grid
    interval.  For ``reduced_sl2`` each accepted step is projected back
    onto ``det = 1``.  If a step would leave the domain of the system the
    run stops and the trajectory is returned truncated.
    """
    coeff = as_coefficient(b1)
    y = check_state(kind, np.array(s0, dtype=float).reshape(-1)).copy()
    if not t1 > t0:
        if t1 == t0:
            times = np.array([t0])
            return Trajectory(kind.tag, times, y[None, :], t0, t1, cfg.dt,
                              {"solver": cfg.method, "max_step_error": 0.0, "truncated": False})
        raise UsageError("t1 must be greater than t0")
    times = make_grid(t0, t1, cfg.dt)
    dt = (t1 - t0) / (len(times) - 1)
    reduced = kind.tag == "reduced_sl2"

    def f(t, y):
        return _raw_field(kind, coeff, t, y)

    out = np.empty((len(times), kind.dim))
    out[0] = y
    max_err = 0.0
    steps = 0
    h_adapt = min(dt, 1e-2)
    meta = {"solver": cfg.method, "truncated": False}
    k = 0
    errstate = np.errstate(divide="ignore", invalid="ignore", over="ignore")
    try:
        errstate.__enter__()
        for k in range(1, len(times)):
            ta = times[k - 1]
            if cfg.method == "rk4":
                y_new, err = _rk4_step(f, ta, y, dt)
                steps += 1
            else:
                y_new, err, h_adapt, n = _adaptive_interval(f, ta, times[k], y, cfg.tol, h_adapt)
                steps += n
            if reduced and y_new[0] * y_new[3] - y_new[1] * y_new[2] > 0.0:
                y_new = _project(y_new)
            if not _still_valid(kind, y, y_new):
                raise DomainError(f"state left the domain of {kind.tag}")
            if steps > cfg.max_steps:
                raise DomainError("max_steps exceeded")
            max_err = max(max_err, err)
            y = y_new
            out[k] = y
        k = len(times)
    except (DomainError, FloatingPointError, ZeroDivisionError, OverflowError) as exc:
        meta.update(truncated=True, failure_time=float(times[k]), reason=str(exc))
    finally:
        errstate.__exit__(None, None, None)
    meta["max_step_error"] = max_err
    meta["steps"] = steps
    return Trajectory(kind.tag, times[:k].copy(), out[:k].copy(), t0, t1, dt, meta)


def _adaptive_interval(f, ta, tb, y, tol, h):
    """RKF45 from ``ta`` to exactly ``tb``; returns state, max error, next h, steps."""
    t = ta
    max_err = 0.0
    n = 0
    while t < tb:
        h = min(h, tb - t)
        if tb - t - h < 1e-14 * max(1.0, abs(tb)):
            h = tb - t
        y4, y5 = _rkf45_step(f, t, y, h)
        err = float(np.max(np.abs(y5 - y4)))
        scale = tol * (1.0 + float(np.max(np.abs(y))))
        n += 1
        if err <= scale or h < 1e-14:
            t = tb if h == tb - t else t + h
            y = y4
            max_err = max(max_err, err)
            fac = 2.0 if err == 0.0 else min(2.0, 0.9 * (scale / err) ** 0.2)
            h = h * max(fac, 0.2)
        else:
            h = h * max(0.2, 0.9 * (scale / err) ** 0.25)
        if n > 100_000:
            raise DomainError("rkf45 step size collapsed")
    return y, max_err, h, n


def integrate_batch(kind: SystemKind, b1: CoeffLike, states, cfg: SolverConfig = DEFAULT_SOLVER,
                    t0: float = 0.0, t1: float = 1.0):
    """Fixed-step RK4 for many initial states at once; returns final states.

    ``states`` has shape ``(N, dim)``.  Rows that leave the domain of the
    system come back as NaN; the second return value flags them.
    """
    coeff = as_coefficient(b1)
    y = np.array(states, dtype=float).T.copy()
    if y.shape[0] != kind.dim:
        raise UsageError(f"{kind.tag} states have dimension {kind.dim}")
    for col in y.T:
        check_state(kind, col)
    times = make_grid(t0, t1, cfg.dt)
    dt = (t1 - t0) / max(len(times) - 1, 1)
    failed = np.zeros(y.shape[1], dtype=bool)

    def f(t, z):
        return _raw_field(kind, coeff, t, z)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for k in range(1, len(times)):
            y_new, _ = _rk4_step(f, times[k - 1], y, dt)
            bad = ~np.all(np.isfinite(y_new), axis=0)
            if kind.tag == "ks2":
                bad |= np.sign(y_new[0]) != np.sign(y[0])
            elif kind.tag == "ks3":
                bad |= np.sign(y_new[1]) != np.sign(y[1])
            elif kind.tag == "milne_pinney":
                bad |= ~(y_new[0] > 0.0)
            failed |= bad
            y_new[:, failed] = np.nan
            y = y_new
    return y.T, failed
