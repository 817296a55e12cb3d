"""General solutions from one reduced path, and reduced paths from particular solutions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .actions import apply_action
from .errors import ChartError, DegeneracyError, DomainError, UsageError
from .reduced import ReducedPath, solve_reduced
from .systems import (
    DEFAULT_SOLVER,
    CoeffLike,
    SolverConfig,
    SystemKind,
    Trajectory,
    as_coefficient,
    check_state,
    integrate,
)


@dataclass
class ResidualReport:
    sup_error: float
    times: np.ndarray
    errors: np.ndarray
    compared: str
    meta: dict = field(default_factory=dict)

    @property
    def per_sample(self):
        return list(zip(self.times.tolist(), self.errors.tolist()))

    def to_dict(self) -> dict:
        return {"sup_error": self.sup_error, "compared": self.compared, "samples": len(self.times), **self.meta}


# -- forward ----------------------------------------------------------------------

def reconstruct(kind: SystemKind, path: ReducedPath, s0, quad_tol: float = 1e-10) -> Trajectory:
    """Solution of ``kind`` through ``s0`` obtained as ``act(g(t_k), s0)``.

    Stops (truncated trajectory) at the first sample where ``(g, s0)`` leaves
    the chart of the action.
    """
    if kind.tag == "reduced_sl2":
        raise UsageError("reconstruct applies to the systems acted on, not to reduced_sl2")
    c0 = kind.c0_value if kind.tag in ("ks2", "ks3") else 0.0
    s0 = check_state(kind, np.array(s0, dtype=float).reshape(-1))
    n = len(path)
    out = np.empty((n, kind.dim))
    meta = {"solver": "group-action", "source_path": path.b1_fingerprint, "truncated": bool(path.truncated)}
    if path.truncated:
        meta["failure_time"] = path.meta.get("failure_time")
    k = n
    for i in range(n):
        try:
            out[i] = apply_action(kind.tag, path.element(i), s0, c0=c0, c=kind.c, quad_tol=quad_tol)
        except (ChartError, DomainError) as exc:
            k = i
            meta.update(truncated=True, failure_time=float(path.times[i]), reason=str(exc))
            break
    t0 = float(path.times[0])
    t1 = float(path.meta.get("t1", path.times[-1]))
    return Trajectory(kind.tag, path.times[:k].copy(), out[:k], t0, t1, path.dt, meta)


def cross_validate(kind: SystemKind, b1: CoeffLike, s0, cfg: SolverConfig = DEFAULT_SOLVER,
                   t0: float = 0.0, t1: float = 1.0, path: ReducedPath | None = None) -> ResidualReport:
    """Sup-norm gap between the action-based and the directly integrated solution.

    Pass ``path`` to reuse one reduced solution for several systems.
    """
    coeff = as_coefficient(b1)
    if path is None:
        path = solve_reduced(coeff, t0, t1, cfg)
    elif path.b1_fingerprint != coeff.fingerprint:
        raise UsageError("reduced path was computed for a different b1")
    rec = reconstruct(kind, path, s0)
    direct = integrate(kind, coeff, s0, cfg, t0, t1)
    n = min(len(rec), len(direct))
    if n and not np.allclose(rec.times[:n], direct.times[:n], rtol=0, atol=1e-12):
        raise UsageError("reconstructed and direct trajectories are on different grids")
    errors = np.max(np.abs(rec.states[:n] - direct.states[:n]), axis=1) if n else np.zeros(0)
    meta = {
        "system": kind.tag,
        "reconstruct_truncated": rec.truncated,
        "direct_truncated": direct.truncated,
    }
    if rec.truncated:
        meta["reconstruct_failure_time"] = rec.failure_time
    if direct.truncated:
        meta["direct_failure_time"] = direct.failure_time
    sup = float(np.max(errors)) if n else math.inf
    return ResidualReport(sup, rec.times[:n], errors, f"{kind.tag}: group action vs direct {cfg.method}", meta)


# -- inverse ------------------------------------------------------------------------

def _shared_grid(*trajs: Trajectory) -> np.ndarray:
    ref = trajs[0].times
    for tr in trajs[1:]:
        if len(tr.times) != len(ref) or not np.allclose(tr.times, ref, rtol=0, atol=1e-12):
            raise DegeneracyError("input trajectories do not share one grid")
    if len(ref) == 0:
        raise DegeneracyError("empty trajectory")
    return ref


def _pick_sign(value: float, pred: float) -> float:
    return value if abs(value - pred) <= abs(-value - pred) else -value


def _ks_type_inversion(pos, vel, c0: float, label: str):
    """Shared algebra for the KS-2 and KS-3 inversions.

    ``pos[i]``/``vel[i]`` hold the two sampled columns (x, v for KS-2; v, a
    for KS-3) of solution ``i``; both must start with zero velocity.
    Per sample it solves

        -p_i(0) q_i(t) / (2 p_i(t)^2) = beta delta + c0 p_i(0)^2 alpha gamma
        p_i(0) / p_i(t)               = delta^2    + c0 p_i(0)^2 gamma^2

    and fixes the square-root signs by continuity from ``g(0) = e``.
    """
    if c0 == 0.0:
        raise DegeneracyError(f"{label}: c0 = 0 makes the linear system singular")
    p10, p20 = pos[0][0], pos[1][0]
    if p10 == 0.0 or p20 == 0.0:
        raise DegeneracyError(f"{label}: initial values must be nonzero")
    scale = max(1.0, abs(p10), abs(p20))
    for q in vel:
        if abs(q[0]) > 1e-10 * scale:
            raise DegeneracyError(f"{label}: solutions must start with zero derivative")
    m = np.array([[1.0, c0 * p10**2], [1.0, c0 * p20**2]])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) <= 1e-12 * abs(c0) * scale**2:
        raise DegeneracyError(f"{label}: squared initial values coincide")
    minv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
    w = np.vstack([-p0 * q / (2.0 * p * p) for p0, p, q in ((p10, pos[0], vel[0]), (p20, pos[1], vel[1]))])
    r = np.vstack([p10 / pos[0], p20 / pos[1]])
    bd, ag = minv @ w
    d2, g2 = minv @ r
    clipped = int(np.sum(d2 < 0.0) + np.sum(g2 < 0.0))
    d_abs = np.sqrt(np.clip(d2, 0.0, None))
    g_abs = np.sqrt(np.clip(g2, 0.0, None))

    n = len(bd)
    out = np.empty((n, 4))
    out[0] = (1.0, 0.0, 0.0, 1.0)
    prev2 = prev = out[0]
    for k in range(1, n):
        pred = 2.0 * prev - prev2 if k > 1 else prev
        delta = _pick_sign(d_abs[k], pred[3])
        a_sign = 1.0 if pred[0] >= 0.0 else -1.0
        gamma = math.copysign(g_abs[k], ag[k] * a_sign) if ag[k] != 0.0 else 0.0
        if abs(delta) >= abs(gamma):
            beta = bd[k] / delta
            alpha = (1.0 + beta * gamma) / delta
        else:
            alpha = ag[k] / gamma
            beta = (alpha * delta - 1.0) / gamma
        out[k] = (alpha, beta, gamma, delta)
        prev2, prev = prev, out[k]
    meta = {"method": label, "clipped_squares": clipped}
    if clipped:
        meta["warning"] = f"{clipped} negative squares clipped to zero"
    return out, meta


def _finish(times, entries, meta, fingerprint="inverted") -> ReducedPath:
    dets = entries[:, 0] * entries[:, 3] - entries[:, 1] * entries[:, 2]
    meta["max_det_drift"] = float(np.max(np.abs(dets - 1.0)))
    meta.setdefault("truncated", False)
    return ReducedPath(times.copy(), entries, fingerprint, meta)


def invert_ks2(x1: Trajectory, x2: Trajectory, c0: float) -> ReducedPath:
    """Reduced path with ``g(0) = e`` from two KS-2 solutions starting at rest."""
    times = _shared_grid(x1, x2)
    entries, meta = _ks_type_inversion(
        (x1.states[:, 0], x2.states[:, 0]), (x1.states[:, 1], x2.states[:, 1]), c0, "invert_ks2")
    return _finish(times, entries, meta)


def invert_ks3(x1: Trajectory, x2: Trajectory, c0: float) -> ReducedPath:
    """As :func:`invert_ks2` with ``(x, v)`` replaced by ``(v, a)``."""
    times = _shared_grid(x1, x2)
    entries, meta = _ks_type_inversion(
        (x1.states[:, 1], x2.states[:, 1]), (x1.states[:, 2], x2.states[:, 2]), c0, "invert_ks3")
    return _finish(times, entries, meta)


def invert_riccati(x1: Trajectory, x2: Trajectory, x3: Trajectory) -> ReducedPath:
    """Reduced path from three Riccati solutions with distinct initial values.

    Each solution gives ``alpha x_i(0) - beta + gamma x_i(0) x_i(t) - delta x_i(t) = 0``;
    the null vector of the 3x4 system is obtained from signed 3x3 minors.
    """
    times = _shared_grid(x1, x2, x3)
    xs = np.vstack([tr.states[:, 0] for tr in (x1, x2, x3)])
    x0 = xs[:, 0]
    if min(abs(x0[0] - x0[1]), abs(x0[0] - x0[2]), abs(x0[1] - x0[2])) <= 1e-12 * max(1.0, *np.abs(x0)):
        raise DegeneracyError("invert_riccati: initial values must be pairwise distinct")
    n = xs.shape[1]
    rows = np.empty((n, 3, 4))
    rows[:, :, 0] = x0[None, :]
    rows[:, :, 1] = -1.0
    rows[:, :, 2] = (x0[:, None] * xs).T
    rows[:, :, 3] = -xs.T
    null = np.empty((n, 4))
    for j in range(4):
        minor = np.delete(rows, j, axis=2)
        null[:, j] = (-1) ** j * np.linalg.det(minor)
    norm = np.linalg.norm(null, axis=1)
    row_scale = np.max(np.abs(rows), axis=(1, 2)) ** 3
    if np.any(norm <= 1e-12 * row_scale):
        k = int(np.argmax(norm <= 1e-12 * row_scale))
        raise DegeneracyError(f"invert_riccati: rank < 3 at t={times[k]}")
    dets = null[:, 0] * null[:, 3] - null[:, 1] * null[:, 2]
    if np.any(dets <= 0.0):
        k = int(np.argmax(dets <= 0.0))
        raise DegeneracyError(f"invert_riccati: null vector has det={dets[k]} <= 0 at t={times[k]}")
    entries = null / np.sqrt(dets)[:, None]
    ref = np.array([1.0, 0.0, 0.0, 1.0])
    for k in range(n):
        if np.dot(entries[k], ref) < 0.0:
            entries[k] = -entries[k]
        ref = entries[k]
    return _finish(times, entries, {"method": "invert_riccati"})


def _mp_residual(g, xs0, vs0, xt, vt, c):
    a, b, cc, d = g
    res = np.empty(5)
    jac = np.zeros((5, 4))
    for i in range(2):
        x0, v0, X, V = xs0[i], vs0[i], xt[i], vt[i]
        p = a * v0 + b * x0
        q = cc * v0 + d * x0
        s = p * q + c * a * cc / (x0 * x0)
        dd = p * p + c * a * a / (x0 * x0)
        ds = np.array([v0 * q + c * cc / (x0 * x0), x0 * q, p * v0 + c * a / (x0 * x0), p * x0])
        ddd = np.array([2.0 * p * v0 + 2.0 * c * a / (x0 * x0), 2.0 * p * x0, 0.0, 0.0])
        res[2 * i] = X * X * dd - c - s * s
        jac[2 * i] = X * X * ddd - 2.0 * s * ds
        res[2 * i + 1] = X * V - s
        jac[2 * i + 1] = -ds
    res[4] = a * d - b * cc - 1.0
    jac[4] = (d, -cc, -b, a)
    return res, jac


def invert_mp(s1: Trajectory, s2: Trajectory, c: float, max_iter: int = 50,
              tol: float = 1e-13) -> ReducedPath:
    """Reduced path from two Milne-Pinney solutions by warm-started damped Gauss-Newton.

    The unknowns ``(alpha, beta, gamma, delta)`` must satisfy
    ``act_mp(g, s_i(0)) = s_i(t)`` for both solutions and ``det g = 1``.
    The action equations are used in the polynomial form
    ``xbar^2 D - c - S^2 = 0`` and ``xbar vbar - S = 0``.
    """
    if not c > 0.0:
        raise DegeneracyError("invert_mp requires c > 0")
    times = _shared_grid(s1, s2)
    xs = np.vstack([s1.states[:, 0], s2.states[:, 0]])
    vs = np.vstack([s1.states[:, 1], s2.states[:, 1]])
    if np.any(xs <= 0.0):
        raise DegeneracyError("invert_mp requires x > 0 along both solutions")
    xs0, vs0 = xs[:, 0], vs[:, 0]
    if abs(xs0[0] - xs0[1]) <= 1e-12 * max(1.0, *xs0) and abs(vs0[0] - vs0[1]) <= 1e-12:
        raise DegeneracyError("invert_mp: the two solutions start at the same point")

    n = len(times)
    out = np.empty((n, 4))
    out[0] = (1.0, 0.0, 0.0, 1.0)
    meta = {"method": "invert_mp", "truncated": False}
    max_iters_used = 0
    for k in range(1, n):
        g = 2.0 * out[k - 1] - out[k - 2] if k > 1 else out[0].copy()
        res, jac = _mp_residual(g, xs0, vs0, xs[:, k], vs[:, k], c)
        rn = np.linalg.norm(res)
        converged = rn < tol
        it = 0
        while not converged and it < max_iter:
            it += 1
            step = np.linalg.lstsq(jac, -res, rcond=None)[0]
            lam = 1.0
            while True:
                trial = g + lam * step
                tres, tjac = _mp_residual(trial, xs0, vs0, xs[:, k], vs[:, k], c)
                tn = np.linalg.norm(tres)
                if tn < rn or lam < 1e-6:
                    break
                lam *= 0.5
            g, res, jac, rn = trial, tres, tjac, tn
            converged = rn < tol or np.linalg.norm(lam * step) < 1e-15 * max(1.0, np.linalg.norm(g))
        max_iters_used = max(max_iters_used, it)
        if not converged:
            meta.update(truncated=True, failure_time=float(times[k]),
                        reason=f"Newton did not converge in {max_iter} iterations")
            meta["max_newton_iterations"] = max_iters_used
            return _finish(times[:k], out[:k].copy(), meta)
        out[k] = g
    meta["max_newton_iterations"] = max_iters_used
    return _finish(times, out, meta)
