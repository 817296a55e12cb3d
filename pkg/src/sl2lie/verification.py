"""Property suites run by ``sl2lie verify``.

Each check yields ``{"check", "value", "threshold", "pass"}``.  All random
points come from one seeded generator, so a suite is reproducible
byte-for-byte for a given seed.
"""
from __future__ import annotations

import math

import numpy as np

from . import actions as act
from .reconstruction import cross_validate, invert_ks2, invert_ks3, invert_mp, invert_riccati, reconstruct
from .reduced import solve_reduced
from .sl2 import SL2Element, basis, commutator, exp_traceless, mat_scale
from .superposition import (
    MixedConstants,
    PGL2Element,
    basic_sr_ks3,
    constants_from_initial,
    first_integral,
    mixed_sr_ks2,
    mobius,
    schwarzian_fd,
    symmetry_residual,
    wronskian,
)
from .systems import Coefficient, SolverConfig, SystemKind, eval_field, generators, integrate, lie_bracket_fd

SUITES = ("algebra", "actions", "reconstruction", "superposition")


def _check(name, value, threshold, strict=False):
    value = float(value)
    ok = value < threshold if strict else value <= threshold
    return {"check": name, "value": value, "threshold": threshold, "pass": bool(ok)}


def random_point(family: str, rng) -> np.ndarray:
    """A random point inside the domain of ``family`` (bounded away from singular sets)."""
    sgn = rng.choice([-1.0, 1.0])
    if family == "riccati":
        return rng.uniform(-1.5, 1.5, 1)
    if family == "ks2":
        return np.array([sgn * rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)])
    if family == "ks3":
        return np.array([rng.uniform(-1.0, 1.0), sgn * rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)])
    if family in ("milne_pinney", "harmonic_oscillator"):
        return np.array([rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)])
    if family == "wei_norman":
        return rng.uniform(-1.0, 1.0, 3)
    raise ValueError(family)


def random_near_identity(rng, scale=0.3) -> SL2Element:
    c = rng.uniform(-scale, scale, 3)
    return exp_traceless(((c[0], c[1]), (c[2], -c[0])))


# -- algebra ----------------------------------------------------------------------

RELATIONS = ((1, 3, 2, 2.0), (1, 2, 1, 1.0), (2, 3, 3, 1.0))


def suite_algebra(rng, points=20):
    out = []
    for i, j, k, coef in RELATIONS:
        lhs = commutator(basis(i), basis(j))
        rhs = mat_scale(coef, basis(k))
        err = max(abs(lhs[r][s] - rhs[r][s]) for r in range(2) for s in range(2))
        out.append(_check(f"algebra.matrix.[a{i},a{j}]", err, 0.0))
    params = {"ks2": {"c0": 0.7}, "ks3": {"c0": 0.7}, "riccati": {}, "milne_pinney": {"c": 1.0}, "wei_norman": {}}
    for family, kw in params.items():
        fields = generators(family, **kw)
        pts = [random_point(family, rng) for _ in range(points)]
        for i, j, k, coef in RELATIONS:
            err = max(
                float(np.max(np.abs(lie_bracket_fd(fields[i - 1], fields[j - 1], p, 1e-4) - coef * fields[k - 1](p))))
                for p in pts
            )
            out.append(_check(f"algebra.{family}.[V{i},V{j}]", err, 1e-5))
    return out


# -- actions ----------------------------------------------------------------------------

ACTION_PARAMS = {
    "riccati": {},
    "ks2": {"c0": 0.7},
    "ks3": {"c0": 0.7},
    "milne_pinney": {"c": 1.0},
    "harmonic_oscillator": {},
    "wei_norman": {},
}


def suite_actions(rng, tuples=50, points=20):
    out = []
    e = SL2Element.identity()
    for tag, kw in ACTION_PARAMS.items():
        id_err = 0.0
        comp_err = 0.0
        for _ in range(tuples):
            p = random_point(tag, rng)
            g, h = random_near_identity(rng), random_near_identity(rng)
            id_err = max(id_err, float(np.max(np.abs(act.apply_action(tag, e, p, **kw) - p))))
            lhs = act.apply_action(tag, g @ h, p, **kw)
            rhs = act.apply_action(tag, g, act.apply_action(tag, h, p, **kw), **kw)
            comp_err = max(comp_err, float(np.max(np.abs(lhs - rhs))))
        out.append(_check(f"actions.{tag}.identity", id_err, 1e-8))
        out.append(_check(f"actions.{tag}.composition", comp_err, 1e-8))
        pts = [random_point(tag, rng) for _ in range(points)]
        for index in (1, 2, 3):
            res = max(act.fundamental_field_check(tag, index, p, 1e-4, **kw) for p in pts)
            out.append(_check(f"actions.{tag}.fundamental_field.{index}", res, 1e-5))
    # F_g > 0 everywhere when c0 > 0
    fmin = math.inf
    for _ in range(200):
        g = random_near_identity(rng, scale=2.0)
        p = random_point("ks2", rng)
        fmin = min(fmin, act.ks2_F(g, p, 0.7))
    out.append({"check": "actions.ks2.global_for_positive_c0", "value": fmin, "threshold": 0.0,
                "pass": bool(fmin > 0.0)})
    # a' equals d v' / d lambda3 along exp(-lambda3 a3)
    worst = 0.0
    for _ in range(points):
        p = random_point("ks3", rng)
        lam, hh = rng.uniform(-0.3, 0.3), 1e-5
        vp = act.act_ks3(SL2Element(1.0, 0.0, lam + hh, 1.0), p, 0.7)[1]
        vm = act.act_ks3(SL2Element(1.0, 0.0, lam - hh, 1.0), p, 0.7)[1]
        a_here = act.act_ks3(SL2Element(1.0, 0.0, lam, 1.0), p, 0.7)[2]
        worst = max(worst, abs((vp - vm) / (2 * hh) - a_here))
    out.append(_check("actions.ks3.acceleration_consistency", worst, 1e-5))
    return out


# -- reconstruction -------------------------------------------------------------------------

SIMULTANEOUS = (
    ("riccati", SystemKind("riccati"), (0.0,)),
    ("milne_pinney", SystemKind("milne_pinney", c=1.0), (1.0, 0.0)),
    ("harmonic_oscillator", SystemKind("harmonic_oscillator"), (1.0, 0.0)),
    ("ks2", SystemKind("ks2", c0=1.0), (1.0, 0.0)),
    ("ks3", SystemKind("ks3", c0=1.0), (0.0, 1.0, 0.0)),
    ("wei_norman", SystemKind("wei_norman"), (0.0, 0.0, 0.0)),
)


def simultaneous_checks(rng=None, dt=1e-4):
    """One reduced path for ``b1 = cos t`` against direct RK4 for every system."""
    out = []
    cfg = SolverConfig(dt=dt)
    b = Coefficient.cosine()
    path = solve_reduced(b, 0.0, 1.0, cfg)
    for name, kind, s0 in SIMULTANEOUS:
        rep = cross_validate(kind, b, s0, cfg, 0.0, 1.0, path=path)
        value = rep.sup_error if not (rep.meta["reconstruct_truncated"] or rep.meta["direct_truncated"]) else math.inf
        out.append(_check(f"reconstruction.simultaneous.{name}", value, 1e-5, strict=True))
    out.append(_check("reconstruction.reduced.det_drift", float(np.max(np.abs(path.dets - 1.0))), 1e-9))
    return out


def closed_form_checks(rng=None, dt=1e-4):
    out = []
    cfg = SolverConfig(dt=dt)
    p1 = solve_reduced(1.0, 0.0, 1.0, cfg)
    ric = reconstruct(SystemKind("riccati"), p1, [0.0])
    out.append(_check("reconstruction.closed_form.riccati_tan",
                      np.max(np.abs(ric.states[:, 0] - np.tan(ric.times))), 1e-6, strict=True))
    p0 = solve_reduced(0.0, 0.0, 1.0, cfg)
    t = p0.times
    exact = np.column_stack([np.ones_like(t), np.zeros_like(t), t, np.ones_like(t)])
    out.append(_check("reconstruction.closed_form.reduced_b1_zero", np.max(np.abs(p0.entries - exact)), 1e-9, strict=True))
    ks3 = integrate(SystemKind("ks3", c0=0.0), 0.0, [0.0, 1.0, 0.0], cfg)
    out.append(_check("reconstruction.closed_form.ks3_linear", np.max(np.abs(ks3.states[:, 0] - ks3.times)), 1e-8, strict=True))
    return out


def inversion_checks(rng=None, dt=1e-4):
    """Each inversion recovers the ``b1 = cos t`` path it was fed."""
    out = []
    cfg = SolverConfig(dt=dt)
    path = solve_reduced(Coefficient.cosine(), 0.0, 1.0, cfg)
    ks2 = SystemKind("ks2", c0=1.0)
    inv = invert_ks2(reconstruct(ks2, path, [1.0, 0.0]), reconstruct(ks2, path, [2.0, 0.0]), 1.0)
    out.append(_check("reconstruction.invert.ks2", np.max(np.abs(inv.entries - path.entries)), 1e-5, strict=True))
    k3 = SystemKind("ks3", c0=1.0)
    inv = invert_ks3(reconstruct(k3, path, [0.0, 1.0, 0.0]), reconstruct(k3, path, [0.0, 2.0, 0.0]), 1.0)
    out.append(_check("reconstruction.invert.ks3", np.max(np.abs(inv.entries - path.entries)), 1e-5, strict=True))
    ric = SystemKind("riccati")
    inv = invert_riccati(*(reconstruct(ric, path, [x]) for x in (0.0, 1.0, -1.0)))
    out.append(_check("reconstruction.invert.riccati", np.max(np.abs(inv.entries - path.entries)), 1e-5, strict=True))
    mp = SystemKind("milne_pinney", c=1.0)
    inv = invert_mp(reconstruct(mp, path, [1.0, 0.0]), reconstruct(mp, path, [2.0, 0.0]), 1.0)
    err = np.max(np.abs(inv.entries - path.entries)) if len(inv) == len(path) else math.inf
    out.append(_check("reconstruction.invert.milne_pinney", err, 1e-4, strict=True))
    return out


def suite_reconstruction(rng, dt=1e-4):
    return simultaneous_checks(rng, dt) + closed_form_checks(rng, dt) + inversion_checks(rng, dt)


# -- superposition ----------------------------------------------------------------------------

def _random_pgl(rng, scale=0.3) -> PGL2Element:
    m = np.array([1.0, 0.0, 0.0, 1.0]) + rng.uniform(-scale, scale, 4)
    return PGL2Element.normalized(*m)


def schwarzian_checks(rng, samples=10):
    """Moebius invariance, the basic rule and the Lie symmetries of KS-3."""
    out = []
    h = 1e-3
    t = np.arange(0, 1001) * h
    x = np.tan(t)
    idx = np.arange(3, len(t) - 3)
    base = schwarzian_fd(x, idx, dt=h)
    worst = 0.0
    for _ in range(samples):
        A = _random_pgl(rng)
        while np.min(np.abs(A.gamma * x + A.delta)) < 0.3:
            A = _random_pgl(rng)
        worst = max(worst, float(np.max(np.abs(schwarzian_fd(mobius(A, x), idx, dt=h) - base))))
    out.append(_check("superposition.schwarzian.mobius_invariance", worst, 1e-5, strict=True))

    cfg = SolverConfig(dt=1e-4)
    b = Coefficient.cosine()
    ks3 = integrate(SystemKind("ks3", c0=0.0), b, [0.0, 1.0, 0.0], cfg)
    A = PGL2Element.normalized(1.0, 0.5, 0.3, 1.2)
    img = basic_sr_ks3(A, ks3.states.T)[0]
    stride = 10
    k = np.arange(3 * stride, len(img) - 3 * stride)
    err = np.max(np.abs(schwarzian_fd(img, k, dt=cfg.dt, stride=stride) - 2.0 * np.cos(ks3.times[k])))
    out.append(_check("superposition.basic_rule.schwarzian", err, 1e-4, strict=True))

    A = PGL2Element.normalized(1.0, 1.0, 1.0, 2.0)
    tt = np.linspace(0.0, 1.0, 101)
    states = np.array([tt, np.ones_like(tt), np.zeros_like(tt)])
    img = basic_sr_ks3(A, states)[0]
    exact = (A.alpha * tt + A.beta) / (A.gamma * tt + A.delta)
    out.append(_check("superposition.basic_rule.linear_seed", np.max(np.abs(img - exact)), 1e-10))

    for which in ("Z1", "Z2", "Z3"):
        worst = 0.0
        for coeff in (Coefficient.constant(0.0), Coefficient.constant(1.0), Coefficient.cosine()):
            for _ in range(20):
                p = random_point("ks3", rng)
                worst = max(worst, symmetry_residual(which, coeff, p, float(rng.uniform(0.0, 1.0))))
        out.append(_check(f"superposition.symmetry.{which}", worst, 1e-5, strict=True))
    return out


def suite_superposition(rng, samples=10):
    return schwarzian_checks(rng, samples) + mixed_checks(rng)


def ode_residual(kind: SystemKind, b1, times, states) -> float:
    """Sup-norm mismatch between a 4th-order central difference of ``states`` and the field.

    ``states`` has shape ``(K, dim)`` on the uniform grid ``times`` (``K >= 5``).
    """
    states = np.asarray(states, dtype=float)
    if len(times) < 5:
        return 0.0
    h = times[1] - times[0]
    y = states.T
    dy = (-y[:, 4:] + 8 * y[:, 3:-1] - 8 * y[:, 1:-3] + y[:, :-4]) / (12 * h)
    rhs = eval_field(kind, b1, np.asarray(times)[2:-2], y[:, 2:-2])
    return float(np.max(np.abs(dy - rhs)))


def mixed_checks(rng, dt=1e-4):
    """First integrals, Wronskian, the mixed KS-2 rule and its constants."""
    out = []
    cfg = SolverConfig(dt=dt)
    c0 = 1.0
    ks2 = SystemKind("ks2", c0=c0)
    ho = SystemKind("harmonic_oscillator")
    drift_f = drift_w = resid = rt = 0.0
    for b in (Coefficient.constant(0.0), Coefficient.constant(1.0), Coefficient.cosine()):
        h1 = integrate(ho, b, [1.0, 0.0], cfg)
        h2 = integrate(ho, b, [0.0, 1.0], cfg)
        k = integrate(ks2, b, [1.0, 0.5], cfg)
        w = wronskian(h1.states[:, 0], h1.states[:, 1], h2.states[:, 0], h2.states[:, 1])
        drift_w = max(drift_w, float(np.max(np.abs(w - w[0]))))
        for i, hh in ((1, h1), (2, h2)):
            f = first_integral(i, (k.states[:, 0], k.states[:, 1], hh.states[:, 0], hh.states[:, 1]), c0)
            drift_f = max(drift_f, float(np.max(np.abs(f - f[0])) / abs(f[0])))
        for _ in range(10):
            k1 = rng.uniform(0.5, 3.0)
            k2 = rng.uniform(c0 / k1 + 0.1, c0 / k1 + 3.0)
            for branch in (1, -1):
                K = MixedConstants(k1, k2, branch, c0)
                x, v = mixed_sr_ks2(h1.states.T, h2.states.T, K)
                resid = max(resid, ode_residual(ks2, b, h1.times, np.column_stack([x, v])))
        K = constants_from_initial(k.states[0], h1.states[0], h2.states[0], c0)
        xy = mixed_sr_ks2(h1.states.T, h2.states.T, K)
        rt = max(rt, float(np.max(np.abs(xy.T - k.states))))
    out.append(_check("superposition.mixed.first_integral_drift", drift_f, 1e-6, strict=True))
    out.append(_check("superposition.mixed.wronskian_drift", drift_w, 1e-8, strict=True))
    out.append(_check("superposition.mixed.ks2_residual", resid, 1e-6, strict=True))
    out.append(_check("superposition.mixed.constants_round_trip", rt, 1e-5, strict=True))
    return out


def run_suite(name: str, seed: int = 42):
    """Run one suite (or ``all``) and return the list of check records."""
    if name != "all" and name not in SUITES:
        raise KeyError(name)
    rng = np.random.default_rng(seed)
    names = SUITES if name == "all" else (name,)
    funcs = {
        "algebra": suite_algebra,
        "actions": suite_actions,
        "reconstruction": suite_reconstruction,
        "superposition": suite_superposition,
    }
    checks = []
    for n in names:
        checks.extend(funcs[n](rng))
    return checks
