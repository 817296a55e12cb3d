import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sl2lie.errors import DegeneracyError, DomainError, UsageError
from sl2lie.superposition import (
    MixedConstants,
    PGL2Element,
    basic_sr_ks3,
    constants_from_initial,
    first_integral,
    fit_mobius_relation,
    mixed_sr_ks2,
    mobius,
    schwarzian_exact,
    schwarzian_fd,
    symmetry_residual,
    wronskian,
)
from sl2lie.systems import Coefficient, SolverConfig, SystemKind, integrate
from sl2lie.verification import ode_residual

CFG = SolverConfig(dt=1e-3)
COS = Coefficient.cosine()
coef = st.floats(-2.0, 2.0, allow_nan=False)


def pgl(vals):
    a, b, c, d = vals
    return PGL2Element.normalized(a, b, c, d)


def test_pgl_basics():
    A = PGL2Element.normalized(2.0, 0.0, 0.0, 0.5)
    assert mobius(A, 1.0) == pytest.approx(4.0)
    assert mobius(PGL2Element.identity(), 0.3) == 0.3
    B = PGL2Element.normalized(-2.0, 0.0, 0.0, -0.5)
    assert B.as_tuple() == A.as_tuple()
    N = PGL2Element.normalized(0.0, 1.0, 1.0, 0.0)
    assert N.I == -1.0
    with pytest.raises(Exception):
        PGL2Element.normalized(1.0, 2.0, 2.0, 4.0)


@given(st.lists(st.floats(-0.4, 0.4), min_size=8, max_size=8), st.floats(-0.3, 0.3))
def test_mobius_composition(vals, x):
    A = pgl([1 + vals[0], vals[1], vals[2], 1 + vals[3]])
    B = pgl([1 + vals[4], vals[5], vals[6], 1 + vals[7]])
    for M in (A, B, A @ B):
        if abs(M.gamma * x + M.delta) < 1e-2:
            return
    if abs(B.gamma * x + B.delta) < 1e-2 or abs(A.gamma * mobius(B, x) + A.delta) < 1e-2:
        return
    lhs = mobius(A, mobius(B, x))
    assert lhs == pytest.approx(mobius(A @ B, x), rel=1e-9, abs=1e-9)


def test_fit_mobius_relation():
    x1 = np.linspace(-0.5, 0.5, 50)
    A = PGL2Element.normalized(1.0, 0.5, 0.3, 1.2)
    fit = fit_mobius_relation(x1, mobius(A, x1))
    assert fit.misfit < 1e-8
    np.testing.assert_allclose(fit.element.as_tuple()[:4], A.as_tuple()[:4], atol=1e-8)
    same = fit_mobius_relation(x1, x1)
    np.testing.assert_allclose(same.element.as_tuple()[:4], (1.0, 0.0, 0.0, 1.0), atol=1e-12)
    with pytest.warns(RuntimeWarning):
        flat = fit_mobius_relation(np.ones(10), np.ones(10))
    assert flat.warning and flat.element.as_tuple()[:4] == (1.0, 0.0, 0.0, 1.0)


def test_fit_relates_two_ks3_solutions():
    kind = SystemKind("ks3", c0=0.0)
    a = integrate(kind, COS, [0.0, 1.0, 0.0], CFG)
    b = integrate(kind, COS, [0.5, 2.0, -1.0], CFG)
    assert fit_mobius_relation(a, b).misfit < 1e-5


def test_schwarzian_exact_examples():
    assert schwarzian_exact(1.0, 0.0, 0.0) == 0.0
    assert schwarzian_exact(1.0, 1.0, 1.0) == pytest.approx(-0.5)
    with pytest.raises(DomainError):
        schwarzian_exact(0.0, 1.0, 1.0)


def test_schwarzian_fd_examples():
    t = np.arange(0, 1001) * 1e-3
    assert abs(schwarzian_fd(t, 500, dt=1e-3)) < 1e-6
    k = 300
    assert schwarzian_fd(np.tan(t), k, dt=1e-3) == pytest.approx(2.0, abs=1e-4)
    mob = (2 * t + 1) / (0.5 * t + 3)
    assert abs(schwarzian_fd(mob, 400, dt=1e-3)) < 1e-6
    with pytest.raises(UsageError):
        schwarzian_fd(t, 1, dt=1e-3)


@given(st.lists(st.floats(-0.3, 0.3), min_size=4, max_size=4))
def test_schwarzian_mobius_invariance(v):
    A = pgl([1 + v[0], v[1], v[2], 1 + v[3]])
    t = np.arange(0, 1001) * 1e-3
    x = np.tan(t)
    idx = np.arange(3, 998, 50)
    if np.min(np.abs(A.gamma * x + A.delta)) < 0.2:
        return
    np.testing.assert_allclose(schwarzian_fd(mobius(A, x), idx, dt=1e-3), schwarzian_fd(x, idx, dt=1e-3), atol=1e-5)


def test_basic_rule_examples():
    s = np.array([0.3, 1.2, -0.4])
    np.testing.assert_allclose(basic_sr_ks3(PGL2Element.identity(), s), s)
    t = np.linspace(0, 1, 11)
    A = PGL2Element.normalized(1.0, 1.0, 1.0, 2.0)
    out = basic_sr_ks3(A, np.array([t, np.ones_like(t), np.zeros_like(t)]))
    np.testing.assert_allclose(out[0], (t + 1) / (t + 2), atol=1e-15)


def test_basic_rule_maps_solutions_to_solutions():
    kind = SystemKind("ks3", c0=0.0)
    tr = integrate(kind, COS, [0.0, 1.0, 0.0], CFG)
    A = PGL2Element.normalized(1.0, 0.5, 0.3, 1.2)
    img = basic_sr_ks3(A, tr.states.T).T
    assert ode_residual(kind, COS, tr.times, img) < 1e-6
    direct = integrate(kind, COS, img[0], CFG)
    np.testing.assert_allclose(direct.states, img, atol=1e-9)


@pytest.mark.parametrize("which,b1,point,t", [
    ("Z1", COS, (1.0, 1.0, 0.0), 0.5),
    ("Z2", 0.0, (1.0, 2.0, 3.0), 0.2),
    ("Z3", 1.0, (2.0, 1.0, 1.0), 0.0),
])
def test_symmetry_examples(which, b1, point, t):
    assert symmetry_residual(which, b1, point, t) < 1e-5


def test_symmetry_errors():
    with pytest.raises(UsageError):
        symmetry_residual("Z4", 0.0, (1, 1, 1), 0.0)
    with pytest.raises(DomainError):
        symmetry_residual("Z1", 0.0, (1, 0, 1), 0.0)


def test_first_integral_and_wronskian_examples():
    assert first_integral(1, (1.0, 0.0, 0.0, 0.0), 1.0) == 0.0
    assert first_integral(1, (1.0, 0.0, 1.0, 0.0), 1.0) == 4.0
    t = np.linspace(0, 1, 5)
    np.testing.assert_allclose(wronskian(np.cos(t), -np.sin(t), np.sin(t), np.cos(t)), 1.0)
    assert wronskian(1.0, 2.0, 2.0, 4.0) == 0.0
    with pytest.raises(UsageError):
        first_integral(3, (1, 0, 1, 0), 1.0)


def test_mixed_rule_cos_sin_pair():
    t = np.arange(0, 1001) * 1e-3
    ho1 = (np.cos(t), -np.sin(t))
    ho2 = (np.sin(t), np.cos(t))
    K = MixedConstants(1.0, 1.0, 1, 1.0)
    x, v = mixed_sr_ks2(ho1, ho2, K)
    assert ode_residual(SystemKind("ks2", c0=1.0), 1.0, t, np.column_stack([x, v])) < 1e-6


@pytest.mark.parametrize("branch", [1, -1])
def test_mixed_rule_velocity_consistency(branch):
    t = np.arange(0, 1001) * 1e-3
    K = MixedConstants(1.5, 2.0, branch, 1.0)
    x, v = mixed_sr_ks2((np.cos(t), -np.sin(t)), (np.sin(t), np.cos(t)), K)
    dx = (-x[4:] + 8 * x[3:-1] - 8 * x[1:-3] + x[:-4]) / 12e-3
    assert np.max(np.abs(dx - v[2:-2])) < 1e-5


def test_mixed_rule_ratio_form():
    x1, v1 = 0.7, 0.2
    x, v = mixed_sr_ks2((x1, v1), (0.1, 1.0), MixedConstants(2.0, 0.0, 1, 0.0))
    assert x == pytest.approx(1.0 / (2.0 * x1 * x1))
    assert v == pytest.approx(-2.0 * 2.0 * x1 * v1 / (2.0 * x1 * x1) ** 2)


def test_mixed_rule_rejects_negative_discriminant():
    with pytest.raises(DomainError):
        mixed_sr_ks2((1.0, 0.0), (0.0, 1.0), MixedConstants(0.5, 1.0, 1, 1.0))
    with pytest.raises(DomainError):
        mixed_sr_ks2((1.0, 0.0), (2.0, 0.0), MixedConstants(1.0, 1.0, 1, 0.0))


def test_constants_from_initial_example():
    K = constants_from_initial((1.0, 0.0), (1.0, 0.0), (0.0, 1.0), 1.0)
    assert (K.k1, K.k2) == (pytest.approx(1.0), pytest.approx(1.0))
    assert K.invariants(1.0) == (pytest.approx(4.0), pytest.approx(4.0))
    with pytest.raises(DomainError):
        constants_from_initial((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), 1.0)


@pytest.mark.parametrize("b1", [0.0, 1.0, COS])
@pytest.mark.parametrize("ks2_0", [(1.0, 0.5), (-0.5, 2.0), (2.0, -1.0)])
def test_constants_round_trip(b1, ks2_0):
    c0 = 1.0
    ks2 = integrate(SystemKind("ks2", c0=c0), b1, ks2_0, CFG)
    ho = SystemKind("harmonic_oscillator")
    h1 = integrate(ho, b1, [1.0, 0.0], CFG)
    h2 = integrate(ho, b1, [0.0, 1.0], CFG)
    K = constants_from_initial(ks2.states[0], h1.states[0], h2.states[0], c0)
    out = mixed_sr_ks2(h1.states.T, h2.states.T, K).T
    assert np.max(np.abs(out - ks2.states)) < 1e-5


def test_first_integrals_are_conserved():
    c0 = 0.8
    ks2 = integrate(SystemKind("ks2", c0=c0), COS, [1.0, 0.3], CFG)
    h = integrate(SystemKind("harmonic_oscillator"), COS, [0.4, 1.0], CFG)
    f = first_integral(1, (ks2.states[:, 0], ks2.states[:, 1], h.states[:, 0], h.states[:, 1]), c0)
    assert np.max(np.abs(f - f[0])) / abs(f[0]) < 1e-6


def test_constants_unmatched_raise():
    with pytest.raises(DegeneracyError):
        constants_from_initial((1.0, 0.0), (1.0, 0.0), (0.0, 1.0), 1.0, tol=-1.0)
