import numpy as np
import pytest

from sl2lie.errors import DegeneracyError, UsageError
from sl2lie.reconstruction import (
    cross_validate,
    invert_ks2,
    invert_ks3,
    invert_mp,
    invert_riccati,
    reconstruct,
)
from sl2lie.reduced import solve_reduced
from sl2lie.systems import Coefficient, SolverConfig, SystemKind, integrate

CFG = SolverConfig(dt=1e-3)
COS = Coefficient.cosine()


@pytest.fixture(scope="module")
def cos_path():
    return solve_reduced(COS, 0.0, 1.0, CFG)


def test_reconstruct_examples():
    p0 = solve_reduced(0.0, 0.0, 1.0, CFG)
    tr = reconstruct(SystemKind("riccati"), p0, [0.0])
    assert np.all(tr.states == 0.0)
    p1 = solve_reduced(1.0, 0.0, 1.0, CFG)
    tr = reconstruct(SystemKind("riccati"), p1, [0.0])
    assert np.max(np.abs(tr.states[:, 0] - np.tan(tr.times))) < 1e-6
    rep = cross_validate(SystemKind("ks2", c0=1.0), 0.0, [1.0, 0.0], CFG, path=p0)
    assert rep.sup_error < 1e-6


@pytest.mark.parametrize("kind,s0", [
    (SystemKind("riccati"), [0.3]),
    (SystemKind("wei_norman"), [0.0, 0.0, 0.0]),
    (SystemKind("ks3", c0=1.0), [0.0, 1.0, 0.0]),
    (SystemKind("ks3", c0=-0.5), [0.2, -0.7, 0.3]),
    (SystemKind("ks2", c0=2.0), [-1.0, 0.5]),
    (SystemKind("milne_pinney", c=0.5), [0.8, -0.3]),
    (SystemKind("harmonic_oscillator"), [-1.0, 2.0]),
])
def test_cross_validation(kind, s0, cos_path):
    rep = cross_validate(kind, COS, s0, CFG, path=cos_path)
    assert rep.sup_error < 1e-6
    assert not rep.meta["reconstruct_truncated"]
    assert rep.to_dict()["samples"] == len(cos_path)


def test_path_for_other_coefficient_is_rejected(cos_path):
    with pytest.raises(UsageError):
        cross_validate(SystemKind("riccati"), 1.0, [0.0], CFG, path=cos_path)


def test_reconstruct_truncates_at_chart_exit():
    p = solve_reduced(1.0, 0.0, 3.0, CFG)
    tr = reconstruct(SystemKind("ks2", c0=-1.0), p, [1.0, 0.0])
    assert tr.truncated and tr.failure_time < 3.0
    assert len(tr) == int(round(tr.failure_time / 1e-3))


def _pair(kind, path, starts):
    return [reconstruct(kind, path, s) for s in starts]


def test_invert_ks2(cos_path):
    kind = SystemKind("ks2", c0=1.0)
    rp = invert_ks2(*_pair(kind, cos_path, ([1.0, 0.0], [2.0, 0.0])), 1.0)
    assert np.array_equal(rp.entries[0], [1.0, 0.0, 0.0, 1.0])
    assert np.max(np.abs(rp.entries - cos_path.entries)) < 1e-5
    with pytest.raises(DegeneracyError):
        invert_ks2(*_pair(kind, cos_path, ([1.0, 0.0], [-1.0, 0.0])), 1.0)
    with pytest.raises(DegeneracyError):
        invert_ks2(*_pair(kind, cos_path, ([1.0, 0.0], [2.0, 0.0])), 0.0)


def test_invert_ks2_from_direct_integration():
    kind = SystemKind("ks2", c0=1.0)
    a = integrate(kind, COS, [1.0, 0.0], CFG)
    b = integrate(kind, COS, [0.5, 0.0], CFG)
    rp = invert_ks2(a, b, 1.0)
    ref = solve_reduced(COS, 0.0, 1.0, CFG)
    assert np.max(np.abs(rp.entries - ref.entries)) < 1e-8


def test_invert_ks3(cos_path):
    kind = SystemKind("ks3", c0=1.0)
    rp = invert_ks3(*_pair(kind, cos_path, ([0.0, 1.0, 0.0], [0.0, 2.0, 0.0])), 1.0)
    assert np.max(np.abs(rp.entries - cos_path.entries)) < 1e-5
    with pytest.raises(DegeneracyError):
        invert_ks3(*_pair(kind, cos_path, ([0.0, 1.0, 0.0], [0.0, -1.0, 0.0])), 1.0)


def test_invert_riccati():
    p1 = solve_reduced(1.0, 0.0, 1.0, CFG)
    kind = SystemKind("riccati")
    rp = invert_riccati(*(reconstruct(kind, p1, [x]) for x in (0.0, 1.0, -1.0)))
    assert np.array_equal(rp.entries[0] / rp.entries[0, 0], [1.0, 0.0, 0.0, 1.0])
    assert np.max(np.abs(rp.entries - p1.entries)) < 1e-5
    with pytest.raises(DegeneracyError):
        invert_riccati(*(reconstruct(kind, p1, [x]) for x in (0.0, 0.0, 1.0)))


def test_invert_mp():
    p1 = solve_reduced(1.0, 0.0, 1.0, CFG)
    kind = SystemKind("milne_pinney", c=1.0)
    rp = invert_mp(*_pair(kind, p1, ([1.0, 0.0], [2.0, 0.0])), 1.0)
    assert not rp.truncated
    np.testing.assert_allclose(rp.entries[0], [1.0, 0.0, 0.0, 1.0])
    assert np.max(np.abs(rp.entries - p1.entries)) < 1e-4
    with pytest.raises(DegeneracyError):
        invert_mp(*_pair(kind, p1, ([1.0, 0.0], [1.0, 0.0])), 1.0)


def test_inversion_needs_shared_grid(cos_path):
    kind = SystemKind("ks2", c0=1.0)
    a = reconstruct(kind, cos_path, [1.0, 0.0])
    b = integrate(kind, COS, [2.0, 0.0], SolverConfig(dt=2e-3))
    with pytest.raises(DegeneracyError):
        invert_ks2(a, b, 1.0)
