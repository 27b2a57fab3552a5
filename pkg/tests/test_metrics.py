import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mppc_nrf.detector import DetectorParams, build_response_matrix
from mppc_nrf.exceptions import DimensionMismatchError, UndefinedNRFError
from mppc_nrf.fock import make_coherent_pair, make_state, make_thermal_pair, make_two_mode_sv
from mppc_nrf.metrics import (GridModel, Moments, PhotocountJoint, apply_detectors,
                              effective_efficiency, limit_nrf_coherent, limit_nrf_sv,
                              model_moments, nrf, nrf_curve, photocount_moments,
                              variance_of_difference)
from mppc_nrf.montecarlo import simulate

COH_FIT = DetectorParams(0.163, 0.28, 3)
SV_FIT = DetectorParams(0.145, 0.30, 3)
IDEAL = DetectorParams(1.0, 0.0, 10 ** 6)


def _joint(q):
    p = DetectorParams(0.5, 0.1, 3)
    return PhotocountJoint(np.asarray(q, dtype=float), p, p)


def test_vacuum_in():
    s = make_two_mode_sv(0.0, 5)
    r = build_response_matrix(COH_FIT, 5)
    j = apply_detectors(s, r, r)
    assert j.q[0, 0] == pytest.approx(1.0)
    m = photocount_moments(j)
    assert (m.mean_s, m.mean_i, m.second_s, m.second_i, m.cross) == (0, 0, 0, 0, 0)
    with pytest.raises(UndefinedNRFError):
        nrf(m)


def test_ideal_detectors_preserve_sv():
    s = make_two_mode_sv(0.7)
    r = build_response_matrix(IDEAL, s.k_max)
    q = apply_detectors(s, r, r).q
    K = s.k_max
    np.testing.assert_allclose(q[:K + 1, :K + 1], s.joint, atol=1e-15)
    assert np.abs(q[K + 1:]).max(initial=0) == 0


def test_dimension_mismatch():
    s = make_two_mode_sv(1.0)
    r = build_response_matrix(COH_FIT, s.k_max - 1)
    with pytest.raises(DimensionMismatchError):
        apply_detectors(s, r, r)


def test_joint_matches_monte_carlo():
    s = make_two_mode_sv(0.5)
    r = build_response_matrix(SV_FIT, s.k_max)
    q = apply_detectors(s, r, r).q
    rep = simulate("sv", 0.5, SV_FIT, n_pulses=1_000_000, seed=11)
    emp = np.zeros_like(q)
    e = rep.empirical_pmf()
    emp[:e.shape[0], :e.shape[1]] = e
    assert 0.5 * np.abs(emp - q).sum() < 5e-3


def test_moment_examples():
    m = photocount_moments(_joint([[0, 0], [0, 1]]))
    assert (m.mean_s, m.mean_i, m.second_s, m.second_i, m.cross) == (1, 1, 1, 1, 1)
    mu = 1e-3
    p = DetectorParams(0.3, 0.2, 50)
    m = model_moments(make_coherent_pair(mu), p)
    assert m.mean_s == pytest.approx((1 + 0.2) * 0.3 * mu, abs=1e-9)


def test_variance_examples():
    assert variance_of_difference(Moments(0, 0, 0, 0, 0)) == 0
    q = np.diag([0.2, 0.5, 0.3])
    assert variance_of_difference(photocount_moments(_joint(q))) == pytest.approx(0, abs=1e-15)
    a = np.array([0.3, 0.5, 0.2])
    b = np.array([0.6, 0.4])
    m = photocount_moments(_joint(np.outer(a, b)))
    var_a = a @ np.arange(3) ** 2 - (a @ np.arange(3)) ** 2
    var_b = b @ np.arange(2) ** 2 - (b @ np.arange(2)) ** 2
    assert variance_of_difference(m) == pytest.approx(var_a + var_b, abs=1e-15)


def test_nrf_examples():
    from scipy.stats import poisson
    pmf = poisson.pmf(np.arange(80), 2.3)
    assert nrf(photocount_moments(_joint(np.outer(pmf, pmf)))) == pytest.approx(1, abs=1e-12)
    assert nrf(photocount_moments(_joint(np.diag([0.2, 0.8])))) == pytest.approx(0, abs=1e-15)
    m = model_moments(make_coherent_pair(1e-5), DetectorParams(0.163, 0.28, 3))
    assert nrf(m) == pytest.approx(1.4375, abs=1e-3)


def test_limit_values():
    assert limit_nrf_coherent(0) == 1
    assert limit_nrf_coherent(0.28) == pytest.approx(1.4375, abs=1e-15)
    assert limit_nrf_coherent(1) == 2
    assert limit_nrf_sv(0, 1) == 0
    assert limit_nrf_sv(0, 0.3) == pytest.approx(0.7, abs=1e-15)
    # (1 + 0.9) / 1.3 - 1.3 * 0.145
    assert limit_nrf_sv(0.30, 0.145) == pytest.approx(1.2730384615384615, abs=1e-12)


def test_effective_efficiency():
    assert effective_efficiency(0.163, 0.28) == pytest.approx(0.20864, abs=1e-12)
    assert effective_efficiency(0.145, 0.30) == pytest.approx(0.1885, abs=1e-12)
    assert abs(effective_efficiency(0.163, 0.28) - 0.21) <= 0.01
    assert abs(effective_efficiency(0.145, 0.30) - 0.19) <= 0.01
    assert effective_efficiency(0.4, 0) == 0.4


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_difference_of_limits(p, eta):
    diff = limit_nrf_coherent(p) - limit_nrf_sv(p, eta)
    assert abs(diff - effective_efficiency(eta, p)) <= 1e-15


def test_crosstalk_monotonicity():
    ps = np.linspace(0, 1, 201)
    assert np.all(np.diff([limit_nrf_coherent(p) for p in ps]) > 0)


@pytest.mark.parametrize("eta", [0.1, 0.3, 1.0])
@pytest.mark.parametrize("p", [0, 0.1, 0.3])
def test_limit_consistency(eta, p):
    params = DetectorParams(eta, p, 10)
    m_coh = model_moments(make_coherent_pair(1e-5), params)
    m_sv = model_moments(make_two_mode_sv(1e-5), params)
    assert nrf(m_coh) == pytest.approx(limit_nrf_coherent(p), abs=1e-3)
    assert nrf(m_sv) == pytest.approx(limit_nrf_sv(p, eta), abs=1e-3)


@pytest.mark.parametrize("kind", ["coherent", "sv", "thermal"])
@pytest.mark.parametrize("params_i", [None, DetectorParams(0.2, 0.1, 5)])
def test_grid_model_matches_full_path(kind, params_i, backend):
    grid = [0.01, 0.3, 1.0, 4.0]
    fast = GridModel(kind, grid).nrf(COH_FIT, params_i, backend)
    for mu, v in zip(grid, fast):
        full = nrf(model_moments(make_state(kind, mu), COH_FIT, params_i))
        assert v == pytest.approx(full, abs=1e-12)


def test_curve_examples():
    pts = nrf_curve("sv", IDEAL, IDEAL, [0.1, 1, 3])
    assert all(abs(v) < 1e-10 for _, v in pts)
    lossy = DetectorParams(0.145, 0.0, 10 ** 4)
    (_, v), = nrf_curve("sv", lossy, lossy, [1e-4])
    assert v == pytest.approx(0.855, abs=1e-6)
    grid = np.linspace(1, 5, 17)
    values = [v for _, v in nrf_curve("coherent", COH_FIT, COH_FIT, grid)]
    assert np.all(np.diff(values) < 0)


def test_curve_skips_zero():
    with pytest.warns(UserWarning):
        pts = nrf_curve("coherent", COH_FIT, COH_FIT, [0.0, 1.0])
    assert [m for m, _ in pts] == [1.0]


@pytest.mark.parametrize("kind,params", [("coherent", COH_FIT), ("sv", SV_FIT)])
def test_saturation_monotonicity(kind, params):
    (_, a), (_, b), (_, c) = nrf_curve(kind, params, params, [0.05, 0.5, 5])
    assert c < b < a


def test_squeezing_ordering():
    grid = np.linspace(0.05, 5, 30)
    for params in (COH_FIT, SV_FIT):
        coh = np.array([v for _, v in nrf_curve("coherent", params, params, grid)])
        sv = np.array([v for _, v in nrf_curve("sv", params, params, grid)])
        assert np.all(sv < coh)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 1), st.floats(0, 1), st.integers(1, 8), st.floats(0.01, 8))
def test_moment_invariants(eta, p, n_max, mu):
    params = DetectorParams(eta, p, n_max)
    for make in (make_coherent_pair, make_two_mode_sv, make_thermal_pair):
        m = model_moments(make(mu), params)
        assert m.second_s >= m.mean_s ** 2 - 1e-12
        assert abs(m.cross) <= np.sqrt(m.second_s * m.second_i) + 1e-12
        assert nrf(m) >= 0
