import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from timelens_hom import hom
from timelens_hom import lens as ln
from timelens_hom import source as src

SIGMA_S = 1.61


def _t(tau, wp=0.98):
    return math.sqrt(2) * wp * tau / SIGMA_S


@pytest.fixture(scope="module")
def bbo_params(model):
    return hom.source_params(model, 10.0, -2.1)


def test_dimensionless_delays_rounded_inputs():
    assert _t(0.76) == pytest.approx(0.654, abs=1e-3)
    assert _t(2.68) == pytest.approx(2.307, abs=1e-3)
    tau_p = math.sqrt(2 * math.log(2)) / 0.98
    for tau in (0.76, 2.68):
        assert 1.034 * tau / tau_p == pytest.approx(_t(tau), rel=1e-3)


def test_dimensionless_from_model(model):
    lens = ln.ideal_lens(0.64, -2.1)
    p = hom.dimensionless(model, lens)
    assert p.t_o == pytest.approx(0.650, abs=2e-3)
    assert p.t_e == pytest.approx(2.300, abs=2e-3)
    assert p.focal_gdd == pytest.approx(0.64, rel=1e-14)
    assert hom.source_params(src.SourceModel(omega_p=0.98, tau_o=0.0, tau_e=1.0), 1, 1).t_o == 0.0


def test_dimensionless_focal_gdd():
    model = src.SourceModel(omega_p=0.98, tau_o=0.76, tau_e=2.68)
    p = hom.dimensionless(model, ln.ideal_lens(0.64, -2.1))
    assert p.d == pytest.approx(1.229, abs=1e-3)


def test_params_validation():
    with pytest.raises(src.DegenerateSourceError):
        hom.DimensionlessParams(1.0, 1.0, 1.0, 2.0, 1.0)
    with pytest.raises(hom.HomError):
        hom.DimensionlessParams(1.0, 2.0, 1.0, 0.0, 1.0)
    with pytest.raises(hom.HomError):
        hom.DimensionlessParams(1.0, 2.0, 0.0, 2.0, 1.0)


def test_lambda_matrix_structure(bbo_params):
    lam, v = hom.lambda_matrix(bbo_params)
    assert np.array_equal(lam, lam.T)
    assert not np.any(v)
    lam2, v2 = hom.lambda_matrix(bbo_params, 0.2, 0.5)
    assert np.array_equal(v2, [0.2, -0.3, -0.2, 0.3])


def test_lambda_large_magnification_limit(bbo_params):
    lam, _ = hom.lambda_matrix(bbo_params.with_(m=1e12))
    assert abs(lam[0, 0].imag) < 1e-10 and abs(lam[2, 2].imag) < 1e-10


POS = st.floats(0.01, 5.0)
D = st.floats(0.1, 1e3)
MAG = st.floats(0.1, 10).flatmap(lambda x: st.sampled_from([x, -x]))


def _rel(a, b):
    return np.max(np.abs(np.asarray(a) - b)) / np.max(np.abs(b))


@given(POS, POS, D, MAG, st.floats(0.1, 3))
def test_closed_and_matrix_paths_agree(to, te, d, m, wp):
    if abs(te - to) < 1e-2:
        return
    p = hom.DimensionlessParams(to, te, d, m, wp)
    gc, mp = hom.gamma_closed(p), hom.gamma_numeric(p)
    assert _rel(mp.gamma, gc.matrix) < 1e-10
    assert mp.det_lambda == pytest.approx(gc.det_lambda, rel=1e-10)
    assert gc.det_lambda > 0
    assert np.all(np.linalg.eigvalsh(gc.matrix) > 0)
    assert mp.imag_residual < 1e-12
    assert gc.g12 == mp.gamma[1, 0] or abs(gc.g12 - mp.gamma[1, 0]) <= 1e-10 * np.max(np.abs(gc.matrix))


@given(POS, POS, D, MAG, st.floats(-3, 3), st.floats(-10, 10))
def test_p_int_is_a_probability(to, te, d, m, dt, dtau):
    if abs(te - to) < 1e-2:
        return
    p = hom.DimensionlessParams(to, te, d, m, 1.0)
    v = hom.p_int(p, dt, dtau)
    assert 0.0 <= v <= 1.0 + 1e-12
    assert v == pytest.approx(hom.p_int(p, dt, dtau, "closed"), rel=1e-10, abs=1e-300)


def test_g_minimum_at_optimal_magnification(bbo_params):
    mo = hom.optimal_magnification(bbo_params)[0]
    target = 4 * bbo_params.d**4 / bbo_params.delta**2
    for m in (mo, -mo):
        assert hom.g_of_m(bbo_params.with_(m=m)) == pytest.approx(target, rel=1e-12)
    ms = np.linspace(0.5, 6, 301)
    assert min(hom.g_of_m(bbo_params.with_(m=x)) for x in ms) >= target * (1 - 1e-12)


def test_sync_form_matches_general(bbo_params):
    dtau = np.linspace(-4, 4, 41)
    assert np.allclose(hom.p_int(bbo_params, 0.0, dtau), hom.p_int_sync(bbo_params, dtau), rtol=1e-10, atol=0)


def test_p_int_tail(bbo_params):
    assert hom.p_int(bbo_params, 0.0, 1e4 / bbo_params.sigma_cw) < 1e-15
    assert hom.p_int(bbo_params, 0.0, -1e4 / bbo_params.sigma_cw) < 1e-15


def test_dip_location_limit():
    p = hom.DimensionlessParams(_t(0.76), _t(2.68), 1e3, -2.1, 0.98)
    assert hom.dip_location(p, 0.0) == 0.0
    assert hom.dip_location(p, 0.1) == pytest.approx(0.31, abs=1e-3)


@pytest.mark.parametrize("m,dt", [(-2.1, 0.3), (1.5, -0.2), (4.0, 0.1)])
def test_dip_location_matches_scan(bbo_params, m, dt):
    p = bbo_params.with_(m=m, d=3.0)
    dtau = np.linspace(-5, 5, 20001)
    scan = hom.hom_scan(p, dtau, dt)
    assert abs(dtau[np.argmax(scan.p_int)] - scan.dtau_min) <= dtau[1] - dtau[0]


def test_visibility_formulas(bbo_params):
    mo = hom.optimal_magnification(bbo_params)[0]
    for m in (mo, -mo):
        p = bbo_params.with_(m=m)
        assert hom.visibility(p) == pytest.approx(hom.optimal_visibility(p), rel=1e-12)
        assert hom.visibility(p) == pytest.approx(hom.p_int(p), rel=1e-10)
    assert hom.optimal_visibility(bbo_params) == pytest.approx(0.997, abs=1e-3)
    assert hom.visibility(bbo_params, dt=50.0) < 1e-12


def test_visibility_at_dt_matches_dip_height(bbo_params):
    dt = 0.4
    tmin = hom.dip_location(bbo_params, dt)
    assert hom.visibility(bbo_params, dt) == pytest.approx(hom.p_int(bbo_params, dt, tmin), rel=1e-10)


@given(st.floats(0.1, 10), st.floats(0.05, 5))
def test_visibility_sign_invariant(m, d):
    p = hom.DimensionlessParams(_t(0.76), _t(2.68), d, m, 0.98)
    assert hom.visibility(p) == pytest.approx(hom.visibility(p.with_(m=-m)), rel=1e-12)


def test_visibility_monotone_in_d(bbo_params):
    mo = hom.optimal_magnification(bbo_params)[1]
    v = [hom.visibility(bbo_params.with_(d=d, m=mo)) for d in np.geomspace(0.01, 1e4, 200)]
    assert np.all(np.diff(v) > 0)
    assert 0 < v[0] and v[-1] <= 1


def test_optimal_magnification_bbo(bbo_params):
    a, b = hom.optimal_magnification(bbo_params)
    assert a == pytest.approx(2.1, abs=0.05) and b == -a


def test_lensless(bbo_params):
    p = hom.DimensionlessParams(_t(0.76), _t(2.68), 1.0, 1.0, 0.98)
    assert p.t_o + p.t_e == pytest.approx(2.961, abs=1e-3)
    assert hom.lensless_p_int(p) == pytest.approx(0.56, abs=0.005)
    cw = hom.DimensionlessParams(1e-9, 2e-9, 1.0, 1.0, 0.98)
    assert hom.lensless_p_int(cw) == pytest.approx(1.0, abs=1e-12)


def test_lensless_limit_of_general_form(bbo_params):
    p = bbo_params.with_(m=1.0, d=1e6)
    dtau = np.linspace(-3, 3, 61) / p.sigma_cw
    assert np.max(np.abs(hom.p_int(p, 0.0, dtau) - hom.lensless_p_int(p, dtau))) < 1e-3


def test_cw_form():
    assert hom.cw_p_int(0.59, 0.0) == 1.0
    assert hom.cw_p_int(0.59, 0.5 / 0.59) == pytest.approx(math.exp(-0.5))


def test_correlation_times(bbo_params):
    tcw, tp = hom.correlation_times(bbo_params.with_(m=-hom.optimal_magnification(bbo_params)[0]))
    assert tcw == pytest.approx(0.5 / bbo_params.sigma_cw)
    assert tp * bbo_params.sigma_cw == pytest.approx(1.4, abs=0.05)


def test_correlation_time_depends_on_sign(bbo_params):
    mo = hom.optimal_magnification(bbo_params)[0]
    neg = hom.correlation_times(bbo_params.with_(m=-mo))[1]
    pos = hom.correlation_times(bbo_params.with_(m=mo))[1]
    assert pos < neg


def test_hom_scan(bbo_params):
    dtau = np.linspace(-20, 20, 401) / bbo_params.sigma_cw
    c = hom.hom_scan(bbo_params, dtau)
    assert np.allclose(c.p_int, c.p_int[::-1], rtol=1e-12)
    assert c.rate.min() == pytest.approx(1 - c.visibility, rel=1e-10)
    assert c.rate[0] > 1 - 1e-6
    with pytest.raises(hom.HomError):
        hom.hom_scan(bbo_params, [])


def test_hom_scan_single_point(bbo_params):
    c = hom.hom_scan(bbo_params, [0.0])
    assert c.p_int.shape == (1,)


def test_surface_minimum_at_origin(bbo_params):
    dt = np.linspace(-3, 3, 61)
    dtau = np.linspace(-6, 6, 121)
    s = hom.hom_surface(bbo_params, dt, dtau)
    i, j = np.unravel_index(np.argmax(s), s.shape)
    assert dt[i] == 0.0 and dtau[j] == 0.0
    with pytest.raises(hom.HomError):
        hom.hom_surface(bbo_params, [], dtau)


def test_high_d_parameter():
    p = hom.DimensionlessParams(_t(0.76), _t(2.68), 2 * 0.98**2 * 0.64, -2.1, 0.98)
    h = hom.high_d_parameter(p)
    assert h["ratio"] == pytest.approx(4 * h["quoted"], rel=1e-12)
    assert h["visibility"] == pytest.approx(hom.optimal_visibility(p), rel=1e-12)
    assert h["visibility"] == pytest.approx(0.83, abs=0.01)
    assert h["quoted"] == pytest.approx(hom.QUOTED_EOPM_RATIO, abs=0.03)


def test_curve_csv(tmp_path, bbo_params):
    c = hom.hom_scan(bbo_params, np.linspace(-1, 1, 5))
    lines = c.to_csv(tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "delta_tau_ps,p_int,normalized_rate"
    assert len(lines) == 6
    head = c.to_csv(tmp_path / "d.csv", sigma_cw=0.59).read_text().splitlines()[0]
    assert head.endswith("delta_tau_sigma_cw")


def test_visibility_vs_m_peak(bbo_params):
    ms = np.linspace(0.1, 6, 591)
    for d in (0.5, 1.23, 10):
        v = hom.visibility_vs_m(bbo_params.with_(d=d), ms)
        assert abs(ms[np.argmax(v)] - hom.optimal_magnification(bbo_params)[0]) <= ms[1] - ms[0]
