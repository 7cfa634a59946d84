import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from timelens_hom import dispersion as dp
from timelens_hom import oracle as orc
from timelens_hom import source as src


def _model(wp=1.0, to=0.7, te=2.5, t0=0.0, xi=1.0):
    return src.SourceModel(omega_p=wp, tau_o=to, tau_e=te, t0=t0, xi=xi)


def test_pump_bandwidth_conversion(pump):
    assert pump.omega_p == pytest.approx(0.98, abs=0.01)
    assert pump.tau_p == pytest.approx(1.21, abs=0.01)


def test_pump_duration_roundtrip(pump):
    other = src.PumpSpec(405.0, fwhm_duration_ps=pump.tau_p)
    assert other.omega_p == pytest.approx(pump.omega_p, rel=1e-14)


def test_pump_needs_exactly_one_width():
    with pytest.raises(ValueError):
        src.PumpSpec(405.0)
    with pytest.raises(ValueError):
        src.PumpSpec(405.0, fwhm_duration_ps=1.0, fwhm_bandwidth_nm=0.2)


def test_pump_spectrum_shape(pump):
    a0 = src.pump_spectrum(pump, 0.0)
    assert a0.imag == 0.0
    assert a0.real == pytest.approx(math.sqrt(math.pi) / pump.omega_p)
    assert abs(src.pump_spectrum(pump, 2 * pump.omega_p)) / abs(a0) == pytest.approx(math.exp(-1))


def test_exact_phase_matching():
    m = _model()
    assert src.phase_matching(m, 0.0, 0.0) == 1.0
    w = math.pi / m.tau_o
    assert abs(src.phase_matching(m, w, 0.0)) < 1e-15


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_phase_matching_magnitude_symmetric(w, w2):
    m = _model()
    assert abs(src.phase_matching(m, w, w2)) == pytest.approx(abs(src.phase_matching(m, -w, -w2)), abs=1e-15)
    assert abs(src.phase_matching_gaussian(m, w, w2)) <= 1.0


def test_gaussian_phase_matching_amplitude_fwhm_matches_sinc():
    # sigma_s = 1.61 equates the half-maximum widths of |sinc x| and its Gaussian model
    from scipy.optimize import brentq

    x_sinc = brentq(lambda x: np.sinc(x / math.pi) - 0.5, 0.5, 3.0)
    x_gauss = src.SIGMA_S * math.sqrt(2 * math.log(2))
    assert x_gauss == pytest.approx(x_sinc, rel=2e-3)
    # the squared profiles would need sigma_s ~ 1.671 instead
    x2 = brentq(lambda x: np.sinc(x / math.pi) ** 2 - 0.5, 0.5, 3.0)
    assert x2 / math.sqrt(math.log(2)) == pytest.approx(1.671, abs=1e-3)


def test_jsa_peak_and_tilt(model):
    g = src.jsa(model, n=129)
    mag = np.abs(g.values)
    i, j = np.unravel_index(np.argmax(mag), mag.shape)
    assert g.omega[i] == 0.0 and g.omega2[j] == 0.0
    W, W2 = np.meshgrid(g.omega, g.omega2, indexing="ij")
    p = mag**2 / np.sum(mag**2)
    cov = np.sum(p * W * W2)
    assert cov < 0  # elongated along the anti-diagonal


def test_jsa_zero_coupling(model):
    m = src.SourceModel(**{**model.__dict__, "xi": 0.0})
    assert not np.any(src.jsa(m, n=65).values)
    assert src.biphoton_probability(m) == 0.0


def test_jsa_narrow_grid_warns(model):
    with pytest.warns(UserWarning):
        g = src.jsa(model, n=65, half_width=1.0)
    assert g.warnings


def test_jsa_grid_validation():
    ax = np.linspace(-1, 1, 5)
    with pytest.raises(ValueError):
        src.JsaGrid(ax[::-1], ax, np.zeros((5, 5)), "gaussian")
    with pytest.raises(ValueError):
        src.JsaGrid(ax, ax, np.zeros((4, 5)), "gaussian")


def test_widths_bbo(model):
    so, se = src.spectral_sigmas(model)
    to, te = src.temporal_sigmas(model)
    assert so == pytest.approx(1.48, rel=0.01)
    assert se == pytest.approx(0.71, rel=0.01)
    assert so / se == pytest.approx(2.1, abs=0.05)
    assert to == pytest.approx(0.61, rel=0.01)
    assert te == pytest.approx(1.28, rel=0.01)
    assert src.sigma_cw(model) == pytest.approx(0.59, abs=0.01)


@given(st.floats(0.05, 5), st.floats(0.0, 4), st.floats(0.0, 4))
def test_width_reciprocity(wp, to, te):
    if abs(te - to) < 1e-3:
        return
    m = _model(wp, to, te)
    so, se = src.spectral_sigmas(m)
    dto, dte = src.temporal_sigmas(m)
    assert so / se * dto / dte == pytest.approx(1.0, rel=1e-12)


def test_cw_limit():
    m = _model(wp=1e-7)
    so, se = src.spectral_sigmas(m)
    assert so == pytest.approx(src.sigma_cw(m), rel=1e-10)
    assert se == pytest.approx(src.sigma_cw(m), rel=1e-10)


def test_sigma_cw_scaling():
    a, b = _model(to=0.5, te=1.5), _model(to=0.5, te=2.5)
    assert src.sigma_cw(b) == pytest.approx(src.sigma_cw(a) / 2)


def test_narrowband_delay_limit():
    m = _model(wp=0.8, to=0.0, te=2.0)
    assert src.temporal_sigmas(m)[0] == pytest.approx(0.5 / 0.8)


def test_biphoton_probability_scaling():
    assert src.biphoton_probability(_model(wp=2.0)) == pytest.approx(src.biphoton_probability(_model(wp=1.0)) / 2)


def test_degenerate_source_rejected():
    with pytest.raises(src.DegenerateSourceError):
        _model(to=1.0, te=1.0)


def test_degenerate_toy_crystal(pump):
    flat = dp.SellmeierSet(2.25)
    toy = dp.CrystalSpec(10.0, flat, flat, cut_angle_deg=30.0)
    with pytest.raises(src.DegenerateSourceError, match="degenerate source"):
        src.SourceModel.from_crystal(toy, pump)


def test_marginal_widths_and_normalisation_by_quadrature(model):
    so, se = src.spectral_sigmas(model)
    g = src.jsa(model, n=129, half_width=8 * so)
    pb = src.biphoton_probability(model)
    for mu, s in (("o", so), ("e", se)):
        x, S = orc.marginal_numeric(g, mu)
        assert orc.moments(x, S)[1] == pytest.approx(s, rel=1e-6)
        assert orc.integrate(x, S) / (2 * math.pi) == pytest.approx(pb, rel=1e-6)
        assert np.allclose(S, src.spectrum(model, mu, x), rtol=1e-8, atol=1e-12 * S.max())


def test_temporal_width_and_peak_by_quadrature(model):
    for mu, dt in zip("oe", src.temporal_sigmas(model)):
        tp = src.peak_time(model, mu)
        t = tp + np.linspace(-10 * dt, 10 * dt, 1001)
        inum = orc.intensity_numeric(model, t, mu, orc.QuadratureSpec(129, 8))
        mean, std = orc.moments(t, inum)
        assert mean == pytest.approx(tp, abs=1e-9)
        assert std == pytest.approx(dt, rel=1e-6)
        assert np.allclose(inum, inum[::-1], rtol=1e-8, atol=1e-14)


def test_peak_time_includes_crystal_delay(model):
    assert src.peak_time(model, "o") == pytest.approx(model.t0 + model.tau_o + model.delay_o)


def test_spectrum_peaks_balance(model):
    so, se = src.spectral_sigmas(model)
    assert src.spectrum(model, "o", 0.0) * so == pytest.approx(src.spectrum(model, "e", 0.0) * se)


def test_t0_shift_only_changes_phase(model):
    shifted = src.SourceModel(**{**model.__dict__, "t0": 0.7})
    w = np.linspace(-3, 3, 11)
    a = src.jsa_value(model, w[:, None], w[None, :])
    b = src.jsa_value(shifted, w[:, None], w[None, :])
    assert np.allclose(np.abs(a), np.abs(b), rtol=1e-14)
    expected = np.exp(1j * 0.7 * (w[:, None] + w[None, :]))
    assert np.allclose(b, a * expected, rtol=1e-12, atol=1e-15)


def _fwhm_sigma(x, y):
    y = y / y.max()
    above = np.where(y >= 0.5)[0]
    a, b = above[0], above[-1]
    left = np.interp(0.5, [y[a - 1], y[a]], [x[a - 1], x[a]])
    right = np.interp(0.5, [y[b + 1], y[b]], [x[b + 1], x[b]])
    return (right - left) / (2 * math.sqrt(2 * math.log(2)))


def test_exact_sinc_marginal_width_close_to_gaussian_model(model):
    # sinc^2 tails make the second moment window-dependent, so widths are compared at half maximum
    so, se = src.spectral_sigmas(model)
    g = src.jsa(model, n=401, half_width=8 * so, kind="exact")
    for mu, s in (("o", so), ("e", se)):
        x, S = orc.marginal_numeric(g, mu)
        assert _fwhm_sigma(x, S) == pytest.approx(s, rel=0.03)


@given(st.floats(0.3, 3.0), st.floats(0.1, 3.0), st.floats(0.1, 4.0))
def test_normalisation_chain(wp, to, te):
    if abs(te - to) < 0.2:
        return
    m = _model(wp, to, te, t0=0.3)
    so, se = src.spectral_sigmas(m)
    pb = src.biphoton_probability(m)
    hw = 8 * max(so, se)
    g = src.jsa(m, n=max(129, 2 * math.ceil(hw / src.resolving_step(m)) + 1), half_width=hw)
    assert not g.warnings
    x, S = orc.marginal_numeric(g, "e")
    assert orc.integrate(x, S) / (2 * math.pi) == pytest.approx(pb, rel=1e-6)
    dt = src.temporal_sigmas(m)[0]
    t = src.peak_time(m, "o") + np.linspace(-10 * dt, 10 * dt, 801)
    assert orc.integrate(t, src.intensity(m, "o", t)) == pytest.approx(pb, rel=1e-6)


def test_jsa_exports(tmp_path, model):
    with pytest.warns(UserWarning, match="under-resolves"):
        g = src.jsa(model, n=33)
    p = g.to_csv(tmp_path / "j.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "omega_rad_per_ps,omega_prime_rad_per_ps,re_J,im_J"
    assert len(lines) == 1 + 33 * 33
    m = np.loadtxt(g.to_matrix_txt(tmp_path / "j.txt"))
    assert m.shape == (33, 33) and m.max() == pytest.approx(1.0)


def test_summary_keys(model):
    s = src.summary(model)
    assert s["m_opt"] == pytest.approx(s["sigma_ratio"], rel=1e-12)
    assert s["theta_p_deg"] == pytest.approx(41.42, abs=0.15)
