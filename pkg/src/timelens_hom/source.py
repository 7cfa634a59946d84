"""Gaussian model of the pulsed type-II biphoton source.

The joint spectral amplitude is

    J(W, W') = xi * (sqrt(pi)/Omega_p) * exp(-(W+W')^2 / 4 Omega_p^2 + i (W+W') t0) * Phi(W, W')

with Phi either the exact ``exp(ix) sinc(x)`` phase-matching function of the
linearised mismatch ``x = tau_o W + tau_e W'`` or its Gaussian model with
``sigma_s = 1.61``.  ``xi`` lumps the coupling constant, crystal length and
pump amplitude into one dimensionless scale.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dispersion as disp

SIGMA_S = 1.61
FWHM_FACTOR = 2.0 * math.sqrt(2.0 * math.log(2.0))
C_NM_PER_PS = 299792.458


class DegenerateSourceError(ValueError):
    """tau_o == tau_e: the HOM closed forms divide by (T_e - T_o)."""


@dataclass(frozen=True)
class PumpSpec:
    """Transform-limited Gaussian pump pulse.

    Give exactly one of ``fwhm_duration_ps`` and ``fwhm_bandwidth_nm``; the
    other follows from the transform limit.
    """

    wavelength_nm: float
    fwhm_duration_ps: float | None = None
    fwhm_bandwidth_nm: float | None = None
    t0: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if (self.fwhm_duration_ps is None) == (self.fwhm_bandwidth_nm is None):
            raise ValueError("give exactly one of fwhm_duration_ps / fwhm_bandwidth_nm")
        if not self.wavelength_nm > 0:
            raise ValueError("pump wavelength must be positive")
        given = self.fwhm_duration_ps if self.fwhm_duration_ps is not None else self.fwhm_bandwidth_nm
        if not given > 0:
            raise ValueError("pump duration / bandwidth must be positive")

    @property
    def omega_p(self) -> float:
        """Spectral std of the pump intensity, rad/ps (= 1 / 2 sigma_t)."""
        if self.fwhm_bandwidth_nm is not None:
            d_omega = 2.0 * math.pi * C_NM_PER_PS * self.fwhm_bandwidth_nm / self.wavelength_nm**2
            return d_omega / FWHM_FACTOR
        sigma_t = self.fwhm_duration_ps / FWHM_FACTOR
        return 0.5 / sigma_t

    @property
    def sigma_t(self) -> float:
        return 0.5 / self.omega_p

    @property
    def tau_p(self) -> float:
        """FWHM duration, ps."""
        return FWHM_FACTOR * self.sigma_t

    @property
    def carrier(self) -> float:
        return 2.0 * math.pi * C_NM_PER_PS / self.wavelength_nm


def pump_spectrum(pump: PumpSpec, omega):
    """alpha(W) = E0 sqrt(pi)/Omega_p exp(-W^2/4 Omega_p^2 + i W t0)."""
    omega = np.asarray(omega, dtype=float)
    wp = pump.omega_p
    return pump.amplitude * math.sqrt(math.pi) / wp * np.exp(-(omega**2) / (4 * wp**2) + 1j * omega * pump.t0)


@dataclass(frozen=True)
class SourceModel:
    omega_p: float
    tau_o: float
    tau_e: float
    sigma_s: float = SIGMA_S
    xi: float = 1.0
    t0: float = 0.0
    carrier: float = 0.0  # subharmonic carrier omega_0, rad/ps
    delay_o: float = 0.0  # k'_o L, ps
    delay_e: float = 0.0  # k'_e L, ps
    theta_deg: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.omega_p > 0:
            raise ValueError("omega_p must be positive")
        if not self.sigma_s > 0:
            raise ValueError("sigma_s must be positive")
        if self.tau_o == self.tau_e:
            raise DegenerateSourceError("degenerate source: tau_o == tau_e")

    @classmethod
    def from_crystal(cls, crystal: disp.CrystalSpec, pump: PumpSpec, xi=1.0, sigma_s=SIGMA_S) -> "SourceModel":
        lam_p = pump.wavelength_nm * 1e-3
        theta = crystal.cut_angle_deg
        if theta is None:
            theta = disp.solve_degenerate_angle(crystal, lam_p)
        wp = pump.carrier
        p = disp.group_quantities(crystal, theta, wp, "p")
        o = disp.group_quantities(crystal, theta, wp / 2, "o")
        e = disp.group_quantities(crystal, theta, wp / 2, "e")
        L = crystal.length_mm
        tau_o = (p.k1 - o.k1) * L / 2
        tau_e = (p.k1 - e.k1) * L / 2
        return cls(
            omega_p=pump.omega_p,
            tau_o=tau_o,
            tau_e=tau_e,
            sigma_s=sigma_s,
            xi=xi,
            t0=pump.t0,
            carrier=wp / 2,
            delay_o=o.k1 * L,
            delay_e=e.k1 * L,
            theta_deg=theta,
            meta={"pump": p, "o": o, "e": e, "length_mm": L},
        )


def _mismatch(model, omega, omega2):
    return model.tau_o * np.asarray(omega, float) + model.tau_e * np.asarray(omega2, float)


def phase_matching(model: SourceModel, omega, omega2):
    """exp(ix) sinc(x) with x = tau_o W + tau_e W'; sinc(x) = sin(x)/x."""
    x = _mismatch(model, omega, omega2)
    return np.exp(1j * x) * np.sinc(x / math.pi)


def phase_matching_gaussian(model: SourceModel, omega, omega2):
    x = _mismatch(model, omega, omega2)
    return np.exp(-(x**2) / (2 * model.sigma_s**2) + 1j * x)


def jsa_value(model: SourceModel, omega, omega2, kind="gaussian"):
    """Pointwise JSA, broadcasting ``omega`` against ``omega2``."""
    omega = np.asarray(omega, float)
    omega2 = np.asarray(omega2, float)
    s = omega + omega2
    wp = model.omega_p
    pump = model.xi * math.sqrt(math.pi) / wp * np.exp(-(s**2) / (4 * wp**2) + 1j * s * model.t0)
    if kind == "gaussian":
        phi = phase_matching_gaussian(model, omega, omega2)
    elif kind == "exact":
        phi = phase_matching(model, omega, omega2)
    else:
        raise ValueError(f"kind must be 'gaussian' or 'exact', got {kind!r}")
    return pump * phi


@dataclass(frozen=True)
class JsaGrid:
    """J sampled on ``omega`` (first index, ordinary) x ``omega2`` (second, extraordinary)."""

    omega: np.ndarray
    omega2: np.ndarray
    values: np.ndarray
    kind: str
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        for ax in (self.omega, self.omega2):
            d = np.diff(ax)
            if ax.ndim != 1 or len(ax) < 2 or np.any(d <= 0) or not np.allclose(d, d[0], rtol=1e-9, atol=0):
                raise ValueError("JSA axes must be strictly increasing uniform 1-D grids")
        if self.values.shape != (len(self.omega), len(self.omega2)):
            raise ValueError("JSA values shape does not match axes")

    @property
    def steps(self):
        return self.omega[1] - self.omega[0], self.omega2[1] - self.omega2[0]

    def to_csv(self, path):
        """Long-form CSV: omega, omega_prime, re_J, im_J."""
        path = Path(path)
        W, W2 = np.meshgrid(self.omega, self.omega2, indexing="ij")
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["omega_rad_per_ps", "omega_prime_rad_per_ps", "re_J", "im_J"])
            for a, b, v in zip(W.ravel(), W2.ravel(), self.values.ravel()):
                w.writerow([f"{a:.10g}", f"{b:.10g}", f"{v.real:.10g}", f"{v.imag:.10g}"])
        return path

    def to_matrix_txt(self, path, normalize=True):
        """Plain-text |J| matrix (rows: omega, columns: omega_prime)."""
        mag = np.abs(self.values)
        if normalize and mag.max() > 0:
            mag = mag / mag.max()
        header = "rows: omega " + " ".join(f"{x:.6g}" for x in (self.omega[0], self.omega[-1], len(self.omega)))
        header += " | cols: omega_prime " + " ".join(
            f"{x:.6g}" for x in (self.omega2[0], self.omega2[-1], len(self.omega2))
        )
        np.savetxt(path, mag, fmt="%.8e", header=header)
        return Path(path)


def uniform_axis(n: int, half_width: float) -> np.ndarray:
    if n < 2:
        raise ValueError("grid needs at least 2 points")
    return np.linspace(-half_width, half_width, n)


def resolving_step(model: SourceModel) -> float:
    """Narrowest principal std of |J|^2 = exp(-w^T Q w); grids coarser than this alias.

    Q combines the pump envelope (along W + W') and the phase-matching ridge
    (along tau_o W + tau_e W').
    """
    p = 1.0 / (2.0 * model.omega_p**2)
    to, te, ss2 = model.tau_o, model.tau_e, model.sigma_s**2
    q = np.array([[p + to * to / ss2, p + to * te / ss2], [p + to * te / ss2, p + te * te / ss2]])
    return 1.0 / math.sqrt(2.0 * float(np.linalg.eigvalsh(q)[-1]))


def jsa(model: SourceModel, n: int = 257, half_width: float | None = None, kind: str = "gaussian") -> JsaGrid:
    """Sample the JSA on a square grid; default span is +-6 max(sigma_o, sigma_e)."""
    so, se = spectral_sigmas(model)
    smax = max(so, se)
    if half_width is None:
        half_width = 6.0 * smax
    ax = uniform_axis(n, half_width)
    notes = []
    if half_width < 4.0 * smax:
        notes.append(f"grid half-width {half_width:.3g} rad/ps covers < 4 sigma ({4 * smax:.3g})")
    if ax[1] - ax[0] > resolving_step(model):
        notes.append(f"grid spacing {ax[1] - ax[0]:.3g} rad/ps under-resolves the JSA "
                     f"(max {resolving_step(model):.3g})")
    for note in notes:
        warnings.warn(note, stacklevel=2)
    values = jsa_value(model, ax[:, None], ax[None, :], kind)
    return JsaGrid(ax, ax.copy(), values, kind, tuple(notes))


def _dtau(model):
    return abs(model.tau_e - model.tau_o)


def spectral_sigmas(model: SourceModel) -> tuple[float, float]:
    """(sigma_o, sigma_e) in rad/ps."""
    ss, wp, d = model.sigma_s, model.omega_p, _dtau(model)
    so = math.sqrt(ss**2 + 2 * model.tau_e**2 * wp**2) / (math.sqrt(2) * d)
    se = math.sqrt(ss**2 + 2 * model.tau_o**2 * wp**2) / (math.sqrt(2) * d)
    return so, se


def temporal_sigmas(model: SourceModel) -> tuple[float, float]:
    """(dt_o, dt_e) in ps."""
    ss, wp = model.sigma_s, model.omega_p
    to = math.sqrt(ss**2 + 2 * model.tau_o**2 * wp**2) / (2 * ss * wp)
    te = math.sqrt(ss**2 + 2 * model.tau_e**2 * wp**2) / (2 * ss * wp)
    return to, te


def sigma_cw(model: SourceModel) -> float:
    return model.sigma_s / (math.sqrt(2) * _dtau(model))


def biphoton_probability(model: SourceModel) -> float:
    """P_b = sqrt(2) pi^2 xi^2 sigma_s / (Omega_p |tau_e - tau_o|)."""
    return math.sqrt(2) * math.pi**2 * model.xi**2 * model.sigma_s / (model.omega_p * _dtau(model))


def _pick(mu, o, e):
    if mu == "o":
        return o
    if mu == "e":
        return e
    raise ValueError(f"mu must be 'o' or 'e', got {mu!r}")


def spectrum(model: SourceModel, mu: str, omega):
    """S_mu(W) = sqrt(2 pi) P_b / sigma_mu exp(-W^2 / 2 sigma_mu^2)."""
    s = _pick(mu, *spectral_sigmas(model))
    omega = np.asarray(omega, float)
    return math.sqrt(2 * math.pi) * biphoton_probability(model) / s * np.exp(-(omega**2) / (2 * s**2))


def peak_time(model: SourceModel, mu: str) -> float:
    return model.t0 + _pick(mu, model.tau_o, model.tau_e) + _pick(mu, model.delay_o, model.delay_e)


def intensity(model: SourceModel, mu: str, t):
    """I_mu(t), Gaussian of std dt_mu centred at t0 + tau_mu + k'_mu L."""
    dt = _pick(mu, *temporal_sigmas(model))
    t = np.asarray(t, float)
    return biphoton_probability(model) / (math.sqrt(2 * math.pi) * dt) * np.exp(
        -((t - peak_time(model, mu)) ** 2) / (2 * dt**2)
    )


def summary(model: SourceModel) -> dict:
    so, se = spectral_sigmas(model)
    to, te = temporal_sigmas(model)
    out = {
        "theta_p_deg": model.theta_deg,
        "omega_p_rad_per_ps": model.omega_p,
        "tau_p_ps": FWHM_FACTOR * 0.5 / model.omega_p,
        "tau_o_ps": model.tau_o,
        "tau_e_ps": model.tau_e,
        "sigma_o_rad_per_ps": so,
        "sigma_e_rad_per_ps": se,
        "sigma_ratio": so / se,
        "dt_o_ps": to,
        "dt_e_ps": te,
        "sigma_cw_rad_per_ps": sigma_cw(model),
        "m_opt": te / to,
        "p_b_per_xi2": biphoton_probability(model) / model.xi**2 if model.xi else 0.0,
    }
    return out
