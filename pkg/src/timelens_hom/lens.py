"""Single-lens temporal imaging system acting on the ordinary photon."""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import source as src
from .source import JsaGrid, SourceModel

LN2 = math.log(2.0)


class LensError(ValueError):
    pass


@dataclass(frozen=True)
class Ideal:
    """Thin time lens with infinite temporal aperture."""

    focal_gdd: float

    @property
    def aperture(self) -> float:
        return math.inf


@dataclass(frozen=True)
class EOPM:
    """Electro-optic phase modulator lens: peak phase ``theta_max`` (rad), drive ``f_rf_ghz``."""

    theta_max: float
    f_rf_ghz: float

    def __post_init__(self):
        if not self.theta_max > 0:
            raise LensError("EOPM theta_max must be positive")
        if not self.f_rf_ghz > 0:
            raise LensError("EOPM RF frequency must be positive")

    @property
    def aperture(self) -> float:
        return 1.0 / (2.0 * math.pi * self.f_rf_ghz * 1e-3)  # ps

    @property
    def focal_gdd(self) -> float:
        return self.aperture**2 / self.theta_max


@dataclass(frozen=True)
class FWM:
    """Four-wave-mixing lens: pump of FWHM ``tau0`` (ps) chirped by GDD ``pump_gdd`` (ps^2)."""

    tau0: float
    pump_gdd: float

    def __post_init__(self):
        if not self.tau0 > 0:
            raise LensError("FWM pump duration must be positive")
        if self.pump_gdd == 0:
            raise LensError("FWM pump GDD must be nonzero")

    @property
    def aperture(self) -> float:
        return 4.0 * LN2 * abs(self.pump_gdd) / self.tau0

    @property
    def focal_gdd(self) -> float:
        return -self.pump_gdd / 2.0


@dataclass(frozen=True)
class TimeLensSpec:
    focal_gdd: float
    magnification: float
    input_gdd: float
    output_gdd: float
    sync_offset: float = 0.0
    realization: object = None
    aperture: float = math.inf

    @property
    def degenerate(self) -> bool:
        """M = 1 gives D_in = 0: only meaningful as the lensless limit."""
        return self.magnification == 1.0


def from_realization(realization, magnification: float, sync_offset: float = 0.0) -> TimeLensSpec:
    if magnification == 0 or not math.isfinite(magnification):
        raise LensError("magnification must be finite and nonzero")
    df = realization.focal_gdd
    if df == 0 or not math.isfinite(df):
        raise LensError("focal GDD must be finite and nonzero")
    m = float(magnification)
    d_in = df * (m - 1.0) / m
    d_out = -m * d_in
    return TimeLensSpec(df, m, d_in, d_out, float(sync_offset), realization, realization.aperture)


def ideal_lens(focal_gdd: float, magnification: float, sync_offset: float = 0.0) -> TimeLensSpec:
    return from_realization(Ideal(focal_gdd), magnification, sync_offset)


def ideal_lens_dimensionless(d: float, omega_p: float, magnification: float, sync_offset=0.0) -> TimeLensSpec:
    """Lens with dimensionless focal GDD ``d = 2 Omega_p^2 D_f``."""
    return ideal_lens(d / (2.0 * omega_p**2), magnification, sync_offset)


def imaging_residual(lens: TimeLensSpec) -> float:
    """|1/D_in + 1/D_out - 1/D_f| * |D_f| (zero for a consistent lens)."""
    if lens.degenerate:
        return 0.0
    return abs(lens.focal_gdd * (1 / lens.input_gdd + 1 / lens.output_gdd) - 1.0)


@dataclass(frozen=True)
class ApertureReport:
    aperture: float  # T_A, ps
    focal_gdd: float
    magnification: float
    sigma_o: float
    lower_bound_sigma4: float  # rad^4/ps^4
    upper_bound_sigma: float  # rad/ps
    lower_margin: float  # sigma_o^4 / lower bound
    upper_margin: float  # upper bound / sigma_o
    compat_margin: float
    safety: float
    lower_ok: bool
    upper_ok: bool
    compat_ok: bool

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok and self.compat_ok

    def rows(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)] + [("passed", self.passed)]

    def to_table(self) -> str:
        rows = self.rows()
        w = max(len(k) for k, _ in rows)
        out = []
        for k, v in rows:
            s = f"{v:.6g}" if isinstance(v, float) else str(v)
            out.append(f"{k:<{w}}  {s}")
        return "\n".join(out)

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["quantity", "value"])
            for k, v in self.rows():
                w.writerow([k, f"{v:.10g}" if isinstance(v, float) else v])
        return path


def _safe_div(a, b):
    return math.inf if b == 0 else a / b


def check_aperture(lens: TimeLensSpec, sigma_o: float, safety: float = 10.0) -> ApertureReport:
    """Fraunhofer (lower) and aperture (upper) bounds on the ordinary-photon bandwidth.

    Strong inequalities are read as "exceeds by at least ``safety``".
    """
    if not sigma_o > 0:
        raise LensError("sigma_o must be positive")
    m, df, ta = lens.magnification, lens.focal_gdd, lens.aperture
    lever = (m - 1.0) ** 2 / m**2  # (D_in / D_f)^2
    lower = _safe_div(1.0, 4.0 * df**2 * lever)
    if math.isinf(ta):
        upper = math.inf
    else:
        upper = _safe_div(ta * abs(m), abs(df) * abs(m - 1.0) * math.sqrt(8.0 * LN2))
    compat_rhs = (4.0 * LN2) ** 2 * df**2 * lever
    compat = _safe_div(ta**4, compat_rhs)
    lower_margin = _safe_div(sigma_o**4, lower)
    upper_margin = _safe_div(upper, sigma_o)
    return ApertureReport(
        aperture=ta,
        focal_gdd=df,
        magnification=m,
        sigma_o=sigma_o,
        lower_bound_sigma4=lower,
        upper_bound_sigma=upper,
        lower_margin=lower_margin,
        upper_margin=upper_margin,
        compat_margin=compat,
        safety=safety,
        lower_ok=lower_margin >= safety,
        upper_ok=sigma_o < upper,
        compat_ok=compat >= safety,
    )


def post_lens_intensity(model: SourceModel, lens: TimeLensSpec, t, t_delay: float = 0.0):
    """I_out(t) = I_o((t - t_delay) / M) / |M|."""
    m = lens.magnification
    t = np.asarray(t, float)
    return src.intensity(model, "o", (t - t_delay) / m) / abs(m)


def synchronized_tau1(model: SourceModel, lens: TimeLensSpec) -> float:
    """Linear-phase constant of the transfer function when the lens axis tracks the photon."""
    return -(model.t0 + model.tau_o + lens.sync_offset)


def transfer_function(lens: TimeLensSpec, omega, omega_bar, tau1=0.0, tau2=0.0, phase=0.0):
    """G_o(W, Wbar) = sqrt(2 pi i D_f) exp(-i M D_f (W - Wbar/M)^2 / 2 + i W tau2 + i Wbar tau1 + i phase)."""
    m, df = lens.magnification, lens.focal_gdd
    omega = np.asarray(omega, float)
    omega_bar = np.asarray(omega_bar, float)
    pref = cmath.sqrt(2j * math.pi * df)
    ph = -0.5 * m * df * (omega - omega_bar / m) ** 2 + omega * tau2 + omega_bar * tau1 + phase
    return pref * np.exp(1j * ph)


def _dimless(model: SourceModel, lens: TimeLensSpec):
    k = math.sqrt(2.0) * model.omega_p / model.sigma_s
    return k * model.tau_o, k * model.tau_e, 2.0 * model.omega_p**2 * lens.focal_gdd


def output_jsa_coefficients(model: SourceModel, lens: TimeLensSpec) -> dict:
    """B11, B12, B22 and Sigma^2 of the post-lens Gaussian JSA."""
    to, te, d = _dimless(model, lens)
    m = lens.magnification
    a = 1.0 + to**2
    return {
        "B11": d**2 * a,
        "B12": d**2 * (1.0 + to * te) / m,
        "B22": d**2 * (1.0 + te**2) / m**2 + (te - to) ** 2 * a,
        "Sigma2": model.omega_p**2 * (a**2 + d**2 / m**2),
    }


def post_lens_jsa_value(model: SourceModel, lens: TimeLensSpec, omega, omega2, tau2=0.0, phase=0.0):
    """Closed-form JSA after the lens, synchronized lens only (sync_offset = 0)."""
    if lens.sync_offset != 0.0:
        raise LensError("closed-form post-lens JSA assumes a synchronized lens (sync_offset = 0)")
    to, te, d = _dimless(model, lens)
    m, df = lens.magnification, lens.focal_gdd
    c = output_jsa_coefficients(model, lens)
    w = np.asarray(omega, float)
    w2 = np.asarray(omega2, float)
    a = 1.0 + to**2
    j0 = model.xi * cmath.exp(1j * phase) * cmath.sqrt(2j * math.pi * df) / cmath.sqrt(a + 1j * d / m)
    quad = c["B11"] * w**2 + 2 * c["B12"] * w * w2 + c["B22"] * w2**2
    psi = tau2 * (w + w2) - d * (m * a * w + (1 + to * te) * w2) ** 2 / (4 * m * c["Sigma2"])
    # extraordinary photon keeps the linear phase of the source JSA
    psi = psi + (model.t0 + model.tau_e) * w2
    return j0 * np.exp(-quad / (4 * c["Sigma2"]) + 1j * psi)


def post_lens_jsa(model: SourceModel, lens: TimeLensSpec, n: int = 257, half_width: float | None = None,
                  omega=None, omega2=None) -> JsaGrid:
    so, se = src.spectral_sigmas(model)
    if omega is None:
        hw = half_width if half_width is not None else 6.0 * max(so, se)
        omega = src.uniform_axis(n, hw)
    if omega2 is None:
        omega2 = omega.copy()
    vals = post_lens_jsa_value(model, lens, omega[:, None], omega2[None, :])
    return JsaGrid(np.asarray(omega, float), np.asarray(omega2, float), vals, "gaussian-post-lens")


def post_lens_sigma_o(model: SourceModel, lens: TimeLensSpec) -> float:
    """Spectral std of the ordinary photon after the lens.

    sigma^2 = Omega_p^2/D^2 [D^2/M^2 + (1+T_o^2)^2] (1+T_o^2) eta
              / [(1+T_o^2)^2 eta - (1+T_o T_e)^2 / M^2],
    eta = M_opt^2/M^2 + (T_e-T_o)^2/D^2.  This equals sigma_e^2 * eta.
    """
    to, te, d = _dimless(model, lens)
    m = lens.magnification
    a = 1.0 + to**2
    eta = (1 + te**2) / (a * m**2) + (te - to) ** 2 / d**2
    num = model.omega_p**2 / d**2 * (d**2 / m**2 + a**2) * a * eta
    den = a**2 * eta - (1 + to * te) ** 2 / m**2
    return math.sqrt(num / den)


def symmetric_magnification(model: SourceModel, d: float, sign: int = 1) -> float:
    """Magnification giving equal marginal widths after the lens (needs |D| > |T_e - T_o|)."""
    k = math.sqrt(2.0) * model.omega_p / model.sigma_s
    to, te = k * model.tau_o, k * model.tau_e
    if abs(d) <= abs(te - to):
        raise LensError(f"no symmetric magnification: |D|={abs(d):.4g} <= |T_e-T_o|={abs(te - to):.4g}")
    m_opt = math.sqrt((1 + te**2) / (1 + to**2))
    return math.copysign(1.0, sign) * m_opt / math.sqrt(1.0 - (te - to) ** 2 / d**2)
