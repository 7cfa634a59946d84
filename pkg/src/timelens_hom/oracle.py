"""Brute-force tensor-grid quadrature of the source and HOM integrals.

Nothing here uses the Gaussian closed forms: the JSA is sampled pointwise
(Gaussian model or exact sinc) and every integral is a fixed-order sum over
uniform grids.  Chirp kernels exp(i a (W - y)^2) are applied either directly
on the frequency grid (only when the grid resolves the phase) or through the
exact Fourier transform of the chirp, evaluated on a time grid sized to
resolve every oscillation.
"""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import source as src
from .lens import TimeLensSpec, transfer_function
from .source import JsaGrid, SourceModel

SAMPLES_PER_CYCLE = 8


class OracleError(RuntimeError):
    pass


class NyquistError(OracleError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    n: int = 129
    half_width: float = 6.0  # in units of the largest marginal std

    def __post_init__(self):
        if self.n < 33 or self.n % 2 == 0:
            raise ValueError("quadrature needs an odd number of points >= 33")
        if self.half_width < 4:
            raise ValueError("quadrature half-width must be >= 4 sigma")

    def axis(self, model: SourceModel) -> np.ndarray:
        ax = src.uniform_axis(self.n, self.half_width * max(src.spectral_sigmas(model)))
        if ax[1] - ax[0] > src.resolving_step(model):
            raise OracleError(f"{self.n} points under-resolve the JSA "
                              f"(spacing {ax[1] - ax[0]:.3g} > {src.resolving_step(model):.3g} rad/ps)")
        return ax


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    h = x[1] - x[0]
    w = np.full(x.shape, h)
    w[0] = w[-1] = h / 2
    return w


def required_points(phase_range: float) -> int:
    return int(math.ceil(SAMPLES_PER_CYCLE * phase_range / (2 * math.pi)))


def chirp_kernel_direct(omega: np.ndarray, y: np.ndarray, a: float) -> np.ndarray:
    """K[i, l] = exp(i a (omega_i - y_l)^2) * w_i, refusing under-resolved grids."""
    phase = a * (omega[:, None] - y[None, :]) ** 2
    need = required_points(float(phase.max() - phase.min()))
    if len(omega) < need:
        raise NyquistError(f"grid of {len(omega)} points under-resolves the chirp phase (needs {need})")
    return np.exp(1j * phase) * trapezoid_weights(omega)[:, None]


def chirp_convolve(F: np.ndarray, omega: np.ndarray, y: np.ndarray, a: float) -> np.ndarray:
    """G[j, l] = sum_i F[i, j] exp(i a (omega_i - y_l)^2) w_i via the chirp's Fourier transform.

    With f^(t) = sum_i f_i exp(-i omega_i t) w_i and
    K^(t) = sqrt(pi / (-i a)) exp(-i t^2 / 4a), the convolution is
    (1/2 pi) int f^(t) K^(t) exp(i y t) dt, integrated over |t| < pi/h where
    the sampled spectrum is alias-free.
    """
    if a == 0:
        raise OracleError("chirp rate must be nonzero")
    h = omega[1] - omega[0]
    t_max = math.pi / h
    rate = float(np.max(np.abs(y)) + np.max(np.abs(omega)) + t_max / (2 * abs(a)))
    nt = required_points(2 * t_max * rate) + 1
    nt += 1 - nt % 2
    t = np.linspace(-t_max, t_max, nt)
    E = np.exp(-1j * np.outer(t, omega)) * trapezoid_weights(omega)
    Fh = E @ F
    Kh = cmath.sqrt(math.pi / (-1j * a)) * np.exp(-1j * t**2 / (4 * a))
    B = np.exp(1j * np.outer(y, t)) * (trapezoid_weights(t) * Kh / (2 * math.pi))
    return (B @ Fh).T


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    imag: float
    n: int
    method: str

    @property
    def imag_ratio(self) -> float:
        return abs(self.imag) / max(abs(self.value), 1e-12)


def _pint_F(model, omega, dt, dtau, kind):
    h = omega[1] - omega[0]
    shift = max(abs(dt), abs(dtau - dt))
    if shift * h > 2 * math.pi / SAMPLES_PER_CYCLE:
        need = 2 * math.pi / (SAMPLES_PER_CYCLE * shift)
        raise NyquistError(f"delay {shift:.3g} ps under-resolved by spacing {h:.3g} rad/ps (max {need:.3g})")
    mag = np.abs(src.jsa_value(model, omega[:, None], omega[None, :], kind))
    return mag * np.exp(1j * omega[:, None] * dt - 1j * omega[None, :] * (dtau - dt))


def _numeric_pb(mag2, omega):
    w = trapezoid_weights(omega)
    return float(w @ mag2 @ w)


def pint_numeric(model: SourceModel, lens: TimeLensSpec, dt: float | None = None, dtau: float = 0.0,
                 spec: QuadratureSpec = QuadratureSpec(), kind: str = "gaussian",
                 method: str = "fresnel", imag_tol: float = 1e-6) -> QuadratureResult:
    """Quadruple integral for p_int.

    The sum factorises: with F[i, j] = |J(W_i, W'_j)| exp(i W_i dt - i W'_j (dtau - dt))
    and G[j, l] = sum_i F[i, j] exp(i a (W_i - M W_l)^2), a = D_f / 2M,
    the integral equals sum_{j,l} G[j, l] conj(G[l, j]).
    """
    if dt is None:
        dt = lens.sync_offset
    m, df = lens.magnification, lens.focal_gdd
    omega = spec.axis(model)
    w = trapezoid_weights(omega)
    F = _pint_F(model, omega, dt, dtau, kind)
    pb = _numeric_pb(np.abs(F) ** 2, omega)
    a = df / (2 * m)
    y = m * omega
    if method == "fresnel":
        G = chirp_convolve(F, omega, y, a)
        total = np.sum(G * np.conj(G.T) * w[:, None] * w[None, :])
    elif method == "factorized":
        G = F.T @ chirp_kernel_direct(omega, y, a)
        total = np.sum(G * np.conj(G.T) * w[:, None] * w[None, :])
    elif method == "naive":
        total = _pint_naive(F, omega, w, a, m)
    else:
        raise ValueError(f"unknown method {method!r}")
    val = df / (2 * math.pi * pb) * total
    res = QuadratureResult(float(val.real), float(val.imag), spec.n, method)
    if res.imag_ratio > imag_tol:
        raise OracleError(f"p_int imaginary residual {res.imag:.3g} exceeds {imag_tol:g} of {res.value:.3g}")
    return res


def _pint_naive(F, omega, w, a, m):
    """Literal O(N^4) sum, one outer index at a time in fixed order."""
    chirp_kernel_direct(omega, m * omega, a)  # resolution check only
    y = m * omega
    Fc = np.conj(F)
    # B[k, j] = exp(-i a (W_k - M W_j)^2) w_k
    B = np.exp(-1j * a * (omega[:, None] - y[None, :]) ** 2) * w[:, None]
    total = 0.0 + 0.0j
    for i in range(len(omega)):
        A_il = np.exp(1j * a * (omega[i] - y) ** 2) * w[i]  # over l
        # sum_{j,k,l} F[i,j] Fc[k,l] A[i,l] B[k,j] w_j w_l
        t = np.einsum("j,kl,l,kj,j,l->", F[i], Fc, A_il, B, w, w, optimize=False)
        total += t
    return total


def moments(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    w = trapezoid_weights(x)
    norm = np.sum(w * y)
    mean = np.sum(w * y * x) / norm
    var = np.sum(w * y * (x - mean) ** 2) / norm
    return float(mean), float(math.sqrt(var))


def marginal_numeric(grid: JsaGrid, axis: str = "o") -> tuple[np.ndarray, np.ndarray]:
    """S_o(W) = 2 pi int |J(W, W')|^2 dW' (axis 'o'), or the 'e' analogue."""
    mag2 = np.abs(grid.values) ** 2
    if axis == "o":
        return grid.omega, 2 * math.pi * mag2 @ trapezoid_weights(grid.omega2)
    if axis == "e":
        return grid.omega2, 2 * math.pi * trapezoid_weights(grid.omega) @ mag2
    raise ValueError("axis must be 'o' or 'e'")


def integrate(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum(trapezoid_weights(x) * y))


def intensity_numeric(model: SourceModel, t, mu: str = "o", spec: QuadratureSpec = QuadratureSpec(),
                      kind: str = "gaussian") -> np.ndarray:
    """I_mu(t) = (1/2pi) int dW'' |int J(W, W'') exp(-i W (t - k'L)) dW|^2 (linear dispersion).

    A spectrum sampled at spacing h only represents times within pi/h of the
    photon's linear-phase centre; requests outside that window are refused.
    """
    omega = spec.axis(model)
    w = trapezoid_weights(omega)
    J = src.jsa_value(model, omega[:, None], omega[None, :], kind)
    if mu == "e":
        J, delay, centre = J.T, model.delay_e, model.tau_e
    elif mu == "o":
        delay, centre = model.delay_o, model.tau_o
    else:
        raise ValueError("mu must be 'o' or 'e'")
    t = np.atleast_1d(np.asarray(t, float))
    reach = float(np.max(np.abs(t - delay - model.t0 - centre)))
    limit = math.pi / (omega[1] - omega[0])
    if reach > limit:
        raise NyquistError(f"time {reach:.3g} ps from the photon centre exceeds the alias-free window {limit:.3g} ps")
    E = np.exp(-1j * np.outer(t - delay, omega)) * w  # (nt, n)
    amp = E @ J  # (nt, n''), amplitude at each idle frequency
    return (np.abs(amp) ** 2 @ w) / (2 * math.pi)


def transfer_apply_numeric(grid: JsaGrid, lens: TimeLensSpec, omega_out=None, tau1=0.0, tau2=0.0,
                           phase=0.0, method: str = "fresnel") -> JsaGrid:
    """J_out(W, W') = int G_o(W, Wbar) J(Wbar, W') dWbar / 2 pi on the output grid ``omega_out``."""
    omega_in = grid.omega
    if omega_out is None:
        omega_out = omega_in.copy()
    omega_out = np.asarray(omega_out, float)
    m, df = lens.magnification, lens.focal_gdd
    if method == "direct":
        G = transfer_function(lens, omega_out[:, None], omega_in[None, :], tau1, tau2, phase)
        ph = 0.5 * m * df * (omega_out[:, None] - omega_in[None, :] / m) ** 2
        need = required_points(float(ph.max() - ph.min()))
        if len(omega_in) < need:
            raise NyquistError(f"input grid of {len(omega_in)} points under-resolves G_o (needs {need})")
        out = (G * trapezoid_weights(omega_in)) @ grid.values / (2 * math.pi)
    elif method == "fresnel":
        g = grid.values * np.exp(1j * omega_in * tau1)[:, None]
        # -(M D_f / 2)(W - Wbar/M)^2 = -(D_f / 2M)(Wbar - M W)^2
        conv = chirp_convolve(g, omega_in, m * omega_out, -df / (2 * m))  # (n', n_out)
        pref = cmath.sqrt(2j * math.pi * df) / (2 * math.pi)
        out = pref * np.exp(1j * (omega_out * tau2 + phase))[:, None] * conv.T
    else:
        raise ValueError(f"unknown method {method!r}")
    return JsaGrid(omega_out, grid.omega2.copy(), out, grid.kind + "-numeric-post-lens")


def unitarity_offdiag(lens: TimeLensSpec, omega_in: np.ndarray, omega_out: np.ndarray, chunk: int = 8192) -> float:
    """Off-diagonal mass of the discretised int G*(W, W1) G(W, W2) dW / 2pi.

    Unitarity makes this proportional to delta(W1 - W2); the returned ratio
    sum_{a != b} |U_ab|^2 / sum_a |U_aa|^2 vanishes as the output window grows.
    """
    m, df = lens.magnification, lens.focal_gdd
    slope = abs(m * df) * (np.max(np.abs(omega_out)) + np.max(np.abs(omega_in)) / abs(m))
    h_out = omega_out[1] - omega_out[0]
    if h_out > 2 * math.pi / (SAMPLES_PER_CYCLE * slope):
        raise NyquistError(f"output spacing {h_out:.3g} under-resolves G_o (max {2 * math.pi / (8 * slope):.3g})")
    w_out = trapezoid_weights(omega_out)
    U = np.zeros((len(omega_in), len(omega_in)), complex)
    for k in range(0, len(omega_out), chunk):
        G = transfer_function(lens, omega_out[k:k + chunk, None], omega_in[None, :])
        U += (np.conj(G).T * w_out[k:k + chunk]) @ G
    diag = np.diag(U)
    off = U - np.diag(diag)
    return float(np.sum(np.abs(off) ** 2) / np.sum(np.abs(diag) ** 2))


def unitarity_grid(lens: TimeLensSpec, omega_in: np.ndarray, half_width: float) -> np.ndarray:
    """Coarsest output axis on [-half_width, half_width] that ``unitarity_offdiag`` accepts."""
    slope = abs(lens.magnification * lens.focal_gdd) * (half_width + np.max(np.abs(omega_in)) / abs(lens.magnification))
    h = 2 * math.pi / (SAMPLES_PER_CYCLE * slope)
    n = int(math.ceil(2 * half_width / h)) + 1
    return np.linspace(-half_width, half_width, n + 1 - n % 2)


def norm_preservation(grid: JsaGrid, out: JsaGrid) -> float:
    """Relative change of int |J|^2 under the lens (zero for a unitary transfer)."""
    w1, w2 = trapezoid_weights(grid.omega), trapezoid_weights(grid.omega2)
    n_in = float(w1 @ np.abs(grid.values) ** 2 @ w2)
    n_out = float(trapezoid_weights(out.omega) @ np.abs(out.values) ** 2 @ trapezoid_weights(out.omega2))
    return abs(n_out - n_in) / n_in


@dataclass(frozen=True)
class Check:
    quantity: str
    closed_form: float
    numeric: float
    tolerance: float
    error: float | None = None  # supplied when the scalars summarise a field comparison

    @property
    def rel_err(self) -> float:
        if self.error is not None:
            return self.error
        if self.closed_form == 0:
            return abs(self.numeric)
        return abs(self.numeric - self.closed_form) / abs(self.closed_form)

    @property
    def passed(self) -> bool:
        return self.rel_err < self.tolerance


REPORT_COLUMNS = ("quantity", "closed_form", "numeric", "rel_err", "tolerance", "pass")


def report_rows(checks):
    for c in checks:
        yield (c.quantity, f"{c.closed_form:.12g}", f"{c.numeric:.12g}", f"{c.rel_err:.3e}",
               f"{c.tolerance:.1e}", "PASS" if c.passed else "FAIL")


def write_report_csv(checks, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        w.writerows(report_rows(checks))
    return path


def report_table(checks) -> str:
    rows = [REPORT_COLUMNS] + list(report_rows(checks))
    widths = [max(len(r[i]) for r in rows) for i in range(len(REPORT_COLUMNS))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows)
