"""HOM coincidence rate behind a time lens.

Two computation paths are kept side by side: the numeric one builds the 4x4
complex matrix of the Gaussian integral and inverts it; the closed one uses
the explicit reduced 2x2 form.  ``p_int`` runs the matrix path and, unless
python runs with ``-O``, checks it against the closed path.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lens import TimeLensSpec
from .source import DegenerateSourceError, SourceModel

CROSS_CHECK_RTOL = 1e-7

# Published figures for the EOPM lens (theta_max = 25 rad, f_RF = 40 GHz).
# They follow from 4 D_f^2 Omega_p^2 sigma_cw^2, a quarter of the ratio that
# actually sets the visibility; kept for side-by-side reporting only.
QUOTED_EOPM_RATIO = 0.55
QUOTED_EOPM_VISIBILITY = 0.6


class HomError(ValueError):
    pass


@dataclass(frozen=True)
class DimensionlessParams:
    t_o: float
    t_e: float
    d: float
    m: float
    omega_p: float

    def __post_init__(self):
        if self.t_o == self.t_e:
            raise DegenerateSourceError("T_o == T_e")
        if self.m == 0:
            raise HomError("magnification must be nonzero")
        if not self.omega_p > 0:
            raise HomError("omega_p must be positive")
        if self.d == 0:
            raise HomError("dimensionless focal GDD must be nonzero")

    @property
    def delta(self) -> float:
        return self.t_e - self.t_o

    @property
    def sigma_cw(self) -> float:
        return self.omega_p / abs(self.delta)

    @property
    def focal_gdd(self) -> float:
        return self.d / (2.0 * self.omega_p**2)

    def with_(self, **kw) -> "DimensionlessParams":
        vals = dict(t_o=self.t_o, t_e=self.t_e, d=self.d, m=self.m, omega_p=self.omega_p)
        vals.update(kw)
        return DimensionlessParams(**vals)


def dimensionless(model: SourceModel, lens: TimeLensSpec) -> DimensionlessParams:
    k = math.sqrt(2.0) * model.omega_p / model.sigma_s
    return DimensionlessParams(
        t_o=k * model.tau_o,
        t_e=k * model.tau_e,
        d=2.0 * model.omega_p**2 * lens.focal_gdd,
        m=lens.magnification,
        omega_p=model.omega_p,
    )


@dataclass(frozen=True)
class GammaForm:
    nu: float
    g11: float
    g12: float
    g22: float
    det_lambda: float
    f_plus: float
    f_minus: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])


# maps w = (dt, dt - dtau) onto v = (dt, dt - dtau, -dt, dtau - dt)
_P = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


def lambda_matrix(params: DimensionlessParams, dt=0.0, dtau=0.0, extended: bool = False):
    """Return the 4x4 quadratic-form matrix (ps^2) and the linear vector v (ps).

    ``extended`` builds the matrix in long double, for residuals of the refinement step.
    """
    real, cplx = (np.longdouble, np.clongdouble) if extended else (float, complex)
    to, te, d, m, wp = (real(x) for x in (params.t_o, params.t_e, params.d, params.m, params.omega_p))
    a, b, c = 1 + to**2, 1 + to * te, 1 + te**2
    j = cplx(1j)
    lam = np.array(
        [
            [a - j * d / m, b, 0, j * d],
            [b, c + j * d * m, -j * d, 0],
            [0, -j * d, a + j * d / m, b],
            [j * d, 0, b, c - j * d * m],
        ],
        dtype=cplx,
    ) / (2 * wp**2)
    v = np.array([dt, dt - dtau, -dt, dtau - dt], dtype=float)
    return lam, v


def f_pm(params: DimensionlessParams):
    to, te, d, m = params.t_o, params.t_e, params.d, params.m
    den = m**2 * params.delta**2
    fp = d**2 * ((1 + m) ** 2 + (te + m * to) ** 2) / den
    fm = d**2 * ((1 - m) ** 2 + (te - m * to) ** 2) / den
    return fp, fm


def gamma_closed(params: DimensionlessParams) -> GammaForm:
    to, te, d, m, wp = params.t_o, params.t_e, params.d, params.m, params.omega_p
    fp, fm = f_pm(params)
    det = params.delta**4 / (16 * wp**8) * (1 + m**2 * fp * fm / d**2)
    nu = params.delta**2 / (4 * wp**6 * det)
    return GammaForm(
        nu=nu,
        g11=nu * (1 + te**2 + m**2 * fp),
        g12=nu * (-1 - te * to - m * fp),
        g22=nu * (1 + to**2 + fp),
        det_lambda=det,
        f_plus=fp,
        f_minus=fm,
    )


@dataclass(frozen=True)
class MatrixPath:
    gamma: np.ndarray  # real part of the reduced form, ps^-2
    det_lambda: float
    imag_residual: float  # largest imaginary part relative to the real scale
    condition: float


# (permutation, sign) pairs of the Leibniz expansion
_PERMS = [(q, (-1) ** sum(q[i] > q[k] for i in range(4) for k in range(i + 1, 4)))
          for q in itertools.permutations(range(4))]


def _det4(a) -> complex:
    return sum(s * a[0, q[0]] * a[1, q[1]] * a[2, q[2]] * a[3, q[3]] for q, s in _PERMS)


def gamma_numeric(params: DimensionlessParams, refine: int = 2) -> MatrixPath:
    """Reduced form from inverting the 4x4 matrix: Gamma = P^T Lambda^-1 P.

    The solve runs in double precision with ``refine`` rounds of iterative
    refinement against long-double residuals; the determinant is expanded in
    long double.  Plain double loses about cond(Lambda) * eps, which reaches
    1e-11 for large D.
    """
    lam_x, _ = lambda_matrix(params, extended=True)
    lam = lam_x.astype(complex)
    cond = float(np.linalg.cond(lam))
    if not np.isfinite(cond) or cond > 1e14:
        raise HomError(f"quadratic-form matrix is numerically singular (cond = {cond:.3g})")
    p_x = _P.astype(np.longdouble)
    x = np.linalg.solve(lam, _P).astype(np.clongdouble)
    for _ in range(refine):
        x = x + np.linalg.solve(lam, (p_x - lam_x @ x).astype(complex))
    g = p_x.T @ x
    det = _det4(lam_x)
    resid = max(np.max(np.abs(g.imag)) / np.max(np.abs(g.real)), abs(det.imag) / abs(det.real))
    gr = g.real.astype(float)
    return MatrixPath(0.5 * (gr + gr.T), float(det.real), float(resid), cond)


def _prefactor(params: DimensionlessParams, det: float) -> float:
    return abs(params.delta) * params.focal_gdd / (params.omega_p**2 * math.sqrt(det))


def _cross_check(params, mp: MatrixPath):
    gc = gamma_closed(params)
    tol = CROSS_CHECK_RTOL + 1e-15 * mp.condition
    eg = np.max(np.abs(mp.gamma - gc.matrix)) / np.max(np.abs(gc.matrix))
    ed = abs(mp.det_lambda - gc.det_lambda) / gc.det_lambda
    if eg > tol or ed > tol:
        raise AssertionError(f"matrix and closed paths disagree: gamma {eg:.3g}, det {ed:.3g} ({params})")


def reduced_form(params: DimensionlessParams, method: str = "matrix"):
    """Return ``(Gamma 2x2, det Lambda)`` from the chosen path."""
    if method == "matrix":
        mp = gamma_numeric(params)
        if __debug__:
            _cross_check(params, mp)
        return mp.gamma, mp.det_lambda
    if method == "closed":
        gc = gamma_closed(params)
        return gc.matrix, gc.det_lambda
    raise ValueError(f"method must be 'matrix' or 'closed', got {method!r}")


def p_int(params: DimensionlessParams, dt=0.0, dtau=0.0, method: str = "matrix"):
    """Conditional probability of destructive interference (vectorised over dt, dtau)."""
    g, det = reduced_form(params, method)
    dt, dtau = np.broadcast_arrays(np.asarray(dt, float), np.asarray(dtau, float))
    w1, w2 = dt, dt - dtau
    q = g[0, 0] * w1**2 + 2 * g[0, 1] * w1 * w2 + g[1, 1] * w2**2
    out = _prefactor(params, det) * np.exp(-0.5 * q)
    return out if out.ndim else float(out)


def p_int_sync(params: DimensionlessParams, dtau=0.0):
    """Perfect-synchronization form 2D / (|dT| sqrt(1 + M^2 F+ F- / D^2)) exp(-Gamma22 dtau^2 / 2)."""
    fp, fm = f_pm(params)
    s = 1 + params.m**2 * fp * fm / params.d**2
    g22 = 4 * params.sigma_cw**2 * (1 + params.t_o**2 + fp) / s
    dtau = np.asarray(dtau, float)
    out = 2 * params.d / (abs(params.delta) * math.sqrt(s)) * np.exp(-0.5 * g22 * dtau**2)
    return out if out.ndim else float(out)


def dip_location(params: DimensionlessParams, dt: float, method: str = "matrix") -> float:
    g, _ = reduced_form(params, method)
    return (1.0 + g[0, 1] / g[1, 1]) * dt


def visibility(params: DimensionlessParams, dt: float = 0.0) -> float:
    """V = 2D exp(-gamma dt^2) / (|dT| sqrt(1 + M^2 F+ F- / D^2)), gamma = 2 Omega_p^2 / (1 + T_o^2 + F+)."""
    fp, fm = f_pm(params)
    s = 1 + params.m**2 * fp * fm / params.d**2
    gam = 2 * params.omega_p**2 / (1 + params.t_o**2 + fp)
    return 2 * params.d * math.exp(-gam * dt**2) / (abs(params.delta) * math.sqrt(s))


def optimal_magnification(params: DimensionlessParams) -> tuple[float, float]:
    m = math.sqrt((1 + params.t_e**2) / (1 + params.t_o**2))
    return m, -m


def optimal_visibility(params: DimensionlessParams) -> float:
    """Visibility at M_opt and perfect synchronization: 2D / sqrt(dT^2 + 4 D^2)."""
    return 2 * params.d / math.sqrt(params.delta**2 + 4 * params.d**2)


def g_of_m(params: DimensionlessParams) -> float:
    fp, fm = f_pm(params)
    return params.m**2 * fp * fm


def lensless_p_int(params: DimensionlessParams, dtau=0.0):
    dtau = np.asarray(dtau, float)
    out = 2 / math.sqrt(4 + (params.t_e + params.t_o) ** 2) * np.exp(-2 * params.sigma_cw**2 * dtau**2)
    return out if out.ndim else float(out)


def cw_p_int(sigma_cw: float, dtau=0.0):
    """Lensless p_int in the CW-pump limit: unit visibility, width 0.5 / sigma_cw."""
    dtau = np.asarray(dtau, float)
    out = np.exp(-2 * sigma_cw**2 * dtau**2)
    return out if out.ndim else float(out)


def correlation_times(params: DimensionlessParams) -> tuple[float, float]:
    """(tau_cw, tau_pulsed) = (0.5 / sigma_cw, Gamma22^-1/2), ps."""
    g, _ = reduced_form(params)
    return 0.5 / params.sigma_cw, 1.0 / math.sqrt(g[1, 1])


def high_d_parameter(params: DimensionlessParams) -> dict:
    """Both readings of the high focal-GDD criterion.

    ``ratio`` is D^2 / ((T_e - T_o)^2 / 4) = 16 D_f^2 Omega_p^2 sigma_cw^2, which
    is what the optimal visibility depends on: V = (1 + 1/ratio)^-1/2.
    ``quoted`` is 4 D_f^2 Omega_p^2 sigma_cw^2, a factor 4 smaller.
    """
    ratio = 4 * params.d**2 / params.delta**2
    quoted = 4 * params.focal_gdd**2 * params.omega_p**2 * params.sigma_cw**2
    return {
        "ratio": ratio,
        "quoted": quoted,
        "visibility": (1 + 1 / ratio) ** -0.5,
        "visibility_from_quoted": (1 + 1 / quoted) ** -0.5,
    }


@dataclass(frozen=True)
class HomCurve:
    dtau: np.ndarray  # ps
    p_int: np.ndarray
    dt: float
    dtau_min: float
    visibility: float

    @property
    def rate(self) -> np.ndarray:
        """Coincidence rate normalised to its large-delay value."""
        return 1.0 - self.p_int

    def to_csv(self, path, sigma_cw: float | None = None):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            head = ["delta_tau_ps", "p_int", "normalized_rate"]
            if sigma_cw:
                head.append("delta_tau_sigma_cw")
            w.writerow(head)
            for x, p in zip(self.dtau, self.p_int):
                row = [f"{x:.10g}", f"{p:.12g}", f"{1 - p:.12g}"]
                if sigma_cw:
                    row.append(f"{x * sigma_cw:.10g}")
                w.writerow(row)
        return path


def hom_scan(params: DimensionlessParams, dtau, dt: float = 0.0, method: str = "matrix") -> HomCurve:
    dtau = np.asarray(dtau, float)
    if dtau.size == 0:
        raise HomError("empty delay grid")
    p = p_int(params, dt, dtau, method)
    return HomCurve(dtau, np.atleast_1d(p), dt, dip_location(params, dt, method), visibility(params, dt))


def lensless_scan(params: DimensionlessParams, dtau) -> HomCurve:
    dtau = np.asarray(dtau, float)
    if dtau.size == 0:
        raise HomError("empty delay grid")
    p = np.atleast_1d(lensless_p_int(params, dtau))
    return HomCurve(dtau, p, 0.0, 0.0, float(lensless_p_int(params, 0.0)))


def hom_surface(params: DimensionlessParams, dt_grid, dtau_grid, method: str = "matrix"):
    """p_int on the (dt, dtau) product grid; rows follow ``dt_grid``."""
    dt_grid = np.asarray(dt_grid, float)
    dtau_grid = np.asarray(dtau_grid, float)
    if dt_grid.size == 0 or dtau_grid.size == 0:
        raise HomError("empty surface grid")
    return np.asarray(p_int(params, dt_grid[:, None], dtau_grid[None, :], method))


def source_params(model: SourceModel, d: float, m: float) -> DimensionlessParams:
    """Dimensionless parameters of ``model`` with a lens of dimensionless GDD ``d``."""
    k = math.sqrt(2.0) * model.omega_p / model.sigma_s
    return DimensionlessParams(k * model.tau_o, k * model.tau_e, d, m, model.omega_p)


def visibility_vs_m(params: DimensionlessParams, m_grid) -> np.ndarray:
    return np.array([visibility(params.with_(m=float(m)), 0.0) for m in m_grid])

