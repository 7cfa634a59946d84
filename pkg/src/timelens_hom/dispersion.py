"""Refractive indices, wave vectors and group quantities of a uniaxial crystal.

Units used throughout the package: time in ps, angular frequency in rad/ps,
GDD in ps^2, crystal length in mm, wavelength in micrometres.

Sellmeier sets have the rational form

    n^2(lam) = a + sum_i b_i / (lam^2 - c_i) - d * lam^2      (lam in um)

which covers the usual BBO parameterisations.  Derivatives with respect to
wavelength are analytic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

C_MM_PER_PS = 0.299792458
C_UM_PER_PS = 299.792458

WINDOW_UM = (0.2, 3.0)


class DispersionError(ValueError):
    """Invalid dispersion input (wavelength outside window, bad crystal)."""


class PhaseMatchingError(DispersionError):
    """No collinear degenerate phase-matching angle in the search bracket."""


@dataclass(frozen=True)
class SellmeierSet:
    a: float
    poles: tuple[tuple[float, float], ...] = ()
    d: float = 0.0
    window: tuple[float, float] = WINDOW_UM
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple((float(b), float(c)) for b, c in self.poles))
        lo, hi = self.window
        if not 0 < lo < hi:
            raise DispersionError(f"bad Sellmeier window {self.window}")
        for _, c in self.poles:
            if c > 0 and lo**2 <= c <= hi**2:
                raise DispersionError(f"Sellmeier pole at {math.sqrt(c):.4g} um inside window")

    def _check(self, lam):
        lam = np.asarray(lam, dtype=float)
        lo, hi = self.window
        if np.any((lam < lo) | (lam > hi)) or not np.all(np.isfinite(lam)):
            raise DispersionError(
                f"wavelength outside Sellmeier window [{lo}, {hi}] um: {lam}"
            )
        return lam

    def n_squared(self, lam):
        lam = self._check(lam)
        l2 = lam * lam
        out = self.a - self.d * l2
        for b, c in self.poles:
            out = out + b / (l2 - c)
        return out

    def derivatives(self, lam):
        """Return ``(n, dn/dlam, d2n/dlam2)`` at ``lam`` (um)."""
        lam = self._check(lam)
        l2 = lam * lam
        # u = n^2 as function of lam; u' and u'' analytic
        u = self.a - self.d * l2
        du = -2.0 * self.d * lam
        d2u = -2.0 * self.d + 0.0 * lam
        for b, c in self.poles:
            q = l2 - c
            u = u + b / q
            du = du - 2.0 * b * lam / q**2
            d2u = d2u - 2.0 * b / q**2 + 8.0 * b * l2 / q**3
        if np.any(u <= 1.0):
            raise DispersionError("Sellmeier set gives n <= 1 inside its window")
        n = np.sqrt(u)
        dn = du / (2.0 * n)
        d2n = d2u / (2.0 * n) - du**2 / (4.0 * n**3)
        return n, dn, d2n


def index(sset: SellmeierSet, lam):
    """Refractive index of one principal polarization at wavelength ``lam`` (um)."""
    n = np.sqrt(sset.n_squared(lam))
    if np.any(n <= 1.0):
        raise DispersionError("Sellmeier set gives n <= 1 inside its window")
    return n if np.ndim(n) else float(n)


# Eimerl et al. (1987) beta-BBO.
BBO_ORDINARY = SellmeierSet(2.7405, ((0.0184, 0.0179),), 0.0155, name="BBO-o")
BBO_EXTRAORDINARY = SellmeierSet(2.3730, ((0.0128, 0.0156),), 0.0044, name="BBO-e")

MATERIALS = {"BBO": (BBO_ORDINARY, BBO_EXTRAORDINARY)}


@dataclass(frozen=True)
class CrystalSpec:
    length_mm: float
    ordinary: SellmeierSet
    extraordinary: SellmeierSet
    cut_angle_deg: float | None = None
    name: str = ""

    def __post_init__(self):
        if not self.length_mm > 0:
            raise DispersionError("crystal length must be positive")
        if self.cut_angle_deg is not None and not 0 < self.cut_angle_deg < 90:
            raise DispersionError("cut angle must lie in (0, 90) degrees")

    @classmethod
    def named(cls, material: str, length_mm: float, cut_angle_deg=None):
        try:
            o, e = MATERIALS[material.upper()]
        except KeyError:
            raise DispersionError(f"unknown material {material!r}; known: {sorted(MATERIALS)}") from None
        return cls(length_mm, o, e, cut_angle_deg, name=material.upper())


def _index_ellipse(crystal: CrystalSpec, lam, theta_deg):
    """Return ``(n, dn, d2n)`` of the extraordinary wave at angle ``theta_deg``."""
    no, dno, d2no = crystal.ordinary.derivatives(lam)
    nE, dnE, d2nE = crystal.extraordinary.derivatives(lam)
    th = math.radians(theta_deg)
    cs, sn = math.cos(th) ** 2, math.sin(th) ** 2
    u = cs / no**2 + sn / nE**2
    du = -2.0 * (cs * dno / no**3 + sn * dnE / nE**3)
    d2u = cs * (6.0 * dno**2 / no**4 - 2.0 * d2no / no**3) + sn * (
        6.0 * dnE**2 / nE**4 - 2.0 * d2nE / nE**3
    )
    n = u**-0.5
    dn = -0.5 * u**-1.5 * du
    d2n = 0.75 * u**-2.5 * du**2 - 0.5 * u**-1.5 * d2u
    return n, dn, d2n


def extraordinary_index(crystal: CrystalSpec, lam, theta_deg: float):
    """Index of the extraordinary wave propagating at ``theta_deg`` to the optic axis."""
    if not 0.0 <= theta_deg <= 90.0:
        raise DispersionError("theta must lie in [0, 90] degrees")
    n = _index_ellipse(crystal, lam, theta_deg)[0]
    return n if np.ndim(n) else float(n)


def wavelength_um(omega):
    """Vacuum wavelength (um) of angular frequency ``omega`` (rad/ps)."""
    return 2.0 * math.pi * C_UM_PER_PS / np.asarray(omega, dtype=float)


def angular_frequency(lam_um):
    return 2.0 * math.pi * C_UM_PER_PS / np.asarray(lam_um, dtype=float)


def _index_triple(crystal, lam, theta_deg, polarization):
    if polarization == "o":
        return crystal.ordinary.derivatives(lam)
    if polarization in ("e", "p"):
        return _index_ellipse(crystal, lam, theta_deg)
    raise DispersionError(f"polarization must be 'p', 'o' or 'e', got {polarization!r}")


@dataclass(frozen=True)
class WaveDispersion:
    k0: float  # rad/mm
    k1: float  # ps/mm
    k2: float  # ps^2/mm
    carrier: float  # rad/ps
    polarization: str

    def __post_init__(self):
        if not (self.k0 > 0 and all(map(math.isfinite, (self.k0, self.k1, self.k2)))):
            raise DispersionError(f"non-physical wave dispersion {self}")


def wave_number(crystal, theta_deg, omega, polarization):
    """k(omega) in rad/mm, without derivatives (used by finite-difference checks)."""
    lam = wavelength_um(omega)
    n = _index_triple(crystal, lam, theta_deg, polarization)[0]
    return n * omega / C_MM_PER_PS


def group_quantities(crystal: CrystalSpec, theta_deg: float, carrier: float, polarization: str) -> WaveDispersion:
    """k, dk/domega and d2k/domega2 at ``carrier`` (rad/ps).

    The pump and the ``e`` subharmonic both see the extraordinary index at
    ``theta_deg``; the ``o`` subharmonic sees the ordinary index.
    """
    lam = float(wavelength_um(carrier))
    n, dn, d2n = (float(x) for x in _index_triple(crystal, lam, theta_deg, polarization))
    k0 = n * carrier / C_MM_PER_PS
    k1 = (n - lam * dn) / C_MM_PER_PS
    # lam^3 n'' / (2 pi c^2) in ps^2/um, converted to ps^2/mm
    k2 = lam**3 * d2n / (2.0 * math.pi * C_UM_PER_PS**2) * 1e3
    return WaveDispersion(k0, k1, k2, float(carrier), polarization)


def phase_mismatch(crystal: CrystalSpec, lam_pump: float, theta_deg: float) -> float:
    """k_p - k_o - k_e (rad/mm) at frequency degeneracy."""
    wp = float(angular_frequency(lam_pump))
    return (
        wave_number(crystal, theta_deg, wp, "p")
        - wave_number(crystal, theta_deg, wp / 2, "o")
        - wave_number(crystal, theta_deg, wp / 2, "e")
    )


def solve_degenerate_angle(crystal: CrystalSpec, lam_pump: float, bracket=(0.1, 89.9)) -> float:
    """Type-II (e -> o + e) collinear degenerate phase-matching angle in degrees."""
    lo, hi = bracket
    f = lambda th: phase_mismatch(crystal, lam_pump, th)
    flo, fhi = f(lo), f(hi)
    if not np.sign(flo) * np.sign(fhi) < 0:
        raise PhaseMatchingError(
            f"no phase matching for pump at {lam_pump} um: mismatch {flo:.4g} .. {fhi:.4g} rad/mm"
        )
    theta = bisect(f, lo, hi, xtol=1e-12, rtol=1e-12, maxiter=200)
    return float(theta)


@dataclass(frozen=True)
class ChirpedPulse:
    """Gaussian pulse: intensity std ``dt`` (ps), chirp ``chirp`` (ps^2), spectral std ``sigma``.

    ``chirp = inf`` marks a transform-limited pulse (sigma * dt = 1/2).
    """

    dt: float
    chirp: float = math.inf
    sigma: float = field(default=None)

    def __post_init__(self):
        if not self.dt > 0:
            raise DispersionError("pulse duration must be positive")
        if self.sigma is None:
            object.__setattr__(self, "sigma", self._sigma_from_chirp(self.dt, self.chirp))
        if not self.sigma > 0:
            raise DispersionError("spectral width must be positive")
        if self.sigma * self.dt < 0.5 * (1 - 1e-12):
            raise DispersionError("time-bandwidth product below the transform limit")

    @staticmethod
    def _sigma_from_chirp(dt, chirp):
        if math.isinf(chirp):
            return 0.5 / dt
        return 0.5 / dt * math.sqrt(1.0 + 4.0 * dt**4 / chirp**2)

    @classmethod
    def transform_limited(cls, dt: float) -> "ChirpedPulse":
        return cls(dt, math.inf, 0.5 / dt)

    @property
    def dt0(self) -> float:
        """Duration of the transform-limited pulse with the same spectrum."""
        return 0.5 / self.sigma

    @property
    def accumulated_gdd(self) -> float:
        """GDD that turns the transform-limited equivalent into this pulse."""
        c = self.chirp
        if math.isinf(c):
            return 0.0
        return 4.0 * self.dt**4 * c / (4.0 * self.dt**4 + c * c)


def propagate_chirped(pulse: ChirpedPulse, gdd: float) -> ChirpedPulse:
    """Pass a Gaussian pulse through quadratic dispersion ``gdd`` (ps^2).

    The spectrum is unchanged; the pulse is re-expressed through the total GDD
    acting on its transform-limited equivalent.
    """
    dt0 = pulse.dt if math.isinf(pulse.chirp) else pulse.dt0
    total = pulse.accumulated_gdd + gdd
    if total == 0.0:
        return ChirpedPulse(dt0, math.inf, pulse.sigma)
    dt = math.sqrt(dt0**2 + total**2 / (4.0 * dt0**2))
    chirp = total + 4.0 * dt0**4 / total
    return ChirpedPulse(dt, chirp, pulse.sigma)


@dataclass(frozen=True)
class FraunhoferCheck:
    ok: bool
    margin: float  # (D1 + D2)^2 / (1 / 4 sigma^4)
    threshold: float  # 1 / 4 sigma^4, ps^4


def fraunhofer_ok(pulse: ChirpedPulse, total_gdd: float, safety: float = 10.0) -> FraunhoferCheck:
    """Fraunhofer dispersion limit for a (possibly chirped) pulse.

    ``total_gdd`` is the GDD accumulated from the transform-limited state,
    i.e. the crystal GDD plus the GDD of the medium in front of the lens.
    """
    if safety < 1:
        raise DispersionError("safety factor must be >= 1")
    dt, c = pulse.dt, pulse.chirp
    ratio = 0.0 if math.isinf(c) else 4.0 * dt**4 / c**2
    threshold = 4.0 * dt**4 / (1.0 + ratio) ** 2
    margin = total_gdd**2 / threshold
    return FraunhoferCheck(bool(margin > safety), margin, threshold)
