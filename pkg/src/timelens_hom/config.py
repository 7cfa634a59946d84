"""TOML run configuration: schema, defaults and a validating loader.

Every validation error names the dotted key path and, when the key appears
in the file, its line number.  See ``configs/README.md`` for the schema.
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import dispersion as disp
from . import lens as ln
from . import source as src


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CrystalConfig:
    material: str | None = "BBO"
    length_mm: float = 20.0
    cut_angle_deg: float | None = None
    sellmeier: dict | None = None  # {"ordinary": {...}, "extraordinary": {...}}


@dataclass(frozen=True)
class PumpConfig:
    wavelength_nm: float = 405.0
    fwhm_bandwidth_nm: float | None = None
    fwhm_duration_ps: float | None = None
    t0_ps: float = 0.0


@dataclass(frozen=True)
class SourceConfig:
    sigma_s: float = src.SIGMA_S
    xi: float = 1.0
    jsa_points: int = 257
    jsa_half_width_sigma: float = 6.0
    time_points: int = 401
    time_half_width_sigma: float = 6.0


@dataclass(frozen=True)
class LensConfig:
    realization: str = "ideal"
    magnification: float | str = "optimal"
    sign: int = -1  # branch used when magnification = "optimal"
    d: float | None = 10.0  # dimensionless focal GDD 2 Omega_p^2 D_f (ideal lens)
    focal_gdd_ps2: float | None = None  # alternative to d
    theta_max: float | None = None  # eopm
    f_rf_ghz: float | None = None  # eopm
    tau0_ps: float | None = None  # fwm
    pump_gdd_ps2: float | None = None  # fwm
    sync_offset_ps: float = 0.0
    tau2_ps: float = 0.0
    phase_rad: float = 0.0


@dataclass(frozen=True)
class HomConfig:
    dtau_range_sigma_cw: tuple[float, float] = (-5.0, 5.0)
    dtau_points: int = 401
    low_d: float = 1.0
    high_d: float = 10.0
    surface_d: float = 10.0
    surface_m: float = -2.1
    surface_dt_range_sigma_cw: tuple[float, float] = (-3.0, 3.0)
    surface_dt_points: int = 61
    surface_dtau_range_sigma_cw: tuple[float, float] = (-6.0, 6.0)
    surface_dtau_points: int = 121


@dataclass(frozen=True)
class ScanConfig:
    d_values: tuple[float, ...] = (0.5, 1.23, 10.0)
    m_range: tuple[float, float] = (0.1, 6.0)
    m_points: int = 591


@dataclass(frozen=True)
class FeasibilityConfig:
    safety_factor: float = 10.0


DEFAULT_TOLERANCES = {
    "p_int": 1e-3,
    "gamma": 1e-10,
    "det_lambda": 1e-10,
    "marginal_sigma": 1e-6,
    "normalization": 1e-6,
    "intensity_peak": 1e-4,
    "post_lens_jsa": 1e-4,
    "sigma_out": 1e-4,
    "unitarity": 1e-3,
    "lensless_limit": 1e-3,
}


@dataclass(frozen=True)
class VerifyConfig:
    grid_n: int = 129
    half_width_sigma: float = 8.0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))


@dataclass(frozen=True)
class RunConfig:
    crystal: CrystalConfig = CrystalConfig()
    pump: PumpConfig = PumpConfig(fwhm_bandwidth_nm=0.2)
    source: SourceConfig = SourceConfig()
    lens: LensConfig = LensConfig()
    hom: HomConfig = HomConfig()
    scan: ScanConfig = ScanConfig()
    feasibility: FeasibilityConfig = FeasibilityConfig()
    verify: VerifyConfig = VerifyConfig()
    output_dir: str = "out"
    source_text: str = field(default="", compare=False, repr=False)

    # -- derived objects -------------------------------------------------
    def crystal_spec(self) -> disp.CrystalSpec:
        c = self.crystal
        if c.sellmeier is not None:
            o = _sellmeier(c.sellmeier["ordinary"], "ordinary")
            e = _sellmeier(c.sellmeier["extraordinary"], "extraordinary")
            return disp.CrystalSpec(c.length_mm, o, e, c.cut_angle_deg, name=c.material or "custom")
        return disp.CrystalSpec.named(c.material, c.length_mm, c.cut_angle_deg)

    def pump_spec(self) -> src.PumpSpec:
        p = self.pump
        return src.PumpSpec(p.wavelength_nm, fwhm_duration_ps=p.fwhm_duration_ps,
                            fwhm_bandwidth_nm=p.fwhm_bandwidth_nm, t0=p.t0_ps)

    def source_model(self) -> src.SourceModel:
        return src.SourceModel.from_crystal(self.crystal_spec(), self.pump_spec(), self.source.xi,
                                            self.source.sigma_s)

    def realization(self, model: src.SourceModel):
        lc = self.lens
        if lc.realization == "eopm":
            return ln.EOPM(lc.theta_max, lc.f_rf_ghz)
        if lc.realization == "fwm":
            return ln.FWM(lc.tau0_ps, lc.pump_gdd_ps2)
        df = lc.focal_gdd_ps2 if lc.focal_gdd_ps2 is not None else lc.d / (2 * model.omega_p**2)
        return ln.Ideal(df)

    def lens_spec(self, model: src.SourceModel) -> ln.TimeLensSpec:
        from .hom import source_params, optimal_magnification

        m = self.lens.magnification
        if m == "optimal":
            mp, mm = optimal_magnification(source_params(model, 1.0, 1.0))
            m = mp if self.lens.sign > 0 else mm
        return ln.from_realization(self.realization(model), float(m), self.lens.sync_offset_ps)


def _sellmeier(d: dict, name: str) -> disp.SellmeierSet:
    return disp.SellmeierSet(d["a"], tuple(tuple(p) for p in d.get("poles", ())), d.get("d", 0.0), name=name)


# -- loader ------------------------------------------------------------------

_SECTIONS = {
    "crystal": CrystalConfig,
    "pump": PumpConfig,
    "source": SourceConfig,
    "lens": LensConfig,
    "hom": HomConfig,
    "scan": ScanConfig,
    "feasibility": FeasibilityConfig,
    "verify": VerifyConfig,
}


def _key_line(text: str, table: str, key: str) -> int | None:
    current = ""
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]$", s)
        if m:
            current = m.group(1)
        elif current == table and re.match(rf"^{re.escape(key)}\s*=", s):
            return i
    return None


def locate(text: str, path: str) -> int | None:
    """1-based line where ``path`` (dotted key) is written in TOML ``text``.

    Falls back to the enclosing table header or key when the leaf is absent.
    """
    parts = path.split(".")
    while parts:
        *tables, key = parts
        line = _key_line(text, ".".join(tables), key)
        if line is None:
            line = _key_line_header(text, ".".join(parts))
        if line is not None:
            return line
        parts = tables
    return None


def _key_line_header(text, table):
    for i, line in enumerate(text.splitlines(), 1):
        if re.match(rf"^\[\s*{re.escape(table)}\s*\]$", line.strip()):
            return i
    return None


class _Validator:
    def __init__(self, text: str):
        self.text = text

    def fail(self, path: str, msg: str):
        line = locate(self.text, path) if self.text else None
        where = f" (line {line})" if line else ""
        raise ConfigError(f"{path}{where}: {msg}")

    def number(self, path, v, *, positive=False, nonzero=False, integer=False, minimum=None):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a number, got {type(v).__name__}")
        if integer and not isinstance(v, int):
            self.fail(path, "expected an integer")
        if not math.isfinite(v):
            self.fail(path, "must be finite")
        if positive and not v > 0:
            self.fail(path, f"must be positive, got {v}")
        if nonzero and v == 0:
            self.fail(path, "must be nonzero")
        if minimum is not None and v < minimum:
            self.fail(path, f"must be >= {minimum}, got {v}")
        return int(v) if integer else float(v)

    def range2(self, path, v):
        if not isinstance(v, list) or len(v) != 2:
            self.fail(path, "expected a two-element [lo, hi] array")
        lo, hi = (self.number(path, x) for x in v)
        if not lo < hi:
            self.fail(path, f"empty range [{lo}, {hi}]")
        return (lo, hi)


def _section(v: _Validator, raw: dict, name: str, cls):
    data = raw.get(name, {})
    if not isinstance(data, dict):
        v.fail(name, "expected a table")
    known = {f.name for f in fields(cls)}
    for k in data:
        if k not in known:
            v.fail(f"{name}.{k}", f"unknown key; expected one of {sorted(known)}")
    return data


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text, str(path))


def loads(text: str, origin: str = "<string>") -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{origin}: TOML syntax error: {exc}") from None
    return from_dict(raw, text)


def from_dict(raw: dict, text: str = "") -> RunConfig:
    v = _Validator(text)
    top = set(_SECTIONS) | {"output"}
    for k in raw:
        if k not in top:
            v.fail(k, f"unknown section; expected one of {sorted(top)}")

    c = _section(v, raw, "crystal", CrystalConfig)
    sell = c.get("sellmeier")
    if sell is not None:
        for pol in ("ordinary", "extraordinary"):
            if not isinstance(sell, dict) or pol not in sell:
                v.fail(f"crystal.sellmeier.{pol}", "missing Sellmeier table")
            tab = sell[pol]
            if "a" not in tab:
                v.fail(f"crystal.sellmeier.{pol}.a", "missing constant term")
            for b, cc in tab.get("poles", []):
                v.number(f"crystal.sellmeier.{pol}.poles", b)
                v.number(f"crystal.sellmeier.{pol}.poles", cc)
        material = c.get("material")
    else:
        material = c.get("material", "BBO")
        if not isinstance(material, str) or material.upper() not in disp.MATERIALS:
            v.fail("crystal.material", f"unknown material {material!r}; known: {sorted(disp.MATERIALS)}")
    cut = c.get("cut_angle_deg")
    if cut is not None:
        cut = v.number("crystal.cut_angle_deg", cut)
        if not 0 < cut < 90:
            v.fail("crystal.cut_angle_deg", "must lie in (0, 90) degrees")
    length = v.number("crystal.length_mm", c.get("length_mm", CrystalConfig.length_mm), positive=True)
    crystal = CrystalConfig(material, length, cut, sell)

    p = _section(v, raw, "pump", PumpConfig)
    bw, dur = p.get("fwhm_bandwidth_nm"), p.get("fwhm_duration_ps")
    if (bw is None) == (dur is None):
        v.fail("pump", "give exactly one of fwhm_bandwidth_nm or fwhm_duration_ps")
    pump = PumpConfig(
        v.number("pump.wavelength_nm", p.get("wavelength_nm", 405.0), positive=True),
        None if bw is None else v.number("pump.fwhm_bandwidth_nm", bw, positive=True),
        None if dur is None else v.number("pump.fwhm_duration_ps", dur, positive=True),
        v.number("pump.t0_ps", p.get("t0_ps", 0.0)),
    )

    s = _section(v, raw, "source", SourceConfig)
    d0 = SourceConfig()
    source = SourceConfig(
        v.number("source.sigma_s", s.get("sigma_s", d0.sigma_s), positive=True),
        v.number("source.xi", s.get("xi", d0.xi), positive=True),
        _odd(v, "source.jsa_points", s.get("jsa_points", d0.jsa_points), 33),
        v.number("source.jsa_half_width_sigma", s.get("jsa_half_width_sigma", d0.jsa_half_width_sigma), minimum=4),
        v.number("source.time_points", s.get("time_points", d0.time_points), integer=True, minimum=3),
        v.number("source.time_half_width_sigma", s.get("time_half_width_sigma", d0.time_half_width_sigma),
                 positive=True),
    )

    lens = _lens(v, _section(v, raw, "lens", LensConfig))

    h = _section(v, raw, "hom", HomConfig)
    d0 = HomConfig()
    hom = HomConfig(
        v.range2("hom.dtau_range_sigma_cw", list(h.get("dtau_range_sigma_cw", d0.dtau_range_sigma_cw))),
        v.number("hom.dtau_points", h.get("dtau_points", d0.dtau_points), integer=True, minimum=1),
        v.number("hom.low_d", h.get("low_d", d0.low_d), positive=True),
        v.number("hom.high_d", h.get("high_d", d0.high_d), positive=True),
        v.number("hom.surface_d", h.get("surface_d", d0.surface_d), positive=True),
        v.number("hom.surface_m", h.get("surface_m", d0.surface_m), nonzero=True),
        v.range2("hom.surface_dt_range_sigma_cw", list(h.get("surface_dt_range_sigma_cw", d0.surface_dt_range_sigma_cw))),
        v.number("hom.surface_dt_points", h.get("surface_dt_points", d0.surface_dt_points), integer=True, minimum=1),
        v.range2("hom.surface_dtau_range_sigma_cw",
                 list(h.get("surface_dtau_range_sigma_cw", d0.surface_dtau_range_sigma_cw))),
        v.number("hom.surface_dtau_points", h.get("surface_dtau_points", d0.surface_dtau_points), integer=True,
                 minimum=1),
    )

    sc = _section(v, raw, "scan", ScanConfig)
    d0 = ScanConfig()
    dv = sc.get("d_values", list(d0.d_values))
    if not isinstance(dv, list) or not dv:
        v.fail("scan.d_values", "expected a nonempty array")
    scan = ScanConfig(
        tuple(v.number("scan.d_values", x, positive=True) for x in dv),
        _mrange(v, sc.get("m_range", list(d0.m_range))),
        v.number("scan.m_points", sc.get("m_points", d0.m_points), integer=True, minimum=1),
    )

    f = _section(v, raw, "feasibility", FeasibilityConfig)
    feas = FeasibilityConfig(v.number("feasibility.safety_factor", f.get("safety_factor", 10.0), positive=True))

    vr = _section(v, raw, "verify", VerifyConfig)
    tol = dict(DEFAULT_TOLERANCES)
    given = vr.get("tolerances", {})
    if not isinstance(given, dict):
        v.fail("verify.tolerances", "expected a table")
    for k, val in given.items():
        key = f"verify.tolerances.{k}"
        if k not in DEFAULT_TOLERANCES:
            v.fail(key, f"unknown quantity; expected one of {sorted(DEFAULT_TOLERANCES)}")
        val = v.number(key, val, positive=True)
        if val > DEFAULT_TOLERANCES[k]:
            v.fail(key, f"tolerances may only be tightened (default {DEFAULT_TOLERANCES[k]:g}, got {val:g})")
        tol[k] = val
    verify = VerifyConfig(
        _odd(v, "verify.grid_n", vr.get("grid_n", 129), 33),
        v.number("verify.half_width_sigma", vr.get("half_width_sigma", 8.0), minimum=4),
        tol,
    )

    out = raw.get("output", {})
    if not isinstance(out, dict) or any(k != "dir" for k in out):
        v.fail("output", "only the key 'dir' is allowed")
    out_dir = out.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        v.fail("output.dir", "expected a nonempty string")

    return RunConfig(crystal, pump, source, lens, hom, scan, feas, verify, out_dir, text)


def _odd(v, path, val, minimum):
    n = v.number(path, val, integer=True, minimum=minimum)
    if n % 2 == 0:
        v.fail(path, f"must be odd, got {n}")
    return n


def _mrange(v, val):
    lo, hi = v.range2("scan.m_range", val)
    if lo <= 0:
        v.fail("scan.m_range", "|M| range must be positive")
    return (lo, hi)


def _lens(v: _Validator, data: dict) -> LensConfig:
    real = data.get("realization", "ideal")
    if real not in ("ideal", "eopm", "fwm"):
        v.fail("lens.realization", f"expected 'ideal', 'eopm' or 'fwm', got {real!r}")
    m = data.get("magnification", "optimal")
    if m != "optimal":
        m = v.number("lens.magnification", m, nonzero=True)
    sign = data.get("sign", -1)
    if sign not in (1, -1) or isinstance(sign, bool):
        v.fail("lens.sign", "must be +1 or -1")
    kw = dict(realization=real, magnification=m, sign=sign, d=None)
    if real == "ideal":
        d, dfp = data.get("d"), data.get("focal_gdd_ps2")
        if d is not None and dfp is not None:
            v.fail("lens", "give at most one of d or focal_gdd_ps2")
        if d is None and dfp is None:
            d = 10.0
        if d is not None:
            kw["d"] = v.number("lens.d", d, nonzero=True)
        else:
            kw["focal_gdd_ps2"] = v.number("lens.focal_gdd_ps2", dfp, nonzero=True)
    else:
        need = ("theta_max", "f_rf_ghz") if real == "eopm" else ("tau0_ps", "pump_gdd_ps2")
        for k in need:
            if k not in data:
                v.fail(f"lens.{k}", f"required for realization {real!r}")
            kw[k] = v.number(f"lens.{k}", data[k], nonzero=True, positive=(k != "pump_gdd_ps2"))
        for k in ("d", "focal_gdd_ps2"):
            if k in data:
                v.fail(f"lens.{k}", f"focal GDD is derived from the {real} parameters")
    for k in ("sync_offset_ps", "tau2_ps", "phase_rad"):
        kw[k] = v.number(f"lens.{k}", data.get(k, 0.0))
    return LensConfig(**kw)


def with_overrides(cfg: RunConfig, grid_n: int | None = None, safety: float | None = None,
                   out_dir: str | None = None) -> RunConfig:
    """Apply command-line overrides with the same validation as the file."""
    v = _Validator("")
    if grid_n is not None:
        n = _odd(v, "--grid-n", grid_n, 33)
        cfg = replace(cfg, verify=replace(cfg.verify, grid_n=n), source=replace(cfg.source, jsa_points=n))
    if safety is not None:
        cfg = replace(cfg, feasibility=FeasibilityConfig(v.number("--safety-factor", safety, positive=True)))
    if out_dir is not None:
        cfg = replace(cfg, output_dir=out_dir)
    return cfg
