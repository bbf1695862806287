"""INI run configuration with explicit units.

Quantities are written as ``<number> [unit]``. Lengths accept m, mm, um
(or µm) and nm; every other quantity must be given in SI (the unit suffix,
if present, must match the expected one: s/m, rad/s, rad/m).
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .biphoton import GaussianPump, gv_diff_for_length
from .designer import DesignSpec, Target
from .dispersion import LinearizedGvm, TabulatedDispersion, linearize
from .pmf import gamma_from_fwhm_match
from .poling import NonlinearityProfile, PolingError, PolingSection, read_sections, sections_to_profile

__all__ = ["ConfigError", "Crystal", "RunConfig", "load_config", "parse_quantity"]


class ConfigError(ValueError):
    pass


_LENGTH = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "nm": 1e-9}
_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")
C_LIGHT = 299_792_458.0


def parse_quantity(text: str, kind: str) -> float:
    """Parse ``'10.85 um'`` style values; ``kind`` is 'length', 'number' or an SI unit string."""
    m = _NUMBER.match(text)
    if not m:
        raise ConfigError(f"cannot parse quantity {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if kind == "length":
        if unit not in _LENGTH and unit != "":
            raise ConfigError(f"unknown length unit {unit!r} in {text!r}")
        return value * _LENGTH.get(unit, 1.0)
    if kind == "number":
        if unit:
            raise ConfigError(f"{text!r} should be dimensionless")
        return value
    if unit not in ("", kind):
        raise ConfigError(f"expected unit {kind!r} in {text!r}")
    return value


@dataclass
class Crystal:
    """A crystal given either as explicit sections or as a uniform length."""

    profile: NonlinearityProfile
    sections: list[PolingSection] | None = None
    lambda_qpm: float | None = None
    design: DesignSpec | None = None
    report: object = None
    label: str = "crystal"


@dataclass
class RunConfig:
    crystal: Crystal | None = None
    reference: Crystal | None = None
    dispersion: LinearizedGvm | None = None
    tabulated: TabulatedDispersion | None = None
    pump: GaussianPump | None = None
    visibility: float = 0.95
    detuning: float = 0.0
    grid: dict = field(default_factory=dict)
    output_dir: Path = Path("out")


GRID_DEFAULTS = {
    "jsa_points": 512,
    "jsa_lobes": 10.0,
    "jsa_pump_sigmas": 5.0,
    "omega_lobes": 400.0,
    "omega_points_per_lobe": 10,
    "delay_points": 601,
    "delay_span": 3.0,
    "detunings": 21,
    "detuning_span": 6.0,
    "pmf_points": 4097,
    "pmf_lobes": 6.0,
}


def _get(section, key, kind, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"[{section.name}] missing required key {key!r}")
        return default
    return parse_quantity(section[key], kind)


def _path(base: Path, value: str) -> Path:
    p = Path(value)
    if not p.is_absolute():
        p = base / p
    if not p.exists():
        raise ConfigError(f"referenced file does not exist: {p}")
    return p


def _design_spec(sec) -> DesignSpec:
    name = sec.get("target", "gaussian").strip()
    width_key = {"gaussian": "l_eff", "uniform": "length", "triangle": "base_width", "tophat": "width"}
    if name not in width_key:
        raise ConfigError(f"unknown target shape {name!r}")
    key = width_key[name]
    width = _get(sec, key, "length" if name in ("gaussian", "uniform") else "rad/m")
    try:
        return DesignSpec(
            target=Target(name, width),
            lambda_qpm=_get(sec, "lambda_qpm", "length"),
            m_min=int(_get(sec, "m_min", "number", 1)),
            m_max=int(_get(sec, "m_max", "number", 6)),
            length_budget=_get(sec, "length_budget", "length"),
            allow_negative=sec.getboolean("allow_negative", fallback=False),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _crystal_from_file(path: Path, lam: float | None, label: str) -> Crystal:
    try:
        sections, lam_file = read_sections(Path(path))
    except (PolingError, OSError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    lam = lam or lam_file
    if not lam:
        raise ConfigError("lambda_qpm is required (in the config or the section file)")
    return Crystal(sections_to_profile(sections, lam), sections, lam, label=label)


def crystal_from_section(sec, base: Path, sections_override: Path | None = None) -> Crystal:
    label = sec.get("label", sec.name)
    if sections_override is not None or "sections" in sec:
        path = sections_override if sections_override is not None else _path(base, sec["sections"])
        lam = _get(sec, "lambda_qpm", "length") if "lambda_qpm" in sec else None
        return _crystal_from_file(path, lam, label)
    if "uniform_length" in sec:
        length = _get(sec, "uniform_length", "length")
        return Crystal(NonlinearityProfile.uniform(length), label=label)
    if "target" in sec:
        spec = _design_spec(sec)
        from .designer import design_profile

        report = design_profile(spec)
        return Crystal(sections_to_profile(report.sections, spec.lambda_qpm), report.sections,
                       spec.lambda_qpm, spec, report, label=label)
    raise ConfigError(f"[{sec.name}] needs one of: sections, uniform_length, target")


def _pump(sec) -> GaussianPump:
    if "sigma_p" in sec:
        mu_p = 2 * np.pi * C_LIGHT / _get(sec, "wavelength", "length")
        return GaussianPump(mu_p, _get(sec, "sigma_p", "rad/s"))
    return GaussianPump.from_wavelength(_get(sec, "wavelength", "length"), _get(sec, "fwhm", "length"))


def _dispersion(sec, base: Path, pump: GaussianPump | None):
    if "table_pump" in sec:
        tab = TabulatedDispersion.from_files(_path(base, sec["table_pump"]), _path(base, sec["table_idler"]),
                                             _path(base, sec["table_signal"]))
        mu_i = 2 * np.pi * C_LIGHT / _get(sec, "idler_wavelength", "length")
        mu_s = 2 * np.pi * C_LIGHT / _get(sec, "signal_wavelength", "length")
        # the grating is assumed to phase-match the center frequencies
        return linearize(tab, mu_i, mu_s).with_delta_k0(_get(sec, "delta_k0", "rad/m", 0.0)), tab
    if "center_wavelength" in sec:
        mu = 2 * np.pi * C_LIGHT / _get(sec, "center_wavelength", "length")
    elif pump is not None:
        mu = pump.mu_p / 2
    else:
        raise ConfigError("[dispersion] needs center_wavelength or a [pump] section")
    kp = _get(sec, "kp_prime", "s/m", 5e-9)
    if "matched_length" in sec:
        if pump is None:
            raise ConfigError("matched_length needs a [pump] section")
        length = _get(sec, "matched_length", "length")
        gv = gv_diff_for_length(pump.sigma_p, length, gamma_from_fwhm_match())
        ki, ks = kp - gv / 2, kp + gv / 2
    elif "gv_diff" in sec:
        gv = _get(sec, "gv_diff", "s/m")
        ki, ks = kp - gv / 2, kp + gv / 2
    else:
        ki, ks = _get(sec, "ki_prime", "s/m"), _get(sec, "ks_prime", "s/m")
    if sec.getboolean("gvm_matched", fallback=False):
        kp = (ki + ks) / 2
    try:
        return LinearizedGvm(kp, ki, ks, mu, mu, 2 * mu, _get(sec, "delta_k0", "rad/m", 0.0)), None
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, sections_override=None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    base = path.parent
    cfg = RunConfig()
    if parser.has_section("pump"):
        cfg.pump = _pump(parser["pump"])
    if parser.has_section("dispersion"):
        cfg.dispersion, cfg.tabulated = _dispersion(parser["dispersion"], base, cfg.pump)
    if parser.has_section("crystal"):
        sec = parser["crystal"]
        cfg.crystal = crystal_from_section(sec, base, sections_override)
    elif sections_override is not None:
        cfg.crystal = _crystal_from_file(Path(sections_override), None, "crystal")
    if parser.has_section("reference"):
        cfg.reference = crystal_from_section(parser["reference"], base)
    grid = dict(GRID_DEFAULTS)
    if parser.has_section("grid"):
        for key, value in parser["grid"].items():
            if key not in GRID_DEFAULTS:
                raise ConfigError(f"[grid] unknown key {key!r}")
            grid[key] = type(GRID_DEFAULTS[key])(parse_quantity(value, "number"))
    cfg.grid = grid
    if parser.has_section("run"):
        run = parser["run"]
        cfg.visibility = _get(run, "visibility", "number", 0.95)
        cfg.detuning = _get(run, "detuning", "rad/s", 0.0)
        if "output_dir" in run:
            out = Path(run["output_dir"])
            cfg.output_dir = out if out.is_absolute() else base / out
    if not 0 <= cfg.visibility <= 1:
        raise ConfigError("visibility must lie in [0, 1]")
    return cfg
