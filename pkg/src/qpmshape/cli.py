"""Command-line front end: ``qpmshape <subcommand> --config run.ini``.

Exit codes: 0 success, 2 configuration error, 3 numerical error. Errors
are also written to stderr as a one-line JSON record.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .biphoton import BiphotonError, build_jsa, default_axes, marginal_spectra, schmidt
from .config import ConfigError, RunConfig, load_config
from .designer import InfeasibleDesignError, evaluate_design, standard_grid
from .dispersion import DispersionError
from .interference import (InterferenceError, beating_scan, cw_pmf, fit_dip_shapes, hom_pattern_cw)
from .io import dumps, fmt, write_curve, write_json, write_table
from .pmf import (PmfError, central_lobe, curve_metrics, equivalent_length, pmf_from_domains, pmf_from_profile)
from .poling import PolingError, profile_yield_ratio, sections_to_domains, write_sections

log = logging.getLogger("qpmshape")

SUBCOMMANDS = ("design", "pmf", "hom", "beat", "purity", "yield", "compare")
NUMERICAL_ERRORS = (PmfError, BiphotonError, InterferenceError, InfeasibleDesignError, DispersionError,
                    PolingError, np.linalg.LinAlgError, FloatingPointError, RuntimeError)


def _require(cfg: RunConfig, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise ConfigError("missing configuration section(s): " + ", ".join(f"[{n}]" for n in missing))


def _lobe_dk(profile) -> float:
    return 2 * np.pi / equivalent_length(profile)


def _omega_grid(cfg: RunConfig, profile):
    gv = abs(cfg.dispersion.gv_diff)
    if gv == 0:
        raise ConfigError("CW interference needs k_s' != k_i'")
    lobe = _lobe_dk(profile) / gv
    lobes = cfg.grid["omega_lobes"]
    n = int(2 * lobes * cfg.grid["omega_points_per_lobe"]) + 1
    return np.linspace(-lobes * lobe, lobes * lobe, n), lobe


def _delays(cfg: RunConfig, profile):
    dip_half = abs(cfg.dispersion.gv_diff) * equivalent_length(profile) / 2
    span = cfg.grid["delay_span"] * dip_half
    return np.linspace(-span, span, int(cfg.grid["delay_points"]))


def _pmf_grid(cfg: RunConfig, *profiles):
    half = max(_lobe_dk(p) for p in profiles)
    points = int(cfg.grid["pmf_points"]) | 1   # odd, so dk = 0 is sampled
    return standard_grid(half, points, int(cfg.grid["pmf_lobes"]))


def _hom(cfg: RunConfig, profile, detuning=0.0):
    omega, _ = _omega_grid(cfg, profile)
    return hom_pattern_cw(cw_pmf(profile, cfg.dispersion, omega, detuning), cfg.visibility,
                          _delays(cfg, profile), detuning)


def _hom_summary(pattern) -> dict:
    fits = fit_dip_shapes(pattern)
    return {
        "dip_minimum": pattern.min_p,
        "max_p": pattern.max_p,
        "visibility": pattern.visibility,
        "detuning_rad_per_s": pattern.detuning,
        "fitted_fwhm_s": fits["gaussian"]["fwhm"],
        "fits": fits,
        "triangle_to_gaussian_residual": fits["triangle"]["residual"] / max(fits["gaussian"]["residual"], 1e-300),
    }


def _beat(cfg: RunConfig, profile):
    omega, lobe = _omega_grid(cfg, profile)
    detunings = np.linspace(0.0, cfg.grid["detuning_span"] * lobe, int(cfg.grid["detunings"]))
    delays = _delays(cfg, profile)
    curves = [cw_pmf(profile, cfg.dispersion, omega, d) for d in detunings]
    return beating_scan(curves, detunings, cfg.visibility, delays)


def cmd_design(cfg: RunConfig, out: Path) -> dict:
    _require(cfg, "crystal")
    crystal = cfg.crystal
    if crystal.report is None:
        raise ConfigError("design needs a [crystal] section with a target")
    write_sections(crystal.sections, out / "sections.csv", crystal.lambda_qpm)
    report = crystal.report.as_dict()
    report["lambda_qpm_m"] = crystal.lambda_qpm
    report["target"] = {"name": crystal.design.target.name, "width": crystal.design.target.width}
    write_json(out / "design_report.json", report)
    return report


def cmd_pmf(cfg: RunConfig, out: Path) -> dict:
    _require(cfg, "crystal")
    crystal = cfg.crystal
    dk = _pmf_grid(cfg, crystal.profile)
    section = pmf_from_profile(crystal.profile, dk)
    write_curve(out / "pmf_section.csv", section)
    summary = {"section": curve_metrics(section).as_dict(), "length_m": crystal.profile.length}
    if crystal.sections is not None:
        domains = sections_to_domains(crystal.sections, crystal.lambda_qpm)
        domain = pmf_from_domains(domains, dk)
        write_curve(out / "pmf_domain.csv", domain)
        lo, hi = central_lobe(section)
        diff = np.abs(np.abs(section.values) - np.abs(domain.values))[lo:hi + 1]
        summary["domain"] = curve_metrics(domain).as_dict()
        summary["num_domains"] = len(domains)
        summary["central_lobe_max_deviation"] = float(np.max(diff))
    write_json(out / "pmf_metrics.json", summary)
    return summary


def cmd_hom(cfg: RunConfig, out: Path) -> dict:
    _require(cfg, "crystal", "dispersion")
    pattern = _hom(cfg, cfg.crystal.profile, cfg.detuning)
    write_table(out / "hom.csv", ("tau_s", "p_c"), (pattern.delays, pattern.p_coincidence),
                comments=(f"visibility={fmt(pattern.visibility)} detuning_rad_per_s={fmt(pattern.detuning)}",))
    summary = _hom_summary(pattern)
    write_json(out / "hom_summary.json", summary)
    return summary


def cmd_beat(cfg: RunConfig, out: Path) -> dict:
    _require(cfg, "crystal", "dispersion")
    result = _beat(cfg, cfg.crystal.profile)
    for k, pattern in enumerate(result.patterns):
        write_table(out / f"beat_{k:03d}.csv", ("tau_s", "p_c"), (pattern.delays, pattern.p_coincidence),
                    comments=(f"detuning_rad_per_s={fmt(pattern.detuning)} visibility={fmt(pattern.visibility)}",))
    summary = {
        "detunings_rad_per_s": result.detunings,
        "max_p_per_detuning": result.max_p,
        "max_p": result.global_max,
        "argmax_detuning_rad_per_s": result.argmax_detuning,
        "dip_minimum": float(min(p.min_p for p in result.patterns)),
        "visibility": cfg.visibility,
    }
    write_json(out / "beat_summary.json", summary)
    return summary


def cmd_purity(cfg: RunConfig, out: Path, write_jsa: bool = False) -> dict:
    _require(cfg, "crystal", "dispersion", "pump")
    profile = cfg.crystal.profile
    omega_i, omega_s = default_axes(cfg.pump, cfg.dispersion, _lobe_dk(profile), int(cfg.grid["jsa_points"]),
                                    cfg.grid["jsa_pump_sigmas"], cfg.grid["jsa_lobes"])
    jsa = build_jsa(cfg.pump, profile, cfg.dispersion, omega_i, omega_s)
    result = schmidt(jsa)
    p_i, p_s = marginal_spectra(jsa)
    summary = result.as_dict()
    summary["grid_points"] = int(cfg.grid["jsa_points"])
    summary["crystal_length_m"] = profile.length
    summary["marginal_rms_width_rad_per_s"] = {
        "idler": float(np.sqrt(np.sum(p_i * (omega_i - np.sum(p_i * omega_i) / np.sum(p_i)) ** 2) / np.sum(p_i))),
        "signal": float(np.sqrt(np.sum(p_s * (omega_s - np.sum(p_s * omega_s) / np.sum(p_s)) ** 2) / np.sum(p_s))),
    }
    write_json(out / "schmidt.json", summary)
    if write_jsa:
        jsa.to_csv(out / "jsa.csv")
    return summary


def cmd_yield(cfg: RunConfig, out: Path) -> dict:
    _require(cfg, "crystal", "reference")
    a, b = cfg.crystal.profile, cfg.reference.profile
    ratio = profile_yield_ratio(a, b)
    summary = {"yield_ratio": ratio, "crystal_length_m": a.length, "reference_length_m": b.length}
    write_json(out / "yield.json", summary)
    return summary


def cmd_compare(cfg: RunConfig, out: Path) -> dict:
    _require(cfg, "crystal", "reference")
    a, b = cfg.crystal, cfg.reference
    dk = _pmf_grid(cfg, a.profile, b.profile)
    summary = {"yield_ratio": profile_yield_ratio(a.profile, b.profile)}
    for key, crystal in (("crystal", a), ("reference", b)):
        curve = pmf_from_profile(crystal.profile, dk)
        write_curve(out / f"compare_pmf_{key}.csv", curve)
        entry = {"label": crystal.label, "length_m": crystal.profile.length,
                 "equivalent_length_m": equivalent_length(crystal.profile),
                 "pmf": curve_metrics(curve).as_dict()}
        if crystal.design is not None:
            entry["design"] = evaluate_design(crystal.sections, crystal.design.target, crystal.lambda_qpm)
        if cfg.dispersion is not None:
            pattern = _hom(cfg, crystal.profile)
            write_table(out / f"compare_hom_{key}.csv", ("tau_s", "p_c"), (pattern.delays, pattern.p_coincidence))
            entry["hom"] = _hom_summary(pattern)
        summary[key] = entry
    write_json(out / "compare.json", summary)
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpmshape",
        description="Design custom-poled crystals and simulate their biphoton spectra.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "design": "synthesize a section layout for the [crystal] target; writes sections.csv and design_report.json",
        "pmf": "section- and domain-level phase-matching functions; writes pmf_*.csv and pmf_metrics.json",
        "hom": "CW Hong-Ou-Mandel dip; writes hom.csv and hom_summary.json",
        "beat": "quantum beating sweep over center-frequency detunings; writes beat_*.csv and beat_summary.json",
        "purity": "Schmidt decomposition of the pulsed-pump JSA; writes schmidt.json",
        "yield": "pair yield of [crystal] relative to [reference]; writes yield.json",
        "compare": "side-by-side PMF/HOM metrics for [crystal] and [reference]; writes compare.json",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("-c", "--config", required=True, type=Path, help="INI run configuration")
        p.add_argument("-o", "--out", type=Path, help="output directory (overrides [run] output_dir)")
        p.add_argument("--sections", type=Path, help="section file replacing the [crystal] definition")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "purity":
            p.add_argument("--write-jsa", action="store_true", help="also export the JSA as dense CSV")
    return parser


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for key in sorted(obj):
            yield from _flatten(obj[key], f"{prefix}{key}.")
    elif np.ndim(obj) == 0:
        yield prefix[:-1], fmt(obj) if isinstance(obj, (float, np.floating)) else str(obj)


def write_report(path: Path, command: str, summary: dict) -> None:
    """Plain-text digest of the scalar entries of a summary (arrays are left to the JSON)."""
    lines = [f"qpmshape {command}"] + [f"  {k} = {v}" for k, v in _flatten(summary)]
    path.write_text("\n".join(lines) + "\n")


def _fail(code: int, kind: str, exc: Exception) -> int:
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.sections)
        out = args.out if args.out is not None else cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)
        handler = globals()[f"cmd_{args.command}"]
        summary = handler(cfg, out, args.write_jsa) if args.command == "purity" else handler(cfg, out)
    except ConfigError as exc:
        return _fail(2, "config", exc)
    except NUMERICAL_ERRORS as exc:
        return _fail(3, "numerical", exc)
    except ValueError as exc:
        return _fail(3, "numerical", exc)
    write_report(out / f"{args.command}_report.txt", args.command, summary)
    sys.stdout.write(dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
