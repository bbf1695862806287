"""Design of custom-poled quasi-phase-matched crystals and simulation of their photon pairs.

The layers build on each other: ``dispersion`` (phase mismatch), ``poling``
(sections, domains and nonlinearity profiles), ``pmf`` (phase-matching
functions), ``designer`` (profile synthesis), ``biphoton`` (JSA and purity)
and ``interference`` (HOM dips and beating). ``cli`` ties them to files.
"""

__version__ = "0.1.0"

from .biphoton import GaussianPump, JsaGrid, build_jsa, gvm_length, schmidt
from .designer import PolingDesigner, Target, design_profile, evaluate_design
from .dispersion import LinearizedGvm, TabulatedDispersion, phase_mismatch, qpm_period
from .interference import beating_scan, cw_pmf, hom_pattern_cw, hom_pattern_pulsed
from .pmf import SpectralCurve, curve_metrics, gamma_from_fwhm_match, pmf_from_domains, pmf_from_profile
from .poling import (NonlinearityProfile, PolingSection, profile_yield_ratio, sections_to_domains,
                     sections_to_profile)

__all__ = [
    "__version__",
    "GaussianPump", "JsaGrid", "build_jsa", "gvm_length", "schmidt",
    "PolingDesigner", "Target", "design_profile", "evaluate_design",
    "LinearizedGvm", "TabulatedDispersion", "phase_mismatch", "qpm_period",
    "beating_scan", "cw_pmf", "hom_pattern_cw", "hom_pattern_pulsed",
    "SpectralCurve", "curve_metrics", "gamma_from_fwhm_match", "pmf_from_domains", "pmf_from_profile",
    "NonlinearityProfile", "PolingSection", "profile_yield_ratio", "sections_to_domains", "sections_to_profile",
]
