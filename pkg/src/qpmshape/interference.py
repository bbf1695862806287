"""Two-photon (Hong-Ou-Mandel) interference and spatial quantum beating.

Sign convention: the exchange term carries exp(-2 i Omega tau), where
Omega is the idler detuning from degeneracy and tau the delay.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import czt

from .biphoton import JsaGrid, _cell_widths
from .dispersion import LinearizedGvm, phase_mismatch
from .pmf import SpectralCurve, pmf_from_profile
from .poling import NonlinearityProfile

__all__ = [
    "InterferenceError",
    "InterferencePattern",
    "BeatingResult",
    "cw_pmf",
    "hom_pattern_cw",
    "hom_pattern_pulsed",
    "beating_scan",
    "fit_dip_shapes",
    "overlap_has_negative",
]

_CHUNK = 64


class InterferenceError(ValueError):
    pass


@dataclass
class InterferencePattern:
    delays: np.ndarray
    p_coincidence: np.ndarray
    visibility: float
    detuning: float = 0.0

    @property
    def max_p(self) -> float:
        return float(np.max(self.p_coincidence))

    @property
    def min_p(self) -> float:
        return float(np.min(self.p_coincidence))


@dataclass
class BeatingResult:
    detunings: np.ndarray
    patterns: list[InterferencePattern] = field(repr=False)
    max_p: np.ndarray = None

    @property
    def global_max(self) -> float:
        return float(np.max(self.max_p))

    @property
    def argmax_detuning(self) -> float:
        return float(self.detunings[int(np.argmax(self.max_p))])


def cw_pmf(profile: NonlinearityProfile, dispersion: LinearizedGvm, omega, detuning: float = 0.0) -> SpectralCurve:
    """PMF versus the idler detuning Omega from degeneracy under a CW pump.

    Photons sit at mu + Omega and mu - Omega with mu = mu_p / 2. A center
    frequency detuning ``detuning`` (omega_i - omega_s at the phase-matched
    point) is applied as a residual mismatch offset that moves the PMF
    center to Omega = detuning / 2.
    """
    omega = np.asarray(omega, dtype=float)
    mu = dispersion.mu_p / 2
    base = LinearizedGvm(dispersion.kp_prime, dispersion.ki_prime, dispersion.ks_prime,
                         mu, mu, dispersion.mu_p, dispersion.delta_k0)
    shift = -(dispersion.ks_prime - dispersion.ki_prime) * detuning / 2
    dk = phase_mismatch(base.with_delta_k0(dispersion.delta_k0 + shift), mu + omega, mu - omega, dispersion.mu_p)
    return pmf_from_profile(profile, dk, normalize=False, axis=omega, axis_kind="omega")


def _uniform(x):
    if x.size < 2:
        return False
    d = np.diff(x)
    return bool(np.allclose(d, d[0], rtol=1e-9, atol=0))


def _exchange_transform(integrand, omega, delays):
    """sum_n integrand[n] exp(-2i omega[n] tau) for every tau.

    Uniform omega and delay grids use a chirp-z transform, anything else a
    chunked direct sum.
    """
    if _uniform(omega) and _uniform(delays):
        d_omega = omega[1] - omega[0]
        d_tau = delays[1] - delays[0]
        n = np.arange(omega.size)
        x = integrand * np.exp(-2j * d_omega * n * delays[0])
        out = czt(x, m=delays.size, w=np.exp(-2j * d_omega * d_tau), a=1.0)
        return out * np.exp(-2j * omega[0] * delays)
    out = np.empty(delays.size, dtype=complex)
    for start in range(0, delays.size, _CHUNK):
        tau = delays[start:start + _CHUNK]
        out[start:start + tau.size] = np.exp(-2j * np.outer(tau, omega)) @ integrand
    return out


def _check_symmetric(axis):
    if not np.allclose(axis, -axis[::-1], rtol=0, atol=1e-9 * np.max(np.abs(axis))):
        raise InterferenceError("the Omega grid must be symmetric about zero")


def hom_pattern_cw(pmf_curve: SpectralCurve, visibility: float, delays, detuning: float = 0.0,
                   edge_tolerance: float = 1e-6) -> InterferencePattern:
    """p_c(tau) = 1/2 [1 - V Re int Phi(W) Phi*(-W) e^{-2iW tau} dW / int |Phi|^2 dW].

    Trapezoidal quadrature on the curve's (symmetric) Omega axis.
    """
    omega = pmf_curve.axis
    _check_symmetric(omega)
    phi = pmf_curve.values
    inten = np.abs(phi) ** 2
    if max(inten[0], inten[-1]) > edge_tolerance * np.max(inten):
        raise InterferenceError("PMF intensity at the grid edges exceeds the tolerance; widen the Omega grid")
    norm = np.trapezoid(inten, omega)
    if not norm > 0:
        raise InterferenceError("PMF normalization integral vanishes")
    overlap = phi * np.conj(phi[::-1])
    delays = np.asarray(delays, dtype=float)
    steps = np.diff(omega)
    trap = np.zeros(omega.size)
    trap[:-1] += steps / 2
    trap[1:] += steps / 2
    integrand = overlap * trap
    real = np.real(_exchange_transform(integrand, omega, delays))
    p = 0.5 * (1 - visibility * real / norm)
    return InterferencePattern(delays, p, visibility, detuning)


def hom_pattern_pulsed(jsa: JsaGrid, visibility: float, delays) -> InterferencePattern:
    """p_c(tau) = 1/2 [1 - V Re sum f(w1, w2) f*(w2, w1) e^{-i(w1 - w2) tau} w1 w2] on a square grid."""
    if jsa.omega_i.size != jsa.omega_s.size or not np.allclose(jsa.omega_i, jsa.omega_s, rtol=1e-12, atol=0):
        raise InterferenceError("pulsed HOM needs identical idler and signal axes")
    w = _cell_widths(jsa.omega_i)
    f = jsa.values / np.sqrt(jsa.norm2())
    exchange = f * np.conj(f.T) * np.outer(w, w)
    omega = jsa.omega_i - np.mean(jsa.omega_i)
    delays = np.asarray(delays, dtype=float)
    real = np.empty(delays.size)
    for start in range(0, delays.size, _CHUNK):
        tau = delays[start:start + _CHUNK]
        phase = np.exp(-1j * np.outer(tau, omega))
        real[start:start + tau.size] = np.real(np.sum((phase @ exchange) * np.conj(phase), axis=1))
    p = 0.5 * (1 - visibility * real)
    return InterferencePattern(delays, p, visibility, 0.0)


def beating_scan(pmf_curves, detunings, visibility: float, delays) -> BeatingResult:
    """HOM patterns for a family of detuned PMFs and their maxima."""
    curves = list(pmf_curves)
    detunings = np.asarray(detunings, dtype=float)
    if not curves:
        raise InterferenceError("empty detuning list")
    if len(curves) != detunings.size:
        raise InterferenceError("one PMF curve per detuning is required")
    patterns = [hom_pattern_cw(c, visibility, delays, d) for c, d in zip(curves, detunings)]
    return BeatingResult(detunings, patterns, np.array([p.max_p for p in patterns]))


def overlap_has_negative(pmf_curve: SpectralCurve, rel_tol: float = 1e-9) -> bool:
    """True when Re[Phi(W) Phi*(-W)] dips below zero anywhere on the grid."""
    phi = pmf_curve.values
    prod = np.real(phi * np.conj(phi[::-1]))
    return bool(np.min(prod) < -rel_tol * np.max(np.abs(phi)) ** 2)


def _triangle(tau, depth, half_width, center):
    return 0.5 * (1 - depth * np.clip(1 - np.abs(tau - center) / half_width, 0, None))


def _gaussian(tau, depth, width, center):
    return 0.5 * (1 - depth * np.exp(-((tau - center) / width) ** 2 / 2))


def fit_dip_shapes(pattern: InterferencePattern) -> dict:
    """Least-squares triangle and Gaussian dip fits; residual sums of squares and FWHMs."""
    tau, p = pattern.delays, pattern.p_coincidence
    depth0 = max(1 - 2 * np.min(p), 1e-3)
    below = tau[p < 0.5 - (0.5 - np.min(p)) / 2]
    fwhm0 = np.ptp(below) if below.size > 1 else np.ptp(tau) / 10
    center0 = tau[int(np.argmin(p))]
    out = {}
    for name, model, w0, to_fwhm in (
        ("triangle", _triangle, fwhm0, lambda w: w),
        ("gaussian", _gaussian, fwhm0 / 2.3548, lambda w: 2 * np.sqrt(2 * np.log(2)) * w),
    ):
        popt, _ = curve_fit(model, tau, p, p0=(depth0, w0, center0), maxfev=20000)
        resid = float(np.sum((model(tau, *popt) - p) ** 2))
        out[name] = {"residual": resid, "depth": float(popt[0]), "fwhm": float(abs(to_fwhm(popt[1]))),
                     "center": float(popt[2])}
    return out
