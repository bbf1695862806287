"""Joint spectral amplitudes, Schmidt decomposition and heralded purity."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import constants

from .dispersion import LinearizedGvm, phase_mismatch
from .pmf import pmf_from_profile
from .poling import NonlinearityProfile

__all__ = [
    "BiphotonError",
    "CoverageWarning",
    "MonochromaticPump",
    "GaussianPump",
    "JsaGrid",
    "SchmidtResult",
    "build_jsa",
    "default_axes",
    "schmidt",
    "gvm_length",
    "gv_diff_for_length",
    "marginal_spectra",
    "sigma_from_wavelength_fwhm",
]


class BiphotonError(ValueError):
    pass


class CoverageWarning(UserWarning):
    pass


def sigma_from_wavelength_fwhm(center_wavelength: float, fwhm: float) -> float:
    """Amplitude standard deviation (rad/s) of a pump with intensity FWHM ``fwhm`` (m).

    The amplitude exp(-x^2/(2 s^2)) has intensity FWHM 2 s sqrt(ln 2).
    """
    d_omega = 2 * np.pi * constants.c * fwhm / center_wavelength ** 2
    return d_omega / (2 * np.sqrt(np.log(2)))


@dataclass(frozen=True)
class MonochromaticPump:
    mu_p: float


@dataclass(frozen=True)
class GaussianPump:
    mu_p: float
    sigma_p: float

    def __post_init__(self):
        if not self.sigma_p > 0:
            raise BiphotonError("sigma_p must be positive")

    @classmethod
    def from_wavelength(cls, center_wavelength: float, fwhm: float) -> "GaussianPump":
        mu_p = 2 * np.pi * constants.c / center_wavelength
        return cls(mu_p, sigma_from_wavelength_fwhm(center_wavelength, fwhm))

    def __call__(self, omega_sum):
        return np.exp(-(np.asarray(omega_sum) - self.mu_p) ** 2 / (2 * self.sigma_p ** 2))


PumpEnvelope = Union[MonochromaticPump, GaussianPump]


def _cell_widths(axis):
    return np.gradient(axis) if axis.size > 1 else np.ones(1)


@dataclass
class JsaGrid:
    """f(omega_i, omega_s) sampled on a rectangular grid; rows are idler frequencies."""

    omega_i: np.ndarray
    omega_s: np.ndarray
    values: np.ndarray
    norm: float = 1.0

    def __post_init__(self):
        self.omega_i = np.asarray(self.omega_i, dtype=float)
        self.omega_s = np.asarray(self.omega_s, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        for ax in (self.omega_i, self.omega_s):
            if ax.ndim != 1 or np.any(np.diff(ax) <= 0):
                raise BiphotonError("JSA axes must be strictly increasing 1-D arrays")
        if self.values.shape != (self.omega_i.size, self.omega_s.size):
            raise BiphotonError("JSA matrix shape does not match its axes")

    @property
    def weights(self) -> np.ndarray:
        return np.outer(_cell_widths(self.omega_i), _cell_widths(self.omega_s))

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2 * self.weights))

    def normalize(self) -> "JsaGrid":
        total = self.norm2()
        if total == 0:
            raise BiphotonError("cannot normalize an all-zero JSA")
        self.values = self.values / np.sqrt(total)
        self.norm = self.norm * np.sqrt(total)
        return self

    def to_csv(self, path=None) -> str:
        """Dense-matrix CSV: first row the signal axis, then one row per idler frequency."""
        from .io import fmt

        lines = ["# rows: omega_i [rad/s] then Re/Im blocks; columns: omega_s [rad/s]",
                 "omega_i\\omega_s," + ",".join(fmt(w) for w in self.omega_s)]
        for part, name in ((self.values.real, "re"), (self.values.imag, "im")):
            for w, row in zip(self.omega_i, part):
                lines.append(f"{name}:{fmt(w)}," + ",".join(fmt(v) for v in row))
        text = "\n".join(lines) + "\n"
        if path is not None:
            from pathlib import Path

            Path(path).write_text(text)
        return text


@dataclass(frozen=True)
class SchmidtResult:
    coefficients: np.ndarray
    purity: float
    schmidt_number: float

    def as_dict(self, max_coefficients: int = 32) -> dict:
        return {
            "purity": self.purity,
            "schmidt_number": self.schmidt_number,
            "coefficients": [float(c) for c in self.coefficients[:max_coefficients]],
        }


PmfSource = Union[NonlinearityProfile, Callable[[np.ndarray], np.ndarray]]


def _evaluate_pmf(source: PmfSource, dk):
    if isinstance(source, NonlinearityProfile):
        return pmf_from_profile(source, dk, normalize=False)
    return np.asarray(source(dk), dtype=complex)


def default_axes(pump: GaussianPump, dispersion: LinearizedGvm, pmf_halfwidth_dk: float,
                 points: int = 512, pump_sigmas: float = 5.0, lobes: float = 10.0):
    """Square grid around the phase-matched point.

    Half-width per axis is the larger of ``lobes`` PMF central-lobe
    half-widths along the anti-diagonal (``pmf_halfwidth_dk / |k_s' - k_i'|``)
    and the detuning that puts the frequency sum ``pump_sigmas`` standard
    deviations off the pump center.
    """
    gv = abs(dispersion.ks_prime - dispersion.ki_prime)
    half = pump_sigmas * pump.sigma_p / 2
    if gv > 0:
        half = max(half, lobes * pmf_halfwidth_dk / gv)
    offset = np.linspace(-half, half, points)
    return dispersion.mu_i + offset, dispersion.mu_s + offset


def build_jsa(pump: GaussianPump, pmf: PmfSource, dispersion, omega_i, omega_s,
              strict: bool = False) -> JsaGrid:
    """values[i, s] = alpha(w_i + w_s) * Phi(Delta k(w_i, w_s, w_i + w_s)), normalized.

    ``pmf`` is a nonlinearity profile or a callable of Delta k. The
    dispersion model's mismatch is taken as already QPM-shifted.
    """
    if not isinstance(pump, GaussianPump):
        raise BiphotonError("a JSA grid needs a pulsed (Gaussian) pump; use the CW interference path")
    omega_i = np.asarray(omega_i, dtype=float)
    omega_s = np.asarray(omega_s, dtype=float)
    wi, ws = np.meshgrid(omega_i, omega_s, indexing="ij")
    total = wi + ws
    lo, hi = total.min() - pump.mu_p, total.max() - pump.mu_p
    if lo > -4 * pump.sigma_p or hi < 4 * pump.sigma_p:
        msg = "JSA axes do not cover +-4 pump standard deviations along the diagonal"
        if strict:
            raise BiphotonError(msg)
        warnings.warn(msg, CoverageWarning, stacklevel=2)
    dk = phase_mismatch(dispersion, wi, ws, total)
    values = pump(total) * _evaluate_pmf(pmf, dk)
    return JsaGrid(omega_i, omega_s, values).normalize()


def schmidt(jsa: JsaGrid) -> SchmidtResult:
    """Schmidt coefficients from the singular values of the grid-weighted JSA."""
    weighted = jsa.values * np.sqrt(jsa.weights)
    if not np.any(weighted):
        raise BiphotonError("JSA is identically zero")
    sv = np.linalg.svd(weighted, compute_uv=False)
    lam = sv ** 2 / np.sum(sv ** 2)
    purity = float(np.sum(lam ** 2))
    return SchmidtResult(lam, purity, 1.0 / purity)


def gvm_length(sigma_p: float, gv_diff: float, gamma: float) -> float:
    """Crystal length sqrt(8 / (gamma sigma_p^2 (k_s' - k_i')^2)) giving equal signal/idler bandwidths."""
    if gv_diff == 0:
        raise BiphotonError("k_s' = k_i' gives an infinite matched length")
    if not (sigma_p > 0 and gamma > 0):
        raise BiphotonError("sigma_p and gamma must be positive")
    return float(np.sqrt(8.0) / (np.sqrt(gamma) * sigma_p * abs(gv_diff)))


def gv_diff_for_length(sigma_p: float, length: float, gamma: float) -> float:
    """Inverse of :func:`gvm_length`: the |k_s' - k_i'| that makes ``length`` the matched length."""
    if not (sigma_p > 0 and length > 0 and gamma > 0):
        raise BiphotonError("sigma_p, length and gamma must be positive")
    return float(np.sqrt(8.0) / (np.sqrt(gamma) * sigma_p * length))


def marginal_spectra(jsa: JsaGrid) -> tuple[np.ndarray, np.ndarray]:
    """Idler and signal marginal intensities, each integrating to 1 over its axis."""
    inten = np.abs(jsa.values) ** 2
    wi = _cell_widths(jsa.omega_i)
    ws = _cell_widths(jsa.omega_s)
    p_i = inten @ ws
    p_s = wi @ inten
    return p_i / np.sum(p_i * wi), p_s / np.sum(p_s * ws)
