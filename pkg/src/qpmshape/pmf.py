"""Phase-matching functions and curve metrics.

Section-level PMFs use the closed-form transform of each rectangular
segment; domain-level PMFs sum the exact per-domain integrals. Both drop
the sqrt(2 pi) prefactor of the Fourier transform and are peak-normalized
unless ``normalize=False``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.optimize import bisect

from .poling import DomainSequence, NonlinearityProfile

__all__ = [
    "PmfError",
    "GridTooNarrowError",
    "SpectralCurve",
    "CurveMetrics",
    "sinc",
    "pmf_from_profile",
    "pmf_from_domains",
    "pmf_gaussian",
    "pmf_sinc",
    "gamma_from_fwhm_match",
    "sinc_half_point",
    "curve_metrics",
    "central_lobe",
    "yield_grid",
    "equivalent_length",
]

AxisKind = Literal["dk", "omega"]


class PmfError(ValueError):
    pass


class GridTooNarrowError(PmfError):
    pass


def sinc(x):
    """Unnormalized sinc, sin(x)/x."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


@dataclass(frozen=True)
class SpectralCurve:
    """Complex PMF samples on a strictly increasing axis.

    ``axis_kind`` is ``"dk"`` (rad/m) or ``"omega"`` (rad/s);
    ``normalization`` is ``"peak"`` or ``"raw"``; ``scale`` is the peak
    modulus that was divided out (1 for raw curves).
    """

    axis: np.ndarray
    values: np.ndarray
    axis_kind: AxisKind = "dk"
    normalization: str = "raw"
    scale: float = 1.0

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if axis.ndim != 1 or axis.shape != values.shape:
            raise PmfError("axis and values must be 1-D arrays of equal length")
        if axis.size < 16:
            raise PmfError("a spectral curve needs at least 16 samples")
        if np.any(np.diff(axis) <= 0):
            raise PmfError("axis must be strictly increasing")
        if self.axis_kind not in ("dk", "omega"):
            raise PmfError(f"unknown axis kind {self.axis_kind!r}")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def normalized(self) -> "SpectralCurve":
        if self.normalization == "peak":
            return self
        peak = float(np.max(np.abs(self.values)))
        if peak == 0:
            raise PmfError("cannot peak-normalize an all-zero curve")
        return replace(self, values=self.values / peak, normalization="peak", scale=self.scale * peak)

    def with_axis(self, axis, axis_kind: AxisKind) -> "SpectralCurve":
        return replace(self, axis=np.asarray(axis, dtype=float), axis_kind=axis_kind)


def _finish(axis, values, axis_kind, normalize) -> SpectralCurve:
    curve = SpectralCurve(axis, values, axis_kind, "raw", 1.0)
    return curve.normalized() if normalize else curve


def _profile_sum(profile: NonlinearityProfile, dk: np.ndarray) -> np.ndarray:
    out = np.zeros(dk.shape, dtype=complex)
    for level, width, center in zip(profile.levels, profile.widths, profile.centers):
        if level == 0:
            continue
        out += level * width * sinc(dk * width / 2) * np.exp(-1j * dk * center)
    return out


def pmf_from_profile(profile: NonlinearityProfile, dk_grid, normalize: bool = True,
                     axis=None, axis_kind: AxisKind = "dk"):
    """Fourier transform of a piecewise-constant profile, segment by segment.

    ``dk_grid`` may have any shape; for 1-D grids a :class:`SpectralCurve`
    is returned (optionally labelled with a different ``axis``), otherwise
    the raw complex array.
    """
    dk = np.asarray(dk_grid, dtype=float)
    values = _profile_sum(profile, dk)
    if dk.ndim != 1:
        if normalize:
            peak = np.max(np.abs(values))
            if peak == 0:
                raise PmfError("cannot peak-normalize an all-zero PMF")
            values = values / peak
        return values
    return _finish(dk if axis is None else axis, values, axis_kind, normalize)


def pmf_from_domains(domains: DomainSequence, dkp_grid, convention: str = "exact",
                     normalize: bool = True, qpm_order: int = 1) -> SpectralCurve:
    """Domain-by-domain PMF versus the QPM-shifted mismatch Delta k_p.

    The transform is evaluated at the full mismatch
    ``Delta k = Delta k_p + 2 pi * qpm_order / period``.

    ``convention="exact"`` integrates each domain exactly,
    ``s_j (e^{-i dk z_j} - e^{-i dk z_{j-1}}) / (-i dk)``, written in the
    equivalent sinc form so Delta k = 0 needs no special casing.
    ``convention="literal"`` omits the ``1/(-i dk)`` factor.
    """
    dkp = np.asarray(dkp_grid, dtype=float)
    dk = dkp + 2 * np.pi * qpm_order / domains.period
    z = domains.boundaries
    out = np.zeros(dk.shape, dtype=complex)
    if convention == "exact":
        centers = 0.5 * (z[:-1] + z[1:])
        for s, w, c in zip(domains.signs, domains.widths, centers):
            out += s * w * sinc(dk * w / 2) * np.exp(-1j * dk * c)
    elif convention == "literal":
        phase = np.exp(-1j * dk * z[0])
        for j, s in enumerate(domains.signs):
            nxt = np.exp(-1j * dk * z[j + 1])
            out += s * (nxt - phase)
            phase = nxt
    else:
        raise PmfError(f"unknown convention {convention!r}")
    return _finish(dkp, out, "dk", normalize)


def pmf_gaussian(dk_grid, l_eff: float, gamma: float | None = None) -> SpectralCurve:
    """exp(-gamma (dk L_eff / 2)^2), peak 1 at dk = 0."""
    if gamma is None:
        gamma = gamma_from_fwhm_match()
    if not (l_eff > 0 and gamma > 0):
        raise PmfError("l_eff and gamma must be positive")
    dk = np.asarray(dk_grid, dtype=float)
    return SpectralCurve(dk, np.exp(-gamma * (dk * l_eff / 2) ** 2).astype(complex), "dk", "peak", 1.0)


def pmf_sinc(dk_grid, length: float) -> SpectralCurve:
    dk = np.asarray(dk_grid, dtype=float)
    return SpectralCurve(dk, sinc(dk * length / 2).astype(complex), "dk", "peak", 1.0)


@lru_cache(maxsize=None)
def sinc_half_point() -> float:
    """Positive root of sinc(x) = 1/2 on (0, pi), by bisection."""
    return bisect(lambda x: np.sin(x) / x - 0.5, 1e-3, np.pi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def gamma_from_fwhm_match() -> float:
    """Gaussian width parameter whose FWHM equals that of sinc: ln 2 / x_half^2."""
    return float(np.log(2) / sinc_half_point() ** 2)


@dataclass(frozen=True)
class CurveMetrics:
    fwhm_amplitude: float
    fwhm_intensity: float
    first_sidelobe_intensity: float
    peak_position: float

    def as_dict(self) -> dict:
        return {
            "fwhm_amplitude": self.fwhm_amplitude,
            "fwhm_intensity": self.fwhm_intensity,
            "first_sidelobe_intensity": self.first_sidelobe_intensity,
            "peak_position": self.peak_position,
        }


def _crossing(x, y, i_peak, level, step):
    # walk from the peak until y drops below level, interpolate linearly
    i = i_peak
    while 0 <= i + step < y.size:
        j = i + step
        if y[j] < level:
            return x[i] + (level - y[i]) * (x[j] - x[i]) / (y[j] - y[i])
        i = j
    raise GridTooNarrowError("no half-maximum crossing on the grid; widen it")


def central_lobe(curve: SpectralCurve) -> tuple[int, int]:
    """Index range [lo, hi] bounded by the first local minima of |value| around the peak."""
    a = np.abs(curve.values)
    i = int(np.argmax(a))
    lo = i
    while lo > 0 and a[lo - 1] <= a[lo]:
        lo -= 1
    hi = i
    while hi < a.size - 1 and a[hi + 1] <= a[hi]:
        hi += 1
    return lo, hi


def curve_metrics(curve: SpectralCurve) -> CurveMetrics:
    x = curve.axis
    a = np.abs(curve.values)
    i_peak = int(np.argmax(a))
    peak = a[i_peak]
    if peak == 0:
        raise PmfError("curve is identically zero")
    if np.count_nonzero(a >= peak * (1 - 1e-12)) > 1 and np.ptp(x[a >= peak * (1 - 1e-12)]) > 2 * np.max(np.diff(x)):
        raise PmfError("curve has no unique global maximum")

    def width(level):
        return _crossing(x, a, i_peak, level, +1) - _crossing(x, a, i_peak, level, -1)

    lo, hi = central_lobe(curve)
    inten = a ** 2
    side = 0.0
    for rng in (range(1, lo), range(hi + 1, a.size - 1)):
        for j in rng:
            if inten[j] >= inten[j - 1] and inten[j] >= inten[j + 1] and inten[j] > side:
                side = inten[j]
    return CurveMetrics(
        fwhm_amplitude=float(width(peak / 2)),
        fwhm_intensity=float(width(peak / np.sqrt(2))),
        first_sidelobe_intensity=float(side / peak ** 2),
        peak_position=float(x[i_peak]),
    )


def equivalent_length(profile: NonlinearityProfile) -> float:
    """(int chi)^2 / int chi^2: the length of a uniform crystal with the same peak-to-power ratio.

    Exact for a uniform profile; about 1.1 L_eff for a Gaussian target.
    """
    area = float(np.sum(profile.levels * profile.widths))
    power = float(np.sum(profile.levels ** 2 * profile.widths))
    if power == 0:
        raise PmfError("profile is identically zero")
    return area ** 2 / power if area != 0 else profile.length


def yield_grid(*profiles: NonlinearityProfile, lobes: int = 100, per_lobe: int = 16) -> np.ndarray:
    """Delta k grid wide and fine enough to integrate the PMF intensity of every profile."""
    longest = max(p.length for p in profiles)
    lobe = 2 * np.pi / longest
    n = 2 * lobes * per_lobe + 1
    return np.linspace(-lobes * lobe, lobes * lobe, n)
