"""Synthesis of section layouts that approximate a target nonlinearity profile.

The layout is built by quantizing the target onto the admissible levels
``{+-1/m : m_min <= m <= m_max} U {0}`` on the coherence-length grid,
walking outward from the profile center, then rounding runs to whole
poling periods and refining section lengths by coordinate descent on the
PMF error.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from .pmf import PmfError, curve_metrics, gamma_from_fwhm_match, pmf_from_profile, sinc, yield_grid
from .poling import (NonlinearityProfile, PolingSection, profile_yield_ratio, section_length,
                     sections_to_profile)

__all__ = [
    "InfeasibleDesignError",
    "Target",
    "DesignSpec",
    "DesignReport",
    "PolingDesigner",
    "target_shape",
    "design_profile",
    "evaluate_design",
    "standard_grid",
    "pmf_l2_error",
    "GRID_POINTS",
    "GRID_LOBES",
]

log = logging.getLogger(__name__)

GRID_POINTS = 4096
GRID_LOBES = 6
MAX_ORDER = 16


class InfeasibleDesignError(ValueError):
    pass


@dataclass(frozen=True)
class Target:
    """Named target shape.

    ``width`` means: ``gaussian`` the effective length L_eff (m);
    ``triangle`` the full base width of the triangular PMF (rad/m);
    ``tophat`` the full width of the flat-top PMF (rad/m);
    ``uniform`` the crystal length (m).
    """

    name: str
    width: float
    gamma: float | None = None

    def __post_init__(self):
        if self.name not in ("gaussian", "triangle", "tophat", "uniform"):
            raise ValueError(f"unknown target shape {self.name!r}")
        if not self.width > 0:
            raise ValueError("target width must be positive")
        if self.name == "gaussian" and self.gamma is None:
            object.__setattr__(self, "gamma", gamma_from_fwhm_match())

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def lobe_halfwidth(self) -> float:
        """Half-width (rad/m) of the PMF central lobe used to size evaluation grids."""
        if self.name in ("gaussian", "uniform"):
            return 2 * np.pi / self.width
        return self.width / 2

    def profile(self, z) -> np.ndarray:
        """z-space target, peak 1 at z = 0."""
        z = np.asarray(z, dtype=float)
        if self.name == "gaussian":
            return np.exp(-(z / self.width) ** 2 / self.gamma)
        if self.name == "triangle":
            return sinc(self.width / 2 * z / 2) ** 2
        if self.name == "tophat":
            return sinc(self.width / 2 * z)
        return np.where(np.abs(z) <= self.width / 2, 1.0, 0.0)

    def pmf(self, dk) -> np.ndarray:
        """PMF-space target, peak 1 at dk = 0."""
        dk = np.asarray(dk, dtype=float)
        if self.name == "gaussian":
            return np.exp(-self.gamma * (dk * self.width / 2) ** 2)
        if self.name == "triangle":
            return np.clip(1 - np.abs(dk) / (self.width / 2), 0.0, None)
        if self.name == "tophat":
            return np.where(np.abs(dk) <= self.width / 2, 1.0, 0.0)
        return sinc(dk * self.width / 2)


def target_shape(name: str, params, z_grid) -> np.ndarray:
    """Sample a named target on ``z_grid``; ``params`` is a width or a mapping with ``width``."""
    if isinstance(params, dict):
        target = Target(name, **params)
    else:
        target = Target(name, float(params))
    return target.profile(z_grid)


@dataclass(frozen=True)
class DesignSpec:
    target: Target
    lambda_qpm: float
    m_min: int = 1
    m_max: int = 6
    length_budget: float = 10e-3
    allow_negative: bool = False

    def __post_init__(self):
        if not 1 <= self.m_min <= self.m_max <= MAX_ORDER:
            raise ValueError(f"need 1 <= m_min <= m_max <= {MAX_ORDER}")
        if not self.length_budget > 0 or not self.lambda_qpm > 0:
            raise ValueError("length_budget and lambda_qpm must be positive")


@dataclass
class DesignReport:
    sections: list[PolingSection]
    total_length: float
    pmf_l2_error: float
    first_sidelobe_intensity: float
    yield_vs_uniform: float
    error_history: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "num_sections": len(self.sections),
            "total_length_m": self.total_length,
            "pmf_l2_error": self.pmf_l2_error,
            "first_sidelobe_intensity": self.first_sidelobe_intensity,
            "yield_vs_uniform": self.yield_vs_uniform,
            "refinement_steps": max(len(self.error_history) - 1, 0),
            "sections": [asdict(s) for s in self.sections],
        }


def standard_grid(lobe_halfwidth: float, points: int = GRID_POINTS, lobes: int = GRID_LOBES) -> np.ndarray:
    return np.linspace(-lobes * lobe_halfwidth, lobes * lobe_halfwidth, points)


def pmf_l2_error(profile: NonlinearityProfile, target_values, dk_grid) -> float:
    """RMS difference of peak-normalized realized and target PMFs on ``dk_grid``.

    The realized profile is centered first so a symmetric design has a real PMF.
    """
    realized = pmf_from_profile(profile.centered(), dk_grid).values
    target = np.asarray(target_values, dtype=complex)
    target = target / np.max(np.abs(target))
    return float(np.sqrt(np.mean(np.abs(realized - target) ** 2)))


def _admissible_levels(m_min, m_max, allow_negative):
    orders = np.arange(m_min, m_max + 1)
    levels = [0.0] + [1.0 / m for m in orders[::-1]]
    if allow_negative:
        levels = [0.0] + [s / m for m in orders[::-1] for s in (1.0, -1.0)]
    # sorted by |level| so argmin breaks ties toward the smaller magnitude
    return np.array(levels)


def _quantize(values, levels):
    return levels[np.argmin(np.abs(values[:, None] - levels[None, :]), axis=1)]


def _runs(levels):
    """Collapse consecutive equal cell levels into [level, count] runs."""
    runs = []
    for v in levels:
        if runs and runs[-1][0] == v:
            runs[-1][1] += 1
        else:
            runs.append([v, 1])
    return runs


def _absorb_zero_runs(runs):
    # interior zeros are split between neighbours, the inner one taking the odd cell
    out = []
    i = 0
    while i < len(runs):
        level, count = runs[i]
        if level == 0 and 0 < i < len(runs) - 1:
            inner = (count + 1) // 2
            out[-1][1] += inner
            runs[i + 1][1] += count - inner
        elif level != 0:
            out.append([level, count])
        i += 1
    return out


def _half_runs(cells, levels, threshold):
    """Runs of quantized levels (in coherence lengths) walking outward on one side."""
    keep = np.nonzero(np.abs(cells) >= threshold)[0]
    if keep.size == 0:
        return []
    cells = cells[: keep[-1] + 1]
    return _absorb_zero_runs(_runs(_quantize(cells, levels)))


def _merge_short(runs, lc_per_period):
    """Merge runs shorter than two poling periods into the neighbour with the closest level."""
    runs = [list(r) for r in runs]
    while True:
        periods = [count // lc_per_period(level) for level, count in runs]
        short = [i for i, n in enumerate(periods) if n < 2]
        if not short or len(runs) == 1:
            return runs
        i = min(short, key=lambda j: (periods[j], j))
        candidates = [j for j in (i - 1, i + 1) if 0 <= j < len(runs)]
        j = min(candidates, key=lambda j: (abs(runs[j][0] - runs[i][0]), j))
        runs[j][1] += runs[i][1]
        del runs[i]
        merged = []
        for r in runs:
            if merged and merged[-1][0] == r[0]:
                merged[-1][1] += r[1]
            else:
                merged.append(r)
        runs = merged


def _order_of(level):
    return int(round(1 / abs(level)))


class PolingDesigner(RegressorMixin, BaseEstimator):
    """Fit a discretely poled section layout to a sampled target profile.

    ``fit(z, chi)`` takes target samples (positions in m, relative
    nonlinearity); the target is rescaled so its peak equals ``1/m_min``.
    After fitting, ``predict(z)`` returns the realized staircase and
    ``pmf(dk)`` its phase-matching function.

    Parameters
    ----------
    lambda_qpm : float
        First-order poling period (m).
    m_min, m_max : int
        Poling orders allowed; ``m_min`` is used where the target peaks.
    length_budget : float
        Maximum crystal length (m).
    allow_negative : bool
        Permit inverted sections (negative levels).
    refine : bool
        Run coordinate-descent refinement of section lengths.
    lobe_halfwidth : float, optional
        Central-lobe half-width (rad/m) sizing the refinement grid. Defaults
        to ``2 pi`` over the extent of the above-threshold target.
    n_grid : int
        Points of the refinement grid, which spans +-6 lobe half-widths.
    """

    def __init__(self, lambda_qpm=10.85e-6, m_min=1, m_max=6, length_budget=10e-3,
                 allow_negative=False, refine=True, lobe_halfwidth=None, n_grid=GRID_POINTS,
                 max_passes=10000):
        self.lambda_qpm = lambda_qpm
        self.m_min = m_min
        self.m_max = m_max
        self.length_budget = length_budget
        self.allow_negative = allow_negative
        self.refine = refine
        self.lobe_halfwidth = lobe_halfwidth
        self.n_grid = n_grid
        self.max_passes = max_passes

    def _validate_params(self):
        if not 1 <= self.m_min <= self.m_max <= MAX_ORDER:
            raise ValueError(f"need 1 <= m_min <= m_max <= {MAX_ORDER}")
        if not self.lambda_qpm > 0:
            raise ValueError("lambda_qpm must be positive")
        if self.length_budget < 4 * self.m_min * self.lambda_qpm:
            raise InfeasibleDesignError(
                f"length budget {self.length_budget:.3e} m is below 4 m_min lambda_qpm "
                f"= {4 * self.m_min * self.lambda_qpm:.3e} m")

    def fit(self, X, y, target_pmf=None):
        """Design a layout for target samples ``y`` at positions ``X``.

        ``target_pmf`` is an optional callable dk -> PMF of the target; by
        default the transform of the sampled target is used.
        """
        self._validate_params()
        z = check_array(X, ensure_2d=False, dtype=float)
        if z.ndim == 2:
            if z.shape[1] != 1:
                raise ValueError("X must hold a single column of positions")
            z = z[:, 0]
        chi = check_array(y, ensure_2d=False, dtype=float)
        check_consistent_length(z, chi)
        order = np.argsort(z)
        z, chi = z[order], chi[order]
        peak = np.max(np.abs(chi))
        if peak == 0:
            raise InfeasibleDesignError("target profile is identically zero")
        chi = chi / peak / self.m_min

        levels = _admissible_levels(self.m_min, self.m_max, self.allow_negative)
        threshold = 0.5 / self.m_max
        if not self.allow_negative and np.min(chi) <= -threshold:
            raise InfeasibleDesignError("target needs negative nonlinearity but allow_negative is False")

        lam = self.lambda_qpm
        lc = lam / 2
        center = float(z[np.argmax(np.abs(chi))])
        half_cells = int(np.floor(self.length_budget / 2 / lc + 1e-9))
        offsets = (np.arange(half_cells) + 0.5) * lc
        right = np.interp(center + offsets, z, chi, left=0.0, right=0.0)
        left = np.interp(center - offsets, z, chi, left=0.0, right=0.0)
        symmetric = bool(np.allclose(left, right, rtol=1e-9, atol=1e-12))

        right_runs = _half_runs(right, levels, threshold)
        left_runs = right_runs if symmetric else _half_runs(left, levels, threshold)
        if not right_runs or not left_runs:
            raise InfeasibleDesignError("target never reaches the smallest admissible level")

        def lc_per_period(level):
            return 2 * _order_of(level)

        # join the halves: left side reversed, central runs merged when equal
        runs = [list(r) for r in reversed(left_runs)] + [list(r) for r in right_runs]
        k = len(left_runs)
        if runs[k - 1][0] == runs[k][0]:
            runs[k - 1][1] += runs[k][1]
            del runs[k]
        runs = _merge_short(runs, lc_per_period)

        sections = [PolingSection(_order_of(level), max(count // lc_per_period(level), 2), None,
                                  1 if level > 0 else -1)
                    for level, count in runs]
        while self._total(sections) > self.length_budget * (1 + 1e-12):
            # only reachable when merging forced n = 2; trim the longest section
            i = int(np.argmax([s.num_domains for s in sections]))
            if sections[i].num_domains <= 2:
                raise InfeasibleDesignError("cannot fit the minimum section lengths inside the budget")
            sections[i] = PolingSection(sections[i].order, sections[i].num_domains - 1, None, sections[i].polarity)

        if self.lobe_halfwidth is None:
            support = np.ptp(z[np.abs(chi) >= threshold]) if np.any(np.abs(chi) >= threshold) else self.length_budget
            halfwidth = 2 * np.pi / max(support, lam)
        else:
            halfwidth = float(self.lobe_halfwidth)
        self.dk_grid_ = standard_grid(halfwidth, self.n_grid)
        if target_pmf is None:
            edges = np.concatenate(([z[0]], 0.5 * (z[1:] + z[:-1]), [z[-1]]))
            sampled = NonlinearityProfile(edges - center, np.clip(chi, -1, 1))
            target_pmf = lambda dk: pmf_from_profile(sampled, dk, normalize=False).values  # noqa: E731
        self.target_pmf_values_ = np.asarray(target_pmf(self.dk_grid_), dtype=complex)
        self.center_ = center
        self.symmetric_ = symmetric
        self.initial_sections_ = list(sections)

        history = [self._error(sections)]
        if self.refine:
            sections, history = self._refine(sections, history)
        self.error_history_ = history
        self.sections_ = sections
        total = self._total(sections)
        self.profile_ = sections_to_profile(sections, lam, origin=center - total / 2)
        return self

    def _total(self, sections):
        return sum(section_length(s, self.lambda_qpm) for s in sections)

    def _error(self, sections):
        profile = sections_to_profile(sections, self.lambda_qpm)
        return pmf_l2_error(profile, self.target_pmf_values_, self.dk_grid_)

    def _coordinates(self, sections):
        count = len(sections)
        if not self.symmetric_:
            return [(i,) for i in range(count)]
        # center section first, then mirrored pairs walking outward
        mid = count // 2
        coords = [(mid,)] if count % 2 else []
        start = mid - 1 if count % 2 else mid - 1
        for i in range(start, -1, -1):
            coords.append((i, count - 1 - i))
        return coords

    def _refine(self, sections, history):
        best = history[-1]
        for _ in range(self.max_passes):
            improved = False
            for coord in self._coordinates(sections):
                for step in (1, -1):
                    while True:
                        trial = list(sections)
                        ok = True
                        for i in coord:
                            n = trial[i].num_domains + step
                            if n < 2:
                                ok = False
                                break
                            trial[i] = PolingSection(trial[i].order, n, None, trial[i].polarity)
                        if not ok or self._total(trial) > self.length_budget * (1 + 1e-12):
                            break
                        err = self._error(trial)
                        if err < best - 1e-15:
                            assert err <= history[-1]
                            sections, best = trial, err
                            history.append(err)
                            improved = True
                        else:
                            break
            if not improved:
                break
        log.debug("refinement finished after %d accepted moves, error %.6g", len(history) - 1, best)
        return sections, history

    def predict(self, X):
        check_is_fitted(self, "profile_")
        z = check_array(X, ensure_2d=False, dtype=float)
        if z.ndim == 2:
            z = z[:, 0]
        return self.profile_(z)

    def pmf(self, dk, normalize=True):
        check_is_fitted(self, "profile_")
        return pmf_from_profile(self.profile_, dk, normalize=normalize)


def evaluate_design(sections, target: Target, lambda_qpm: float, dk_grid=None) -> dict:
    """PMF error, sidelobe level and yield (vs a uniform crystal of equal length) of a layout."""
    profile = sections_to_profile(sections, lambda_qpm)
    if dk_grid is None:
        dk_grid = standard_grid(target.lobe_halfwidth)
    realized = pmf_from_profile(profile, dk_grid)
    uniform = NonlinearityProfile.uniform(profile.length)
    try:
        sidelobe = curve_metrics(realized).first_sidelobe_intensity
    except PmfError:
        # flat-topped targets have no unique peak, so no sidelobe level either
        sidelobe = float("nan")
    return {
        "total_length": profile.length,
        "pmf_l2_error": pmf_l2_error(profile, target.pmf(dk_grid), dk_grid),
        "first_sidelobe_intensity": sidelobe,
        "yield_vs_uniform": profile_yield_ratio(profile, uniform, yield_grid(profile, uniform)),
    }


def design_profile(spec: DesignSpec, refine: bool = True) -> DesignReport:
    """Run the full design pipeline for a named target."""
    target = spec.target
    if target.name == "tophat" and not spec.allow_negative:
        raise InfeasibleDesignError("a top-hat PMF needs negative nonlinearity; set allow_negative")
    lc = spec.lambda_qpm / 2
    half = int(np.ceil(spec.length_budget / 2 / lc)) + 1
    z = np.arange(-half, half + 1) * lc
    chi = target.profile(z)
    designer = PolingDesigner(spec.lambda_qpm, spec.m_min, spec.m_max, spec.length_budget,
                              spec.allow_negative, refine=refine, lobe_halfwidth=target.lobe_halfwidth)
    designer.fit(z, chi, target_pmf=target.pmf)
    metrics = evaluate_design(designer.sections_, target, spec.lambda_qpm, designer.dk_grid_)
    return DesignReport(
        sections=designer.sections_,
        total_length=metrics["total_length"],
        pmf_l2_error=metrics["pmf_l2_error"],
        first_sidelobe_intensity=metrics["first_sidelobe_intensity"],
        yield_vs_uniform=metrics["yield_vs_uniform"],
        error_history=designer.error_history_,
    )
