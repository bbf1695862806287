"""Poled gratings at section level and domain level.

Lengths follow one convention throughout: a section of order ``m`` with
``num_domains = n`` contains ``n`` full sign-flip periods of length
``m * lambda_qpm``, i.e. ``2n`` domains on the coherence-length grid
``L_c = lambda_qpm / 2``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PolingError",
    "PolingSection",
    "DomainSequence",
    "NonlinearityProfile",
    "duty_cycle_for_order",
    "section_length",
    "sections_to_profile",
    "sections_to_domains",
    "profile_yield_ratio",
    "write_sections",
    "read_sections",
]


class PolingError(ValueError):
    pass


def duty_cycle_for_order(order: int) -> Fraction:
    """Closest-to-half duty cycle realizable on the coherence-length grid.

    Odd orders flip every ``m`` coherence lengths (D = 1/2). An even order
    ``2k`` alternates runs of ``2k-1`` and ``2k+1`` coherence lengths, so
    D = (2k-1)/(4k), e.g. 5/12 for m = 6.
    """
    if order % 2:
        return Fraction(1, 2)
    k = order // 2
    return Fraction(2 * k - 1, 4 * k)


def _runs(order: int) -> tuple[int, int]:
    # (leading, trailing) run lengths in units of L_c for one period
    if order % 2:
        return order, order
    return order - 1, order + 1


@dataclass(frozen=True)
class PolingSection:
    order: int
    num_domains: int
    duty_cycle: float | None = None
    polarity: int = 1

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise PolingError(f"poling order must be a positive integer, got {self.order}")
        if int(self.num_domains) != self.num_domains or self.num_domains < 2:
            raise PolingError(f"num_domains must be an integer >= 2, got {self.num_domains}")
        if self.polarity not in (1, -1):
            raise PolingError(f"polarity must be +1 or -1, got {self.polarity}")
        expected = float(duty_cycle_for_order(int(self.order)))
        if self.duty_cycle is None:
            object.__setattr__(self, "duty_cycle", expected)
        elif abs(self.duty_cycle - expected) > 1e-6:
            raise PolingError(
                f"duty cycle {self.duty_cycle} not realizable for order {self.order} (expected {expected:.6f})")
        else:
            object.__setattr__(self, "duty_cycle", expected)
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "num_domains", int(self.num_domains))

    @property
    def level(self) -> float:
        return self.polarity / self.order


def section_length(section: PolingSection, lambda_qpm: float) -> float:
    return section.num_domains * section.order * lambda_qpm


@dataclass(frozen=True)
class DomainSequence:
    """Signs and widths of individual domains, left to right.

    ``period`` is the first-order poling period; every width is an integer
    multiple of ``period / 2``.
    """

    signs: np.ndarray
    widths: np.ndarray
    period: float
    origin: float = 0.0

    def __post_init__(self):
        signs = np.asarray(self.signs, dtype=int)
        widths = np.asarray(self.widths, dtype=float)
        if signs.shape != widths.shape or signs.ndim != 1 or signs.size == 0:
            raise PolingError("signs and widths must be equal-length non-empty 1-D arrays")
        if not np.all(np.isin(signs, (-1, 1))):
            raise PolingError("domain signs must be +1 or -1")
        if np.any(widths <= 0):
            raise PolingError("domain widths must be positive")
        units = widths / (self.period / 2)
        if np.max(np.abs(units - np.round(units))) > 1e-6:
            raise PolingError("domain widths must be integer multiples of the coherence length")
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "widths", widths)

    @property
    def coherence_length(self) -> float:
        return self.period / 2

    @property
    def boundaries(self) -> np.ndarray:
        """z_0 .. z_N, with z_0 = origin."""
        return self.origin + np.concatenate(([0.0], np.cumsum(self.widths)))

    @property
    def length(self) -> float:
        return float(np.sum(self.widths))

    def __len__(self):
        return self.signs.size


@dataclass(frozen=True)
class NonlinearityProfile:
    """Piecewise-constant relative nonlinearity: ``levels[j]`` on [edges[j], edges[j+1])."""

    edges: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        levels = np.asarray(self.levels, dtype=float)
        if edges.ndim != 1 or levels.ndim != 1 or edges.size != levels.size + 1 or levels.size == 0:
            raise PolingError("need n+1 edges for n levels, n >= 1")
        if np.any(np.diff(edges) <= 0):
            raise PolingError("segment edges must be strictly increasing")
        if np.any(np.abs(levels) > 1 + 1e-12):
            raise PolingError("|level| must not exceed 1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_segments(cls, segments: Iterable[tuple[float, float, float]]) -> "NonlinearityProfile":
        segments = list(segments)
        if not segments:
            raise PolingError("empty segment list")
        for (_, end, _), (start, _, _) in zip(segments, segments[1:]):
            if not np.isclose(end, start, rtol=0, atol=1e-15 + 1e-12 * abs(end)):
                raise PolingError("segments must be contiguous")
        edges = [segments[0][0]] + [s[1] for s in segments]
        return cls(np.array(edges), np.array([s[2] for s in segments]))

    @classmethod
    def uniform(cls, length: float, level: float = 1.0, center: float = 0.0) -> "NonlinearityProfile":
        return cls(np.array([center - length / 2, center + length / 2]), np.array([level]))

    @property
    def segments(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(v)) for a, b, v in zip(self.edges[:-1], self.edges[1:], self.levels)]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def length(self) -> float:
        return float(self.edges[-1] - self.edges[0])

    def __call__(self, z) -> np.ndarray:
        """Level at positions ``z``; zero outside the crystal."""
        z = np.asarray(z, dtype=float)
        idx = np.searchsorted(self.edges, z, side="right") - 1
        inside = (idx >= 0) & (idx < self.levels.size)
        out = np.zeros(z.shape)
        out[inside] = self.levels[idx[inside]]
        return out

    def shifted(self, dz: float) -> "NonlinearityProfile":
        return NonlinearityProfile(self.edges + dz, self.levels.copy())

    def scaled(self, factor: float) -> "NonlinearityProfile":
        return NonlinearityProfile(self.edges.copy(), self.levels * factor)

    def centered(self) -> "NonlinearityProfile":
        return self.shifted(-0.5 * (self.edges[0] + self.edges[-1]))


def sections_to_profile(sections: Sequence[PolingSection], lambda_qpm: float,
                        origin: float | None = None) -> NonlinearityProfile:
    """Staircase profile, one segment of level ``polarity/m`` per section.

    By default the profile is centered on z = 0.
    """
    if not sections:
        raise PolingError("empty section list")
    if not lambda_qpm > 0:
        raise PolingError("lambda_qpm must be positive")
    lengths = np.array([section_length(s, lambda_qpm) for s in sections])
    total = float(np.sum(lengths))
    start = -total / 2 if origin is None else origin
    edges = start + np.concatenate(([0.0], np.cumsum(lengths)))
    return NonlinearityProfile(edges, np.array([s.level for s in sections]))


def sections_to_domains(sections: Sequence[PolingSection], lambda_qpm: float,
                        origin: float | None = None) -> DomainSequence:
    """Expand sections into individual domains.

    Each section starts on its own polarity sign; runs are ``m`` coherence
    lengths for odd ``m`` and alternate ``m-1`` / ``m+1`` for even ``m``.
    """
    if not sections:
        raise PolingError("empty section list")
    lc = lambda_qpm / 2
    signs: list[int] = []
    units: list[int] = []
    for sec in sections:
        first, second = _runs(sec.order)
        for _ in range(sec.num_domains):
            signs += [sec.polarity, -sec.polarity]
            units += [first, second]
    widths = np.array(units, dtype=float) * lc
    total = float(np.sum(widths))
    start = -total / 2 if origin is None else origin
    return DomainSequence(np.array(signs), widths, lambda_qpm, start)


def profile_yield_ratio(profile_a: NonlinearityProfile, profile_b: NonlinearityProfile,
                        grid=None, dispersion=None, tol: float = 1e-30) -> float:
    """Ratio of PMF intensities integrated over a shared grid.

    Without ``dispersion`` the grid is in Delta k (rad/m). With a
    :class:`~qpmshape.dispersion.LinearizedGvm` (or tabulated model) the
    grid is the CW single-photon detuning Omega in rad/s and each point is
    mapped through the phase mismatch at (mu_i + Omega, mu_s - Omega).
    """
    from .pmf import pmf_from_profile, yield_grid

    if grid is None:
        if dispersion is not None:
            raise PolingError("an explicit Omega grid is required with a dispersion model")
        grid = yield_grid(profile_a, profile_b)
    grid = np.asarray(grid, dtype=float)
    dk = grid
    if dispersion is not None:
        from .dispersion import phase_mismatch

        dk = phase_mismatch(dispersion, dispersion.mu_i + grid, dispersion.mu_s - grid)
    ia = np.abs(pmf_from_profile(profile_a, dk, normalize=False).values) ** 2
    ib = np.abs(pmf_from_profile(profile_b, dk, normalize=False).values) ** 2
    num = np.trapezoid(ia, grid)
    den = np.trapezoid(ib, grid)
    if not den > tol:
        raise PolingError("degenerate reference profile: integrated PMF intensity is zero")
    return float(num / den)


_FIELDS = ("m", "n", "D", "polarity")


def write_sections(sections: Sequence[PolingSection], path=None, lambda_qpm: float | None = None) -> str:
    """Serialize a section list as CSV (columns m, n, D, polarity).

    ``lambda_qpm`` is stored in a ``# lambda_qpm_m = ...`` comment line.
    Returns the text; also writes it when ``path`` is given.
    """
    buf = io.StringIO()
    if lambda_qpm is not None:
        buf.write(f"# lambda_qpm_m = {lambda_qpm:.12e}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_FIELDS)
    for s in sections:
        writer.writerow([s.order, s.num_domains, f"{s.duty_cycle:.12e}", f"{s.polarity:+d}"])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_sections(path_or_text) -> tuple[list[PolingSection], float | None]:
    """Parse a section file; returns (sections, lambda_qpm or None)."""
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text()
    else:
        text = path_or_text
    lam = None
    rows = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, _, value = stripped[1:].partition("=")
            if key.strip() == "lambda_qpm_m":
                lam = float(value)
            continue
        rows.append(stripped)
    reader = csv.DictReader(rows)
    if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != _FIELDS:
        raise PolingError(f"section file header must be {','.join(_FIELDS)}")
    sections = []
    for rec in reader:
        try:
            sections.append(PolingSection(int(rec["m"]), int(rec["n"]), float(rec["D"]), int(rec["polarity"])))
        except (TypeError, ValueError) as exc:
            raise PolingError(f"bad section record {rec}: {exc}") from exc
    if not sections:
        raise PolingError("section file contains no sections")
    return sections, lam
