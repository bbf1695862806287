"""Phase mismatch, group velocities and QPM periods.

Dispersion is always an input: either a first-order (group velocity)
expansion around a set of center frequencies, or sampled k(omega) tables
per field with cubic interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "DispersionError",
    "OutOfRangeError",
    "DegeneratePhasematchingError",
    "LinearizedGvm",
    "TabulatedDispersion",
    "QpmGrating",
    "phase_mismatch",
    "qpm_period",
    "gvm_condition_residual",
    "linearize",
    "load_k_table",
]


class DispersionError(ValueError):
    pass


class OutOfRangeError(DispersionError):
    pass


class DegeneratePhasematchingError(DispersionError):
    pass


@dataclass(frozen=True)
class LinearizedGvm:
    """First-order expansion of the three wavevectors around (mu_i, mu_s, mu_p).

    ``k*_prime`` are inverse group velocities in s/m, frequencies in rad/s
    and ``delta_k0`` the residual mismatch at the expansion point in rad/m.
    """

    kp_prime: float
    ki_prime: float
    ks_prime: float
    mu_i: float
    mu_s: float
    mu_p: float | None = None
    delta_k0: float = 0.0
    validity: float | None = None

    def __post_init__(self):
        if self.mu_p is None:
            object.__setattr__(self, "mu_p", self.mu_i + self.mu_s)
        for name in ("kp_prime", "ki_prime", "ks_prime"):
            if not getattr(self, name) > 0:
                raise DispersionError(f"{name} must be strictly positive")
        if not np.isclose(self.mu_i + self.mu_s, self.mu_p, rtol=1e-12, atol=0.0):
            raise DispersionError("mu_i + mu_s must equal mu_p")

    @property
    def gv_diff(self) -> float:
        """k_s' - k_i' in s/m."""
        return self.ks_prime - self.ki_prime

    def with_delta_k0(self, delta_k0: float) -> "LinearizedGvm":
        return LinearizedGvm(self.kp_prime, self.ki_prime, self.ks_prime,
                             self.mu_i, self.mu_s, self.mu_p, delta_k0, self.validity)


@dataclass(frozen=True)
class TabulatedDispersion:
    """Sampled k(omega) per field, interpolated with cubic splines.

    Lookups outside a table raise :class:`OutOfRangeError`; there is no
    extrapolation.
    """

    omega_p: np.ndarray
    k_p: np.ndarray
    omega_i: np.ndarray
    k_i: np.ndarray
    omega_s: np.ndarray
    k_s: np.ndarray
    _splines: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        splines = {}
        for name in ("p", "i", "s"):
            w = np.asarray(getattr(self, f"omega_{name}"), dtype=float)
            k = np.asarray(getattr(self, f"k_{name}"), dtype=float)
            if w.ndim != 1 or w.shape != k.shape:
                raise DispersionError(f"table for field {name!r} must be two equal-length columns")
            if w.size < 4:
                raise DispersionError(f"table for field {name!r} needs at least 4 samples")
            if np.any(np.diff(w) <= 0):
                raise DispersionError(f"table for field {name!r} must be strictly increasing in omega")
            object.__setattr__(self, f"omega_{name}", w)
            object.__setattr__(self, f"k_{name}", k)
            splines[name] = CubicSpline(w, k)
        object.__setattr__(self, "_splines", splines)

    def k(self, which: str, omega) -> np.ndarray:
        grid = getattr(self, f"omega_{which}")
        omega = np.asarray(omega, dtype=float)
        if np.any(omega < grid[0]) or np.any(omega > grid[-1]):
            raise OutOfRangeError(
                f"omega outside table range [{grid[0]:.6e}, {grid[-1]:.6e}] for field {which!r}")
        return self._splines[which](omega)

    def k_prime(self, which: str, omega, step: float | None = None) -> np.ndarray:
        """Inverse group velocity dk/domega by central differences."""
        omega = np.asarray(omega, dtype=float)
        if step is None:
            step = 1e-3 * float(np.min(np.diff(getattr(self, f"omega_{which}"))))
        return (self.k(which, omega + step) - self.k(which, omega - step)) / (2 * step)

    @classmethod
    def from_files(cls, pump, idler, signal) -> "TabulatedDispersion":
        wp, kp = load_k_table(pump)
        wi, ki = load_k_table(idler)
        ws, ks = load_k_table(signal)
        return cls(wp, kp, wi, ki, ws, ks)


DispersionModel = Union[LinearizedGvm, TabulatedDispersion]


@dataclass(frozen=True)
class QpmGrating:
    period: float
    order: int = 1

    def __post_init__(self):
        if not self.period > 0:
            raise DispersionError("poling period must be positive")
        if int(self.order) != self.order or self.order < 1:
            raise DispersionError("QPM order must be a positive integer")

    @property
    def k_grating(self) -> float:
        return 2 * np.pi * self.order / self.period


def load_k_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column (omega [rad/s], k [rad/m]) text table; '#' starts a comment."""
    data = np.loadtxt(Path(path), comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise DispersionError(f"{path}: expected two columns, got {data.shape[1]}")
    return data[:, 0].copy(), data[:, 1].copy()


def phase_mismatch(model: DispersionModel, omega_i, omega_s, omega_p=None):
    """Delta k = k_p(omega_p) - k_i(omega_i) - k_s(omega_s) in rad/m.

    ``omega_p`` defaults to ``omega_i + omega_s``. Arrays broadcast.
    """
    omega_i = np.asarray(omega_i, dtype=float)
    omega_s = np.asarray(omega_s, dtype=float)
    omega_p = omega_i + omega_s if omega_p is None else np.asarray(omega_p, dtype=float)
    if isinstance(model, LinearizedGvm):
        d_i = omega_i - model.mu_i
        d_s = omega_s - model.mu_s
        d_p = omega_p - model.mu_p
        if model.validity is not None:
            worst = max(np.max(np.abs(d)) for d in (d_i, d_s, d_p))
            if worst > model.validity:
                raise OutOfRangeError(
                    f"detuning {worst:.3e} rad/s exceeds the declared validity window {model.validity:.3e}")
        return model.delta_k0 + model.kp_prime * d_p - model.ki_prime * d_i - model.ks_prime * d_s
    if isinstance(model, TabulatedDispersion):
        return model.k("p", omega_p) - model.k("i", omega_i) - model.k("s", omega_s)
    raise TypeError(f"unsupported dispersion model {type(model).__name__}")


def linearize(model: TabulatedDispersion, mu_i: float, mu_s: float) -> LinearizedGvm:
    """Build the group-velocity expansion of a tabulated model at (mu_i, mu_s)."""
    mu_p = mu_i + mu_s
    return LinearizedGvm(
        kp_prime=float(model.k_prime("p", mu_p)),
        ki_prime=float(model.k_prime("i", mu_i)),
        ks_prime=float(model.k_prime("s", mu_s)),
        mu_i=mu_i,
        mu_s=mu_s,
        mu_p=mu_p,
        delta_k0=float(phase_mismatch(model, mu_i, mu_s, mu_p)),
    )


def qpm_period(delta_k: float, order: int = 1) -> float:
    """Poling period that compensates ``delta_k`` at QPM order ``order``."""
    if int(order) != order or order < 1:
        raise DispersionError("QPM order must be a positive integer")
    if delta_k == 0:
        raise DegeneratePhasematchingError("delta_k = 0 needs no poling period")
    return abs(order * 2 * np.pi / delta_k)


def gvm_condition_residual(model: DispersionModel, mu_i: float | None = None,
                           mu_s: float | None = None) -> float:
    """k_p' - (k_s' + k_i')/2; zero for a group-velocity-matched configuration."""
    if isinstance(model, TabulatedDispersion):
        if mu_i is None or mu_s is None:
            raise DispersionError("tabulated models need center frequencies mu_i, mu_s")
        model = linearize(model, mu_i, mu_s)
    return model.kp_prime - (model.ks_prime + model.ki_prime) / 2
