"""Ballistic free energy, relative entropy and scaled-norm diagnostics.

The central object is the Bregman-type distance

    E(rho, theta | r, Theta) = H(rho, theta) - dH/drho(r, Theta) (rho - r) - H(r, Theta)

built from the ballistic free energy H(rho, theta) = rho e - Theta rho s at a
fixed reference temperature Theta.  Thermodynamic stability makes E
nonnegative and zero exactly at the reference point, which is what turns it
into a distance between a 3D field and a lifted 1D reference profile.

Scaled norms divide volume integrals over the thin domain by the
cross-section measure so that values are comparable across the thickness
parameter.  All quadrature is the midpoint rule on the solvers' cell-centered
grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .thermo import ThermoModel

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

__all__ = [
    "EssentialWindow",
    "CoercivityReport",
    "ScaledNormReport",
    "ballistic_free_energy",
    "drho_ballistic",
    "drho_ballistic_fd",
    "rel_entropy",
    "coercivity_check",
    "essential_residual_split",
    "cross_section_average",
    "scaled_norms",
    "rel_entropy_integral",
    "halton_points",
]


def _check_positive(name, value):
    value = np.asarray(value, dtype=float)
    if np.any(value <= 0.0) or not np.all(np.isfinite(value)):
        raise ValueError(f"{name} must be strictly positive and finite")
    return value


@dataclass(frozen=True)
class EssentialWindow:
    """Compact box of admissible (rho, theta) values around a reference range."""

    rho_lo: float
    rho_hi: float
    theta_lo: float
    theta_hi: float

    def __post_init__(self):
        if not (0.0 < self.rho_lo <= self.rho_hi):
            raise ValueError("need 0 < rho_lo <= rho_hi")
        if not (0.0 < self.theta_lo <= self.theta_hi):
            raise ValueError("need 0 < theta_lo <= theta_hi")

    @classmethod
    def from_reference(cls, rho_samples, theta_samples) -> "EssentialWindow":
        """Window spanning half the minimum to twice the maximum of a reference."""
        rho = _check_positive("reference density", rho_samples)
        theta = _check_positive("reference temperature", theta_samples)
        return cls(
            rho_lo=0.5 * float(np.min(rho)),
            rho_hi=2.0 * float(np.max(rho)),
            theta_lo=0.5 * float(np.min(theta)),
            theta_hi=2.0 * float(np.max(theta)),
        )

    def contains(self, rho, theta):
        """Elementwise membership mask."""
        rho = np.asarray(rho, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return (
            (rho >= self.rho_lo)
            & (rho <= self.rho_hi)
            & (theta >= self.theta_lo)
            & (theta <= self.theta_hi)
        )

    def central_half_contains(self, rho, theta) -> bool:
        rm, tm = 0.5 * (self.rho_lo + self.rho_hi), 0.5 * (self.theta_lo + self.theta_hi)
        rw, tw = self.rho_hi - self.rho_lo, self.theta_hi - self.theta_lo
        return bool(abs(rho - rm) <= 0.25 * rw and abs(theta - tm) <= 0.25 * tw)


# -- ballistic free energy and relative entropy --------------------------------


def ballistic_free_energy(model: ThermoModel, rho, theta, Theta):
    """H(rho, theta) = rho e(rho, theta) - Theta rho s(rho, theta); affine in Theta."""
    Theta = _check_positive("reference temperature", Theta)
    rho = np.asarray(rho, dtype=float)
    return model.energy_density(rho, theta) - Theta * rho * model.entropy(rho, theta)


def drho_ballistic(model: ThermoModel, r, Theta):
    """Closed-form density derivative of the ballistic free energy at (r, Theta).

    With Z = r / Theta^(3/2):

        dH/drho = (3/2) Theta P'(Z) - Theta (S(Z) + S0 + Z S'(Z)).
    """
    r = _check_positive("reference density", r)
    Theta = _check_positive("reference temperature", Theta)
    z = r * Theta**-1.5
    closure = model.closure
    return 1.5 * Theta * closure.dP(z) - Theta * (
        closure.S(z) + model.S0 + z * model.entropy_slope(z)
    )


def drho_ballistic_fd(model: ThermoModel, r, Theta, step=1e-3):
    """Finite-difference cross-check of :func:`drho_ballistic`.

    Fourth-order five-point stencil with a relative step: the larger step
    keeps subtractive cancellation small next to the quartic radiation
    terms while the stencil order keeps the truncation error negligible.
    """
    r = _check_positive("reference density", r)
    h = step * r

    def H(rr):
        return ballistic_free_energy(model, rr, Theta, Theta)

    return (8.0 * (H(r + h) - H(r - h)) - (H(r + 2 * h) - H(r - 2 * h))) / (12.0 * h)


def rel_entropy(model: ThermoModel, rho, theta, r, Theta):
    """Relative entropy E(rho, theta | r, Theta); >= 0, zero only at the reference."""
    rho = _check_positive("density", rho)
    r = _check_positive("reference density", r)
    return (
        ballistic_free_energy(model, rho, theta, Theta)
        - drho_ballistic(model, r, Theta) * (rho - r)
        - ballistic_free_energy(model, r, Theta, Theta)
    )


# -- coercivity sampling --------------------------------------------------------


def halton_points(n: int, lo, hi) -> np.ndarray:
    """Deterministic 2D Halton sample of n points in the box [lo, hi]."""
    sampler = qmc.Halton(d=2, scramble=False)
    unit = sampler.random(n)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return lo + unit * (hi - lo)


@dataclass(frozen=True)
class CoercivityReport:
    """Largest constants c observed in the lower bounds on the relative entropy.

    ``c_essential`` bounds E >= c (|rho-r|^2 + |theta-Theta|^2) inside the
    window, ``c_residual`` bounds E >= c (1 + |rho s| + rho e) outside, and
    the low/high density constants realize E >= c |rho - r| below the window
    respectively E >= c rho above it.  Empty sample classes report None.
    """

    c_essential: Optional[float]
    c_residual: Optional[float]
    c_low_density: Optional[float]
    c_high_density: Optional[float]
    n_inside: int
    n_outside: int
    reference: tuple

    def all_positive(self) -> bool:
        values = [self.c_essential, self.c_residual, self.c_low_density, self.c_high_density]
        return all(v is not None and v > 0.0 for v in values)


def coercivity_check(model: ThermoModel, window: EssentialWindow, n_samples: int = 10_000,
                     reference=None, box_factor: float = 8.0) -> CoercivityReport:
    """Estimate coercivity constants of the relative entropy by Halton sampling.

    Samples (rho, theta) from the window enlarged by ``box_factor`` in both
    directions so that both the essential and the residual regime are
    populated.  The reference point defaults to the window center and must
    lie in the central half of the window.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if reference is None:
        reference = (
            0.5 * (window.rho_lo + window.rho_hi),
            0.5 * (window.theta_lo + window.theta_hi),
        )
    r, Theta = float(reference[0]), float(reference[1])
    if not window.central_half_contains(r, Theta):
        raise ValueError("reference point must lie in the central half of the window")

    lo = (window.rho_lo / box_factor, window.theta_lo / box_factor)
    hi = (window.rho_hi * box_factor, window.theta_hi * box_factor)
    pts = halton_points(n_samples, lo, hi)
    rho, theta = pts[:, 0], pts[:, 1]

    ent = rel_entropy(model, rho, theta, r, Theta)
    inside = window.contains(rho, theta)
    outside = ~inside

    dist_sq = (rho - r) ** 2 + (theta - Theta) ** 2
    active = inside & (dist_sq > 1e-28)
    c_ess = float(np.min(ent[active] / dist_sq[active])) if np.any(active) else None

    weight = 1.0 + np.abs(rho * model.entropy(rho, theta)) + model.energy_density(rho, theta)
    c_res = float(np.min(ent[outside] / weight[outside])) if np.any(outside) else None

    low = rho < window.rho_lo
    c_low = float(np.min(ent[low] / np.abs(rho[low] - r))) if np.any(low) else None
    high = rho > window.rho_hi
    c_high = float(np.min(ent[high] / rho[high])) if np.any(high) else None

    return CoercivityReport(
        c_essential=c_ess,
        c_residual=c_res,
        c_low_density=c_low,
        c_high_density=c_high,
        n_inside=int(np.sum(inside)),
        n_outside=int(np.sum(outside)),
        reference=(r, Theta),
    )


# -- essential/residual split ---------------------------------------------------


def essential_residual_split(values, rho, theta, window: EssentialWindow):
    """Split a field into its essential part (inside the window) and the rest.

    The two parts reconstruct the field exactly: values = ess + res.
    """
    values = np.asarray(values, dtype=float)
    mask = window.contains(rho, theta)
    ess = np.where(mask, values, 0.0)
    return ess, values - ess


# -- scaled norms over the thin domain -------------------------------------------


def cross_section_average(field3d) -> np.ndarray:
    """Average over the two transverse axes; returns one value per axial node."""
    field3d = np.asarray(field3d, dtype=float)
    if field3d.ndim != 3:
        raise ValueError("expected a (n1, n2, n3) field")
    return field3d.mean(axis=(0, 1))


def _lift_axial(values1d: np.ndarray, n3: int) -> np.ndarray:
    """Piecewise-constant lift of a 1D cell profile onto a conforming axial grid."""
    n = values1d.shape[0]
    if n3 % n != 0:
        raise ValueError(f"axial grid of {n3} cells does not refine the 1D grid of {n}")
    return np.repeat(values1d, n3 // n)


@dataclass
class ScaledNormReport:
    """Per-thickness summary of the scaled distance to the 1D reference.

    ``sup_t_density_norm`` and ``sup_t_temperature_norm`` are maxima over the
    recorded output times t > 0; ``velocity_norm_r`` maps each exponent r to
    the time-integrated scaled L^r norm; ``rel_entropy_trace`` records the
    scaled kinetic + relative-entropy integral per output time.
    """

    epsilon: float
    times: list = field(default_factory=list)
    density_norms: list = field(default_factory=list)
    temperature_norms: list = field(default_factory=list)
    velocity_norms: dict = field(default_factory=dict)
    rel_entropy_trace: list = field(default_factory=list)

    def _sup_positive_times(self, series) -> float:
        positive = [v for t, v in zip(self.times, series) if t > 0.0]
        return max(positive if positive else series)

    @property
    def sup_t_density_norm(self) -> float:
        return self._sup_positive_times(self.density_norms)

    @property
    def sup_t_temperature_norm(self) -> float:
        return self._sup_positive_times(self.temperature_norms)

    @property
    def sup_t_rel_entropy(self) -> float:
        return self._sup_positive_times(self.rel_entropy_trace)

    def velocity_norm_r(self, r: float) -> float:
        """Time-integrated (trapezoid over outputs) scaled L^r norm of u - u_ref."""
        series = self.velocity_norms[r]
        return float(_trapezoid(series, self.times))

    def validate(self):
        for name in ("density_norms", "temperature_norms", "rel_entropy_trace"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.size and (np.any(arr < 0.0) or np.any(~np.isfinite(arr))):
                raise ValueError(f"{name} entries must be finite and nonnegative")


def scaled_norms(state3d, state1d, r_exponent: float):
    """Scaled distances between a 3D state and the lifted 1D reference.

    Returns the triple

        ( |Q_eps|^-1 ||rho - rho_ref||_{5/3}^{5/3},
          |Q_eps|^-1 ||theta - theta_ref||_2^2,
          |Q_eps|^-1 ||u - (0,0,u_ref)||_r^r )

    by midpoint quadrature, with the 1D reference constant over each cross
    section.  The normalization makes the values invariant under changing
    the thickness while keeping the sampled fields fixed.
    """
    if not 1.0 <= r_exponent < 2.0:
        raise ValueError("velocity exponent must lie in [1, 2)")
    n1, n2, n3 = state3d.rho.shape
    rho_ref = _lift_axial(state1d.rho, n3)
    theta_ref = _lift_axial(state1d.theta, n3)
    u_ref = _lift_axial(state1d.u, n3)

    weight = state3d.domain.h3 / (n1 * n2)
    rho_norm = float(np.sum(np.abs(state3d.rho - rho_ref) ** (5.0 / 3.0)) * weight)
    theta_norm = float(np.sum((state3d.theta - theta_ref) ** 2) * weight)
    speed = np.sqrt(state3d.u1**2 + state3d.u2**2 + (state3d.u3 - u_ref) ** 2)
    u_norm = float(np.sum(speed**r_exponent) * weight)
    return rho_norm, theta_norm, u_norm


def rel_entropy_integral(model: ThermoModel, state3d, state1d) -> float:
    """Scaled integral of 1/2 rho |u - u_ref|^2 + E(rho, theta | rho_ref, theta_ref)."""
    n1, n2, n3 = state3d.rho.shape
    rho_ref = _lift_axial(state1d.rho, n3)
    theta_ref = _lift_axial(state1d.theta, n3)
    u_ref = _lift_axial(state1d.u, n3)
    kinetic = 0.5 * state3d.rho * (
        state3d.u1**2 + state3d.u2**2 + (state3d.u3 - u_ref) ** 2
    )
    ent = rel_entropy(model, state3d.rho, state3d.theta, rho_ref, theta_ref)
    weight = state3d.domain.h3 / (n1 * n2)
    return float(np.sum(kinetic + ent) * weight)
