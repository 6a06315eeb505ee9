"""Equation of state and transport closures for a heat-conducting compressible fluid.

All thermodynamic functions derive from a reference pressure function ``P``
of the scaled density ``Z = rho / theta**1.5`` plus a quartic radiative part::

    p(rho, theta) = theta**2.5 * P(Z) + (a/3) * theta**4
    e(rho, theta) = 1.5 * theta**2.5 * P(Z) / rho + a * theta**4 / rho
    s(rho, theta) = S(Z) + S0 + (4a/3) * theta**3 / rho

where ``S`` is the antiderivative of ``S'(Z) = -1.5 * (5/3 P(Z) - Z P'(Z)) / Z**2``.
Built this way the triple satisfies the Gibbs relation
``theta ds = de + p d(1/rho)`` identically, which the test suite verifies by
finite differences.  Transport coefficients are affine in temperature for the
viscosities and cubic for the heat conductivity.

Everything is nondimensional; coefficients are pure numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "PressureClosure",
    "ThermoModel",
    "ThetaRecoveryError",
    "CLOSURES",
    "register_closure",
    "structural_report",
    "StructureReport",
]


class ThetaRecoveryError(ValueError):
    """No positive temperature matches the requested internal energy."""


@dataclass(frozen=True)
class PressureClosure:
    """Reference pressure function and its analytically known companions.

    ``P`` must satisfy P(0) = 0 and P'(Z) > 0, with 0 < (5/3 P - Z P')/Z
    bounded so that Z -> P(Z)/Z**(5/3) decreases to the positive limit
    ``P_inf``.  ``S`` is the closed-form antiderivative of the entropy slope
    induced by ``P`` (see module docstring); supplying it analytically keeps
    the relative-entropy evaluations free of quadrature noise.
    """

    name: str
    P: Callable
    dP: Callable
    S: Callable
    P_inf: float


def _p_ideal_z53(z):
    z = np.asarray(z, dtype=float)
    return z + z ** (5.0 / 3.0)


def _dp_ideal_z53(z):
    z = np.asarray(z, dtype=float)
    return 1.0 + (5.0 / 3.0) * z ** (2.0 / 3.0)


def _s_ideal_z53(z):
    return -np.log(z)


#: Default closure P(Z) = Z + Z^(5/3): ideal-gas term plus a cold pressure
#: term.  It gives (5/3 P - Z P')/Z = 2/3 exactly, P_inf = 1 and the
#: closed-form entropy integral S(Z) = -log Z.
IDEAL_Z53 = PressureClosure(
    name="ideal_z53",
    P=_p_ideal_z53,
    dP=_dp_ideal_z53,
    S=_s_ideal_z53,
    P_inf=1.0,
)

CLOSURES: dict[str, PressureClosure] = {IDEAL_Z53.name: IDEAL_Z53}


def register_closure(closure: PressureClosure) -> None:
    """Add a pressure closure to the lookup table used by ThermoModel."""
    CLOSURES[closure.name] = closure


def _check_positive_state(rho, theta):
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(theta))):
        raise ValueError("density and temperature must be finite")
    if np.any(rho <= 0.0):
        raise ValueError("density must be strictly positive")
    if np.any(theta <= 0.0):
        raise ValueError("temperature must be strictly positive")
    return rho, theta


@dataclass(frozen=True)
class ThermoModel:
    """Material constants plus the reference pressure closure.

    Immutable after construction; every method is a pure function of its
    arguments, so instances can be shared freely between threads/processes.
    """

    a: float = 1.0
    mu0: float = 1.0
    mu1: float = 1.0
    eta0: float = 0.0
    eta1: float = 0.0
    kappa0: float = 1.0
    kappa2: float = 1.0
    kappa3: float = 1.0
    P_closure: str = "ideal_z53"
    S0: float = 0.0

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("radiation coefficient a must be > 0")
        if self.mu0 <= 0 or self.mu1 <= 0:
            raise ValueError("shear viscosity coefficients mu0, mu1 must be > 0")
        if self.eta0 < 0 or self.eta1 < 0:
            raise ValueError("bulk viscosity coefficients eta0, eta1 must be >= 0")
        if self.kappa0 <= 0 or self.kappa2 <= 0 or self.kappa3 <= 0:
            raise ValueError("conductivity coefficients kappa0, kappa2, kappa3 must be > 0")
        if self.P_closure not in CLOSURES:
            raise ValueError(
                f"unknown pressure closure {self.P_closure!r}; "
                f"registered: {sorted(CLOSURES)}"
            )
        # combined 1D viscosities; positivity is automatic given mu_i > 0
        if self.nu0 <= 0 or self.nu1 <= 0:
            raise ValueError("derived viscosities nu0, nu1 must be > 0")

    # -- derived coefficients -------------------------------------------------

    @property
    def closure(self) -> PressureClosure:
        return CLOSURES[self.P_closure]

    @property
    def nu0(self) -> float:
        return 4.0 / 3.0 * self.mu0 + self.eta0

    @property
    def nu1(self) -> float:
        return 4.0 / 3.0 * self.mu1 + self.eta1

    def shear_viscosity(self, theta):
        return self.mu0 + self.mu1 * np.asarray(theta, dtype=float)

    def bulk_viscosity(self, theta):
        return self.eta0 + self.eta1 * np.asarray(theta, dtype=float)

    def conductivity(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.kappa0 + self.kappa2 * theta**2 + self.kappa3 * theta**3

    # -- state functions ------------------------------------------------------

    def scaled_density(self, rho, theta):
        """Z = rho / theta^(3/2), the argument of the pressure closure."""
        rho, theta = _check_positive_state(rho, theta)
        return rho * theta**-1.5

    def pressure(self, rho, theta):
        """p = theta^(5/2) P(Z) + (a/3) theta^4, strictly positive."""
        rho, theta = _check_positive_state(rho, theta)
        z = rho * theta**-1.5
        return theta**2.5 * self.closure.P(z) + (self.a / 3.0) * theta**4

    def energy_density(self, rho, theta):
        """rho * e = (3/2) theta^(5/2) P(Z) + a theta^4."""
        rho, theta = _check_positive_state(rho, theta)
        z = rho * theta**-1.5
        return 1.5 * theta**2.5 * self.closure.P(z) + self.a * theta**4

    def internal_energy(self, rho, theta):
        """Specific internal energy e(rho, theta)."""
        return self.energy_density(rho, theta) / np.asarray(rho, dtype=float)

    def entropy(self, rho, theta):
        """Specific entropy s = S(Z) + S0 + (4a/3) theta^3 / rho."""
        rho, theta = _check_positive_state(rho, theta)
        z = rho * theta**-1.5
        return self.closure.S(z) + self.S0 + (4.0 * self.a / 3.0) * theta**3 / rho

    def dp_drho(self, rho, theta):
        """Closed-form pressure derivative; positive by thermodynamic stability."""
        rho, theta = _check_positive_state(rho, theta)
        z = rho * theta**-1.5
        return theta * self.closure.dP(z)

    def de_dtheta(self, rho, theta):
        """Specific heat at constant volume, positive by construction."""
        rho, theta = _check_positive_state(rho, theta)
        z = rho * theta**-1.5
        gap = (5.0 / 3.0) * self.closure.P(z) - z * self.closure.dP(z)
        return 2.25 * theta**1.5 / rho * gap + 4.0 * self.a * theta**3 / rho

    def entropy_slope(self, z):
        """S'(Z) = -(3/2) (5/3 P(Z) - Z P'(Z)) / Z^2 < 0."""
        z = np.asarray(z, dtype=float)
        gap = (5.0 / 3.0) * self.closure.P(z) - z * self.closure.dP(z)
        return -1.5 * gap / z**2

    def sound_speed(self, rho, theta):
        return np.sqrt(self.dp_drho(rho, theta))

    def cold_energy_density(self, rho):
        """Zero-temperature limit of rho*e at fixed rho: (3/2) P_inf rho^(5/3)."""
        rho = np.asarray(rho, dtype=float)
        return 1.5 * self.closure.P_inf * rho ** (5.0 / 3.0)

    # -- fluxes ---------------------------------------------------------------

    def stress_tensor(self, theta, grad_u):
        """Newtonian stress mu(theta)(G + G^T - 2/3 tr G I) + eta(theta) tr G I.

        ``grad_u`` may carry leading batch axes; the last two axes are the
        3x3 velocity gradient.
        """
        grad_u = np.asarray(grad_u, dtype=float)
        if grad_u.shape[-2:] != (3, 3):
            raise ValueError("grad_u must have trailing shape (3, 3)")
        if not np.all(np.isfinite(grad_u)):
            raise ValueError("grad_u must be finite")
        theta = np.asarray(theta, dtype=float)
        if np.any(theta <= 0.0):
            raise ValueError("temperature must be strictly positive")
        sym = grad_u + np.swapaxes(grad_u, -1, -2)
        div_term = np.trace(grad_u, axis1=-2, axis2=-1)[..., None, None] * np.eye(3)
        mu = np.asarray(self.shear_viscosity(theta))
        eta = np.asarray(self.bulk_viscosity(theta))
        if mu.ndim:
            mu = mu[..., None, None]
            eta = eta[..., None, None]
        return mu * (sym - (2.0 / 3.0) * div_term) + eta * div_term

    def heat_flux(self, theta, grad_theta):
        """Fourier flux -kappa(theta) grad_theta; antiparallel to grad_theta."""
        grad_theta = np.asarray(grad_theta, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if np.any(theta <= 0.0):
            raise ValueError("temperature must be strictly positive")
        kappa = np.asarray(self.conductivity(theta))
        if kappa.ndim:
            kappa = kappa[..., None]
        return -kappa * grad_theta

    def stress_1d(self, theta, du_dy):
        """(nu0 + nu1 theta) du/dy with nu_i = 4/3 mu_i + eta_i."""
        theta = np.asarray(theta, dtype=float)
        if np.any(theta <= 0.0):
            raise ValueError("temperature must be strictly positive")
        return (self.nu0 + self.nu1 * theta) * np.asarray(du_dy, dtype=float)

    def heat_flux_1d(self, theta, dtheta_dy):
        """-kappa(theta) dtheta/dy."""
        theta = np.asarray(theta, dtype=float)
        if np.any(theta <= 0.0):
            raise ValueError("temperature must be strictly positive")
        return -self.conductivity(theta) * np.asarray(dtheta_dy, dtype=float)

    # -- self-verification ----------------------------------------------------

    def gibbs_residual(self, rho, theta, step=1e-5):
        """Finite-difference residual of theta ds = de + p d(1/rho).

        ``step`` is relative; central differences in each of the two state
        directions.  Returns the elementwise maximum of the two residual
        magnitudes, O(step^2) for a compatible closure.
        """
        rho, theta = _check_positive_state(rho, theta)
        if not 0.0 < step < 0.5:
            raise ValueError("relative step must lie in (0, 0.5)")
        h_r = step * rho
        h_t = step * theta

        ds_dt = (self.entropy(rho, theta + h_t) - self.entropy(rho, theta - h_t)) / (2.0 * h_t)
        de_dt = (self.internal_energy(rho, theta + h_t)
                 - self.internal_energy(rho, theta - h_t)) / (2.0 * h_t)
        res_theta = np.abs(theta * ds_dt - de_dt)

        ds_dr = (self.entropy(rho + h_r, theta) - self.entropy(rho - h_r, theta)) / (2.0 * h_r)
        de_dr = (self.internal_energy(rho + h_r, theta)
                 - self.internal_energy(rho - h_r, theta)) / (2.0 * h_r)
        dinv_dr = (1.0 / (rho + h_r) - 1.0 / (rho - h_r)) / (2.0 * h_r)
        res_rho = np.abs(theta * ds_dr - de_dr - self.pressure(rho, theta) * dinv_dr)

        return np.maximum(res_theta, res_rho)

    def temperature_from_energy_density(self, rho, e_density, theta_guess=None,
                                        tol=1e-12, max_iter=200):
        """Invert rho*e(rho, .) for the temperature.

        The map theta -> rho*e is strictly increasing with infimum
        ``cold_energy_density(rho)``, so the root is unique whenever it
        exists.  Safeguarded Newton iteration inside the bracket
        (0, (e_density/a)^(1/4)]; raises ThetaRecoveryError when the energy
        sits at or below the zero-temperature limit.
        """
        rho = np.asarray(rho, dtype=float)
        e_density = np.asarray(e_density, dtype=float)
        rho, e_density = np.broadcast_arrays(rho, e_density)
        if np.any(rho <= 0.0):
            raise ValueError("density must be strictly positive")
        if np.any(~np.isfinite(e_density)):
            raise ThetaRecoveryError("internal energy is not finite")
        cold = self.cold_energy_density(rho)
        if np.any(e_density <= cold):
            raise ThetaRecoveryError(
                "internal energy at or below the zero-temperature limit; "
                "no positive temperature exists"
            )
        hi = (e_density / self.a) ** 0.25 * (1.0 + 1e-12)
        lo = np.zeros_like(hi)
        if theta_guess is None:
            x = 0.5 * hi
        else:
            x = np.clip(np.broadcast_to(np.asarray(theta_guess, dtype=float), hi.shape),
                        1e-300, hi).copy()
        for _ in range(max_iter):
            f = self.energy_density(rho, x) - e_density
            hi = np.where(f > 0.0, x, hi)
            lo = np.where(f <= 0.0, x, lo)
            fp = rho * self.de_dtheta(rho, x)
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = x - f / fp
            # keep iterates inside the closed bracket; an exact landing on an
            # endpoint is a converged root, not a violation
            fallback = ~np.isfinite(xn) | (xn < lo) | (xn > hi) | (xn <= 0.0)
            xn = np.where(fallback, 0.5 * (lo + hi), xn)
            done = np.abs(xn - x) <= tol * np.maximum(1.0, xn)
            x = xn
            if np.all(done):
                return x
        raise ThetaRecoveryError("temperature iteration did not converge")

    @classmethod
    def from_mapping(cls, section: Mapping[str, str]) -> "ThermoModel":
        """Build a model from a [thermo] key/value section (strings allowed)."""
        known = {"a", "mu0", "mu1", "eta0", "eta1", "kappa0", "kappa2", "kappa3",
                 "P_closure", "S0"}
        unknown = set(section) - known
        if unknown:
            raise ValueError(f"unknown thermo keys: {sorted(unknown)}")
        kwargs = {}
        for key, raw in section.items():
            kwargs[key] = raw if key == "P_closure" else float(raw)
        return cls(**kwargs)

    def with_coefficients(self, **kwargs) -> "ThermoModel":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class StructureReport:
    """Sampled verification of the structural hypotheses on P and S."""

    p_at_zero: float
    min_dp: float
    min_gap_over_z: float
    max_gap_over_z: float
    p_over_z53_monotone: bool
    p_inf_estimate: float
    max_entropy_slope: float
    ok: bool


def structural_report(model: ThermoModel, z_max: float = 1e3, n: int = 400) -> StructureReport:
    """Sample the closure on (0, z_max] and check its structural properties.

    Checks P(0) = 0, P' > 0, positivity and boundedness of
    (5/3 P - Z P')/Z, monotone decay of P(Z)/Z^(5/3) towards P_inf, and
    S' < 0.  The recorded bound on the gap ratio is closure specific.
    """
    z = np.geomspace(1e-6, z_max, n)
    p0 = float(model.closure.P(0.0))
    dp = model.closure.dP(np.concatenate(([0.0], z)))
    gap_over_z = ((5.0 / 3.0) * model.closure.P(z) - z * model.closure.dP(z)) / z
    ratio = model.closure.P(z) / z ** (5.0 / 3.0)
    monotone = bool(np.all(np.diff(ratio) <= 1e-12 * np.maximum(1.0, ratio[:-1])))
    slope = model.entropy_slope(z)
    ok = (
        abs(p0) < 1e-12
        and np.all(dp > 0.0)
        and np.all(gap_over_z > 0.0)
        and np.all(np.isfinite(gap_over_z))
        and monotone
        and ratio[-1] > 0.0
        and np.all(slope < 0.0)
    )
    return StructureReport(
        p_at_zero=p0,
        min_dp=float(np.min(dp)),
        min_gap_over_z=float(np.min(gap_over_z)),
        max_gap_over_z=float(np.max(gap_over_z)),
        p_over_z53_monotone=monotone,
        p_inf_estimate=float(ratio[-1]),
        max_entropy_slope=float(np.max(slope)),
        ok=bool(ok),
    )
