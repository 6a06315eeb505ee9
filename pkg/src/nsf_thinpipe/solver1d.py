"""Explicit conservative solver for the 1D heat-conducting compressible system.

The state lives at the centers of n uniform cells on (0, 1).  The solver
advances the conservative variables (rho, rho u, total energy) with
second-order central fluxes and a two-stage second-order time integrator;
temperature is recovered from the internal energy by monotone inversion of
the equation of state.  Walls are impermeable and insulated: ghost cells
mirror density and temperature evenly and the velocity oddly, which makes
the boundary mass and energy fluxes vanish identically, so total mass and
energy are conserved to rounding.

Entropy is a derived diagnostic: the solver reports the pointwise production
rate (a positive-weighted sum of squares, hence nonnegative) and can measure
the residual of the entropy balance on a stored trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .thermo import ThermoModel, ThetaRecoveryError

__all__ = [
    "CFLError",
    "PositivityError",
    "State1D",
    "BalanceDiagnostics1D",
    "Trajectory1D",
    "init_smooth",
    "cfl_dt",
    "step",
    "integrate",
    "entropy_production",
    "entropy_balance_residual",
]

_BC_TOL = 1e-12


class CFLError(RuntimeError):
    """Requested time step exceeds the stability limit."""


class PositivityError(RuntimeError):
    """Density or temperature left the admissible range; step rejected."""


@dataclass(frozen=True)
class State1D:
    """Cell-centered samples of (rho, u, theta) on (0, 1) at time t."""

    n: int
    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("rho", "u", "theta"):
            arr = getattr(self, name)
            if arr.shape != (self.n,):
                raise ValueError(f"{name} must have shape ({self.n},)")
        if np.any(self.rho <= 0.0) or np.any(self.theta <= 0.0):
            raise PositivityError("density and temperature must stay strictly positive")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h

    def conservative(self, model: ThermoModel):
        """Conservative variables (rho, momentum, total energy density)."""
        momentum = self.rho * self.u
        energy = 0.5 * self.rho * self.u**2 + model.energy_density(self.rho, self.theta)
        return self.rho.copy(), momentum, energy


@dataclass(frozen=True)
class BalanceDiagnostics1D:
    """Integrals tracked along a run; production must stay nonnegative."""

    mass: float
    energy: float
    entropy_production_min: float


@dataclass
class Trajectory1D:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)


def init_smooth(n: int, rho0: Callable, u0: Callable, theta0: Callable) -> State1D:
    """Sample smooth initial profiles onto n cells after checking admissibility.

    The velocity profile must vanish at both endpoints and the density and
    temperature profiles must be strictly positive on the closed interval.
    """
    if n < 4:
        raise ValueError("need at least 4 cells")
    if abs(float(u0(0.0))) > _BC_TOL or abs(float(u0(1.0))) > _BC_TOL:
        raise ValueError("initial velocity must vanish at y = 0 and y = 1")
    nodes = np.linspace(0.0, 1.0, 4 * n + 1)
    for name, fn in (("density", rho0), ("temperature", theta0)):
        if np.any(np.asarray(fn(nodes), dtype=float) <= 0.0):
            raise ValueError(f"initial {name} must be strictly positive")
    y = (np.arange(n) + 0.5) / n
    return State1D(
        n=n,
        rho=np.asarray(rho0(y), dtype=float) * np.ones(n),
        u=np.asarray(u0(y), dtype=float) * np.ones(n),
        theta=np.asarray(theta0(y), dtype=float) * np.ones(n),
    )


# -- ghost-cell extensions ---------------------------------------------------


def _pad_even(a: np.ndarray) -> np.ndarray:
    return np.concatenate(([a[0]], a, [a[-1]]))


def _pad_odd(a: np.ndarray) -> np.ndarray:
    return np.concatenate(([-a[0]], a, [-a[-1]]))


# -- stability limit -----------------------------------------------------------


def cfl_dt(model: ThermoModel, state: State1D, safety: float = 0.4) -> float:
    """Explicit stability limit: advective plus viscous and conductive bounds."""
    h = state.h
    c_s = model.sound_speed(state.rho, state.theta)
    adv = h / float(np.max(np.abs(state.u) + c_s))
    rho_min = float(np.min(state.rho))
    nu_max = model.nu0 + model.nu1 * float(np.max(state.theta))
    visc = h**2 * rho_min / (2.0 * nu_max)
    cv_min = float(np.min(model.de_dtheta(state.rho, state.theta)))
    kappa_max = float(np.max(model.conductivity(state.theta)))
    cond = h**2 * rho_min * cv_min / (2.0 * kappa_max)
    return safety * min(adv, visc, cond)


# -- spatial operator ----------------------------------------------------------


def _rhs(model: ThermoModel, state: State1D, sources=None):
    """Flux divergence of the conservative system, face-by-face.

    Boundary faces see the mirrored ghost values, which makes the mass and
    total-energy fluxes there vanish exactly.
    """
    h = state.h
    re = _pad_even(state.rho)
    ue = _pad_odd(state.u)
    te = _pad_even(state.theta)

    me = re * ue
    pe = model.pressure(re, te)
    Ee = 0.5 * re * ue**2 + model.energy_density(re, te)

    flux_mass = 0.5 * (me[:-1] + me[1:])
    adv_mom = me * ue + pe
    flux_mom = 0.5 * (adv_mom[:-1] + adv_mom[1:])
    adv_energy = (Ee + pe) * ue
    flux_energy = 0.5 * (adv_energy[:-1] + adv_energy[1:])

    theta_f = 0.5 * (te[:-1] + te[1:])
    du_f = (ue[1:] - ue[:-1]) / h
    stress_f = model.stress_1d(theta_f, du_f)
    u_f = 0.5 * (ue[:-1] + ue[1:])
    q_f = model.heat_flux_1d(theta_f, (te[1:] - te[:-1]) / h)

    flux_mom = flux_mom - stress_f
    flux_energy = flux_energy - stress_f * u_f + q_f

    d_rho = -np.diff(flux_mass) / h
    d_mom = -np.diff(flux_mom) / h
    d_energy = -np.diff(flux_energy) / h

    if sources is not None:
        s_mass, s_mom, s_energy = sources(state.t, state.y)
        d_rho = d_rho + s_mass
        d_mom = d_mom + s_mom
        d_energy = d_energy + s_energy
    return d_rho, d_mom, d_energy


def _primitives(model: ThermoModel, rho, momentum, energy, theta_guess) -> State1D:
    if np.any(rho <= 0.0) or np.any(~np.isfinite(rho)):
        raise PositivityError("density lost positivity; step rejected")
    u = momentum / rho
    e_density = energy - 0.5 * rho * u**2
    try:
        # tighter than the 1e-12 contract so the recovery noise stays well
        # below the global energy-drift budget
        theta = model.temperature_from_energy_density(rho, e_density, theta_guess=theta_guess,
                                                      tol=1e-14)
    except ThetaRecoveryError as exc:
        raise PositivityError(f"temperature recovery failed; step rejected ({exc})") from exc
    return rho, u, theta


def step(model: ThermoModel, state: State1D, dt: float, sources=None) -> State1D:
    """One two-stage second-order step of size dt; dt must respect the CFL limit."""
    limit = cfl_dt(model, state)
    if dt > limit * (1.0 + 1e-9):
        raise CFLError(f"dt = {dt:.3e} exceeds stability limit {limit:.3e}")

    rho0, mom0, en0 = state.conservative(model)

    d1 = _rhs(model, state, sources)
    rho1, u1, theta1 = _primitives(
        model, rho0 + dt * d1[0], mom0 + dt * d1[1], en0 + dt * d1[2], state.theta
    )
    stage1 = State1D(n=state.n, rho=rho1, u=u1, theta=theta1, t=state.t + dt)

    d2 = _rhs(model, stage1, sources)
    rho2, u2, theta2 = _primitives(
        model,
        rho0 + 0.5 * dt * (d1[0] + d2[0]),
        mom0 + 0.5 * dt * (d1[1] + d2[1]),
        en0 + 0.5 * dt * (d1[2] + d2[2]),
        stage1.theta,
    )
    return State1D(n=state.n, rho=rho2, u=u2, theta=theta2, t=state.t + dt)


# -- diagnostics ----------------------------------------------------------------


def entropy_production(model: ThermoModel, state: State1D) -> np.ndarray:
    """Pointwise production rate (stress work + conductive term) / theta.

    A sum of squares with positive coefficients, hence nonnegative for any
    admissible state.
    """
    h = state.h
    ue = _pad_odd(state.u)
    te = _pad_even(state.theta)
    du = (ue[2:] - ue[:-2]) / (2.0 * h)
    dtheta = (te[2:] - te[:-2]) / (2.0 * h)
    theta = state.theta
    nu = model.nu0 + model.nu1 * theta
    return (nu * du**2 + model.conductivity(theta) * dtheta**2 / theta) / theta


def diagnostics(model: ThermoModel, state: State1D) -> BalanceDiagnostics1D:
    _, _, energy = state.conservative(model)
    return BalanceDiagnostics1D(
        mass=float(np.sum(state.rho) * state.h),
        energy=float(np.sum(energy) * state.h),
        entropy_production_min=float(np.min(entropy_production(model, state))),
    )


def integrate(model: ThermoModel, state: State1D, t_final: float, n_outputs: int = 50,
              dt: Optional[float] = None, sources=None) -> Trajectory1D:
    """Advance to t_final, returning snapshots at n_outputs equispaced times.

    Snapshots include the initial state.  ``dt`` fixes the step size (it is
    still validated against the CFL limit each step); by default the limit
    is recomputed every step.  Positivity loss aborts the run by raising.
    """
    if t_final < 0.0:
        raise ValueError("t_final must be nonnegative")
    traj = Trajectory1D()
    traj.times.append(state.t)
    traj.states.append(state)
    traj.diagnostics.append(diagnostics(model, state))
    if t_final == 0.0 or n_outputs == 0:
        return traj

    t0 = state.t
    outputs = t0 + t_final * np.arange(1, n_outputs + 1) / n_outputs
    for t_out in outputs:
        while state.t < t_out - 1e-13:
            dt_step = min(dt if dt is not None else cfl_dt(model, state), t_out - state.t)
            state = step(model, state, dt_step, sources)
        state = replace(state, t=t_out)
        traj.times.append(state.t)
        traj.states.append(state)
        traj.diagnostics.append(diagnostics(model, state))
    return traj


def entropy_balance_residual(model: ThermoModel, trajectory: Trajectory1D) -> float:
    """Max residual of the discrete entropy balance over interior snapshots.

    The trajectory must hold at least three equispaced snapshots.  The
    residual uses centered time differences of rho s, central divergence of
    the entropy and conductive fluxes, and subtracts the production rate; it
    decays at second order under joint space/time refinement because the
    solver evolves energy, not entropy.
    """
    times = np.asarray(trajectory.times, dtype=float)
    if times.size < 3:
        raise ValueError("need at least three snapshots")
    dt_out = np.diff(times)
    if np.any(np.abs(dt_out - dt_out[0]) > 1e-9 * max(dt_out[0], 1e-30)):
        raise ValueError("snapshots must be equispaced in time")

    h = trajectory.states[0].h
    worst = 0.0
    for k in range(1, times.size - 1):
        prev_s, cur, next_s = (trajectory.states[k - 1], trajectory.states[k],
                               trajectory.states[k + 1])
        rs_prev = prev_s.rho * model.entropy(prev_s.rho, prev_s.theta)
        rs_next = next_s.rho * model.entropy(next_s.rho, next_s.theta)
        ddt = (rs_next - rs_prev) / (times[k + 1] - times[k - 1])

        rs = cur.rho * model.entropy(cur.rho, cur.theta)
        adv = _pad_odd(rs * cur.u)

        te = _pad_even(cur.theta)
        dtheta = (te[2:] - te[:-2]) / (2.0 * h)
        q_over_theta = model.heat_flux_1d(cur.theta, dtheta) / cur.theta
        cond = _pad_odd(q_over_theta)

        div = (adv[2:] - adv[:-2]) / (2.0 * h) + (cond[2:] - cond[:-2]) / (2.0 * h)
        residual = ddt + div - entropy_production(model, cur)
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst
