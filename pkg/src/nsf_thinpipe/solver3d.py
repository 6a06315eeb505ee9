"""Explicit conservative solver on the thin box (eps Q) x (0, 1).

Same scheme family as the 1D solver: cell-centered conservative variables,
second-order central fluxes, two-stage second-order time stepping, and
temperature recovery by monotone equation-of-state inversion.  Walls carry
complete-slip and insulation conditions, realized through one layer of ghost
cells that mirror density, temperature and tangential velocity evenly and
the normal velocity oddly.  With that extension the normal velocity, the
tangential viscous traction and the normal heat flux vanish on every face,
boundary mass/energy fluxes cancel identically, and a transversally constant
state evolves exactly like the corresponding 1D run.

The transverse grid is generated in scaled cross-section coordinates, so one
resolution policy serves every thickness.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .solver1d import CFLError, PositivityError, State1D
from .thermo import ThermoModel, ThetaRecoveryError

__all__ = [
    "Domain3D",
    "State3D",
    "Trajectory3D",
    "TransversePerturbation",
    "DissipationLedger",
    "build_domain",
    "default_perturbation",
    "lift_initial_data",
    "cfl_dt_3d",
    "step3d",
    "integrate3d",
    "entropy_production_3d",
    "dissipation_ledger",
    "write_snapshot_csv",
    "write_snapshot_bin",
    "read_snapshot_bin",
]

_BC_TOL = 1e-12
SNAPSHOT_MAGIC = b"NSF3"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class Domain3D:
    """Uniform cell-centered grid on (eps Q) x (0, 1)."""

    epsilon: float
    q_bounds: tuple  # ((a, b), (c, d)) in scaled cross-section coordinates
    dims: tuple      # cells per axis (n1, n2, n3)

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        (a, b), (c, d) = self.q_bounds
        if not (b > a and d > c):
            raise ValueError("degenerate cross-section rectangle")
        if len(self.dims) != 3 or any(n < 2 for n in self.dims):
            raise ValueError("need at least 2 cells per axis")

    @property
    def h1(self) -> float:
        (a, b), _ = self.q_bounds
        return self.epsilon * (b - a) / self.dims[0]

    @property
    def h2(self) -> float:
        _, (c, d) = self.q_bounds
        return self.epsilon * (d - c) / self.dims[1]

    @property
    def h3(self) -> float:
        return 1.0 / self.dims[2]

    @property
    def spacings(self) -> tuple:
        return (self.h1, self.h2, self.h3)

    @property
    def cell_volume(self) -> float:
        return self.h1 * self.h2 * self.h3

    @property
    def cross_section_measure(self) -> float:
        """|Q_eps| = eps^2 |Q|, the normalization of every scaled norm."""
        (a, b), (c, d) = self.q_bounds
        return self.epsilon**2 * (b - a) * (d - c)

    def scaled_transverse_centers(self):
        """Cell centers of the cross section in scaled (epsilon-free) coordinates."""
        (a, b), (c, d) = self.q_bounds
        n1, n2, _ = self.dims
        xi1 = a + (np.arange(n1) + 0.5) * (b - a) / n1
        xi2 = c + (np.arange(n2) + 0.5) * (d - c) / n2
        return xi1, xi2

    @property
    def axial_centers(self) -> np.ndarray:
        n3 = self.dims[2]
        return (np.arange(n3) + 0.5) / n3

    def physical_transverse_centers(self):
        xi1, xi2 = self.scaled_transverse_centers()
        return self.epsilon * xi1, self.epsilon * xi2


def build_domain(q_bounds, epsilon: float, dims) -> Domain3D:
    """Grid descriptor with transverse spacing proportional to epsilon."""
    return Domain3D(epsilon=float(epsilon), q_bounds=tuple(map(tuple, q_bounds)),
                    dims=tuple(dims))


@dataclass(frozen=True)
class State3D:
    """Cell samples of (rho, u1, u2, u3, theta) on a thin box at time t."""

    domain: Domain3D
    rho: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    theta: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        shape = tuple(self.domain.dims)
        for name in ("rho", "u1", "u2", "u3", "theta"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}")
        if np.any(self.rho <= 0.0) or np.any(self.theta <= 0.0):
            raise PositivityError("density and temperature must stay strictly positive")

    def velocity(self) -> tuple:
        return (self.u1, self.u2, self.u3)

    def conservative(self, model: ThermoModel):
        ke = 0.5 * self.rho * (self.u1**2 + self.u2**2 + self.u3**2)
        energy = ke + model.energy_density(self.rho, self.theta)
        return (self.rho.copy(), self.rho * self.u1, self.rho * self.u2,
                self.rho * self.u3, energy)


# -- initial data ------------------------------------------------------------


@dataclass(frozen=True)
class TransversePerturbation:
    """Multiplicative/additive perturbation applied when lifting 1D data.

    ``phi`` multiplies the density and temperature profiles as (1 + delta
    phi); ``psi1/psi2/psi3`` are added (times delta) to the velocity.  All
    callables take scaled cross-section coordinates and the axial coordinate
    (xi1, xi2, y).  The normal trace of the velocity perturbation must
    vanish on the corresponding faces.
    """

    delta: float
    phi: Optional[Callable] = None
    psi1: Optional[Callable] = None
    psi2: Optional[Callable] = None
    psi3: Optional[Callable] = None

    def __post_init__(self):
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")


def default_perturbation(delta: float, mode1: int = 1, mode2: int = 0,
                         q_bounds=((0.0, 1.0), (0.0, 1.0))) -> TransversePerturbation:
    """Trigonometric perturbation family with exact zero transverse mean.

    The scalar factor carries a full-period cosine across the cross section
    (mode counts ``mode1``/``mode2``), so its discrete cross-section average
    vanishes to rounding; the velocity perturbation components vanish on the
    faces they are normal to.
    """
    if mode1 < 1 and mode2 < 1:
        raise ValueError("need at least one transverse mode for a mean-zero perturbation")
    (a, b), (c, d) = q_bounds
    m1 = max(mode1, 1)
    m2 = max(mode2, 1)

    def s1(xi1):
        return (xi1 - a) / (b - a)

    def s2(xi2):
        return (xi2 - c) / (d - c)

    def phi(xi1, xi2, y):
        val = np.sin(np.pi * y)
        if mode1 >= 1:
            val = val * np.cos(2.0 * np.pi * mode1 * s1(xi1))
        if mode2 >= 1:
            val = val * np.cos(2.0 * np.pi * mode2 * s2(xi2))
        return val

    def psi1(xi1, xi2, y):
        return np.sin(np.pi * m1 * s1(xi1)) * np.cos(2.0 * np.pi * m2 * s2(xi2)) * np.sin(np.pi * y)

    def psi2(xi1, xi2, y):
        return np.cos(2.0 * np.pi * m1 * s1(xi1)) * np.sin(np.pi * m2 * s2(xi2)) * np.sin(np.pi * y)

    def psi3(xi1, xi2, y):
        return np.cos(2.0 * np.pi * m1 * s1(xi1)) * np.sin(np.pi * y)

    return TransversePerturbation(delta=delta, phi=phi, psi1=psi1, psi2=psi2, psi3=psi3)


def _check_normal_trace(perturbation: TransversePerturbation, domain: Domain3D):
    (a, b), (c, d) = domain.q_bounds
    xi1, xi2 = domain.scaled_transverse_centers()
    y = domain.axial_centers
    probes = []
    if perturbation.psi1 is not None:
        g2, gy = np.meshgrid(xi2, y, indexing="ij")
        probes += [perturbation.psi1(np.full_like(g2, edge), g2, gy) for edge in (a, b)]
    if perturbation.psi2 is not None:
        g1, gy = np.meshgrid(xi1, y, indexing="ij")
        probes += [perturbation.psi2(g1, np.full_like(g1, edge), gy) for edge in (c, d)]
    if perturbation.psi3 is not None:
        g1, g2 = np.meshgrid(xi1, xi2, indexing="ij")
        probes += [perturbation.psi3(g1, g2, np.full_like(g1, edge)) for edge in (0.0, 1.0)]
    worst = max((float(np.abs(p).max()) for p in probes), default=0.0)
    if worst > _BC_TOL:
        raise ValueError(
            f"velocity perturbation has normal trace {worst:.3e} on a face; "
            "complete slip requires it to vanish"
        )


def lift_initial_data(domain: Domain3D, state1d: State1D,
                      perturbation: Optional[TransversePerturbation] = None) -> State3D:
    """Extend a 1D profile to the thin box, optionally with a transverse perturbation.

    The axial grid must refine the 1D grid.  With a mean-zero perturbation
    the cross-section averages of the lifted data reproduce the 1D data up
    to quadrature rounding; with ``delta = 0`` the lift is exact.
    """
    n1, n2, n3 = domain.dims
    if n3 % state1d.n != 0:
        raise ValueError(f"axial grid of {n3} cells does not refine the 1D grid of {state1d.n}")
    rep = n3 // state1d.n
    rho1 = np.repeat(state1d.rho, rep)[None, None, :]
    th1 = np.repeat(state1d.theta, rep)[None, None, :]
    u1d = np.repeat(state1d.u, rep)[None, None, :]

    ones = np.ones((n1, n2, n3))
    if perturbation is None or perturbation.delta == 0.0:
        return State3D(domain=domain, rho=rho1 * ones, u1=np.zeros((n1, n2, n3)),
                       u2=np.zeros((n1, n2, n3)), u3=u1d * ones, theta=th1 * ones,
                       t=state1d.t)

    _check_normal_trace(perturbation, domain)
    xi1, xi2 = domain.scaled_transverse_centers()
    y = domain.axial_centers
    g1, g2, gy = np.meshgrid(xi1, xi2, y, indexing="ij")
    delta = perturbation.delta

    def bump(fn):
        return delta * fn(g1, g2, gy) if fn is not None else 0.0

    factor = 1.0 + bump(perturbation.phi)
    return State3D(
        domain=domain,
        rho=rho1 * factor,
        u1=np.zeros((n1, n2, n3)) + bump(perturbation.psi1),
        u2=np.zeros((n1, n2, n3)) + bump(perturbation.psi2),
        u3=u1d * ones + bump(perturbation.psi3),
        theta=th1 * factor,
        t=state1d.t,
    )


# -- mirrored-extension difference helpers -------------------------------------
#
# One ghost layer per face with even mirroring for density, temperature and
# tangential velocity, odd mirroring for the normal velocity.  The helpers
# below realize the resulting stencils directly on views, without building
# the extended arrays.


def _take(a: np.ndarray, axis: int, sl) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = sl
    return a[tuple(idx)]


def _cell_derivative(a: np.ndarray, axis: int, h: float, sign: float) -> np.ndarray:
    """Central derivative at cells; ghosts mirror with the given sign."""
    out = np.empty_like(a)
    inv = 1.0 / (2.0 * h)
    _take(out, axis, slice(1, -1))[...] = (
        _take(a, axis, slice(2, None)) - _take(a, axis, slice(None, -2))
    ) * inv
    first = _take(a, axis, 0)
    second = _take(a, axis, 1)
    _take(out, axis, 0)[...] = (second - sign * first) * inv
    last = _take(a, axis, -1)
    before = _take(a, axis, -2)
    _take(out, axis, -1)[...] = (sign * last - before) * inv
    return out


def _interior_avg(a: np.ndarray, axis: int) -> np.ndarray:
    return 0.5 * (_take(a, axis, slice(None, -1)) + _take(a, axis, slice(1, None)))


def _interior_diff(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (_take(a, axis, slice(1, None)) - _take(a, axis, slice(None, -1))) / h


def _velocity_gradients(state: State3D) -> list:
    """Cell-centered D[i][j] = d u_i / d x_j with parity-consistent ghosts."""
    h = state.domain.spacings
    u = state.velocity()
    return [
        [_cell_derivative(u[i], j, h[j], -1.0 if i == j else 1.0) for j in range(3)]
        for i in range(3)
    ]


# -- stability limit ------------------------------------------------------------


def cfl_dt_3d(model: ThermoModel, state: State3D, safety: float = 0.4) -> float:
    h = state.domain.spacings
    c_max = float(np.max(model.sound_speed(state.rho, state.theta)))
    adv_rate = sum((float(np.max(np.abs(ui))) + c_max) / hi
                   for ui, hi in zip(state.velocity(), h))
    rho_min = float(np.min(state.rho))
    nu_max = model.nu0 + model.nu1 * float(np.max(state.theta))
    inv_h2 = sum(1.0 / hi**2 for hi in h)
    visc_rate = 2.0 * nu_max * inv_h2 / rho_min
    cv_min = float(np.min(model.de_dtheta(state.rho, state.theta)))
    kappa_max = float(np.max(model.conductivity(state.theta)))
    cond_rate = 2.0 * kappa_max * inv_h2 / (rho_min * cv_min)
    return safety / max(adv_rate, visc_rate, cond_rate)


# -- spatial operator ------------------------------------------------------------


def _rhs3d(model: ThermoModel, state: State3D):
    """Flux divergence of the conservative system.

    Interior faces average the two adjacent cells; boundary faces use the
    mirrored ghost values in closed form, under which the mass flux, the
    tangential momentum flux, and the total energy flux vanish exactly and
    the normal momentum flux reduces to pressure plus normal viscous stress.
    """
    h = state.domain.spacings
    dims = state.rho.shape
    rho, theta = state.rho, state.theta
    u = state.velocity()
    m = [rho * u[i] for i in range(3)]
    p = model.pressure(rho, theta)
    enthalpy = 0.5 * rho * (u[0] ** 2 + u[1] ** 2 + u[2] ** 2) \
        + model.energy_density(rho, theta) + p

    grads = _velocity_gradients(state)
    d_rho = np.zeros_like(rho)
    d_mom = [np.zeros_like(rho) for _ in range(3)]
    d_energy = np.zeros_like(rho)

    for d in range(3):
        face_shape = list(dims)
        face_shape[d] += 1
        interior = [slice(None)] * 3
        interior[d] = slice(1, -1)
        interior = tuple(interior)
        first = tuple(0 if k == d else slice(None) for k in range(3))
        last = tuple(-1 if k == d else slice(None) for k in range(3))

        theta_f = _interior_avg(theta, d)
        mu_f = model.shear_viscosity(theta_f)
        eta_f = model.bulk_viscosity(theta_f)

        dn = [_interior_diff(u[i], d, h[d]) for i in range(3)]
        div_f = dn[d] + sum(_interior_avg(grads[j][j], d) for j in range(3) if j != d)

        flux_mass = np.zeros(face_shape)
        flux_mass[interior] = _interior_avg(m[d], d)
        d_rho -= np.diff(flux_mass, axis=d) / h[d]

        flux_energy = np.zeros(face_shape)
        adv_energy = _interior_avg(enthalpy * u[d], d)
        visc_work = 0.0
        for i in range(3):
            flux_mom = np.zeros(face_shape)
            if i == d:
                stress = (2.0 * mu_f) * dn[d] + (eta_f - (2.0 / 3.0) * mu_f) * div_f
                flux_mom[interior] = _interior_avg(m[d] * u[d] + p, d) - stress
                # boundary: advective part reduces to rho u_d^2 + p of the wall
                # cell, normal stress uses the odd mirror of u_d
                for side, cells, sgn in ((first, first, 1.0), (last, last, -1.0)):
                    theta_b = theta[cells]
                    mu_b = model.shear_viscosity(theta_b)
                    eta_b = model.bulk_viscosity(theta_b)
                    dn_b = sgn * 2.0 * u[d][cells] / h[d]
                    div_b = dn_b + sum(grads[j][j][cells] for j in range(3) if j != d)
                    stress_b = 2.0 * mu_b * dn_b + (eta_b - (2.0 / 3.0) * mu_b) * div_b
                    flux_mom[side] = rho[cells] * u[d][cells] ** 2 + p[cells] - stress_b
            else:
                stress = mu_f * (dn[i] + _interior_avg(grads[d][i], d))
                flux_mom[interior] = _interior_avg(m[i] * u[d], d) - stress
                # boundary faces carry no tangential momentum flux
            d_mom[i] -= np.diff(flux_mom, axis=d) / h[d]
            visc_work = visc_work + stress * _interior_avg(u[i], d)

        q_f = -model.conductivity(theta_f) * _interior_diff(theta, d, h[d])
        flux_energy[interior] = adv_energy - visc_work + q_f
        d_energy -= np.diff(flux_energy, axis=d) / h[d]

    return d_rho, d_mom[0], d_mom[1], d_mom[2], d_energy


def _primitives3d(model: ThermoModel, domain: Domain3D, w, theta_guess, t) -> State3D:
    rho, m1, m2, m3, energy = w
    if np.any(rho <= 0.0) or np.any(~np.isfinite(rho)):
        raise PositivityError("density lost positivity; step rejected")
    u1, u2, u3 = m1 / rho, m2 / rho, m3 / rho
    e_density = energy - 0.5 * rho * (u1**2 + u2**2 + u3**2)
    try:
        theta = model.temperature_from_energy_density(rho, e_density, theta_guess=theta_guess,
                                                      tol=1e-14)
    except ThetaRecoveryError as exc:
        raise PositivityError(f"temperature recovery failed; step rejected ({exc})") from exc
    return State3D(domain=domain, rho=rho, u1=u1, u2=u2, u3=u3, theta=theta, t=t)


def step3d(model: ThermoModel, state: State3D, dt: float) -> State3D:
    """One two-stage second-order step; dt must respect the 3D stability limit."""
    limit = cfl_dt_3d(model, state)
    if dt > limit * (1.0 + 1e-9):
        raise CFLError(f"dt = {dt:.3e} exceeds stability limit {limit:.3e}")
    return _advance3d(model, state, dt)


def _advance3d(model: ThermoModel, state: State3D, dt: float) -> State3D:
    w0 = state.conservative(model)
    k1 = _rhs3d(model, state)
    stage1 = _primitives3d(
        model, state.domain,
        tuple(w + dt * k for w, k in zip(w0, k1)),
        state.theta, state.t + dt,
    )
    k2 = _rhs3d(model, stage1)
    return _primitives3d(
        model, state.domain,
        tuple(w + 0.5 * dt * (a + b) for w, a, b in zip(w0, k1, k2)),
        stage1.theta, state.t + dt,
    )


# -- entropy production and dissipation ledger -----------------------------------


def entropy_production_3d(model: ThermoModel, state: State3D) -> np.ndarray:
    """Pointwise production rate; nonnegative by its sum-of-squares structure."""
    h = state.domain.spacings
    grads = _velocity_gradients(state)
    div = grads[0][0] + grads[1][1] + grads[2][2]
    dev_sq = np.zeros_like(div)
    for i in range(3):
        for j in range(3):
            term = grads[i][j] + grads[j][i]
            if i == j:
                term = term - (2.0 / 3.0) * div
            dev_sq += term**2
    theta = state.theta
    stress_work = 0.5 * model.shear_viscosity(theta) * dev_sq \
        + model.bulk_viscosity(theta) * div**2
    grad_theta_sq = sum(
        _cell_derivative(theta, j, h[j], 1.0) ** 2 for j in range(3)
    )
    return (stress_work + model.conductivity(theta) * grad_theta_sq / theta) / theta


def _total_production(model: ThermoModel, state: State3D) -> float:
    return float(np.sum(entropy_production_3d(model, state)) * state.domain.cell_volume)


@dataclass
class Trajectory3D:
    """Snapshots plus the running space-time integral of the production rate."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    sigma_cumulative: list = field(default_factory=list)
    steps: int = 0


def integrate3d(model: ThermoModel, state: State3D, t_final: float, n_outputs: int = 50,
                dt: Optional[float] = None) -> Trajectory3D:
    """Advance to t_final with snapshots at n_outputs equispaced times.

    The space-time integral of the entropy production rate is accumulated
    per step (trapezoid in time) and stored per snapshot, without any
    reference-temperature weight, so one run serves every theta_bar in the
    dissipation ledger.
    """
    if t_final < 0.0:
        raise ValueError("t_final must be nonnegative")
    traj = Trajectory3D()
    traj.times.append(state.t)
    traj.states.append(state)
    traj.sigma_cumulative.append(0.0)
    if t_final == 0.0 or n_outputs == 0:
        return traj

    sigma_cum = 0.0
    sigma_prev = _total_production(model, state)
    t0 = state.t
    outputs = t0 + t_final * np.arange(1, n_outputs + 1) / n_outputs
    for t_out in outputs:
        while state.t < t_out - 1e-13:
            limit = cfl_dt_3d(model, state)
            if dt is not None and dt > limit * (1.0 + 1e-9):
                raise CFLError(f"dt = {dt:.3e} exceeds stability limit {limit:.3e}")
            dt_step = min(dt if dt is not None else limit, t_out - state.t)
            state = _advance3d(model, state, dt_step)
            sigma_new = _total_production(model, state)
            sigma_cum += 0.5 * dt_step * (sigma_prev + sigma_new)
            sigma_prev = sigma_new
            traj.steps += 1
        state = replace(state, t=t_out)
        traj.times.append(state.t)
        traj.states.append(state)
        traj.sigma_cumulative.append(sigma_cum)
    return traj


@dataclass(frozen=True)
class DissipationLedger:
    """Total-dissipation bookkeeping at a fixed reference temperature."""

    theta_bar: float
    times: tuple
    totals: tuple        # integral of 1/2 rho |u|^2 + H^theta_bar per snapshot
    productions: tuple   # theta_bar-weighted cumulative entropy production

    @property
    def initial_total(self) -> float:
        return self.totals[0]

    def balance_residuals(self) -> np.ndarray:
        """total(t) + production(t) - total(0); zero for exact solutions."""
        return np.asarray(self.totals) + np.asarray(self.productions) - self.initial_total

    @property
    def drift(self) -> float:
        return float(np.max(np.abs(self.balance_residuals())))


def dissipation_ledger(model: ThermoModel, trajectory: Trajectory3D,
                       theta_bar: float) -> DissipationLedger:
    """Evaluate the total dissipation balance along a stored trajectory."""
    if theta_bar <= 0.0:
        raise ValueError("theta_bar must be positive")
    totals = []
    for st in trajectory.states:
        ke = 0.5 * st.rho * (st.u1**2 + st.u2**2 + st.u3**2)
        ballistic = model.energy_density(st.rho, st.theta) \
            - theta_bar * st.rho * model.entropy(st.rho, st.theta)
        totals.append(float(np.sum(ke + ballistic) * st.domain.cell_volume))
    productions = [theta_bar * s for s in trajectory.sigma_cumulative]
    return DissipationLedger(
        theta_bar=theta_bar,
        times=tuple(trajectory.times),
        totals=tuple(totals),
        productions=tuple(productions),
    )


# -- snapshot persistence ----------------------------------------------------------


def write_snapshot_csv(path, state: State3D) -> None:
    """Flat CSV with one row per cell: i,j,k,x1,x2,y,rho,u1,u2,u3,theta."""
    n1, n2, n3 = state.domain.dims
    ii, jj, kk = np.indices((n1, n2, n3))
    x1, x2 = state.domain.physical_transverse_centers()
    y = state.domain.axial_centers
    columns = np.column_stack([
        ii.ravel(), jj.ravel(), kk.ravel(),
        x1[ii.ravel()], x2[jj.ravel()], y[kk.ravel()],
        state.rho.ravel(), state.u1.ravel(), state.u2.ravel(),
        state.u3.ravel(), state.theta.ravel(),
    ])
    header = "i,j,k,x1,x2,y,rho,u1,u2,u3,theta"
    np.savetxt(path, columns, delimiter=",", header=header, comments="",
               fmt=["%d", "%d", "%d"] + ["%.17g"] * 8)


def write_snapshot_bin(path, state: State3D) -> None:
    """Raw snapshot: magic NSF3, version, dims, epsilon, then the five fields.

    All payload floats are little-endian 64-bit, written field by field in C
    order (the axial index varies fastest).
    """
    n1, n2, n3 = state.domain.dims
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(np.asarray([SNAPSHOT_VERSION, n1, n2, n3], dtype="<u4").tobytes())
        fh.write(np.asarray([state.domain.epsilon], dtype="<f8").tobytes())
        for arr in (state.rho, state.u1, state.u2, state.u3, state.theta):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_snapshot_bin(path) -> dict:
    """Inverse of :func:`write_snapshot_bin`; returns dims, epsilon and fields."""
    raw = Path(path).read_bytes()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise ValueError("not a NSF3 snapshot")
    version = int(np.frombuffer(raw, dtype="<u4", count=1, offset=4)[0])
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    n1, n2, n3 = (int(v) for v in np.frombuffer(raw, dtype="<u4", count=3, offset=8))
    epsilon = float(np.frombuffer(raw, dtype="<f8", count=1, offset=20)[0])
    offset = 28
    fields = {}
    count = n1 * n2 * n3
    for name in ("rho", "u1", "u2", "u3", "theta"):
        fields[name] = np.frombuffer(raw, dtype="<f8", count=count,
                                     offset=offset).reshape(n1, n2, n3).copy()
        offset += 8 * count
    return {"version": version, "dims": (n1, n2, n3), "epsilon": epsilon, "fields": fields}
