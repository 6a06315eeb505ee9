"""Discrete verification of the Korn-type and Poincare-Ladyzhenskaya bounds.

Vector fields live on node grids over a rectangular box, with the normal
velocity component vanishing on each boundary face.  Under that boundary
condition the squared gradient is controlled by the symmetric gradient, by
its deviatoric part, and by the mixed deviatoric/gradient pairing; the checks
below evaluate all four quadratic forms by quadrature and compare them up to
a mesh-dependent O(h^2) tolerance.

The Poincare-Ladyzhenskaya check measures, over a thin box of thickness
epsilon, the ratio of the fourth power of the L^4 norm of the fluctuation
around cross-section averages to the fourth power of the gradient's L^2
norm; the bound is uniform in epsilon, which an epsilon-sweep verifies
empirically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "BoundaryComplianceError",
    "DiscreteVectorField",
    "KornReport",
    "PoincareReport",
    "discrete_gradient",
    "korn_report",
    "poincare_ladyzhenskaya_check",
    "poincare_sweep",
    "random_trig_field",
    "centered_linear_profile",
]

UNIT_BOX = ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))


class BoundaryComplianceError(ValueError):
    """A field violates the zero-normal-trace boundary condition."""


@dataclass(frozen=True)
class DiscreteVectorField:
    """Node samples of a velocity field on a rectangular box.

    ``dims`` counts nodes per axis (including both boundary planes) and the
    components are (n1, n2, n3) arrays.  ``normal_bc`` flags, per axis,
    whether the normal component is required to vanish on the two faces
    orthogonal to that axis.
    """

    dims: tuple
    bounds: tuple = UNIT_BOX
    u1: np.ndarray = None
    u2: np.ndarray = None
    u3: np.ndarray = None
    normal_bc: tuple = (True, True, True)

    def __post_init__(self):
        if len(self.dims) != 3 or any(n < 2 for n in self.dims):
            raise ValueError("need at least 2 nodes per axis")
        for lo, hi in self.bounds:
            if not hi > lo:
                raise ValueError("degenerate box")
        for name in ("u1", "u2", "u3"):
            comp = getattr(self, name)
            if comp is None or comp.shape != tuple(self.dims):
                raise ValueError(f"component {name} must have shape {tuple(self.dims)}")

    @property
    def spacings(self) -> tuple:
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.bounds, self.dims))

    def axes(self) -> tuple:
        return tuple(
            np.linspace(lo, hi, n) for (lo, hi), n in zip(self.bounds, self.dims)
        )

    def components(self) -> tuple:
        return (self.u1, self.u2, self.u3)

    def boundary_violation(self) -> float:
        """Largest |u . n| over the faces where the condition is flagged."""
        worst = 0.0
        for axis, (comp, flagged) in enumerate(zip(self.components(), self.normal_bc)):
            if not flagged:
                continue
            first = comp.take(0, axis=axis)
            last = comp.take(-1, axis=axis)
            worst = max(worst, float(np.abs(first).max()), float(np.abs(last).max()))
        return worst

    @classmethod
    def from_callables(cls, dims, fu1, fu2, fu3, bounds=UNIT_BOX) -> "DiscreteVectorField":
        grids = np.meshgrid(
            *(np.linspace(lo, hi, n) for (lo, hi), n in zip(bounds, dims)),
            indexing="ij",
        )
        return cls(
            dims=tuple(dims),
            bounds=tuple(bounds),
            u1=np.asarray(fu1(*grids), dtype=float),
            u2=np.asarray(fu2(*grids), dtype=float),
            u3=np.asarray(fu3(*grids), dtype=float),
        )


def random_trig_field(dims, rng: np.random.Generator, n_modes: int = 3,
                      amplitude: float = 1.0, bounds=UNIT_BOX) -> DiscreteVectorField:
    """Band-limited random field with the normal trace vanishing by construction.

    Component i carries a sine factor in direction i (zero on the two faces
    orthogonal to i) and random sine/cosine factors in the other directions.
    """
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(bounds, dims)]
    unit = [
        (ax - lo) / (hi - lo) for ax, (lo, hi) in zip(axes, bounds)
    ]
    grids = np.meshgrid(*unit, indexing="ij")
    comps = []
    for i in range(3):
        total = np.zeros(tuple(dims))
        for _ in range(n_modes):
            coef = amplitude * rng.standard_normal() / n_modes
            ks = rng.integers(1, 4, size=3)
            factor = coef * np.sin(np.pi * ks[i] * grids[i])
            for j in range(3):
                if j == i:
                    continue
                if rng.integers(0, 2):
                    factor = factor * np.sin(np.pi * ks[j] * grids[j])
                else:
                    factor = factor * np.cos(np.pi * ks[j] * grids[j])
            total += factor
        comps.append(total)
    return DiscreteVectorField(dims=tuple(dims), bounds=tuple(bounds),
                               u1=comps[0], u2=comps[1], u3=comps[2])


def _trap_weights(dims, spacings) -> np.ndarray:
    w = []
    for n, h in zip(dims, spacings):
        wi = np.full(n, h)
        wi[0] = wi[-1] = 0.5 * h
        w.append(wi)
    return w[0][:, None, None] * w[1][None, :, None] * w[2][None, None, :]


def discrete_gradient(field: DiscreteVectorField) -> np.ndarray:
    """Per-node gradient G[i, j] = d u^i / d x_j, exact for affine fields.

    Central differences in the interior and second-order one-sided stencils
    on the boundary planes.
    """
    h1, h2, h3 = field.spacings
    grad = np.empty((3, 3) + tuple(field.dims))
    for i, comp in enumerate(field.components()):
        d1, d2, d3 = np.gradient(comp, h1, h2, h3, edge_order=2)
        grad[i, 0], grad[i, 1], grad[i, 2] = d1, d2, d3
    return grad


@dataclass(frozen=True)
class KornReport:
    """Quadratic forms entering the Korn-type inequalities, plus pass flags.

    ``mixed`` pairs the deviatoric symmetric gradient with the full gradient;
    under the boundary conditions it dominates ``grad_sq`` up to O(h^2).
    """

    grad_sq: float
    sym_sq: float
    dev_sq: float
    mixed: float
    div_sq: float
    diag_sq: float
    tol: float

    @property
    def sym_ok(self) -> bool:
        return self.grad_sq <= self.sym_sq + self.tol

    @property
    def dev_ok(self) -> bool:
        return self.grad_sq <= self.dev_sq + self.tol

    @property
    def mixed_ok(self) -> bool:
        return self.grad_sq <= self.mixed + self.tol

    def all_ok(self) -> bool:
        return self.sym_ok and self.dev_ok and self.mixed_ok


def korn_report(field: DiscreteVectorField, bc_tol: float = 1e-12,
                tol_factor: float = 10.0) -> KornReport:
    """Evaluate the Korn quadratic forms and the mesh-scaled tolerance.

    Raises BoundaryComplianceError when the normal trace exceeds ``bc_tol``.
    The tolerance ``tol_factor * h_max^2 * (1 + grad_sq)`` absorbs the O(h^2)
    error the discrete integration-by-parts identities commit.
    """
    violation = field.boundary_violation()
    if violation > bc_tol:
        raise BoundaryComplianceError(
            f"normal trace {violation:.3e} exceeds tolerance {bc_tol:.1e}"
        )
    grad = discrete_gradient(field)
    weights = _trap_weights(field.dims, field.spacings)

    sym = grad + np.swapaxes(grad, 0, 1)
    div = grad[0, 0] + grad[1, 1] + grad[2, 2]
    dev = sym.copy()
    for k in range(3):
        dev[k, k] -= (2.0 / 3.0) * div

    def form(integrand):
        return float(np.sum(integrand * weights))

    grad_sq = form(np.sum(grad * grad, axis=(0, 1)))
    sym_sq = form(np.sum(sym * sym, axis=(0, 1)))
    dev_sq = form(np.sum(dev * dev, axis=(0, 1)))
    mixed = form(np.sum(dev * grad, axis=(0, 1)))
    div_sq = form(div * div)
    diag_sq = form(grad[0, 0] ** 2 + grad[1, 1] ** 2 + grad[2, 2] ** 2)

    h_max = max(field.spacings)
    tol = tol_factor * h_max**2 * (1.0 + grad_sq)
    return KornReport(grad_sq=grad_sq, sym_sq=sym_sq, dev_sq=dev_sq,
                      mixed=mixed, div_sq=div_sq, diag_sq=diag_sq, tol=tol)


# -- Poincare-Ladyzhenskaya ------------------------------------------------------


@dataclass(frozen=True)
class PoincareReport:
    """Numerator, denominator and ratio of the thin-domain fluctuation bound."""

    fluct_l4_pow4: float
    grad_l2_pow4: float

    @property
    def ratio(self) -> float:
        if self.fluct_l4_pow4 == 0.0:
            return 0.0
        if self.grad_l2_pow4 == 0.0:
            return float("inf")
        return self.fluct_l4_pow4 / self.grad_l2_pow4


def poincare_ladyzhenskaya_check(values: np.ndarray, spacings, bc_tol: float = 1e-12
                                 ) -> PoincareReport:
    """Fluctuation-to-gradient ratio for a scalar field vanishing at the axial ends.

    ``values`` are node samples on a box whose third axis is the axial
    direction; the field must vanish on the first and last axial plane.
    Returns ||f - (f)_Q||_{L^4}^4 and ||grad f||_{L^2}^4 with the convention
    that an identically flat fluctuation yields ratio 0.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 3 or any(n < 2 for n in values.shape):
        raise ValueError("expected node samples with at least 2 nodes per axis")
    end_trace = max(float(np.abs(values[:, :, 0]).max()),
                    float(np.abs(values[:, :, -1]).max()))
    if end_trace > bc_tol:
        raise BoundaryComplianceError(
            f"axial end trace {end_trace:.3e} exceeds tolerance {bc_tol:.1e}"
        )
    h1, h2, h3 = spacings
    weights = _trap_weights(values.shape, spacings)

    # cross-section average per axial node, trapezoid weights in the plane
    w2d = _trap_weights((values.shape[0], values.shape[1], 1), (h1, h2, 1.0))[:, :, 0]
    area = float(np.sum(w2d))
    avg = np.tensordot(w2d, values, axes=([0, 1], [0, 1])) / area

    fluct = values - avg[None, None, :]
    num = float(np.sum(fluct**4 * weights))

    g1, g2, g3 = np.gradient(values, h1, h2, h3, edge_order=2)
    grad_sq = float(np.sum((g1**2 + g2**2 + g3**2) * weights))
    return PoincareReport(fluct_l4_pow4=num, grad_l2_pow4=grad_sq**2)


def centered_linear_profile(epsilon: float, q_bounds=((0.0, 1.0), (0.0, 1.0))) -> Callable:
    """Documented sweep family f = sin(pi y) (x1 - x1_center) on the thin box."""
    (a, b), _ = q_bounds
    center = 0.5 * epsilon * (a + b)

    def f(x1, x2, y):
        return np.sin(np.pi * y) * (x1 - center)

    return f


def poincare_sweep(family: Callable, epsilons: Sequence[float], dims=(17, 17, 33),
                   q_bounds=((0.0, 1.0), (0.0, 1.0))) -> list:
    """Evaluate the fluctuation ratio of ``family(epsilon)`` across thicknesses.

    ``family`` maps epsilon to a callable f(x1, x2, y) in physical
    coordinates on the thin box (epsilon Q) x (0, 1).
    """
    reports = []
    for eps in epsilons:
        if eps <= 0.0:
            raise ValueError("epsilon must be positive")
        (a, b), (c, d) = q_bounds
        bounds = ((eps * a, eps * b), (eps * c, eps * d), (0.0, 1.0))
        axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(bounds, dims)]
        grids = np.meshgrid(*axes, indexing="ij")
        values = np.asarray(family(eps)(*grids), dtype=float)
        spacings = tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(bounds, dims))
        reports.append(poincare_ladyzhenskaya_check(values, spacings))
    return reports
