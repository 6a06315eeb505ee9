"""Thin-pipe laboratory for the heat-conducting compressible flow system.

Subpackages:

- ``thermo``: equation of state, transport closures, self-verification.
- ``relent``: ballistic free energy, relative entropy, scaled norms.
- ``inequalities``: discrete Korn-type and thin-domain Poincare checks.
- ``solver1d`` / ``solver3d``: explicit conservative solvers.
- ``harness``: configuration, thickness sweeps, reporting, CLI backend.
"""

from .thermo import PressureClosure, ThermoModel, ThetaRecoveryError, structural_report
from .relent import (
    EssentialWindow,
    ScaledNormReport,
    ballistic_free_energy,
    coercivity_check,
    cross_section_average,
    essential_residual_split,
    rel_entropy,
    rel_entropy_integral,
    scaled_norms,
)
from .inequalities import (
    DiscreteVectorField,
    KornReport,
    discrete_gradient,
    korn_report,
    poincare_ladyzhenskaya_check,
    poincare_sweep,
)
from .solver1d import CFLError, PositivityError, State1D, init_smooth, integrate, step
from .solver3d import (
    Domain3D,
    State3D,
    build_domain,
    default_perturbation,
    dissipation_ledger,
    integrate3d,
    lift_initial_data,
    step3d,
)

__version__ = "0.1.0"
