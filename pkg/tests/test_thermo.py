import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsf_thinpipe.thermo import (
    CLOSURES,
    PressureClosure,
    ThermoModel,
    ThetaRecoveryError,
    register_closure,
    structural_report,
)

STATE = st.floats(0.1, 10.0, allow_nan=False)


# -- construction and validation ---------------------------------------------


@pytest.mark.parametrize("bad", [
    {"a": 0.0}, {"mu0": 0.0}, {"mu1": -1.0}, {"eta0": -0.1},
    {"kappa0": 0.0}, {"kappa2": -1.0}, {"P_closure": "no-such"},
])
def test_invalid_coefficients_rejected(bad):
    with pytest.raises(ValueError):
        ThermoModel(**bad)


def test_combined_viscosities(model):
    assert model.nu0 == pytest.approx(4.0 / 3.0)
    assert model.nu1 == pytest.approx(4.0 / 3.0)
    m = ThermoModel(mu0=0.75, mu1=1e-12, eta0=0.0, eta1=0.0)
    assert m.nu0 == pytest.approx(1.0)


def test_from_mapping_and_unknown_key(model):
    m = ThermoModel.from_mapping({"a": "2.0", "mu0": "0.5", "P_closure": "ideal_z53"})
    assert m.a == 2.0 and m.mu0 == 0.5
    with pytest.raises(ValueError):
        ThermoModel.from_mapping({"bogus": "1"})


@pytest.mark.parametrize("call", ["pressure", "internal_energy", "entropy", "dp_drho"])
@pytest.mark.parametrize("rho,theta", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
def test_domain_errors(model, call, rho, theta):
    with pytest.raises(ValueError):
        getattr(model, call)(rho, theta)


# -- pressure -------------------------------------------------------------------


def test_pressure_vanishing_density_leaves_radiation(model):
    # P(0) = 0 kills the kinetic part; only a/3 theta^4 survives
    assert model.pressure(1e-13, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-10)


def test_pressure_reference_point(model):
    # Z = 1: theta^(5/2) (Z + Z^(5/3)) + a/3 = 2 + 1/3
    assert model.pressure(1.0, 1.0) == pytest.approx(2.0 + 1.0 / 3.0, rel=1e-14)
    assert np.all(model.pressure(np.array([0.5, 2.0]), 1.0) > 0.0)


def test_pressure_density_derivative_matches_finite_difference(model):
    closed = model.dp_drho(1.0, 1.0)
    assert closed == pytest.approx(1.0 + 5.0 / 3.0, rel=1e-14)
    h = 1e-6
    fd = (model.pressure(1.0 + h, 1.0) - model.pressure(1.0 - h, 1.0)) / (2.0 * h)
    assert abs(closed - fd) < 1e-6


# -- internal energy ---------------------------------------------------------------


def test_internal_energy_reference_point(model):
    assert model.internal_energy(1.0, 1.0) == pytest.approx(4.0, rel=1e-14)


def test_heat_capacity_positive(model):
    assert model.de_dtheta(1.0, 1.0) > 0.0


def test_energy_density_dominates_cold_part(model):
    # rho e >= (3/2) P_inf rho^(5/3): at (8, 1) that is 8 e >= 48
    assert 8.0 * model.internal_energy(8.0, 1.0) >= 1.5 * 8.0 ** (5.0 / 3.0)


# -- entropy --------------------------------------------------------------------------


def test_entropy_reference_point(model):
    # S(Z) = -log Z for the default closure, so s(1,1) = 4a/3
    assert model.entropy(1.0, 1.0) == pytest.approx(4.0 / 3.0, rel=1e-14)


def test_entropy_decreasing_in_density(model):
    rho = np.linspace(0.2, 5.0, 40)
    s = model.entropy(rho, 1.3)
    assert np.all(np.diff(s) < 0.0)


def test_gibbs_residual_reference_points(model):
    assert model.gibbs_residual(1.0, 1.0, step=1e-5) < 1e-6
    assert model.gibbs_residual(2.0, 0.5, step=1e-5) < 1e-5


def test_gibbs_residual_detects_corrupted_entropy(model):
    # replace the entropy integral by a Z-dependent corruption; the residual
    # check must light up
    base = CLOSURES["ideal_z53"]
    register_closure(PressureClosure(
        name="corrupted-for-test",
        P=base.P, dP=base.dP,
        S=lambda z: -np.log(z) + 0.1 * z,
        P_inf=base.P_inf,
    ))
    try:
        bad = ThermoModel(P_closure="corrupted-for-test")
        assert bad.gibbs_residual(1.0, 1.0) > 1e-2
    finally:
        del CLOSURES["corrupted-for-test"]


@settings(deadline=None, max_examples=60)
@given(rho=STATE, theta=STATE)
def test_gibbs_relation_and_stability_randomized(rho, theta):
    model = ThermoModel()
    assert model.gibbs_residual(rho, theta, step=1e-5) < 1e-5
    assert model.dp_drho(rho, theta) > 0.0
    assert model.de_dtheta(rho, theta) > 0.0


# -- stress tensor and heat flux -----------------------------------------------------


def test_stress_antisymmetric_gradient_gives_zero(model):
    grad = np.array([[0.0, 1.0, -2.0], [-1.0, 0.0, 0.5], [2.0, -0.5, 0.0]])
    assert np.allclose(model.stress_tensor(1.0, grad), 0.0, atol=1e-15)


def test_stress_pure_dilation():
    m = ThermoModel(eta0=0.5, eta1=0.5)
    out = m.stress_tensor(1.0, np.eye(3))
    # deviatoric part cancels; 3 (eta0 + eta1 theta) I remains
    assert np.allclose(out, 3.0 * (0.5 + 0.5) * np.eye(3), rtol=1e-14)


def test_stress_affine_in_temperature(model):
    rng = np.random.default_rng(7)
    grad = rng.standard_normal((3, 3))
    s_half, s_one, s_two = (model.stress_tensor(t, grad) for t in (0.5, 1.0, 2.0))
    slope = s_two - s_one
    assert np.allclose(s_half, s_one - 0.5 * slope, rtol=1e-13, atol=1e-13)


def test_stress_symmetric_for_random_gradients(model):
    rng = np.random.default_rng(3)
    for _ in range(20):
        out = model.stress_tensor(rng.uniform(0.2, 3.0), rng.standard_normal((3, 3)))
        assert np.allclose(out, out.T, atol=1e-13)


def test_heat_flux_values(model):
    assert np.allclose(model.heat_flux(1.0, np.zeros(3)), 0.0)
    q = model.heat_flux(1.0, np.array([1.0, 0.0, 0.0]))
    assert np.allclose(q, [-3.0, 0.0, 0.0])
    assert q @ np.array([1.0, 0.0, 0.0]) <= 0.0


@settings(deadline=None, max_examples=40)
@given(theta=STATE, gx=st.floats(-5, 5), gy=st.floats(-5, 5), gz=st.floats(-5, 5))
def test_heat_flux_antiparallel(theta, gx, gy, gz):
    model = ThermoModel()
    grad = np.array([gx, gy, gz])
    assert float(model.heat_flux(theta, grad) @ grad) <= 0.0


# -- 1D closures -------------------------------------------------------------------------


def test_stress_1d_combined_viscosity():
    m = ThermoModel(mu0=0.75, mu1=1e-12)
    assert m.stress_1d(0.7, 1.0) == pytest.approx(1.0, abs=1e-11)
    assert m.stress_1d(0.7, 0.0) == 0.0


def test_stress_1d_matches_axial_stress_tensor(model):
    du = 0.37
    grad = np.zeros((3, 3))
    grad[2, 2] = du
    tensor = model.stress_tensor(1.3, grad)
    assert tensor[2, 2] == pytest.approx(model.stress_1d(1.3, du), rel=1e-14)
    # dissipation identity: S : grad u = nu(theta) (du)^2 for axial gradients
    assert np.tensordot(tensor, grad) == pytest.approx(
        (model.nu0 + model.nu1 * 1.3) * du**2, rel=1e-14)


def test_heat_flux_1d(model):
    assert model.heat_flux_1d(1.0, 2.0) == pytest.approx(-6.0, rel=1e-14)
    with pytest.raises(ValueError):
        model.heat_flux_1d(-1.0, 2.0)


# -- structure of the pressure closure ---------------------------------------------------


def test_structural_report_default_closure(model):
    rep = structural_report(model)
    assert rep.ok
    assert rep.p_at_zero == 0.0
    assert rep.min_dp > 0.0
    # (5/3 P - Z P') / Z is exactly 2/3 for the default closure
    assert rep.min_gap_over_z == pytest.approx(2.0 / 3.0, rel=1e-9)
    assert rep.max_gap_over_z == pytest.approx(2.0 / 3.0, rel=1e-9)
    assert rep.p_over_z53_monotone
    assert rep.p_inf_estimate == pytest.approx(1.0, abs=0.02)
    assert rep.max_entropy_slope < 0.0


# -- temperature recovery -----------------------------------------------------------------


def test_temperature_recovery_roundtrip(model):
    rng = np.random.default_rng(11)
    rho = rng.uniform(0.2, 5.0, size=200)
    theta = rng.uniform(0.2, 5.0, size=200)
    recovered = model.temperature_from_energy_density(
        rho, model.energy_density(rho, theta), theta_guess=np.full_like(rho, 1.0)
    )
    assert np.max(np.abs(recovered - theta) / theta) < 1e-10


def test_temperature_recovery_rejects_subcold_energy(model):
    cold = model.cold_energy_density(2.0)
    with pytest.raises(ThetaRecoveryError):
        model.temperature_from_energy_density(2.0, 0.99 * cold)
