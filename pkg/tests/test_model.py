"""Velocity closures: values, derivatives, box validation."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from garzfv import (
    CustomVelocityModel,
    GreenshieldsModel,
    InputRangeError,
    ModelValidationError,
    PowerLawModel,
    make_model,
    require_valid_model,
    validate_model,
)

RHO = np.linspace(0.0, 1.0, 41)
U = np.linspace(0.0, 2.0, 41)


def test_greenshields_flux_values():
    m = GreenshieldsModel()
    assert m.flux(0.0, 1.0) == 0.0
    assert m.flux(1.0, 1.0) == 0.0
    # u rho (1 - rho) at the crest
    assert m.flux(0.5, 1.0) == pytest.approx(0.25, abs=1e-15)
    assert m.flux(0.25, 2.0) == pytest.approx(2 * 0.25 * 0.75, abs=1e-15)


def test_greenshields_eigenvalues():
    m = GreenshieldsModel()
    lam1, lam2 = m.eigenvalues(0.5, 1.0)
    # lambda1 = u(1 - 2 rho), lambda2 = u(1 - rho)
    assert lam1 == pytest.approx(0.0, abs=1e-15)
    assert lam2 == pytest.approx(0.5, abs=1e-15)
    lam1, lam2 = m.eigenvalues(RHO, 0.0)
    assert np.all(lam1 == 0.0) and np.all(lam2 == 0.0)


def test_zero_velocity_at_jam_for_all_markers():
    for m in (GreenshieldsModel(), PowerLawModel(2.0), PowerLawModel(3.0)):
        assert np.all(np.abs(m.velocity(1.0, U)) <= 1e-15)


@pytest.mark.parametrize("model", [GreenshieldsModel(), PowerLawModel(2.0),
                                   PowerLawModel(1.5)])
def test_derivatives_match_finite_differences(model):
    rho = np.linspace(0.02, 0.98, 25)[:, None]
    u = np.linspace(0.05, 1.95, 25)[None, :]
    eps = 1e-6
    fd_rho = (model.velocity(rho + eps, u) - model.velocity(rho - eps, u)) / (2 * eps)
    fd_u = (model.velocity(rho, u + eps) - model.velocity(rho, u - eps)) / (2 * eps)
    fd_ur = (model.d_u(rho + eps, u) - model.d_u(rho - eps, u)) / (2 * eps)
    fd_uu = (model.d_u(rho, u + eps) - model.d_u(rho, u - eps)) / (2 * eps)
    assert np.abs(model.d_rho(rho, u) - fd_rho).max() < 1e-8
    assert np.abs(model.d_u(rho, u) - fd_u).max() < 1e-8
    assert np.abs(model.d_u_rho(rho, u) - fd_ur).max() < 1e-8
    assert np.abs(model.d_uu(rho, u) - fd_uu).max() < 1e-8


def test_power_law_critical_density():
    # argmax of rho (1-rho)^g is 1/(1+g)
    for gamma in (1.0, 2.0, 3.5):
        m = PowerLawModel(gamma)
        crit = m.critical_density(1.0)
        assert crit == pytest.approx(1.0 / (1.0 + gamma), abs=1e-15)
        f = m.flux(RHO[1:-1], 1.0)
        assert m.flux(crit, 1.0) >= f.max() - 1e-12


def test_builtin_models_validate():
    assert validate_model(GreenshieldsModel(), u_max=2.0, n_samples=101).passed
    assert validate_model(PowerLawModel(2.0), u_max=1.0, n_samples=101).passed


def test_increasing_velocity_in_rho_fails_validation():
    bad = CustomVelocityModel(lambda rho, u: u * (1.0 + rho), name="bad")
    report = validate_model(bad, u_max=1.0)
    failed = {c.name for c in report.checks if not c.passed}
    assert not report.passed
    # the sign condition on d/drho and the jam condition both break
    assert any("rho" in name for name in failed)
    assert any("jam" in name or "zero" in name for name in failed)
    with pytest.raises(ModelValidationError):
        require_valid_model(bad, u_max=1.0)


def test_custom_model_with_callable_derivatives_validates():
    a = 0.3
    m = CustomVelocityModel(
        lambda rho, u: u * (1.0 - rho) * (1.0 + a * rho) / (1.0 + a),
        name="humped",
        d_rho=lambda rho, u: u * (a - 1.0 - 2 * a * rho) / (1.0 + a),
        d_u=lambda rho, u: (1.0 - rho) * (1.0 + a * rho) / (1.0 + a),
        d_u_rho=lambda rho, u: (a - 1.0 - 2 * a * rho) / (1.0 + a),
        d_uu=lambda rho, u: np.zeros(np.broadcast(rho, u).shape),
    )
    assert validate_model(m, u_max=1.5).passed


def test_make_model_dispatch():
    assert isinstance(make_model("greenshields"), GreenshieldsModel)
    m = make_model("power", {"gamma": 2.5})
    assert isinstance(m, PowerLawModel) and m.gamma == 2.5
    with pytest.raises(InputRangeError):
        make_model("nope")
    with pytest.raises(InputRangeError):
        make_model("power", {"beta": 1.0})


def test_max_wave_speed_dominates_sampled_derivative():
    for m in (GreenshieldsModel(), PowerLawModel(2.0)):
        for u in (0.3, 1.0, 1.7):
            dfd = m.velocity(RHO, u) + RHO * m.d_rho(RHO, u)
            assert m.max_wave_speed(u) >= np.abs(dfd).max() - 1e-12


@settings(max_examples=60, deadline=None)
@given(rho=st.floats(0.0, 1.0), u=st.floats(0.0, 2.0))
def test_greenshields_box_signs(rho, u):
    m = GreenshieldsModel()
    assert m.velocity(rho, u) >= 0.0
    assert m.d_rho(rho, u) <= 0.0
    assert m.d_u(rho, u) >= 0.0


def test_power_law_gamma_one_is_greenshields():
    p, gsh = PowerLawModel(1.0), GreenshieldsModel()
    r, u = np.meshgrid(RHO, U)
    assert np.abs(p.velocity(r, u) - gsh.velocity(r, u)).max() < 1e-15
    assert np.abs(p.d_rho(r, u) - gsh.d_rho(r, u)).max() < 1e-15


def test_sup_bounds_are_upper_bounds():
    for m in (GreenshieldsModel(), PowerLawModel(2.0)):
        b = m.sup_bounds(2.0)
        r = np.linspace(0, 1, 301)[:, None]
        u = np.linspace(0, 2, 301)[None, :]
        assert np.abs(m.velocity(r, u)).max() <= b.v_sup + 1e-12
        assert np.abs(m.d_u(r, u)).max() <= b.d_u_sup + 1e-12
        assert np.abs(m.d_u_rho(r, u)).max() <= b.d_u_rho_sup + 1e-12
        assert np.abs(m.d_uu(r, u)).max() <= b.d_uu_sup + 1e-12
