import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import cantilever_beta_L, charged_face_force, dipole_axial_force
from rotpeh import (ConfigError, HarvesterConfig, MagnetConfig, StopperConfig, SystemState, build_reduced_model,
                    build_sections, impact_force, magnet_force, magnet_gap_kinematics, modal_analysis, ode_rhs,
                    stopper_modal, stopper_preset)
from rotpeh.forces import MagnetPlugin, contact_force, magnet_tip_force

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def model():
    cfg = HarvesterConfig()
    sec = build_sections(cfg)
    return build_reduced_model(cfg, sec, modal_analysis(sec, TWO_PI * 13))


# --------------------------------------------------------------------------- stopper


def test_stopper_without_tip_mass_is_a_cantilever():
    cfg = StopperConfig(M_st=0.0)
    st_ = stopper_modal(cfg)
    m, YI = cfg.rho_st * cfg.b_st * cfg.h_st, cfg.Y_st * cfg.b_st * cfg.h_st**3 / 12
    beta_L = np.sqrt(st_.omega * cfg.L_st**2 * np.sqrt(m / YI))
    assert beta_L == pytest.approx(cantilever_beta_L(1)[0], rel=1e-3)
    # mass-normalised tip value of the uniform cantilever is 2 / sqrt(m L)
    assert st_.phi_tip == pytest.approx(2 / np.sqrt(m * cfg.L_st), rel=1e-6)


def test_stopper_thickness_scaling():
    a = stopper_modal(StopperConfig(M_st=0.0))
    b = stopper_modal(StopperConfig(M_st=0.0, h_st=2e-3))
    assert b.omega / a.omega == pytest.approx(2.0, rel=1e-8)


@pytest.mark.parametrize("name", ["A", "B"])
def test_prototype_stoppers_are_stiff(name, model):
    st_ = stopper_modal(stopper_preset(name), model.Omega)
    assert np.isfinite(st_.omega) and st_.omega > 3 * model.omega.max()


def test_stopper_validation():
    with pytest.raises(ConfigError) as err:
        StopperConfig(zeta_st=0.0)
    assert err.value.field == "zeta_st"
    with pytest.raises(ConfigError):
        StopperConfig(target="middle")


def _state(model, y_tip, v_tip=0.0, eta_st=0.0, eta_st_dot=0.0):
    # put the whole tip displacement into mode 1
    phi = model.phi_main[0]
    return SystemState(eta=np.array([y_tip / phi, 0.0]), eta_dot=np.array([v_tip / phi, 0.0]),
                       eta_st=eta_st, eta_st_dot=eta_st_dot)


def test_no_force_inside_the_gap(model):
    cfg = stopper_preset("A")
    st_ = stopper_modal(cfg, model.Omega)
    for y in np.linspace(-0.999 * cfg.d, 0.999 * cfg.d, 11):
        assert impact_force(_state(model, y, 0.3), cfg, st_, model) == (0.0, 0.0)


def test_static_overlap_is_pure_spring(model):
    cfg = stopper_preset("A")
    st_ = stopper_modal(cfg, model.Omega)
    delta = 1e-4
    f, reaction = impact_force(_state(model, -cfg.d - delta), cfg, st_, model)
    # the stopper pushes the beam back toward the gap
    assert f == pytest.approx(st_.omega**2 * delta / st_.phi_tip**2, rel=1e-9)
    assert reaction == -f


def test_touch_with_matching_velocity_is_force_free(model):
    cfg = stopper_preset("A")
    st_ = stopper_modal(cfg, model.Omega)
    # relative velocity is zero when the stopper tip moves with the beam tip
    f, _ = impact_force(_state(model, -cfg.d, 0.2, 0.0, 0.2 / st_.phi_tip), cfg, st_, model)
    assert f == 0.0


def test_contact_force_continuous_through_engagement():
    d, w, z, phi, side = 0.01, 500.0, 0.1, 10.0, -1.0
    y = np.linspace(-d + 1e-4, -d - 1e-4, 2001)
    v = np.full_like(y, 0.0)
    f = np.array([contact_force(a, b, side, d, w, z, phi, side * a >= d) for a, b in zip(y, v)])
    assert np.max(np.abs(np.diff(f))) <= 1.01 * w**2 / phi**2 * (y[0] - y[1])


def test_penalty_spring_is_conservative_over_a_contact_cycle():
    d, w, z, phi, side = 0.01, 500.0, 0.1, 10.0, -1.0
    k, c = w**2 / phi**2, 2 * z * w / phi**2
    t = np.linspace(0, TWO_PI, 20001)
    y = -d - 1e-3 * np.sin(t / 2) ** 2            # penetrate and withdraw
    v = -1e-3 * np.sin(t / 2) * np.cos(t / 2)
    f = np.array([contact_force(a, b, side, d, w, z, phi, True) for a, b in zip(y, v)])
    work = np.trapezoid(f * v, t)
    assert work == pytest.approx(-c * np.trapezoid(v**2, t), rel=1e-6)
    spring = np.array([contact_force(a, b, side, d, w, 1e-12, phi, True) for a, b in zip(y, v)])
    assert abs(np.trapezoid(spring * v, t)) <= 1e-9 * k * 1e-6


# --------------------------------------------------------------------------- magnets


EDGE = 5e-3


def _cube_pair(**kw):
    return MagnetConfig(a1=EDGE, b1=EDGE, c1=EDGE, a2=EDGE, b2=EDGE, c2=EDGE, B1=1.2, B2=1.2,
                        polarity="attracting", **kw)


@pytest.mark.parametrize("gap_ratio", [0.5, 1.0, 2.0, 3.5, 5.0])
def test_magnet_force_matches_charged_face_oracle(gap_ratio):
    cfg = _cube_pair()
    gamma = EDGE + gap_ratio * EDGE            # centre distance = edge + face gap
    ours = magnet_force(cfg, 0.0, 0.0, gamma)
    ref = charged_face_force(EDGE, EDGE, EDGE, EDGE, EDGE, EDGE, (0.0, 0.0, gamma), 1.2, 1.2, n=48)
    assert ours[2] == pytest.approx(ref[2], rel=1e-2)


def test_magnet_force_matches_oracle_off_axis():
    cfg = _cube_pair()
    offset = (2e-3, -1.5e-3, 9e-3)
    ours = magnet_force(cfg, *offset)
    ref = charged_face_force(EDGE, EDGE, EDGE, EDGE, EDGE, EDGE, offset, 1.2, 1.2, n=48)
    assert ours == pytest.approx(ref, rel=1e-2)


def test_magnet_force_far_field_is_dipolar():
    cfg = _cube_pair()
    z = 20 * EDGE
    V = EDGE**3
    assert magnet_force(cfg, 0, 0, z)[2] == pytest.approx(dipole_axial_force(1.2, V, 1.2, V, z), rel=5e-2)


def test_coaxial_force_is_axial():
    # the 64-corner sum cancels the transverse parts to round-off of the axial scale
    for gap in (5e-3, 10e-3, 31.25e-3):
        F = magnet_force(MagnetConfig(), 0.0, 0.0, gap)
        assert F[2] != 0.0
        assert max(abs(F[0]), abs(F[1])) <= 1e-9 * abs(F[2])


@given(alpha=st.floats(-8e-3, 8e-3), beta=st.floats(-8e-3, 8e-3), gamma=st.floats(8e-3, 40e-3))
def test_newtons_third_law(alpha, beta, gamma):
    cfg = MagnetConfig(a1=3e-3, b1=4e-3, c1=5e-3, a2=6e-3, b2=2e-3, c2=3e-3)
    swapped = cfg.replace(a1=cfg.a2, b1=cfg.b2, c1=cfg.c2, a2=cfg.a1, b2=cfg.b1, c2=cfg.c1)
    F = magnet_force(cfg, alpha, beta, gamma)
    G = magnet_force(swapped, -alpha, -beta, -gamma)
    # the corner sums cancel terms of the pole-face scale, which sets the round-off floor at large gaps
    face = cfg.B1 * cfg.B2 / (4e-7 * np.pi) * min(cfg.a1 * cfg.b1, cfg.a2 * cfg.b2)
    assert np.all(np.abs(G + F) <= 1e-9 * np.max(np.abs(F)) + 1e-12 * face)


@pytest.mark.parametrize("offset", [(1e-3, 2e-3, 9e-3), (-4e-3, 1e-3, 12e-3), (0.5e-3, -0.7e-3, 20e-3)])
def test_magnet_force_is_curl_free(offset):
    cfg = MagnetConfig()
    h = 1e-6
    J = np.zeros((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        J[:, j] = (magnet_force(cfg, *(np.add(offset, e))) - magnet_force(cfg, *(np.subtract(offset, e)))) / (2 * h)
    scale = np.max(np.abs(J))
    assert np.max(np.abs(J - J.T)) <= 1e-6 * scale


def test_repelling_force_decreases_with_gap():
    cfg = MagnetConfig()
    gaps = np.linspace(4.0e-3, 80e-3, 200)
    F = np.array([magnet_force(cfg, 0, 0, g)[2] for g in gaps])
    assert np.all(F > 0)
    assert np.all(np.diff(F) < 0)


def test_overlapping_magnets_are_rejected():
    with pytest.raises(ValueError):
        magnet_force(MagnetConfig(), 0.0, 0.0, 2e-3)
    with pytest.raises(ConfigError):
        MagnetConfig(d=3e-3)


def test_gap_kinematics(model):
    cfg = MagnetConfig()
    assert magnet_gap_kinematics(SystemState(), cfg, model) == (0.0, 0.0, cfg.d)
    s = SystemState(eta=np.array([1e-3 / model.phi_main[0], 0.0]))
    assert magnet_gap_kinematics(s, cfg, model)[2] == pytest.approx(cfg.d + 1e-3, rel=1e-12)


def test_magnet_projection_and_stiffening_sign(model):
    cfg = MagnetConfig(d=10e-3)
    s = SystemState(eta=np.array([2e-4, 1e-5]))
    free = ode_rhs(s, 0.0, model)
    loaded = ode_rhs(s, 0.0, model, (MagnetPlugin(cfg),))
    f_tip = magnet_tip_force(s, cfg, model)
    denom = 1 + model.Kn * s.eta**2
    assert loaded[2:4] - free[2:4] == pytest.approx(f_tip * model.phi_main / denom, rel=1e-10)
    # a repelling magnet under a gap-opening tip pushes harder as the gap closes: restoring stiffness
    up = magnet_tip_force(SystemState(eta=np.array([1e-4, 0.0])), cfg, model)
    down = magnet_tip_force(SystemState(eta=np.array([-1e-4, 0.0])), cfg, model)
    assert up < down
