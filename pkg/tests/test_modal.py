import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import cantilever_config
from oracles import cantilever_beta_L, fe_frequencies
from rotpeh import (HarvesterConfig, ModalError, assemble_boundary_matrix, build_sections, frequency_map,
                    modal_analysis, natural_frequencies, rms_centrifugal, section_wavenumbers)
from rotpeh.geometry import split_section
from rotpeh.modal import cantilever_modes, rms_value, scan_roots, determinant_sign

TWO_PI = 2 * np.pi


# --------------------------------------------------------------------------- building blocks


def test_rms_of_linear_profile():
    assert rms_value(lambda x: 1 - x, 1.0) == pytest.approx(np.sqrt(1 / 3), rel=1e-14)


def test_rms_of_constant_profile():
    assert rms_value(lambda x: 0 * x + 2.5, 0.3) == pytest.approx(2.5, rel=1e-14)


def test_rms_centrifugal_has_no_speed_dependence(sections):
    # the speed enters only as fc_bar * Omega^2, so the stored modes carry the same fc_bar
    a = modal_analysis(sections, 0.0).fc_bar
    b = modal_analysis(sections, 20.0).fc_bar
    assert np.array_equal(a, b)
    assert np.array_equal(a, rms_centrifugal(sections))


def test_wavenumbers_examples():
    a, b = section_wavenumbers(1.0, 1.0, 0.0, 0.0, 1.0)
    assert (a, b) == (pytest.approx(1.0), pytest.approx(1.0))
    a, b = section_wavenumbers(1.0, 1.0, 1.0, 1.0, 1.0)
    assert a == pytest.approx(np.sqrt(2), rel=1e-14) and b == pytest.approx(1.0, rel=1e-14)
    a, b = section_wavenumbers(2.0, 3.0, 0.0, 0.0, 5.0)
    assert a == pytest.approx((3 * 25 / 2) ** 0.25, rel=1e-14) and a == pytest.approx(b, rel=1e-14)


def test_boundary_matrix_clamp_row_and_finiteness(sections):
    M = assemble_boundary_matrix(sections, TWO_PI * 10, TWO_PI * 10)
    assert M.shape == (16, 16)
    assert np.all(np.isfinite(M))
    # phi(0) = A + C; the hyperbolic amplitudes are stored pre-scaled by exp(-a L)
    a, _ = section_wavenumbers(sections.YI[0], sections.m[0], rms_centrifugal(sections)[0], TWO_PI * 10,
                               TWO_PI * 10)
    row = M[0] / M[0, 2]
    assert np.allclose(row, [np.exp(-a * sections.L[0]), 0, 1, 0] + [0] * 12, rtol=1e-12, atol=0)


# --------------------------------------------------------------------------- frequencies


def _fe(sections, Omega, fc_bar=None, elements=40):
    fc_bar = rms_centrifugal(sections) if fc_bar is None else fc_bar
    return fe_frequencies(sections.L, sections.m, sections.YI, sections.Mt, sections.IM, fc_bar, Omega,
                          fold_index=sections.fold_index, elements=elements)


@pytest.mark.parametrize("drive_hz", [0.0, 5.0, 10.0, 15.0])
def test_frequencies_match_finite_element_oracle(sections, drive_hz):
    Omega = TWO_PI * drive_hz
    ours = natural_frequencies(sections, Omega)
    assert ours == pytest.approx(_fe(sections, Omega), rel=1e-6)


def test_three_section_limit_matches_oracle(config):
    # a vanishing auxiliary beam without tip mass leaves a stepped three-section cantilever;
    # the stub's own mass shifts mode 1 by about 5 * L4 (relative), hence the nanometre stub
    sec = build_sections(config.replace(L4=1e-9, M2=0.0))
    ours = natural_frequencies(sections=sec, Omega=0.0)
    three = fe_frequencies(sec.L[:3], sec.m[:3], sec.YI[:3], sec.Mt[:3], sec.IM[:3], np.zeros(3), 0.0,
                           fold_index=3)
    assert ours == pytest.approx(three, rel=1e-6)


def test_uniform_cantilever_frequency_ratio():
    sec = build_sections(cantilever_config())
    w = natural_frequencies(sec, 0.0)
    assert w[1] / w[0] == pytest.approx((4.6941 / 1.8751) ** 2, rel=5e-3)


@given(YI=st.floats(1e-4, 1e-1), m=st.floats(1e-2, 1.0), L=st.floats(0.03, 0.3))
def test_single_section_beta_L(YI, m, L):
    w, _ = cantilever_modes(YI, m, L, count=2, f_max=1e6, df=0.05 * np.sqrt(YI / m) / L**2)
    beta_L = np.sqrt(w) * (m / YI) ** 0.25 * L
    assert beta_L == pytest.approx(cantilever_beta_L(2), rel=1e-6)


def test_frequencies_continuous_in_speed(sections):
    a = natural_frequencies(sections, 0.0)
    b = natural_frequencies(sections, 0.1)
    assert np.max(np.abs(a - b)) < 1e-3


@pytest.mark.parametrize("i", range(4))
@pytest.mark.parametrize("drive_hz", [0.0, 10.0])
def test_split_section_leaves_frequencies_unchanged(sections, i, drive_hz):
    Omega = TWO_PI * drive_hz
    fc_bar = rms_centrifugal(sections)
    split = split_section(sections, i)
    # the halves carry the parent's averaged axial load
    fc_split = np.insert(fc_bar, i, fc_bar[i])
    a = natural_frequencies(sections, Omega, fc_bar=fc_bar)
    b = natural_frequencies(split, Omega, fc_bar=fc_split)
    assert np.max(np.abs(b / a - 1)) < 1e-8


@given(scale=st.floats(0.05, 20.0), drive_hz=st.sampled_from([0.0, 7.0, 12.0]))
def test_homogeneous_scaling_leaves_frequencies_unchanged(scale, drive_hz):
    sec = build_sections(HarvesterConfig())
    Omega = TWO_PI * drive_hz
    a = natural_frequencies(sec, Omega)
    b = natural_frequencies(sec.scaled(scale), Omega)
    assert b == pytest.approx(a, rel=1e-9)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_no_spurious_roots_at_finer_resolution(seed):
    rng = np.random.default_rng(seed)
    cfg = HarvesterConfig(M1=rng.uniform(1e-3, 4e-3), M2=rng.uniform(0.5e-3, 2.5e-3),
                          L3=rng.uniform(50e-3, 65e-3), L4=rng.uniform(35e-3, 45e-3))
    sec = build_sections(cfg)
    Omega = TWO_PI * rng.uniform(0, 12)
    fc_bar = rms_centrifugal(sec)

    def sign(w):
        return determinant_sign(sec, Omega, w, fc_bar)

    coarse = scan_roots(sign, 6, f_max=200.0, df=0.01)
    fine = scan_roots(sign, 6, f_max=200.0, df=0.001)
    assert len(coarse) == len(fine)
    assert np.allclose(coarse, fine, rtol=1e-8)


def test_missing_roots_are_reported(sections):
    with pytest.raises(ModalError):
        natural_frequencies(sections, 0.0, count=2, f_max=20.0)


# --------------------------------------------------------------------------- shapes


@pytest.mark.parametrize("drive_hz", [0.0, 5.0, 10.0, 15.0])
def test_mode_shape_invariants(sections, drive_hz):
    ms = modal_analysis(sections, TWO_PI * drive_hz)
    assert np.max(np.abs(ms.orthonormality - np.eye(2))) <= 1e-6
    assert np.max(np.abs(ms.frequency_residual)) <= 1e-6
    assert ms.omegas[0] < ms.omegas[1]
    for s in ms.shapes:
        x = np.linspace(0, sections.L[0], 50)
        scale = max(np.max(np.abs(s(i, np.linspace(0, sections.L[i], 50)))) for i in range(4))
        assert abs(s(0, 0.0)) <= 1e-9 * scale
        assert abs(s(0, 0.0, 1)) * sections.L[0] <= 1e-9 * scale
        # main-beam junctions: displacement, slope, moment and shear carry through
        for i in (0, 1):
            for d in (0, 1):
                assert s.tip(i, d) == pytest.approx(s(i + 1, 0.0, d), rel=1e-7, abs=1e-9 * scale / sections.L[0] ** d)
        # fold-back: displacement inverts, slope carries over
        assert s.tip(2) == pytest.approx(-s(3, 0.0), rel=1e-7, abs=1e-9 * scale)
        assert s.tip(2, 1) == pytest.approx(s(3, 0.0, 1), rel=1e-7)


def test_folded_beam_buckles_at_high_speed(sections):
    # the inward-pointing auxiliary beam is compressed by its tip mass
    with pytest.raises(ModalError):
        modal_analysis(sections, TWO_PI * 20)


def test_mode_dominance_swaps_across_veering(sections):
    below = modal_analysis(sections, TWO_PI * 10).aux_dominance()
    above = modal_analysis(sections, TWO_PI * 16).aux_dominance()
    assert below[0] < 1 < below[1]
    assert above[0] > above[1]


# --------------------------------------------------------------------------- frequency map


def test_frequency_map_static_row_and_veering(sections):
    fmap = frequency_map(sections, TWO_PI * np.arange(0, 16.01, 0.5))
    static = natural_frequencies(sections, 0.0) / TWO_PI
    assert (fmap.f1[0], fmap.f2[0]) == (pytest.approx(static[0], rel=1e-12), pytest.approx(static[1], rel=1e-12))
    assert 12 <= fmap.veering_drive_hz() <= 18
    assert np.all(fmap.mac > 0.0)


def test_truncated_map_reports_instability(sections):
    fmap = frequency_map(sections, TWO_PI * np.arange(14, 21, 1.0), truncate=True)
    assert fmap.unstable_from is not None
    assert fmap.drive_hz[-1] < fmap.unstable_from / TWO_PI
