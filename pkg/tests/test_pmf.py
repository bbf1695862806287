import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpmshape.pmf import (GridTooNarrowError, PmfError, SpectralCurve, central_lobe, curve_metrics, equivalent_length,
                          gamma_from_fwhm_match, pmf_from_domains, pmf_from_profile, pmf_gaussian, pmf_sinc, sinc,
                          sinc_half_point)
from qpmshape.poling import DomainSequence, NonlinearityProfile, sections_to_domains

L = 10e-3


def grid(length=L, lobes=8, n=4001):
    return np.linspace(-lobes * 2 * np.pi / length, lobes * 2 * np.pi / length, n)


def test_uniform_profile_is_sinc():
    dk = grid()
    raw = pmf_from_profile(NonlinearityProfile.uniform(L), dk, normalize=False)
    np.testing.assert_allclose(raw.values.real, L * sinc(dk * L / 2), atol=1e-15)
    assert np.max(np.abs(raw.values.imag)) < 1e-15


def test_zero_mismatch_gives_area():
    prof = NonlinearityProfile([-1e-3, 0, 2e-3, 2.5e-3], [0.5, 1.0, -0.25])
    val = pmf_from_profile(prof, np.zeros((1, 1)), normalize=False)
    assert val[0, 0].real == pytest.approx(0.5e-3 + 2e-3 - 0.25 * 0.5e-3)


def test_first_zero():
    prof = NonlinearityProfile.uniform(L)
    val = pmf_from_profile(prof, np.array([[2 * np.pi / L]]), normalize=False)
    assert abs(val[0, 0]) < 1e-18


def test_peak_normalization():
    c = pmf_from_profile(NonlinearityProfile.uniform(L, level=0.3), grid())
    assert np.max(np.abs(c.values)) == pytest.approx(1.0, abs=1e-12)
    assert c.scale == pytest.approx(0.3 * L)


def test_two_domain_effective_nonlinearity():
    w = 5e-6
    doms = DomainSequence([1, -1], [w, w], period=2 * w)
    raw = pmf_from_domains(doms, np.linspace(-1e3, 1e3, 33), normalize=False)
    assert np.abs(raw.values[16]) == pytest.approx(2 / np.pi * 2 * w, rel=1e-12)


def test_single_domain_at_zero_mismatch():
    w = 5e-6
    doms = DomainSequence([1], [w], period=2 * w)
    dkp = -2 * np.pi / doms.period + np.linspace(-1.0, 1.0, 17)
    raw = pmf_from_domains(doms, dkp, normalize=False)
    assert raw.values[8].real == pytest.approx(w, rel=1e-12)


def test_literal_and_exact_conventions_agree_near_qpm_peak():
    doms = sections_to_domains(_uniform_sections(50), 10.85e-6)
    dkp = grid(doms.length, lobes=3, n=301)
    exact = pmf_from_domains(doms, dkp)
    literal = pmf_from_domains(doms, dkp, convention="literal")
    lo, hi = central_lobe(exact)
    assert np.max(np.abs(np.abs(exact.values) - np.abs(literal.values))[lo:hi + 1]) < 0.01
    with pytest.raises(PmfError):
        pmf_from_domains(doms, dkp, convention="other")


def _uniform_sections(n):
    from qpmshape.poling import PolingSection

    return [PolingSection(1, n)]


def test_section_and_domain_models_agree_for_10mm_design(design_10mm):
    spec, report, prof = design_10mm
    doms = sections_to_domains(report.sections, spec.lambda_qpm)
    dk = grid(prof.length, lobes=4, n=2001)
    sec = pmf_from_profile(prof, dk)
    dom = pmf_from_domains(doms, dk)
    lo, hi = central_lobe(sec)
    assert np.max(np.abs(np.abs(sec.values) - np.abs(dom.values))[lo:hi + 1]) <= 0.02


def test_gamma_and_half_point():
    assert gamma_from_fwhm_match() == pytest.approx(0.193, abs=5e-4)
    assert sinc_half_point() == pytest.approx(1.89549, abs=1e-4)
    assert np.exp(-gamma_from_fwhm_match() * sinc_half_point() ** 2) == pytest.approx(0.5, abs=1e-12)


def test_gaussian_pmf_points():
    g = gamma_from_fwhm_match()
    dk = np.concatenate(([0.0, 2 / (L * np.sqrt(g))], np.linspace(1e4, 2e4, 16)))
    dk.sort()
    c = pmf_gaussian(dk, L)
    assert c.values[0].real == pytest.approx(1.0)
    assert c.values[1].real == pytest.approx(np.exp(-1))
    with pytest.raises(PmfError):
        pmf_gaussian(dk, -1.0)


def test_gaussian_and_sinc_fwhm_match():
    dk = grid(n=20001)
    fw_g = curve_metrics(pmf_gaussian(dk, L)).fwhm_amplitude
    fw_s = curve_metrics(pmf_sinc(dk, L)).fwhm_amplitude
    assert fw_g == pytest.approx(fw_s, rel=1e-4)
    assert fw_s == pytest.approx(7.582 / L, rel=1e-3)


def test_sidelobes():
    dk = grid(n=20001)
    assert curve_metrics(pmf_sinc(dk, L)).first_sidelobe_intensity == pytest.approx(0.0472, abs=2e-3)
    assert curve_metrics(pmf_gaussian(dk, L)).first_sidelobe_intensity == 0.0


def test_narrow_grid_is_reported():
    dk = np.linspace(-10, 10, 64)
    with pytest.raises(GridTooNarrowError):
        curve_metrics(pmf_sinc(dk, L))


def test_curve_validation():
    with pytest.raises(PmfError):
        SpectralCurve(np.arange(8.0), np.ones(8))
    with pytest.raises(PmfError):
        SpectralCurve(np.arange(20.0)[::-1], np.ones(20))
    with pytest.raises(PmfError):
        SpectralCurve(np.arange(20.0), np.zeros(20)).normalized()


def test_gaussian_fourier_pair():
    # finely stepped Gaussian profile against the analytic transform
    g = gamma_from_fwhm_match()
    edges = np.linspace(-3 * L, 3 * L, 6001)
    centers = 0.5 * (edges[1:] + edges[:-1])
    prof = NonlinearityProfile(edges, np.exp(-(centers / L) ** 2 / g))
    dk = grid(lobes=4, n=801)
    num = pmf_from_profile(prof, dk)
    assert np.max(np.abs(num.values - pmf_gaussian(dk, L).values)) <= 1e-3


def test_equivalent_length():
    assert equivalent_length(NonlinearityProfile.uniform(L, 0.5)) == pytest.approx(L)
    with pytest.raises(PmfError):
        equivalent_length(NonlinearityProfile.uniform(L, 0.0))


profiles = st.lists(st.tuples(st.floats(1e-4, 2e-3), st.floats(-1, 1)), min_size=1, max_size=8).map(
    lambda segs: NonlinearityProfile(np.concatenate(([0.0], np.cumsum([w for w, _ in segs]))) - 5e-3,
                                     np.array([v for _, v in segs])))
DK = np.linspace(-2e4, 2e4, 101)


@settings(max_examples=40, deadline=None)
@given(profiles, st.floats(-3e-3, 3e-3))
def test_shift_theorem(prof, dz):
    a = pmf_from_profile(prof, DK, normalize=False).values
    b = pmf_from_profile(prof.shifted(dz), DK, normalize=False).values
    np.testing.assert_allclose(b, a * np.exp(-1j * DK * dz), atol=1e-12 * prof.length)


@settings(max_examples=40, deadline=None)
@given(profiles, st.floats(-1, 1))
def test_linearity_and_conjugate_symmetry(prof, c):
    a = pmf_from_profile(prof, DK, normalize=False).values
    b = pmf_from_profile(prof.scaled(c), DK, normalize=False).values
    np.testing.assert_allclose(b, c * a, atol=1e-15)
    # real profile: Phi(-dk) = conj Phi(dk)
    np.testing.assert_allclose(a[::-1], np.conj(a), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(profiles)
def test_mirrored_profile_gives_conjugate(prof):
    mirrored = NonlinearityProfile(-prof.edges[::-1], prof.levels[::-1])
    a = pmf_from_profile(prof, DK, normalize=False).values
    b = pmf_from_profile(mirrored, DK, normalize=False).values
    np.testing.assert_allclose(b, np.conj(a), atol=1e-15)
