import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qpmshape.designer import (DesignSpec, InfeasibleDesignError, PolingDesigner, Target, design_profile,
                               evaluate_design, pmf_l2_error, standard_grid, target_shape)
from qpmshape.pmf import gamma_from_fwhm_match
from qpmshape.poling import NonlinearityProfile, profile_yield_ratio, sections_to_profile


def test_gaussian_target_points():
    g = gamma_from_fwhm_match()
    t = Target("gaussian", 5.67e-3)
    assert t.profile(0.0) == pytest.approx(1.0)
    assert t.profile(5.67e-3 * np.sqrt(g)) == pytest.approx(np.exp(-1))
    assert target_shape("gaussian", {"width": 5.67e-3}, [0.0])[0] == pytest.approx(1.0)


def test_tophat_profile_changes_sign_at_multiples_of_pi_over_halfwidth():
    width = 2 * np.pi / 1e-3
    half = width / 2
    t = Target("tophat", width)
    for k in (1, 2, 3):
        z0 = k * np.pi / half
        assert np.sign(t.profile(z0 * 0.99)) != np.sign(t.profile(z0 * 1.01))


def test_target_validation():
    with pytest.raises(ValueError):
        Target("square", 1.0)
    with pytest.raises(ValueError):
        Target("gaussian", 0.0)
    with pytest.raises(ValueError):
        DesignSpec(Target("gaussian", 1e-3), 10e-6, 3, 2)
    with pytest.raises(ValueError):
        DesignSpec(Target("gaussian", 1e-3), 10e-6, 1, 17)


def test_gaussian_10mm_design(design_10mm):
    spec, report, prof = design_10mm
    levels = np.abs(prof.levels)
    n = len(levels)
    # symmetric staircase, level 1 in the middle, non-increasing outward
    assert [s.order for s in report.sections] == [s.order for s in report.sections[::-1]]
    assert [s.num_domains for s in report.sections] == [s.num_domains for s in report.sections[::-1]]
    assert levels[n // 2] == pytest.approx(1.0)
    assert np.all(np.diff(levels[: n // 2 + 1]) >= 0)
    assert all(1 <= s.order <= 6 for s in report.sections)
    assert report.total_length <= spec.length_budget
    assert report.first_sidelobe_intensity <= 0.005
    assert report.error_history == sorted(report.error_history, reverse=True)


def test_refinement_never_increases_error():
    spec = DesignSpec(Target("gaussian", 3e-3), 10.85e-6, 1, 4, 6e-3)
    coarse = design_profile(spec, refine=False)
    fine = design_profile(spec)
    assert fine.pmf_l2_error <= coarse.pmf_l2_error
    hist = np.array(fine.error_history)
    assert np.all(np.diff(hist) <= 0)


def test_tophat_needs_negative_levels():
    target = Target("tophat", 2 * np.pi / 1e-3)
    with pytest.raises(InfeasibleDesignError):
        design_profile(DesignSpec(target, 10.85e-6, 1, 6, 10e-3))
    report = design_profile(DesignSpec(target, 10.85e-6, 1, 6, 10e-3, allow_negative=True))
    assert any(s.polarity < 0 for s in report.sections)


def test_uniform_target_is_degenerate():
    report = design_profile(DesignSpec(Target("uniform", 10e-3), 10e-6, 1, 1, 10e-3))
    assert len(report.sections) == 1
    assert report.pmf_l2_error == pytest.approx(0.0, abs=1e-12)
    assert report.yield_vs_uniform == pytest.approx(1.0, rel=1e-9)


def test_uniform_section_against_sinc_target():
    from qpmshape.poling import PolingSection

    metrics = evaluate_design([PolingSection(1, 500)], Target("uniform", 5e-3), 10e-6)
    assert metrics["pmf_l2_error"] == pytest.approx(0.0, abs=1e-12)
    assert metrics["yield_vs_uniform"] == pytest.approx(1.0)


def test_halving_levels_quarters_yield(design_10mm):
    _, _, prof = design_10mm
    ref = NonlinearityProfile.uniform(prof.length)
    full = profile_yield_ratio(prof, ref)
    assert profile_yield_ratio(prof.scaled(0.5), ref) == pytest.approx(0.25 * full, rel=1e-12)


def test_budget_too_small():
    with pytest.raises(InfeasibleDesignError):
        design_profile(DesignSpec(Target("gaussian", 1e-3), 10e-6, 2, 4, 50e-6))


def test_negative_target_without_permission():
    z = np.linspace(-1e-3, 1e-3, 401)
    with pytest.raises(InfeasibleDesignError):
        PolingDesigner(10e-6, 1, 4, 2e-3).fit(z, np.sinc(z / 2e-4))


def test_estimator_api():
    est = PolingDesigner(lambda_qpm=10e-6, m_min=1, m_max=3, length_budget=3e-3)
    assert est.get_params()["m_max"] == 3
    twin = clone(est).set_params(m_max=4)
    assert twin.m_max == 4 and est.m_max == 3
    with pytest.raises(NotFittedError):
        est.predict(np.zeros(3))
    t = Target("gaussian", 1e-3)
    z = np.arange(-150, 151) * 5e-6
    est.fit(z[:, None], t.profile(z))
    assert est.predict(z).shape == z.shape
    assert est.predict(np.array([0.0]))[0] == pytest.approx(1.0)
    assert sum(s.num_domains * s.order * 10e-6 for s in est.sections_) <= 3e-3 + 1e-12
    dk = standard_grid(2 * np.pi / 1e-3, 512)
    curve = est.pmf(dk)
    assert np.max(np.abs(curve.values)) == pytest.approx(1.0)
    assert pmf_l2_error(est.profile_, t.pmf(dk), dk) < 0.2


def test_profile_matches_sections(design_10mm):
    spec, report, prof = design_10mm
    again = sections_to_profile(report.sections, spec.lambda_qpm)
    np.testing.assert_array_equal(again.edges, prof.edges)
