import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from conftest import REF_M0, ref_tech
from infoshare import equilibrium as eq
from infoshare import payoff as pay
from infoshare.errors import DomainError
from infoshare.market import InfoTech, MarketParams, Regime, StrategyProfile

P = MarketParams.identical(10, 1)
NE = eq.NECategory
LN3 = math.log(3)


def near_threshold(x, thresholds, margin=0.02):
    return any(t is not None and abs(x / t - 1) < margin for t in thresholds)


def sample_outside_gaps(regime, count, rng, sigma_range, m0_range):
    points = []
    while len(points) < count:
        sigma = math.exp(rng.uniform(*np.log(sigma_range)))
        m0 = math.exp(rng.uniform(*np.log(m0_range)))
        tech = InfoTech(sigma, m0, 3.0)
        thr = eq.thresholds(regime, P, tech)
        if regime is Regime.SHARING:
            if near_threshold(m0, [thr.m0_crit]) or near_threshold(sigma, [thr.sigma_tilde, thr.sigma_hat_thr]):
                continue
            cats = eq.sharing_proposition(sigma, thr, m0)
        else:
            if near_threshold(m0, [thr.m0_low, thr.m0_mid]) or near_threshold(sigma, [thr.sigma_acute, thr.sigma_breve]):
                continue
            cats = eq.nonsharing_proposition(sigma, thr, m0)
        if NE.INDETERMINATE_BY_PROPOSITION not in cats:
            points.append(tech)
    return points


# -- thresholds ------------------------------------------------------------------


def test_threshold_ordering_at_reference_parameters():
    s = eq.sharing_thresholds(P, ref_tech(1.0))
    n = eq.nonsharing_thresholds(P, ref_tech(1.0))
    assert n.sigma_acute < n.sigma_breve
    assert s.sigma_tilde < s.sigma_hat_thr
    assert s.m0_crit == pytest.approx(36 / LN3)
    assert n.m0_low == pytest.approx(27 / (5 * LN3)) and n.m0_mid == pytest.approx(9 / LN3)


def test_thresholds_undefined_below_critical_m0():
    s = eq.sharing_thresholds(P, InfoTech(1.0, 0.5 * 36 / LN3, 3.0))
    assert s.sigma_tilde is None and s.sigma_hat_thr is None
    n = eq.nonsharing_thresholds(P, InfoTech(1.0, 4.0, 3.0))
    assert n.sigma_acute is None and n.sigma_breve is None


# -- KKT certificates -----------------------------------------------------------------


def test_kkt_boundary_when_sharing_never_pays():
    tech = InfoTech(50.0, 0.5 * 36 / LN3, 3.0)
    cert = eq.kkt_feasible(tech.m0, tech.m0, "sharing", P, tech)
    assert cert.kkt_case is eq.KKTCase.BOUNDARY_M0


def test_kkt_sharing_symmetric_stationary_point_is_not_a_maximum():
    sigma, m = 10.0, 3.0
    benefit = (sigma**2 / 9) * m**2 / ((sigma + m) ** 2 - sigma**2) ** 2
    tech = InfoTech(sigma, 6.0, math.exp(1 / (m * benefit)))
    cert = eq.kkt_feasible(m, m, "sharing", P, tech)
    assert abs(cert.foc_residual) < 1e-12
    assert cert.soc_value > 0
    assert cert.kkt_case is eq.KKTCase.INFEASIBLE


def test_kkt_free_rider_locus_interior():
    sigma = 4.0
    for m in np.linspace((math.sqrt(3) - 1) / 2 * sigma, (1 + math.sqrt(3)) / 4 * sigma, 7):
        partner = sigma**2 / (4 * m)
        h = pay.marginal_helpers(m, partner, sigma)
        tech = InfoTech(sigma, max(m, partner) * 1.5, math.exp(1 / (m * sigma**2 * h.f1 * h.f2)))
        cert = eq.kkt_feasible(m, partner, "nonsharing", P, tech)
        assert cert.kkt_case is eq.KKTCase.INTERIOR_FOC
        assert eq.free_rider_locus_feasible(m, sigma, tech.m0)


def test_kkt_zero_noise_infeasible():
    assert eq.kkt_feasible(0.0, 1.0, "sharing", P, InfoTech(4, 2, 3)).kkt_case is eq.KKTCase.INFEASIBLE


# -- interior candidates ------------------------------------------------------------------


def _quadratic_oracle(tech, b=1.0):
    s, m0, la = tech.sigma, tech.m0, tech.ln_alpha
    coeffs = [9 * b * (s + m0) ** 2, 18 * b * s * m0 * (s + m0) - s * s * m0 * m0 * la, 9 * b * s * s * m0 * m0]
    return sorted(r.real for r in np.roots(coeffs) if abs(r.imag) < 1e-9 * abs(r))


def test_sharing_interior_candidates_examples():
    assert eq.sharing_interior_candidates(P, InfoTech(50.0, 0.9 * 36 / LN3, 3.0)) == []
    assert eq.sharing_interior_candidates(P, InfoTech(90.0, 49.1543, 3.0)) == []
    tech = InfoTech(120.0, 49.1543, 3.0)
    roots = eq.sharing_interior_candidates(P, tech)
    oracle = _quadratic_oracle(tech)
    assert len(roots) == 1 and len(oracle) == 2
    assert roots[0] == pytest.approx(oracle[0], rel=1e-10)
    assert oracle[1] > tech.m0
    assert pay.marginal_sharing(roots[0], tech.m0, P, tech) == pytest.approx(0, abs=1e-12)


# -- closed-form classification -----------------------------------------------------------


def test_classify_sharing_examples():
    assert eq.classify_sharing(P, InfoTech(300.0, 0.5 * 36 / LN3, 3.0)).categories == (NE.NEITHER_INVESTS,)
    s = eq.sharing_thresholds(P, ref_tech(1.0))
    one = eq.classify_sharing(P, ref_tech(1.2 * s.sigma_hat_thr))
    assert one.categories == (NE.ONE_INVESTS,)
    m_hat = one.candidates[0].profile.m_i
    assert m_hat == eq.sharing_interior_candidates(P, ref_tech(1.2 * s.sigma_hat_thr))[0]
    assert {(c.profile.m_i, c.profile.m_j) for c in one.candidates} == {(m_hat, REF_M0), (REF_M0, m_hat)}
    assert all(c.mutual and c.global_nash for c in one.candidates)
    assert eq.classify_sharing(P, ref_tech(0.9 * s.sigma_tilde)).categories == (NE.NEITHER_INVESTS,)


def test_classify_sharing_gap_uses_numeric_fallback():
    report = eq.classify_sharing(P, ref_tech(105.0))
    assert report.in_gap and report.categories == (NE.INDETERMINATE_BY_PROPOSITION,)
    assert report.numeric is not None and report.effective_categories == (NE.ONE_INVESTS,)
    assert any("numeric" in d for d in report.diagnostics)
    assert eq.classify_sharing(P, ref_tech(100.0)).effective_categories == (NE.NEITHER_INVESTS,)


def test_classify_nonsharing_examples():
    assert eq.classify_nonsharing(P, InfoTech(100.0, 4.0, 3.0)).categories == (NE.NEITHER_INVESTS,)
    n = eq.nonsharing_thresholds(P, ref_tech(1.0))
    assert n.sigma_acute == pytest.approx(2 * REF_M0 / (math.sqrt(90) - 3))
    assert n.sigma_breve == pytest.approx(2 * REF_M0 / (math.sqrt(54) - 3))
    assert eq.classify_nonsharing(P, ref_tech(10.0)).categories == (NE.NEITHER_INVESTS,)
    report = eq.classify_nonsharing(P, ref_tech(30.0))
    assert report.categories == (NE.ONE_INVESTS, NE.BOTH_INVEST_SYMMETRIC)
    assert {c.category for c in report.candidates} == {NE.ONE_INVESTS, NE.BOTH_INVEST_SYMMETRIC}
    assert all(c.feasible for c in report.candidates)


def test_nonsharing_one_sided_feasibility_is_reported():
    s = eq.sharing_thresholds(P, ref_tech(1.0))
    report = eq.classify_nonsharing(P, ref_tech(1.2 * s.sigma_hat_thr))
    one = [c for c in report.candidates if c.category is NE.ONE_INVESTS][0]
    sym = [c for c in report.candidates if c.category is NE.BOTH_INVEST_SYMMETRIC][0]
    assert one.certificate_i.kkt_case is eq.KKTCase.INTERIOR_FOC
    assert one.certificate_j.kkt_case is eq.KKTCase.INFEASIBLE
    assert not one.global_nash
    assert sym.mutual and sym.global_nash
    assert eq.symmetric_locus_feasible(sym.profile.m_i, report.tech.sigma)
    assert any("one_sided" in d for d in report.diagnostics)


def test_report_serialization_is_deterministic():
    report = eq.classify_nonsharing(P, ref_tech(30.0))
    text = report.to_json()
    assert text == eq.classify_nonsharing(P, ref_tech(30.0)).to_json()
    data = json.loads(text)
    assert data["regime"] == "nonsharing"
    assert data["categories"] == ["one_invests", "both_invest_symmetric"]
    assert {"thresholds", "candidates", "diagnostics"} <= set(data)


def test_classification_requires_identical_products():
    with pytest.raises(DomainError):
        eq.classify_sharing(MarketParams(10, 1, 2), ref_tech(30.0))


# -- loci ----------------------------------------------------------------------------


def test_locus_examples():
    assert eq.free_rider_locus_feasible(2.0, 4.0, 10.0)
    assert not eq.free_rider_locus_feasible(1.0, 4.0, 10.0)
    upper = (1 + math.sqrt(3)) / 4 * 4.0
    assert eq.free_rider_locus_feasible(upper, 4.0, 10.0)
    assert not eq.free_rider_locus_feasible(2.0, 4.0, 1.9)
    assert eq.symmetric_locus_feasible(2.0, 5.0)
    assert not eq.symmetric_locus_feasible(2.0, 4.0)


@given(st.floats(0.01, 1e3), st.floats(0.01, 1e3), st.floats(0.0, 1.0))
def test_free_rider_implies_symmetric(sigma, m0, u):
    lo, hi = (math.sqrt(3) - 1) / 2 * sigma, (1 + math.sqrt(3)) / 4 * sigma
    m = lo + u * (hi - lo)
    if eq.free_rider_locus_feasible(m, sigma, m0):
        witness = min(m0, sigma / 4)
        assert eq.symmetric_locus_feasible(witness, sigma)


# -- best responses -----------------------------------------------------------------------


def _grid_argmax(regime, m_j, tech, points=10_000):
    grid = np.append(np.geomspace(1e-4 * tech.m0, tech.m0, points, endpoint=False), tech.m0)
    return grid[np.argmax(pay.payoff(regime, grid, m_j, P, tech))], grid


def test_best_response_without_sharing_incentive():
    tech = InfoTech(300.0, 0.5 * 36 / LN3, 3.0)
    for m_j in np.geomspace(0.01, tech.m0, 9):
        assert eq.best_response(m_j, "sharing", P, tech) == tech.m0


def test_best_response_matches_grid_oracle_and_crosses_diagonal():
    s = eq.sharing_thresholds(P, ref_tech(1.0))
    tech = ref_tech(1.2 * s.sigma_hat_thr)
    for m_j in np.geomspace(0.5, tech.m0, 15):
        br = eq.best_response(m_j, "nonsharing", P, tech)
        oracle, grid = _grid_argmax("nonsharing", m_j, tech)
        k = np.searchsorted(grid, oracle)
        assert grid[max(k - 1, 0)] * (1 - 1e-12) <= br <= grid[min(k + 1, len(grid) - 1)] * (1 + 1e-12)
    f = lambda m: eq.best_response(m, "nonsharing", P, tech) - m  # noqa: E731
    assert f(1.0) > 0 and f(tech.m0) < 0
    m_hat = brentq(f, 1.0, tech.m0, xtol=1e-12)
    assert 0 < m_hat < tech.m0
    assert eq.best_response(m_hat, "nonsharing", P, tech) == pytest.approx(m_hat, rel=1e-9)


def test_best_response_tie_breaks_toward_no_investment():
    # at the knife edge the interior maximiser and m0 give equal payoffs
    tech = _knife_edge_tech()
    assert eq.best_response(tech.m0, "sharing", P, tech) == tech.m0


@pytest.mark.parametrize("sigma", [20.0, 30.0, 60.0, 131.0, 300.0])
def test_nonsharing_best_response_non_increasing(sigma):
    tech = ref_tech(sigma)
    responses = []
    for m_j in np.geomspace(0.1, tech.m0, 60):
        br = eq.best_response(m_j, "nonsharing", P, tech)
        if br < tech.m0:
            responses.append(br)
    assert len(responses) > 5
    assert all(b <= a * (1 + 1e-9) for a, b in zip(responses, responses[1:]))


# -- grid oracle ----------------------------------------------------------------------------


def test_brute_force_examples():
    tech = InfoTech(50.0, 0.5 * 36 / LN3, 3.0)
    profiles = eq.brute_force_ne("sharing", P, tech, 200)
    assert [(p.m_i, p.m_j) for p in profiles] == [(tech.m0, tech.m0)]

    s = eq.sharing_thresholds(P, ref_tech(1.0))
    tech = ref_tech(1.2 * s.sigma_hat_thr)
    cats, profiles = eq.brute_force_categories("sharing", P, tech, 200)
    assert cats == (NE.ONE_INVESTS,)
    pairs = {(p.m_i, p.m_j) for p in profiles}
    assert any(b == tech.m0 for a, b in pairs) and any(a == tech.m0 for a, b in pairs)
    assert all({a, b} & {tech.m0} for a, b in pairs)

    cats, _ = eq.brute_force_categories("nonsharing", P, ref_tech(30.0), 200)
    assert NE.BOTH_INVEST_SYMMETRIC in cats
    with pytest.raises(ValueError):
        eq.brute_force_ne("sharing", P, tech, 10)


@pytest.mark.parametrize("regime", list(Regime))
def test_classification_agrees_with_grid_oracle(regime):
    rng = np.random.default_rng(17 if regime is Regime.SHARING else 18)
    ranges = ((0.5, 500.0), (0.5, 500.0)) if regime is Regime.SHARING else ((1.0, 250.0), (1.0, 100.0))
    for tech in sample_outside_gaps(regime, 20, rng, *ranges):
        report = eq.classify(regime, P, tech)
        cats, _ = eq.brute_force_categories(regime, P, tech, 200)
        assert eq.agrees_with_grid(report, cats), (tech, report.label, cats)


def test_sharing_never_has_both_investing():
    rng = np.random.default_rng(3)
    for _ in range(40):
        tech = InfoTech(math.exp(rng.uniform(0, 6.5)), math.exp(rng.uniform(0, 5.5)), 3.0)
        cats, _ = eq.brute_force_categories("sharing", P, tech, 120)
        assert NE.BOTH_INVEST_SYMMETRIC not in cats and NE.BOTH_INVEST_ASYMMETRIC not in cats
        for c in eq.structural_candidates("sharing", P, tech):
            if c.category is NE.BOTH_INVEST_SYMMETRIC:
                assert not c.feasible


# -- epsilon equilibria ------------------------------------------------------------------------


def _sharing_one_invests():
    s = eq.sharing_thresholds(P, ref_tech(1.0))
    tech = ref_tech(1.2 * s.sigma_hat_thr)
    return tech, eq.classify_sharing(P, tech).candidates[0].profile


def test_epsilon_check_exact_equilibrium():
    tech, profile = _sharing_one_invests()
    check = eq.epsilon_ne_check(profile, "sharing", P, tech, 0.0, 0.0)
    assert check.epsilon == 0 and not check.violated and check.witness is None
    assert eq.epsilon_ne_check(profile, "sharing", P, tech, 0.1, 0.2).epsilon == pytest.approx(0.3)


def test_epsilon_check_reports_witness():
    tech, profile = _sharing_one_invests()
    ratio = eq.strategy_grid(P, tech, 400).ratio
    moved = StrategyProfile(profile.m_i * ratio, profile.m_j, "sharing")
    check = eq.epsilon_ne_check(moved, "sharing", P, tech, 0.0, 0.0)
    assert check.violated and check.witness is not None
    gain = check.witness.gain
    assert check.witness.player == "i" and gain > 0
    assert gain == pytest.approx(
        pay.payoff_sharing(check.witness.m, profile.m_j, P, tech) - pay.payoff_sharing(moved.m_i, moved.m_j, P, tech)
    )
    assert not eq.epsilon_ne_check(moved, "sharing", P, tech, gain, gain).violated
    with pytest.raises(ValueError):
        eq.epsilon_ne_check(moved, "sharing", P, tech, -1.0, 0.0)


# -- mutual exclusion ----------------------------------------------------------------------------


def _knife_edge_tech():
    s = eq.sharing_thresholds(P, ref_tech(1.0))
    gap = lambda sigma: eq.exclusion_status(P, ref_tech(sigma), "sharing").payoff_gap  # noqa: E731
    return ref_tech(brentq(gap, s.sigma_tilde * 1.001, s.sigma_hat_thr, xtol=1e-13))


def test_mutual_exclusion_examples():
    s = eq.sharing_thresholds(P, ref_tech(1.0))
    high = eq.exclusion_status(P, ref_tech(1.2 * s.sigma_hat_thr), "sharing")
    assert high.one_invests_ne and not high.neither_ne and high.holds
    low = eq.exclusion_status(P, ref_tech(0.9 * s.sigma_tilde), "sharing")
    assert low.neither_ne and not low.one_invests_ne and low.holds
    assert eq.mutually_exclusive_check(P, ref_tech(1.2 * s.sigma_hat_thr), "sharing")


def test_mutual_exclusion_knife_edge():
    tech = _knife_edge_tech()
    status = eq.exclusion_status(P, tech, "sharing")
    assert abs(status.payoff_gap) <= 1e-9
    assert status.one_invests_ne and status.neither_ne
    assert status.knife_edge and status.holds
    assert eq.mutually_exclusive_check(P, tech, "sharing")
