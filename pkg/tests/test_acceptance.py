"""One test per acceptance criterion; each records a PASS/FAIL line for the summary."""

import math
import time

import numpy as np

from conftest import REF_M0, record_acceptance, ref_tech
from infoshare import equilibrium as eq
from infoshare import payoff as pay
from infoshare import tailsim
from infoshare.market import InfoTech, MarketParams, Regime, StrategyProfile
from infoshare.production import affine_fixed_point_residuals, nonsharing_coefficients
from infoshare.regions import REGION_A, REGION_B, regime_comparison
from test_equilibrium import sample_outside_gaps

P = MarketParams.identical(10, 1)
NE = eq.NECategory


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_1_thresholds():
    t0 = time.perf_counter()
    tech = ref_tech(1.0)
    s = eq.sharing_thresholds(P, tech)
    n = eq.nonsharing_thresholds(P, tech)
    expected = {
        "sigma_tilde": (s.sigma_tilde, 2 * REF_M0),
        "sigma_hat_thr": (s.sigma_hat_thr, REF_M0 / (math.sqrt(6) - 2)),
        "sigma_acute": (n.sigma_acute, 2 * REF_M0 / (math.sqrt(90) - 3)),
        "sigma_breve": (n.sigma_breve, 2 * REF_M0 / (math.sqrt(54) - 3)),
        "Gamma^2": (s.gamma**2, 6.0),
        "gamma_tilde": (n.gamma_tilde, 90.0),
        "gamma_hat": (n.gamma_hat, 54.0),
    }
    worst = max(_rel(got, want) for got, want in expected.values())
    elapsed = time.perf_counter() - t0
    passed = worst <= 1e-9 and elapsed < 1.0
    values = ", ".join(f"{k}={v[0]:.6f}" for k, v in expected.items())
    record_acceptance(1, "threshold reproduction", passed, f"max rel err {worst:.1e}; {values}")
    assert passed


def test_criterion_2_figure_captions():
    t0 = time.perf_counter()
    s = eq.sharing_thresholds(P, ref_tech(1.0))
    low = eq.classify_sharing(P, ref_tech(0.9 * s.sigma_tilde))
    high = eq.classify_sharing(P, ref_tech(1.2 * s.sigma_hat_thr))
    private = eq.classify_nonsharing(P, ref_tech(1.2 * s.sigma_hat_thr))
    certified = {c.category for c in private.candidates if c.feasible}
    elapsed = time.perf_counter() - t0
    passed = (
        low.categories == (NE.NEITHER_INVESTS,)
        and high.categories == (NE.ONE_INVESTS,)
        and {NE.ONE_INVESTS, NE.BOTH_INVEST_SYMMETRIC} <= certified
        and elapsed < 1.0
    )
    record_acceptance(
        2,
        "figure-caption behaviour",
        passed,
        f"sharing 0.9*sigma_tilde -> {low.label}, 1.2*sigma_hat_thr -> {high.label}; "
        f"no sharing -> {sorted(c.value for c in certified)}; {elapsed:.2f}s",
    )
    assert passed


def test_criterion_3_oracle_equivalence():
    t0 = time.perf_counter()
    counts, disagreements = {}, []
    for regime, seed, ranges in (
        (Regime.SHARING, 101, ((0.5, 500.0), (0.5, 500.0))),
        (Regime.NON_SHARING, 102, ((1.0, 250.0), (1.0, 100.0))),
    ):
        points = sample_outside_gaps(regime, 25, np.random.default_rng(seed), *ranges)
        counts[regime.value] = len(points)
        for tech in points:
            report = eq.classify(regime, P, tech)
            cats, _ = eq.brute_force_categories(regime, P, tech, 200)
            if not eq.agrees_with_grid(report, cats):
                disagreements.append((regime.value, tech.sigma, tech.m0))
    elapsed = time.perf_counter() - t0
    passed = not disagreements and min(counts.values()) >= 20 and elapsed < 60
    record_acceptance(3, "oracle equivalence", passed, f"points {counts}, disagreements {len(disagreements)}, {elapsed:.1f}s")
    assert passed, disagreements


def test_criterion_4_gradient_checks():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        tech = InfoTech(math.exp(rng.uniform(-0.7, 6.2)), math.exp(rng.uniform(-0.7, 6.2)), rng.uniform(1.2, 20))
        m_i, m_j = rng.uniform(0.02, 0.98) * tech.m0, rng.uniform(0.02, 1.0) * tech.m0
        h = 1e-5 * m_i
        for regime in Regime:
            fd1 = (pay.payoff(regime, m_i + h, m_j, P, tech) - pay.payoff(regime, m_i - h, m_j, P, tech)) / (2 * h)
            fd2 = (pay.marginal(regime, m_i + h, m_j, P, tech) - pay.marginal(regime, m_i - h, m_j, P, tech)) / (2 * h)
            worst = max(
                worst,
                _rel(fd1, pay.marginal(regime, m_i, m_j, P, tech)),
                _rel(fd2, pay.second_derivative(regime, m_i, m_j, P, tech)),
            )
    elapsed = time.perf_counter() - t0
    passed = worst <= 1e-6 and elapsed < 5
    record_acceptance(4, "gradient checks", passed, f"1000 points x 2 regimes, max rel err {worst:.1e}, {elapsed:.2f}s")
    assert passed


def test_criterion_5_affine_fixed_point():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        params = MarketParams.identical(rng.uniform(1, 50), rng.uniform(0.2, 5))
        sigma, m_i, m_j = np.exp(rng.uniform(np.log(0.01), np.log(100), 3))
        r_i = nonsharing_coefficients(sigma, m_i, m_j, params)
        r_j = nonsharing_coefficients(sigma, m_j, m_i, params)
        worst = max(worst, *map(abs, affine_fixed_point_residuals(r_i, r_j, sigma, m_i, m_j, params)))
    worked = nonsharing_coefficients(4.0, 2.0, 2.0, P).alpha1
    elapsed = time.perf_counter() - t0
    passed = worst <= 1e-12 and worked == -0.25 and elapsed < 1
    record_acceptance(5, "affine-rule fixed point", passed, f"max residual {worst:.1e}, alpha1(4,2,2) = {worked}, {elapsed:.2f}s")
    assert passed


def test_criterion_6_monte_carlo():
    t0 = time.perf_counter()
    tech = InfoTech(4.0, 2.0, 3.0)
    details, passed = [], True
    for regime, target in ((Regime.SHARING, 11.4667), (Regime.NON_SHARING, 11.4861)):
        res = tailsim.simulate_stage2(StrategyProfile(2.0, 2.0, regime), P, tech, 10**6, seed=2024)
        closed = pay.payoff(regime, 2.0, 2.0, P, tech)
        z = abs(res.mean_profit - closed) / res.profit_std_error
        passed &= z <= 3 and abs(closed - target) < 5e-5
        details.append(f"{regime.value} {res.mean_profit:.4f} vs {closed:.4f} ({z:.2f} SE)")
    elapsed = time.perf_counter() - t0
    passed &= elapsed < 60
    record_acceptance(6, "Monte-Carlo payoff validation", passed, "; ".join(details) + f"; {elapsed:.1f}s")
    assert passed


def test_criterion_7_structural_properties():
    rng = np.random.default_rng(7)
    failures = []
    # (i) symmetric stationary points under sharing are local minima
    for _ in range(300):
        sigma, m = math.exp(rng.uniform(-2, 4)), math.exp(rng.uniform(-2, 4))
        benefit = (sigma**2 / 9) * m**2 / ((sigma + m) ** 2 - sigma**2) ** 2
        if 1 / (m * benefit) > 700:
            continue
        tech = InfoTech(sigma, 2 * m, math.exp(1 / (m * benefit)))
        if not pay.second_derivative_sharing(m, m, P, tech) > 0:
            failures.append(("i", sigma, m))
    # (ii) free-rider feasibility implies symmetric feasibility
    for _ in range(300):
        sigma, m0 = math.exp(rng.uniform(-2, 6)), math.exp(rng.uniform(-2, 6))
        lo, hi = (math.sqrt(3) - 1) / 2 * sigma, (1 + math.sqrt(3)) / 4 * sigma
        m = rng.uniform(lo, hi)
        if eq.free_rider_locus_feasible(m, sigma, m0) and not eq.symmetric_locus_feasible(min(m0, sigma / 4), sigma):
            failures.append(("ii", sigma, m0))
    # (iii) best response non-increasing without sharing
    for sigma in (25.0, 40.0, 80.0, 131.2, 250.0):
        tech = ref_tech(sigma)
        seq = [eq.best_response(m, "nonsharing", P, tech) for m in np.geomspace(0.1, REF_M0, 40)]
        seq = [b for b in seq if b < REF_M0]
        if any(b > a * (1 + 1e-9) for a, b in zip(seq, seq[1:])):
            failures.append(("iii", sigma))
    # (iv) epsilon-equilibrium checker
    s = eq.sharing_thresholds(P, ref_tech(1.0))
    tech = ref_tech(1.2 * s.sigma_hat_thr)
    profile = eq.classify_sharing(P, tech).candidates[0].profile
    if eq.epsilon_ne_check(profile, "sharing", P, tech, 0.0, 0.0).violated:
        failures.append(("iv", "exact"))
    ratio = eq.strategy_grid(P, tech, 400).ratio
    moved = StrategyProfile(profile.m_i * ratio, profile.m_j, "sharing")
    if not eq.epsilon_ne_check(moved, "sharing", P, tech, 0.0, 0.0).violated:
        failures.append(("iv", "perturbed"))
    passed = not failures
    record_acceptance(7, "structural property suite", passed, f"{len(failures)} failures")
    assert passed, failures


def test_criterion_8_policy_comparison():
    t0 = time.perf_counter()
    grid = regime_comparison(resolution=(200, 200))
    first = time.perf_counter() - t0
    again = regime_comparison(resolution=(200, 200))
    identical = grid.to_csv().encode() == again.to_csv().encode() and grid.summary_json() == again.summary_json()
    r, c = grid.cell_at(30.0, REF_M0)
    label_a = grid.comparison[r, c]
    r, c = grid.cell_at(130.0, REF_M0)
    label_b = grid.comparison[r, c]
    fr = grid.area_fractions()
    passed = label_a == REGION_A and label_b == REGION_B and fr["A"] > 0 and fr["B"] > 0 and identical and first < 30
    record_acceptance(
        8,
        "policy-comparison reproduction",
        passed,
        f"probe(30) -> {label_a}, probe(130) -> {label_b}, area A {fr['A']:.3f}, B {fr['B']:.3f}, "
        f"byte-identical {identical}, {first:.1f}s at 200x200",
    )
    assert passed
