"""Best responses, KKT certificates and Nash-equilibrium classification.

The closed-form classifiers apply the threshold results for each regime.
Where those results are silent (the "gaps") the report carries a numeric
answer from the grid oracle instead, labelled as such.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from infoshare import payoff as pay
from infoshare.errors import InternalError
from infoshare.market import REL_TOL, InfoTech, MarketParams, Regime, StrategyProfile

SQRT3 = math.sqrt(3.0)


class NECategory(str, enum.Enum):
    NEITHER_INVESTS = "neither_invests"
    ONE_INVESTS = "one_invests"
    BOTH_INVEST_SYMMETRIC = "both_invest_symmetric"
    BOTH_INVEST_ASYMMETRIC = "both_invest_asymmetric"
    INDETERMINATE_BY_PROPOSITION = "indeterminate_by_proposition"


_CATEGORY_ORDER = list(NECategory)


def _sorted_categories(cats: Iterable[NECategory]) -> tuple[NECategory, ...]:
    return tuple(sorted(set(cats), key=_CATEGORY_ORDER.index))


def category_label(cats: Iterable[NECategory]) -> str:
    return "+".join(c.value for c in _sorted_categories(cats))


# -- tolerant comparisons against thresholds ---------------------------------


def _lt(x, t):
    return t is not None and x < t * (1 - REL_TOL)


def _le(x, t):
    return t is not None and x <= t * (1 + REL_TOL)


def _gt(x, t):
    return t is not None and x > t * (1 + REL_TOL)


def _ge(x, t):
    return t is not None and x >= t * (1 - REL_TOL)


# -- thresholds ----------------------------------------------------------------


@dataclass(frozen=True)
class SharingThresholds:
    """Critical values for the pooled-signal regime.

    ``sigma_tilde`` and ``sigma_hat_thr`` are None unless
    ``m0 * ln(alpha) > 36 b`` (equivalently ``gamma > 2``).
    """

    m0_crit: float
    sigma_tilde: float | None
    gamma: float
    sigma_hat_thr: float | None

    def to_dict(self) -> dict:
        return {
            "m0_crit": self.m0_crit,
            "sigma_tilde": self.sigma_tilde,
            "Gamma": self.gamma,
            "sigma_hat_thr": self.sigma_hat_thr,
        }


@dataclass(frozen=True)
class NonSharingThresholds:
    m0_low: float
    m0_mid: float
    gamma_tilde: float
    gamma_hat: float
    sigma_acute: float | None
    sigma_breve: float | None

    def to_dict(self) -> dict:
        return {
            "m0_low": self.m0_low,
            "m0_mid": self.m0_mid,
            "gamma_tilde": self.gamma_tilde,
            "gamma_hat": self.gamma_hat,
            "sigma_acute": self.sigma_acute,
            "sigma_breve": self.sigma_breve,
        }


def sharing_thresholds(params: MarketParams, tech: InfoTech) -> SharingThresholds:
    b, la, m0 = params.b, tech.ln_alpha, tech.m0
    excess = m0 * la - 36 * b
    gamma = math.sqrt(m0 * la / (9 * b))
    return SharingThresholds(
        m0_crit=36 * b / la,
        sigma_tilde=36 * b * m0 / excess if excess > 0 else None,
        gamma=gamma,
        sigma_hat_thr=m0 / (gamma - 2) if gamma > 2 else None,
    )


def nonsharing_thresholds(params: MarketParams, tech: InfoTech) -> NonSharingThresholds:
    b, la, m0 = params.b, tech.ln_alpha, tech.m0
    g_tilde = 5 * m0 * la / (3 * b)
    g_hat = m0 * la / b
    return NonSharingThresholds(
        m0_low=27 * b / (5 * la),
        m0_mid=9 * b / la,
        gamma_tilde=g_tilde,
        gamma_hat=g_hat,
        # (2 m0 + 3 s)^2 = s^2 gamma has a positive root only for gamma > 9
        sigma_acute=2 * m0 / (math.sqrt(g_tilde) - 3) if g_tilde > 9 else None,
        sigma_breve=2 * m0 / (math.sqrt(g_hat) - 3) if g_hat > 9 else None,
    )


def thresholds(regime, params: MarketParams, tech: InfoTech):
    if Regime.parse(regime) is Regime.SHARING:
        return sharing_thresholds(params, tech)
    return nonsharing_thresholds(params, tech)


def stationary_floor(params: MarketParams, tech: InfoTech) -> float:
    """Noise level below which J_i is strictly increasing in m_i, in both regimes.

    The information term of the marginal is at most 5/(12b) while the cost
    term is 1/(m ln alpha), so no stationary point lies below 12b/(5 ln alpha).
    """
    return 12 * params.b / (5 * tech.ln_alpha)


# -- KKT certificates --------------------------------------------------------------


class KKTCase(str, enum.Enum):
    INTERIOR_FOC = "interior_foc"
    BOUNDARY_M0 = "boundary_m0"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class FeasibilityCertificate:
    """Outcome of the first/second-order test for player i at ``point``.

    ``foc_residual`` is the marginal payoff scaled by ``m_i ln(alpha)``, i.e.
    relative to the marginal investment cost, so it is dimensionless.
    """

    point: tuple[float, float]
    regime: Regime
    kkt_case: KKTCase
    foc_residual: float | None
    soc_value: float | None
    marginal: float | None = None

    @property
    def feasible(self) -> bool:
        return self.kkt_case is not KKTCase.INFEASIBLE

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "regime": self.regime.value,
            "kkt_case": self.kkt_case.value,
            "foc_residual": self.foc_residual,
            "soc_value": self.soc_value,
            "marginal": self.marginal,
        }


def kkt_feasible(
    m_i: float,
    m_j: float,
    regime,
    params: MarketParams,
    tech: InfoTech,
    tol: float = 1e-9,
) -> FeasibilityCertificate:
    """Classify ``m_i`` as a response to ``m_j`` by the three KKT cases.

    ``m_i = m0`` is feasible when the marginal there is non-negative; an
    interior ``m_i`` needs a vanishing marginal and a non-positive second
    derivative; ``m_i = 0`` never qualifies.
    """
    regime = Regime.parse(regime)
    point = (float(m_i), float(m_j))
    if m_i <= 0:
        return FeasibilityCertificate(point, regime, KKTCase.INFEASIBLE, None, None)
    m_i = min(float(m_i), tech.m0)
    d1 = float(pay.marginal(regime, m_i, m_j, params, tech))
    d2 = float(pay.second_derivative(regime, m_i, m_j, params, tech))
    residual = d1 * m_i * tech.ln_alpha
    if math.isclose(m_i, tech.m0, rel_tol=1e-12):
        case = KKTCase.BOUNDARY_M0 if residual >= -tol else KKTCase.INFEASIBLE
    # the curvature test admits rounding noise relative to the cost curvature,
    # so points where J'' vanishes analytically count as (weak) maxima
    elif abs(residual) <= tol and d2 <= 1e-12 / (m_i * m_i * tech.ln_alpha):
        case = KKTCase.INTERIOR_FOC
    else:
        case = KKTCase.INFEASIBLE
    return FeasibilityCertificate(point, regime, case, residual, d2, d1)


# -- stationary points and best responses ------------------------------------


def _refine_root(f: Callable[[float], float], lo: float, hi: float) -> float:
    flo, fhi = f(lo), f(hi)
    if fhi == 0:
        return hi
    if flo == 0:
        return lo
    return brentq(f, lo, hi, xtol=1e-300, rtol=1e-13, maxiter=500)


def _scan_axis(params: MarketParams, tech: InfoTech, points: int) -> np.ndarray | None:
    lo = stationary_floor(params, tech)
    if lo >= tech.m0:
        return None
    axis = np.geomspace(lo, tech.m0, points)
    axis[-1] = tech.m0
    return axis


def _local_maximizers(f_vec, f_scalar, axis) -> list[float]:
    """Roots where ``f`` crosses from positive to non-positive along ``axis``."""
    values = f_vec(axis)
    roots = []
    for k in np.nonzero((values[:-1] > 0) & (values[1:] <= 0))[0]:
        roots.append(_refine_root(f_scalar, axis[k], axis[k + 1]))
    return roots


def interior_maximizers(
    m_j: float, regime, params: MarketParams, tech: InfoTech, scan_points: int = 512
) -> list[float]:
    """Interior local maxima of ``J_i(., m_j)``: marginal zero, sign + to -."""
    regime = Regime.parse(regime)
    axis = _scan_axis(params, tech, scan_points)
    if axis is None:
        return []
    roots = _local_maximizers(
        lambda m: pay.marginal(regime, m, m_j, params, tech),
        lambda m: float(pay.marginal(regime, m, m_j, params, tech)),
        axis,
    )
    return [r for r in roots if not math.isclose(r, tech.m0, rel_tol=1e-12)]


def symmetric_stationary_points(
    regime, params: MarketParams, tech: InfoTech, scan_points: int = 512
) -> list[float]:
    """Points ``m`` with ``J_i'(m, m) = 0`` where the diagonal marginal falls through zero."""
    regime = Regime.parse(regime)
    axis = _scan_axis(params, tech, scan_points)
    if axis is None:
        return []
    roots = _local_maximizers(
        lambda m: pay.marginal(regime, m, m, params, tech),
        lambda m: float(pay.marginal(regime, m, m, params, tech)),
        axis,
    )
    return [r for r in roots if not math.isclose(r, tech.m0, rel_tol=1e-12)]


def _payoff_tie_tol(value: float) -> float:
    return 1e-12 * (1.0 + abs(value))


def best_response_with_value(
    m_j: float, regime, params: MarketParams, tech: InfoTech, scan_points: int = 512
) -> tuple[float, float]:
    regime = Regime.parse(regime)
    candidates = interior_maximizers(m_j, regime, params, tech, scan_points)
    m0 = tech.m0
    if pay.marginal(regime, m0, m_j, params, tech) >= 0:
        candidates.append(m0)
    if not candidates:
        raise InternalError(f"no KKT candidate for best response to m_j={m_j}")
    values = [float(pay.payoff(regime, m, m_j, params, tech)) for m in candidates]
    k = int(np.argmax(values))
    best_m, best_v = candidates[k], values[k]
    if m0 in candidates:
        v0 = values[candidates.index(m0)]
        # deterministic tie-break toward no investment
        if v0 >= best_v - _payoff_tie_tol(best_v):
            return m0, v0
    return best_m, best_v


def best_response(m_j: float, regime, params: MarketParams, tech: InfoTech, scan_points: int = 512) -> float:
    """Global maximiser of ``J_i(., m_j)`` over (0, m0] among the KKT candidates."""
    return best_response_with_value(m_j, regime, params, tech, scan_points)[0]


def is_global_best_response(
    m_i: float, m_j: float, regime, params: MarketParams, tech: InfoTech, tol: float = 1e-9
) -> bool:
    _, best_v = best_response_with_value(m_j, regime, params, tech)
    own = float(pay.payoff(regime, m_i, m_j, params, tech))
    return own >= best_v - tol * (1.0 + abs(best_v))


# -- sharing interior candidates (closed form) ------------------------------------


def sharing_interior_candidates(params: MarketParams, tech: InfoTech) -> list[float]:
    """Real roots in (0, m0] of the stationarity quadratic for ``J_i'(m, m0) = 0``."""
    b, s, m0, la = params.b, tech.sigma, tech.m0, tech.ln_alpha
    A = 9 * b * (s + m0) ** 2
    B = 18 * b * s * m0 * (s + m0) - s * s * m0 * m0 * la
    C = 9 * b * s * s * m0 * m0
    disc = s**3 * m0**3 * la * (s * m0 * la - 36 * b * (s + m0))
    if disc < 0:
        return []
    root = math.sqrt(disc)
    # stable form of the quadratic formula
    q = -0.5 * (B + math.copysign(root, B))
    roots = sorted({q / A, C / q}) if q != 0 else [-B / (2 * A)]
    return [r for r in roots if 0 < r <= m0 * (1 + 1e-12)]


# -- free-rider and symmetric loci (private signals) ---------------------------


def free_rider_locus_feasible(m: float, sigma: float, m0: float) -> bool:
    """Whether ``(m, sigma**2 / (4 m))`` can be a local-maximum profile without sharing."""
    lower = (SQRT3 - 1) / 2 * sigma
    upper = (1 + SQRT3) / 4 * sigma
    partner = sigma * sigma / (4 * m)
    return lower <= m <= upper and 2 * m0 > sigma and partner <= m0 and m <= m0


def symmetric_locus_feasible(m: float, sigma: float) -> bool:
    """Sufficient condition for a symmetric stationary point to be a local maximum."""
    return sigma > 2 * m


# -- candidate equilibria ----------------------------------------------------------


@dataclass(frozen=True)
class CandidateEquilibrium:
    """A profile of a given category with both players' KKT certificates.

    ``feasible`` follows the per-player notion used by the threshold results:
    the first listed player (the investor, where one exists) passes the KKT
    test.  ``mutual`` asks the same of both players, and ``global_nash``
    compares each player's payoff to its global best response.
    """

    profile: StrategyProfile
    category: NECategory
    certificate_i: FeasibilityCertificate
    certificate_j: FeasibilityCertificate
    global_nash: bool

    @property
    def feasible(self) -> bool:
        return self.certificate_i.feasible

    @property
    def mutual(self) -> bool:
        return self.certificate_i.feasible and self.certificate_j.feasible

    def to_dict(self) -> dict:
        return {
            "profile": self.profile.to_dict(),
            "category": self.category.value,
            "feasible": self.feasible,
            "mutual": self.mutual,
            "global_nash": self.global_nash,
            "certificate_i": self.certificate_i.to_dict(),
            "certificate_j": self.certificate_j.to_dict(),
        }


def _candidate(m_i, m_j, category, regime, params, tech) -> CandidateEquilibrium:
    cert_i = kkt_feasible(m_i, m_j, regime, params, tech)
    cert_j = kkt_feasible(m_j, m_i, regime, params, tech)
    nash = is_global_best_response(m_i, m_j, regime, params, tech) and is_global_best_response(
        m_j, m_i, regime, params, tech
    )
    return CandidateEquilibrium(StrategyProfile(m_i, m_j, regime), category, cert_i, cert_j, nash)


def structural_candidates(regime, params: MarketParams, tech: InfoTech) -> list[CandidateEquilibrium]:
    """Every profile of the form (m0, m0), (m, m0) or (m, m) passing a first-order screen."""
    regime = Regime.parse(regime)
    m0 = tech.m0
    out = [_candidate(m0, m0, NECategory.NEITHER_INVESTS, regime, params, tech)]
    for m in interior_maximizers(m0, regime, params, tech):
        out.append(_candidate(m, m0, NECategory.ONE_INVESTS, regime, params, tech))
    for m in symmetric_stationary_points(regime, params, tech):
        out.append(_candidate(m, m, NECategory.BOTH_INVEST_SYMMETRIC, regime, params, tech))
    return out


# -- brute-force oracle ----------------------------------------------------------------


@dataclass(frozen=True)
class StrategyGrid:
    """Log-spaced strategies ending exactly at m0; ``ratio`` is one cell."""

    points: np.ndarray
    ratio: float


def strategy_grid(params: MarketParams, tech: InfoTech, grid_size: int) -> StrategyGrid:
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    m0 = tech.m0
    lo = min(0.5 * stationary_floor(params, tech), 1e-3 * m0)
    pts = np.append(np.geomspace(lo, m0, grid_size, endpoint=False), m0)
    return StrategyGrid(pts, (m0 / lo) ** (1.0 / grid_size))


def _grid_equilibria(regime, params, tech, grid: StrategyGrid) -> list[tuple[int, int]]:
    g = grid.points
    M = np.asarray(pay.payoff(regime, g[:, None], g[None, :], params, tech))
    col_max = M.max(axis=0)
    is_br = M >= col_max[None, :] - 1e-12 * (1.0 + np.abs(col_max[None, :]))
    return [(int(k), int(l)) for k, l in np.argwhere(is_br & is_br.T)]


def brute_force_ne(regime, params: MarketParams, tech: InfoTech, grid_size: int = 200) -> list[StrategyProfile]:
    """All grid profiles where each player's strategy is a grid argmax against the other.

    Independent of the closed forms for best responses and thresholds; only
    the payoff function is shared.
    """
    if grid_size < 50:
        raise ValueError("grid_size must be at least 50")
    regime = Regime.parse(regime)
    grid = strategy_grid(params, tech, grid_size)
    g = grid.points
    return [StrategyProfile(float(g[k]), float(g[l]), regime) for k, l in _grid_equilibria(regime, params, tech, grid)]


def profile_category(profile: StrategyProfile, m0: float, cell_ratio: float) -> NECategory:
    """Category of a grid profile, allowing one grid cell of slack."""
    near = m0 / cell_ratio * (1 - 1e-12)
    at_i, at_j = profile.m_i >= near, profile.m_j >= near
    if at_i and at_j:
        return NECategory.NEITHER_INVESTS
    if at_i or at_j:
        return NECategory.ONE_INVESTS
    hi, lo = max(profile.m_i, profile.m_j), min(profile.m_i, profile.m_j)
    if hi / lo <= cell_ratio * (1 + 1e-9):
        return NECategory.BOTH_INVEST_SYMMETRIC
    return NECategory.BOTH_INVEST_ASYMMETRIC


def brute_force_categories(
    regime, params: MarketParams, tech: InfoTech, grid_size: int = 200
) -> tuple[tuple[NECategory, ...], list[StrategyProfile]]:
    profiles = brute_force_ne(regime, params, tech, grid_size)
    ratio = strategy_grid(params, tech, grid_size).ratio
    cats = _sorted_categories(profile_category(p, tech.m0, ratio) for p in profiles)
    return cats, profiles


# -- epsilon-equilibrium check ----------------------------------------------------------


@dataclass(frozen=True)
class Deviation:
    player: str
    m: float
    gain: float


@dataclass(frozen=True)
class EpsilonCheck:
    epsilon: float
    max_gain: float
    violated: bool
    witness: Deviation | None

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "max_gain": self.max_gain,
            "violated": self.violated,
            "witness": None if self.witness is None else vars(self.witness).copy(),
        }


def epsilon_ne_check(
    profile: StrategyProfile,
    regime,
    params: MarketParams,
    tech: InfoTech,
    eta: float,
    delta: float,
    grid_size: int = 400,
    payoff_fn: Callable | None = None,
) -> EpsilonCheck:
    """Check that no unilateral deviation gains more than ``eta + delta``.

    Deviations are searched on a log grid over (0, m0]; with the default
    closed-form payoff the exact best response is added to the grid.
    ``payoff_fn(m_i, m_j)`` may replace the payoff, e.g. with a simulated one.
    """
    if eta < 0 or delta < 0:
        raise ValueError("eta and delta must be non-negative")
    regime = Regime.parse(regime)
    epsilon = eta + delta
    closed_form = payoff_fn is None
    if closed_form:
        payoff_fn = lambda mi, mj: pay.payoff(regime, mi, mj, params, tech)  # noqa: E731
    grid = strategy_grid(params, tech, grid_size).points
    max_gain, witness = -math.inf, None
    for player, own, other in (("i", profile.m_i, profile.m_j), ("j", profile.m_j, profile.m_i)):
        devs = grid
        if closed_form:
            devs = np.append(grid, best_response(other, regime, params, tech))
        base = float(payoff_fn(own, other))
        gains = np.asarray(payoff_fn(devs, np.full_like(devs, other)), dtype=float) - base
        k = int(np.argmax(gains))
        if gains[k] > max_gain:
            max_gain = float(gains[k])
            witness = Deviation(player, float(devs[k]), max_gain)
    atol = 1e-10 * (1.0 + abs(float(payoff_fn(profile.m_i, profile.m_j))))
    violated = max_gain > epsilon + atol
    return EpsilonCheck(epsilon, max_gain, violated, witness if violated else None)


# -- mutual exclusion of (m_hat, m0) and (m0, m0) ------------------------------------


@dataclass(frozen=True)
class ExclusionStatus:
    m_hat: float | None
    one_invests_ne: bool
    neither_ne: bool
    payoff_gap: float | None
    knife_edge: bool

    @property
    def holds(self) -> bool:
        return not (self.one_invests_ne and self.neither_ne) or self.knife_edge


def exclusion_status(params: MarketParams, tech: InfoTech, regime, tol: float = 1e-9) -> ExclusionStatus:
    regime = Regime.parse(regime)
    m0 = tech.m0
    j00 = float(pay.payoff(regime, m0, m0, params, tech))
    maxima = interior_maximizers(m0, regime, params, tech)
    neither = pay.marginal(regime, m0, m0, params, tech) >= 0
    m_hat = gap = None
    one = False
    if maxima:
        values = [float(pay.payoff(regime, m, m0, params, tech)) for m in maxima]
        k = int(np.argmax(values))
        m_hat, j_hat = maxima[k], values[k]
        gap = j_hat - j00
        scale = tol * (1.0 + abs(j00))
        neither = neither and j00 >= j_hat - scale
        one = j_hat >= j00 - scale and is_global_best_response(m0, m_hat, regime, params, tech, tol)
    knife = one and neither and gap is not None and abs(gap) <= tol * (1.0 + abs(j00))
    return ExclusionStatus(m_hat, one, neither, gap, knife)


def mutually_exclusive_check(params: MarketParams, tech: InfoTech, regime) -> bool:
    """True unless (m_hat, m0) and (m0, m0) are both equilibria with different payoffs."""
    return exclusion_status(params, tech, regime).holds


# -- reports --------------------------------------------------------------------------


@dataclass(frozen=True)
class NumericFallback:
    """Grid-oracle answer used where the threshold results say nothing."""

    grid_size: int
    categories: tuple[NECategory, ...]
    grid_profiles: tuple[StrategyProfile, ...]
    candidates: tuple[CandidateEquilibrium, ...]

    def to_dict(self) -> dict:
        return {
            "method": "numeric",
            "grid_size": self.grid_size,
            "categories": [c.value for c in self.categories],
            "grid_profiles": [p.to_dict() for p in self.grid_profiles],
            "candidates": [c.to_dict() for c in self.candidates],
        }


@dataclass(frozen=True)
class EquilibriumReport:
    """Classification of one parameter point under one regime.

    ``categories`` holds the verdict of the threshold results, or the single
    INDETERMINATE_BY_PROPOSITION label in a gap, in which case ``numeric``
    carries the grid-oracle categories.
    """

    regime: Regime
    params: MarketParams
    tech: InfoTech
    categories: tuple[NECategory, ...]
    thresholds: SharingThresholds | NonSharingThresholds
    candidates: tuple[CandidateEquilibrium, ...]
    numeric: NumericFallback | None = None
    diagnostics: tuple[str, ...] = field(default_factory=tuple)

    @property
    def in_gap(self) -> bool:
        return NECategory.INDETERMINATE_BY_PROPOSITION in self.categories

    @property
    def effective_categories(self) -> tuple[NECategory, ...]:
        if self.in_gap and self.numeric is not None:
            return self.numeric.categories
        return self.categories

    @property
    def label(self) -> str:
        return category_label(self.categories)

    @property
    def ne_points(self) -> list[StrategyProfile]:
        return [c.profile for c in self.candidates]

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "parameters": {
                "a": self.params.a,
                "b": self.params.b,
                "d": self.params.d,
                "sigma": self.tech.sigma,
                "m0": self.tech.m0,
                "alpha": self.tech.alpha,
            },
            "categories": [c.value for c in self.categories],
            "label": self.label,
            "in_gap": self.in_gap,
            "effective_categories": [c.value for c in self.effective_categories],
            "thresholds": self.thresholds.to_dict(),
            "candidates": [c.to_dict() for c in self.candidates],
            "numeric": None if self.numeric is None else self.numeric.to_dict(),
            "diagnostics": list(self.diagnostics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def sharing_proposition(sigma: float, thr: SharingThresholds, m0: float) -> tuple[NECategory, ...]:
    if _lt(m0, thr.m0_crit):
        return (NECategory.NEITHER_INVESTS,)
    if _gt(m0, thr.m0_crit) and _lt(sigma, thr.sigma_tilde):
        return (NECategory.NEITHER_INVESTS,)
    if _ge(m0, thr.m0_crit) and _ge(sigma, thr.sigma_hat_thr):
        return (NECategory.ONE_INVESTS,)
    return (NECategory.INDETERMINATE_BY_PROPOSITION,)


def nonsharing_proposition(sigma: float, thr: NonSharingThresholds, m0: float) -> tuple[NECategory, ...]:
    if _le(m0, thr.m0_low):
        return (NECategory.NEITHER_INVESTS,)
    if _ge(m0, thr.m0_low) and _le(sigma, thr.sigma_acute):
        return (NECategory.NEITHER_INVESTS,)
    if _gt(m0, thr.m0_mid) and _ge(sigma, thr.sigma_breve):
        return (NECategory.ONE_INVESTS, NECategory.BOTH_INVEST_SYMMETRIC)
    return (NECategory.INDETERMINATE_BY_PROPOSITION,)


def numeric_fallback(regime, params: MarketParams, tech: InfoTech, grid_size: int = 200) -> NumericFallback:
    regime = Regime.parse(regime)
    cats, profiles = brute_force_categories(regime, params, tech, grid_size)
    cands = tuple(c for c in structural_candidates(regime, params, tech) if c.global_nash)
    return NumericFallback(grid_size, cats, tuple(profiles), cands)


def _neither_report_diagnostics(regime, params, tech) -> list[str]:
    # The threshold argument certifies (m0, m0) through local conditions only.
    m_star, v_star = best_response_with_value(tech.m0, regime, params, tech)
    if m_star < tech.m0:
        v0 = float(pay.payoff(regime, tech.m0, tech.m0, params, tech))
        return [f"global_deviation_from_m0: best response {m_star:.6g} gains {v_star - v0:.3g}"]
    return []


def classify_sharing(params: MarketParams, tech: InfoTech, grid_size: int = 200) -> EquilibriumReport:
    params.require_identical()
    regime = Regime.SHARING
    thr = sharing_thresholds(params, tech)
    cats = sharing_proposition(tech.sigma, thr, tech.m0)
    m0 = tech.m0
    diagnostics: list[str] = []
    numeric = None
    if cats == (NECategory.NEITHER_INVESTS,):
        cands = [_candidate(m0, m0, NECategory.NEITHER_INVESTS, regime, params, tech)]
        diagnostics += _neither_report_diagnostics(regime, params, tech)
    elif cats == (NECategory.ONE_INVESTS,):
        roots = [r for r in sharing_interior_candidates(params, tech) if r < m0]
        if not roots:
            raise InternalError("no interior root although sigma >= sigma_hat_thr")
        m_hat = roots[0]
        cands = [
            _candidate(m_hat, m0, NECategory.ONE_INVESTS, regime, params, tech),
            _candidate(m0, m_hat, NECategory.ONE_INVESTS, regime, params, tech),
        ]
    else:
        numeric = numeric_fallback(regime, params, tech, grid_size)
        cands = list(numeric.candidates)
        diagnostics.append("proposition_gap: categories from numeric fallback")
    return EquilibriumReport(regime, params, tech, cats, thr, tuple(cands), numeric, tuple(diagnostics))


def classify_nonsharing(params: MarketParams, tech: InfoTech, grid_size: int = 200) -> EquilibriumReport:
    params.require_identical()
    regime = Regime.NON_SHARING
    thr = nonsharing_thresholds(params, tech)
    cats = nonsharing_proposition(tech.sigma, thr, tech.m0)
    m0 = tech.m0
    diagnostics: list[str] = []
    numeric = None
    if cats == (NECategory.NEITHER_INVESTS,):
        cands = [_candidate(m0, m0, NECategory.NEITHER_INVESTS, regime, params, tech)]
        diagnostics += _neither_report_diagnostics(regime, params, tech)
    elif NECategory.INDETERMINATE_BY_PROPOSITION not in cats:
        cands = [c for c in structural_candidates(regime, params, tech) if c.category in cats and c.feasible]
        for c in cands:
            if not c.mutual:
                diagnostics.append(
                    f"one_sided_feasibility: {c.category.value} at ({c.profile.m_i:.6g}, {c.profile.m_j:.6g}) "
                    "passes the investor's KKT test but not the other player's"
                )
    else:
        numeric = numeric_fallback(regime, params, tech, grid_size)
        cands = list(numeric.candidates)
        diagnostics.append("proposition_gap: categories from numeric fallback")
    return EquilibriumReport(regime, params, tech, cats, thr, tuple(cands), numeric, tuple(diagnostics))


def classify(regime, params: MarketParams, tech: InfoTech, grid_size: int = 200) -> EquilibriumReport:
    if Regime.parse(regime) is Regime.SHARING:
        return classify_sharing(params, tech, grid_size)
    return classify_nonsharing(params, tech, grid_size)


def agrees_with_grid(report: EquilibriumReport, grid_categories: Sequence[NECategory]) -> bool:
    """Whether grid-oracle categories are consistent with the report's verdict.

    A single-category verdict must match exactly.  The private-signal
    investment verdict asserts that (m0, m0) is not an equilibrium while
    investing ones are feasible, so any non-empty set of investing categories
    agrees.  Gap reports are numeric already and agree trivially.
    """
    grid = set(grid_categories)
    if report.in_gap:
        return True
    if len(report.categories) == 1:
        return grid == set(report.categories)
    return bool(grid) and NECategory.NEITHER_INVESTS not in grid
