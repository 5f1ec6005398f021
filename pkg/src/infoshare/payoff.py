"""First-stage expected payoffs J_i(m_i, m_j) and their derivatives in m_i.

All functions broadcast over numpy arrays of ``m_i`` and ``m_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from infoshare.errors import DomainError
from infoshare.market import InfoTech, MarketParams, Regime
from infoshare.production import nonsharing_coefficients


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_domain(m_i, m_j, tech: InfoTech):
    m_i = np.asarray(m_i, dtype=float)
    m_j = np.asarray(m_j, dtype=float)
    lo, hi = tech.m_min, tech.m0 * (1 + 1e-12)
    for name, arr in (("m_i", m_i), ("m_j", m_j)):
        if np.any(~np.isfinite(arr)) or np.any(arr < lo) or np.any(arr > hi):
            raise DomainError(f"{name} must lie in [{lo:g}, m0={tech.m0:g}]")
    return m_i, m_j


def _log_cost(m_i, tech: InfoTech):
    return np.log(tech.m0 / m_i) / tech.ln_alpha


def payoff_sharing(m_i, m_j, params: MarketParams, tech: InfoTech):
    """``(sigma_hat + a**2) / (9b) - log_alpha(m0 / m_i)`` with pooled variance sigma_hat."""
    params.require_identical()
    m_i, m_j = _check_domain(m_i, m_j, tech)
    s, b = tech.sigma, params.b
    pooled_var = s * s * (m_i + m_j) / (s * (m_i + m_j) + m_i * m_j)
    return _scalar((pooled_var + params.a**2) / (9 * b) - _log_cost(m_i, tech))


def payoff_nonsharing(m_i, m_j, params: MarketParams, tech: InfoTech):
    params.require_identical()
    m_i, m_j = _check_domain(m_i, m_j, tech)
    s, b = tech.sigma, params.b
    x_i, x_j = m_i + s, m_j + s
    info = s * s * (2 * x_j - s) ** 2 * x_i / (b * (s * s - 4 * x_i * x_j) ** 2)
    return _scalar(params.a**2 / (9 * b) + info - _log_cost(m_i, tech))


def payoff_nonsharing_from_rule(m_i: float, m_j: float, params: MarketParams, tech: InfoTech) -> float:
    """Same payoff assembled from the affine rule: ``b (alpha0**2 + alpha1**2 (sigma + m_i)) - h``."""
    _check_domain(m_i, m_j, tech)
    rule = nonsharing_coefficients(tech.sigma, m_i, m_j, params)
    second_moment = rule.alpha0**2 + rule.alpha1**2 * (tech.sigma + m_i)
    return float(params.b * second_moment - _log_cost(m_i, tech))


def marginal_sharing(m_i, m_j, params: MarketParams, tech: InfoTech):
    params.require_identical()
    m_i, m_j = _check_domain(m_i, m_j, tech)
    s, b = tech.sigma, params.b
    denom = (s + m_i) * (s + m_j) - s * s
    return _scalar(-(s * s / (9 * b)) * m_j**2 / denom**2 + 1 / (m_i * tech.ln_alpha))


def second_derivative_sharing(m_i, m_j, params: MarketParams, tech: InfoTech):
    params.require_identical()
    m_i, m_j = _check_domain(m_i, m_j, tech)
    s, b = tech.sigma, params.b
    denom = (s + m_i) * (s + m_j) - s * s
    info = (s * s / (9 * b)) * 2 * m_j**2 * (s + m_j) / denom**3
    return _scalar(info - 1 / (m_i**2 * tech.ln_alpha))


@dataclass(frozen=True)
class MarginalHelpers:
    """Shifted variances and the two factors of the private-signal marginal."""

    x_i: float
    x_j: float
    f1: float
    f2: float


def marginal_helpers(m_i, m_j, sigma: float) -> MarginalHelpers:
    x_i = np.asarray(m_i, dtype=float) + sigma
    x_j = np.asarray(m_j, dtype=float) + sigma
    cross = 4 * x_j * x_i
    f1 = (cross + sigma**2) / (cross - sigma**2)
    f2 = (2 * x_j - sigma) ** 2 / (cross - sigma**2) ** 2
    return MarginalHelpers(_scalar(x_i), _scalar(x_j), _scalar(f1), _scalar(f2))


def marginal_nonsharing(m_i, m_j, params: MarketParams, tech: InfoTech):
    params.require_identical()
    m_i, m_j = _check_domain(m_i, m_j, tech)
    s = tech.sigma
    h = marginal_helpers(m_i, m_j, s)
    return _scalar(1 / ((h.x_i - s) * tech.ln_alpha) - (s * s / params.b) * h.f1 * h.f2)


def second_derivative_nonsharing(m_i, m_j, params: MarketParams, tech: InfoTech):
    params.require_identical()
    m_i, m_j = _check_domain(m_i, m_j, tech)
    s = tech.sigma
    x_i, x_j = m_i + s, m_j + s
    denom = 4 * x_i * x_j - s * s
    info = (s * s / params.b) * (2 * x_j - s) ** 2 * 16 * x_j * (2 * x_i * x_j + s * s) / denom**4
    return _scalar(info - 1 / (m_i**2 * tech.ln_alpha))


def soc_sign_factor(m_i, m_j, sigma: float):
    """Factor ``g`` that fixes the sign of the private-signal J'' wherever J' = 0.

    At a stationary point J'' equals ``g`` times a positive factor, so
    ``g <= 0`` certifies a local maximum.
    """
    x_i = np.asarray(m_i, dtype=float) + sigma
    x_j = np.asarray(m_j, dtype=float) + sigma
    s2 = sigma * sigma
    g = 16 * x_j * (s2 + 2 * x_i * x_j) * (x_i - sigma) - (4 * x_i * x_j + s2) * (4 * x_i * x_j - s2)
    return _scalar(g)


def cross_marginal_nonsharing(m_i, m_j, params: MarketParams, tech: InfoTech):
    """Derivative of the private-signal marginal with respect to the rival's noise."""
    m_i, m_j = _check_domain(m_i, m_j, tech)
    s = tech.sigma
    x_i, x_j = m_i + s, m_j + s
    num = 4 * s**3 * (2 * x_j - s) * (s**3 - 4 * s * s * x_i + 8 * s * x_i * x_j - 8 * x_i**2 * x_j)
    return _scalar(num / (params.b * (4 * x_i * x_j - s * s) ** 4))


_PAYOFF = {Regime.SHARING: payoff_sharing, Regime.NON_SHARING: payoff_nonsharing}
_MARGINAL = {Regime.SHARING: marginal_sharing, Regime.NON_SHARING: marginal_nonsharing}
_SECOND = {Regime.SHARING: second_derivative_sharing, Regime.NON_SHARING: second_derivative_nonsharing}


def payoff(regime, m_i, m_j, params: MarketParams, tech: InfoTech):
    return _PAYOFF[Regime.parse(regime)](m_i, m_j, params, tech)


def marginal(regime, m_i, m_j, params: MarketParams, tech: InfoTech):
    return _MARGINAL[Regime.parse(regime)](m_i, m_j, params, tech)


def second_derivative(regime, m_i, m_j, params: MarketParams, tech: InfoTech):
    return _SECOND[Regime.parse(regime)](m_i, m_j, params, tech)


@dataclass(frozen=True)
class PayoffSurface:
    """J_i for one regime and parameter set, defined on (0, m0] x (0, m0]."""

    regime: Regime
    params: MarketParams
    tech: InfoTech

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        self.params.require_identical()

    def __call__(self, m_i, m_j):
        return payoff(self.regime, m_i, m_j, self.params, self.tech)

    def marginal(self, m_i, m_j):
        return marginal(self.regime, m_i, m_j, self.params, self.tech)

    def second_derivative(self, m_i, m_j):
        return second_derivative(self.regime, m_i, m_j, self.params, self.tech)
