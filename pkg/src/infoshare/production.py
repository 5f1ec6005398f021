"""Second-stage quantity choices for both information regimes."""

from __future__ import annotations

from dataclasses import dataclass

from infoshare.errors import DomainError
from infoshare.market import MarketParams


@dataclass(frozen=True)
class SharingRule:
    """Common output ``(a - C_hat) / (3b)`` when both signals are pooled."""

    a: float
    b: float

    @classmethod
    def from_params(cls, params: MarketParams) -> "SharingRule":
        params.require_identical()
        return cls(params.a, params.b)

    def __call__(self, pooled_est):
        return (self.a - pooled_est) / (3 * self.b)


@dataclass(frozen=True)
class AffineRule:
    """Output ``alpha0 + alpha1 * z`` of one insurer acting on its own signal."""

    alpha0: float
    alpha1: float

    def __call__(self, z):
        return self.alpha0 + self.alpha1 * z


def best_reply_quantity(expected_rival_q, cost_estimate, params: MarketParams):
    """Maximiser of interim expected profit; the objective is concave (-2b)."""
    return (params.a - params.b * expected_rival_q - cost_estimate) / (2 * params.b)


def sharing_quantity(pooled_est, params: MarketParams):
    params.require_identical()
    return (params.a - pooled_est) / (3 * params.b)


def nonsharing_coefficients(sigma: float, m_i: float, m_j: float, params: MarketParams) -> AffineRule:
    """Affine decision rule of insurer i when signals stay private.

    The slope solves the pair of best-reply conditions
    ``alpha1_i = -delta_i (1 + b alpha1_j) / (2b)`` in closed form.
    """
    params.require_identical()
    if sigma <= 0 or m_i <= 0 or m_j <= 0:
        raise DomainError("need sigma > 0 and positive noise variances")
    b = params.b
    denom = b * (sigma**2 - 4 * (sigma + m_i) * (sigma + m_j))
    if denom == 0:
        raise DomainError("degenerate affine-rule denominator")
    alpha1 = sigma * (2 * (sigma + m_j) - sigma) / denom
    return AffineRule(alpha0=params.a / (3 * b), alpha1=alpha1)


def affine_fixed_point_residuals(
    rule_i: AffineRule,
    rule_j: AffineRule,
    sigma: float,
    m_i: float,
    m_j: float,
    params: MarketParams,
) -> tuple[float, float, float, float]:
    """Residuals of the four coefficient equations (intercepts, then slopes)."""
    a, b = params.a, params.b
    delta_i = sigma / (sigma + m_i)
    delta_j = sigma / (sigma + m_j)
    return (
        rule_i.alpha0 - (a - b * rule_j.alpha0) / (2 * b),
        rule_j.alpha0 - (a - b * rule_i.alpha0) / (2 * b),
        rule_i.alpha1 + delta_i * (1 + b * rule_j.alpha1) / (2 * b),
        rule_j.alpha1 + delta_j * (1 + b * rule_i.alpha1) / (2 * b),
    )


def nonsharing_quantity(z_i, rule: AffineRule):
    return rule(z_i)


def interim_payoff(q, h, params: MarketParams):
    """Expected profit given the signal, at the optimal quantity: ``b q**2 - h``."""
    return params.b * q**2 - h
