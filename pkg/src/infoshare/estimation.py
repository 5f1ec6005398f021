"""Conditional-mean cost estimates from one or two noisy normal signals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from infoshare.errors import DomainError


@dataclass(frozen=True)
class EstimatorWeights:
    """Linear weights of the single-signal and pooled estimators.

    ``delta_i`` shrinks insurer i's own signal.  The pooled estimate splits as
    ``k_c * C + k_i * E_i + k_j * E_j`` with ``k_c = k_i + k_j``.
    """

    delta_i: float
    k0: float
    k_c: float
    k_i: float
    k_j: float

    def single(self, z_i):
        return self.delta_i * z_i

    def pooled(self, z_i, z_j):
        return self.k_i * z_i + self.k_j * z_j


def _k0(sigma, m_i, m_j):
    return sigma * m_i + sigma * m_j + m_i * m_j


def estimator_weights(sigma: float, m_i: float, m_j: float) -> EstimatorWeights:
    if sigma <= 0 or m_i < 0 or m_j < 0:
        raise DomainError("need sigma > 0 and non-negative noise variances")
    k0 = _k0(sigma, m_i, m_j)
    if k0 == 0:
        raise DomainError("pooled estimate undefined when both signals are noiseless")
    return EstimatorWeights(
        delta_i=sigma / (sigma + m_i),
        k0=k0,
        k_c=sigma * (m_i + m_j) / k0,
        k_i=sigma * m_j / k0,
        k_j=sigma * m_i / k0,
    )


def single_signal_estimate(z_i, sigma: float, m_i: float):
    """E[C | Z_i] = sigma / (sigma + m_i) * z_i."""
    if sigma <= 0 or m_i < 0:
        raise DomainError("need sigma > 0 and m_i >= 0")
    return sigma / (sigma + m_i) * z_i


def adversary_signal_expectation(z_i, sigma: float, m_i: float):
    """E[Z_j | Z_i].  The rival's noise is independent, so this is E[C | Z_i]."""
    return single_signal_estimate(z_i, sigma, m_i)


def pooled_estimate(z_i, z_j, sigma: float, m_i: float, m_j: float):
    """E[C | Z_i, Z_j] = (sigma m_j z_i + sigma m_i z_j) / k0.

    Raises:
        DomainError: when both signals are noiseless (k0 = 0); the investment
            technology makes that state unreachable.
    """
    if sigma <= 0 or m_i < 0 or m_j < 0:
        raise DomainError("need sigma > 0 and non-negative noise variances")
    k0 = _k0(sigma, m_i, m_j)
    if k0 == 0:
        raise DomainError("pooled estimate undefined when both signals are noiseless")
    return (sigma * m_j * z_i + sigma * m_i * z_j) / k0


def pooled_variance(sigma: float, m_i, m_j):
    """Variance of the pooled estimate, ``sigma**2 (m_i + m_j) / k0``.

    Below ``sigma`` for positive noise, tending to ``sigma`` as both noises
    vanish, and decreasing in each noise variance.
    """
    m_i = np.asarray(m_i, dtype=float)
    m_j = np.asarray(m_j, dtype=float)
    if sigma <= 0 or np.any(m_i <= 0) or np.any(m_j <= 0):
        raise DomainError("need sigma > 0 and positive noise variances")
    out = sigma**2 * (m_i + m_j) / _k0(sigma, m_i, m_j)
    return float(out) if out.ndim == 0 else out


def posterior_variance(sigma: float, m_i, m_j=None):
    """Var[C | Z_i] or, when ``m_j`` is given, Var[C | Z_i, Z_j]."""
    m_i = np.asarray(m_i, dtype=float)
    if sigma <= 0 or np.any(m_i < 0):
        raise DomainError("need sigma > 0 and non-negative noise variances")
    if m_j is None:
        out = sigma * m_i / (sigma + m_i)
    else:
        m_j = np.asarray(m_j, dtype=float)
        if np.any(m_j < 0):
            raise DomainError("need non-negative noise variances")
        out = sigma * m_i * m_j / _k0(sigma, m_i, m_j)
    return float(out) if np.ndim(out) == 0 else out
