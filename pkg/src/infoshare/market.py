"""Primitive market model: inverse demand, investment technology, realized profit.

Two insurers sell substitutable policies.  The per-policy claims cost ``C`` is
common to both and normally distributed with mean zero and variance ``sigma``;
each insurer observes ``Z = C + E`` where the noise ``E`` has variance ``m``.
Lowering ``m`` below the baseline ``m0`` costs ``log_alpha(m0 / m)``.

Every "sigma" and "m" in this package is a variance, never a standard
deviation.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from infoshare.errors import DomainError

# Relative tolerance used when comparing against thresholds and when deciding
# whether two slopes coincide (b == d).
REL_TOL = 1e-9

# Smallest admissible noise variance, as a fraction of m0.  Keeps root finders
# away from the log-cost pole at m = 0, which is never optimal anyway.
MIN_NOISE_FRACTION = 1e-12


class Regime(str, enum.Enum):
    """Information regime in force during the second stage."""

    SHARING = "sharing"
    NON_SHARING = "nonsharing"

    @classmethod
    def parse(cls, value: "Regime | str") -> "Regime":
        if isinstance(value, Regime):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if member.value == key:
                return member
        raise DomainError(f"unknown regime {value!r}; expected 'sharing' or 'nonsharing'")


def _check_positive(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DomainError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class MarketParams:
    """Inverse demand ``p_i = a - b q_i - d q_j``."""

    a: float
    b: float
    d: float

    def __post_init__(self):
        for name in ("a", "b", "d"):
            object.__setattr__(self, name, _check_positive(name, getattr(self, name)))

    @classmethod
    def identical(cls, a: float, b: float) -> "MarketParams":
        """Identical products, the case every analysis routine assumes."""
        return cls(a=a, b=b, d=b)

    def require_identical(self) -> None:
        """Raise unless the products are perfect substitutes (b == d)."""
        if not math.isclose(self.b, self.d, rel_tol=REL_TOL):
            raise DomainError(
                f"analysis requires identical products (b == d), got b={self.b}, d={self.d}"
            )


@dataclass(frozen=True)
class InfoTech:
    """Prior cost variance and the noise-reduction technology.

    Attributes:
        sigma: variance of the marginal cost C.
        m0: signal-noise variance with no investment.
        alpha: efficacy of investment; one unit of effort divides the noise
            variance by alpha.
    """

    sigma: float
    m0: float
    alpha: float

    def __post_init__(self):
        for name in ("sigma", "m0", "alpha"):
            object.__setattr__(self, name, _check_positive(name, getattr(self, name)))
        if self.alpha <= 1:
            raise DomainError(f"alpha must exceed 1, got {self.alpha!r}")

    @property
    def ln_alpha(self) -> float:
        # Single source for the logarithm base; investment cost and its
        # derivatives both go through this value.
        return math.log(self.alpha)

    @property
    def m_min(self) -> float:
        return MIN_NOISE_FRACTION * self.m0


@dataclass(frozen=True)
class StrategyProfile:
    """Noise variances chosen by insurer i and insurer j."""

    m_i: float
    m_j: float
    regime: Regime = Regime.SHARING

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        for name in ("m_i", "m_j"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")

    def validate(self, tech: InfoTech) -> None:
        for name in ("m_i", "m_j"):
            if getattr(self, name) > tech.m0 * (1 + 1e-12):
                raise DomainError(f"{name}={getattr(self, name)} exceeds m0={tech.m0}")

    def swapped(self) -> "StrategyProfile":
        return StrategyProfile(self.m_j, self.m_i, self.regime)

    def to_dict(self) -> dict:
        return {"m_i": self.m_i, "m_j": self.m_j, "regime": self.regime.value}


@dataclass(frozen=True)
class SignalRealization:
    """One draw of the cost and both noise terms."""

    c: float
    e_i: float
    e_j: float

    @property
    def z_i(self) -> float:
        return self.c + self.e_i

    @property
    def z_j(self) -> float:
        return self.c + self.e_j


def investment_cost(m, tech: InfoTech):
    """Effort needed to bring the noise variance down to ``m``.

    Works elementwise on arrays.

    Raises:
        DomainError: if ``m <= 0`` (infinite cost) or ``m > m0``.
    """
    arr = np.asarray(m, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("noise variance must be positive: m = 0 has infinite cost")
    if np.any(arr > tech.m0 * (1 + 1e-12)):
        raise DomainError(f"noise variance above m0={tech.m0} would need negative investment")
    out = np.log(tech.m0 / arr) / tech.ln_alpha
    return float(out) if out.ndim == 0 else out


def noise_from_investment(h, tech: InfoTech):
    """Noise variance ``m0 * alpha**(-h)`` reached with effort ``h``."""
    arr = np.asarray(h, dtype=float)
    if np.any(arr < 0):
        raise DomainError("investment effort must be non-negative")
    out = tech.m0 * np.exp(-arr * tech.ln_alpha)
    return float(out) if out.ndim == 0 else out


def price(q_i, q_j, params: MarketParams):
    """Inverse demand faced by insurer i.  Quantities may be negative."""
    return params.a - params.b * q_i - params.d * q_j


def realized_profit(q_i, q_j, c, h, params: MarketParams):
    """Revenue minus claims cost minus investment effort."""
    return q_i * price(q_i, q_j, params) - q_i * c - h


SCENARIO_KEYS = ("a", "b", "d", "sigma", "m0", "alpha")


def scenario_from_mapping(
    data: Mapping[str, Any], *, allow_extra: bool = False
) -> tuple[MarketParams, InfoTech]:
    """Build validated parameter objects from a flat mapping.

    Raises:
        DomainError: naming the first missing, mistyped or out-of-range field.
    """
    if not isinstance(data, Mapping):
        raise DomainError("scenario must be a JSON object")
    for key in SCENARIO_KEYS:
        if key not in data:
            raise DomainError(f"missing field {key!r}")
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DomainError(f"field {key!r} must be a number, got {value!r}")
    if not allow_extra:
        extra = sorted(set(data) - set(SCENARIO_KEYS))
        if extra:
            raise DomainError(f"unknown field {extra[0]!r}")
    try:
        params = MarketParams(a=data["a"], b=data["b"], d=data["d"])
    except DomainError as exc:
        raise DomainError(f"field {_field_in(exc)!r}: {exc}") from None
    try:
        tech = InfoTech(sigma=data["sigma"], m0=data["m0"], alpha=data["alpha"])
    except DomainError as exc:
        raise DomainError(f"field {_field_in(exc)!r}: {exc}") from None
    return params, tech


def _field_in(exc: DomainError) -> str:
    return str(exc).split()[0]


def load_scenario(path: str | Path) -> tuple[MarketParams, InfoTech]:
    """Read ``{"a", "b", "d", "sigma", "m0", "alpha"}`` from a JSON file."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_mapping(data)
