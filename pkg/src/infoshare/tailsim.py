"""Monte-Carlo checks of the second stage and the heavy-tail robustness bounds.

Randomness comes from ``numpy.random.SeedSequence``: a run of ``n`` draws is
cut into fixed-size shards, each with its own spawned child sequence, and the
shard statistics are merged in shard order.  The result therefore depends on
the seed and ``n`` only, never on the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from infoshare import payoff as pay
from infoshare.equilibrium import strategy_grid
from infoshare.errors import DomainError
from infoshare.estimation import estimator_weights
from infoshare.market import InfoTech, MarketParams, Regime, StrategyProfile, investment_cost
from infoshare.production import nonsharing_coefficients

SHARD_SIZE = 1 << 16
THREADS_ENV = "INFOSHARE_THREADS"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


# -- second-stage rules ---------------------------------------------------------


def _quantities(regime, z_i, z_j, sigma, m_i, m_j, params):
    """Both insurers' outputs under the normal-model rules of the regime."""
    if regime is Regime.SHARING:
        w = estimator_weights(sigma, m_i, m_j)
        q = (params.a - w.pooled(z_i, z_j)) / (3 * params.b)
        return q, q
    rule_i = nonsharing_coefficients(sigma, m_i, m_j, params)
    rule_j = nonsharing_coefficients(sigma, m_j, m_i, params)
    return rule_i(z_i), rule_j(z_j)


def _signal_weight(regime, sigma, m_i, m_j) -> float:
    """Total weight the normal-model estimate of insurer i puts on signals."""
    w = estimator_weights(sigma, m_i, m_j)
    return w.k_c if regime is Regime.SHARING else w.delta_i


# -- plain second-stage simulation ------------------------------------------------


@dataclass(frozen=True)
class _Moments:
    n: int
    mean: float
    m2: float

    @staticmethod
    def of(x: np.ndarray) -> "_Moments":
        mean = float(np.mean(x))
        return _Moments(x.size, mean, float(np.sum((x - mean) ** 2)))

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        d = other.mean - self.mean
        mean = self.mean + d * other.n / n
        return _Moments(n, mean, self.m2 + other.m2 + d * d * self.n * other.n / n)

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1)


@dataclass(frozen=True)
class _ShardStats:
    profit: _Moments
    quantity: _Moments
    negative_quantity: int
    negative_price: int


@dataclass(frozen=True)
class SimulationResult:
    """Sample statistics of insurer i's realized profit and output.

    ``profit_std_error`` is the sample standard deviation over sqrt(n).
    Negative outputs and prices are counted, not clipped: the linear rules
    are kept exactly as in the analytic model.
    """

    n: int
    seed: int
    regime: Regime
    profile: StrategyProfile
    params: MarketParams
    tech: InfoTech
    mean_profit: float
    profit_std_error: float
    mean_quantity: float
    quantity_variance: float
    quantity_std_error: float
    negative_quantity_fraction: float
    negative_price_fraction: float

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("regime", "profile", "params", "tech")}
        out["regime"] = self.regime.value
        out["profile"] = self.profile.to_dict()
        out["parameters"] = {
            "a": self.params.a,
            "b": self.params.b,
            "d": self.params.d,
            "sigma": self.tech.sigma,
            "m0": self.tech.m0,
            "alpha": self.tech.alpha,
        }
        return out


def _shard_sizes(n: int) -> list[int]:
    full, rest = divmod(n, SHARD_SIZE)
    return [SHARD_SIZE] * full + ([rest] if rest else [])


def _stage2_shard(seq, size, regime, profile, params, tech) -> _ShardStats:
    rng = np.random.default_rng(seq)
    c = rng.normal(0.0, math.sqrt(tech.sigma), size)
    e_i = rng.normal(0.0, math.sqrt(profile.m_i), size)
    e_j = rng.normal(0.0, math.sqrt(profile.m_j), size)
    q_i, q_j = _quantities(regime, c + e_i, c + e_j, tech.sigma, profile.m_i, profile.m_j, params)
    p_i = params.a - params.b * q_i - params.d * q_j
    profit = q_i * (p_i - c) - investment_cost(profile.m_i, tech)
    return _ShardStats(
        _Moments.of(profit),
        _Moments.of(q_i),
        int(np.count_nonzero(q_i < 0)),
        int(np.count_nonzero(p_i < 0)),
    )


def simulate_stage2(
    profile: StrategyProfile,
    params: MarketParams,
    tech: InfoTech,
    n: int,
    seed: int,
    threads: int | None = None,
) -> SimulationResult:
    """Draw ``n`` i.i.d. (C, E_i, E_j), apply the regime's rules and average profit."""
    if n < 10_000:
        raise DomainError("n must be at least 10^4")
    params.require_identical()
    profile.validate(tech)
    regime = profile.regime
    sizes = _shard_sizes(n)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    work = lambda k: _stage2_shard(children[k], sizes[k], regime, profile, params, tech)  # noqa: E731
    threads = threads or default_threads()
    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            shards = list(pool.map(work, range(len(sizes))))
    else:
        shards = [work(k) for k in range(len(sizes))]
    profit, qty = shards[0].profit, shards[0].quantity
    for s in shards[1:]:
        profit, qty = profit.merge(s.profit), qty.merge(s.quantity)
    return SimulationResult(
        n=n,
        seed=int(seed),
        regime=regime,
        profile=profile,
        params=params,
        tech=tech,
        mean_profit=profit.mean,
        profit_std_error=math.sqrt(profit.variance / n),
        mean_quantity=qty.mean,
        quantity_variance=qty.variance,
        quantity_std_error=math.sqrt(qty.variance / n),
        negative_quantity_fraction=sum(s.negative_quantity for s in shards) / n,
        negative_price_fraction=sum(s.negative_price for s in shards) / n,
    )


# -- spliced normal / generalized-Pareto cost ----------------------------------------


@dataclass(frozen=True)
class TailMixture:
    """Cost law ``w1 * (normal body cut at x0) + w2 * (GPD tail above x0)``.

    The weights are exact mixture weights of the two truncated components.
    With ``w2 = 0`` the body is the untruncated N(0, sigma) whatever ``x0``.
    """

    w1: float
    w2: float
    sigma: float
    x0: float
    xi: float
    beta: float

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0 or not math.isclose(self.w1 + self.w2, 1.0, abs_tol=1e-12):
            raise DomainError("mixture weights must be non-negative and sum to 1")
        if self.sigma <= 0:
            raise DomainError("sigma must be positive")
        if self.xi >= 0.5:
            raise DomainError("tail shape xi must be below 1/2 for a finite variance")
        if self.w2 > 0 and (self.beta <= 0 or not math.isfinite(self.x0)):
            raise DomainError("tail needs beta > 0 and a finite splice point x0")

    @classmethod
    def default(cls, sigma: float, w2: float = 0.05, xi: float = 0.25) -> "TailMixture":
        """Splice at two standard deviations, with beta making the density continuous there."""
        x0 = 2.0 * math.sqrt(sigma)
        w1 = 1.0 - w2
        if w2 == 0:
            return cls(1.0, 0.0, sigma, x0, xi, 1.0)
        body_density = stats.norm.pdf(x0, scale=math.sqrt(sigma)) / stats.norm.cdf(x0, scale=math.sqrt(sigma))
        return cls(w1, w2, sigma, x0, xi, w2 / (w1 * body_density))

    @property
    def _body(self):
        sd = math.sqrt(self.sigma)
        upper = self.x0 / sd if self.w2 > 0 else math.inf
        return stats.truncnorm(-math.inf, upper, loc=0.0, scale=sd)

    @property
    def _tail(self):
        return stats.genpareto(self.xi, loc=self.x0, scale=self.beta)

    def ppf(self, u):
        """Inverse CDF of the mixture: body on [0, w1], tail on (w1, 1)."""
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        body = u <= self.w1 if self.w2 > 0 else np.ones(u.shape, dtype=bool)
        if self.w1 > 0:
            out[body] = self._body.ppf(np.clip(u[body] / self.w1, 0.0, 1.0))
        if self.w2 > 0:
            out[~body] = self._tail.ppf((u[~body] - self.w1) / self.w2)
        return out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        if self.w1 > 0:
            out += self.w1 * self._body.pdf(x)
        if self.w2 > 0:
            out += self.w2 * self._tail.pdf(x)
        return out

    def mean(self) -> float:
        m = 0.0
        if self.w1 > 0:
            m += self.w1 * float(self._body.mean())
        if self.w2 > 0:
            m += self.w2 * (self.x0 + self.beta / (1 - self.xi))
        return m

    def variance(self) -> float:
        second = 0.0
        if self.w1 > 0:
            b = self._body
            second += self.w1 * float(b.var() + b.mean() ** 2)
        if self.w2 > 0:
            t = self._tail
            second += self.w2 * float(t.var() + t.mean() ** 2)
        return second - self.mean() ** 2

    def to_dict(self) -> dict:
        return asdict(self)


def sample_tail_mixture(mix: TailMixture, n: int, seed: int) -> np.ndarray:
    """``n`` cost draws by inverse-CDF sampling from one uniform stream."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return mix.ppf(rng.random(n))


# -- tail-adjusted decisions and epsilon bounds ---------------------------------------


def tail_adjustment(eps_i: float, eps_j: float, b: float) -> tuple[float, float]:
    """Expected output cuts ``(delta_i, delta_j)`` caused by the cost-estimate errors.

    Solves ``2b delta_i + b delta_j = eps_i`` and its mirror, which follow
    from substituting ``q = q_normal - delta`` into the best-reply condition.
    """
    return (2 * eps_i - eps_j) / (3 * b), (2 * eps_j - eps_i) / (3 * b)


@dataclass(frozen=True)
class EpsilonBounds:
    """Payoff perturbation bounds between the tail and the normal model.

    ``phi_lower`` bounds how far the tail payoff can fall below the normal
    payoff, ``phi_upper`` how far it can rise above, both including three
    standard errors; ``epsilon`` is their sum.
    """

    phi_lower: float
    phi_upper: float
    epsilon: float
    delta_i: float
    delta_j: float
    max_abs_gap: float
    points: int
    n: int
    seed: int
    mixture: TailMixture

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "mixture"}
        out["mixture"] = self.mixture.to_dict()
        return out


class TailPayoffEstimator:
    """Estimates of J_i under the tail cost law, with common random numbers.

    The same uniforms and noise draws are reused at every evaluated profile,
    so differences between profiles carry little Monte-Carlo noise.  Each
    estimate is ``J_normal + mean(profit_tail - profit_normal)``, pairing
    every tail cost draw with the normal draw of the same quantile.
    """

    def __init__(self, regime, params: MarketParams, tech: InfoTech, mix: TailMixture, n: int, seed: int):
        if n < 100_000:
            raise DomainError("n must be at least 10^5")
        params.require_identical()
        if not math.isclose(mix.sigma, tech.sigma, rel_tol=1e-12):
            raise DomainError("mixture body variance must equal sigma")
        self.regime = Regime.parse(regime)
        self.params, self.tech, self.mix = params, tech, mix
        self.n, self.seed = n, seed
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        u = rng.random(n)
        self._c_tail = mix.ppf(u)
        self._c_norm = stats.norm.ppf(u) * math.sqrt(tech.sigma)
        self._n_i = rng.standard_normal(n)
        self._n_j = rng.standard_normal(n)
        self._mean = mix.mean()
        self._cache: dict[tuple[float, float], tuple[float, float]] = {}

    def adjustments(self, m_i: float, m_j: float) -> tuple[float, float]:
        """Expected output cuts at (m_i, m_j), from the mean bias of the normal-model estimates.

        Without sharing, each insurer also forecasts the rival's output through
        its own biased cost estimate, which scales the bias by ``1 + b alpha1_j``.
        """
        s, b = self.tech.sigma, self.params.b
        eps_i = self._mean * (1 - _signal_weight(self.regime, s, m_i, m_j))
        eps_j = self._mean * (1 - _signal_weight(self.regime, s, m_j, m_i))
        if self.regime is Regime.NON_SHARING:
            eps_i *= 1 + b * nonsharing_coefficients(s, m_j, m_i, self.params).alpha1
            eps_j *= 1 + b * nonsharing_coefficients(s, m_i, m_j, self.params).alpha1
        return tail_adjustment(eps_i, eps_j, b)

    def estimate(self, m_i: float, m_j: float) -> tuple[float, float]:
        """``(J_tail, standard error of J_tail - J_normal)`` for insurer i."""
        key = (float(m_i), float(m_j))
        if key in self._cache:
            return self._cache[key]
        p, s = self.params, self.tech.sigma
        e_i = math.sqrt(m_i) * self._n_i
        e_j = math.sqrt(m_j) * self._n_j
        d_i, d_j = self.adjustments(m_i, m_j)
        qt_i, qt_j = _quantities(self.regime, self._c_tail + e_i, self._c_tail + e_j, s, m_i, m_j, p)
        qt_i, qt_j = qt_i - d_i, qt_j - d_j
        qn_i, qn_j = _quantities(self.regime, self._c_norm + e_i, self._c_norm + e_j, s, m_i, m_j, p)
        diff = qt_i * (p.a - p.b * (qt_i + qt_j) - self._c_tail) - qn_i * (p.a - p.b * (qn_i + qn_j) - self._c_norm)
        base = float(pay.payoff(self.regime, m_i, m_j, p, self.tech))
        se = float(np.std(diff, ddof=1) / math.sqrt(self.n))
        self._cache[key] = (base + float(np.mean(diff)), se)
        return self._cache[key]

    def __call__(self, m_i, m_j):
        m_i, m_j = np.broadcast_arrays(np.asarray(m_i, dtype=float), np.asarray(m_j, dtype=float))
        out = np.array([self.estimate(a, b)[0] for a, b in zip(m_i.ravel(), m_j.ravel())])
        return float(out[0]) if m_i.ndim == 0 else out.reshape(m_i.shape)


def tail_payoff_bounds(
    profile: StrategyProfile,
    regime,
    params: MarketParams,
    tech: InfoTech,
    mix: TailMixture,
    n: int,
    seed: int,
    grid_size: int = 50,
    estimator: TailPayoffEstimator | None = None,
) -> EpsilonBounds:
    """Bound |J_tail - J_normal| at the profile and at every unilateral grid deviation.

    Deviations use the same log grid as ``epsilon_ne_check`` with the given
    ``grid_size``, so the bounds cover every point that check visits.
    """
    regime = Regime.parse(regime)
    est = estimator or TailPayoffEstimator(regime, params, tech, mix, n, seed)
    grid = strategy_grid(params, tech, grid_size).points
    points = {(profile.m_i, profile.m_j), (profile.m_j, profile.m_i)}
    points.update((float(m), profile.m_j) for m in grid)
    points.update((float(m), profile.m_i) for m in grid)
    lower = upper = max_gap = 0.0
    for m_i, m_j in sorted(points):
        value, se = est.estimate(m_i, m_j)
        gap = value - float(pay.payoff(regime, m_i, m_j, params, tech))
        lower = max(lower, -gap + 3 * se)
        upper = max(upper, gap + 3 * se)
        max_gap = max(max_gap, abs(gap))
    d_i, d_j = est.adjustments(profile.m_i, profile.m_j)
    return EpsilonBounds(lower, upper, lower + upper, d_i, d_j, max_gap, len(points), n, seed, mix)
