"""Data files behind the standard set of figures, at the reference parameters."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np
from scipy import stats

from infoshare.equilibrium import (
    best_response,
    classify,
    nonsharing_thresholds,
    sharing_thresholds,
)
from infoshare.estimation import pooled_variance, posterior_variance
from infoshare.market import InfoTech, MarketParams, Regime
from infoshare.regions import regime_comparison

REFERENCE_A = 10.0
REFERENCE_B = 1.0
REFERENCE_ALPHA = 3.0
# m0 * ln(alpha) = 54, i.e. 1.5 times the sharing-regime critical m0
REFERENCE_M0 = 1.5 * 36 * REFERENCE_B / math.log(REFERENCE_ALPHA)
DENSITY_SIGMA = 4.0
DENSITY_NOISE = 2.0


def reference_market() -> tuple[MarketParams, float, float]:
    return MarketParams.identical(REFERENCE_A, REFERENCE_B), REFERENCE_M0, REFERENCE_ALPHA


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def bivariate_signal_density(sigma=DENSITY_SIGMA, m=DENSITY_NOISE, points=61) -> str:
    """Joint density of (Z_i, Z_j) on a square of +-3 standard deviations."""
    var = sigma + m
    span = 3 * math.sqrt(var)
    axis = np.linspace(-span, span, points)
    dist = stats.multivariate_normal(mean=[0, 0], cov=[[var, sigma], [sigma, var]])
    zi, zj = np.meshgrid(axis, axis, indexing="ij")
    dens = dist.pdf(np.dstack([zi, zj]))
    rows = [(zi[k, l], zj[k, l], dens[k, l]) for k in range(points) for l in range(points)]
    return _csv(["z_i", "z_j", "density"], rows)


def conditional_cost_density(sigma=DENSITY_SIGMA, m=DENSITY_NOISE, z_obs=1.0, points=201) -> str:
    """Prior cost density and the posteriors after one and after two signals equal to ``z_obs``."""
    span = 4 * math.sqrt(sigma)
    axis = np.linspace(-span, span, points)
    w1 = sigma / (sigma + m)
    v1 = posterior_variance(sigma, m)
    k0 = 2 * sigma * m + m * m
    mean2 = (sigma * m * z_obs * 2) / k0
    v2 = posterior_variance(sigma, m, m)
    prior = stats.norm.pdf(axis, scale=math.sqrt(sigma))
    one = stats.norm.pdf(axis, loc=w1 * z_obs, scale=math.sqrt(v1))
    two = stats.norm.pdf(axis, loc=mean2, scale=math.sqrt(v2))
    return _csv(["c", "prior", "one_signal", "two_signals"], zip(axis, prior, one, two))


def conditional_variance_curve(sigma=DENSITY_SIGMA, points=100) -> str:
    """Posterior variance of the cost with one and with two signals of equal noise."""
    noise = np.geomspace(0.05 * sigma, 5 * sigma, points)
    one = posterior_variance(sigma, noise)
    two = posterior_variance(sigma, noise, noise)
    pooled = pooled_variance(sigma, noise, noise)
    rows = zip(noise, np.full(points, sigma), one, two, pooled)
    return _csv(["m", "prior_variance", "posterior_one_signal", "posterior_two_signals", "pooled_estimate_variance"], rows)


def best_response_curve(regime, params, tech, points=200) -> tuple[str, list]:
    """Insurer i's best response over m_j, with every reported NE coordinate on the grid."""
    report = classify(regime, params, tech)
    grid = set(np.geomspace(1e-2 * tech.m0, tech.m0, points).tolist())
    grid.add(tech.m0)
    for c in report.candidates:
        grid.update((c.profile.m_i, c.profile.m_j))
    rows = [(m_j, best_response(m_j, regime, params, tech)) for m_j in sorted(grid)]
    return _csv(["m_j", "best_response_i"], rows), report


def _figure_scenarios(params, m0, alpha):
    s_thr = sharing_thresholds(params, InfoTech(1.0, m0, alpha))
    low, high = 0.9 * s_thr.sigma_tilde, 1.2 * s_thr.sigma_hat_thr
    return [
        ("best_response_sharing_low", Regime.SHARING, low),
        ("best_response_sharing_high", Regime.SHARING, high),
        ("best_response_nonsharing_low", Regime.NON_SHARING, low),
        ("best_response_nonsharing_high", Regime.NON_SHARING, high),
    ]


def reproduce_figures(out_dir, resolution=(100, 100), sigma_range=(1.0, 500.0), m0_range=(1.0, 100.0)) -> dict:
    """Write every figure data file plus ``manifest.json``; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params, m0, alpha = reference_market()
    files: dict[str, str] = {}
    files["signal_density.csv"] = bivariate_signal_density()
    files["conditional_density.csv"] = conditional_cost_density()
    files["conditional_variance.csv"] = conditional_variance_curve()

    curves = {}
    for name, regime, sigma in _figure_scenarios(params, m0, alpha):
        tech = InfoTech(sigma, m0, alpha)
        text, report = best_response_curve(regime, params, tech)
        files[f"{name}.csv"] = text
        curves[name] = {
            "regime": regime.value,
            "sigma": sigma,
            "categories": [c.value for c in report.categories],
            "effective_categories": [c.value for c in report.effective_categories],
            "equilibria": [
                {"m_i": c.profile.m_i, "m_j": c.profile.m_j, "category": c.category.value, "global_nash": c.global_nash}
                for c in report.candidates
            ],
        }

    grid = regime_comparison(sigma_range, m0_range, resolution, params, alpha)
    files["regions.csv"] = grid.to_csv()
    files["regions_summary.json"] = grid.summary_json()

    tech = InfoTech(1.0, m0, alpha)
    manifest = {
        "parameters": {"a": params.a, "b": params.b, "d": params.d, "alpha": alpha, "m0": m0},
        "density_parameters": {"sigma": DENSITY_SIGMA, "m": DENSITY_NOISE, "z_observed": 1.0},
        "thresholds": {
            "sharing": sharing_thresholds(params, tech).to_dict(),
            "nonsharing": nonsharing_thresholds(params, tech).to_dict(),
        },
        "best_response_curves": curves,
        "regions": {
            "sigma_range": list(sigma_range),
            "m0_range": list(m0_range),
            "resolution": list(resolution),
            "spacing": "geometric",
        },
        "assumptions": [
            "sigma and m are variances",
            "the low and high sigma values of every best-response curve are 0.9 * sigma_tilde and "
            "1.2 * sigma_hat_thr of the sharing regime, in both regimes",
            "cells and curves inside a threshold gap report grid-oracle categories",
            "region axes are geometric and bracket every threshold at these parameters",
        ],
        "files": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(files.items())},
    }
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest
