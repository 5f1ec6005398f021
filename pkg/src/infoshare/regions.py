"""Equilibrium categories over a (sigma, m0) grid and the regime-comparison map."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from infoshare.equilibrium import (
    NECategory,
    brute_force_categories,
    category_label,
    nonsharing_proposition,
    nonsharing_thresholds,
    sharing_proposition,
    sharing_thresholds,
)
from infoshare.market import InfoTech, MarketParams, Regime

DEFAULT_SIGMA_RANGE = (1.0, 500.0)
DEFAULT_M0_RANGE = (1.0, 100.0)
DEFAULT_GAP_GRID = 100

REGION_A = "A"
REGION_B = "B"
SAME = "Same"
OTHER = "Other"
COMPARISON_LABELS = (REGION_A, REGION_B, SAME, OTHER)

_INVESTING = {
    NECategory.ONE_INVESTS,
    NECategory.BOTH_INVEST_SYMMETRIC,
    NECategory.BOTH_INVEST_ASYMMETRIC,
}


def make_axis(lo: float, hi: float, n: int, spacing: str = "geometric") -> np.ndarray:
    if n < 2:
        raise ValueError("resolution must be at least 2 per axis")
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got ({lo}, {hi})")
    if spacing == "geometric":
        axis = np.geomspace(lo, hi, n)
    elif spacing == "linear":
        axis = np.linspace(lo, hi, n)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    axis[0], axis[-1] = lo, hi
    return axis


def cell_categories(
    regime: Regime, sigma: float, m0: float, params: MarketParams, alpha: float, gap_grid: int
) -> tuple[tuple[NECategory, ...], bool]:
    """Categories at one cell and whether they came from the numeric fallback."""
    tech = InfoTech(sigma, m0, alpha)
    if regime is Regime.SHARING:
        cats = sharing_proposition(sigma, sharing_thresholds(params, tech), m0)
    else:
        cats = nonsharing_proposition(sigma, nonsharing_thresholds(params, tech), m0)
    if NECategory.INDETERMINATE_BY_PROPOSITION in cats:
        numeric, _ = brute_force_categories(regime, params, tech, gap_grid)
        return numeric, True
    return cats, False


def compare_cell(sharing: tuple[NECategory, ...], nonsharing: tuple[NECategory, ...]) -> str:
    s, n = set(sharing), set(nonsharing)
    if s == {NECategory.NEITHER_INVESTS} and n & _INVESTING:
        return REGION_A
    if s == {NECategory.ONE_INVESTS} and NECategory.BOTH_INVEST_SYMMETRIC in n:
        return REGION_B
    if s == n:
        return SAME
    return OTHER


@dataclass
class RegionGrid:
    """Per-cell labels; every 2-D array is indexed ``[m0_index, sigma_index]``."""

    sigma_axis: np.ndarray
    m0_axis: np.ndarray
    params: MarketParams
    alpha: float
    cells: dict
    gaps: dict
    comparison: np.ndarray | None = None
    spacing: str = "geometric"

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.m0_axis), len(self.sigma_axis))

    def cell_at(self, sigma: float, m0: float) -> tuple[int, int]:
        """Indices of the grid cell nearest to (sigma, m0), in log distance when geometric."""
        def nearest(axis, x):
            if self.spacing == "geometric":
                return int(np.argmin(np.abs(np.log(axis) - np.log(x))))
            return int(np.argmin(np.abs(axis - x)))

        return nearest(self.m0_axis, m0), nearest(self.sigma_axis, sigma)

    def area_fractions(self) -> dict:
        if self.comparison is None:
            raise ValueError("area fractions need a regime comparison")
        total = self.comparison.size
        return {label: int(np.sum(self.comparison == label)) / total for label in COMPARISON_LABELS}

    def boundary_fraction(self) -> float:
        """Share of cells whose comparison label differs from a 4-neighbour."""
        lab = self.comparison
        edge = np.zeros(lab.shape, dtype=bool)
        diff_r = lab[1:, :] != lab[:-1, :]
        diff_c = lab[:, 1:] != lab[:, :-1]
        edge[1:, :] |= diff_r
        edge[:-1, :] |= diff_r
        edge[:, 1:] |= diff_c
        edge[:, :-1] |= diff_c
        return float(edge.mean())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sigma", "m0", "category_sharing", "category_nonsharing", "comparison_label", "gap_flag"])
        sh = self.cells.get(Regime.SHARING)
        ns = self.cells.get(Regime.NON_SHARING)
        for r, m0 in enumerate(self.m0_axis):
            for c, sigma in enumerate(self.sigma_axis):
                gap = any(bool(g[r, c]) for g in self.gaps.values())
                w.writerow([
                    repr(float(sigma)),
                    repr(float(m0)),
                    "" if sh is None else sh[r, c],
                    "" if ns is None else ns[r, c],
                    "" if self.comparison is None else self.comparison[r, c],
                    int(gap),
                ])
        return buf.getvalue()

    def summary(self) -> dict:
        out = {
            "parameters": {"a": self.params.a, "b": self.params.b, "d": self.params.d, "alpha": self.alpha},
            "sigma_range": [float(self.sigma_axis[0]), float(self.sigma_axis[-1])],
            "m0_range": [float(self.m0_axis[0]), float(self.m0_axis[-1])],
            "resolution": [len(self.sigma_axis), len(self.m0_axis)],
            "spacing": self.spacing,
            "gap_cells": {r.value: int(g.sum()) for r, g in sorted(self.gaps.items(), key=lambda kv: kv[0].value)},
        }
        if self.comparison is not None:
            out["area_fractions"] = self.area_fractions()
            out["boundary_fraction"] = self.boundary_fraction()
        return out

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def _fill(regime, sigma_axis, m0_axis, params, alpha, gap_grid):
    labels = np.empty((len(m0_axis), len(sigma_axis)), dtype=object)
    cats = np.empty(labels.shape, dtype=object)
    gaps = np.zeros(labels.shape, dtype=bool)
    for r, m0 in enumerate(m0_axis):
        for c, sigma in enumerate(sigma_axis):
            cell, gap = cell_categories(regime, float(sigma), float(m0), params, alpha, gap_grid)
            cats[r, c] = cell
            labels[r, c] = category_label(cell)
            gaps[r, c] = gap
    return labels, cats, gaps


def region_map(
    sigma_range=DEFAULT_SIGMA_RANGE,
    m0_range=DEFAULT_M0_RANGE,
    resolution=(200, 200),
    regime=Regime.SHARING,
    params: MarketParams | None = None,
    alpha: float = 3.0,
    *,
    spacing: str = "geometric",
    gap_grid: int = DEFAULT_GAP_GRID,
) -> RegionGrid:
    """Label every cell of the grid with its category set under one regime.

    ``resolution`` is ``(n_sigma, n_m0)``.  Gap cells carry the grid-oracle
    categories and are flagged in ``gaps``.
    """
    params = params or MarketParams.identical(10.0, 1.0)
    params.require_identical()
    regime = Regime.parse(regime)
    s_axis = make_axis(*sigma_range, resolution[0], spacing)
    m_axis = make_axis(*m0_range, resolution[1], spacing)
    labels, _, gaps = _fill(regime, s_axis, m_axis, params, alpha, gap_grid)
    return RegionGrid(s_axis, m_axis, params, alpha, {regime: labels}, {regime: gaps}, None, spacing)


def regime_comparison(
    sigma_range=DEFAULT_SIGMA_RANGE,
    m0_range=DEFAULT_M0_RANGE,
    resolution=(200, 200),
    params: MarketParams | None = None,
    alpha: float = 3.0,
    *,
    spacing: str = "geometric",
    gap_grid: int = DEFAULT_GAP_GRID,
) -> RegionGrid:
    """Classify both regimes per cell and label the cells A, B, Same or Other.

    A: sharing has no investment while the private-signal regime has some.
    B: sharing leaves only the one-investor outcome while the private-signal
    regime admits symmetric investment.
    """
    params = params or MarketParams.identical(10.0, 1.0)
    params.require_identical()
    s_axis = make_axis(*sigma_range, resolution[0], spacing)
    m_axis = make_axis(*m0_range, resolution[1], spacing)
    sh_lab, sh_cat, sh_gap = _fill(Regime.SHARING, s_axis, m_axis, params, alpha, gap_grid)
    ns_lab, ns_cat, ns_gap = _fill(Regime.NON_SHARING, s_axis, m_axis, params, alpha, gap_grid)
    comp = np.empty(sh_lab.shape, dtype=object)
    for idx in np.ndindex(comp.shape):
        comp[idx] = compare_cell(sh_cat[idx], ns_cat[idx])
    return RegionGrid(
        s_axis,
        m_axis,
        params,
        alpha,
        {Regime.SHARING: sh_lab, Regime.NON_SHARING: ns_lab},
        {Regime.SHARING: sh_gap, Regime.NON_SHARING: ns_gap},
        comp,
        spacing,
    )
