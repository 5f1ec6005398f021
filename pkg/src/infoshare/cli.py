"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 grid verification mismatch,
4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

from infoshare import equilibrium as eq
from infoshare import payoff as pay
from infoshare import tailsim
from infoshare.errors import DomainError
from infoshare.estimation import pooled_variance, posterior_variance
from infoshare.figures import reproduce_figures
from infoshare.market import SCENARIO_KEYS, InfoTech, MarketParams, Regime, StrategyProfile, scenario_from_mapping
from infoshare.regions import regime_comparison

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4

SECTION_DEFAULTS = {
    "payoff": {"points": None},
    "equilibrium": {"grid_size": 200},
    "regions": {
        "sigma_range": [1.0, 500.0],
        "m0_range": [1.0, 100.0],
        "resolution": [200, 200],
        "spacing": "geometric",
        "gap_grid": 100,
    },
    "simulate": {
        "n": 1_000_000,
        "seed": 0,
        "m_i": None,
        "m_j": None,
        "threads": None,
        "tail": None,
        "tail_n": 100_000,
        "grid_size": 50,
    },
    "figures": {"resolution": [100, 100]},
}
TAIL_KEYS = {"w2", "xi", "x0", "beta"}
TOP_KEYS = set(SCENARIO_KEYS) | {"regime"} | set(SECTION_DEFAULTS)


class ConfigError(ValueError):
    pass


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(config: dict, assignment: str) -> None:
    key, sep, raw = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    parts = key.split(".")
    node = config
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {key!r}: {part!r} is not a section")
    node[parts[-1]] = _parse_value(raw)


def load_config(path: str | None, overrides: list[str]) -> dict:
    config: dict = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
    for item in overrides:
        apply_override(config, item)
    unknown = sorted(set(config) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown field {unknown[0]!r}")
    for section, defaults in SECTION_DEFAULTS.items():
        given = config.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"field {section!r} must be an object")
        extra = sorted(set(given) - set(defaults))
        if extra:
            raise ConfigError(f"unknown field '{section}.{extra[0]}'")
        config[section] = {**copy.deepcopy(defaults), **given}
    return config


def _scenario(config: dict, keys=SCENARIO_KEYS):
    data = {k: config[k] for k in SCENARIO_KEYS if k in config}
    missing = [k for k in keys if k not in data]
    if missing:
        raise ConfigError(f"missing field {missing[0]!r}")
    return scenario_from_mapping(data)


def _regimes(config: dict) -> list[Regime]:
    value = config.get("regime", "both")
    if value == "both":
        return [Regime.SHARING, Regime.NON_SHARING]
    try:
        return [Regime.parse(value)]
    except DomainError as exc:
        raise ConfigError(f"field 'regime': {exc}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    return path


def _number(section: str, key: str, value, *, integer=False, positive=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or (integer and not isinstance(value, int)):
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"field '{section}.{key}' must be {kind}, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"field '{section}.{key}' must be positive, got {value!r}")
    return value


# -- commands -----------------------------------------------------------------


def cmd_payoff(config: dict, out_dir: Path) -> int:
    params, tech = _scenario(config)
    points = config["payoff"]["points"] or [[tech.m0, tech.m0]]
    rows = []
    for point in points:
        if not (isinstance(point, list) and len(point) == 2):
            raise ConfigError(f"field 'payoff.points' entries must be [m_i, m_j], got {point!r}")
        m_i = _number("payoff", "points", point[0])
        m_j = _number("payoff", "points", point[1])
        if m_i > tech.m0 or m_j > tech.m0:
            raise ConfigError(f"field 'payoff.points': {point!r} exceeds m0={tech.m0}")
        row = {
            "m_i": m_i,
            "m_j": m_j,
            "pooled_variance": pooled_variance(tech.sigma, m_i, m_j),
            "posterior_variance_one_signal": posterior_variance(tech.sigma, m_i),
            "posterior_variance_two_signals": posterior_variance(tech.sigma, m_i, m_j),
        }
        for regime in _regimes(config):
            row[regime.value] = {
                "payoff": pay.payoff(regime, m_i, m_j, params, tech),
                "marginal": pay.marginal(regime, m_i, m_j, params, tech),
                "second_derivative": pay.second_derivative(regime, m_i, m_j, params, tech),
            }
        rows.append(row)
    _write(out_dir, "payoff.json", _dump({"parameters": _echo(params, tech), "points": rows}))
    return EXIT_OK


def cmd_equilibrium(config: dict, out_dir: Path, verify_grid: int | None) -> int:
    params, tech = _scenario(config)
    grid_size = _number("equilibrium", "grid_size", config["equilibrium"]["grid_size"], integer=True)
    reports, status = {}, EXIT_OK
    for regime in _regimes(config):
        report = eq.classify(regime, params, tech, grid_size)
        body = report.to_dict()
        if verify_grid:
            cats, profiles = eq.brute_force_categories(regime, params, tech, verify_grid)
            ok = eq.agrees_with_grid(report, cats)
            body["verification"] = {
                "grid_size": verify_grid,
                "grid_categories": [c.value for c in cats],
                "grid_profiles": [p.to_dict() for p in profiles],
                "agrees": ok,
            }
            if not ok:
                status = EXIT_VERIFY
        reports[regime.value] = body
        print(f"{regime.value}: {report.label}" + (" (numeric: %s)" % eq.category_label(report.effective_categories) if report.in_gap else ""))
    _write(out_dir, "equilibrium.json", _dump(reports))
    if status == EXIT_VERIFY:
        print("grid verification disagrees with the threshold classification", file=sys.stderr)
    return status


def cmd_regions(config: dict, out_dir: Path) -> int:
    params, tech = _scenario(config, keys=("a", "b", "d", "alpha"))
    opts = config["regions"]
    for key in ("sigma_range", "m0_range", "resolution"):
        value = opts[key]
        if not (isinstance(value, list) and len(value) == 2):
            raise ConfigError(f"field 'regions.{key}' must be a two-element list")
        for v in value:
            _number("regions", key, v, integer=key == "resolution")
    if min(opts["resolution"]) < 2:
        raise ConfigError("field 'regions.resolution' needs at least 2 points per axis")
    try:
        grid = regime_comparison(
            tuple(opts["sigma_range"]),
            tuple(opts["m0_range"]),
            tuple(opts["resolution"]),
            params,
            tech.alpha,
            spacing=opts["spacing"],
            gap_grid=_number("regions", "gap_grid", opts["gap_grid"], integer=True),
        )
    except ValueError as exc:
        raise ConfigError(f"field 'regions': {exc}") from None
    _write(out_dir, "regions.csv", grid.to_csv())
    _write(out_dir, "regions_summary.json", grid.summary_json())
    fr = grid.area_fractions()
    print(f"region A {fr['A']:.4f}, region B {fr['B']:.4f}, same {fr['Same']:.4f}, other {fr['Other']:.4f}")
    return EXIT_OK


def cmd_simulate(config: dict, out_dir: Path) -> int:
    params, tech = _scenario(config)
    opts = config["simulate"]
    n = _number("simulate", "n", opts["n"], integer=True)
    seed = _number("simulate", "seed", opts["seed"], integer=True, positive=False)
    if seed < 0:
        raise ConfigError("field 'simulate.seed' must be non-negative")
    m_i = tech.m0 if opts["m_i"] is None else _number("simulate", "m_i", opts["m_i"])
    m_j = tech.m0 if opts["m_j"] is None else _number("simulate", "m_j", opts["m_j"])
    threads = None if opts["threads"] is None else _number("simulate", "threads", opts["threads"], integer=True)
    results = {}
    for regime in _regimes(config):
        profile = StrategyProfile(m_i, m_j, regime)
        sim = tailsim.simulate_stage2(profile, params, tech, n, seed, threads)
        body = sim.to_dict()
        body["closed_form_payoff"] = pay.payoff(regime, m_i, m_j, params, tech)
        if opts["tail"] is not None:
            body["tail"] = _tail_section(opts, profile, regime, params, tech, seed)
        results[regime.value] = body
        print(f"{regime.value}: mean profit {sim.mean_profit:.6f} +- {sim.profit_std_error:.6f}")
    _write(out_dir, "simulate.json", _dump(results))
    return EXIT_OK


def _tail_section(opts, profile, regime, params, tech, seed) -> dict:
    tail = opts["tail"]
    if not isinstance(tail, dict):
        raise ConfigError("field 'simulate.tail' must be an object")
    extra = sorted(set(tail) - TAIL_KEYS)
    if extra:
        raise ConfigError(f"unknown field 'simulate.tail.{extra[0]}'")
    mix = tailsim.TailMixture.default(tech.sigma, tail.get("w2", 0.05), tail.get("xi", 0.25))
    if "x0" in tail or "beta" in tail:
        mix = tailsim.TailMixture(
            mix.w1, mix.w2, tech.sigma, tail.get("x0", mix.x0), mix.xi, tail.get("beta", mix.beta)
        )
    tail_n = _number("simulate", "tail_n", opts["tail_n"], integer=True)
    grid_size = _number("simulate", "grid_size", opts["grid_size"], integer=True)
    est = tailsim.TailPayoffEstimator(regime, params, tech, mix, tail_n, seed)
    bounds = tailsim.tail_payoff_bounds(profile, regime, params, tech, mix, tail_n, seed, grid_size, est)
    check = eq.epsilon_ne_check(profile, regime, params, tech, bounds.phi_upper, bounds.phi_lower, grid_size, est)
    return {"bounds": bounds.to_dict(), "epsilon_check": check.to_dict()}


def cmd_reproduce_figures(config: dict, out_dir: Path) -> int:
    res = config["figures"]["resolution"]
    if not (isinstance(res, list) and len(res) == 2 and all(isinstance(v, int) and v >= 2 for v in res)):
        raise ConfigError("field 'figures.resolution' must be two integers >= 2")
    manifest = reproduce_figures(out_dir, resolution=tuple(res))
    print(f"wrote {len(manifest['files']) + 1} files to {out_dir}")
    return EXIT_OK


def _echo(params: MarketParams, tech: InfoTech) -> dict:
    return {"a": params.a, "b": params.b, "d": params.d, "sigma": tech.sigma, "m0": tech.m0, "alpha": tech.alpha}


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infoshare", description="Insurance duopoly information-sharing analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("payoff", "payoffs and derivatives at given noise levels"),
        ("equilibrium", "classify equilibria for one parameter point"),
        ("regions", "classify a (sigma, m0) grid and compare regimes"),
        ("simulate", "Monte-Carlo check of second-stage payoffs and tail bounds"),
        ("reproduce-figures", "write all figure data files and a manifest"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value; dotted keys reach sections, values parse as JSON")
        p.add_argument("--out", default=".", help="output directory (default: current directory)")
        if name == "equilibrium":
            p.add_argument("--verify-grid", type=int, default=None, metavar="N",
                           help="cross-check against the brute-force grid oracle with N points")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        config = load_config(args.config, args.overrides)
        if args.command == "payoff":
            return cmd_payoff(config, out_dir)
        if args.command == "equilibrium":
            if args.verify_grid is not None and args.verify_grid < 50:
                raise ConfigError("--verify-grid must be at least 50")
            return cmd_equilibrium(config, out_dir, args.verify_grid)
        if args.command == "regions":
            return cmd_regions(config, out_dir)
        if args.command == "simulate":
            return cmd_simulate(config, out_dir)
        return cmd_reproduce_figures(config, out_dir)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
