"""Command-line experiment runner.

Three subcommands on top of the analysis library:

  sweep     outage / throughput curves versus per-round transmit SNR,
            written as CSV tables plus a gnuplot script per metric
  validate  cross-check suite (sampler KS test, dual-route log-MGF,
            closed form vs quadrature/convolution/Monte Carlo, bound
            ordering, absorption regression) emitted as a JSON report
  optimize  constrained rate adaptation per SNR point and per round
            budget, one CSV per budget

Configuration is a JSON file validated against a schema; every field
has a default so `{}` is a valid config.  Output CSVs start with
comment lines carrying the config hash and master seed so identical
inputs are provably bit-identical.

Exit codes: 0 ok, 1 validation or evaluation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
from scipy import integrate

import jsonschema

from .thz_channel import (Environment, LinkConfig, PointingFadingParams,
                          absorption_coefficient, pf_density,
                          pointing_fading_params)
from .outage_analytic import (HarqConfig, connection_outage, log_mgf, ltat,
                              mi_cdf, secrecy_outage)
from .montecarlo import estimate_metrics, validate_sampler
from .rate_optimizer import RateConstraints, SearchGrid, optimize_rates

WORKER_ENV_VAR = "HARQTHZ_MAX_WORKERS"

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {"type": "string"},
        "environment": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "temperature_K": {"type": "number"},
                "relative_humidity": {"type": "number",
                                      "minimum": 0.0, "maximum": 1.0},
                "pressure_Pa": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "bob": {"$ref": "#/definitions/link"},
        "eve": {"$ref": "#/definitions/link"},
        "harq": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "round_budgets": {"type": "array", "minItems": 1,
                                  "items": {"type": "integer", "minimum": 1}},
                "main_rate": {"type": "number", "exclusiveMinimum": 0},
                "secrecy_rate": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "start_dB": {"type": "number"},
                "stop_dB": {"type": "number"},
                "step_dB": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "montecarlo": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "episodes": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "workers": {"type": "integer", "minimum": 1},
            },
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "r0_max": {"type": "number", "exclusiveMinimum": 0},
                "coarse_step": {"type": "number", "exclusiveMinimum": 0},
                "refinements": {"type": "integer", "minimum": 0},
            },
        },
        "output_dir": {"type": "string"},
    },
    "definitions": {
        "link": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "distance_m": {"type": "number", "exclusiveMinimum": 0},
                "tx_gain_dBi": {"type": "number"},
                "rx_gain_dBi": {"type": "number"},
                "carrier_Hz": {"type": "number", "exclusiveMinimum": 0},
                "aperture_radius_m": {"type": "number",
                                      "exclusiveMinimum": 0},
                "beam_footprint_m": {"type": "number",
                                     "exclusiveMinimum": 0},
                "jitter_sigma_m": {"type": "number", "exclusiveMinimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "mu": {"type": "number", "exclusiveMinimum": 0},
                "hf_hat": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}

DEFAULT_CONFIG = {
    "scenario": "default",
    "environment": {
        "temperature_K": 296.0,
        "relative_humidity": 0.5,
        "pressure_Pa": 101325.0,
    },
    "bob": {
        "distance_m": 20.0, "tx_gain_dBi": 55.0, "rx_gain_dBi": 55.0,
        "carrier_Hz": 275.0e9, "aperture_radius_m": 0.1,
        "beam_footprint_m": 0.3, "jitter_sigma_m": 0.05,
        "alpha": 1.0, "mu": 2.0, "hf_hat": 1.0,
    },
    "eve": {
        "distance_m": 40.0, "tx_gain_dBi": 55.0, "rx_gain_dBi": 50.0,
        "carrier_Hz": 275.0e9, "aperture_radius_m": 0.1,
        "beam_footprint_m": 0.3, "jitter_sigma_m": 0.05,
        "alpha": 1.0, "mu": 2.0, "hf_hat": 1.0,
    },
    "harq": {
        "round_budgets": [1, 2, 5],
        "main_rate": 3.0,
        "secrecy_rate": 2.0,
    },
    "sweep": {"start_dB": 30.0, "stop_dB": 70.0, "step_dB": 5.0},
    "montecarlo": {"episodes": 200_000, "seed": 20250817, "workers": 1},
    "optimizer": {"r0_max": 12.0, "coarse_step": 0.25, "refinements": 3},
    "output_dir": "out",
}


class ConfigError(Exception):
    pass


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description (defaults merged in)."""
    scenario: str
    environment: Environment
    bob_link: LinkConfig
    eve_link: LinkConfig
    round_budgets: tuple
    main_rate: float
    secrecy_rate: float
    snr_grid_dB: tuple
    episodes: int
    seed: int
    workers: int
    search: SearchGrid
    output_dir: Path
    config_hash: str

    @property
    def bob(self) -> PointingFadingParams:
        return pointing_fading_params(self.bob_link, self.environment)

    @property
    def eve(self) -> PointingFadingParams:
        return pointing_fading_params(self.eve_link, self.environment)

    def harq(self, big_m: int, snr_linear: float,
             main_rate=None, secrecy_rate=None) -> HarqConfig:
        return HarqConfig(
            max_rounds=big_m,
            main_rate=self.main_rate if main_rate is None else main_rate,
            secrecy_rate=(self.secrecy_rate if secrecy_rate is None
                          else secrecy_rate),
            per_round_snr=tuple([snr_linear] * big_m),
            bob=self.bob, eve=self.eve)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            out[key] = _merge(base[key], val)
        else:
            out[key] = val
    return out


def _link_from_block(block: dict) -> LinkConfig:
    return LinkConfig(
        distance_m=block["distance_m"],
        tx_gain_dBi=block["tx_gain_dBi"],
        rx_gain_dBi=block["rx_gain_dBi"],
        carrier_Hz=block["carrier_Hz"],
        aperture_radius_m=block["aperture_radius_m"],
        beam_footprint_m=block["beam_footprint_m"],
        jitter_sigma_m=block["jitter_sigma_m"],
        alpha=block["alpha"], mu=block["mu"], hf_hat=block["hf_hat"])


def load_config(path) -> ExperimentConfig:
    """Parse, schema-validate and default-fill a JSON config file."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config failed schema validation: "
                          f"{exc.message} at /{'/'.join(map(str, exc.path))}")
    merged = _merge(DEFAULT_CONFIG, raw)

    sw = merged["sweep"]
    if sw["stop_dB"] < sw["start_dB"]:
        raise ConfigError("sweep stop_dB must be >= start_dB")
    n_pts = int(round((sw["stop_dB"] - sw["start_dB"]) / sw["step_dB"])) + 1
    grid = tuple(round(sw["start_dB"] + i * sw["step_dB"], 9)
                 for i in range(n_pts))

    env_block = merged["environment"]
    env = Environment(temperature_K=env_block["temperature_K"],
                      relative_humidity=env_block["relative_humidity"],
                      pressure_Pa=env_block["pressure_Pa"])
    mc = merged["montecarlo"]
    workers = mc["workers"]
    cap = os.environ.get(WORKER_ENV_VAR)
    if cap is not None:
        try:
            workers = max(1, min(workers, int(cap)))
        except ValueError:
            raise ConfigError(f"{WORKER_ENV_VAR} must be an integer")

    opt = merged["optimizer"]
    digest = hashlib.sha256(
        json.dumps(merged, sort_keys=True).encode()).hexdigest()[:16]
    return ExperimentConfig(
        scenario=merged["scenario"],
        environment=env,
        bob_link=_link_from_block(merged["bob"]),
        eve_link=_link_from_block(merged["eve"]),
        round_budgets=tuple(merged["harq"]["round_budgets"]),
        main_rate=merged["harq"]["main_rate"],
        secrecy_rate=merged["harq"]["secrecy_rate"],
        snr_grid_dB=grid,
        episodes=mc["episodes"],
        seed=mc["seed"],
        workers=workers,
        search=SearchGrid(r0_max=opt["r0_max"],
                          coarse_step=opt["coarse_step"],
                          refinements=opt["refinements"]),
        output_dir=Path(merged["output_dir"]),
        config_hash=digest)


# ---------------------------------------------------------------------------
# CSV / gnuplot output helpers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header: list, rows: list, cfg: ExperimentConfig):
    lines = [f"# config_hash={cfg.config_hash}",
             f"# seed={cfg.seed}",
             ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


_GNUPLOT_PREAMBLE = """\
set datafile separator ','
set datafile commentschars '#'
set xlabel 'per-round transmit SNR (dB)'
set key bottom left
set term pngcairo size 900,600
"""

SWEEP_COLUMNS = {
    "pco": ["snr_dB", "exact", "asymptotic", "mc", "mc_ci95",
            "no_harq_exact"],
    "pso": ["snr_dB", "exact", "upper", "approx", "mc", "mc_ci95",
            "no_harq_exact"],
    "ltat": ["snr_dB", "exact", "lower", "mc", "mc_ci95",
             "no_harq_exact"],
}


def _gnuplot_script(metric: str, budgets) -> str:
    logscale = "set logscale y\n" if metric in ("pco", "pso") else ""
    ylab = {"pco": "connection outage probability",
            "pso": "secrecy outage probability",
            "ltat": "secrecy LTAT (bits/s/Hz)"}[metric]
    lines = [_GNUPLOT_PREAMBLE, logscale,
             f"set ylabel '{ylab}'",
             f"set output '{metric}.png'"]
    cols = SWEEP_COLUMNS[metric]
    plots = []
    for m in budgets:
        f = f"{metric}_M{m}.csv"
        for name in cols[1:-1]:
            if name == "mc_ci95":
                continue
            ci = ""
            if name == "mc":
                ci = (f", '{f}' using 1:{cols.index('mc') + 1}:"
                      f"{cols.index('mc_ci95') + 1} with yerrorbars "
                      f"notitle")
                plots.append(f"'{f}' using 1:{cols.index(name) + 1} "
                             f"with points title 'M={m} {name}'" + ci)
            else:
                plots.append(f"'{f}' using 1:{cols.index(name) + 1} "
                             f"with lines title 'M={m} {name}'")
    return "\n".join(lines) + "\nplot " + ", \\\n     ".join(plots) + "\n"


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _sweep_point(cfg: ExperimentConfig, metric: str, big_m: int,
                 snr_dB: float, point_index: int) -> list:
    rho = 10.0 ** (snr_dB / 10.0)
    hc = cfg.harq(big_m, rho)
    baseline = cfg.harq(1, rho)
    # one deterministic seed per (metric, M, sweep point)
    seed = cfg.seed + 1_000_000 * point_index + 1000 * big_m
    mc = estimate_metrics(hc, cfg.episodes, seed, workers=cfg.workers)
    if metric == "pco":
        return [snr_dB,
                connection_outage(hc, "exact"),
                min(connection_outage(hc, "asymptotic"), 1.0),
                mc.p_co.point, mc.p_co.half_width_95,
                connection_outage(baseline, "exact")]
    if metric == "pso":
        return [snr_dB,
                secrecy_outage(hc, "exact"),
                secrecy_outage(hc, "upper"),
                secrecy_outage(hc, "approx"),
                mc.p_so.point, mc.p_so.half_width_95,
                secrecy_outage(baseline, "exact")]
    if metric == "ltat":
        eta, _ = ltat(hc, "exact")
        eta_lo, _ = ltat(hc, "lower_bound")
        eta_base, _ = ltat(baseline, "exact")
        return [snr_dB, eta, min(eta_lo, eta),
                mc.ltat.point, mc.ltat.half_width_95, eta_base]
    raise ValueError(f"unknown metric {metric!r}")


def cmd_sweep(cfg: ExperimentConfig, metric: str) -> int:
    if metric not in SWEEP_COLUMNS:
        print(f"error: unknown metric {metric!r}", file=sys.stderr)
        return 2
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    header = SWEEP_COLUMNS[metric]
    status = 0
    for big_m in cfg.round_budgets:
        rows = []
        try:
            for i, snr_dB in enumerate(cfg.snr_grid_dB):
                rows.append(_sweep_point(cfg, metric, big_m, snr_dB, i))
                print(f"{metric} M={big_m} {snr_dB:g} dB done",
                      file=sys.stderr)
        except Exception as exc:
            print(f"error: {metric} sweep failed at M={big_m}: {exc}",
                  file=sys.stderr)
            status = 1
        # flush whatever finished even on failure
        _write_csv(outdir / f"{metric}_M{big_m}.csv", header, rows, cfg)
    (outdir / f"{metric}.gp").write_text(
        _gnuplot_script(metric, cfg.round_budgets))
    return status


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

# molecular absorption at the default environment and 275 GHz; guards the
# constant table against typos
_ABSORPTION_GOLDEN = 0.0003888431124659489


def _single_round_quadrature(side_params, rho: float, x: float) -> float:
    a2 = rho * side_params.h_l ** 2
    y = math.sqrt(math.expm1(x * math.log(2.0)) / a2)

    def f(u):
        return pf_density(u, side_params)

    hi = side_params.scale * (200.0 / side_params.mu) ** (1.0 / side_params.alpha)
    val, _ = integrate.quad(f, 0.0, min(y, hi), limit=400)
    return val


def run_validation(cfg: ExperimentConfig) -> dict:
    checks = []
    rng = np.random.default_rng(cfg.seed)

    def add(name, passed, **detail):
        checks.append({"name": name, "pass": bool(passed), **detail})

    # 1. absorption regression at the default environment
    env = Environment()
    kappa = absorption_coefficient(275.0e9, env)
    add("absorption_regression",
        abs(kappa - _ABSORPTION_GOLDEN) <= 1e-12 * _ABSORPTION_GOLDEN,
        value=kappa, golden=_ABSORPTION_GOLDEN)

    # 2. sampler KS on both sides
    for side, params in (("bob", cfg.bob), ("eve", cfg.eve)):
        stat, pval = validate_sampler(params, 20_000, rng)
        add(f"sampler_ks_{side}", pval > 0.01, statistic=stat, p_value=pval)

    # 3. dual-route log-MGF
    worst = 0.0
    rho = 10.0 ** (cfg.snr_grid_dB[0] / 10.0)
    for s in (0.25, 0.5, 1.0, 2.0, 4.0):
        a = log_mgf(s, rho, cfg.eve, method="foxh")
        b = log_mgf(s, rho, cfg.eve, method="quadrature")
        worst = max(worst, abs(a - b) / max(abs(b), 1e-30))
    add("mgf_dual_route", worst <= 1e-6, worst_rel_err=worst)

    # 4. single-round CDF vs direct quadrature of the density
    worst = 0.0
    for snr_dB in cfg.snr_grid_dB[:3]:
        rho = 10.0 ** (snr_dB / 10.0)
        for x in (1.0, 3.0):
            hc = cfg.harq(1, rho)
            worst = max(worst, abs(mi_cdf("bob", 1, x, hc)
                                   - _single_round_quadrature(cfg.bob, rho, x)))
    add("single_round_vs_quadrature", worst <= 1e-8, worst_abs_err=worst)

    # 5. two-round CDF vs Monte Carlo
    rho = 10.0 ** (cfg.snr_grid_dB[0] / 10.0)
    hc = cfg.harq(2, rho)
    analytic = mi_cdf("bob", 2, cfg.main_rate, hc)
    mc = estimate_metrics(hc, cfg.episodes, cfg.seed, workers=cfg.workers)
    err = abs(analytic - mc.p_co.point)
    add("two_round_vs_mc", err <= max(3.0 * mc.p_co.half_width_95 / 1.96,
                                      1e-4),
        analytic=analytic, mc=mc.p_co.point, ci95=mc.p_co.half_width_95)

    # 6. bound ordering along the sweep
    ordered = True
    detail = []
    for snr_dB in cfg.snr_grid_dB[::max(1, len(cfg.snr_grid_dB) // 4)]:
        rho = 10.0 ** (snr_dB / 10.0)
        hc = cfg.harq(2, rho)
        exact = secrecy_outage(hc, "exact")
        upper = secrecy_outage(hc, "upper")
        eta, _ = ltat(hc, "exact")
        eta_lo, _ = ltat(hc, "lower_bound")
        ordered = ordered and (upper >= exact - 1e-12) \
            and (min(eta_lo, eta) <= eta + 1e-12)
        detail.append({"snr_dB": snr_dB, "pso_exact": exact,
                       "pso_upper": upper, "ltat": eta,
                       "ltat_lower": min(eta_lo, eta)})
    add("bound_ordering", ordered, points=detail)

    passed = all(c["pass"] for c in checks)
    return {"scenario": cfg.scenario, "config_hash": cfg.config_hash,
            "pass": passed, "checks": checks}


def cmd_validate(cfg: ExperimentConfig) -> int:
    report = run_validation(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / "validation_report.json"
    out.write_text(json.dumps(report, indent=2, default=float) + "\n")
    for c in report["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}")
    print(f"report written to {out}")
    return 0 if report["pass"] else 1


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

OPTIMIZE_COLUMNS = ["snr_dB", "r0_star", "rs_star", "eta_star",
                    "slack_c", "slack_e", "feasible", "evaluations"]


def cmd_optimize(cfg: ExperimentConfig, eps_c: float, eps_e: float) -> int:
    constraints = RateConstraints(eps_c=eps_c, eps_e=eps_e)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    status = 0
    for big_m in cfg.round_budgets:
        rows = []
        try:
            for snr_dB in cfg.snr_grid_dB:
                rho = 10.0 ** (snr_dB / 10.0)
                template = cfg.harq(big_m, rho)
                res = optimize_rates(template, constraints, cfg.search)
                rows.append([snr_dB, res.r0_star, res.rs_star, res.eta_star,
                             res.slack_c, res.slack_e, res.feasible,
                             res.evaluations])
                print(f"optimize M={big_m} {snr_dB:g} dB: eta*="
                      f"{res.eta_star:.4g} feasible={res.feasible}",
                      file=sys.stderr)
        except Exception as exc:
            print(f"error: optimize failed at M={big_m}: {exc}",
                  file=sys.stderr)
            status = 1
        _write_csv(outdir / f"optimize_M{big_m}.csv",
                   OPTIMIZE_COLUMNS, rows, cfg)
    script = [_GNUPLOT_PREAMBLE,
              "set ylabel 'optimal secrecy LTAT (bits/s/Hz)'",
              "set output 'optimize.png'"]
    plots = [f"'optimize_M{m}.csv' using 1:4 with linespoints "
             f"title 'M={m}'" for m in cfg.round_budgets]
    (outdir / "optimize.gp").write_text(
        "\n".join(script) + "\nplot " + ", ".join(plots) + "\n")
    return status


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="harqthz",
        description="secure HARQ over THz: outage and throughput analysis")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("sweep", help="metric vs SNR curves as CSV + gnuplot")
    s.add_argument("--config", required=True)
    s.add_argument("--metric", required=True, choices=["pco", "pso", "ltat"])

    v = sub.add_parser("validate", help="cross-check suite, JSON report")
    v.add_argument("--config", required=True)

    o = sub.add_parser("optimize", help="constrained rate adaptation sweep")
    o.add_argument("--config", required=True)
    o.add_argument("--eps-c", type=float, default=0.01,
                   help="connection outage budget")
    o.add_argument("--eps-e", type=float, default=0.01,
                   help="secrecy outage budget")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors already; keep 0 for --help
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.cmd == "sweep":
        return cmd_sweep(cfg, args.metric)
    if args.cmd == "validate":
        return cmd_validate(cfg)
    if args.cmd == "optimize":
        if not (0.0 < args.eps_c < 1.0 and 0.0 < args.eps_e < 1.0):
            print("error: outage budgets must lie in (0, 1)", file=sys.stderr)
            return 2
        return cmd_optimize(cfg, args.eps_c, args.eps_e)
    return 2


if __name__ == "__main__":
    sys.exit(main())
