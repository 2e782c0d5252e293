"""``duelfuel`` command line: analyze | simulate | compare | sweep.

Exit codes: 0 success, 1 cross-validation failure in the exact regime,
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import replace

from . import analytic, simulate
from .config import ConfigError, RunConfig, game_from_dict, config_to_dict, load_config
from .model import FunctionalParams, derive_constants
from .transforms import LstKind

log = logging.getLogger("duelfuel")

SWEEP_PARAMS = ("lambda_a", "lambda_b", "delta", "M_a", "M_b")
RATIO_J_MAX = (1_000, 10_000)
EXACT_GATED = ("phi_sum", "phi_joint", "win_probability", "e_nu", "e_tau_pre")


class UsageError(Exception):
    pass


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(rows, header, output_path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if output_path:
        with open(output_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _try(label, fn):
    try:
        return fn()
    except (ValueError, ArithmeticError) as exc:
        log.warning("%s unavailable: %s", label, exc)
        return None


def analyze_rows(cfg: RunConfig):
    spec = cfg.game
    c = derive_constants(spec)
    p = cfg.functional
    j_max = cfg.run.j_max
    closed = _try("phi_closed", lambda: analytic.functional_phi_closed(spec, p, constants=c))
    summed = _try("phi_sum", lambda: analytic.functional_phi_sum(spec, p, j_max=j_max, constants=c))
    joint = _try("phi_joint", lambda: analytic.functional_phi_joint(spec, p, constants=c))
    e_nu = _try("e_nu", lambda: analytic.expected_exit_index(spec, constants=c))
    e_tau = _try("e_tau_pre", lambda: analytic.expected_preexit_time(spec, constants=c))

    def value(r):
        return math.nan if r is None else r.value

    return [
        ("t_star", "bisection", c.t_star, 1e-9),
        ("sigma_bar", "lst_derivative", c.sigma_bar, 0.0),
        ("j_min", "ceiling", c.j_min, 0.0),
        ("m_cap", "floor", c.m_cap, 0.0),
        ("phi_closed", "closed", value(closed), None if closed is None else 0.0),
        ("phi_sum", "sum", value(summed), None if summed is None else summed.error_estimate),
        ("phi_joint", "joint", value(joint), None if joint is None else joint.error_estimate),
        ("e_nu", "richardson_joint", value(e_nu), None if e_nu is None else e_nu.error),
        ("e_tau_pre", "richardson_joint", value(e_tau), None if e_tau is None else e_tau.error),
        ("strategy", "rule", analytic.recommend_strategy(spec).value, None),
    ]


SIMULATE_QUANTITIES = ("win_probability", "e_nu", "e_mu", "e_tau_nu", "e_tau_pre", "e_tau_mu")


def simulate_reports(cfg: RunConfig):
    spec = cfg.game
    n = cfg.run.n_replications
    if n < simulate.MIN_FUNCTIONAL_REPLICATIONS:
        raise ConfigError(f"field 'run.n_replications' must be >= {simulate.MIN_FUNCTIONAL_REPLICATIONS}")
    batch = simulate.simulate_paths(spec, n, cfg.run.master_seed)
    if batch.n_capped:
        log.warning("%d of %d paths hit the epoch cap and were excluded", batch.n_capped, n)
    phi = simulate.monte_carlo_functional(spec, cfg.functional, n, cfg.run.master_seed, batch=batch)
    stats = simulate.estimate_exit_stats(spec, n, cfg.run.master_seed, batch=batch)
    return phi, stats


def cmd_analyze(cfg: RunConfig, output):
    write_csv(analyze_rows(cfg), ("quantity", "method", "value", "error_estimate"), output)
    return 0


def cmd_simulate(cfg: RunConfig, output):
    phi, stats = simulate_reports(cfg)
    rows = [("phi", phi.mean, phi.std_error, phi.n_replications)]
    for key in SIMULATE_QUANTITIES:
        r = stats[key]
        rows.append((key, r.mean, r.std_error, r.n_replications))
    write_csv(rows, ("quantity", "mean", "std_error", "n"), output)
    return 0


def compare_rows(cfg: RunConfig):
    spec = cfg.game
    c = derive_constants(spec)
    p = cfg.functional
    phi_mc, stats = simulate_reports(cfg)
    rows = []

    def add(name, analytic_value, report):
        if analytic_value is None or report is None:
            rows.append((name, analytic_value, None if report is None else report.mean, None, None))
            return
        diff = abs(analytic_value - report.mean)
        ok = bool(math.isfinite(diff) and diff <= 3.0 * report.std_error)
        rows.append((name, analytic_value, report.mean, diff, ok))

    def val(r):
        return None if r is None else r.value

    summed = _try("phi_sum", lambda: analytic.functional_phi_sum(spec, p, j_max=cfg.run.j_max, constants=c))
    closed = _try("phi_closed", lambda: analytic.functional_phi_closed(spec, p, constants=c))
    add("phi_sum", val(summed), phi_mc)
    add("phi_closed", val(closed), phi_mc)
    if p.z0 == 1.0 and p.z1 == 1.0:
        joint = _try("phi_joint", lambda: analytic.functional_phi_joint(spec, p, constants=c))
        add("phi_joint", val(joint), phi_mc)
    win = _try("win_probability", lambda: analytic.functional_phi_joint(spec, FunctionalParams(), constants=c))
    add("win_probability", val(win), stats["win_probability"])
    add("e_nu", val(_try("e_nu", lambda: analytic.expected_exit_index(spec, constants=c))), stats["e_nu"])
    add("e_tau_pre", val(_try("e_tau_pre", lambda: analytic.expected_preexit_time(spec, constants=c))),
        stats["e_tau_pre"])

    # closed-form / sum-form discrepancy, reported at two truncation depths
    for j_max in RATIO_J_MAX:
        s = _try(f"phi_sum@{j_max}", lambda: analytic.functional_phi_sum(spec, p, j_max=j_max, constants=c))
        ratio = None
        if s is not None and closed is not None and s.value != 0.0:
            ratio = closed.value / s.value
        rows.append((f"ratio_closed_sum_jmax{j_max}", ratio, None, None, None))
    return rows


def cmd_compare(cfg: RunConfig, output):
    rows = compare_rows(cfg)
    write_csv(rows, ("quantity", "analytic", "simulated", "abs_diff", "in_3se"), output)
    if cfg.game.lambda_b == 0.0:
        failed = [r[0] for r in rows if r[0] in EXACT_GATED and r[4] is False]
        if failed:
            log.error("exact-regime quantities outside 3 standard errors: %s", ", ".join(failed))
            return 1
    return 0


def _parse_values(raw: str, param: str):
    items = [v.strip() for v in raw.split(",") if v.strip()]
    if not items:
        raise UsageError("empty value list")
    out = []
    for v in items:
        try:
            out.append(int(v) if param in ("M_a", "M_b") else float(v))
        except ValueError:
            raise UsageError(f"value {v!r} is not valid for {param}") from None
    return out


def apply_sweep(cfg: RunConfig, param: str, value) -> RunConfig:
    d = config_to_dict(cfg)
    g = d["game"]
    if param == "lambda_a":
        g["lambda_a"] = value
    elif param == "lambda_b":
        g["lambda_b"] = value
    elif param == "M_a":
        g["capacity_a"] = value
    elif param == "M_b":
        g["capacity_b"] = value
    elif param == "delta":
        if cfg.game.observation.step_law.kind is LstKind.DETERMINISTIC:
            g["step_law"]["value"] = 1.0 / value
        else:
            g["step_law"]["rate"] = value
    else:
        raise UsageError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    return replace(cfg, game=game_from_dict(g))


def cmd_sweep(cfg: RunConfig, output, param: str, raw_values: str):
    if param not in SWEEP_PARAMS:
        raise UsageError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    values = _parse_values(raw_values, param)
    rows = []
    for v in values:
        swept = apply_sweep(cfg, param, v)
        _, stats = simulate_reports(swept)
        w, nu, tau = stats["win_probability"], stats["e_nu"], stats["e_tau_pre"]
        rows.append((param, v, w.mean, w.std_error, nu.mean, nu.std_error, tau.mean, tau.std_error))
    header = ("param", "value", "win_probability", "win_probability_se",
              "e_nu", "e_nu_se", "e_tau_pre", "e_tau_pre_se")
    write_csv(rows, header, output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duelfuel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("analyze", "closed-form and series evaluation of the functional and decision parameters"),
        ("simulate", "Monte Carlo estimates"),
        ("compare", "analytic vs Monte Carlo cross-validation"),
        ("sweep", "Monte Carlo sweep over one parameter"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--output", help="CSV path (default: run.output_path, else stdout)")
        if name == "sweep":
            p.add_argument("--param", required=True, help=f"one of {', '.join(SWEEP_PARAMS)}")
            p.add_argument("--values", required=True, help="comma-separated values, in output order")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="duelfuel: %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        output = args.output or cfg.run.output_path
        if args.command == "analyze":
            return cmd_analyze(cfg, output)
        if args.command == "simulate":
            return cmd_simulate(cfg, output)
        if args.command == "compare":
            return cmd_compare(cfg, output)
        return cmd_sweep(cfg, output, args.param, args.values)
    except (ConfigError, UsageError) as exc:
        print(f"duelfuel: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
