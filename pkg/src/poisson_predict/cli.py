"""Command line interface: ``poisson-predict <command> [options]``.

Commands: ``kfun``, ``predict``, ``estimate``, ``risk``, ``dominance``, ``verify``.

Exit codes: 0 success, 1 configuration error, 2 numerical precondition
violation, 3 verification failure (a failed check or a grid point without
demonstrated dominance).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import FORMATS, PRIOR_KINDS, ConfigError, ExperimentConfig
from .errors import PoissonPredictError
from .estimation import EstimateQuery, posterior_mean
from .kfun import k_eval, shrink_factor
from .model import HarmonicSchedule, harmonic_time
from .predictive import PredictiveQuery, log_pred
from .risk import RiskQuery, compare_risks, risk_difference_via_integral, risk_eval
from .verify import SUITES, run_suite

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_VERIFY = 0, 1, 2, 3


def fmt(value: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(value), ".17g")


def _vector(text: str, name: str, cast=float) -> list:
    try:
        return [cast(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(name, f"cannot parse {text!r} as a comma separated list") from None


def _grid(text: str) -> list:
    """``"0.1,1,5"`` for every coordinate or ``"0.1,1;2,3;5"`` per coordinate."""
    return [_vector(part, "lambda_grid") for part in text.split(";")]


# ---------------------------------------------------------------------------
# configuration assembly


def _config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (if any) with command line flags layered on top."""
    data: dict[str, Any] = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"<{args.config} line {exc.lineno} column {exc.colno}>", exc.msg) from None
        if not isinstance(data, dict):
            raise ConfigError("<root>", "expected a JSON object")
    for key in ("r", "s", "beta", "gamma"):
        if getattr(args, key, None) is not None:
            data[key] = _vector(getattr(args, key), key)
    for key in ("prior", "alpha"):
        if getattr(args, key, None) is not None:
            data[key] = getattr(args, key)
    if getattr(args, "lambda_grid", None) is not None:
        data["lambda_grid"] = _grid(args.lambda_grid)
    if getattr(args, "sample", None) is not None:
        data["lambda_sample"] = args.sample
    if getattr(args, "sample_seed", None) is not None:
        data["lambda_sample_seed"] = args.sample_seed
    method = dict(data.get("method", {})) if isinstance(data.get("method", {}), dict) else data.get("method")
    for flag, key in (("method", "kind"), ("tail_mass", "tail_mass"), ("n_samples", "n_samples"), ("seed", "seed")):
        if getattr(args, flag, None) is not None:
            method[key] = getattr(args, flag)
    if method:
        data["method"] = method
    for key in ("n_tau", "sigma", "threads"):
        if getattr(args, key, None) is not None:
            data[key] = getattr(args, key)
    if getattr(args, "cross_check", False):
        data["cross_check"] = True
    output = dict(data.get("output", {})) if isinstance(data.get("output", {}), dict) else data.get("output")
    if getattr(args, "format", None) is not None:
        output["format"] = args.format
    if getattr(args, "output", None) is not None:
        output["path"] = args.output
    if output:
        data["output"] = output
    return ExperimentConfig.from_dict(data)


def _header(command: str, provenance: dict) -> list[str]:
    return [f"# poisson-predict {__version__} {command}", "# " + json.dumps(provenance, sort_keys=True)]


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_kfun(args) -> int:
    gamma = _vector(args.gamma, "gamma")
    x = _vector(args.x, "x")
    res = k_eval(gamma, x, args.alpha)
    lines = [f"K = {fmt(res.value)}", f"log_K = {fmt(res.log_value)}", f"est_rel_err = {res.est_rel_err:.3g}"]
    if args.factor is not None:
        lines.append(f"f_{args.factor} = {fmt(shrink_factor(gamma, x, args.alpha, args.factor))}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _config(args)
    query = PredictiveQuery(cfg.exposures(), cfg.selected_prior(), _vector(args.x, "x", int), args.tau, args.delta)
    logp = log_pred(query, _vector(args.y, "y", int))
    print("\n".join(_header("predict", {"prior": cfg.prior, "tau": args.tau, "delta": args.delta})))
    print(f"log_p = {fmt(logp)}\np = {fmt(math.exp(logp))}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = _config(args)
    if args.t is not None:
        t = _vector(args.t, "t")
    else:
        t, _ = harmonic_time(HarmonicSchedule(cfg.exposures()), args.tau)
    est = posterior_mean(EstimateQuery(tuple(t), cfg.selected_prior(), _vector(args.z, "z", int)))
    print("\n".join(_header("estimate", {"prior": cfg.prior, "t": [float(v) for v in t]})))
    print("lambda_hat = " + ",".join(fmt(v) for v in est.lam))
    return EXIT_OK


def cmd_risk(args) -> int:
    cfg = _config(args)
    lam = _vector(args.lam, "lambda")
    rep = risk_eval(RiskQuery(cfg.exposures(), tuple(lam), cfg.selected_prior(), cfg.method_obj()))
    print("\n".join(_header("risk", {**cfg.provenance(), "lambda": lam})))
    print(f"risk = {fmt(rep.risk)}\nerr_bound = {fmt(rep.err_bound)}\nn_k_evals = {rep.n_k_evals}")
    return EXIT_OK


def _dominance_row(cfg: ExperimentConfig, power, shrink, method, lam) -> dict[str, Any]:
    row: dict[str, Any] = {"lambda": list(lam)}
    try:
        cmp_ = compare_risks(cfg.exposures(), lam, power, shrink, method)
        row.update(
            risk_power=cmp_.a.risk,
            risk_shrink=cmp_.b.risk,
            diff=cmp_.diff,
            diff_err=cmp_.diff_err,
            dominates=int(cmp_.diff > 0 and cmp_.diff > cfg.sigma * cmp_.diff_err),
            status="ok",
        )
        if cfg.cross_check:
            row["integral_diff"] = risk_difference_via_integral(
                cfg.exposures(), lam, power, shrink, n_tau=cfg.n_tau, tail_mass=cfg.method.tail_mass
            )
    except PoissonPredictError as exc:
        row.update(risk_power=None, risk_shrink=None, diff=None, diff_err=None, dominates=0, status=f"error: {exc}")
        if cfg.cross_check:
            row["integral_diff"] = None
    return row


def dominance_table(cfg: ExperimentConfig) -> tuple[str, bool]:
    """Render the dominance table; returns ``(text, all_dominate)``.

    Preconditions (prior assumptions, grid validity) are checked before any
    risk is computed.  Rows come back in grid order for any thread count.
    """
    power, shrink = cfg.power_prior(), cfg.shrinkage_prior()
    if hasattr(shrink, "require_strict"):
        shrink.require_strict()
    method = cfg.method_obj()
    points = cfg.lambda_points()
    with ThreadPoolExecutor(max_workers=cfg.n_threads()) as pool:
        rows = list(pool.map(lambda lam: _dominance_row(cfg, power, shrink, method, lam), points))

    d = cfg.d
    columns = [f"lambda_{i + 1}" for i in range(d)] + ["risk_power", "risk_shrink", "diff", "diff_err"]
    if cfg.cross_check:
        columns.append("integral_diff")
    columns += ["dominates", "status"]
    provenance = {**cfg.provenance(), "n_tau": cfg.n_tau, "sigma": cfg.sigma, "cross_check": cfg.cross_check}
    if cfg.prior == "explicit":
        provenance.update(alpha=cfg.alpha, gamma=cfg.gamma)
    buf = io.StringIO()
    buf.write("\n".join(_header("dominance", provenance)) + "\n")
    if cfg.output.format == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            values = list(row["lambda"]) + [row[c] for c in columns[d:]]
            writer.writerow(["" if v is None else fmt(v) if isinstance(v, float) else v for v in values])
    else:
        for row in rows:
            flat = {f"lambda_{i + 1}": v for i, v in enumerate(row["lambda"])}
            flat.update({c: row[c] for c in columns[d:]})
            buf.write(json.dumps(flat) + "\n")
    return buf.getvalue(), all(row["dominates"] == 1 for row in rows)


def cmd_dominance(args) -> int:
    cfg = _config(args)
    text, ok = dominance_table(cfg)
    _emit(text, cfg.output.path)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_verify(args) -> int:
    results = run_suite(args.suite)
    failed = [c for c in results if not c.passed]
    for c in results:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name} deviation={c.deviation:.3e} tol={c.tolerance:.1e} {c.detail}".rstrip())
    worst = max(results, key=lambda c: c.deviation / c.tolerance if c.tolerance > 0 else (np.inf if c.deviation > 0 else 0.0))
    print(
        f"{args.suite}: {len(results)} checks, {len(results) - len(failed)} passed, {len(failed)} failed; "
        f"worst {worst.name} deviation={worst.deviation:.3e}"
    )
    return EXIT_OK if not failed else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config; flags override its fields")
    p.add_argument("--r", help="observation exposures, e.g. 1,2,3")
    p.add_argument("--s", help="prediction exposures, e.g. 2,1,4")
    p.add_argument("--prior", choices=PRIOR_KINDS)
    p.add_argument("--beta", help="power-prior exponents")
    p.add_argument("--alpha", type=float, help="shrinkage exponent (explicit prior)")
    p.add_argument("--gamma", help="shrinkage scales (explicit prior)")


def _add_method_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("exact", "mc"))
    p.add_argument("--tail-mass", type=float, dest="tail_mass")
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--seed", type=int)


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: config error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="poisson-predict", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kfun", help="evaluate K(gamma, x, alpha) and optionally a shrinkage factor")
    p.add_argument("--gamma", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--factor", type=int, help="also print f_i for this coordinate index")
    p.set_defaults(func=cmd_kfun)

    p = sub.add_parser("predict", help="predictive probability of an increment y given x")
    _add_model_flags(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("estimate", help="posterior mean of lambda given z ~ Poisson(t lambda)")
    _add_model_flags(p)
    p.add_argument("--z", required=True)
    p.add_argument("--t", help="exposures t (default: harmonic time t(tau) from r, s)")
    p.add_argument("--tau", type=float, default=0.0)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("risk", help="Kullback-Leibler risk of one prior at one lambda")
    _add_model_flags(p)
    _add_method_flags(p)
    p.add_argument("--lambda", dest="lam", required=True)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("dominance", help="risk of power vs shrinkage prior over a lambda grid")
    _add_model_flags(p)
    _add_method_flags(p)
    p.add_argument("--lambda-grid", dest="lambda_grid", help="'0.1,1,5' for all coordinates or 'a,b;c;d,e' per coordinate")
    p.add_argument("--sample", type=int, help="evaluate a seeded random subset of this many grid points")
    p.add_argument("--sample-seed", type=int, dest="sample_seed")
    p.add_argument("--cross-check", action="store_true", dest="cross_check", help="add the harmonic-time integral route")
    p.add_argument("--n-tau", type=int, dest="n_tau")
    p.add_argument("--sigma", type=float, help="dominance requires diff > sigma * diff_err")
    p.add_argument("--threads", type=int, help="worker threads (default: POISSON_PREDICT_THREADS or all cores)")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--output", help="write the table here instead of stdout")
    p.set_defaults(func=cmd_dominance)

    p = sub.add_parser("verify", help="run a seeded property suite")
    p.add_argument("suite", choices=SUITES)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PoissonPredictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
