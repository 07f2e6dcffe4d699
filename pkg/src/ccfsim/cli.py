"""Command-line interface: ``convert``, ``simulate`` and ``verify``.

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 verification outside tolerance, 4 sample too small to verify.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import Optional, Sequence

from . import __version__
from .engine import MissionConfig, simulate_sequence
from .fileio import (
    ConfigError,
    RunConfig,
    SummaryDocument,
    alpha_from_values,
    build_run_config,
    fmt,
    format_report_table,
    load_config,
    parse_float_list,
    render_summary,
    write_traces,
)
from .montecarlo import (
    CountingMode,
    SimulationError,
    estimates_from_counts,
    reference_alpha,
    run_batch,
    sample_sufficiency,
    verification_report,
)
from .params import AlphaParams, AtwoodParams, ParameterError, alpha_to_atwood, atwood_to_alpha, validate_atwood
from .sampling import derive_stream

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_TOLERANCE = 3
EXIT_INSUFFICIENT = 4

MAX_TRACE_TRIALS = 10**5

logger = logging.getLogger("ccfsim")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--params", metavar="FILE", help="key=value run configuration file")
    p.add_argument("--omega", type=str, help="lethal shock rate (/h)")
    p.add_argument("--mu", type=str, help="non-lethal shock rate (/h)")
    p.add_argument("--rho", type=str, help="failure probability per component given a non-lethal shock")
    p.add_argument("--lambda-ind", dest="lambda_ind", type=str, help="independent failure rate (/h)")
    p.add_argument("--alpha", type=str, help="alpha_2,...,alpha_m (or alpha_1,...,alpha_m)")
    p.add_argument("--lambda-tot", dest="lambda_tot", type=str, help="total failure rate (/h)")
    p.add_argument("--group-size", dest="n_components", type=str, help="number of components m")
    p.add_argument("--mission", dest="mission_time", type=str, help="mission time T in hours")
    p.add_argument("--trials", dest="n_trials", type=str, help="number of simulated sequences")
    p.add_argument("--seed", dest="master_seed", type=str, help="master seed")
    p.add_argument("--workers", dest="worker_count", type=str, help="worker processes")
    p.add_argument("--counting", dest="counting_mode", choices=[m.value for m in CountingMode])
    p.add_argument("--lethal-base-rate", dest="lethal_base_rate", type=str,
                   help="rate of the truncated exponential after a lethal shock (default lambda_ind)")
    p.add_argument("--summary", metavar="FILE", help="write the summary document here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccfsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convert", help="convert between alpha factors and Atwood parameters")
    conv.add_argument("--alpha", help="alpha_2,...,alpha_m (or alpha_1,...,alpha_m)")
    conv.add_argument("--lambda-tot", dest="lambda_tot", type=float)
    conv.add_argument("--atwood", help="omega,mu,rho,lambda_ind")
    conv.add_argument("--group-size", dest="group_size", type=int, default=None)
    conv.add_argument("--allow-pure-lethal", action="store_true",
                      help="accept alpha sets explained by lethal shocks alone")

    sim = sub.add_parser("simulate", help="run the Monte Carlo and write a summary")
    _add_model_args(sim)
    sim.add_argument("--traces", metavar="FILE", help="write per-event traces")
    sim.add_argument("--force-traces", action="store_true",
                     help=f"allow trace export above {MAX_TRACE_TRIALS} trials")

    ver = sub.add_parser("verify", help="simulate, estimate and compare against the inputs")
    _add_model_args(ver)
    return parser


def cmd_convert(args) -> int:
    if (args.alpha is None) == (args.atwood is None):
        raise ConfigError("convert: give exactly one of --alpha or --atwood")
    if args.alpha is not None:
        if args.lambda_tot is None:
            raise ConfigError("lambda_tot: --lambda-tot is required with --alpha")
        a = alpha_from_values(parse_float_list(args.alpha, "alpha"), args.lambda_tot, args.group_size)
        p = alpha_to_atwood(a, allow_pure_lethal=args.allow_pure_lethal)
        for name in ("omega", "mu", "rho", "lambda_ind"):
            print(f"{name} = {fmt(getattr(p, name), 6)}")
    else:
        values = parse_float_list(args.atwood, "atwood")
        if len(values) != 4:
            raise ConfigError("atwood: expected omega,mu,rho,lambda_ind")
        a = atwood_to_alpha(AtwoodParams(*values), args.group_size or 4)
        for k, value in enumerate(a.alpha, start=1):
            print(f"alpha_{k} = {fmt(value, 6)}")
        print(f"lambda_tot = {fmt(a.lambda_tot, 6)}")
    return EXIT_OK


def resolve_config(args) -> RunConfig:
    raw = load_config(args.params) if args.params else {}
    flags = {k: getattr(args, k) for k in
             ("omega", "mu", "rho", "lambda_ind", "alpha", "lambda_tot", "n_components", "mission_time",
              "n_trials", "master_seed", "worker_count", "counting_mode", "lethal_base_rate")}
    flags = {k: v for k, v in flags.items() if v is not None}
    # flags of one model family replace the other family from the file
    if any(k in flags for k in ("omega", "mu", "rho", "lambda_ind")):
        raw = {k: v for k, v in raw.items() if k not in ("alpha", "lambda_tot")}
    if any(k in flags for k in ("alpha", "lambda_tot")):
        raw = {k: v for k, v in raw.items() if k not in ("omega", "mu", "rho", "lambda_ind")}
    raw.update(flags)
    return build_run_config(raw)


def _model(cfg: RunConfig) -> tuple[AtwoodParams, Optional[AlphaParams]]:
    if cfg.alpha is not None:
        return alpha_to_atwood(cfg.alpha), cfg.alpha
    return validate_atwood(cfg.atwood), None


def _run(cfg: RunConfig):
    inputs, input_alpha = _model(cfg)
    mission = MissionConfig(cfg.mission_time, cfg.m, cfg.lethal_base_rate)
    started = time.perf_counter()
    counts = run_batch(inputs, mission, cfg.batch())
    elapsed = time.perf_counter() - started
    report = verification_report(estimates_from_counts(counts), inputs, m=cfg.m, input_alpha=input_alpha,
                                 primary_mode=cfg.counting_mode, n_trials=cfg.n_trials,
                                 mission_time=cfg.mission_time)
    if input_alpha is None:
        input_alpha = reference_alpha(inputs, cfg.m)
    meta = {
        "master_seed": cfg.master_seed,
        "n_trials": cfg.n_trials,
        "mission_time": cfg.mission_time,
        "n_components": cfg.m,
        "counting_mode": cfg.counting_mode,
        "lethal_base_rate": cfg.lethal_base_rate,
        "wall_clock_s": round(elapsed, 3),
    }
    doc = SummaryDocument(meta=meta, inputs=inputs, input_alpha=input_alpha, counts=counts, report=report)
    return doc, mission


def _write_summary(doc: SummaryDocument, path: Optional[str]) -> None:
    text = render_summary(doc)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    if args.traces and cfg.n_trials > MAX_TRACE_TRIALS and not args.force_traces:
        raise ConfigError(f"n_trials: trace export limited to {MAX_TRACE_TRIALS} trials (use --force-traces)")
    doc, mission = _run(cfg)
    if args.traces:
        with open(args.traces, "w", encoding="utf-8", newline="") as fh:
            traces = (simulate_sequence(doc.inputs, mission, derive_stream(cfg.master_seed, i))
                      for i in range(cfg.n_trials))
            write_traces(traces, fh)
    _write_summary(doc, args.summary)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = resolve_config(args)
    doc, _ = _run(cfg)
    report = doc.report
    print(f"trials = {cfg.n_trials}  mission_time = {cfg.mission_time:g} h  seed = {cfg.master_seed}  "
          f"m = {cfg.m}  counting = {cfg.counting_mode.value}")
    print(f"input lambda_ind = {doc.inputs.lambda_ind:.4e} /h  input lambda_tot = {doc.inputs.lambda_tot:.4e} /h")
    if report.tolerance_scale != 1.0:
        print(f"tolerances widened x{report.tolerance_scale:.3g} for the sample size")
    print(format_report_table(report), end="")
    if args.summary:
        _write_summary(doc, args.summary)
    reasons = sample_sufficiency(doc.counts, doc.inputs)
    if reasons:
        print("verdict: insufficient sample (" + "; ".join(reasons) + ")")
        return EXIT_INSUFFICIENT
    if not report.passed:
        print("verdict: FAIL (" + ", ".join(r.name for r in report.failures) + ")")
        return EXIT_TOLERANCE
    print("verdict: PASS")
    return EXIT_OK


COMMANDS = {"convert": cmd_convert, "simulate": cmd_simulate, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if getattr(exc, "filename", None) == getattr(args, "params", None) else EXIT_RUNTIME
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
