"""Text formats: run configuration, event traces and run summaries.

All three are line oriented.  Numbers are written in scientific notation
with a '.' decimal separator.

Config (``key = value``, ``#`` starts a comment)::

    omega = 2.04e-6          # either the four Atwood keys ...
    mu = 8.71e-5
    rho = 0.492
    lambda_ind = 1.14e-3
    # alpha = 7.06e-3, 4.55e-3, 1.54e-3   ... or alpha + lambda_tot
    # lambda_tot = 1.18e-3
    mission_time = 24
    n_components = 4
    n_trials = 10000000
    master_seed = 42

Traces: a ``# ccfsim-trace v1`` line, a CSV header, then one event per line.
Summaries: a ``# ccfsim-summary v1`` line followed by ``key = value`` lines.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from typing import IO, Any, Iterable, Optional, Sequence

from .engine import EventKind, FailureCause, SequenceTrace
from .montecarlo import AggregateCounts, BatchConfig, CountingMode, EstimateReport, ReportRow
from .params import AlphaParams, AtwoodParams

TRACE_HEADER = "# ccfsim-trace v1"
TRACE_COLUMNS = ("trial_id", "time", "kind", "component", "cause")
SUMMARY_HEADER = "# ccfsim-summary v1"

ATWOOD_KEYS = ("omega", "mu", "rho", "lambda_ind")
ALPHA_KEYS = ("alpha", "lambda_tot")
RUN_KEYS = ("mission_time", "n_components", "n_trials", "master_seed", "counting_mode",
            "worker_count", "lethal_base_rate")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration; the message names the offending key."""


def fmt(x: float, digits: int = 16) -> str:
    return f"{x:.{digits}e}"


def parse_float_list(text: str, key: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None


def alpha_from_values(values: Sequence[float], lambda_tot: float, m: Optional[int] = None) -> AlphaParams:
    """``values`` holds alpha_2..alpha_m, or alpha_1..alpha_m when it has ``m`` entries.

    Without an explicit ``m`` the first reading is assumed.
    """
    m = m if m is not None else len(values) + 1
    if len(values) == m - 1:
        return AlphaParams.from_ccf_alphas(values, lambda_tot)
    if len(values) == m:
        return AlphaParams(m=m, alpha=tuple(values), lambda_tot=lambda_tot)
    raise ConfigError(f"alpha: expected {m - 1} (alpha_2..alpha_m) or {m} values, got {len(values)}")


@dataclass
class RunConfig:
    """A resolved run description; exactly one of ``atwood`` / ``alpha`` is set."""

    atwood: Optional[AtwoodParams] = None
    alpha: Optional[AlphaParams] = None
    mission_time: float = 24.0
    n_components: Optional[int] = None
    n_trials: int = 10**7
    master_seed: int = 0
    counting_mode: CountingMode = CountingMode.SHOCK
    worker_count: int = 1
    lethal_base_rate: Optional[float] = None

    @property
    def m(self) -> int:
        if self.n_components is not None:
            return self.n_components
        return self.alpha.m if self.alpha is not None else 4

    def batch(self) -> BatchConfig:
        return BatchConfig(n_trials=self.n_trials, master_seed=self.master_seed,
                           worker_count=self.worker_count, counting_mode=self.counting_mode)


def _convert(key: str, raw: str, kind):
    try:
        if kind is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if kind is CountingMode:
            return CountingMode(raw.strip().lower())
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: invalid value {raw!r}") from None
    raise AssertionError(kind)


_RUN_TYPES = {"mission_time": float, "n_components": int, "n_trials": int, "master_seed": int,
              "counting_mode": CountingMode, "worker_count": int, "lethal_base_rate": float}


def parse_config_text(text: str) -> dict[str, str]:
    """Raw ``key -> value`` mapping; rejects unknown and duplicate keys."""
    known = set(ATWOOD_KEYS) | set(ALPHA_KEYS) | set(RUN_KEYS)
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        if key in out:
            raise ConfigError(f"{key}: duplicate key (line {lineno})")
        out[key] = value
    return out


def build_run_config(raw: dict[str, str]) -> RunConfig:
    """Resolve a raw mapping (config file merged with CLI flags) into a RunConfig."""
    cfg = RunConfig()
    for key in RUN_KEYS:
        if key in raw and raw[key] != "":
            setattr(cfg, key, _convert(key, raw[key], _RUN_TYPES[key]))

    has_atwood = [k for k in ATWOOD_KEYS if k in raw]
    has_alpha = [k for k in ALPHA_KEYS if k in raw]
    if has_atwood and has_alpha:
        raise ConfigError(f"{has_alpha[0]}: give either the Atwood parameters or the alpha factors, not both")
    if not has_atwood and not has_alpha:
        raise ConfigError("omega: no model parameters given (Atwood keys or alpha + lambda_tot)")
    if has_atwood:
        missing = [k for k in ATWOOD_KEYS if k not in raw]
        if missing:
            raise ConfigError(f"{missing[0]}: missing Atwood parameter")
        cfg.atwood = AtwoodParams(*(_convert(k, raw[k], float) for k in ATWOOD_KEYS))
    else:
        missing = [k for k in ALPHA_KEYS if k not in raw]
        if missing:
            raise ConfigError(f"{missing[0]}: missing alpha-model parameter")
        values = parse_float_list(raw["alpha"], "alpha")
        lam = _convert("lambda_tot", raw["lambda_tot"], float)
        cfg.alpha = alpha_from_values(values, lam, cfg.n_components)
    if cfg.atwood is not None and cfg.n_components is None:
        cfg.n_components = 4
    if cfg.n_components is not None and cfg.n_components < 1:
        raise ConfigError("n_components: must be at least 1")
    if cfg.n_trials < 1:
        raise ConfigError("n_trials: must be at least 1")
    if cfg.worker_count < 1:
        raise ConfigError("worker_count: must be at least 1")
    if not (cfg.mission_time > 0 and math.isfinite(cfg.mission_time)):
        raise ConfigError("mission_time: must be positive")
    return cfg


def load_config(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


# -- traces -------------------------------------------------------------------

def write_traces(traces: Iterable[SequenceTrace], out: IO[str]) -> int:
    """Write events of ``traces``; returns the number of event lines."""
    out.write(TRACE_HEADER + "\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    n = 0
    for t in traces:
        for ev in t.events:
            writer.writerow((
                t.trial_id,
                fmt(ev.time, 9),
                ev.kind.value,
                "" if ev.component is None else ev.component,
                "" if ev.cause is None else ev.cause.value,
            ))
            n += 1
    return n


@dataclass(frozen=True)
class TraceRecord:
    trial_id: int
    time: float
    kind: EventKind
    component: Optional[int]
    cause: Optional[FailureCause]


def read_traces(src: IO[str]) -> list[TraceRecord]:
    first = src.readline().strip()
    if first != TRACE_HEADER:
        raise ValueError(f"not a trace file (header {first!r})")
    reader = csv.reader(src)
    if tuple(next(reader)) != TRACE_COLUMNS:
        raise ValueError("unexpected trace columns")
    return [
        TraceRecord(int(tid), float(t), EventKind(kind), int(comp) if comp else None,
                    FailureCause(cause) if cause else None)
        for tid, t, kind, comp, cause in reader
    ]


# -- summaries ----------------------------------------------------------------

@dataclass
class SummaryDocument:
    meta: dict[str, Any]
    inputs: AtwoodParams
    input_alpha: AlphaParams
    counts: AggregateCounts
    report: EstimateReport

    def __eq__(self, other):
        if not isinstance(other, SummaryDocument):
            return NotImplemented
        # wall-clock time is metadata, not part of the result
        strip = lambda d: {k: v for k, v in d.items() if k != "wall_clock_s"}
        return (strip(self.meta) == strip(other.meta) and self.inputs == other.inputs
                and self.input_alpha == other.input_alpha and self.counts == other.counts
                and self.report == other.report)


def _fmt_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return fmt(v)
    if isinstance(v, (tuple, list)):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, CountingMode):
        return v.value
    return str(v)


def _status(row: ReportRow) -> str:
    return {True: "pass", False: "fail", None: "n/a"}[row.passed]


def render_summary(doc: SummaryDocument) -> str:
    lines = [SUMMARY_HEADER]
    put = lambda k, v: lines.append(f"{k} = {_fmt_value(v)}")
    for k, v in doc.meta.items():
        put(f"meta.{k}", v)
    for f in fields(AtwoodParams):
        put(f"input.{f.name}", getattr(doc.inputs, f.name))
    put("input.lambda_tot", doc.inputs.lambda_tot)
    put("input.alpha", doc.input_alpha.alpha)
    put("input.alpha_lambda_tot", doc.input_alpha.lambda_tot)
    for f in fields(AggregateCounts):
        put(f"counts.{f.name}", getattr(doc.counts, f.name))
    put("report.primary_mode", doc.report.primary_mode)
    put("report.tolerance_scale", doc.report.tolerance_scale)
    put("report.passed", doc.report.passed)
    for r in doc.report.rows:
        put(f"row.{r.name}.estimate", r.estimate)
        put(f"row.{r.name}.reference", r.reference)
        put(f"row.{r.name}.tolerance", r.tolerance)
        put(f"row.{r.name}.check", r.check)
        put(f"row.{r.name}.deviation", r.deviation)
        lines.append(f"row.{r.name}.status = {_status(r)}")
    return "\n".join(lines) + "\n"


def _scalar(text: str):
    if text == "none":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_summary(text: str) -> SummaryDocument:
    lines = text.splitlines()
    if not lines or lines[0].strip() != SUMMARY_HEADER:
        raise ValueError("not a summary document")
    kv: dict[str, str] = {}
    for line in lines[1:]:
        if line.strip():
            k, v = (s.strip() for s in line.split("=", 1))
            kv[k] = v

    meta = {k[5:]: _scalar(v) for k, v in kv.items() if k.startswith("meta.")}
    if "counting_mode" in meta:
        meta["counting_mode"] = CountingMode(meta["counting_mode"])
    inputs = AtwoodParams(*(float(kv[f"input.{k}"]) for k in ATWOOD_KEYS))
    alpha = tuple(parse_float_list(kv["input.alpha"], "input.alpha"))
    input_alpha = AlphaParams(m=len(alpha), alpha=alpha, lambda_tot=float(kv["input.alpha_lambda_tot"]))

    count_values = {}
    for f in fields(AggregateCounts):
        raw = kv[f"counts.{f.name}"]
        if f.name == "mission_time":
            count_values[f.name] = float(raw)
        elif f.name.startswith("hist_"):
            count_values[f.name] = tuple(int(x) for x in raw.split(","))
        else:
            count_values[f.name] = int(raw)
    counts = AggregateCounts(**count_values)

    rows, seen = [], []
    for k in kv:
        if k.startswith("row.") and k.endswith(".estimate"):
            seen.append(k[4:-9])
    for name in seen:
        tol = kv[f"row.{name}.tolerance"]
        rows.append(ReportRow(
            name=name,
            estimate=float(kv[f"row.{name}.estimate"]),
            reference=float(kv[f"row.{name}.reference"]),
            tolerance=None if tol == "none" else float(tol),
            check=kv[f"row.{name}.check"],
        ))
    report = EstimateReport(rows=tuple(rows), inputs=inputs,
                            primary_mode=CountingMode(kv["report.primary_mode"]),
                            tolerance_scale=float(kv["report.tolerance_scale"]))
    return SummaryDocument(meta=meta, inputs=inputs, input_alpha=input_alpha, counts=counts, report=report)


def format_report_table(report: EstimateReport) -> str:
    """Human-readable comparison table."""
    buf = io.StringIO()
    buf.write(f"{'parameter':<20} {'estimated':>12} {'input':>12} {'deviation':>10} {'tolerance':>10}  status\n")
    for r in report.rows:
        dev = "-" if r.deviation is None else f"{100 * r.deviation:.2f}%"
        if r.check == "below":
            tol = "< input"
        else:
            tol = "-" if r.tolerance is None else f"{100 * r.tolerance:.2f}%"
        buf.write(f"{r.name:<20} {r.estimate:>12.4e} {r.reference:>12.4e} {dev:>10} {tol:>10}  {_status(r)}\n")
    return buf.getvalue()
