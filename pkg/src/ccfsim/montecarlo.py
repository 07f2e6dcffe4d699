"""Batch Monte Carlo over many missions, counters and parameter estimators.

Trial ``i`` always uses the stream ``derive_stream(master_seed, i)``, and the
counters are plain integer sums.  A batch therefore returns the same
:class:`AggregateCounts` whatever the number of workers or the chunking.

Two readings of "failures in a shock sequence" are kept side by side:

``CountingMode.SHOCK``
    only failures caused by the shock itself;
``CountingMode.SEQUENCE``
    every component failed at mission end in a sequence that saw a shock.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from enum import Enum
from typing import Iterable, Mapping, Optional

import numpy as np

from .engine import EventKind, MissionConfig, SequenceTrace, classify_sequence
from .params import AlphaParams, AtwoodParams, atwood_to_alpha, validate_atwood
from .sampling import (
    exp_sample,
    nonlethal_effective_rate,
    stream_keys,
    truncated_exp_sample,
    uniforms_at,
)

logger = logging.getLogger(__name__)

CHUNK_SIZE = 1 << 18
REFERENCE_TRIALS = 10**7

# Relative tolerances at REFERENCE_TRIALS trials; widened by sqrt(N_ref / N) below that.
DEFAULT_TOLERANCES = {
    "omega": 0.15,
    "mu": 0.02,
    "lambda_tot": 0.01,
    "alpha_2": 0.05,
    "alpha_3": 0.07,
    "alpha_4": 0.12,
    "rho": 0.03,
}
FALLBACK_ALPHA_TOLERANCE = 0.12
MIN_EXPECTED_LETHAL = 10.0
MIN_EXPECTED_NONLETHAL = 100.0


class CountingMode(str, Enum):
    SHOCK = "shock"
    SEQUENCE = "sequence"


class SimulationError(RuntimeError):
    """A batch could not be completed; no partial counts are returned."""


@dataclass(frozen=True)
class BatchConfig:
    n_trials: int
    master_seed: int = 0
    worker_count: int = 1
    counting_mode: CountingMode = CountingMode.SHOCK

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be at least 1, got {self.n_trials}")
        if self.worker_count < 1:
            raise ValueError(f"worker_count must be at least 1, got {self.worker_count}")
        object.__setattr__(self, "counting_mode", CountingMode(self.counting_mode))


@dataclass(frozen=True)
class AggregateCounts:
    """Integer counters over a set of trials.

    ``hist_shock[k]`` / ``hist_sequence[k]`` count shock-containing sequences
    with ``k`` failures under the respective counting mode, ``k = 0..m``.
    """

    n_trials: int
    mission_time: float
    m: int
    n_lethal_shocks: int = 0
    n_nonlethal_shocks: int = 0
    total_failures: int = 0
    independent_failures: int = 0
    lethal_shock_failures: int = 0
    nonlethal_shock_failures: int = 0
    nonlethal_sequence_failures: int = 0
    hist_shock: tuple[int, ...] = ()
    hist_sequence: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("hist_shock", "hist_sequence"):
            h = tuple(int(x) for x in getattr(self, name)) or (0,) * (self.m + 1)
            if len(h) != self.m + 1:
                raise ValueError(f"{name} must have {self.m + 1} entries")
            object.__setattr__(self, name, h)

    @classmethod
    def empty(cls, mission_time: float, m: int) -> AggregateCounts:
        return cls(n_trials=0, mission_time=mission_time, m=m)

    @property
    def n_shocks(self) -> int:
        return self.n_lethal_shocks + self.n_nonlethal_shocks

    def k_histogram(self, mode: CountingMode = CountingMode.SHOCK) -> dict[int, int]:
        h = self.hist_shock if CountingMode(mode) is CountingMode.SHOCK else self.hist_sequence
        return {k: h[k] for k in range(1, self.m + 1)}

    def nonlethal_failures(self, mode: CountingMode = CountingMode.SHOCK) -> int:
        if CountingMode(mode) is CountingMode.SHOCK:
            return self.nonlethal_shock_failures
        return self.nonlethal_sequence_failures

    def merge(self, other: AggregateCounts) -> AggregateCounts:
        if (self.m, self.mission_time) != (other.m, other.mission_time):
            raise ValueError("cannot merge counts from different mission configurations")
        values = {}
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if f.name in ("mission_time", "m"):
                values[f.name] = a
            elif isinstance(a, tuple):
                values[f.name] = tuple(x + y for x, y in zip(a, b))
            else:
                values[f.name] = a + b
        return AggregateCounts(**values)

    def check(self) -> None:
        """Assert the internal accounting identities."""
        assert self.total_failures == (
            self.independent_failures + self.lethal_shock_failures + self.nonlethal_shock_failures
        )
        assert sum(self.hist_shock) == self.n_shocks == sum(self.hist_sequence)
        assert sum(k * n for k, n in enumerate(self.hist_shock)) == (
            self.lethal_shock_failures + self.nonlethal_shock_failures
        )


def count_traces(traces: Iterable[SequenceTrace], mission_time: float, m: int) -> AggregateCounts:
    """Aggregate counters from explicit traces (the slow, per-event route)."""
    c = dict(n_trials=0, n_lethal_shocks=0, n_nonlethal_shocks=0, total_failures=0,
             independent_failures=0, lethal_shock_failures=0, nonlethal_shock_failures=0,
             nonlethal_sequence_failures=0)
    hist_shock = [0] * (m + 1)
    hist_sequence = [0] * (m + 1)
    for t in traces:
        s = classify_sequence(t)
        c["n_trials"] += 1
        c["total_failures"] += s.n_total_failures
        c["independent_failures"] += s.n_independent_failures
        if s.shock_kind is EventKind.LETHAL_SHOCK:
            c["n_lethal_shocks"] += 1
            c["lethal_shock_failures"] += s.n_shock_failures
        elif s.shock_kind is EventKind.NON_LETHAL_SHOCK:
            c["n_nonlethal_shocks"] += 1
            c["nonlethal_shock_failures"] += s.n_shock_failures
            c["nonlethal_sequence_failures"] += s.n_total_failures
        if s.shock_kind is not None:
            hist_shock[s.n_shock_failures] += 1
            hist_sequence[s.n_total_failures] += 1
    return AggregateCounts(mission_time=mission_time, m=m, hist_shock=tuple(hist_shock),
                           hist_sequence=tuple(hist_sequence), **c)


def simulate_chunk(p: AtwoodParams, cfg: MissionConfig, master_seed: int, start: int, stop: int) -> AggregateCounts:
    """Vectorised equivalent of running :func:`simulate_sequence` for trials ``start..stop-1``.

    Uses the same draw schedule and the same sampler functions, so it gives
    exactly the counts of :func:`count_traces` over those traces.
    """
    T = cfg.mission_time
    m = cfg.n_components
    keys = stream_keys(master_seed, np.arange(start, stop, dtype=np.uint64))

    tf_lethal = exp_sample(p.omega, uniforms_at(keys, 0))
    tf_nonlethal = exp_sample(p.mu, uniforms_at(keys, 1))
    tf = exp_sample(p.lambda_ind, uniforms_at(keys[:, None], np.arange(2, 2 + m)[None, :]))

    t_s = np.minimum(tf_lethal, tf_nonlethal)
    failed_indep = tf <= np.minimum(t_s, T)[:, None]
    running = ~failed_indep
    shocked = (t_s < T) & running.any(axis=1)

    rows = np.flatnonzero(shocked)
    run = running[rows]
    ts = t_s[rows][:, None]
    lethal = (tf_lethal <= tf_nonlethal)[rows]
    # resample draws are consumed only by running components, in index order
    draw = 2 + m + np.cumsum(run, axis=1) - run
    u = uniforms_at(keys[rows][:, None], draw)
    window = T - ts

    t_new = np.empty_like(u)
    lethal_like = lethal | (p.rho >= 1.0)
    if lethal_like.any():
        sel = lethal_like
        t_new[sel] = np.minimum(ts[sel] + truncated_exp_sample(cfg.base_rate(p), window[sel], u[sel]), T)
    if (~lethal_like).any():
        sel = ~lethal_like
        rate = nonlethal_effective_rate(p.rho, window[sel])
        t_new[sel] = ts[sel] + exp_sample(rate, u[sel])
    shock_fail = run & (t_new <= T)

    k_shock = shock_fail.sum(axis=1)
    k_sequence = k_shock + (~run).sum(axis=1)
    indep = int(failed_indep.sum())
    lethal_sf = int(k_shock[lethal].sum())
    nonlethal_sf = int(k_shock[~lethal].sum())
    return AggregateCounts(
        n_trials=stop - start,
        mission_time=T,
        m=m,
        n_lethal_shocks=int(lethal.sum()),
        n_nonlethal_shocks=int((~lethal).sum()),
        total_failures=indep + lethal_sf + nonlethal_sf,
        independent_failures=indep,
        lethal_shock_failures=lethal_sf,
        nonlethal_shock_failures=nonlethal_sf,
        nonlethal_sequence_failures=int(k_sequence[~lethal].sum()),
        hist_shock=tuple(np.bincount(k_shock, minlength=m + 1).tolist()),
        hist_sequence=tuple(np.bincount(k_sequence, minlength=m + 1).tolist()),
    )


def _chunks(n_trials: int, size: int):
    for start in range(0, n_trials, size):
        yield start, min(start + size, n_trials)


def run_batch(p: AtwoodParams, cfg: MissionConfig, b: BatchConfig) -> AggregateCounts:
    validate_atwood(p)
    total = AggregateCounts.empty(cfg.mission_time, cfg.n_components)
    size = CHUNK_SIZE
    if b.worker_count > 1:
        # give every worker something to do; counts do not depend on chunking
        size = max(1, min(size, -(-b.n_trials // b.worker_count)))
    spans = list(_chunks(b.n_trials, size))
    try:
        if b.worker_count == 1 or len(spans) == 1:
            for start, stop in spans:
                total = total.merge(simulate_chunk(p, cfg, b.master_seed, start, stop))
        else:
            with ProcessPoolExecutor(max_workers=min(b.worker_count, len(spans))) as pool:
                futures = [pool.submit(simulate_chunk, p, cfg, b.master_seed, s, e) for s, e in spans]
                for fut in futures:
                    total = total.merge(fut.result())
    except (MemoryError, OSError, RuntimeError) as exc:
        raise SimulationError(f"batch of {b.n_trials} trials failed: {exc}") from exc
    logger.debug("batch done: %d trials, %d shocks", total.n_trials, total.n_shocks)
    return total


@dataclass(frozen=True)
class AtwoodEstimate:
    omega: float
    mu: float
    rho: float
    lambda_tot: float


def estimate_atwood(c: AggregateCounts, mode: CountingMode = CountingMode.SHOCK) -> AtwoodEstimate:
    exposure = c.mission_time * c.n_trials
    rho = c.nonlethal_failures(mode) / (c.m * c.n_nonlethal_shocks) if c.n_nonlethal_shocks else 0.0
    return AtwoodEstimate(
        omega=c.n_lethal_shocks / exposure,
        mu=c.n_nonlethal_shocks / exposure,
        rho=rho,
        lambda_tot=c.total_failures / (c.m * exposure),
    )


def estimate_alpha(c: AggregateCounts, mode: CountingMode = CountingMode.SHOCK) -> dict[int, float]:
    """alpha_k for ``k = 2..m``; alpha_1 is not estimated."""
    if c.total_failures == 0:
        raise ValueError("no failures observed")
    hist = c.k_histogram(mode)
    return {k: hist[k] / c.total_failures for k in range(2, c.m + 1)}


@dataclass(frozen=True)
class ModeEstimate:
    atwood: AtwoodEstimate
    alpha: Mapping[int, float]


def estimates_from_counts(c: AggregateCounts) -> dict[CountingMode, ModeEstimate]:
    alpha = {mode: (estimate_alpha(c, mode) if c.total_failures else {k: 0.0 for k in range(2, c.m + 1)})
             for mode in CountingMode}
    return {mode: ModeEstimate(estimate_atwood(c, mode), alpha[mode]) for mode in CountingMode}


@dataclass(frozen=True)
class ReportRow:
    """One line of the comparison table.

    ``check`` is ``"relative"`` (pass when the relative deviation is within
    ``tolerance``), ``"below"`` (pass when the estimate is below the
    reference) or ``"info"`` (never checked).
    """

    name: str
    estimate: float
    reference: float
    tolerance: Optional[float] = None
    check: str = "relative"

    @property
    def deviation(self) -> Optional[float]:
        if self.reference > 0:
            return abs(self.estimate - self.reference) / self.reference
        return None

    @property
    def passed(self) -> Optional[bool]:
        if self.check == "below":
            return self.estimate < self.reference
        if self.check != "relative" or self.tolerance is None or self.deviation is None:
            return None
        return self.deviation <= self.tolerance


@dataclass(frozen=True)
class EstimateReport:
    rows: tuple[ReportRow, ...]
    inputs: AtwoodParams
    primary_mode: CountingMode = CountingMode.SHOCK
    tolerance_scale: float = 1.0

    def row(self, name: str) -> ReportRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def failures(self) -> list[ReportRow]:
        return [r for r in self.rows if r.passed is False]

    @property
    def passed(self) -> bool:
        return not self.failures


def reference_alpha(p: AtwoodParams, m: int) -> AlphaParams:
    """Alpha factors implied by ``p``; all-independent when nothing can fail."""
    if p.lambda_tot > 0:
        return atwood_to_alpha(p, m)
    return AlphaParams(m, (1.0,) + (0.0,) * (m - 1), 0.0)


def expected_lambda_tot_estimate(p: AtwoodParams, mission_time: float) -> float:
    """Expected value of the ``lambda_tot`` estimator over a finite window.

    Each component fails at most once per mission, so the estimator
    ``failures / (m * T * N)`` sits below ``lambda_tot``: with
    ``s = lambda_ind + omega + mu``, the per-component failure probability is
    ``lambda_tot * (1 - exp(-s*T)) / s``.
    """
    s = p.lambda_ind + p.omega + p.mu
    if s == 0:
        return 0.0
    return p.lambda_tot * -math.expm1(-s * mission_time) / (s * mission_time)


def tolerance_scale(n_trials: Optional[int]) -> float:
    if not n_trials or n_trials >= REFERENCE_TRIALS:
        return 1.0
    return math.sqrt(REFERENCE_TRIALS / n_trials)


def verification_report(
    estimates: Mapping[CountingMode, ModeEstimate],
    inputs: AtwoodParams,
    *,
    m: int = 4,
    input_alpha: Optional[AlphaParams] = None,
    primary_mode: CountingMode = CountingMode.SHOCK,
    n_trials: Optional[int] = None,
    mission_time: Optional[float] = None,
    tolerances: Optional[Mapping[str, float]] = None,
) -> EstimateReport:
    """Side-by-side comparison of estimated and input parameters.

    Alpha rows of ``primary_mode`` and the ``omega``, ``mu``, ``lambda_tot``
    rows are checked against ``tolerances`` (scaled up for ``n_trials`` below
    10^7).  ``rho`` is checked in both modes: the sequence-total estimate
    against ``tolerances["rho"]``, the shock-attributed estimate as a strict
    upper bound, since components that already failed cannot fail again.

    With ``mission_time`` given, an unchecked ``lambda_tot[window]`` row
    compares the estimate with its expectation under the simulated model
    (see :func:`expected_lambda_tot_estimate`).
    """
    tol = dict(DEFAULT_TOLERANCES if tolerances is None else tolerances)
    scale = tolerance_scale(n_trials)
    primary_mode = CountingMode(primary_mode)
    if input_alpha is None:
        input_alpha = reference_alpha(inputs, m)

    def scaled(name):
        base = tol.get(name, FALLBACK_ALPHA_TOLERANCE if name.startswith("alpha_") else None)
        return None if base is None else base * scale

    rows = []
    for mode in (primary_mode, *(x for x in CountingMode if x is not primary_mode)):
        for k, value in sorted(estimates[mode].alpha.items()):
            checked = mode is primary_mode
            rows.append(ReportRow(f"alpha_{k}[{mode.value}]", value, input_alpha[k],
                                  scaled(f"alpha_{k}") if checked else None,
                                  "relative" if checked else "info"))
    main = estimates[primary_mode].atwood
    rows.append(ReportRow("lambda_tot", main.lambda_tot, inputs.lambda_tot, scaled("lambda_tot")))
    if mission_time is not None:
        rows.append(ReportRow("lambda_tot[window]", main.lambda_tot,
                              expected_lambda_tot_estimate(inputs, mission_time), None, "info"))
    rows.append(ReportRow("omega", main.omega, inputs.omega, scaled("omega")))
    rows.append(ReportRow("mu", main.mu, inputs.mu, scaled("mu")))
    rows.append(ReportRow(f"rho[{CountingMode.SEQUENCE.value}]",
                          estimates[CountingMode.SEQUENCE].atwood.rho, inputs.rho, scaled("rho")))
    rows.append(ReportRow(f"rho[{CountingMode.SHOCK.value}]",
                          estimates[CountingMode.SHOCK].atwood.rho, inputs.rho, None,
                          "below" if inputs.rho > 0 and inputs.mu > 0 else "info"))
    return EstimateReport(rows=tuple(rows), inputs=inputs, primary_mode=primary_mode,
                          tolerance_scale=scale)


def sample_sufficiency(c: AggregateCounts, inputs: AtwoodParams) -> list[str]:
    """Reasons why a batch is too small for the tolerance check (empty if fine)."""
    exposure = c.mission_time * c.n_trials
    reasons = []
    if inputs.omega > 0 and inputs.omega * exposure < MIN_EXPECTED_LETHAL:
        reasons.append(f"expected lethal shocks {inputs.omega * exposure:.3g} < {MIN_EXPECTED_LETHAL:g}")
    if inputs.mu > 0 and inputs.mu * exposure < MIN_EXPECTED_NONLETHAL:
        reasons.append(f"expected non-lethal shocks {inputs.mu * exposure:.3g} < {MIN_EXPECTED_NONLETHAL:g}")
    if c.total_failures == 0:
        reasons.append("no failures observed")
    return reasons
