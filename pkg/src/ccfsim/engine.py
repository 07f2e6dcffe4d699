"""Single-mission simulation: one shock generator and ``m`` components.

The generator holds two competing exponential clocks (lethal and
non-lethal shock).  Each component holds an independent failure clock.
When the first shock fires inside the mission window, the pending failure
time of every still-running component is replaced:

* lethal shock: drawn from an exponential truncated to the remaining
  window, so the component surely fails before the mission ends;
* non-lethal shock: drawn from an exponential whose rate makes failure
  within the remaining window happen with probability ``rho``.

At most one shock occurs per mission.  Draws are taken from the stream in
a fixed order: lethal clock, non-lethal clock, components ``0..m-1``, then
one resample per running component in index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

from .params import AtwoodParams, validate_atwood
from .sampling import (
    RandomStream,
    exp_sample,
    nonlethal_effective_rate,
    truncated_exp_sample,
)


class EventKind(str, Enum):
    NON_LETHAL_SHOCK = "nonlethal_shock"
    LETHAL_SHOCK = "lethal_shock"
    FAILURE = "failure"


class FailureCause(str, Enum):
    INDEPENDENT = "independent"
    LETHAL_SHOCK = "lethal_shock"
    NON_LETHAL_SHOCK = "nonlethal_shock"


class GeneratorPhase(str, Enum):
    IDLE = "idle"
    LETHAL_FIRED = "lethal_fired"
    NON_LETHAL_FIRED = "nonlethal_fired"


class ComponentPhase(str, Enum):
    RUNNING = "running"
    FAILED = "failed"


@dataclass(frozen=True)
class MissionConfig:
    """Mission window and group size.

    ``lethal_base_rate`` is the rate of the truncated exponential used after a
    lethal shock; ``None`` means "use ``lambda_ind``".  It only shapes the
    timing of lethal-shock failures, never whether they happen.
    """

    mission_time: float
    n_components: int = 4
    lethal_base_rate: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.mission_time) and self.mission_time > 0):
            raise ValueError(f"mission_time must be positive, got {self.mission_time!r}")
        if int(self.n_components) != self.n_components or self.n_components < 1:
            raise ValueError(f"n_components must be a positive integer, got {self.n_components!r}")
        if self.lethal_base_rate is not None and not (self.lethal_base_rate >= 0):
            raise ValueError(f"lethal_base_rate must be non-negative, got {self.lethal_base_rate!r}")

    def base_rate(self, p: AtwoodParams) -> float:
        return p.lambda_ind if self.lethal_base_rate is None else self.lethal_base_rate


class StateError(RuntimeError):
    """Raised on a transition the state machine does not allow."""


@dataclass
class GeneratorState:
    tf_lethal: float
    tf_nonlethal: float
    phase: GeneratorPhase = GeneratorPhase.IDLE

    def next_shock(self) -> tuple[float, EventKind]:
        # ties go to the lethal shock
        if self.tf_lethal <= self.tf_nonlethal:
            return self.tf_lethal, EventKind.LETHAL_SHOCK
        return self.tf_nonlethal, EventKind.NON_LETHAL_SHOCK

    def fire(self, kind: EventKind) -> None:
        if self.phase is not GeneratorPhase.IDLE:
            raise StateError(f"generator already left Idle ({self.phase.value})")
        self.phase = (
            GeneratorPhase.LETHAL_FIRED if kind is EventKind.LETHAL_SHOCK else GeneratorPhase.NON_LETHAL_FIRED
        )


@dataclass
class ComponentState:
    tf: float
    phase: ComponentPhase = ComponentPhase.RUNNING
    failure_cause: Optional[FailureCause] = None

    @property
    def running(self) -> bool:
        return self.phase is ComponentPhase.RUNNING

    def fail(self, cause: FailureCause) -> None:
        if not self.running:
            raise StateError("component has already failed")
        self.phase = ComponentPhase.FAILED
        self.failure_cause = cause


class TraceEvent(NamedTuple):
    time: float
    kind: EventKind
    component: Optional[int] = None
    cause: Optional[FailureCause] = None


@dataclass(frozen=True)
class SequenceTrace:
    trial_id: int
    mission_time: float
    events: tuple[TraceEvent, ...]
    end_state: tuple[ComponentPhase, ...] = field(default=())

    @property
    def shock(self) -> Optional[TraceEvent]:
        for ev in self.events:
            if ev.kind is not EventKind.FAILURE:
                return ev
        return None

    @property
    def failures(self) -> tuple[TraceEvent, ...]:
        return tuple(ev for ev in self.events if ev.kind is EventKind.FAILURE)


class SequenceSummary(NamedTuple):
    shock_kind: Optional[EventKind]
    n_shock_failures: int
    n_total_failures: int
    n_independent_failures: int


def _fail_due(comps: list[ComponentState], limit: float, cause: FailureCause) -> list[TraceEvent]:
    due = sorted((c.tf, i) for i, c in enumerate(comps) if c.running and c.tf <= limit)
    for _, i in due:
        comps[i].fail(cause)
    return [TraceEvent(t, EventKind.FAILURE, i, cause) for t, i in due]


def simulate_sequence(p: AtwoodParams, cfg: MissionConfig, stream: RandomStream) -> SequenceTrace:
    validate_atwood(p)
    T = cfg.mission_time
    gen = GeneratorState(
        tf_lethal=exp_sample(p.omega, stream.uniform()),
        tf_nonlethal=exp_sample(p.mu, stream.uniform()),
    )
    comps = [ComponentState(tf=exp_sample(p.lambda_ind, stream.uniform())) for _ in range(cfg.n_components)]

    t_s, kind = gen.next_shock()
    # component failures at the shock instant are processed first
    events = _fail_due(comps, min(t_s, T), FailureCause.INDEPENDENT)

    if t_s < T and any(c.running for c in comps):
        gen.fire(kind)
        events.append(TraceEvent(t_s, kind))
        window = T - t_s
        lethal_like = kind is EventKind.LETHAL_SHOCK or p.rho >= 1.0
        if lethal_like:
            base = cfg.base_rate(p)
        else:
            rate = nonlethal_effective_rate(p.rho, window)
        for c in comps:
            if not c.running:
                continue
            u = stream.uniform()
            if lethal_like:
                c.tf = min(t_s + truncated_exp_sample(base, window, u), T)
            else:
                c.tf = t_s + exp_sample(rate, u)
        cause = FailureCause.LETHAL_SHOCK if kind is EventKind.LETHAL_SHOCK else FailureCause.NON_LETHAL_SHOCK
        events.extend(_fail_due(comps, T, cause))

    return SequenceTrace(
        trial_id=stream.trial_id,
        mission_time=T,
        events=tuple(events),
        end_state=tuple(c.phase for c in comps),
    )


def classify_sequence(t: SequenceTrace) -> SequenceSummary:
    shock = t.shock
    n_total = n_indep = 0
    for ev in t.failures:
        n_total += 1
        if ev.cause is FailureCause.INDEPENDENT:
            n_indep += 1
    return SequenceSummary(
        shock_kind=shock.kind if shock else None,
        n_shock_failures=n_total - n_indep,
        n_total_failures=n_total,
        n_independent_failures=n_indep,
    )
