"""Shock-model and alpha-factor parameter sets, and conversion between them.

The Atwood model describes a group of ``m`` identical components through
four quantities: a lethal shock rate ``omega``, a non-lethal shock rate
``mu``, the per-component failure probability ``rho`` given a non-lethal
shock, and an independent failure rate ``lambda_ind``.  The alpha-factor
model instead gives the fractions ``alpha_k`` of failure events that
involve exactly ``k`` components, together with the total per-component
failure rate ``lambda_tot``.

Both directions of the conversion go through the rates ``N_k`` of failure
events of multiplicity ``k`` (see :func:`event_class_rates`), with
``alpha_k = N_k / sum_j N_j``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

ALPHA_SUM_TOL = 1e-6


class ParameterError(ValueError):
    """Raised when a parameter set violates a model constraint."""


@dataclass(frozen=True)
class AtwoodParams:
    """Rates are per hour; ``rho`` is dimensionless."""

    omega: float
    mu: float
    rho: float
    lambda_ind: float

    @property
    def lambda_tot(self) -> float:
        """Total per-component failure rate ``lambda_ind + mu*rho + omega``."""
        return self.lambda_ind + self.mu * self.rho + self.omega


@dataclass(frozen=True)
class AlphaParams:
    """Alpha factors ``alpha[0] .. alpha[m-1]`` hold alpha_1 .. alpha_m."""

    m: int
    alpha: tuple[float, ...]
    lambda_tot: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))

    @classmethod
    def from_ccf_alphas(cls, ccf_alphas: Sequence[float], lambda_tot: float) -> AlphaParams:
        """Build from alpha_2 .. alpha_m only; alpha_1 is the complement."""
        rest = [float(a) for a in ccf_alphas]
        return cls(m=len(rest) + 1, alpha=(1.0 - sum(rest), *rest), lambda_tot=lambda_tot)

    def __getitem__(self, k: int) -> float:
        """Return alpha_k (1-based, as in the literature)."""
        if not 1 <= k <= self.m:
            raise IndexError(f"alpha_{k} undefined for group size {self.m}")
        return self.alpha[k - 1]


@dataclass(frozen=True)
class EventClassRates:
    """``n[k-1]`` is the rate (per hour) of events failing exactly ``k`` components."""

    m: int
    n: tuple[float, ...]

    def __getitem__(self, k: int) -> float:
        return self.n[k - 1]

    @property
    def total(self) -> float:
        return math.fsum(self.n)


def validate_atwood(p: AtwoodParams) -> AtwoodParams:
    for name in ("omega", "mu", "lambda_ind"):
        value = getattr(p, name)
        if not math.isfinite(value) or value < 0:
            raise ParameterError(f"{name} must be a finite non-negative rate, got {value!r}")
    if not (0.0 <= p.rho <= 1.0):
        raise ParameterError(f"rho out of range [0, 1]: {p.rho!r}")
    return p


def validate_alpha(a: AlphaParams) -> AlphaParams:
    """Check an alpha set, returning a (possibly renormalised) copy.

    When the factors do not sum to one within ``ALPHA_SUM_TOL``, alpha_1 is
    replaced by ``1 - (alpha_2 + ... + alpha_m)`` and a warning is issued.
    Published tables are rounded, so this is the usual case for literature
    values.
    """
    if a.m < 2:
        raise ParameterError(f"group size must be at least 2, got {a.m}")
    if len(a.alpha) != a.m:
        raise ParameterError(f"expected {a.m} alpha factors, got {len(a.alpha)}")
    if not math.isfinite(a.lambda_tot) or a.lambda_tot < 0:
        raise ParameterError(f"lambda_tot must be a finite non-negative rate, got {a.lambda_tot!r}")
    for k, value in enumerate(a.alpha, start=1):
        if not (0.0 <= value <= 1.0):
            raise ParameterError(f"alpha_{k} out of range [0, 1]: {value!r}")
    total = math.fsum(a.alpha)
    if abs(total - 1.0) > ALPHA_SUM_TOL:
        alpha_1 = 1.0 - math.fsum(a.alpha[1:])
        if alpha_1 < 0:
            raise ParameterError("alpha_2 + ... + alpha_m exceeds 1")
        warnings.warn(
            f"alpha factors sum to {total:.8g}; using alpha_1 = {alpha_1:.8g}",
            stacklevel=2,
        )
        a = AlphaParams(m=a.m, alpha=(alpha_1, *a.alpha[1:]), lambda_tot=a.lambda_tot)
    return a


def event_class_rates(p: AtwoodParams, m: int) -> EventClassRates:
    """Rates of failure events by multiplicity for a group of ``m`` components.

    A non-lethal shock fails each component independently with probability
    ``rho``, so it produces a ``k``-fold event at rate
    ``mu * C(m, k) * rho**k * (1 - rho)**(m - k)``.  Single failures add the
    ``m`` independent failure processes; ``m``-fold events add lethal shocks.
    Shocks that fail no component are not failure events.
    """
    validate_atwood(p)
    if m < 2:
        raise ParameterError(f"group size must be at least 2, got {m}")
    rho = p.rho
    n = [p.mu * math.comb(m, k) * rho**k * (1.0 - rho) ** (m - k) for k in range(1, m + 1)]
    n[0] += m * p.lambda_ind
    n[-1] += p.omega
    return EventClassRates(m=m, n=tuple(n))


def atwood_to_alpha(p: AtwoodParams, m: int) -> AlphaParams:
    rates = event_class_rates(p, m)
    total = rates.total
    if total <= 0:
        raise ParameterError("no failure events defined: all rates are zero")
    return AlphaParams(m=m, alpha=tuple(n / total for n in rates.n), lambda_tot=p.lambda_tot)


def _bootstrap_class(a: AlphaParams) -> int | None:
    """Smallest multiplicity 2 <= k <= m-1 with a positive alpha_k, if any."""
    for k in range(2, a.m):
        if a[k] > 0:
            return k
    return None


def alpha_to_atwood(a: AlphaParams, *, allow_pure_lethal: bool = False) -> AtwoodParams:
    """Solve for the shock-model parameters that reproduce an alpha set.

    ``rho`` follows from the ratio of two consecutive non-lethal classes,
    ``alpha_{k+1}/alpha_k = (m-k)/(k+1) * rho/(1-rho)``, using the smallest
    ``k >= 2`` with ``alpha_k > 0``.  With ``rho`` fixed, ``mu``, ``omega`` and
    ``lambda_ind`` are proportional to the unknown total event rate, which is
    then pinned by ``lambda_tot = lambda_ind + mu*rho + omega``.

    Alpha sets with no intermediate classes but ``alpha_m > 0`` can only be
    matched by lethal shocks alone; that is refused unless
    ``allow_pure_lethal`` is set.

    Raises:
        ParameterError: if the alphas cannot be produced by any valid
            parameter set (a solved parameter would be negative, or the
            group is too small to identify ``rho``).
    """
    a = validate_alpha(a)
    m = a.m
    k0 = _bootstrap_class(a)

    if k0 is None:
        if a[m] > 0 and not allow_pure_lethal:
            raise ParameterError(
                f"alpha vector inconsistent with Atwood model: alpha_2..alpha_{m - 1} are zero "
                f"but alpha_{m} > 0 (pass allow_pure_lethal to model lethal shocks only)"
            )
        # omega = alpha_m*S, lambda_ind = alpha_1*S/m
        coeff = a[1] / m + a[m]
        if coeff <= 0:
            raise ParameterError("alpha vector inconsistent with Atwood model: no failure events")
        s = a.lambda_tot / coeff
        return validate_atwood(AtwoodParams(omega=a[m] * s, mu=0.0, rho=0.0, lambda_ind=a[1] * s / m))

    if k0 + 1 > m - 1:
        if m < 4:
            raise ParameterError(
                f"group size {m} is too small to identify rho from the alpha factors"
            )
        raise ParameterError(
            f"alpha vector inconsistent with Atwood model: alpha_{k0} > 0 "
            f"but all lower multiplicities are zero"
        )
    ratio = a[k0 + 1] / a[k0]
    if ratio <= 0:
        raise ParameterError(
            f"alpha vector inconsistent with Atwood model: alpha_{k0} > 0 but alpha_{k0 + 1} = 0"
        )
    odds = ratio * (k0 + 1) / (m - k0)
    rho = odds / (1.0 + odds)

    # Every parameter is linear in the total event rate S; solve at S = 1.
    mu_1 = a[k0] / (math.comb(m, k0) * rho**k0 * (1.0 - rho) ** (m - k0))
    omega_1 = a[m] - mu_1 * rho**m
    lambda_1 = (a[1] - mu_1 * m * rho * (1.0 - rho) ** (m - 1)) / m
    s = a.lambda_tot / (lambda_1 + mu_1 * rho + omega_1)

    p = AtwoodParams(omega=omega_1 * s, mu=mu_1 * s, rho=rho, lambda_ind=lambda_1 * s)
    if p.omega < 0 or p.lambda_ind < 0 or p.mu < 0:
        raise ParameterError(
            "alpha vector inconsistent with Atwood model: "
            f"solved omega={p.omega:.6g}, mu={p.mu:.6g}, lambda_ind={p.lambda_ind:.6g}"
        )
    if m > 4:
        # Overdetermined for m > 4: only two non-lethal classes were matched.
        back = atwood_to_alpha(p, m)
        worst = max(abs(x - y) for x, y in zip(back.alpha, a.alpha))
        if worst > ALPHA_SUM_TOL:
            warnings.warn(
                f"alpha factors are not exactly representable for m={m}; "
                f"largest residual {worst:.3g}",
                stacklevel=2,
            )
    return p
