"""Seedable uniform streams and inverse-CDF samplers for failure times.

Uniforms come from SplitMix64 (Steele, Lea & Flood 2014).  A stream is
fully described by a 64-bit key; its ``j``-th output (0-based) is::

    z = mix64(key + (j + 1) * GOLDEN_GAMMA  mod 2**64)
    u = (z >> 11) * 2**-53

so any draw of any trial can be computed directly from
``(master_seed, trial_id, j)``.  The key of a trial is::

    key = mix64(mix64(master_seed) XOR (trial_id * TRIAL_MULTIPLIER mod 2**64))

``TRIAL_MULTIPLIER`` is odd, so distinct trial ids give distinct keys.

The samplers accept Python floats or numpy arrays and always evaluate with
numpy ufuncs, which keeps the scalar trace engine and the vectorised batch
kernel bit-for-bit identical.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULT_1 = 0xBF58476D1CE4E5B9
MIX_MULT_2 = 0x94D049BB133111EB
TRIAL_MULTIPLIER = 0xD1B54A32D192ED03
UNIT_SCALE = 2.0**-53

_U30, _U27, _U31, _U11 = (np.uint64(s) for s in (30, 27, 31, 11))
_M1, _M2, _GAMMA = np.uint64(MIX_MULT_1), np.uint64(MIX_MULT_2), np.uint64(GOLDEN_GAMMA)


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a Python int (taken modulo 2**64)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_MULT_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MULT_2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """:func:`mix64` over a uint64 array (wrapping arithmetic)."""
    z = z ^ (z >> _U30)
    z = z * _M1
    z = z ^ (z >> _U27)
    z = z * _M2
    return z ^ (z >> _U31)


def stream_key(master_seed: int, trial_id: int) -> int:
    return mix64(mix64(master_seed) ^ ((trial_id * TRIAL_MULTIPLIER) & MASK64))


def stream_keys(master_seed: int, trial_ids: np.ndarray) -> np.ndarray:
    """Vectorised :func:`stream_key` for an array of trial ids."""
    ids = np.asarray(trial_ids, dtype=np.uint64)
    seed_part = np.uint64(mix64(master_seed))
    return mix64_array(seed_part ^ (ids * np.uint64(TRIAL_MULTIPLIER)))


def uniforms_at(keys: np.ndarray, index) -> np.ndarray:
    """Draw number ``index`` (scalar or array, broadcast) of each stream in ``keys``."""
    if np.ndim(index) == 0:
        offset = np.uint64(((int(index) + 1) * GOLDEN_GAMMA) & MASK64)
    else:
        offset = (np.asarray(index, dtype=np.uint64) + np.uint64(1)) * _GAMMA
    z = mix64_array(keys + offset)
    return (z >> _U11).astype(np.float64) * UNIT_SCALE


class RandomStream:
    """Single-owner uniform stream for one trial; ``counter`` is the number of draws taken."""

    __slots__ = ("master_seed", "trial_id", "key", "counter")

    def __init__(self, master_seed: int, trial_id: int, key: int):
        self.master_seed = master_seed
        self.trial_id = trial_id
        self.key = key
        self.counter = 0

    def uniform(self) -> float:
        self.counter += 1
        z = mix64(self.key + self.counter * GOLDEN_GAMMA)
        return (z >> 11) * UNIT_SCALE

    def take(self, n: int) -> list[float]:
        return [self.uniform() for _ in range(n)]

    def __repr__(self):
        return f"RandomStream(master_seed={self.master_seed}, trial_id={self.trial_id}, counter={self.counter})"


def derive_stream(master_seed: int, trial_id: int) -> RandomStream:
    return RandomStream(master_seed, trial_id, stream_key(master_seed, trial_id))


def _result(x):
    return float(x) if np.ndim(x) == 0 else x


def exp_sample(rate, u):
    """Exponential variate by inversion, ``-log(1 - u) / rate``.

    A zero rate means the event never happens and yields ``inf``.
    """
    rate = np.asarray(rate, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -np.log1p(-u) / rate
    return _result(np.where(rate > 0, t, np.inf))


def truncated_exp_sample(rate, horizon, u):
    """Exponential variate conditioned to fall in ``[0, horizon)``.

    Inverts ``F(t) = (1 - exp(-rate*t)) / (1 - exp(-rate*horizon))``.  The
    ``rate -> 0`` limit (uniform on the window) is used for a zero rate, and
    results are kept strictly below ``horizon`` against rounding.
    """
    rate = np.asarray(rate, dtype=np.float64)
    horizon = np.asarray(horizon, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if np.any(horizon <= 0):
        raise ValueError("empty support: truncation horizon must be positive")
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -np.log1p(u * np.expm1(-rate * horizon)) / rate
    t = np.where(rate > 0, t, u * horizon)
    t = np.minimum(t, np.nextafter(horizon, 0.0))
    return _result(t)


def nonlethal_effective_rate(rho, horizon):
    """Rate giving failure probability ``rho`` within ``horizon`` hours.

    ``rho = 1`` has no finite answer; callers route it to the truncated
    sampler instead.
    """
    rho = np.asarray(rho, dtype=np.float64)
    horizon = np.asarray(horizon, dtype=np.float64)
    if np.any(horizon <= 0):
        raise ValueError("horizon must be positive")
    if np.any((rho < 0) | (rho >= 1)):
        raise ValueError("rho must lie in [0, 1); use the truncated sampler for rho = 1")
    return _result(-np.log1p(-rho) / horizon)
