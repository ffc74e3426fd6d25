"""Test-bench signal generation: input processes, block-structured unknown
systems, and SNR-calibrated measurement noise."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter


def gen_ar1(a: float, n: int, rng) -> np.ndarray:
    """First-order autoregressive process with unit stationary variance:
    x_n = a*x_{n-1} + sqrt(1-a^2)*nu_n, nu iid N(0,1), x_0 = 0.

    a = 0 degenerates to the white driving noise itself.
    """
    if not 0.0 <= a < 1.0:
        raise ValueError(f"a must lie in [0, 1), got {a}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    nu = rng.standard_normal(int(n))
    if a == 0.0:
        return nu
    return lfilter([math.sqrt(1.0 - a * a)], [1.0, -a], nu)


@dataclass(frozen=True)
class InputProcess:
    """Stationary excitation: AR(1) with coefficient a, or white N(0,1)."""

    kind: str = "ar1"
    a: float = 0.9

    def __post_init__(self):
        if self.kind not in ("ar1", "white"):
            raise ValueError(f"unknown input process {self.kind!r}")
        if self.kind == "ar1" and not 0.0 <= self.a < 1.0:
            raise ValueError(f"a must lie in [0, 1), got {self.a}")

    def generate(self, n: int, rng) -> np.ndarray:
        if self.kind == "white":
            if isinstance(rng, (int, np.integer)):
                rng = np.random.default_rng(rng)
            return rng.standard_normal(int(n))
        return gen_ar1(self.a, n, rng)

    def autocorrelation(self, lag: int) -> float:
        """Stationary autocorrelation at the given lag (unit variance)."""
        if self.kind == "white":
            return 1.0 if lag == 0 else 0.0
        return self.a ** abs(lag)


def _shift(x: np.ndarray, lag: int) -> np.ndarray:
    """x delayed by `lag` samples, zero-filled before the stream starts."""
    if lag == 0:
        return x
    out = np.zeros_like(x)
    out[lag:] = x[:-lag]
    return out


def _sinpoly(x: np.ndarray) -> np.ndarray:
    s = np.sin(x)
    return s ** 2 + _shift(s, 1) ** 3 + _shift(s, 2) ** 4


NONLINEARITIES = {
    "saturation": lambda x: 2.0 * x / (1.0 + np.abs(x) ** 2),
    "sinpoly": _sinpoly,
    "square": lambda x: x ** 2,
    "magsq": lambda x: np.abs(x) ** 2,
    # diagnostic-only: makes the block model purely linear
    "identity": lambda x: x,
}


def apply_nonlinearity(name: str, x: np.ndarray) -> np.ndarray:
    try:
        fn = NONLINEARITIES[name]
    except KeyError:
        raise ValueError(f"unknown nonlinearity {name!r}") from None
    return fn(np.asarray(x, float))


@dataclass(frozen=True)
class UnknownSystem:
    """Block-structured system under identification.

    hammerstein: static nonlinearity first, FIR filter second.
    wiener: FIR filter first, static nonlinearity second.
    An optional mid-run tap swap models a time-varying linear part: from
    sample index switch_at (0-based) on, the filter uses the second tap set
    applied to the same signal history.
    """

    structure: str
    nonlinearity: str
    fir_taps: tuple[float, ...]
    fir_taps_after_switch: tuple[float, ...] | None = None
    switch_at: int | None = None

    def __post_init__(self):
        if self.structure not in ("hammerstein", "wiener"):
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if len(self.fir_taps) == 0:
            raise ValueError("fir_taps must be nonempty")
        if (self.fir_taps_after_switch is None) != (self.switch_at is None):
            raise ValueError("switch_at and fir_taps_after_switch go together")
        object.__setattr__(self, "fir_taps", tuple(float(t) for t in self.fir_taps))
        if self.fir_taps_after_switch is not None:
            object.__setattr__(self, "fir_taps_after_switch",
                               tuple(float(t) for t in self.fir_taps_after_switch))

    def _filter(self, z: np.ndarray) -> np.ndarray:
        out = lfilter(self.fir_taps, [1.0], z)
        if self.switch_at is not None:
            out2 = lfilter(self.fir_taps_after_switch, [1.0], z)
            out[self.switch_at:] = out2[self.switch_at:]
        return out


def apply_system(system: UnknownSystem, x) -> np.ndarray:
    """Noiseless desired signal of the unknown system driven by x."""
    x = np.asarray(x, float)
    if not np.all(np.isfinite(x)):
        raise ValueError("input must be finite")
    if system.structure == "hammerstein":
        return system._filter(apply_nonlinearity(system.nonlinearity, x))
    return apply_nonlinearity(system.nonlinearity, system._filter(x))


def add_noise_snr(d, snr_db: float, rng) -> np.ndarray:
    """d plus white Gaussian noise of variance var(d) / 10^(snr_db/10).

    snr_db = +inf is the noiseless sentinel.
    """
    d = np.asarray(d, float)
    if math.isinf(snr_db) and snr_db > 0:
        return d.copy()
    var_d = float(np.var(d))
    if var_d == 0.0:
        raise ValueError("desired signal has zero variance; SNR undefined")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    sigma = math.sqrt(var_d / 10.0 ** (snr_db / 10.0))
    return d + sigma * rng.standard_normal(d.size)


def linear_output_std(taps, process: InputProcess) -> float:
    """Stationary std of the FIR output for a unit-variance input process:
    sqrt(sum_pq w_p w_q rho(|p-q|))."""
    taps = np.asarray(taps, float)
    p = np.arange(taps.size)
    rho = np.array([[process.autocorrelation(i - j) for j in p] for i in p])
    return float(math.sqrt(taps @ rho @ taps))
