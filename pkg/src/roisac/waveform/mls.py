"""Maximum length sequences from a Fibonacci LFSR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Waveform, WaveformError

# Feedback taps (exponents of a primitive trinomial/pentanomial, x^n + ... + 1).
PRIMITIVE_TAPS: dict[int, tuple[int, ...]] = {
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 11, 10, 4),
    13: (13, 12, 11, 8),
    14: (14, 13, 12, 2),
    15: (15, 14),
    16: (16, 15, 13, 4),
}


class DegenerateSequenceError(WaveformError):
    """The LFSR did not produce a maximum-length period."""


@dataclass(frozen=True)
class MlsConfig:
    degree: int = 7
    taps: tuple[int, ...] | None = None
    seed: int = 1

    def __post_init__(self):
        if not 3 <= self.degree <= 16:
            raise WaveformError(f"MLS degree must be in [3, 16], got {self.degree}")
        taps = PRIMITIVE_TAPS[self.degree] if self.taps is None else tuple(int(t) for t in self.taps)
        if max(taps) != self.degree or min(taps) < 1:
            raise WaveformError(f"taps {taps} inconsistent with degree {self.degree}")
        object.__setattr__(self, "taps", taps)
        if self.seed == 0:
            raise DegenerateSequenceError("all-zero LFSR state is absorbing; seed must be nonzero")
        if not 0 < self.seed < 2**self.degree:
            raise WaveformError(f"seed must fit in {self.degree} bits")

    @property
    def period(self) -> int:
        return 2**self.degree - 1


def lfsr_bits(cfg: MlsConfig, length: int) -> np.ndarray:
    """First ``length`` output bits of the LFSR (recurrence a[m] = XOR a[m - t])."""
    n = cfg.degree
    a = np.zeros(max(length, n), dtype=np.uint8)
    a[:n] = [(cfg.seed >> i) & 1 for i in range(n)]
    taps = cfg.taps
    for m in range(n, length):
        v = 0
        for t in taps:
            v ^= a[m - t]
        a[m] = v
    return a[:length]


def gen_mls(cfg: MlsConfig) -> np.ndarray:
    """One period of the bipolar m-sequence (bit 1 -> +1, bit 0 -> -1).

    Raises DegenerateSequenceError if the taps do not give period 2^n - 1.
    """
    n, period = cfg.degree, cfg.period
    bits = lfsr_bits(cfg, period + n - 1)
    windows = np.lib.stride_tricks.sliding_window_view(bits, n)
    states = windows.astype(np.int64) @ (1 << np.arange(n, dtype=np.int64))
    if np.unique(states).size != period:
        raise DegenerateSequenceError(f"taps {cfg.taps} are not primitive for degree {n}")
    return 2.0 * bits[:period].astype(float) - 1.0


def tiled_mls(cfg: MlsConfig, length: int) -> np.ndarray:
    """Bipolar MLS repeated to cover ``length`` samples (must be >= one period)."""
    if length < cfg.period:
        raise WaveformError(f"frame of {length} samples shorter than MLS period {cfg.period}")
    seq = gen_mls(cfg)
    reps = -(-length // cfg.period)
    return np.tile(seq, reps)[:length]


def mls_waveform(cfg: MlsConfig, length: int | None = None, sample_rate: float = 100e6) -> Waveform:
    samples = gen_mls(cfg) if length is None else tiled_mls(cfg, length)
    return Waveform(samples, sample_rate, meta={"class": "mls", "mls": cfg})


def periodic_autocorrelation(seq) -> np.ndarray:
    """Cyclic autocorrelation R[k] = sum_i s[i] s[(i+k) mod N] for every lag k."""
    s = np.asarray(seq, dtype=float)
    return np.array([np.dot(s, np.roll(s, -k)) for k in range(len(s))])
