"""Low-level signal helpers shared by the channel and sensing code."""

from __future__ import annotations

import math

import numpy as np

DEFAULT_HALF_WIDTH = 16
_FRAC_EPS = 1e-12


def sinc_kernel(frac: float, half_width: int = DEFAULT_HALF_WIDTH) -> tuple[np.ndarray, int]:
    """Hann-windowed sinc taps realizing a delay of ``frac`` samples, 0 < frac < 1.

    Returns ``(taps, first_offset)``: tap ``i`` lands at output index
    ``k + first_offset + i`` for input index ``k``.
    """
    j = np.arange(-half_width + 1, half_width + 1)
    t = j - frac
    window = 0.5 * (1.0 + np.cos(np.pi * t / half_width))
    return np.sinc(t) * window, int(j[0])


def fractional_delay(
    x: np.ndarray,
    delay: float,
    out_len: int | None = None,
    half_width: int = DEFAULT_HALF_WIDTH,
) -> np.ndarray:
    """Delay ``x`` by a (possibly fractional) number of samples.

    Integer delays are exact shifts. Fractional delays use band-limited
    windowed-sinc interpolation of the given half-width. The output is
    truncated or zero-padded to ``out_len`` (default: just long enough to hold
    the delayed main body of ``x``).
    """
    x = np.asarray(x, dtype=float)
    if delay < 0:
        raise ValueError("delay must be nonnegative")
    n0 = math.floor(delay)
    frac = delay - n0
    if frac > 1.0 - _FRAC_EPS:
        n0, frac = n0 + 1, 0.0
    if out_len is None:
        out_len = len(x) + int(math.ceil(delay))
    y = np.zeros(out_len)
    if frac < _FRAC_EPS:
        stop = min(out_len, n0 + len(x))
        if stop > n0:
            y[n0:stop] = x[: stop - n0]
        return y
    taps, first = sinc_kernel(frac, half_width)
    full = np.convolve(x, taps)
    start = n0 + first
    lo = max(start, 0)
    hi = min(out_len, start + len(full))
    if hi > lo:
        y[lo:hi] = full[lo - start : hi - start]
    return y


def mean_power(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.mean(x * x)) if x.size else 0.0


def awgn_variance_for_snr(signal_power: float, snr_db: float) -> float:
    return signal_power / 10.0 ** (snr_db / 10.0)
