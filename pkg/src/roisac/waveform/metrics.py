"""Bit error rate and peak-to-average power ratio."""

from __future__ import annotations

import math

import numpy as np

from .base import Waveform, WaveformError


def measure_ber(tx_bits, rx_bits) -> float:
    """Hamming distance divided by length."""
    tx = np.asarray(tx_bits).reshape(-1)
    rx = np.asarray(rx_bits).reshape(-1)
    if tx.size != rx.size:
        raise WaveformError(f"bit sequences differ in length ({tx.size} vs {rx.size})")
    if tx.size == 0:
        return 0.0
    return float(np.count_nonzero(tx != rx)) / tx.size


def papr(w) -> float:
    """10 log10(max |s|^2 / mean s^2) in dB."""
    s = np.asarray(w.samples if isinstance(w, Waveform) else w, dtype=float)
    p = float(np.mean(s * s)) if s.size else 0.0
    if p == 0.0:
        raise WaveformError("PAPR undefined for an all-zero waveform")
    return 10.0 * math.log10(float(np.max(s * s)) / p)
