"""Sensing-centric pulse-position trains."""

from __future__ import annotations

import math

import numpy as np

from .base import Waveform, WaveformError
from .ofdm import DEFAULT_SAMPLE_RATE


def gen_ppm_train(
    chips,
    ppm_order: int = 2,
    duty: float = 0.5,
    samples_per_position: int = 10,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
) -> Waveform:
    """Map bipolar chips onto an L-ary pulse-position train.

    Every chip occupies one slot of ``ppm_order`` positions. Chip +1 places its
    pulse in position 0, chip -1 in position ``ppm_order // 2`` (for L=2 this is
    Manchester-like). Pulses are ``duty`` of a position wide and scaled so the
    train has unit average power, so lower duty means a taller pulse.
    """
    chips = np.asarray(chips, dtype=float).reshape(-1)
    if chips.size == 0:
        raise WaveformError("empty chip sequence")
    if not np.all(np.isin(chips, (-1.0, 1.0))):
        raise WaveformError("chips must be bipolar (+1/-1)")
    if ppm_order < 2:
        raise WaveformError("ppm_order must be >= 2")
    if not 0.0 < duty <= 1.0:
        raise WaveformError("duty must be in (0, 1]")
    width = int(round(duty * samples_per_position))
    if width < 1:
        raise WaveformError("duty too small for samples_per_position; pulse would vanish")
    slot = ppm_order * samples_per_position
    amplitude = math.sqrt(slot / width)
    positions = np.where(chips > 0, 0, ppm_order // 2)
    x = np.zeros(chips.size * slot)
    starts = np.arange(chips.size) * slot + positions * samples_per_position
    for off in range(width):
        x[starts + off] = amplitude
    meta = {
        "class": "ppm",
        "ppm_order": ppm_order,
        "duty": duty,
        "samples_per_position": samples_per_position,
        "pulse_width": width,
        "peak": amplitude,
    }
    return Waveform(x, sample_rate, 0.0, meta)
