"""Power-domain OFDM + MLS superposition and the matching receiver helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .base import Waveform, WaveformError
from .mls import MlsConfig, tiled_mls
from .ofdm import DEFAULT_SAMPLE_RATE, OfdmConfig, demod_ofdm, gen_ofdm


@dataclass(frozen=True)
class HybridConfig:
    """``alpha`` is the MLS power share: s = sqrt(alpha) mls + sqrt(1 - alpha) ofdm."""

    alpha: float = 0.5
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    mls: MlsConfig = field(default_factory=MlsConfig)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise WaveformError(f"superposition ratio alpha must be in [0, 1], got {self.alpha}")


def superimpose(ofdm: Waveform, alpha: float, mls: MlsConfig, extra_meta: dict | None = None) -> Waveform:
    """Mix a unit-power OFDM frame with a tiled bipolar MLS at MLS power share ``alpha``."""
    if not 0.0 <= alpha <= 1.0:
        raise WaveformError(f"superposition ratio alpha must be in [0, 1], got {alpha}")
    m = tiled_mls(mls, len(ofdm))
    s = math.sqrt(alpha) * m + math.sqrt(1.0 - alpha) * ofdm.samples
    meta = dict(ofdm.meta)
    meta.update(
        {
            "class": "hybrid",
            "alpha": alpha,
            "mls": mls,
            "ofdm_symbol_gain": ofdm.meta.get("symbol_gain", 1.0),
            "symbol_gain": math.sqrt(1.0 - alpha) * ofdm.meta.get("symbol_gain", 1.0),
            "mls_weight": math.sqrt(alpha),
        }
    )
    if extra_meta:
        meta.update(extra_meta)
    return Waveform(s, ofdm.sample_rate, max(0.0, -float(s.min())), meta)


def gen_hybrid(
    bits,
    cfg: HybridConfig,
    seed=None,
    *,
    n_symbols: int | None = None,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
) -> Waveform:
    """OFDM payload with an embedded MLS probe; payload rides on OFDM only."""
    if not 0.0 <= cfg.alpha <= 1.0:
        raise WaveformError("alpha out of range")
    ofdm = gen_ofdm(bits, cfg.ofdm, seed, n_symbols=n_symbols, sample_rate=sample_rate)
    return superimpose(ofdm, cfg.alpha, cfg.mls)


def mls_component(w: Waveform) -> np.ndarray:
    """The weighted MLS part of a hybrid waveform (zeros for pure OFDM)."""
    if w.kind != "hybrid" or w.meta.get("mls_weight", 0.0) == 0.0:
        return np.zeros(len(w))
    return w.meta["mls_weight"] * tiled_mls(w.meta["mls"], len(w))


def sensing_reference(w: Waveform, mls_only: bool = True) -> Waveform:
    """Correlation reference for ranging: the MLS part of a hybrid, else the whole waveform."""
    if mls_only and w.kind == "hybrid" and w.meta.get("mls_weight", 0.0) > 0:
        samples = tiled_mls(w.meta["mls"], len(w))
        return Waveform(samples, w.sample_rate, meta={"class": "mls", "mls": w.meta["mls"]})
    return w


def recover_bits(rx, tx: Waveform, gain: float = 1.0, subtract_mls: bool = True) -> np.ndarray:
    """Demodulate a frame-aligned copy of ``tx`` received with flat amplitude ``gain``.

    The transmitter metadata supplies the OFDM layout and symbol gain; for a
    hybrid the MLS component is regenerated and cancelled when ``subtract_mls``.
    """
    cfg: OfdmConfig = tx.meta["ofdm"]
    samples = np.asarray(rx.samples if isinstance(rx, Waveform) else rx, dtype=float)
    known = gain * mls_component(tx) if subtract_mls and tx.kind == "hybrid" else None
    bits, _ = demod_ofdm(samples, cfg, gain * tx.meta["symbol_gain"], known)
    return bits
