"""Waveform generation and demodulation for the three RO-ISAC waveform classes."""

from .base import FramingError, Waveform, WaveformError
from .hybrid import HybridConfig, gen_hybrid, mls_component, recover_bits, sensing_reference, superimpose
from .metrics import measure_ber, papr
from .mls import (
    PRIMITIVE_TAPS,
    DegenerateSequenceError,
    MlsConfig,
    gen_mls,
    mls_waveform,
    periodic_autocorrelation,
    tiled_mls,
)
from .ofdm import (
    DEFAULT_SAMPLE_RATE,
    OfdmConfig,
    clip_symmetric,
    demod_ofdm,
    gen_ofdm,
    hermitian_ifft,
    ofdm_from_grid,
    ofdm_symbols,
    qam_demodulate,
    qam_modulate,
    random_bits,
)
from .ppm import gen_ppm_train

__all__ = [
    "DEFAULT_SAMPLE_RATE",
    "PRIMITIVE_TAPS",
    "DegenerateSequenceError",
    "FramingError",
    "HybridConfig",
    "MlsConfig",
    "OfdmConfig",
    "Waveform",
    "WaveformError",
    "clip_symmetric",
    "demod_ofdm",
    "gen_hybrid",
    "gen_mls",
    "gen_ofdm",
    "gen_ppm_train",
    "hermitian_ifft",
    "measure_ber",
    "mls_component",
    "mls_waveform",
    "ofdm_from_grid",
    "ofdm_symbols",
    "papr",
    "periodic_autocorrelation",
    "qam_demodulate",
    "qam_modulate",
    "random_bits",
    "recover_bits",
    "sensing_reference",
    "superimpose",
    "tiled_mls",
]
