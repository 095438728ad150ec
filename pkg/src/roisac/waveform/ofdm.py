"""DC-biased optical OFDM: Gray-coded QAM, Hermitian IFFT, cyclic prefix, clipping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import FramingError, Waveform, WaveformError

DEFAULT_SAMPLE_RATE = 100e6


@dataclass(frozen=True)
class OfdmConfig:
    """Frame layout of one DCO-OFDM stream.

    ``clip_level`` is gamma: samples are clipped at +/- gamma times the RMS of
    the clipped result (None disables clipping).
    """

    n_subcarriers: int = 64
    qam_order: int = 4
    cp_len: int = 16
    clip_level: float | None = None

    def __post_init__(self):
        n = self.n_subcarriers
        if n < 8 or n & (n - 1):
            raise WaveformError(f"n_subcarriers must be a power of two >= 8, got {n}")
        m = self.qam_order
        k = int(round(math.log2(m))) if m > 0 else 0
        if m < 4 or 2**k != m or k % 2:
            raise WaveformError(f"qam_order must be a square power of two >= 4, got {m}")
        if self.cp_len < 0:
            raise WaveformError("cp_len must be >= 0")
        if self.clip_level is not None and not self.clip_level > 0:
            raise WaveformError("clip_level must be positive or None")

    @property
    def n_data(self) -> int:
        return self.n_subcarriers // 2 - 1

    @property
    def bits_per_symbol(self) -> int:
        return int(round(math.log2(self.qam_order)))

    @property
    def bits_per_ofdm_symbol(self) -> int:
        return self.n_data * self.bits_per_symbol

    @property
    def symbol_len(self) -> int:
        return self.n_subcarriers + self.cp_len

    @property
    def data_bins(self) -> np.ndarray:
        return np.arange(1, self.n_subcarriers // 2)


# --- Gray-coded square QAM -------------------------------------------------


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    """Rows of bits (MSB first) to integers."""
    w = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return bits.astype(np.int64) @ w


def _int_to_bits(v: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1)
    return ((v[..., None] >> shifts) & 1).astype(np.uint8)


def qam_norm(order: int) -> float:
    """Scale giving unit average symbol energy for square QAM."""
    return math.sqrt(2.0 * (order - 1) / 3.0)


def qam_modulate(bits, order: int) -> np.ndarray:
    """Map bits to unit-energy Gray-coded square QAM symbols (I rail first)."""
    k = int(round(math.log2(order)))
    half = k // 2
    m = 1 << half
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1, k)
    i_idx = _gray_to_binary(_bits_to_int(bits[:, :half]))
    q_idx = _gray_to_binary(_bits_to_int(bits[:, half:]))
    levels = 2.0 * np.arange(m) - (m - 1)
    return (levels[i_idx] + 1j * levels[q_idx]) / qam_norm(order)


def qam_demodulate(symbols, order: int) -> np.ndarray:
    """Hard nearest-point decisions back to bits."""
    k = int(round(math.log2(order)))
    half = k // 2
    m = 1 << half
    s = np.asarray(symbols).reshape(-1) * qam_norm(order)

    def rail(v):
        idx = np.clip(np.rint((v + (m - 1)) / 2.0), 0, m - 1).astype(np.int64)
        return _int_to_bits(idx ^ (idx >> 1), half)

    return np.concatenate([rail(s.real), rail(s.imag)], axis=1).reshape(-1)


# --- OFDM core ---------------------------------------------------------------


def hermitian_ifft(grid: np.ndarray, n_subcarriers: int) -> np.ndarray:
    """Complex IFFT (orthonormal) of Hermitian-extended data grids.

    ``grid`` has shape (n_symbols, n_subcarriers/2 - 1) and loads bins
    1..N/2-1; the DC and Nyquist bins stay empty.
    """
    grid = np.atleast_2d(grid)
    n = n_subcarriers
    spec = np.zeros((grid.shape[0], n), dtype=complex)
    spec[:, 1 : n // 2] = grid
    spec[:, n // 2 + 1 :] = np.conj(grid[:, ::-1])
    return np.fft.ifft(spec, axis=1, norm="ortho")


def clip_symmetric(x: np.ndarray, gamma: float, max_iter: int = 100) -> tuple[np.ndarray, float]:
    """Clip at +/- gamma * rms(output) and renormalize to unit power.

    Returns ``(y, threshold)`` where ``threshold`` is the clip level applied to
    the input scale. The fixed point c = gamma * rms(clip(x, c)) is found by
    iteration; it contracts fast because only the tails move.
    """
    x = np.asarray(x, dtype=float)
    rms = math.sqrt(np.mean(x * x))
    if rms == 0.0:
        return x.copy(), 0.0
    c = gamma * rms
    for _ in range(max_iter):
        c_next = gamma * math.sqrt(np.mean(np.clip(x, -c, c) ** 2))
        if abs(c_next - c) <= 1e-14 * c:
            c = c_next
            break
        c = c_next
    y = np.clip(x, -c, c)
    y = y / math.sqrt(np.mean(y * y))
    np.clip(y, -gamma, gamma, out=y)
    return y, c


def ofdm_from_grid(
    grid: np.ndarray,
    cfg: OfdmConfig,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    loaded: np.ndarray | None = None,
    meta: dict | None = None,
) -> Waveform:
    """Serialize a frequency-domain symbol grid into a real OFDM frame.

    ``loaded`` marks which grid cells carry constellation points; it sets the
    deterministic power normalization (expected unit power). Defaults to the
    nonzero cells.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=complex))
    if grid.shape[1] != cfg.n_data:
        raise FramingError(f"grid has {grid.shape[1]} columns, expected {cfg.n_data}")
    n_sym = grid.shape[0]
    if loaded is None:
        loaded = grid != 0
    n_loaded = int(np.count_nonzero(loaded))
    scale = math.sqrt(cfg.n_subcarriers * n_sym / (2.0 * n_loaded)) if n_loaded else 1.0
    body = hermitian_ifft(grid, cfg.n_subcarriers).real * scale
    if cfg.cp_len:
        frame = np.concatenate([body[:, -cfg.cp_len :], body], axis=1)
    else:
        frame = body
    x = frame.reshape(-1)
    symbol_gain = scale
    clip_threshold = None
    if cfg.clip_level is not None and n_loaded:
        y, clip_threshold = clip_symmetric(x, cfg.clip_level)
        # effective linear gain on the data symbols after clipping and renormalization
        symbol_gain = scale * float(np.dot(y, x) / np.dot(x, x))
        x = y
    info = {
        "class": "ofdm",
        "ofdm": cfg,
        "n_symbols": n_sym,
        "symbol_gain": symbol_gain,
        "scale": scale,
        "clip_threshold": clip_threshold,
    }
    if meta:
        info.update(meta)
    return Waveform(x, sample_rate, max(0.0, -float(x.min())) if x.size else 0.0, info)


def random_bits(n: int, seed) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, size=n, dtype=np.uint8)


def gen_ofdm(
    bits,
    cfg: OfdmConfig,
    seed=None,
    *,
    n_symbols: int | None = None,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
) -> Waveform:
    """Modulate ``bits`` into a DCO-OFDM frame.

    If ``bits`` is None, ``n_symbols`` OFDM symbols of random payload are drawn
    from ``seed``. The bit count must be a whole number of OFDM symbols.
    """
    if bits is None:
        if n_symbols is None:
            raise FramingError("either bits or n_symbols is required")
        bits = random_bits(n_symbols * cfg.bits_per_ofdm_symbol, seed)
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    per_sym = cfg.bits_per_ofdm_symbol
    if bits.size == 0 or bits.size % per_sym:
        raise FramingError(f"{bits.size} bits is not a multiple of {per_sym} bits per OFDM symbol")
    grid = qam_modulate(bits, cfg.qam_order).reshape(-1, cfg.n_data)
    return ofdm_from_grid(grid, cfg, sample_rate, meta={"bits": bits})


def ofdm_symbols(rx, cfg: OfdmConfig, gain: float = 1.0, known_interference=None) -> np.ndarray:
    """Strip cyclic prefixes and return equalized data-bin symbols (n_symbols, n_data)."""
    x = np.asarray(rx.samples if isinstance(rx, Waveform) else rx, dtype=float)
    if known_interference is not None:
        k = np.asarray(known_interference.samples if isinstance(known_interference, Waveform) else known_interference, dtype=float)
        if k.shape != x.shape:
            raise FramingError("known interference length does not match the received frame")
        x = x - k
    if x.size == 0 or x.size % cfg.symbol_len:
        raise FramingError(f"{x.size} samples is not a whole number of {cfg.symbol_len}-sample OFDM symbols")
    if gain == 0:
        raise WaveformError("equalizer gain must be nonzero")
    body = x.reshape(-1, cfg.symbol_len)[:, cfg.cp_len :]
    spec = np.fft.fft(body, axis=1, norm="ortho")
    return spec[:, 1 : cfg.n_subcarriers // 2] / gain


def demod_ofdm(rx, cfg: OfdmConfig, gain: float = 1.0, known_mls=None) -> tuple[np.ndarray, np.ndarray]:
    """Recover bits from a frame-aligned OFDM (or hybrid) frame.

    Args:
        rx: received frame, exactly n_symbols * (N + cp) samples.
        cfg: the transmitter's OFDM layout.
        gain: known flat amplitude gain from unit-energy constellation points
            to the FFT output (channel gain times the transmitter's symbol gain).
        known_mls: the MLS component as it appears in ``rx``; subtracted before
            the FFT when given.

    Returns:
        (bits, equalized symbols) with symbols shaped (n_symbols, n_data).
    """
    symbols = ofdm_symbols(rx, cfg, gain, known_mls)
    return qam_demodulate(symbols, cfg.qam_order), symbols
