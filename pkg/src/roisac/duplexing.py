"""Bidirectional operation: TDD framing with guard sizing, and two-band WDD with crosstalk."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._dsp import fractional_delay, mean_power
from .channel import NoiseParams
from .sensing import SPEED_OF_LIGHT, RangeEstimate, estimate_tof
from .waveform import Waveform, recover_bits, sensing_reference


class DuplexError(ValueError):
    pass


def size_guard(d_max: float, sample_rate: float) -> int:
    """Guard length in samples covering the round trip to ``d_max``; at least one sample."""
    if not d_max > 0 or not sample_rate > 0:
        raise DuplexError("d_max and sample_rate must be positive")
    # round before ceil so e.g. an exact 1.0 is not pushed to 2 by float error
    return max(1, math.ceil(round(2.0 * d_max / SPEED_OF_LIGHT * sample_rate, 9)))


@dataclass(frozen=True)
class TddFrame:
    downlink_len: int
    guard_len: int
    uplink_len: int
    sample_rate: float = 100e6

    def __post_init__(self):
        if min(self.downlink_len, self.guard_len, self.uplink_len) < 0:
            raise DuplexError("slot lengths must be nonnegative")
        if not self.sample_rate > 0:
            raise DuplexError("sample_rate must be positive")

    @classmethod
    def for_range(cls, downlink_len: int, uplink_len: int, d_max: float, sample_rate: float = 100e6) -> "TddFrame":
        return cls(downlink_len, size_guard(d_max, sample_rate), uplink_len, sample_rate)

    @property
    def total_len(self) -> int:
        return self.downlink_len + self.guard_len + self.uplink_len

    @property
    def duration(self) -> float:
        return self.total_len / self.sample_rate

    def guard_ok(self, d_max: float) -> bool:
        return self.guard_len >= size_guard(d_max, self.sample_rate)

    def roles(self) -> np.ndarray:
        return np.array(["dl"] * self.downlink_len + ["guard"] * self.guard_len + ["ul"] * self.uplink_len)


def tdd_throughput(frame: TddFrame, payload_bits: int) -> float:
    """Effective bit rate: payload bits per frame duration."""
    return payload_bits / frame.duration


@dataclass
class LinkContext:
    """Flat amplitudes, echo delay and noise seen by both ends of one RO-ISAC link.

    ``echo_amplitude`` scales the retro echo at the transceiver PD,
    ``downlink_gain`` the downlink at the target PD and ``uplink_gain`` the
    target's emission at the transceiver PD. In direct-SNR mode the transceiver
    noise is referenced to the echo power and the target noise to the received
    downlink power, unless the NoiseParams carry an explicit reference power.
    The transceiver knows its whole downlink frame, so ranging correlates
    against all of it by default; ``mls_reference`` restricts the reference to
    the MLS probe.
    """

    echo_amplitude: float = 1.0
    echo_delay: float = 0.0
    downlink_gain: float = 1.0
    uplink_gain: float = 1.0
    transceiver_noise: NoiseParams = field(default_factory=NoiseParams.off)
    target_noise: NoiseParams = field(default_factory=NoiseParams.off)
    upsample: int = 1
    mls_reference: bool = False
    integer_delays: bool = True

    def delay_samples(self, fs: float) -> float:
        d = self.echo_delay * fs
        return float(round(d)) if self.integer_delays else d


@dataclass
class DuplexResult:
    range_estimate: RangeEstimate | None
    dl_bits: np.ndarray | None
    ul_bits: np.ndarray | None
    timeline: dict[str, np.ndarray]
    echo_energy_in_uplink: float = 0.0

    def export_timeline_csv(self, path, roles: np.ndarray | None = None) -> Path:
        """Rows of (sample_index, band, role, value)."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_index", "band", "role", "value"])
            for band, values in self.timeline.items():
                for i, v in enumerate(values):
                    role = roles[i] if roles is not None and i < len(roles) else ("ul" if band == "uplink" else "dl")
                    w.writerow([i, band, role, repr(float(v))])
        return path


def _noise(rng: np.random.Generator, n: int, variance: float) -> np.ndarray:
    if variance <= 0:
        return np.zeros(n)
    return rng.normal(0.0, math.sqrt(variance), n)


def _downlink_at_target(dl: Waveform, ctx: LinkContext, rng) -> np.ndarray:
    clean = ctx.downlink_gain * dl.samples
    var = ctx.target_noise.variance(mean_power(clean))
    rx = clean + _noise(rng, len(clean), var)
    return recover_bits(rx, dl, ctx.downlink_gain)


def _has_payload(w: Waveform | None) -> bool:
    return w is not None and len(w) > 0 and "ofdm" in w.meta


def run_tdd_frame(frame: TddFrame, dl_waveform: Waveform, ul_waveform: Waveform | None, ctx: LinkContext, seed=None) -> DuplexResult:
    """Simulate one TDD frame: downlink + sensing, guard, then uplink.

    The retro echo of the downlink slot lands wherever its delay puts it; any
    part reaching past the guard overlaps the uplink slot and is received
    together with the uplink. Sensing correlates the downlink and guard
    window only.
    """
    fs = frame.sample_rate
    if len(dl_waveform) != frame.downlink_len:
        raise DuplexError(f"downlink waveform has {len(dl_waveform)} samples, slot holds {frame.downlink_len}")
    ul_len = 0 if ul_waveform is None else len(ul_waveform)
    if ul_waveform is not None and ul_len not in (0, frame.uplink_len):
        raise DuplexError(f"uplink waveform has {ul_len} samples, slot holds {frame.uplink_len}")
    rng_tx, rng_target = np.random.default_rng(seed).spawn(2)
    total = frame.total_len
    ul_start = frame.downlink_len + frame.guard_len
    echo = ctx.echo_amplitude * fractional_delay(dl_waveform.samples, ctx.delay_samples(fs), total)
    uplink = np.zeros(total)
    if ul_len:
        uplink[ul_start:] = ctx.uplink_gain * ul_waveform.samples
    ref_power = mean_power(echo[:ul_start])
    var = ctx.transceiver_noise.variance(ref_power)
    rx = echo + uplink + _noise(rng_tx, total, var)

    sense_window = rx[:ul_start]
    reference = sensing_reference(dl_waveform, ctx.mls_reference)
    est = estimate_tof(sense_window, reference, ctx.upsample, sample_rate=fs)
    ul_bits = None
    if _has_payload(ul_waveform):
        ul_bits = recover_bits(rx[ul_start:], ul_waveform, ctx.uplink_gain)
    dl_bits = _downlink_at_target(dl_waveform, ctx, rng_target) if _has_payload(dl_waveform) else None
    spill = echo[ul_start:]
    return DuplexResult(
        range_estimate=est,
        dl_bits=dl_bits,
        ul_bits=ul_bits,
        timeline={"transceiver": rx},
        echo_energy_in_uplink=float(spill @ spill),
    )


@dataclass(frozen=True)
class WddConfig:
    """Two-band wavelength duplexing.

    ``crosstalk[i][j]`` is the fraction of band-j light passed by the band-i
    filter; band 0 carries the downlink (and its echo), band 1 the uplink.
    """

    downlink_band: str = "blue"
    uplink_band: str = "green"
    crosstalk: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 1e-3), (1e-3, 1.0))
    band_gain: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        x = np.asarray(self.crosstalk, dtype=float)
        if x.shape != (2, 2):
            raise DuplexError("crosstalk must be a 2x2 matrix")
        if not np.allclose(np.diag(x), 1.0):
            raise DuplexError("crosstalk diagonal must be 1 (in-band pass)")
        off = x[[0, 1], [1, 0]]
        if np.any(off < 0) or np.any(off >= 1):
            raise DuplexError("off-diagonal crosstalk must lie in [0, 1)")
        if len(self.band_gain) != 2 or min(self.band_gain) <= 0:
            raise DuplexError("band_gain needs two positive entries")

    @classmethod
    def symmetric(cls, epsilon: float, **kw) -> "WddConfig":
        return cls(crosstalk=((1.0, epsilon), (epsilon, 1.0)), **kw)


def run_wdd_frame(cfg: WddConfig, dl_waveform: Waveform, ul_waveform: Waveform | None, ctx: LinkContext, seed=None) -> DuplexResult:
    """Simulate simultaneous downlink, uplink and sensing on two optical bands.

    The band-0 detector sees the retro echo plus leaked uplink and feeds
    ranging; the band-1 detector sees the uplink plus leaked echo and feeds
    uplink demodulation. Each band's SNR is referenced to its wanted signal.
    """
    fs = dl_waveform.sample_rate
    n = len(dl_waveform)
    if ul_waveform is not None and len(ul_waveform) not in (0, n):
        raise DuplexError("WDD downlink and uplink waveforms must have equal length")
    x = np.asarray(cfg.crosstalk, dtype=float)
    g0, g1 = cfg.band_gain
    rng0, rng1, rng_target = np.random.default_rng(seed).spawn(3)
    dly = ctx.delay_samples(fs)
    total = n + int(math.ceil(dly))
    echo = ctx.echo_amplitude * fractional_delay(dl_waveform.samples, dly, total)
    uplink = np.zeros(total)
    if ul_waveform is not None and len(ul_waveform):
        uplink[:n] = ctx.uplink_gain * ul_waveform.samples

    band0_clean = g0 * (echo + x[0, 1] * uplink)
    band1_clean = g1 * (uplink + x[1, 0] * echo)
    var0 = ctx.transceiver_noise.variance(mean_power(g0 * echo))
    var1 = ctx.transceiver_noise.variance(mean_power(g1 * uplink))
    band0 = band0_clean + _noise(rng0, total, var0)
    band1 = band1_clean + _noise(rng1, total, var1)

    est = None
    if np.any(dl_waveform.samples):
        reference = sensing_reference(dl_waveform, ctx.mls_reference)
        est = estimate_tof(band0, reference, ctx.upsample, sample_rate=fs)
    ul_bits = recover_bits(band1[:n], ul_waveform, g1 * ctx.uplink_gain) if _has_payload(ul_waveform) else None
    dl_bits = _downlink_at_target(dl_waveform, ctx, rng_target) if _has_payload(dl_waveform) else None
    return DuplexResult(
        range_estimate=est,
        dl_bits=dl_bits,
        ul_bits=ul_bits,
        timeline={"downlink": band0, "uplink": band1},
    )
