"""Time-of-flight ranging by cross-correlation, multi-target SIC and sector partitioning."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from ._dsp import fractional_delay
from .geometry import Pose, angle_between
from .waveform import Waveform

SPEED_OF_LIGHT = 2.998e8


class SensingError(ValueError):
    pass


@dataclass(frozen=True)
class EchoComponent:
    amplitude: float
    delay: float
    target_id: str | int | None = None


@dataclass
class EchoModel:
    """Per-target (amplitude, delay in seconds) composition of a received signal."""

    components: list[EchoComponent] = field(default_factory=list)

    def __post_init__(self):
        comps = [c if isinstance(c, EchoComponent) else EchoComponent(*c) for c in self.components]
        self.components = sorted(comps, key=lambda c: c.delay)

    @classmethod
    def single(cls, amplitude: float, delay: float, target_id=None) -> "EchoModel":
        return cls([EchoComponent(amplitude, delay, target_id)])

    @classmethod
    def from_distances(cls, amplitudes: Sequence[float], distances: Sequence[float]) -> "EchoModel":
        return cls([EchoComponent(a, 2.0 * d / SPEED_OF_LIGHT, i) for i, (a, d) in enumerate(zip(amplitudes, distances))])


@dataclass
class RangeEstimate:
    tof: float
    distance: float
    peak_value: float
    target_id: str | int | None = None
    delay_samples: float = 0.0
    amplitude: float | None = None
    out_of_window: bool = False


def tof_to_distance(tof: float) -> float:
    return SPEED_OF_LIGHT * tof / 2.0


def distance_to_tof(distance: float) -> float:
    return 2.0 * distance / SPEED_OF_LIGHT


def _samples(x) -> np.ndarray:
    return np.asarray(x.samples if isinstance(x, Waveform) else x, dtype=float)


def correlation_profile(rx, reference, upsample: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Linear cross-correlation of ``rx`` against ``reference`` at ``upsample`` x resolution.

    Equivalent to band-limited upsampling of both signals before correlating,
    computed in the frequency domain with zero padding so no lags wrap.

    Returns:
        (lags in base-rate samples, correlation values), lags ascending from
        -(len(reference) - 1) to len(rx) - 1.
    """
    x = _samples(rx)
    r = _samples(reference)
    if upsample < 1:
        raise SensingError("upsample factor must be >= 1")
    if not np.any(r):
        raise SensingError("reference is all zeros")
    n = len(x) + len(r) - 1
    nfft = next_fast_len(n, real=True)
    spec = rfft(x, nfft) * np.conj(rfft(r, nfft))
    if upsample > 1 and nfft % 2 == 0:
        # split the Nyquist bin so the interpolated sequence stays real and symmetric
        spec[-1] *= 0.5
    corr = irfft(spec, nfft * upsample) * upsample
    neg = (len(r) - 1) * upsample
    pos = (len(x) - 1) * upsample + 1
    values = np.concatenate([corr[len(corr) - neg :] if neg else corr[:0], corr[:pos]])
    lags = np.arange(-neg, pos) / upsample
    return lags, values


def _parabolic(y_left: float, y0: float, y_right: float) -> float:
    denom = y_left - 2.0 * y0 + y_right
    if denom >= 0.0:
        return 0.0
    off = float(np.clip(0.5 * (y_left - y_right) / denom, -0.5, 0.5))
    # FFT round-off on a symmetric peak must not perturb an on-grid delay
    return 0.0 if abs(off) < 1e-9 else off


def estimate_tof(rx, reference, upsample: int = 1, refine: bool = True, sample_rate: float | None = None) -> RangeEstimate:
    """Round-trip delay from the global correlation peak at nonnegative lag.

    With ``refine`` a 3-point parabola through the peak gives sub-sample
    precision. A peak on the edge of the searchable lag window is flagged
    ``out_of_window``.
    """
    fs = sample_rate or (rx.sample_rate if isinstance(rx, Waveform) else None) or (
        reference.sample_rate if isinstance(reference, Waveform) else 1.0
    )
    lags, values = correlation_profile(rx, reference, upsample)
    zero = int(np.searchsorted(lags, 0.0))
    j = zero + int(np.argmax(values[zero:]))
    out = j == len(values) - 1 or (j == zero and zero > 0 and values[zero - 1] > values[zero])
    delay = lags[j]
    if refine and 0 < j < len(values) - 1 and not out:
        delay += _parabolic(values[j - 1], values[j], values[j + 1]) / upsample
    tof = delay / fs
    return RangeEstimate(
        tof=tof,
        distance=tof_to_distance(tof),
        peak_value=float(values[j]),
        delay_samples=float(delay),
        out_of_window=bool(out),
    )


def ranging_rmse(trials: Iterable) -> float:
    """RMS of (estimated - true) distance over (true_distance, estimate) pairs."""
    errs = []
    for truth, est in trials:
        d = est.distance if isinstance(est, RangeEstimate) else float(est)
        errs.append(d - truth)
    if not errs:
        raise SensingError("ranging_rmse needs at least one trial")
    e = np.asarray(errs, dtype=float)
    return float(np.sqrt(np.mean(e * e)))


def sic_multi_target(
    rx,
    reference,
    max_targets: int = 4,
    stop_threshold: float = 0.05,
    upsample: int = 1,
    refine: bool = False,
    sample_rate: float | None = None,
    reconstruct=None,
) -> list[RangeEstimate]:
    """Successively estimate, reconstruct and cancel the strongest echoes.

    Each pass takes the strongest correlation peak of the residual, fits the
    echo amplitude by least-squares projection onto the delayed reference and
    subtracts the reconstruction. Stops after ``max_targets`` estimates or when
    the next peak falls below ``stop_threshold`` times the first one.
    Estimates come back strongest first; the residual energy after each pass
    is recorded on the returned list's ``residual_energies`` attribute.

    ``reconstruct`` is the waveform scaled and subtracted per echo when it
    differs from the detection reference, e.g. the full hybrid frame when
    peaks are found with its MLS component only.
    """
    if max_targets < 1:
        raise SensingError("max_targets must be >= 1")
    if not 0.0 < stop_threshold < 1.0:
        raise SensingError("stop_threshold must be in (0, 1)")
    fs = sample_rate or (rx.sample_rate if isinstance(rx, Waveform) else 1.0)
    residual = _samples(rx).copy()
    ref = _samples(reference)
    rec = ref if reconstruct is None else _samples(reconstruct)
    found = _SicResult()
    found.residual_energies.append(float(residual @ residual))
    first_peak = None
    for _ in range(max_targets):
        est = estimate_tof(residual, ref, upsample, refine, sample_rate=fs)
        if first_peak is None:
            first_peak = est.peak_value
            if first_peak <= 0:
                break
        elif est.peak_value < stop_threshold * first_peak:
            break
        echo = fractional_delay(rec, max(est.delay_samples, 0.0), len(residual))
        energy = float(echo @ echo)
        if energy == 0.0:
            break
        amp = float(residual @ echo) / energy
        residual -= amp * echo
        found.append(replace(est, amplitude=amp))
        found.residual_energies.append(float(residual @ residual))
    found.residual = residual
    return found


class _SicResult(list):
    """List of estimates that also carries the per-iteration residual energies."""

    def __init__(self):
        super().__init__()
        self.residual_energies: list[float] = []
        self.residual: np.ndarray | None = None


@dataclass
class SectorAssignment:
    sectors: list[list[int]]
    unassigned: list[int]


def sector_partition(targets, sectors, origin=None, tol: float = 1e-9) -> SectorAssignment:
    """Assign each target to every sector cone (closed) that contains it.

    Args:
        targets: target positions (3-vectors or Poses).
        sectors: (boresight, half_angle_rad) pairs, cones apexed at ``origin``.
        origin: cone apex, default the coordinate origin.
    """
    apex = np.zeros(3) if origin is None else np.asarray(origin, dtype=float)
    cones = []
    for boresight, half_angle in sectors:
        b = np.asarray(boresight, dtype=float)
        if not np.linalg.norm(b) > 0 or not 0.0 < half_angle <= math.pi:
            raise SensingError("sector needs a nonzero boresight and half-angle in (0, pi]")
        cones.append((b, half_angle))
    assign: list[list[int]] = [[] for _ in cones]
    unassigned = []
    for i, t in enumerate(targets):
        p = t.position if isinstance(t, Pose) else np.asarray(t, dtype=float)
        v = p - apex
        hit = False
        for s, (b, half) in enumerate(cones):
            if np.linalg.norm(v) == 0.0 or angle_between(b, v) <= half + tol:
                assign[s].append(i)
                hit = True
        if not hit:
            unassigned.append(i)
    return SectorAssignment(assign, unassigned)


def export_correlation_csv(path, rx, reference, upsample: int = 1, sample_rate: float | None = None) -> Path:
    """Write the correlation profile as (lag_seconds, value) rows."""
    fs = sample_rate or (rx.sample_rate if isinstance(rx, Waveform) else 1.0)
    lags, values = correlation_profile(rx, reference, upsample)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lag_seconds", "value"])
        for lag, v in zip(lags, values):
            w.writerow([repr(float(lag / fs)), repr(float(v))])
    return path
