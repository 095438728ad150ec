"""Retroreflective channel gains, the single-pass uplink gain, and the receive model.

Both round-trip models share the Lambertian line-of-sight structure with two
retroreflective modifications: an extra cos(theta) factor at the CCR and a
doubled propagation distance. The point-source model weights the return by a
geometric factor kappa(phi); the area-source model by an effective reflecting
ratio xi(phi, theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._dsp import DEFAULT_HALF_WIDTH, fractional_delay, mean_power
from .geometry import LinkGeometry
from .sensing import EchoModel
from .waveform import Waveform

ELEMENTARY_CHARGE = 1.602176634e-19


class InvalidEchoError(ValueError):
    pass


def default_kappa(phi: float) -> float:
    return math.cos(phi)


@dataclass(frozen=True)
class ChannelParams:
    """Parameters of the point- and area-source retroreflection models.

    Angles are in radians, ``A_s`` in m^2, ``rho_s`` in A/W. ``kappa`` and
    ``xi`` may be replaced by any callables; the defaults are cos(phi) and
    xi0 * cos(theta).
    """

    m_p: float = 1.0
    m_a: float = 1.0
    A_s: float = 1e-4
    rho_s: float = 0.5
    Phi_s: float = math.radians(60.0)
    k: float = 0.9
    Phi_r: float = math.radians(45.0)
    xi0: float = 0.5
    kappa: Callable[[float], float] | None = None
    xi: Callable[[float, float], float] | None = None

    def __post_init__(self):
        if self.m_p < 1 or self.m_a < 1:
            raise ValueError("Lambertian orders must be >= 1")
        if not self.A_s > 0 or not self.rho_s > 0:
            raise ValueError("A_s and rho_s must be positive")
        for name in ("Phi_s", "Phi_r"):
            v = getattr(self, name)
            if not 0.0 < v <= math.pi / 2 + 1e-12:
                raise ValueError(f"{name} must be in (0, pi/2]")
        if not 0.0 < self.k <= 1.0:
            raise ValueError("CCR reflectance k must be in (0, 1]")
        if not 0.0 < self.xi0 <= 1.0:
            raise ValueError("xi0 must be in (0, 1]")
        if self.kappa is not None and not math.isclose(self.kappa(0.0), 1.0, abs_tol=1e-12):
            raise ValueError("kappa(0) must equal 1")

    def kappa_at(self, phi: float) -> float:
        v = default_kappa(phi) if self.kappa is None else self.kappa(phi)
        return min(max(v, 0.0), 1.0)

    def xi_at(self, phi: float, theta: float) -> float:
        v = self.xi0 * math.cos(theta) if self.xi is None else self.xi(phi, theta)
        return min(max(v, 0.0), 1.0)


def _lambertian_leg(m: float, phi: float, area: float, fov: float) -> float:
    """(m+1)/(2 pi) cos^m(phi) * A cos(phi) gated by the detector FOV."""
    c = math.cos(phi)
    if phi > fov or c <= 0.0:
        return 0.0
    return (m + 1.0) / (2.0 * math.pi) * c**m * area * c


def _retro_term(theta: float, fov: float) -> float:
    c = math.cos(theta)
    if theta > fov or c <= 0.0:
        return 0.0
    return c


def point_source_gain(g: LinkGeometry, p: ChannelParams) -> float:
    """Round-trip optical power gain for a narrow-beam (point) source."""
    retro = p.k * p.kappa_at(g.phi) * _retro_term(g.theta, p.Phi_r)
    if retro == 0.0:
        return 0.0
    return retro * _lambertian_leg(p.m_p, g.phi, p.A_s, p.Phi_s) / (2.0 * g.d) ** 2


def area_source_gain(g: LinkGeometry, p: ChannelParams) -> float:
    """Round-trip optical power gain for a wide-beam (area) source."""
    retro = p.k * p.xi_at(g.phi, g.theta) * _retro_term(g.theta, p.Phi_r)
    if retro == 0.0:
        return 0.0
    return retro * _lambertian_leg(p.m_a, g.phi, p.A_s, p.Phi_s) / (2.0 * g.d) ** 2


def uplink_gain(g: LinkGeometry, m: float, A: float, Phi: float) -> float:
    """Single-pass LoS gain from the target's emitter to the transceiver PD.

    The target emits at angle ``theta`` off its boresight; the transceiver PD
    receives at ``phi`` and gates on its FOV ``Phi``.
    """
    ct = math.cos(g.theta)
    cp = math.cos(g.phi)
    if ct <= 0.0 or cp <= 0.0 or g.phi > Phi:
        return 0.0
    return (m + 1.0) / (2.0 * math.pi * g.d**2) * ct**m * A * cp


@dataclass(frozen=True)
class NoiseParams:
    """Receiver noise, either a direct per-sample SNR or physical shot + thermal noise.

    In ``direct-snr`` mode the noise variance is the noiseless output power
    (or ``reference_power`` when given) divided by 10^(snr_db/10); an infinite
    SNR turns noise off. In ``physical`` mode samples are optical power in W,
    the output is AC photocurrent in A, and the variance is
    2 q rho (P_rx + P_ambient) B + thermal_variance.
    """

    mode: str = "direct-snr"
    snr_db: float = math.inf
    reference_power: float | None = None
    ambient_power: float = 0.0
    bandwidth: float = 0.0
    thermal_variance: float = 0.0
    responsivity: float = 0.5

    def __post_init__(self):
        if self.mode not in ("direct-snr", "physical"):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.mode == "physical":
            if min(self.ambient_power, self.bandwidth, self.thermal_variance) < 0:
                raise ValueError("physical noise parameters must be nonnegative")
            if not self.responsivity > 0:
                raise ValueError("responsivity must be positive")

    @classmethod
    def off(cls) -> "NoiseParams":
        return cls()

    @classmethod
    def snr(cls, snr_db: float, reference_power: float | None = None) -> "NoiseParams":
        return cls(mode="direct-snr", snr_db=snr_db, reference_power=reference_power)

    def variance(self, signal_power: float, mean_optical_power: float = 0.0) -> float:
        if self.mode == "direct-snr":
            if math.isinf(self.snr_db) and self.snr_db > 0:
                return 0.0
            ref = signal_power if self.reference_power is None else self.reference_power
            return ref / 10.0 ** (self.snr_db / 10.0)
        shot = 2.0 * ELEMENTARY_CHARGE * self.responsivity * (mean_optical_power + self.ambient_power) * self.bandwidth
        return shot + self.thermal_variance


def received_signal(
    tx_waveform: Waveform,
    echoes: EchoModel,
    noise: NoiseParams,
    seed=None,
    length: int | None = None,
    half_width: int = DEFAULT_HALF_WIDTH,
) -> Waveform:
    """Sum of scaled, delayed copies of ``tx_waveform`` plus white Gaussian noise.

    Delays are in seconds and may fall between samples (windowed-sinc
    interpolation). The default output length holds the latest echo in full.
    """
    fs = tx_waveform.sample_rate
    for comp in echoes.components:
        if comp.amplitude < 0 or comp.delay < 0:
            raise InvalidEchoError(f"echo with negative amplitude or delay: {comp}")
    delays = [c.delay * fs for c in echoes.components]
    if length is None:
        length = len(tx_waveform) + (int(math.ceil(max(delays) - 1e-9)) if delays else 0)
    clean = np.zeros(length)
    for comp, dly in zip(echoes.components, delays):
        if comp.amplitude:
            clean += comp.amplitude * fractional_delay(tx_waveform.samples, dly, length, half_width)
    meta = {"class": "received", "source": tx_waveform.kind, "noise_mode": noise.mode}
    if noise.mode == "physical":
        p_rx = max(0.0, sum(c.amplitude for c in echoes.components) * (tx_waveform.dc_bias + float(np.mean(tx_waveform.samples))))
        clean = noise.responsivity * clean
        var = noise.variance(mean_power(clean), p_rx)
    else:
        var = noise.variance(mean_power(clean))
    out = clean
    if var > 0:
        out = clean + np.random.default_rng(seed).normal(0.0, math.sqrt(var), size=length)
    meta["noise_variance"] = var
    return Waveform(out, fs, 0.0, meta)
