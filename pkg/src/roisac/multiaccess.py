"""Multi-user payloads on one RO-ISAC frame: OMA resource grids and power-domain NOMA."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .waveform import (
    DEFAULT_SAMPLE_RATE,
    MlsConfig,
    OfdmConfig,
    Waveform,
    WaveformError,
    gen_ofdm,
    mls_component,
    ofdm_from_grid,
    ofdm_symbols,
    qam_demodulate,
    qam_modulate,
    superimpose,
)
from .waveform.base import FramingError


class AllocationError(ValueError):
    pass


class DegenerateAllocationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ResourceGrid:
    """Per-user OFDM resources.

    ``subcarrier_groups[u]`` lists the data bins (1..N/2-1) of user u and
    ``time_slots[u]`` the OFDM symbol indices. A missing dimension means "all".
    A user's resource elements are the product of its bins and slots.
    """

    subcarrier_groups: tuple[tuple[int, ...], ...] | None = None
    time_slots: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.subcarrier_groups is None and self.time_slots is None:
            raise AllocationError("a resource grid needs subcarrier groups or time slots")
        if self.subcarrier_groups is not None:
            object.__setattr__(self, "subcarrier_groups", tuple(tuple(int(i) for i in g) for g in self.subcarrier_groups))
        if self.time_slots is not None:
            object.__setattr__(self, "time_slots", tuple(tuple(int(i) for i in s) for s in self.time_slots))
        if self.subcarrier_groups is not None and self.time_slots is not None:
            if len(self.subcarrier_groups) != len(self.time_slots):
                raise AllocationError("subcarrier_groups and time_slots must list the same users")

    @property
    def n_users(self) -> int:
        return len(self.subcarrier_groups if self.subcarrier_groups is not None else self.time_slots)

    def masks(self, cfg: OfdmConfig, n_symbols: int) -> list[np.ndarray]:
        """Boolean (n_symbols, n_data) resource-element mask per user; validates disjointness."""
        masks = []
        for u in range(self.n_users):
            rows = np.zeros(n_symbols, dtype=bool)
            cols = np.zeros(cfg.n_data, dtype=bool)
            if self.time_slots is None:
                rows[:] = True
            else:
                for s in self.time_slots[u]:
                    if not 0 <= s < n_symbols:
                        raise AllocationError(f"user {u}: time slot {s} outside 0..{n_symbols - 1}")
                    rows[s] = True
            if self.subcarrier_groups is None:
                cols[:] = True
            else:
                for b in self.subcarrier_groups[u]:
                    if not 1 <= b <= cfg.n_data:
                        raise AllocationError(f"user {u}: subcarrier {b} is not a data bin (1..{cfg.n_data})")
                    cols[b - 1] = True
            masks.append(np.outer(rows, cols))
        used = np.zeros((n_symbols, cfg.n_data), dtype=int)
        for m in masks:
            used += m
        if np.any(used > 1):
            raise AllocationError("resource groups overlap between users")
        return masks

    def capacity_bits(self, cfg: OfdmConfig, n_symbols: int) -> list[int]:
        return [int(m.sum()) * cfg.bits_per_symbol for m in self.masks(cfg, n_symbols)]


def _infer_symbols(per_user_bits, grid: ResourceGrid, cfg: OfdmConfig) -> int:
    if grid.time_slots is not None:
        return max((max(s) for s in grid.time_slots if s), default=-1) + 1 or 1
    for bits, group in zip(per_user_bits, grid.subcarrier_groups):
        cap = len(group) * cfg.bits_per_symbol
        if cap and len(bits):
            if len(bits) % cap:
                raise FramingError(f"{len(bits)} bits do not fill whole symbols of {cap} bits")
            return len(bits) // cap
    return 1


def oma_assemble(
    per_user_bits: Sequence,
    grid: ResourceGrid,
    cfg: OfdmConfig,
    seed=None,
    *,
    n_symbols: int | None = None,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    alpha: float | None = None,
    mls: MlsConfig | None = None,
) -> Waveform:
    """One OFDM frame carrying every user's bits on its own resource elements.

    With ``alpha`` and ``mls`` the frame is embedded in a hybrid waveform; the
    MLS share is applied after assembly so it does not depend on the grid.
    """
    per_user_bits = [np.asarray(b, dtype=np.uint8).reshape(-1) for b in per_user_bits]
    if len(per_user_bits) != grid.n_users:
        raise AllocationError(f"{len(per_user_bits)} payloads for {grid.n_users} users")
    n_sym = n_symbols or _infer_symbols(per_user_bits, grid, cfg)
    masks = grid.masks(cfg, n_sym)
    X = np.zeros((n_sym, cfg.n_data), dtype=complex)
    for u, (bits, m) in enumerate(zip(per_user_bits, masks)):
        cap = int(m.sum()) * cfg.bits_per_symbol
        if len(bits) != cap:
            raise FramingError(f"user {u}: {len(bits)} bits for a capacity of {cap}")
        if cap:
            X[m] = qam_modulate(bits, cfg.qam_order)
    loaded = np.logical_or.reduce(masks) if masks else np.zeros_like(X, dtype=bool)
    w = ofdm_from_grid(X, cfg, sample_rate, loaded=loaded, meta={"class": "oma", "grid": grid, "bits": per_user_bits})
    if alpha is not None:
        w = superimpose(w, alpha, mls or MlsConfig(), {"access": "oma"})
    return w


def oma_demod(rx, grid: ResourceGrid, cfg: OfdmConfig, user: int, gain: float = 1.0, known_mls=None) -> np.ndarray:
    """Bits of one user, read only from that user's resource elements."""
    symbols = ofdm_symbols(rx, cfg, gain, known_mls)
    mask = grid.masks(cfg, symbols.shape[0])[user]
    if not mask.any():
        return np.zeros(0, dtype=np.uint8)
    return qam_demodulate(symbols[mask], cfg.qam_order)


def oma_decode_all(rx, tx: Waveform, gain: float = 1.0) -> list[np.ndarray]:
    """Decode every user of an OMA frame using the transmitter metadata."""
    cfg, grid = tx.meta["ofdm"], tx.meta["grid"]
    known = gain * mls_component(tx) if tx.kind == "hybrid" else None
    g = gain * tx.meta["symbol_gain"]
    return [oma_demod(rx, grid, cfg, u, g, known) for u in range(grid.n_users)]


@dataclass(frozen=True)
class NomaAllocation:
    """Power shares per user (listed in user order); decoding runs strongest first."""

    power_shares: tuple[float, ...]

    def __post_init__(self):
        shares = tuple(float(p) for p in self.power_shares)
        object.__setattr__(self, "power_shares", shares)
        if not shares or any(p <= 0 for p in shares):
            raise AllocationError("power shares must be positive")
        if abs(sum(shares) - 1.0) > 1e-9:
            raise AllocationError(f"power shares sum to {sum(shares)}, not 1")

    @property
    def decode_order(self) -> list[int]:
        # stable sort keeps user order for ties
        return sorted(range(len(self.power_shares)), key=lambda u: -self.power_shares[u])

    @property
    def degenerate(self) -> bool:
        s = sorted(self.power_shares)
        return any(math.isclose(a, b, rel_tol=1e-9) for a, b in zip(s, s[1:]))


def _unclipped(cfg: OfdmConfig) -> None:
    if cfg.clip_level is not None:
        raise WaveformError("NOMA superposition needs unclipped OFDM components")


def noma_assemble(
    per_user_bits: Sequence,
    alloc: NomaAllocation,
    cfg: OfdmConfig,
    seed=None,
    *,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    alpha: float | None = None,
    mls: MlsConfig | None = None,
) -> Waveform:
    """Superpose sqrt(p_i)-weighted unit-power OFDM frames of every user on the same resources."""
    _unclipped(cfg)
    if len(per_user_bits) != len(alloc.power_shares):
        raise AllocationError("one payload per NOMA user is required")
    if alloc.degenerate:
        warnings.warn(
            "equal NOMA power shares make the superposed constellation ambiguous; SIC order is ill-defined",
            DegenerateAllocationWarning,
            stacklevel=2,
        )
    frames = [gen_ofdm(b, cfg, sample_rate=sample_rate) for b in per_user_bits]
    if len({len(f) for f in frames}) != 1:
        raise FramingError("NOMA users must carry equally long payloads")
    s = np.zeros(len(frames[0]))
    for p, f in zip(alloc.power_shares, frames):
        s += math.sqrt(p) * f.samples
    meta = {
        "class": "noma",
        "ofdm": cfg,
        "alloc": alloc,
        "n_symbols": frames[0].meta["n_symbols"],
        "symbol_gain": frames[0].meta["symbol_gain"],
        "bits": [f.meta["bits"] for f in frames],
    }
    w = Waveform(s, sample_rate, max(0.0, -float(s.min())), meta)
    if alpha is not None:
        w = superimpose(w, alpha, mls or MlsConfig(), {"access": "noma"})
    return w


def noma_decode(rx, alloc: NomaAllocation, cfg: OfdmConfig, gain: float = 1.0, sic: bool = True, known_mls=None) -> list[np.ndarray]:
    """Per-user bits (user order) by successive interference cancellation.

    ``gain`` is the flat amplitude applied to the whole NOMA composite before
    reception (times sqrt(1 - alpha) when it rode in a hybrid). With
    ``sic=False`` every user is decoded directly, treating the others as noise.
    """
    _unclipped(cfg)
    x = np.asarray(rx.samples if isinstance(rx, Waveform) else rx, dtype=float).copy()
    if known_mls is not None:
        x = x - np.asarray(known_mls, dtype=float)
    unit_gain = math.sqrt(cfg.n_subcarriers / (2.0 * cfg.n_data))
    out: list[np.ndarray | None] = [None] * len(alloc.power_shares)
    for u in alloc.decode_order:
        amp = gain * math.sqrt(alloc.power_shares[u])
        bits = qam_demodulate(ofdm_symbols(x, cfg, amp * unit_gain), cfg.qam_order)
        out[u] = bits
        if sic:
            x = x - amp * gen_ofdm(bits, cfg).samples
    return out


def noma_decode_frame(rx, tx: Waveform, gain: float = 1.0, sic: bool = True) -> list[np.ndarray]:
    """noma_decode driven by the transmitter metadata, cancelling any MLS probe."""
    known = gain * mls_component(tx) if tx.kind == "hybrid" else None
    weight = math.sqrt(1.0 - tx.meta["alpha"]) if tx.kind == "hybrid" else 1.0
    return noma_decode(rx, tx.meta["alloc"], tx.meta["ofdm"], gain * weight, sic, known)
