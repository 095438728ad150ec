import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roisac.multiaccess import (
    AllocationError,
    DegenerateAllocationWarning,
    NomaAllocation,
    ResourceGrid,
    noma_assemble,
    noma_decode_frame,
    oma_assemble,
    oma_decode_all,
)
from roisac.waveform import MlsConfig, OfdmConfig, WaveformError, measure_ber, mls_component, ofdm_symbols, random_bits

CFG = OfdmConfig(64, 4, 16)


def _oma_bits(grid, n_sym, seed=0):
    caps = grid.capacity_bits(CFG, n_sym)
    return [random_bits(c, seed + u) for u, c in enumerate(caps)]


def test_fdma_round_trip():
    grid = ResourceGrid(subcarrier_groups=(tuple(range(1, 16)), tuple(range(16, 32))))
    bits = _oma_bits(grid, 8)
    w = oma_assemble(bits, grid, CFG, n_symbols=8)
    for tx, rx in zip(bits, oma_decode_all(w.samples, w)):
        assert measure_ber(tx, rx) == 0.0


def test_tdma_round_trip_hybrid():
    grid = ResourceGrid(time_slots=((0, 2, 4, 6), (1, 3, 5, 7)))
    bits = _oma_bits(grid, 8)
    w = oma_assemble(bits, grid, CFG, alpha=0.3, mls=MlsConfig(7))
    assert w.kind == "hybrid"
    for tx, rx in zip(bits, oma_decode_all(0.5 * w.samples, w, gain=0.5)):
        assert measure_ber(tx, rx) == 0.0


def test_oma_users_do_not_leak():
    grid = ResourceGrid(subcarrier_groups=((1, 2, 3), (4, 5, 6)))
    n_sym = 4
    bits = _oma_bits(grid, n_sym)
    both = oma_assemble(bits, grid, CFG, n_symbols=n_sym)
    silent = [bits[0], np.zeros_like(bits[1])]
    only0 = oma_assemble(silent, grid, CFG, n_symbols=n_sym)
    # user 0's bins are identical whether or not user 1 transmits
    m0 = grid.masks(CFG, n_sym)[0]
    a = ofdm_symbols(both.samples, CFG, both.meta["symbol_gain"])[m0]
    b = ofdm_symbols(only0.samples, CFG, only0.meta["symbol_gain"])[m0]
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_overlap_rejected():
    grid = ResourceGrid(subcarrier_groups=((1, 2, 3), (3, 4)))
    with pytest.raises(AllocationError):
        grid.masks(CFG, 2)
    with pytest.raises(AllocationError):
        ResourceGrid(subcarrier_groups=((40,),)).masks(CFG, 1)


@pytest.mark.parametrize("shares", [(0.8, 0.2), (0.2, 0.8), (0.7, 0.2, 0.1)])
def test_noma_sic_error_free(shares):
    alloc = NomaAllocation(shares)
    bits = [random_bits(CFG.bits_per_ofdm_symbol * 32, 10 + u) for u in range(len(shares))]
    w = noma_assemble(bits, alloc, CFG)
    for tx, rx in zip(bits, noma_decode_frame(w.samples, w)):
        assert measure_ber(tx, rx) == 0.0


def test_noma_without_sic_fails_weak_user():
    alloc = NomaAllocation((0.8, 0.2))
    bits = [random_bits(CFG.bits_per_ofdm_symbol * 32, u) for u in range(2)]
    w = noma_assemble(bits, alloc, CFG)
    out = noma_decode_frame(w.samples, w, sic=False)
    assert measure_ber(bits[0], out[0]) == 0.0
    assert measure_ber(bits[1], out[1]) > 0.3


def test_noma_in_hybrid_preserves_alpha():
    alloc = NomaAllocation((0.8, 0.2))
    bits = [random_bits(CFG.bits_per_ofdm_symbol * 64, u) for u in range(2)]
    w = noma_assemble(bits, alloc, CFG, alpha=0.4, mls=MlsConfig(9))
    mls_p = np.mean(mls_component(w) ** 2)
    assert mls_p / w.power() == pytest.approx(0.4, rel=0.02)
    for tx, rx in zip(bits, noma_decode_frame(w.samples, w)):
        assert measure_ber(tx, rx) == 0.0


def test_noma_degenerate_warns_and_validation():
    with pytest.warns(DegenerateAllocationWarning):
        noma_assemble([random_bits(62, 0), random_bits(62, 1)], NomaAllocation((0.5, 0.5)), CFG)
    with pytest.raises(AllocationError):
        NomaAllocation((0.5, 0.6))
    with pytest.raises(AllocationError):
        NomaAllocation((1.0, 0.0))
    with pytest.raises(WaveformError):
        noma_assemble([random_bits(62, 0)], NomaAllocation((1.0,)), OfdmConfig(clip_level=2.0))


def test_decode_order_stable():
    assert NomaAllocation((0.2, 0.5, 0.3)).decode_order == [1, 2, 0]
    assert NomaAllocation((0.25, 0.25, 0.5)).decode_order == [2, 0, 1]


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32), st.floats(0.0, 0.9))
def test_oma_alpha_share_preserved(split, seed, alpha):
    grid = ResourceGrid(subcarrier_groups=(tuple(range(1, split + 1)), tuple(range(split + 1, 32))))
    bits = _oma_bits(grid, 32, seed % 1000)
    w = oma_assemble(bits, grid, CFG, alpha=alpha, mls=MlsConfig(9))
    share = np.mean(mls_component(w) ** 2) / w.power()
    assert abs(share - alpha) <= 0.02 + 0.05 * alpha * (1 - alpha)
    assert math.isclose(np.mean(mls_component(w) ** 2), alpha, rel_tol=1e-12, abs_tol=1e-15)
