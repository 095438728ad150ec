"""The ten acceptance criteria, each at its stated tolerance and runtime budget.

Every test prints one ``[ACC n] PASS|FAIL ...`` line (bypassing capture) before
asserting, so ``pytest -v`` shows the verdicts even when everything passes.
"""

import math
import time

import numpy as np
import pytest

from roisac import cli
from roisac import experiments as ex
from roisac.channel import ChannelParams, NoiseParams, point_source_gain, received_signal
from roisac.duplexing import LinkContext, WddConfig, run_wdd_frame
from roisac.geometry import LinkGeometry
from roisac.localization import multilaterate
from roisac.multiaccess import NomaAllocation, ResourceGrid, noma_assemble, noma_decode_frame, oma_assemble, oma_decode_all
from roisac.scenario import load_scenario
from roisac.sensing import EchoModel, distance_to_tof, estimate_tof, sic_multi_target
from roisac.waveform import (
    HybridConfig,
    MlsConfig,
    OfdmConfig,
    gen_hybrid,
    gen_ofdm,
    measure_ber,
    mls_component,
    mls_waveform,
    ofdm_symbols,
    random_bits,
    sensing_reference,
)

FS = 100e6

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\n[ACC {n}] {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return _report


def _violations(values, direction):
    """Adjacent pairs against the expected direction, as relative magnitudes."""
    out = []
    for a, b in zip(values, values[1:]):
        worse = (b - a) if direction == "down" else (a - b)
        if worse > 0:
            out.append(worse / max(abs(a), abs(b)))
    return out


def test_1_tradeoff_trend(report):
    t0 = time.perf_counter()
    sc = load_scenario(overrides=["experiment.trials=200", "noise.snr_db=0.0", "experiment.alphas=[0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9]"])
    t = ex.sweep_ratio(sc)
    dt = time.perf_counter() - t0
    rmse, ber = t.column("rmse_m"), t.column("ber")
    v_rmse, v_ber = _violations(rmse, "down"), _violations(ber, "up")
    ok = len(v_rmse) <= 1 and all(v < 0.1 for v in v_rmse) and len(v_ber) <= 1 and all(v < 0.1 for v in v_ber) and dt < 120
    detail = f"RMSE {np.round(rmse, 4).tolist()} BER {np.round(ber, 4).tolist()} violations rmse={v_rmse} ber={v_ber} {dt:.1f}s"
    report(1, ok, detail)


def test_2_ber_harness(report):
    t0 = time.perf_counter()
    t = ex.ber_validate(load_scenario(overrides=["experiment.ebn0_db=[0.0,4.0,8.0]", "experiment.min_bits=1000000"]))
    dt = time.perf_counter() - t0
    rel, n_bits = t.column("rel_error"), t.column("n_bits")
    ok = bool(np.all(rel <= 0.05) and np.all(n_bits >= 1e6) and dt < 60)
    report(2, ok, f"rel errors {np.round(rel, 4).tolist()} bits {n_bits.astype(int).tolist()} {dt:.1f}s")


def test_3_ranging_exactness(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    ref = mls_waveform(MlsConfig(9), None, FS)
    int_ok = 0
    for d in rng.integers(0, 2000, 100):
        rx = received_signal(ref, EchoModel.single(0.7, d / FS), NoiseParams.off())
        int_ok += estimate_tof(rx, ref).delay_samples == d
    U = 8
    frac_err = []
    for d in rng.uniform(1.0, 500.0, 100):
        rx = received_signal(ref, EchoModel.single(0.7, d / FS), NoiseParams.off())
        frac_err.append(abs(estimate_tof(rx, ref, upsample=U).delay_samples - d))
    dt = time.perf_counter() - t0
    ok = int_ok == 100 and max(frac_err) <= 1 / (2 * U) and dt < 60
    report(3, ok, f"integer exact {int_ok}/100, fractional max error {max(frac_err):.4f} samples (limit {1 / (2 * U)}) {dt:.1f}s")


def test_4_inverse_square(report):
    rng = np.random.default_rng(4)
    phi, theta = 0.3, 0.2
    worst = 0.0
    for _ in range(20):
        p = ChannelParams(
            m_p=float(rng.uniform(1, 30)),
            A_s=float(rng.uniform(1e-6, 1e-2)),
            k=float(rng.uniform(0.1, 1.0)),
            Phi_s=math.radians(80),
            Phi_r=math.radians(60),
        )
        d = float(rng.uniform(0.1, 1000))
        ratio = point_source_gain(LinkGeometry(2 * d, phi, theta), p) / point_source_gain(LinkGeometry(d, phi, theta), p)
        worst = max(worst, abs(ratio - 0.25))
    report(4, worst <= 1e-12, f"max |ratio - 0.25| = {worst:.2e} over 20 parameter sets")


def test_5_sic_resolution(report):
    t0 = time.perf_counter()
    cfg = HybridConfig(0.5, mls=MlsConfig(9))

    def frame(seed):
        tx = gen_hybrid(None, cfg, seed, n_symbols=7, sample_rate=FS)
        return tx, sensing_reference(tx)

    def resolved(found, truth):
        if len(found) != 2:
            return False, math.inf
        est = sorted(e.delay_samples for e in found)
        err = max(abs(a - b) for a, b in zip(est, sorted(truth)))
        return err <= 1, err

    # noiseless: 20:1 at separations from one chip upward
    worst = 0.0
    noiseless_ok = True
    for i, sep in enumerate([1, 2, 3, 5, 8, 13, 21, 34, 55, 89]):
        tx, ref = frame(i)
        truth = (40, 40 + sep)
        rx = received_signal(tx, EchoModel([(1.0, truth[0] / FS), (0.05, truth[1] / FS)]), NoiseParams.off())
        ok, err = resolved(sic_multi_target(rx, ref, 2, 0.02, reconstruct=tx), truth)
        noiseless_ok &= ok
        worst = max(worst, err)

    rng = np.random.default_rng(5)
    hits = 0
    for i in range(500):
        tx, ref = frame(1000 + i)
        ratio = 20.0 if i % 2 == 0 else float(np.exp(rng.uniform(0, math.log(20))))
        d1 = int(rng.integers(5, 100))
        d2 = d1 + int(rng.integers(1, 60))
        if rng.random() < 0.5:
            d1, d2 = d2, d1
        amps = (1.0, 1.0 / ratio)
        p = float(np.mean(tx.samples**2)) * (1 + amps[1] ** 2)
        rx = received_signal(tx, EchoModel([(amps[0], d1 / FS), (amps[1], d2 / FS)]), NoiseParams.snr(20.0, p), seed=i)
        hits += resolved(sic_multi_target(rx, ref, 2, 0.02, reconstruct=tx), (d1, d2))[0]
    dt = time.perf_counter() - t0
    ok = noiseless_ok and hits / 500 >= 0.95 and dt < 120
    report(5, ok, f"noiseless 20:1 worst delay error {worst} samples; detection at 20 dB {hits}/500 {dt:.1f}s")


def test_6_tdd(report):
    t0 = time.perf_counter()
    guarded = ex.tdd(load_scenario(overrides=["experiment.trials=1000"]))
    spill = guarded.column("echo_energy_in_uplink")
    cmp = []
    for guard in ("null", "0"):
        sc = load_scenario(overrides=["experiment.trials=200", "duplexing.d_max=60.0", "duplexing.echo_amplitude=0.8", f"duplexing.guard_len={guard}"])
        cmp.append(float(np.mean(ex.tdd(sc).column("ul_ber"))))
    dt = time.perf_counter() - t0
    ok = bool(np.all(spill == 0.0)) and cmp[1] > cmp[0]
    report(6, ok, f"guarded spill max {spill.max()} over 1000 frames; uplink BER guarded {cmp[0]:.3e} vs no guard {cmp[1]:.3e} {dt:.1f}s")


def test_7_wdd(report):
    t0 = time.perf_counter()
    exact = True
    for i in range(20):
        dl = gen_hybrid(None, HybridConfig(0.5, mls=MlsConfig(7)), i, n_symbols=16, sample_rate=FS)
        ul = gen_ofdm(None, OfdmConfig(), 100 + i, n_symbols=16, sample_rate=FS)
        ctx = LinkContext(echo_amplitude=1.0, echo_delay=distance_to_tof(1.0 + i * 0.7), uplink_gain=0.5)
        r = run_wdd_frame(WddConfig.symmetric(0.0), dl, ul, ctx, i)
        exact &= measure_ber(ul.meta["bits"], r.ul_bits) == 0.0 and r.range_estimate.delay_samples == ctx.delay_samples(FS)
    # a strong echo beside a weak uplink, so that crosstalk rather than noise sets the error count
    sc = load_scenario(
        overrides=["experiment.trials=210", "noise.snr_db=20.0", "duplexing.echo_amplitude=1.0", "duplexing.uplink_gain=0.03", "duplexing.epsilon=[0.0,0.001,0.01,0.1]"]
    )
    t = ex.wdd(sc)
    ber, n_bits = t.column("ul_ber"), t.column("n_bits")
    mono = all(b >= a for a, b in zip(ber, ber[1:]))
    dt = time.perf_counter() - t0
    ok = exact and mono and bool(np.all(n_bits >= 1e5))
    report(7, ok, f"eps=0 noiseless exact={exact}; uplink BER {ber.tolist()} over {int(n_bits[0])} bits/point {dt:.1f}s")


def test_8_multilateration(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = 0.0
    for dim in (2, 3):
        done = 0
        while done < 100:
            n = int(rng.integers(dim + 1, dim + 5))
            anchors = rng.uniform(-50, 50, (n, dim))
            s = np.linalg.svd(anchors[1:] - anchors[0], compute_uv=False)
            if s[dim - 1] < 1e-2 * s[0]:
                continue
            truth = rng.uniform(-30, 30, dim)
            fix = multilaterate(anchors, np.linalg.norm(anchors - truth, axis=1), dim)
            worst = max(worst, float(np.linalg.norm(fix.position - truth)))
            done += 1
    square = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]])
    errs = []
    for _ in range(500):
        truth = rng.uniform(0, 10, 2)
        r = np.linalg.norm(square - truth, axis=1) + rng.normal(0, 0.05, 4)
        errs.append(float(np.linalg.norm(multilaterate(square, r).position - truth)))
    med = float(np.median(errs))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and med <= 0.10
    report(8, ok, f"exact-range worst error {worst:.2e} m (2D+3D); noisy median {100 * med:.2f} cm {dt:.1f}s")


def test_9_multiaccess(report):
    cfg = OfdmConfig(64, 4, 16)
    n_sym = 64
    grid = ResourceGrid(subcarrier_groups=(tuple(range(1, 11)), tuple(range(11, 32))))
    masks = grid.masks(cfg, n_sym)
    caps = grid.capacity_bits(cfg, n_sym)
    bits = [random_bits(c, 90 + u) for u, c in enumerate(caps)]
    w = oma_assemble(bits, grid, cfg, n_symbols=n_sym)
    oma_ok = all(measure_ber(tx, rx) == 0.0 for tx, rx in zip(bits, oma_decode_all(w.samples, w)))
    # user 0 transmitting alone: user 1's resource elements must carry nothing
    single = oma_assemble([bits[0]], ResourceGrid(subcarrier_groups=(grid.subcarrier_groups[0],)), cfg, n_symbols=n_sym)
    leak = float(np.max(np.abs(ofdm_symbols(single.samples, cfg)[masks[1]])))
    crosstalk_zero = leak <= 1e-12

    alloc = NomaAllocation((0.8, 0.2))
    nb = [random_bits(cfg.bits_per_ofdm_symbol * n_sym, 70 + u) for u in range(2)]
    nw = noma_assemble(nb, alloc, cfg)
    noma_ok = all(measure_ber(tx, rx) == 0.0 for tx, rx in zip(nb, noma_decode_frame(nw.samples, nw)))

    worst_share = 0.0
    big = 512
    gbits = [random_bits(c, 7 + u) for u, c in enumerate(grid.capacity_bits(cfg, big))]
    nbits = [random_bits(cfg.bits_per_ofdm_symbol * big, 17 + u) for u in range(2)]
    for alpha in (0.1, 0.3, 0.5, 0.7, 0.9):
        mls = MlsConfig(9)
        frames = [
            oma_assemble(gbits, grid, cfg, n_symbols=big, alpha=alpha, mls=mls),
            noma_assemble(nbits, alloc, cfg, alpha=alpha, mls=mls),
        ]
        for f in frames:
            share = float(np.mean(mls_component(f) ** 2) / f.power())
            worst_share = max(worst_share, abs(share - alpha) / alpha)
    ok = oma_ok and crosstalk_zero and noma_ok and worst_share <= 0.02
    report(9, ok, f"OMA error-free={oma_ok} leak={leak:.1e}; NOMA 0.8/0.2 error-free={noma_ok}; worst alpha share deviation {100 * worst_share:.2f}%")


def test_10_cli_determinism(report, tmp_path):
    t0 = time.perf_counter()
    mismatched = []
    for command in sorted(cli.COMMANDS):
        outs = []
        for run in ("a", "b"):
            assert cli.main([command, "--seed", "11", "--out", str(tmp_path / run), "--no-svg"]) == 0
            outs.append((tmp_path / run / f"{command}.csv").read_bytes())
        if outs[0] != outs[1]:
            mismatched.append(command)
    dt = time.perf_counter() - t0
    report(10, not mismatched, f"{len(cli.COMMANDS)} commands byte-identical on re-run; mismatched={mismatched} {dt:.1f}s")
