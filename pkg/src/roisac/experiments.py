"""Monte Carlo drivers behind the CLI subcommands.

Every driver takes a loaded scenario dict and returns a Table. Trial ``i`` of
command ``cmd`` draws all randomness from ``derive_seed(root_seed, cmd, i)``,
and sweeps reuse the same trial seeds at every sweep value.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .channel import NoiseParams, area_source_gain, point_source_gain, received_signal, uplink_gain
from .duplexing import LinkContext, TddFrame, WddConfig, run_tdd_frame, run_wdd_frame, size_guard
from .geometry import LinkGeometry, Pose, derive_link_geometry
from .localization import multilaterate
from .multiaccess import NomaAllocation, ResourceGrid, noma_assemble, noma_decode_frame, oma_assemble, oma_decode_all
from .scenario import ConfigError, channel_params, derive_seed, hybrid_config, ofdm_config
from .sensing import EchoModel, distance_to_tof, estimate_tof, sic_multi_target, tof_to_distance
from .waveform import OfdmConfig, gen_hybrid, gen_ofdm, measure_ber, recover_bits, sensing_reference


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def q_function(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def _fs(sc) -> float:
    return float(sc["waveform"]["sample_rate"])


def _n_symbols(sc) -> int:
    return int(sc["waveform"]["n_symbols"])


def _trials(sc) -> int:
    return int(sc["experiment"]["trials"])


def _snr(sc) -> float:
    return float(sc["noise"]["snr_db"]) if sc["noise"]["snr_db"] is not None else math.inf


# --- link budget / retroreflection -----------------------------------------------


def link_budget(sc) -> Table:
    """Point, area and uplink gains over the distance x angle grid (phi = theta)."""
    p = channel_params(sc)
    t = Table(["distance_m", "phi_deg", "theta_deg", "point_gain", "area_gain", "uplink_gain"])
    for d in sc["experiment"]["distances"]:
        for a in sc["experiment"]["angles_deg"]:
            g = LinkGeometry(float(d), math.radians(a), math.radians(a))
            t.rows.append((float(d), float(a), float(a), point_source_gain(g, p), area_source_gain(g, p), uplink_gain(g, p.m_p, p.A_s, p.Phi_s)))
    return t


def retro_sweep(sc) -> Table:
    """Round-trip gain versus lateral offset of the reflector at a fixed standoff."""
    exp = sc["experiment"]
    standoff = float(exp["standoff"])
    offsets = [float(o) for o in exp["offsets"]]
    if not standoff > 0 or any(o < 0 for o in offsets):
        raise ConfigError("'experiment.offsets': offsets must be >= 0 and standoff > 0")
    tx = Pose([0.0, 0.0, 0.0], [0.0, 0.0, 1.0])
    t = Table(["offset_m", "reflector", "gain"])
    for refl in exp["reflectors"]:
        changes = {k: refl[k] for k in ("k", "xi0", "Phi_r_deg", "A_s", "m_p", "m_a") if k in refl}
        p = channel_params(sc, **changes)
        model = refl.get("model", "point")
        if model not in ("point", "area"):
            raise ConfigError(f"'experiment.reflectors': unknown model '{model}'")
        fn = point_source_gain if model == "point" else area_source_gain
        for off in offsets:
            g = derive_link_geometry(tx, Pose([off, 0.0, standoff], [0.0, 0.0, -1.0]))
            t.rows.append((off, refl["name"], fn(g, p)))
    return t


# --- waveform trade-off and BER harness ---------------------------------------------


def _random_distance(rng, sc) -> float:
    lo, hi = (float(v) for v in sc["experiment"]["distance_range"])
    return float(rng.uniform(lo, hi))


def sweep_ratio(sc) -> Table:
    """Ranging RMSE and BER of the hybrid waveform across superposition ratios.

    Each trial ranges a single retro echo at a random fractional delay with
    the MLS reference, and demodulates the same frame at the target with the
    MLS cancelled. alpha = 0 has no probe and alpha = 1 no payload; those
    cells are emitted as nan.
    """
    fs, snr, n_sym = _fs(sc), _snr(sc), _n_symbols(sc)
    U = int(sc["sensing"]["upsample"])
    t = Table(["alpha", "ber", "rmse_m", "bit_errors", "n_bits", "n_trials"])
    for alpha in sc["experiment"]["alphas"]:
        alpha = float(alpha)
        cfg = hybrid_config(sc, alpha)
        errors = bits_total = 0
        sq = []
        for i in range(_trials(sc)):
            rng = np.random.default_rng(derive_seed(sc["seed"], "sweep-ratio", i))
            s_payload, s_echo, s_target = rng.integers(0, 2**63, size=3)
            dl = gen_hybrid(None, cfg, s_payload, n_symbols=n_sym, sample_rate=fs)
            if alpha > 0:
                d = _random_distance(rng, sc)
                rx = received_signal(dl, EchoModel.single(1.0, distance_to_tof(d)), NoiseParams.snr(snr), s_echo)
                est = estimate_tof(rx, sensing_reference(dl), U)
                sq.append((est.distance - d) ** 2)
            if alpha < 1:
                rx_t = received_signal(dl, EchoModel.single(1.0, 0.0), NoiseParams.snr(snr), s_target)
                bits = recover_bits(rx_t, dl, 1.0)
                errors += int(np.count_nonzero(bits != dl.meta["bits"]))
                bits_total += bits.size
        ber = errors / bits_total if bits_total else math.nan
        rmse = math.sqrt(float(np.mean(sq))) if sq else math.nan
        t.rows.append((alpha, ber, rmse, errors, bits_total, _trials(sc)))
    return t


def ber_validate(sc, chunk_symbols: int = 8192) -> Table:
    """Uncoded 4-QAM OFDM over AWGN against Q(sqrt(2 Eb/N0)).

    Bits per point: at least ``experiment.min_bits`` and enough for about
    ``experiment.target_errors`` errors at the theoretical BER.
    """
    base = ofdm_config(sc)
    cfg = OfdmConfig(base.n_subcarriers, 4, base.cp_len, None)
    exp = sc["experiment"]
    t = Table(["ebn0_db", "ber", "theory_ber", "rel_error", "bit_errors", "n_bits"])
    for p_idx, ebn0_db in enumerate(exp["ebn0_db"]):
        ebn0 = 10.0 ** (float(ebn0_db) / 10.0)
        theory = float(q_function(math.sqrt(2.0 * ebn0)))
        want = max(int(exp["min_bits"]), int(math.ceil(float(exp["target_errors"]) / theory)))
        n_sym_total = -(-want // cfg.bits_per_ofdm_symbol)
        errors = n_bits = 0
        chunk = 0
        while n_bits < n_sym_total * cfg.bits_per_ofdm_symbol:
            n = min(chunk_symbols, n_sym_total - n_bits // cfg.bits_per_ofdm_symbol)
            rng = np.random.default_rng(derive_seed(sc["seed"], "ber-validate", p_idx * 1_000_003 + chunk))
            w = gen_ofdm(rng.integers(0, 2, n * cfg.bits_per_ofdm_symbol, dtype=np.uint8), cfg, sample_rate=_fs(sc))
            gain = w.meta["symbol_gain"]
            # per-bin Eb/N0 = gain^2 / (2 sigma^2) with unit-energy 4-QAM (Eb = 1/2)
            sigma = gain / math.sqrt(2.0 * ebn0)
            rx = w.samples + rng.normal(0.0, sigma, len(w))
            bits = recover_bits(rx, w, 1.0)
            errors += int(np.count_nonzero(bits != w.meta["bits"]))
            n_bits += bits.size
            chunk += 1
        ber = errors / n_bits
        t.rows.append((float(ebn0_db), ber, theory, abs(ber - theory) / theory, errors, n_bits))
    return t


# --- sensing -----------------------------------------------------------------------


def range_trials(sc) -> Table:
    """Single-target ranging with the scenario's hybrid waveform."""
    fs, snr = _fs(sc), _snr(sc)
    cfg = hybrid_config(sc)
    U = int(sc["sensing"]["upsample"])
    t = Table(["trial", "true_distance_m", "est_distance_m", "error_m", "out_of_window"])
    for i in range(_trials(sc)):
        rng = np.random.default_rng(derive_seed(sc["seed"], "range", i))
        dl = gen_hybrid(None, cfg, rng.integers(0, 2**63), n_symbols=_n_symbols(sc), sample_rate=fs)
        d = _random_distance(rng, sc)
        rx = received_signal(dl, EchoModel.single(1.0, distance_to_tof(d)), NoiseParams.snr(snr), rng.integers(0, 2**63))
        est = estimate_tof(rx, sensing_reference(dl, bool(sc["sensing"]["mls_reference"])), U)
        t.rows.append((i, d, est.distance, est.distance - d, est.out_of_window))
    return t


def multi_target(sc) -> Table:
    """SIC over echoes with the configured amplitudes and integer sample delays."""
    fs, snr = _fs(sc), _snr(sc)
    cfg = hybrid_config(sc)
    exp, sens = sc["experiment"], sc["sensing"]
    amps = [float(a) for a in exp["amplitudes"]]
    delays = [float(d) for d in exp["delays_samples"]]
    if len(amps) != len(delays):
        raise ConfigError("'experiment.amplitudes': needs one amplitude per entry of delays_samples")
    t = Table(["trial", "rank", "delay_samples", "distance_m", "amplitude", "true_delay_samples"])
    for i in range(_trials(sc)):
        rng = np.random.default_rng(derive_seed(sc["seed"], "multi-target", i))
        dl = gen_hybrid(None, cfg, rng.integers(0, 2**63), n_symbols=_n_symbols(sc), sample_rate=fs)
        echoes = EchoModel([(a, d / fs, k) for k, (a, d) in enumerate(zip(amps, delays))])
        ref_power = float(np.mean(dl.samples**2)) * sum(a * a for a in amps)
        rx = received_signal(dl, echoes, NoiseParams.snr(snr, ref_power), rng.integers(0, 2**63))
        found = sic_multi_target(
            rx,
            sensing_reference(dl, bool(sens["mls_reference"])),
            int(sens["max_targets"]),
            float(sens["stop_threshold"]),
            reconstruct=dl,
        )
        for rank, est in enumerate(found):
            nearest = min(delays, key=lambda d: abs(d - est.delay_samples))
            t.rows.append((i, rank, est.delay_samples, est.distance, est.amplitude, nearest))
    return t


# --- duplexing -----------------------------------------------------------------------


def _duplex_waveforms(sc, rng):
    fs, n_sym = _fs(sc), _n_symbols(sc)
    dl = gen_hybrid(None, hybrid_config(sc), rng.integers(0, 2**63), n_symbols=n_sym, sample_rate=fs)
    ul = gen_ofdm(None, ofdm_config(sc), rng.integers(0, 2**63), n_symbols=n_sym, sample_rate=fs)
    return dl, ul


def tdd(sc) -> Table:
    """TDD frames with the configured (or range-sized) guard."""
    fs, snr = _fs(sc), _snr(sc)
    dup = sc["duplexing"]
    d_max = float(dup["d_max"])
    guard = size_guard(d_max, fs) if dup["guard_len"] is None else int(dup["guard_len"])
    t = Table(["trial", "guard_samples", "true_distance_m", "est_distance_m", "ul_ber", "dl_ber", "echo_energy_in_uplink"])
    for i in range(_trials(sc)):
        rng = np.random.default_rng(derive_seed(sc["seed"], "tdd", i))
        dl, ul = _duplex_waveforms(sc, rng)
        # the TDD simulator places echoes on the sample grid; report that distance
        d = tof_to_distance(round(distance_to_tof(float(rng.uniform(0.0, d_max))) * fs) / fs)
        frame = TddFrame(len(dl), guard, len(ul), fs)
        ctx = LinkContext(
            echo_amplitude=float(dup["echo_amplitude"]),
            echo_delay=distance_to_tof(d),
            uplink_gain=float(dup["uplink_gain"]),
            transceiver_noise=NoiseParams.snr(snr),
            target_noise=NoiseParams.snr(snr),
            upsample=int(sc["sensing"]["upsample"]),
        )
        r = run_tdd_frame(frame, dl, ul, ctx, rng.integers(0, 2**63))
        t.rows.append(
            (i, guard, d, r.range_estimate.distance, measure_ber(ul.meta["bits"], r.ul_bits), measure_ber(dl.meta["bits"], r.dl_bits), r.echo_energy_in_uplink)
        )
    return t


def wdd(sc) -> Table:
    """WDD frames across the crosstalk grid; uplink SNR referenced to the uplink power."""
    fs, snr = _fs(sc), _snr(sc)
    dup = sc["duplexing"]
    d_max = float(dup["d_max"])
    t = Table(["epsilon", "ul_ber", "dl_ber", "range_rmse_m", "ul_bit_errors", "n_bits"])
    for eps in dup["epsilon"]:
        cfg = WddConfig.symmetric(float(eps))
        ul_err = dl_err = n_ul = n_dl = 0
        sq = []
        for i in range(_trials(sc)):
            rng = np.random.default_rng(derive_seed(sc["seed"], "wdd", i))
            dl, ul = _duplex_waveforms(sc, rng)
            d = float(rng.uniform(0.0, d_max))
            ctx = LinkContext(
                echo_amplitude=float(dup["echo_amplitude"]),
                echo_delay=distance_to_tof(d),
                uplink_gain=float(dup["uplink_gain"]),
                transceiver_noise=NoiseParams.snr(snr),
                target_noise=NoiseParams.snr(snr),
                upsample=int(sc["sensing"]["upsample"]),
            )
            r = run_wdd_frame(cfg, dl, ul, ctx, rng.integers(0, 2**63))
            ul_err += int(np.count_nonzero(r.ul_bits != ul.meta["bits"]))
            n_ul += r.ul_bits.size
            dl_err += int(np.count_nonzero(r.dl_bits != dl.meta["bits"]))
            n_dl += r.dl_bits.size
            sq.append((r.range_estimate.distance - d) ** 2)
        t.rows.append((float(eps), ul_err / n_ul, dl_err / n_dl, math.sqrt(float(np.mean(sq))), ul_err, n_ul))
    return t


# --- localization / multi-access ------------------------------------------------------


def localize(sc) -> Table:
    """Multilateration fixes under Gaussian range noise."""
    loc = sc["localization"]
    anchors = np.asarray(sc["geometry"]["anchors"], dtype=float)
    truth = np.asarray(loc["truth"], dtype=float)
    dim = anchors.shape[1]
    if truth.shape != (dim,):
        raise ConfigError("'localization.truth': dimension must match the anchors")
    sigma = float(loc["range_sigma"])
    cols = ["x_m", "y_m", "z_m"][:dim]
    t = Table(["trial"] + cols + ["error_m", "residual_m"])
    exact = np.linalg.norm(anchors - truth, axis=1)
    for i in range(_trials(sc)):
        rng = np.random.default_rng(derive_seed(sc["seed"], "localize", i))
        fix = multilaterate(anchors, exact + rng.normal(0.0, sigma, len(anchors)), dim)
        t.rows.append((i, *fix.position.tolist(), float(np.linalg.norm(fix.position - truth)), fix.residual_norm))
    return t


def multiaccess(sc) -> Table:
    """Per-user BER of the configured OMA or NOMA frame embedded in the hybrid."""
    ma = sc["multiaccess"]
    cfg = ofdm_config(sc)
    hyb = hybrid_config(sc)
    fs, snr, n_sym = _fs(sc), _snr(sc), _n_symbols(sc)
    t = Table(["trial", "scheme", "user", "ber", "n_bits"])
    for i in range(_trials(sc)):
        rng = np.random.default_rng(derive_seed(sc["seed"], "multiaccess", i))
        if ma["scheme"] == "oma":
            grid = ResourceGrid(ma["subcarrier_groups"])
            caps = grid.capacity_bits(cfg, n_sym)
            bits = [rng.integers(0, 2, c, dtype=np.uint8) for c in caps]
            w = oma_assemble(bits, grid, cfg, n_symbols=n_sym, sample_rate=fs, alpha=hyb.alpha, mls=hyb.mls)
        elif ma["scheme"] == "noma":
            alloc = NomaAllocation(ma["power_shares"])
            bits = [rng.integers(0, 2, n_sym * cfg.bits_per_ofdm_symbol, dtype=np.uint8) for _ in alloc.power_shares]
            w = noma_assemble(bits, alloc, cfg, sample_rate=fs, alpha=hyb.alpha, mls=hyb.mls)
        else:
            raise ConfigError(f"'multiaccess.scheme': unknown scheme '{ma['scheme']}'")
        rx = received_signal(w, EchoModel.single(1.0, 0.0), NoiseParams.snr(snr), rng.integers(0, 2**63))
        decoded = oma_decode_all(rx, w) if ma["scheme"] == "oma" else noma_decode_frame(rx, w)
        for u, (b, d) in enumerate(zip(bits, decoded)):
            t.rows.append((i, ma["scheme"], u, measure_ber(b, d) if b.size else 0.0, int(b.size)))
    return t
