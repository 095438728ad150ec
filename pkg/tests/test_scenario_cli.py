import hashlib
import json
import math

import numpy as np
import pytest

from roisac import cli
from roisac import experiments as ex
from roisac.scenario import (
    DEFAULT_SCENARIO,
    PRESETS,
    ConfigError,
    apply_override,
    channel_params,
    derive_seed,
    hybrid_config,
    load_scenario,
)


def test_defaults_load():
    sc = load_scenario()
    assert sc["seed"] == DEFAULT_SCENARIO["seed"]
    p = channel_params(sc)
    assert p.Phi_s == pytest.approx(math.radians(60))
    assert hybrid_config(sc).alpha == 0.5


def test_derive_seed_oracle():
    digest = hashlib.sha256(b"7:range:3").digest()
    assert derive_seed(7, "range", 3) == int.from_bytes(digest[:8], "big")
    assert derive_seed(7, "range", 3) != derive_seed(7, "range", 4)
    assert 0 <= derive_seed(2**64 - 1, "tdd", 0) < 2**64


def test_file_and_overrides(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"seed": 9, "noise": {"snr_db": 3.0}}))
    sc = load_scenario(path, ["waveform.alpha=0.25", "experiment.alphas=[0.1,0.2]"])
    assert sc["seed"] == 9
    assert sc["noise"]["snr_db"] == 3.0
    assert sc["waveform"]["alpha"] == 0.25
    assert sc["experiment"]["alphas"] == [0.1, 0.2]
    assert sc["waveform"]["n_subcarriers"] == 64


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_load(name):
    sc = load_scenario(preset=name)
    channel_params(sc)
    hybrid_config(sc)


def test_parse_error_reports_line_and_column(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "seed": 1,\n  "noise": {"snr_db": }\n}\n')
    with pytest.raises(ConfigError, match=r"bad\.json:3:\d+"):
        load_scenario(path)


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{\n  "channel": {\n    "m_q": 2\n  }\n}\n')
    with pytest.raises(ConfigError, match="channel.m_q"):
        load_scenario(path)
    with pytest.raises(ConfigError):
        apply_override(load_scenario(), "waveform.nope=1")
    with pytest.raises(ConfigError):
        apply_override(load_scenario(), "no-equals-sign")


def test_invalid_values_name_the_key():
    with pytest.raises(ConfigError, match="waveform"):
        load_scenario(overrides=["waveform.qam_order=8"])
    with pytest.raises(ConfigError, match="experiment.trials"):
        load_scenario(overrides=["experiment.trials=0"])
    with pytest.raises(ConfigError, match="preset"):
        load_scenario(preset="mars")


def test_table_csv_format():
    t = ex.Table(["a", "b", "c"], [(1, 0.1, math.nan), (2, 1e-300, True)])
    assert t.to_csv() == "a,b,c\n1,0.1,nan\n2,1e-300,1\n"
    np.testing.assert_array_equal(t.column("a"), [1.0, 2.0])


def test_q_function():
    assert float(ex.q_function(0.0)) == pytest.approx(0.5)
    assert float(ex.q_function(math.sqrt(2 * 10 ** 0.8))) == pytest.approx(1.9091e-4, rel=1e-3)


def test_link_budget_matches_closed_form():
    t = ex.link_budget(load_scenario(overrides=["experiment.distances=[2.0]", "experiment.angles_deg=[0.0]"]))
    row = dict(zip(t.columns, t.rows[0]))
    expected = 0.9 * (2 / (2 * math.pi * 16)) * 1e-4
    assert any(v == pytest.approx(expected, rel=1e-12) for v in row.values() if isinstance(v, float))


FAST = {
    "link-budget": [],
    "retro-sweep": [],
    "sweep-ratio": ["--trials", "3", "--set", "experiment.alphas=[0.2,0.8]"],
    "range": ["--trials", "5"],
    "multi-target": ["--trials", "3"],
    "tdd": ["--trials", "3"],
    "wdd": ["--trials", "2"],
    "localize": ["--trials", "5"],
    "ber-validate": ["--set", "experiment.min_bits=1000", "--set", "experiment.target_errors=10"],
    "multi-access": ["--trials", "2"],
}


@pytest.mark.parametrize("command", sorted(cli.COMMANDS))
def test_every_command_runs_and_is_deterministic(command, tmp_path):
    args = [command, "--seed", "5", *FAST[command]]
    assert cli.main([*args, "--out", str(tmp_path / "a")]) == 0
    assert cli.main([*args, "--out", str(tmp_path / "b"), "--no-svg"]) == 0
    a = (tmp_path / "a" / f"{command}.csv").read_bytes()
    b = (tmp_path / "b" / f"{command}.csv").read_bytes()
    assert a == b
    assert len(a.splitlines()) >= 2
    if cli.COMMANDS[command][1] is not None:
        assert (tmp_path / "a" / f"{command}.svg").read_text().startswith("<svg")
    assert not (tmp_path / "b" / f"{command}.svg").exists()


def test_seed_changes_output(tmp_path):
    for seed in ("1", "2"):
        assert cli.main(["range", "--trials", "5", "--seed", seed, "--out", str(tmp_path / seed)]) == 0
    assert (tmp_path / "1" / "range.csv").read_bytes() != (tmp_path / "2" / "range.csv").read_bytes()


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert cli.main(["range", "--scenario", str(bad), "--out", str(tmp_path)]) == 2
    assert cli.main(["range", "--set", "waveform.bogus=1", "--out", str(tmp_path)]) == 2
    assert cli.main(["range", "--scenario", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "config error" in err
    # anchors on a line make multilateration impossible
    code = cli.main(["localize", "--set", "geometry.anchors=[[0,0],[1,1],[2,2]]", "--out", str(tmp_path)])
    assert code == 3
