import subprocess
import sys
from types import SimpleNamespace

import numpy as np
import pytest

from v2ichan import cli, mlp, records
from v2ichan import harness as hs
from v2ichan.config import default_config_text, load_config, parse_config
from v2ichan.errors import ConfigError

SMALL = """
[experiment]
n_frames = 20
frames_per_point = 30
snr_db = 0, 10
[mlp]
epochs = 3
"""


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


# --- config -------------------------------------------------------------------

def test_default_config_loads():
    cfg = load_config()
    assert cfg.ofdm.num_subcarriers == 64 and cfg.ofdm.cp_len == 16
    assert cfg.mlp.n_h == 10 and cfg.mlp.train.epochs == 20
    assert cfg.ofdm.bits_per_symbol == 2


def test_default_file_flags_assumed_values():
    text = default_config_text()
    for key in ("num_subcarriers", "cp_len", "tap_delays", "carrier_freq_hz", "learning_rate"):
        line = next(ln for ln in text.splitlines() if ln.startswith(key))
        assert "assumed default" in line


@pytest.mark.parametrize("text, key", [
    ("[ofdm]\ncp_len = 64\n", "ofdm.cp_len"),
    ("[ofdm]\nnum_subcarriers = 48\n", "ofdm.num_subcarriers"),
    ("[ofdm]\nbits_per_symbol = 4\n", "ofdm.bits_per_symbol"),
    ("[ofdm]\ncp_len = 4\n", "channel.tap_delays"),
    ("[channel]\ntap_powers = 0.5, 0.3, 0.1\n", "channel.tap_powers"),
    ("[channel]\ndoppler_hz = 1, 2\n", "channel.doppler_hz"),
    ("[channel]\nshadow_sigma_db = -1\n", "channel.shadow_sigma_db"),
    ("[channel]\nbs_offset_m = 500\n", "channel.bs_offset_m"),
    ("[channel]\nblock_steps = 0\n", "channel.block_steps"),
    ("[mlp]\nlearning_rate = 1.5\n", "mlp.learning_rate"),
    ("[mlp]\nn_h = zero\n", "mlp.n_h"),
    ("[mlp]\naugment = maybe\n", "mlp.augment"),
    ("[experiment]\nestimators = ls, zf\n", "experiment.estimators"),
    ("[experiment]\nn_frames = 5\n", "experiment.n_frames"),
    ("[experiment]\nhorizon = 2\n", "experiment.horizon"),
    ("[experiment]\nsnr_db = \n", "experiment.snr_db"),
    ("[experiment]\ncolour = blue\n", "experiment.colour"),
    ("[extras]\nx = 1\n", "extras"),
])
def test_config_errors_name_their_key(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key
    assert str(info.value).startswith(key)


def test_config_overrides_and_seed():
    cfg = parse_config("[experiment]\nsnr_db = 3, 6\n[channel]\nblock_steps = 4\n")
    assert cfg.experiment.snr_db == (3.0, 6.0)
    assert cfg.channel.block_steps == 4
    seeded = cfg.with_seed(99)
    assert seeded.experiment.seed == 99 and seeded.mlp.train.seed == 99


def test_shipped_configs_load():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.ini")):
        load_config(path)


# --- records --------------------------------------------------------------------

def test_float_format():
    assert records.fmt(1 / 3) == "0.333333333"
    assert records.fmt(True) == "1" and records.fmt(np.int64(4)) == "4"


def test_dataset_text_round_trip():
    ds = hs.build_dataset(hs.ChannelConfig(), hs.OfdmConfig(16, 8), 5.0, 10, 1)
    back = records.parse_dataset(records.dataset_text(ds))
    np.testing.assert_array_equal(back.inputs, ds.inputs)
    np.testing.assert_array_equal(back.targets, ds.targets)
    np.testing.assert_array_equal(back.split, ds.split)
    assert back.provenance["seed"] == 1 and back.provenance["snr_db"] == 5.0


def test_dataset_parse_errors():
    with pytest.raises(ValueError):
        records.parse_dataset("in_re,in_im\n")
    with pytest.raises(ValueError):
        records.parse_dataset("# v2ichan-dataset v1\nin_re,in_im,t_re,t_im,split\n1,2,3,4,bogus\n")


def test_ber_csv_sorted():
    res = hs.SweepResult([hs.SweepRow(10.0, "mmse", "ber", 0.01, 10, 51),
                          hs.SweepRow(0.0, "perfect", "ber", 0.02, 10, 102),
                          hs.SweepRow(0.0, "ls", "ber", 0.03, 10, 154),
                          hs.SweepRow(0.0, "ls", "nmse", 0.1, 10, 0)])
    lines = records.ber_csv(res, 512).splitlines()
    assert lines[0] == "snr_db,estimator,ber,total_bits,error_bits"
    assert lines[1:] == ["0,ls,0.03,5120,154", "0,perfect,0.02,5120,102", "10,mmse,0.01,5120,51"]


# --- command line -------------------------------------------------------------------

def test_dataset_command(small_cfg, tmp_path, capsys):
    out = tmp_path / "o"
    assert run_cli("--config", small_cfg, "--out", out, "dataset") == 0
    ds = records.read_dataset(out / "dataset.csv")
    assert len(ds) == 20 * 64
    text = (out / "dataset.csv").read_text().splitlines()
    assert "in_re,in_im,t_re,t_im,split" in text


def test_cp_len_rejected(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[ofdm]\ncp_len = 64\n")
    assert run_cli("--config", bad, "--out", tmp_path, "dataset") == cli.EXIT_CONFIG
    assert "ofdm.cp_len" in capsys.readouterr().err
    assert not (tmp_path / "dataset.csv").exists()


def test_train_and_sweep_commands(small_cfg, tmp_path):
    out = tmp_path / "o"
    assert run_cli("--config", small_cfg, "--out", out, "dataset") == 0
    assert run_cli("--config", small_cfg, "--out", out, "train") == 0
    pred = mlp.load_predictor(out / "model.txt")
    assert pred.network.n_h == 10
    epochs = (out / "mse_epoch.csv").read_text().splitlines()
    assert epochs[0] == "epoch,snr_db,split,nmse,is_best"
    assert len(epochs) - 1 == 3 * 3
    assert run_cli("--config", small_cfg, "--out", out, "sweep", "--dataset", out / "dataset.csv") == 0
    ber = (out / "ber.csv").read_text().splitlines()
    assert ber[0] == "snr_db,estimator,ber,total_bits,error_bits"
    keys = [(float(r.split(",")[0]), r.split(",")[1]) for r in ber[1:]]
    assert keys == sorted(keys) and len(keys) == 2 * 4
    assert (out / "hist.csv").read_text().startswith("bin_lo,bin_hi,count,split\n")
    assert (out / "regression.csv").read_text().startswith("target,output,split\n")
    assert (out / "regression_stats.csv").read_text().startswith("split,slope,intercept,r\n")


def test_sweep_without_mlp_needs_no_model(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL.replace("[mlp]", "estimators = perfect, ls, mmse\n[mlp]"))
    assert run_cli("--config", cfg, "--out", tmp_path, "sweep") == 0
    names = {r.split(",")[1] for r in (tmp_path / "ber.csv").read_text().splitlines()[1:]}
    assert names == {"perfect", "ls", "mmse"}


def test_sweep_missing_model(small_cfg, tmp_path, capsys):
    assert run_cli("--config", small_cfg, "--out", tmp_path, "sweep") == cli.EXIT_CONFIG
    assert "model" in capsys.readouterr().err
    assert not (tmp_path / "ber.csv").exists()


def test_io_error_exit_code(small_cfg, tmp_path):
    missing = tmp_path / "nope.csv"
    assert run_cli("--config", small_cfg, "--out", tmp_path, "train", "--dataset", missing) == cli.EXIT_IO
    assert run_cli("--config", tmp_path / "absent.ini", "dataset") == cli.EXIT_IO


def test_divergence_exit_code(tmp_path, capsys):
    ds = hs.Dataset(np.full((40, 2), 1e3), np.full((40, 2), 1e200), hs.split_labels(40, 0), {})
    records.write_dataset(ds, tmp_path / "d.csv")
    cfg = tmp_path / "c.ini"
    cfg.write_text("[mlp]\nlearning_rate = 0.9\naugment = false\nepochs = 3\n")
    code = run_cli("--config", cfg, "--out", tmp_path, "train", "--dataset", tmp_path / "d.csv")
    assert code == cli.EXIT_NUMERIC
    assert "diverged" in capsys.readouterr().err
    assert not (tmp_path / "model.txt").exists()


def test_linear_map_training_reaches_low_nmse(tmp_path, capsys):
    rng = np.random.default_rng(0)
    z = (rng.standard_normal(640) + 1j * rng.standard_normal(640)) / np.sqrt(2)
    w = 0.8 * np.exp(0.3j) * z
    ds = hs.Dataset(hs._pairs(z), hs._pairs(w), hs.split_labels(640, 0), {"snr_db": float("inf")})
    records.write_dataset(ds, tmp_path / "lin.csv")
    cfg = tmp_path / "c.ini"
    cfg.write_text("[mlp]\nlearning_rate = 0.05\nepochs = 200\n")
    assert run_cli("--config", cfg, "--out", tmp_path, "train", "--dataset", tmp_path / "lin.csv") == 0
    line = capsys.readouterr().out
    assert float(line.split()[3].rstrip(";")) < 1e-3


def test_gradcheck_command(capsys):
    assert run_cli("gradcheck") == 0
    assert "PASS" in capsys.readouterr().out
    assert run_cli("--seed", 3, "gradcheck", "--cases", 1) == 0
    first = capsys.readouterr().out
    run_cli("--seed", 3, "gradcheck", "--cases", 1)
    assert capsys.readouterr().out == first
    assert run_cli("gradcheck", "--cases", 0) == cli.EXIT_CONFIG


def test_gradcheck_negative_control(capsys):
    def corrupted(net, x, t):
        g1, g2 = mlp.gradients(net, x, t)
        return g1, 1.01 * g2

    args = SimpleNamespace(cases=3, seed=0)
    assert cli.cmd_gradcheck(args, grad_fn=corrupted) == cli.EXIT_NUMERIC
    assert "FAIL" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "v2ichan", "gradcheck", "--cases", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
