import math
from pathlib import Path

import pytest

import gravdec

CONFIGS = Path(__file__).resolve().parents[2] / "configs"

SMALL_MASTER = """
[grid]
n = 4

[noise]
alpha = 0.1
lambda_rule = fixed
lambda = 1
active = h00

[state]
kind = superposition
site_a = 0
site_b = 2

[run]
mode = master
T = 0.1
dt = 0.001
"""


def test_identities():
    checks, failures = gravdec.verify_identities()
    assert checks > 0
    assert failures == []


def test_config_round_trip():
    cfg = gravdec.Config.load(str(CONFIGS / "master.ini"))
    assert cfg.mode == "master"
    assert gravdec.Config.parse(cfg.serialize()) == cfg


def test_unknown_key_is_rejected():
    with pytest.raises(gravdec.ConfigError):
        gravdec.Config.parse("[grid]\nsize = 4\n")


def test_run_writes_outputs(tmp_path):
    cfg = gravdec.Config.parse(SMALL_MASTER)
    out = gravdec.run(cfg, out_dir=str(tmp_path))
    assert out.exit_code == gravdec.EXIT_OK, out.error
    assert all(c.passed for c in out.checks)
    for name in ("manifest.ini", "summary.txt", "rho.csv", "coherence.csv"):
        assert (tmp_path / name).is_file()


def test_seed_override_is_reproducible(tmp_path):
    text = SMALL_MASTER.replace("mode = master", "mode = trajectories\nn_traj = 20")
    cfg = gravdec.Config.parse(text)
    a = gravdec.run(cfg, seed=5, out_dir=str(tmp_path / "a"))
    b = gravdec.run(cfg, seed=5, out_dir=str(tmp_path / "b"), threads=2)
    assert a.exit_code == b.exit_code == gravdec.EXIT_OK
    assert (tmp_path / "a" / "rho.csv").read_bytes() == (tmp_path / "b" / "rho.csv").read_bytes()


def test_validate_flags_large_dense_runs():
    cfg = gravdec.Config.parse(SMALL_MASTER.replace("n = 4", "n = 512"))
    v = gravdec.validate(cfg)
    assert v.exit_code == gravdec.EXIT_GUARD
    assert v.errors


def test_lattice_covariance_delta_and_gaussian():
    delta = gravdec.lattice_covariance("delta", n=8)
    assert delta[0] == pytest.approx(1.0)
    assert max(abs(x) for x in delta[1:]) < 1e-12
    gauss = gravdec.lattice_covariance("gaussian", ell=2.0, n=32)
    assert gauss[0] == pytest.approx(1.0)
    assert gauss[1] > gauss[2] > gauss[3] > 0
    with pytest.raises(ValueError):
        gravdec.lattice_covariance("lorentzian")


def test_fit_recovers_exponential_rate():
    times = [0.1 * k for k in range(20)]
    fit = gravdec.fit_decay_rate(times, [0.5 * math.exp(-0.7 * t) for t in times])
    assert fit["gamma"] == pytest.approx(0.7, rel=1e-12)
    assert fit["points"] == 20


def test_fermion_and_boson_couplings_agree():
    n = 8
    h = [[0.01 * (k + 1) * math.sin(x + k) for x in range(n)] for k in range(10)]
    assert gravdec.compare_models(h) < 1e-12
