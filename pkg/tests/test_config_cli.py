"""Config files, named random streams, and the command-line pipeline."""

import csv
import pathlib

import numpy as np
import pytest
import yaml

import risvec
from risvec.cli import main
from risvec.config import (STREAMS, ExperimentConfig, config_from_dict,
                           dump_config, load_config, make_env, named_rng,
                           with_overrides)

MICRO_YAML = """\
env:
  k_vehicles: 2
  n_elements: 2
  phase_bits: 2
  eta_bps: 1.0e6
phase_training:
  episodes: 3
  steps_per_episode: 5
  batch_size: 4
  actor_hidden: [8]
  critic_hidden: [8]
power_training:
  episodes: 4
  steps_per_episode: 5
  batch_size: 4
  actor_hidden: [8]
  critic_hidden: [8]
run:
  seed: 11
  test_episodes: 2
"""


@pytest.fixture
def micro_config(tmp_path):
    path = tmp_path / "micro.yaml"
    path.write_text(MICRO_YAML, encoding="utf-8")
    return str(path)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


# configuration ------------------------------------------------------------


def test_builtin_defaults_full_profile():
    cfg = ExperimentConfig()
    assert cfg.env.k_vehicles == 8
    assert cfg.env.n_elements == 36
    assert cfg.env.phase_bits == 3
    assert cfg.env.eta_bps == 3e6
    assert cfg.env.cycles_per_bit == 500.0
    assert cfg.env.w2_queue == 0.2
    assert cfg.env.fading.rho == 1e-2
    assert cfg.env.fading.alpha_kb == 5.5
    assert cfg.phase.episodes == 1000
    assert cfg.phase.steps_per_episode == 100
    assert cfg.power.actor_delay_episodes == 2
    assert cfg.seed == 1
    assert cfg.test_episodes == 10


def test_packaged_desk_profile_loads():
    desk = pathlib.Path(risvec.__file__).parent / "configs" / "desk.yaml"
    cfg = load_config(desk)
    assert cfg.env.k_vehicles == 4
    assert cfg.env.n_elements == 16
    assert cfg.env.phase_bits == 3
    assert cfg.env.eta_bps == 3e6
    assert cfg.env.cycles_per_bit == 1000.0
    assert cfg.env.w2_queue == 0.3
    assert cfg.env.fading.alpha_kb == 4.7
    assert cfg.env.fading.alpha_rb == 2.2
    assert cfg.phase.episodes == 300
    assert cfg.phase.gamma == 0.2
    assert cfg.phase.lr_actor == 2e-4
    assert cfg.phase.batch_size == 256
    assert cfg.phase.actor_hidden == (128, 64)
    assert cfg.power.episodes == 300
    assert cfg.power.gamma == 0.9
    assert cfg.power.lr_actor == 4e-5
    assert cfg.power.batch_size == 128
    assert cfg.power.noise_std_initial == 1.0
    assert cfg.power.noise_decay == 0.985
    assert cfg.power.noise_floor == 0.2
    assert cfg.seed == 1
    assert cfg.test_episodes == 10


def test_dump_load_round_trip():
    desk = pathlib.Path(risvec.__file__).parent / "configs" / "desk.yaml"
    cfg = load_config(desk)
    redone = config_from_dict(yaml.safe_load(dump_config(cfg)))
    assert redone == cfg


def test_unknown_sections_and_keys_rejected():
    with pytest.raises(ValueError):
        config_from_dict({"bogus": {}})
    with pytest.raises(ValueError):
        config_from_dict({"env": {"n_antennas": 4}})
    with pytest.raises(ValueError):
        config_from_dict({"run": {"verbosity": 2}})
    with pytest.raises(ValueError):
        config_from_dict({"layout": {"bs": [1.0, 2.0]}})
    with pytest.raises(ValueError):
        config_from_dict({"phase_training": {"warmup": 10}})


def test_scalar_coercion_repairs_yaml_strings():
    # pyyaml only recognises exponents with a sign, so "1.0e6" arrives as a
    # string; numeric fields must absorb it rather than explode downstream
    cfg = config_from_dict({"env": {"eta_bps": "1.0e6", "k_vehicles": "4"}})
    assert cfg.env.eta_bps == 1e6
    assert cfg.env.k_vehicles == 4
    with pytest.raises(ValueError):
        config_from_dict({"env": {"eta_bps": "plenty"}})
    with pytest.raises(ValueError):
        config_from_dict({"env": {"static_vehicles": 1}})


def test_empty_config_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("", encoding="utf-8")
    assert load_config(p) == ExperimentConfig()


def test_named_streams_pinned_and_independent():
    assert STREAMS == {
        "env.mobility": 0, "env.arrivals": 1, "env.fading": 2,
        "eval.mobility": 3, "eval.arrivals": 4, "eval.fading": 5,
        "phase.init": 6, "phase.explore": 7, "phase.sample": 8,
        "power.init": 9, "power.explore": 10, "power.sample": 11,
        "baseline.init": 12, "baseline.explore": 13, "baseline.sample": 14,
        "baseline.phases": 15, "baseline.powers": 16,
    }
    a = named_rng(7, "env.arrivals").random(8)
    b = named_rng(7, "env.arrivals").random(8)
    assert np.array_equal(a, b)
    c = named_rng(7, "eval.arrivals").random(8)
    assert not np.array_equal(a, c)
    d = named_rng(8, "env.arrivals").random(8)
    assert not np.array_equal(a, d)
    with pytest.raises(KeyError):
        named_rng(7, "env.bogus")


def test_with_overrides_touches_both_stages():
    cfg = ExperimentConfig()
    out = with_overrides(cfg, seed=99, episodes=12)
    assert out.seed == 99
    assert out.phase.episodes == 12
    assert out.power.episodes == 12
    assert with_overrides(cfg) == cfg


def test_make_env_roles_and_changes(micro_config):
    cfg = load_config(micro_config)
    with pytest.raises(ValueError):
        make_env(cfg, role="train")
    env = make_env(cfg, role="env", n_elements=5)
    assert env.cfg.n_elements == 5
    # same role, same seed: identical world
    e1 = make_env(cfg, role="env")
    e2 = make_env(cfg, role="env")
    flat = np.zeros(2)
    ph = None
    from risvec.channel import PhaseConfig
    ph = PhaseConfig(np.zeros(2, np.int64), 2)
    o1 = e1.step(ph, flat, flat)
    o2 = e2.step(ph, flat, flat)
    assert np.array_equal(o1.arrivals_bits, o2.arrivals_bits)
    # eval role draws a different world
    e3 = make_env(cfg, role="eval")
    o3 = e3.step(ph, flat, flat)
    assert not (np.array_equal(o1.arrivals_bits, o3.arrivals_bits)
                and np.array_equal(o1.h_kb, o3.h_kb))


# command line -------------------------------------------------------------


def test_cli_train_phase_outputs(micro_config, tmp_path, capsys):
    out = tmp_path / "phase_run"
    rc = main(["train-phase", "--config", micro_config, "--out", str(out),
               "--episodes", "1"])
    assert rc == 0
    assert (out / "phase.ckpt").exists()
    header, rows = read_csv(out / "phase_episodes.csv")
    assert header == ["episode", "mean_ris_reward", "mean_rate_bps",
                      "noise_std"]
    assert len(rows) == 1
    assert rows[0][0] == "1"
    # the stored config reflects the episode override
    stored = yaml.safe_load((out / "config.yaml").read_text())
    assert stored["phase_training"]["episodes"] == 1
    assert stored["run"]["seed"] == 11


def test_cli_same_seed_is_byte_identical(micro_config, tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["train-phase", "--config", micro_config,
                 "--out", str(out_a)]) == 0
    assert main(["train-phase", "--config", micro_config,
                 "--out", str(out_b)]) == 0
    csv_a = (out_a / "phase_episodes.csv").read_bytes()
    csv_b = (out_b / "phase_episodes.csv").read_bytes()
    assert csv_a == csv_b
    assert (out_a / "phase.ckpt").read_bytes() \
        == (out_b / "phase.ckpt").read_bytes()


def test_cli_full_pipeline(micro_config, tmp_path):
    out = tmp_path / "run"
    assert main(["train-phase", "--config", micro_config,
                 "--out", str(out)]) == 0
    assert main(["train-power", "--config", micro_config, "--out", str(out),
                 "--phase-ckpt", str(out / "phase.ckpt")]) == 0
    for k in range(2):
        assert (out / f"power_agent_{k}.ckpt").exists()
    assert (out / "power_global_critics.ckpt").exists()
    header, rows = read_csv(out / "power_episodes.csv")
    assert len(rows) == 4
    assert header[0] == "episode" and header[1] == "r_global_mean"
    assert len(header) == 2 + 3 * 2 + 1

    assert main(["test", "--config", micro_config, "--out", str(out),
                 "--phase-ckpt", str(out / "phase.ckpt"),
                 "--power-dir", str(out)]) == 0
    theader, trows = read_csv(out / "test_steps.csv")
    assert len(trows) == 2 * 5          # test_episodes x steps_per_episode
    assert len(theader) == 3 + 5 * 2 + 1
    assert all(r[2] == "proposed" for r in trows)


def test_cli_missing_phase_checkpoint_exits_2(micro_config, tmp_path, capsys):
    ghost = tmp_path / "nope.ckpt"
    with pytest.raises(SystemExit) as exc:
        main(["train-power", "--config", micro_config,
              "--out", str(tmp_path / "o"), "--phase-ckpt", str(ghost)])
    assert exc.value.code == 2
    assert str(ghost) in capsys.readouterr().err


def test_cli_missing_power_dir_exits_2(micro_config, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["train-phase", "--config", micro_config,
                 "--out", str(out)]) == 0
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(SystemExit) as exc:
        main(["test", "--config", micro_config, "--out", str(out),
              "--phase-ckpt", str(out / "phase.ckpt"),
              "--power-dir", str(empty)])
    assert exc.value.code == 2
    assert "missing power checkpoint" in capsys.readouterr().err


def test_cli_unknown_baseline_kind(micro_config, tmp_path, capsys):
    rc = main(["baseline", "--config", micro_config,
               "--out", str(tmp_path / "o"), "--baseline", "psycho"])
    assert rc == 1
    assert "unknown baseline" in capsys.readouterr().err


def test_cli_baseline_needs_phases_when_it_keeps_them(micro_config, tmp_path,
                                                      capsys):
    with pytest.raises(SystemExit) as exc:
        main(["baseline", "--config", micro_config,
              "--out", str(tmp_path / "o"), "--baseline", "max-power"])
    assert exc.value.code == 2
    assert "--phase-ckpt" in capsys.readouterr().err


def test_cli_baseline_runs(micro_config, tmp_path):
    out = tmp_path / "run"
    assert main(["train-phase", "--config", micro_config,
                 "--out", str(out)]) == 0
    assert main(["baseline", "--config", micro_config, "--out", str(out),
                 "--baseline", "max-power",
                 "--phase-ckpt", str(out / "phase.ckpt")]) == 0
    _, rows = read_csv(out / "baseline_max-power_episodes.csv")
    assert len(rows) == 4               # power_training episodes
    assert main(["baseline", "--config", micro_config, "--out", str(out),
                 "--baseline", "no-ris"]) == 0
    _, rows = read_csv(out / "baseline_no-ris_episodes.csv")
    assert len(rows) == 4
    assert main(["baseline", "--config", micro_config, "--out", str(out),
                 "--baseline", "random-phase"]) == 0
    assert (out / "baseline_random-phase_episodes.csv").exists()


def test_cli_sweep_sorted_points(micro_config, tmp_path):
    out = tmp_path / "sweep"
    rc = main(["sweep", "--config", micro_config, "--out", str(out),
               "--variable", "eta", "--values", "3e6", "1e6", "2e6"])
    assert rc == 0
    header, rows = read_csv(out / "sweep.csv")
    assert header[:2] == ["variable", "value"]
    assert len(header) == 8
    assert [r[0] for r in rows] == ["eta", "eta", "eta"]
    values = [float(r[1]) for r in rows]
    assert values == [1e6, 2e6, 3e6]
    for row in rows:
        assert np.isfinite(float(row[2]))


def test_cli_sweep_unknown_variable(micro_config, tmp_path, capsys):
    rc = main(["sweep", "--config", micro_config,
               "--out", str(tmp_path / "s"), "--variable", "bandwidth",
               "--values", "1", "2"])
    assert rc == 1
    assert "unknown sweep variable" in capsys.readouterr().err


def test_cli_reports_configuration_errors(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("env:\n  k_vehicles: 0\n", encoding="utf-8")
    rc = main(["train-phase", "--config", str(bad),
               "--out", str(tmp_path / "o")])
    assert rc == 1
    assert "configuration error" in capsys.readouterr().err