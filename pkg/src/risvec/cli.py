"""Command-line entry points for training, evaluation, and sweeps.

Subcommands:
  train-phase   stage-one surface control training
  train-power   stage-two power allocation under a frozen phase checkpoint
  test          noise-free greedy rollout of trained checkpoints
  baseline      one comparison scheme, same metrics schema
  sweep         repeat the full pipeline over one swept variable

Every run is reproducible: outputs depend only on (config, seed). Config
files are YAML overlays on the built-in full-scale defaults; a desk-scale
profile ships with the package (see configs/desk.yaml).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import baselines as bl
from . import metrics
from .config import (ExperimentConfig, dump_config, load_config, make_env,
                     named_rng, with_overrides)
from .ddpg import load_phase_actor, save_phase_checkpoint, train_phase
from .maddpg import (actor_power_fn, frozen_phase_fn, load_power_actors,
                     rollout_power, save_power_checkpoints, train_power)


def _progress(label):
    def cb(ep, total):
        if ep % 50 == 0 or ep == total:
            print("%s: episode %d/%d" % (label, ep, total), file=sys.stderr)
    return cb


def _load_experiment(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return with_overrides(cfg, seed=args.seed, episodes=args.episodes)


def _require_file(path: str, what: str) -> None:
    if not os.path.exists(path):
        print("missing %s: %s" % (what, path), file=sys.stderr)
        raise SystemExit(2)


def cmd_train_phase(args) -> int:
    cfg = _load_experiment(args)
    os.makedirs(args.out, exist_ok=True)
    env = make_env(cfg, role="env")
    result = train_phase(env, cfg.phase,
                         rng_init=named_rng(cfg.seed, "phase.init"),
                         rng_explore=named_rng(cfg.seed, "phase.explore"),
                         rng_sample=named_rng(cfg.seed, "phase.sample"),
                         progress=_progress("train-phase"))
    ckpt = os.path.join(args.out, "phase.ckpt")
    save_phase_checkpoint(ckpt, result.nets)
    csv_path = os.path.join(args.out, "phase_episodes.csv")
    metrics.write_csv(csv_path, metrics.phase_episode_header(),
                      result.episode_rows)
    with open(os.path.join(args.out, "config.yaml"), "w",
              encoding="utf-8") as f:
        f.write(dump_config(cfg))
    last = result.episode_rows[-1]
    print("trained phase controller: %d episodes, final mean reward %.4f"
          % (len(result.episode_rows), last[1]))
    print("checkpoint: %s" % ckpt)
    print("episodes csv: %s" % csv_path)
    return 0


def cmd_train_power(args) -> int:
    cfg = _load_experiment(args)
    _require_file(args.phase_ckpt, "phase checkpoint")
    actor_params, actor_spec = load_phase_actor(args.phase_ckpt)
    os.makedirs(args.out, exist_ok=True)
    env = make_env(cfg, role="env")
    phase_fn = frozen_phase_fn(actor_params, actor_spec, cfg.env.phase_bits)
    result = train_power(env, phase_fn, cfg.power,
                         rng_init=named_rng(cfg.seed, "power.init"),
                         rng_explore=named_rng(cfg.seed, "power.explore"),
                         rng_sample=named_rng(cfg.seed, "power.sample"),
                         progress=_progress("train-power"))
    paths = save_power_checkpoints(args.out, result.agents,
                                   result.global_critics)
    csv_path = os.path.join(args.out, "power_episodes.csv")
    metrics.write_csv(csv_path,
                      metrics.power_episode_header(cfg.env.k_vehicles),
                      result.episode_rows)
    with open(os.path.join(args.out, "config.yaml"), "w",
              encoding="utf-8") as f:
        f.write(dump_config(cfg))
    print("trained power agents: %d episodes, final global reward %.4f"
          % (len(result.episode_rows), result.episode_rows[-1][1]))
    print("checkpoints: %s" % ", ".join(paths))
    print("episodes csv: %s" % csv_path)
    return 0


def cmd_test(args) -> int:
    cfg = _load_experiment(args)
    _require_file(args.phase_ckpt, "phase checkpoint")
    actor_params, actor_spec = load_phase_actor(args.phase_ckpt)
    try:
        power_actors = load_power_actors(args.power_dir, cfg.env.k_vehicles)
    except FileNotFoundError as exc:
        print("missing power checkpoint: %s" % exc.args[0], file=sys.stderr)
        raise SystemExit(2) from None
    os.makedirs(args.out, exist_ok=True)
    env = make_env(cfg, role="eval")
    phase_fn = frozen_phase_fn(actor_params, actor_spec, cfg.env.phase_bits)
    power_fn = actor_power_fn(power_actors, cfg.env.p_max_offload,
                              cfg.env.p_max_local)
    rollout = rollout_power(env, phase_fn, power_fn, cfg.test_episodes,
                            cfg.power.steps_per_episode, scheme="proposed")
    csv_path = os.path.join(args.out, "test_steps.csv")
    metrics.write_csv(csv_path,
                      metrics.test_step_header(cfg.env.k_vehicles),
                      rollout.rows)
    print("test rollout: %d episodes, mean global reward %.4f, "
          "mean per-VU power %.4f W, mean queue %.1f bits"
          % (cfg.test_episodes, float(rollout.r_global.mean()),
             rollout.mean_power_per_vu, rollout.mean_queue_bits))
    print("steps csv: %s" % csv_path)
    return 0


def _baseline_phase_fn(args, cfg: ExperimentConfig, kind: str):
    if kind in ("centralized-ddpg", "centralized-td3", "max-power",
                "random-power"):
        if not args.phase_ckpt:
            print("baseline %r keeps trained phases; pass --phase-ckpt"
                  % kind, file=sys.stderr)
            raise SystemExit(2)
        _require_file(args.phase_ckpt, "phase checkpoint")
        params, spec = load_phase_actor(args.phase_ckpt)
        return frozen_phase_fn(params, spec, cfg.env.phase_bits)
    if kind == "random-phase":
        return bl.random_phase_fn(cfg.env.n_elements, cfg.env.phase_bits,
                                  named_rng(cfg.seed, "baseline.phases"))
    return bl.none_phase_fn


def cmd_baseline(args) -> int:
    cfg = _load_experiment(args)
    kind = args.baseline
    if kind not in bl.BASELINE_KINDS:
        print("unknown baseline %r (choose from %s)"
              % (kind, ", ".join(bl.BASELINE_KINDS)), file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    phase_fn = _baseline_phase_fn(args, cfg, kind)
    env = make_env(cfg, role="env",
                   **({"ris_enabled": False} if kind == "no-ris" else {}))

    if kind in ("centralized-ddpg", "centralized-td3"):
        result = bl.train_centralized(
            env, phase_fn, cfg.power, twin=kind.endswith("td3"),
            rng_init=named_rng(cfg.seed, "baseline.init"),
            rng_explore=named_rng(cfg.seed, "baseline.explore"),
            rng_sample=named_rng(cfg.seed, "baseline.sample"),
            progress=_progress(kind))
        rows = result.episode_rows
    elif kind in ("random-phase", "no-ris"):
        result = train_power(
            env, phase_fn, cfg.power,
            rng_init=named_rng(cfg.seed, "baseline.init"),
            rng_explore=named_rng(cfg.seed, "baseline.explore"),
            rng_sample=named_rng(cfg.seed, "baseline.sample"),
            progress=_progress(kind))
        rows = result.episode_rows
    else:
        if kind == "max-power":
            power_fn = bl.max_power_fn(cfg.env.p_max_offload,
                                       cfg.env.p_max_local)
        else:
            power_fn = bl.random_power_fn(cfg.env.p_max_offload,
                                          cfg.env.p_max_local,
                                          named_rng(cfg.seed,
                                                    "baseline.powers"))
        rows = bl.run_fixed_policy_episodes(env, phase_fn, power_fn,
                                            cfg.power.episodes,
                                            cfg.power.steps_per_episode)
    csv_path = os.path.join(args.out,
                            "baseline_%s_episodes.csv" % kind)
    metrics.write_csv(csv_path,
                      metrics.power_episode_header(cfg.env.k_vehicles), rows)
    print("baseline %s: %d episodes, final global reward %.4f"
          % (kind, len(rows), rows[-1][1]))
    print("episodes csv: %s" % csv_path)
    return 0


SWEEP_VARIABLES = ("eta", "N", "K", "seed")


def _sweep_point_config(cfg: ExperimentConfig, variable: str,
                        value: float) -> ExperimentConfig:
    if variable == "eta":
        return replace(cfg, env=replace(cfg.env, eta_bps=float(value)))
    if variable == "N":
        return replace(cfg, env=replace(cfg.env, n_elements=int(value)))
    if variable == "K":
        return replace(cfg, env=replace(cfg.env, k_vehicles=int(value)))
    return replace(cfg, seed=int(value))


def cmd_sweep(args) -> int:
    cfg = _load_experiment(args)
    if args.variable not in SWEEP_VARIABLES:
        print("unknown sweep variable %r (choose from %s)"
              % (args.variable, ", ".join(SWEEP_VARIABLES)), file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    summary = []
    for value in sorted(args.values):
        point = _sweep_point_config(cfg, args.variable, value)
        tag = ("%g" % value).replace(".", "p")
        point_dir = os.path.join(args.out, "point_%s" % tag)
        os.makedirs(point_dir, exist_ok=True)
        print("sweep %s=%g" % (args.variable, value), file=sys.stderr)

        env = make_env(point, role="env")
        phase_res = train_phase(
            env, point.phase,
            rng_init=named_rng(point.seed, "phase.init"),
            rng_explore=named_rng(point.seed, "phase.explore"),
            rng_sample=named_rng(point.seed, "phase.sample"))
        save_phase_checkpoint(os.path.join(point_dir, "phase.ckpt"),
                              phase_res.nets)
        metrics.write_csv(os.path.join(point_dir, "phase_episodes.csv"),
                          metrics.phase_episode_header(),
                          phase_res.episode_rows)

        env = make_env(point, role="env")
        phase_fn = frozen_phase_fn(phase_res.nets.actor,
                                   phase_res.nets.actor_spec,
                                   point.env.phase_bits)
        power_res = train_power(
            env, phase_fn, point.power,
            rng_init=named_rng(point.seed, "power.init"),
            rng_explore=named_rng(point.seed, "power.explore"),
            rng_sample=named_rng(point.seed, "power.sample"))
        save_power_checkpoints(point_dir, power_res.agents,
                               power_res.global_critics)
        metrics.write_csv(os.path.join(point_dir, "power_episodes.csv"),
                          metrics.power_episode_header(point.env.k_vehicles),
                          power_res.episode_rows)

        eval_env = make_env(point, role="eval")
        power_fn = actor_power_fn(
            [(a.actor, a.actor_spec) for a in power_res.agents],
            point.env.p_max_offload, point.env.p_max_local)
        rollout = rollout_power(eval_env, phase_fn, power_fn,
                                point.test_episodes,
                                point.power.steps_per_episode,
                                scheme="proposed")
        metrics.write_csv(os.path.join(point_dir, "test_steps.csv"),
                          metrics.test_step_header(point.env.k_vehicles),
                          rollout.rows)
        summary.append([
            args.variable, value,
            float(rollout.r_global.mean()),
            rollout.mean_power_per_vu,
            float(np.mean(rollout.p_offload)),
            float(np.mean(rollout.p_local)),
            rollout.mean_queue_bits,
            float(np.mean(np.log2(1.0 + rollout.snr))),
        ])
    header = ["variable", "value", "r_global_mean", "power_per_vu_mean_w",
              "p_offload_mean_w", "p_local_mean_w", "queue_mean_bits",
              "spectral_efficiency_mean"]
    csv_path = os.path.join(args.out, "sweep.csv")
    metrics.write_csv(csv_path, header, summary)
    print("sweep complete: %d points" % len(summary))
    print("summary csv: %s" % csv_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risvec",
        description="Surface-assisted vehicular edge computing: two-stage "
                    "learned control and baselines")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="YAML config overlay")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", required=out_required,
                       help="output directory")
        p.add_argument("--episodes", type=int,
                       help="override training episode count")

    p = sub.add_parser("train-phase", help="train the surface controller")
    common(p)
    p.set_defaults(fn=cmd_train_phase)

    p = sub.add_parser("train-power", help="train power allocation")
    common(p)
    p.add_argument("--phase-ckpt", required=True,
                   help="trained phase checkpoint")
    p.set_defaults(fn=cmd_train_power)

    p = sub.add_parser("test", help="noise-free rollout of trained models")
    common(p)
    p.add_argument("--phase-ckpt", required=True)
    p.add_argument("--power-dir", required=True,
                   help="directory with power_agent_<k>.ckpt files")
    p.set_defaults(fn=cmd_test)

    p = sub.add_parser("baseline", help="run a comparison scheme")
    common(p)
    p.add_argument("--baseline", required=True,
                   help="one of: %s" % ", ".join(bl.BASELINE_KINDS))
    p.add_argument("--phase-ckpt",
                   help="phase checkpoint for schemes that keep trained "
                        "phases")
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("sweep", help="sweep one variable over the pipeline")
    common(p)
    p.add_argument("--variable", required=True,
                   help="one of: %s" % ", ".join(SWEEP_VARIABLES))
    p.add_argument("--values", required=True, nargs="+", type=float)
    p.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValueError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
