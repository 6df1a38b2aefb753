"""Experiment configuration: defaults, YAML loading, and seed management.

A config file is YAML with nested sections (env / fading / layout /
phase_training / power_training / run). Every key is optional and overrides
the built-in default; unknown keys are rejected so typos fail loudly.

All randomness flows from one master seed through named substreams, carved
out with fixed counters so that adding a consumer never shifts another
stream. Environment streams (mobility / arrivals / fading) are shared by
name across control schemes, which is what makes same-seed runs of two
schemes see the same world.
"""

from __future__ import annotations

from dataclasses import MISSING, dataclass, field, fields, replace

import numpy as np
import yaml

from .channel import FadingParams
from .ddpg import DdpgConfig
from .env import EnvConfig
from .geometry import Position3D, ScenarioLayout
from .maddpg import MaddpgConfig

# counter-based substream registry; numbers are part of the on-disk contract
# (a seed reproduces a run only while these stay put)
STREAMS = {
    "env.mobility": 0,
    "env.arrivals": 1,
    "env.fading": 2,
    "eval.mobility": 3,
    "eval.arrivals": 4,
    "eval.fading": 5,
    "phase.init": 6,
    "phase.explore": 7,
    "phase.sample": 8,
    "power.init": 9,
    "power.explore": 10,
    "power.sample": 11,
    "baseline.init": 12,
    "baseline.explore": 13,
    "baseline.sample": 14,
    "baseline.phases": 15,
    "baseline.powers": 16,
}


def named_rng(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named substream of the master seed."""
    try:
        counter = STREAMS[name]
    except KeyError:
        raise KeyError("unknown random stream %r" % name) from None
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(counter,))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    phase: DdpgConfig = field(default_factory=DdpgConfig)
    power: MaddpgConfig = field(default_factory=MaddpgConfig)
    seed: int = 1
    test_episodes: int = 10

    def __post_init__(self):
        if self.test_episodes < 1:
            raise ValueError("test_episodes must be >= 1")


def _coerce(value, default, where, key):
    # yaml leaves "1.0e6" (unsigned exponent) as a string; repair numerics
    # here so typos fail with a config error instead of a raw TypeError.
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValueError("%s.%s must be true or false" % (where, key))
        return value
    if isinstance(default, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ValueError("%s.%s must be a number, got %r"
                             % (where, key, value)) from None
    if isinstance(default, int):
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ValueError("%s.%s must be an integer, got %r"
                             % (where, key, value)) from None
    return value


def _from_section(cls, section: dict, where: str, **fixed):
    allowed = {f.name: f for f in fields(cls) if f.name not in fixed}
    kwargs = {}
    for key, value in section.items():
        if key not in allowed:
            raise ValueError("unknown key %r in section %r" % (key, where))
        default = allowed[key].default
        if default is not MISSING:
            value = _coerce(value, default, where, key)
        kwargs[key] = value
    return cls(**fixed, **kwargs)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ValueError("config root must be a mapping")
    known = {"env", "fading", "layout", "phase_training", "power_training",
             "run"}
    for key in raw:
        if key not in known:
            raise ValueError("unknown section %r in config" % key)

    lay_raw = dict(raw.get("layout", {}))
    for pos_key in ("bs", "ris"):
        if pos_key in lay_raw:
            v = lay_raw[pos_key]
            if not (isinstance(v, (list, tuple)) and len(v) == 3):
                raise ValueError("layout.%s must be [x, y, z]" % pos_key)
            lay_raw[pos_key] = Position3D(*[float(c) for c in v])
    default_layout = ScenarioLayout(bs=Position3D(0.0, 0.0, 25.0),
                                    ris=Position3D(250.0, 220.0, 25.0))
    lay_raw.setdefault("bs", default_layout.bs)
    lay_raw.setdefault("ris", default_layout.ris)
    layout = _from_section(ScenarioLayout, lay_raw, "layout")

    fading = _from_section(FadingParams, dict(raw.get("fading", {})), "fading")

    env_raw = dict(raw.get("env", {}))
    env = _from_section(EnvConfig, env_raw, "env", fading=fading,
                        layout=layout)

    phase_raw = dict(raw.get("phase_training", {}))
    for key in ("actor_hidden", "critic_hidden"):
        if key in phase_raw:
            phase_raw[key] = tuple(int(x) for x in phase_raw[key])
    phase = _from_section(DdpgConfig, phase_raw, "phase_training")

    power_raw = dict(raw.get("power_training", {}))
    for key in ("actor_hidden", "critic_hidden"):
        if key in power_raw:
            power_raw[key] = tuple(int(x) for x in power_raw[key])
    power = _from_section(MaddpgConfig, power_raw, "power_training")

    run_raw = dict(raw.get("run", {}))
    for key in run_raw:
        if key not in ("seed", "test_episodes"):
            raise ValueError("unknown key %r in section 'run'" % key)
    return ExperimentConfig(env=env, phase=phase, power=power,
                            seed=int(run_raw.get("seed", 1)),
                            test_episodes=int(run_raw.get("test_episodes", 10)))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    env = cfg.env
    lay = env.layout
    fad = env.fading

    def plain(dc, skip=()):
        out = {}
        for f in fields(dc):
            if f.name in skip:
                continue
            out[f.name] = getattr(dc, f.name)
        return out

    lay_d = plain(lay, skip=("bs", "ris"))
    lay_d = {"bs": [lay.bs.x, lay.bs.y, lay.bs.z],
             "ris": [lay.ris.x, lay.ris.y, lay.ris.z], **lay_d}
    phase_d = plain(cfg.phase)
    phase_d["actor_hidden"] = list(cfg.phase.actor_hidden)
    phase_d["critic_hidden"] = list(cfg.phase.critic_hidden)
    power_d = plain(cfg.power)
    power_d["actor_hidden"] = list(cfg.power.actor_hidden)
    power_d["critic_hidden"] = list(cfg.power.critic_hidden)
    return {
        "env": plain(env, skip=("fading", "layout")),
        "fading": plain(fad),
        "layout": lay_d,
        "phase_training": phase_d,
        "power_training": power_d,
        "run": {"seed": cfg.seed, "test_episodes": cfg.test_episodes},
    }


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(f)
    if raw is None:
        raw = {}
    return config_from_dict(raw)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def with_overrides(cfg: ExperimentConfig, seed=None, episodes=None):
    """CLI-level overrides; episodes applies to both training stages."""
    out = cfg
    if seed is not None:
        out = replace(out, seed=int(seed))
    if episodes is not None:
        out = replace(out, phase=replace(out.phase, episodes=int(episodes)),
                      power=replace(out.power, episodes=int(episodes)))
    return out


def make_env(cfg: ExperimentConfig, role: str = "env", **env_changes) -> "VecEnv":
    """VecEnv wired to this config's named streams. role 'env' or 'eval'."""
    from .env import VecEnv
    if role not in ("env", "eval"):
        raise ValueError("role must be 'env' or 'eval'")
    env_cfg = replace(cfg.env, **env_changes) if env_changes else cfg.env
    return VecEnv(env_cfg,
                  rng_mobility=named_rng(cfg.seed, role + ".mobility"),
                  rng_arrivals=named_rng(cfg.seed, role + ".arrivals"),
                  rng_fading=named_rng(cfg.seed, role + ".fading"))
