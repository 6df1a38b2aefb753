"""Learned control for surface-assisted vehicular edge computing.

Two-stage pipeline: a single agent shapes the reflecting surface to maximise
uplink quality, then one agent per vehicle splits transmit/compute power to
balance energy against queue backlog. Baselines, an exhaustive phase-search
reference, and a CLI round out the package.
"""

from .channel import (ChannelSet, FadingParams, PhaseConfig, direct_gain,
                      los_steering, phase_matrix_apply, rate_bits,
                      rician_los_gain, snr)
from .config import (ExperimentConfig, config_from_dict, config_to_dict,
                     dump_config, load_config, make_env, named_rng)
from .ddpg import DdpgConfig, quantize_phases, train_phase
from .env import EnvConfig, StepOutcome, VecEnv
from .geometry import Position3D, ScenarioLayout, VehicleState, distance
from .maddpg import MaddpgConfig, rollout_power, train_power
from .oracle import exhaustive_best_mean_rate
from .replay import ReplayBuffer, Transition

__version__ = "0.1.0"

__all__ = [
    "ChannelSet", "FadingParams", "PhaseConfig", "direct_gain",
    "los_steering", "phase_matrix_apply", "rate_bits", "rician_los_gain",
    "snr", "ExperimentConfig", "config_from_dict", "config_to_dict",
    "dump_config", "load_config", "make_env", "named_rng", "DdpgConfig",
    "quantize_phases", "train_phase", "EnvConfig", "StepOutcome", "VecEnv",
    "Position3D", "ScenarioLayout", "VehicleState", "distance",
    "MaddpgConfig", "rollout_power", "train_power",
    "exhaustive_best_mean_rate", "ReplayBuffer", "Transition",
    "__version__",
]
