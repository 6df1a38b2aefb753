"""Deterministic policy-gradient training of the surface phase shifts.

Stage one of the two-stage controller. A single agent observes the surface
configuration, vehicle positions and last-slot link qualities, and emits one
raw value per element in [-1, 1]; the value is snapped to the b-bit phase
alphabet before it touches the channel. During this stage every vehicle
transmits at full offload power and spends nothing locally, so the reward
isolates the link quality: w times the mean spectral efficiency.

Updates are the classic actor-critic pair with target networks: the critic
regresses onto the one-step bootstrapped return, the actor follows the
critic's action gradient, and both targets track slowly via soft updates.
One learning step runs per environment step once the buffer holds more than
one batch of transitions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .channel import PhaseConfig
from .env import VecEnv, ris_reward
from .replay import ReplayBuffer, Transition

GRAD_CLIP = 1.0


@dataclass(frozen=True)
class DdpgConfig:
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    gamma: float = 0.99
    tau: float = 0.005
    batch_size: int = 64
    episodes: int = 1000
    steps_per_episode: int = 100
    noise_std_initial: float = 0.3
    noise_decay: float = 0.999
    noise_floor: float = 0.01
    actor_hidden: tuple[int, ...] = (512, 256)
    critic_hidden: tuple[int, ...] = (1024, 512, 256)
    replay_capacity: int = 1_000_000

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.batch_size < 1 or self.episodes < 1 \
                or self.steps_per_episode < 1:
            raise ValueError("batch_size, episodes, steps must be >= 1")
        if self.noise_std_initial < 0.0 or self.noise_floor < 0.0 \
                or not 0.0 < self.noise_decay <= 1.0:
            raise ValueError("bad exploration noise schedule")


@dataclass
class ActorCritic:
    """Online and target networks plus their optimizers."""

    actor_spec: nn.MlpSpec
    critic_spec: nn.MlpSpec
    actor: dict
    critic: dict
    actor_target: dict
    critic_target: dict
    opt_actor: nn.AdamState
    opt_critic: nn.AdamState


def build_actor_critic(state_dim: int, action_dim: int, cfg: DdpgConfig,
                       rng: np.random.Generator,
                       actor_output: str = "tanh") -> ActorCritic:
    actor_spec = nn.MlpSpec((state_dim, *cfg.actor_hidden, action_dim),
                            output_activation=actor_output)
    critic_spec = nn.MlpSpec((state_dim + action_dim, *cfg.critic_hidden, 1),
                             output_activation="identity")
    actor = nn.init_params(actor_spec, rng)
    critic = nn.init_params(critic_spec, rng)
    return ActorCritic(actor_spec=actor_spec, critic_spec=critic_spec,
                       actor=actor, critic=critic,
                       actor_target=nn.copy_params(actor),
                       critic_target=nn.copy_params(critic),
                       opt_actor=nn.AdamState(lr=cfg.lr_actor),
                       opt_critic=nn.AdamState(lr=cfg.lr_critic))


def select_action(nets: ActorCritic, state: np.ndarray, noise_std: float,
                  rng: np.random.Generator | None) -> np.ndarray:
    """Actor output plus exploration noise, clipped back into [-1, 1]."""
    a = nn.forward(nets.actor, nets.actor_spec, state)
    if noise_std > 0.0:
        if rng is None:
            raise ValueError("exploration noise needs a generator")
        a = a + rng.normal(0.0, noise_std, size=a.shape)
    return np.clip(a, -1.0, 1.0)


def quantize_phases(raw: np.ndarray, b: int) -> PhaseConfig:
    """Snap raw [-1, 1] outputs to the b-bit alphabet.

    The map is affine to [0, 2^b - 1] then rounded half away from zero, so
    level boundaries fall midway and the endpoints map to the first and last
    level exactly.
    """
    raw = np.asarray(raw, dtype=float)
    if np.any(raw < -1.0 - 1e-9) or np.any(raw > 1.0 + 1e-9):
        raise ValueError("raw actions must lie in [-1, 1]")
    levels = (1 << b) - 1
    x = (np.clip(raw, -1.0, 1.0) + 1.0) / 2.0 * levels
    idx = np.floor(x + 0.5).astype(np.int64)   # x >= 0: floor(x+1/2) rounds
    idx = np.clip(idx, 0, levels)              #   half away from zero
    return PhaseConfig(indices=idx, b=b)


def critic_update(nets: ActorCritic, batch, gamma: float) -> float:
    """One regression step onto the bootstrapped target. Returns the loss."""
    states, actions, _r_loc, rewards, next_states = batch
    bsz = states.shape[0]
    next_a = nn.forward(nets.actor_target, nets.actor_spec, next_states)
    q_next = nn.forward(nets.critic_target, nets.critic_spec,
                        np.concatenate([next_states, next_a], axis=1))[:, 0]
    y = rewards + gamma * q_next

    x = np.concatenate([states, actions], axis=1)
    q = nn.forward(nets.critic, nets.critic_spec, x)[:, 0]
    loss = float(np.mean((y - q) ** 2))
    upstream = (2.0 / bsz) * (q - y)[:, None]
    grads, _ = nn.backward(nets.critic, nets.critic_spec, x, upstream)
    nn.clip_global_norm(grads, GRAD_CLIP)
    nn.adam_step(nets.critic, grads, nets.opt_critic)
    return loss


def actor_objective_gradient(nets: ActorCritic, states: np.ndarray):
    """Gradient of mean_s Q(s, mu(s)) with respect to the actor parameters."""
    bsz = states.shape[0]
    a = nn.forward(nets.actor, nets.actor_spec, states)
    x = np.concatenate([states, a], axis=1)
    ones = np.full((bsz, 1), 1.0 / bsz)
    _, input_grad = nn.backward(nets.critic, nets.critic_spec, x, ones)
    dq_da = input_grad[:, states.shape[1]:]
    grads, _ = nn.backward(nets.actor, nets.actor_spec, states, dq_da)
    return grads


def actor_update(nets: ActorCritic, states: np.ndarray) -> None:
    """Ascend the critic's valuation of the actor's own actions."""
    grads = actor_objective_gradient(nets, states)
    for g in grads.values():
        np.negative(g, out=g)
    nn.clip_global_norm(grads, GRAD_CLIP)
    nn.adam_step(nets.actor, grads, nets.opt_actor)


@dataclass
class PhaseTrainResult:
    nets: ActorCritic
    episode_rows: list            # per-episode CSV rows
    step_rewards: list = field(default_factory=list)
    step_rates_bps: list = field(default_factory=list)


def train_phase(env: VecEnv, cfg: DdpgConfig, rng_init: np.random.Generator,
                rng_explore: np.random.Generator,
                rng_sample: np.random.Generator,
                progress=None) -> PhaseTrainResult:
    ecfg = env.cfg
    state_dim = ecfg.ris_state_dim
    nets = build_actor_critic(state_dim, ecfg.n_elements, cfg, rng_init)
    buffer = ReplayBuffer(cfg.replay_capacity, rng_sample)

    p_o = np.full(ecfg.k_vehicles, ecfg.p_max_offload)
    p_l = np.zeros(ecfg.k_vehicles)

    result = PhaseTrainResult(nets=nets, episode_rows=[])
    noise_std = cfg.noise_std_initial
    for episode in range(1, cfg.episodes + 1):
        env.reset()
        ep_rewards = np.empty(cfg.steps_per_episode)
        ep_rates = np.empty(cfg.steps_per_episode)
        state = env.ris_state()
        for t in range(cfg.steps_per_episode):
            action = select_action(nets, state, noise_std, rng_explore)
            phases = quantize_phases(action, ecfg.phase_bits)
            outcome = env.step(phases, p_o, p_l)
            reward = ris_reward(outcome.snr, ecfg.w_rate)
            next_state = env.ris_state()
            buffer.push(Transition(state, action,
                                   np.array([reward]), reward, next_state))
            state = next_state
            ep_rewards[t] = reward
            ep_rates[t] = float(np.mean(outcome.served_offload_bits)) / ecfg.dt

            if len(buffer) > cfg.batch_size:
                batch = buffer.sample(cfg.batch_size)
                critic_update(nets, batch, cfg.gamma)
                actor_update(nets, batch[0])
                nn.soft_update(nets.critic_target, nets.critic, cfg.tau)
                nn.soft_update(nets.actor_target, nets.actor, cfg.tau)

        result.step_rewards.extend(ep_rewards.tolist())
        result.step_rates_bps.extend(ep_rates.tolist())
        result.episode_rows.append([episode, float(ep_rewards.mean()),
                                    float(ep_rates.mean()), noise_std])
        if progress is not None:
            progress(episode, cfg.episodes)
        noise_std = max(cfg.noise_floor, noise_std * cfg.noise_decay)
    return result


def greedy_phases(nets_or_params, actor_spec: nn.MlpSpec | None,
                  state: np.ndarray, b: int) -> PhaseConfig:
    """Noise-free phase selection from a trained actor."""
    if isinstance(nets_or_params, ActorCritic):
        params, spec = nets_or_params.actor, nets_or_params.actor_spec
    else:
        params, spec = nets_or_params, actor_spec
    raw = nn.forward(params, spec, state)
    return quantize_phases(raw, b)


# -- checkpoint description plumbing ---------------------------------------

def actor_checkpoint_tensors(params: dict, prefix: str) -> dict:
    return {prefix + "/" + k: v for k, v in params.items()}


def save_phase_checkpoint(path, nets: ActorCritic) -> None:
    import json
    desc = json.dumps({
        "kind": "phase-shift-controller",
        "actor": {"layer_sizes": list(nets.actor_spec.layer_sizes),
                  "output_activation": nets.actor_spec.output_activation},
        "critic": {"layer_sizes": list(nets.critic_spec.layer_sizes),
                   "output_activation": nets.critic_spec.output_activation},
    }, sort_keys=True)
    tensors = {}
    tensors.update(actor_checkpoint_tensors(nets.actor, "actor"))
    tensors.update(actor_checkpoint_tensors(nets.critic, "critic"))
    nn.save_checkpoint(path, desc, tensors)


def load_phase_actor(path) -> tuple[dict, nn.MlpSpec]:
    import json
    desc, tensors = nn.load_checkpoint(path)
    meta = json.loads(desc)
    spec = nn.MlpSpec(tuple(meta["actor"]["layer_sizes"]),
                      output_activation=meta["actor"]["output_activation"])
    params = {k.split("/", 1)[1]: v for k, v in tensors.items()
              if k.startswith("actor/")}
    return params, spec
