"""Comparison schemes for the power-allocation stage.

Learned baselines:
  * centralized-ddpg: one agent sees the concatenated per-vehicle states and
    emits every power at once; classic single-critic training.
  * centralized-td3: the same agent trained with twin critics, target-policy
    smoothing, and delayed actor updates.

Scheme baselines (power policy retrained or fixed):
  * random-phase: surface set uniformly at random each slot, powers
    retrained with the full cooperative learner.
  * no-ris: surface absent (direct link only), powers retrained.
  * max-power: both powers pinned at their caps.
  * random-power: both powers uniform in (0, p_max] each slot.

Every scheme logs the same per-episode CSV schema as the proposed learner,
so result files are column-compatible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .channel import PhaseConfig
from .env import VecEnv
from .maddpg import (ACTOR_INIT_BIAS, GRAD_CLIP, POWER_FLOOR_W,
                     VU_ACTION_DIM, VU_STATE_DIM, MaddpgConfig,
                     PowerTrainResult, _sigmoid, agent_action_slice,
                     train_power)
from .replay import ReplayBuffer, Transition

BASELINE_KINDS = ("centralized-ddpg", "centralized-td3", "random-phase",
                  "no-ris", "max-power", "random-power")

# trainable single-agent baselines: twin-critic smoothing/delay constants
TD3_SMOOTH_STD = 0.2
TD3_SMOOTH_CLIP = 0.5
TD3_POLICY_DELAY = 2


def random_phase_fn(n_elements: int, b: int, rng: np.random.Generator):
    """Uniform draw over the whole configuration alphabet each slot."""
    levels = 1 << b

    def phase_fn(env: VecEnv) -> PhaseConfig:
        idx = rng.integers(0, levels, size=n_elements)
        return PhaseConfig(indices=idx, b=b)
    return phase_fn


def none_phase_fn(env: VecEnv):
    return None


def max_power_fn(p_max_offload: float, p_max_local: float):
    def power_fn(states: np.ndarray):
        k = states.shape[0]
        return (np.full(k, p_max_offload), np.full(k, p_max_local))
    return power_fn


def random_power_fn(p_max_offload: float, p_max_local: float,
                    rng: np.random.Generator):
    # 1 - U[0,1) keeps the draw in (0, p_max]
    def power_fn(states: np.ndarray):
        k = states.shape[0]
        p_o = p_max_offload * (1.0 - rng.random(k))
        p_l = p_max_local * (1.0 - rng.random(k))
        return p_o, p_l
    return power_fn


@dataclass
class CentralizedAgent:
    actor_spec: nn.MlpSpec
    critic_spec: nn.MlpSpec
    actor: dict
    actor_target: dict
    critics: list                 # one (ddpg) or two (td3) parameter dicts
    critic_targets: list
    opt_actor: nn.AdamState
    opt_critics: list


def build_centralized(k_vehicles: int, cfg: MaddpgConfig, twin: bool,
                      rng: np.random.Generator) -> CentralizedAgent:
    state_dim = k_vehicles * VU_STATE_DIM
    action_dim = k_vehicles * VU_ACTION_DIM
    actor_spec = nn.MlpSpec((state_dim, *cfg.actor_hidden, action_dim),
                            output_activation="sigmoid")
    critic_spec = nn.MlpSpec((state_dim + action_dim, *cfg.critic_hidden, 1),
                             output_activation="identity")
    actor = nn.init_params(actor_spec, rng)
    # same start-at-high-power init as the per-vehicle agents
    actor["b%d" % (actor_spec.n_layers - 1)] += ACTOR_INIT_BIAS
    n_critics = 2 if twin else 1
    critics = [nn.init_params(critic_spec, rng) for _ in range(n_critics)]
    return CentralizedAgent(
        actor_spec=actor_spec, critic_spec=critic_spec, actor=actor,
        actor_target=nn.copy_params(actor), critics=critics,
        critic_targets=[nn.copy_params(c) for c in critics],
        opt_actor=nn.AdamState(lr=cfg.lr_actor),
        opt_critics=[nn.AdamState(lr=cfg.lr_critic) for _ in range(n_critics)])


def _centralized_target(agent: CentralizedAgent, r_glob, next_states, gamma,
                        twin: bool, rng_smooth):
    z = nn.forward(agent.actor_target, agent.actor_spec, next_states)
    if twin:
        eps = np.clip(rng_smooth.normal(0.0, TD3_SMOOTH_STD, size=z.shape),
                      -TD3_SMOOTH_CLIP, TD3_SMOOTH_CLIP)
        z = np.clip(z + eps, 0.0, 1.0)
    xin = np.concatenate([next_states, z], axis=1)
    qs = [nn.forward(t, agent.critic_spec, xin)[:, 0]
          for t in agent.critic_targets]
    q_next = np.minimum(qs[0], qs[1]) if twin else qs[0]
    return r_glob + gamma * q_next


def _centralized_actor_step(agent: CentralizedAgent, states) -> None:
    bsz = states.shape[0]
    a = nn.forward(agent.actor, agent.actor_spec, states)
    x = np.concatenate([states, a], axis=1)
    ones = np.full((bsz, 1), 1.0 / bsz)
    _, ig = nn.backward(agent.critics[0], agent.critic_spec, x, ones)
    dq_da = ig[:, states.shape[1]:]
    grads, _ = nn.backward(agent.actor, agent.actor_spec, states, dq_da)
    for g in grads.values():
        np.negative(g, out=g)
    nn.clip_global_norm(grads, GRAD_CLIP)
    nn.adam_step(agent.actor, grads, agent.opt_actor)


@dataclass
class CentralizedResult:
    agent: CentralizedAgent
    episode_rows: list
    step_r_global: list = field(default_factory=list)


def train_centralized(env: VecEnv, phase_fn, cfg: MaddpgConfig, twin: bool,
                      rng_init: np.random.Generator,
                      rng_explore: np.random.Generator,
                      rng_sample: np.random.Generator,
                      progress=None) -> CentralizedResult:
    """Single-agent training over the joint state/action.

    Update cadence mirrors the per-vehicle trainer so the comparison is
    budget-fair: critics learn every episode, the actor only on delayed
    episodes.
    """
    ecfg = env.cfg
    k_vehicles = ecfg.k_vehicles
    agent = build_centralized(k_vehicles, cfg, twin, rng_init)
    buffer = ReplayBuffer(cfg.replay_capacity, rng_sample)
    result = CentralizedResult(agent=agent, episode_rows=[])
    noise_std = cfg.noise_std_initial
    updates = 0
    for episode in range(1, cfg.episodes + 1):
        env.reset()
        states = env.vu_states()
        s_cols = cfg.steps_per_episode
        ep_r_glob = np.empty(s_cols)
        ep_r_loc = np.empty((s_cols, k_vehicles))
        ep_p_o = np.empty((s_cols, k_vehicles))
        ep_p_l = np.empty((s_cols, k_vehicles))
        ep_queue = np.empty((s_cols, k_vehicles))
        for t in range(s_cols):
            phases = phase_fn(env)
            flat = states.reshape(-1)
            z = nn.output_preactivation(agent.actor, agent.actor_spec, flat)
            z = z + rng_explore.normal(0.0, noise_std, size=z.shape) \
                if noise_std > 0.0 else z
            fracs = _sigmoid(z)
            p_o = np.clip(fracs[0::2] * ecfg.p_max_offload, POWER_FLOOR_W,
                          ecfg.p_max_offload)
            p_l = np.clip(fracs[1::2] * ecfg.p_max_local, POWER_FLOOR_W,
                          ecfg.p_max_local)
            outcome = env.step(phases, p_o, p_l)
            next_states = env.vu_states()
            buffer.push(Transition(flat, fracs, outcome.r_local,
                                   outcome.r_global, next_states.reshape(-1)))
            states = next_states
            ep_r_glob[t] = outcome.r_global
            ep_r_loc[t] = outcome.r_local
            ep_p_o[t] = p_o
            ep_p_l[t] = p_l
            ep_queue[t] = outcome.queue_bits

        learn = len(buffer) > cfg.batch_size
        delayed = learn and episode % cfg.actor_delay_episodes == 0
        if learn:
            for _ in range(cfg.steps_per_episode):
                batch = buffer.sample(cfg.batch_size)
                b_states, b_actions, _b_rl, b_rg, b_next = batch
                y = _centralized_target(agent, b_rg, b_next, cfg.gamma, twin,
                                        rng_explore)
                x = np.concatenate([b_states, b_actions], axis=1)
                for params, opt in zip(agent.critics, agent.opt_critics):
                    q = nn.forward(params, agent.critic_spec, x)[:, 0]
                    upstream = (2.0 / x.shape[0]) * (q - y)[:, None]
                    grads, _ = nn.backward(params, agent.critic_spec, x,
                                           upstream)
                    nn.clip_global_norm(grads, GRAD_CLIP)
                    nn.adam_step(params, grads, opt)
                for tgt, src in zip(agent.critic_targets, agent.critics):
                    nn.soft_update(tgt, src, cfg.tau)
                updates += 1
                if delayed and (not twin or updates % TD3_POLICY_DELAY == 0):
                    _centralized_actor_step(agent, b_states)
                    nn.soft_update(agent.actor_target, agent.actor, cfg.tau)

        result.step_r_global.extend(ep_r_glob.tolist())
        row = [episode, float(ep_r_glob.mean())]
        row += [float(ep_r_loc[:, k].mean()) for k in range(k_vehicles)]
        row += [float(ep_p_o[:, k].mean()) for k in range(k_vehicles)]
        row += [float(ep_p_l[:, k].mean()) for k in range(k_vehicles)]
        row += [float(ep_queue.mean())]
        result.episode_rows.append(row)
        if progress is not None:
            progress(episode, cfg.episodes)
        noise_std = max(cfg.noise_floor, noise_std * cfg.noise_decay)
    return result


def centralized_power_fn(agent_or_params, actor_spec: nn.MlpSpec | None,
                         p_max_offload: float, p_max_local: float):
    if isinstance(agent_or_params, CentralizedAgent):
        params, spec = agent_or_params.actor, agent_or_params.actor_spec
    else:
        params, spec = agent_or_params, actor_spec

    def power_fn(states: np.ndarray):
        fracs = nn.forward(params, spec, states.reshape(-1))
        p_o = np.clip(fracs[0::2] * p_max_offload, POWER_FLOOR_W,
                      p_max_offload)
        p_l = np.clip(fracs[1::2] * p_max_local, POWER_FLOOR_W, p_max_local)
        return p_o, p_l
    return power_fn


def run_fixed_policy_episodes(env: VecEnv, phase_fn, power_fn, episodes: int,
                              steps: int) -> list:
    """Episode rows in the training schema for non-learning baselines."""
    k_vehicles = env.cfg.k_vehicles
    rows = []
    for episode in range(1, episodes + 1):
        env.reset()
        ep_r_glob = np.empty(steps)
        ep_r_loc = np.empty((steps, k_vehicles))
        ep_p_o = np.empty((steps, k_vehicles))
        ep_p_l = np.empty((steps, k_vehicles))
        ep_queue = np.empty((steps, k_vehicles))
        states = env.vu_states()
        for t in range(steps):
            phases = phase_fn(env)
            p_o, p_l = power_fn(states)
            outcome = env.step(phases, p_o, p_l)
            states = env.vu_states()
            ep_r_glob[t] = outcome.r_global
            ep_r_loc[t] = outcome.r_local
            ep_p_o[t] = p_o
            ep_p_l[t] = p_l
            ep_queue[t] = outcome.queue_bits
        row = [episode, float(ep_r_glob.mean())]
        row += [float(ep_r_loc[:, k].mean()) for k in range(k_vehicles)]
        row += [float(ep_p_o[:, k].mean()) for k in range(k_vehicles)]
        row += [float(ep_p_l[:, k].mean()) for k in range(k_vehicles)]
        row += [float(ep_queue.mean())]
        rows.append(row)
    return rows
