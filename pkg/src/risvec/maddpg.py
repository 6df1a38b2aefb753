"""Cooperative per-vehicle power allocation under a frozen phase policy.

Stage two. Each vehicle runs its own small actor mapping its local
five-entry observation to two power fractions (offload, local compute).
Two critic families steer them:

  * a pair of global twin critics scoring the joint state and joint action,
    trained toward the same bootstrapped target built from the smaller of
    the two target twins (overestimation damping);
  * one local critic per agent scoring only that agent's observation and
    action, trained toward its own local reward.

An actor ascends the sum of both action gradients: the global twin-1 critic
evaluated with its own action substituted into the replayed joint action,
plus its local critic. Global critics learn every episode (one gradient step
per collected transition); local critics and actors only learn every d-th
episode, then their targets follow.

Exploration noise perturbs the actor's pre-squash output so that saturated
actions can still explore both directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .channel import PhaseConfig
from .ddpg import DdpgConfig
from .env import VecEnv
from .replay import ReplayBuffer, Transition

GRAD_CLIP = 1.0
POWER_FLOOR_W = 1e-6
VU_STATE_DIM = 5
VU_ACTION_DIM = 2
# Fresh actors start near full power (sigmoid(2) ~ 0.88): buffers stay
# drained while the critics are still learning, and the cheap direction
# (spend less) is discovered from above instead of from a queue blowup.
ACTOR_INIT_BIAS = 2.0


@dataclass(frozen=True)
class MaddpgConfig(DdpgConfig):
    actor_delay_episodes: int = 2
    actor_hidden: tuple[int, ...] = (512, 256)
    critic_hidden: tuple[int, ...] = (1024, 512, 256)

    def __post_init__(self):
        super().__post_init__()
        if self.actor_delay_episodes < 1:
            raise ValueError("actor_delay_episodes must be >= 1")


@dataclass
class PowerAgent:
    actor_spec: nn.MlpSpec
    local_spec: nn.MlpSpec
    actor: dict
    actor_target: dict
    local_critic: dict
    local_target: dict
    opt_actor: nn.AdamState
    opt_local: nn.AdamState


@dataclass
class GlobalCritics:
    """Twin scorers of the joint (state, action); trained toward one target."""

    spec: nn.MlpSpec
    q1: dict
    q2: dict
    q1_target: dict
    q2_target: dict
    opt1: nn.AdamState
    opt2: nn.AdamState


def build_power_agent(cfg: MaddpgConfig, rng: np.random.Generator) -> PowerAgent:
    actor_spec = nn.MlpSpec((VU_STATE_DIM, *cfg.actor_hidden, VU_ACTION_DIM),
                            output_activation="sigmoid")
    local_spec = nn.MlpSpec(
        (VU_STATE_DIM + VU_ACTION_DIM, *cfg.critic_hidden, 1),
        output_activation="identity")
    actor = nn.init_params(actor_spec, rng)
    actor["b%d" % (actor_spec.n_layers - 1)] += ACTOR_INIT_BIAS
    local = nn.init_params(local_spec, rng)
    return PowerAgent(actor_spec=actor_spec, local_spec=local_spec,
                      actor=actor, actor_target=nn.copy_params(actor),
                      local_critic=local, local_target=nn.copy_params(local),
                      opt_actor=nn.AdamState(lr=cfg.lr_actor),
                      opt_local=nn.AdamState(lr=cfg.lr_critic))


def build_global_critics(k: int, cfg: MaddpgConfig,
                         rng: np.random.Generator) -> GlobalCritics:
    spec = nn.MlpSpec(
        (k * (VU_STATE_DIM + VU_ACTION_DIM), *cfg.critic_hidden, 1),
        output_activation="identity")
    q1 = nn.init_params(spec, rng)
    q2 = nn.init_params(spec, rng)
    return GlobalCritics(spec=spec, q1=q1, q2=q2,
                         q1_target=nn.copy_params(q1),
                         q2_target=nn.copy_params(q2),
                         opt1=nn.AdamState(lr=cfg.lr_critic),
                         opt2=nn.AdamState(lr=cfg.lr_critic))


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def select_powers(agent: PowerAgent, state: np.ndarray, noise_std: float,
                  rng: np.random.Generator | None, p_max_offload: float,
                  p_max_local: float):
    """(action fractions, offload watts, local watts) for one agent.

    Noise lands on the pre-squash output; the squashed fractions scale the
    power caps and the applied powers keep a tiny floor so that link quality
    stays defined.
    """
    z = nn.output_preactivation(agent.actor, agent.actor_spec, state)
    if noise_std > 0.0:
        if rng is None:
            raise ValueError("exploration noise needs a generator")
        z = z + rng.normal(0.0, noise_std, size=z.shape)
    frac = _sigmoid(z)
    p_o = float(np.clip(frac[0] * p_max_offload, POWER_FLOOR_W, p_max_offload))
    p_l = float(np.clip(frac[1] * p_max_local, POWER_FLOOR_W, p_max_local))
    return frac, p_o, p_l


def agent_state_slice(k: int) -> slice:
    return slice(k * VU_STATE_DIM, (k + 1) * VU_STATE_DIM)


def agent_action_slice(k: int) -> slice:
    return slice(k * VU_ACTION_DIM, (k + 1) * VU_ACTION_DIM)


def target_joint_actions(agents: list[PowerAgent],
                         next_states: np.ndarray) -> np.ndarray:
    """Every agent's target actor applied to its own slice of s'."""
    cols = []
    for k, agent in enumerate(agents):
        s_k = next_states[:, agent_state_slice(k)]
        cols.append(nn.forward(agent.actor_target, agent.actor_spec, s_k))
    return np.concatenate(cols, axis=1)


def global_target_values(agents: list[PowerAgent], crit: GlobalCritics,
                         rewards_global: np.ndarray, next_states: np.ndarray,
                         gamma: float) -> np.ndarray:
    """Shared twin-min bootstrapped target for both global critics."""
    next_a = target_joint_actions(agents, next_states)
    xin = np.concatenate([next_states, next_a], axis=1)
    q1 = nn.forward(crit.q1_target, crit.spec, xin)[:, 0]
    q2 = nn.forward(crit.q2_target, crit.spec, xin)[:, 0]
    return rewards_global + gamma * np.minimum(q1, q2)


def _critic_regression_step(params, spec, opt, x, y) -> float:
    q = nn.forward(params, spec, x)[:, 0]
    loss = float(np.mean((y - q) ** 2))
    upstream = (2.0 / x.shape[0]) * (q - y)[:, None]
    grads, _ = nn.backward(params, spec, x, upstream)
    nn.clip_global_norm(grads, GRAD_CLIP)
    nn.adam_step(params, grads, opt)
    return loss


def global_critic_update(agents: list[PowerAgent], crit: GlobalCritics,
                         batch, gamma: float) -> tuple[float, float]:
    """Move both twins toward the common min-target. Returns both losses."""
    states, actions, _r_loc, r_glob, next_states = batch
    y = global_target_values(agents, crit, r_glob, next_states, gamma)
    x = np.concatenate([states, actions], axis=1)
    loss1 = _critic_regression_step(crit.q1, crit.spec, crit.opt1, x, y)
    loss2 = _critic_regression_step(crit.q2, crit.spec, crit.opt2, x, y)
    return loss1, loss2


def local_critic_update(agent: PowerAgent, k: int, batch,
                        gamma: float) -> float:
    states, actions, r_loc, _r_glob, next_states = batch
    s_k = states[:, agent_state_slice(k)]
    a_k = actions[:, agent_action_slice(k)]
    ns_k = next_states[:, agent_state_slice(k)]
    na_k = nn.forward(agent.actor_target, agent.actor_spec, ns_k)
    q_next = nn.forward(agent.local_target, agent.local_spec,
                        np.concatenate([ns_k, na_k], axis=1))[:, 0]
    y = r_loc[:, k] + gamma * q_next
    x = np.concatenate([s_k, a_k], axis=1)
    return _critic_regression_step(agent.local_critic, agent.local_spec,
                                   agent.opt_local, x, y)


def actor_objective_gradient(agent: PowerAgent, k: int, crit: GlobalCritics,
                             batch):
    """Gradient of the summed global + local valuation of agent k's policy.

    The global term scores the replayed joint action with agent k's slot
    replaced by its current policy output; the local term scores the
    agent's own (state, policy action) pair.
    """
    states, actions, _r_loc, _r_glob, _next = batch
    bsz = states.shape[0]
    s_k = states[:, agent_state_slice(k)]
    a_pi = nn.forward(agent.actor, agent.actor_spec, s_k)

    joint_a = actions.copy()
    joint_a[:, agent_action_slice(k)] = a_pi
    xg = np.concatenate([states, joint_a], axis=1)
    ones = np.full((bsz, 1), 1.0 / bsz)
    _, ig_global = nn.backward(crit.q1, crit.spec, xg, ones)
    dq_global = ig_global[:, states.shape[1]:][:, agent_action_slice(k)]

    xl = np.concatenate([s_k, a_pi], axis=1)
    _, ig_local = nn.backward(agent.local_critic, agent.local_spec, xl, ones)
    dq_local = ig_local[:, VU_STATE_DIM:]

    upstream = dq_global + dq_local
    grads, _ = nn.backward(agent.actor, agent.actor_spec, s_k, upstream)
    return grads


def actor_update(agent: PowerAgent, k: int, crit: GlobalCritics,
                 batch) -> None:
    grads = actor_objective_gradient(agent, k, crit, batch)
    for g in grads.values():
        np.negative(g, out=g)
    nn.clip_global_norm(grads, GRAD_CLIP)
    nn.adam_step(agent.actor, grads, agent.opt_actor)


@dataclass
class PowerTrainResult:
    agents: list
    global_critics: GlobalCritics
    episode_rows: list
    step_r_global: list = field(default_factory=list)


def train_power(env: VecEnv, phase_fn, cfg: MaddpgConfig,
                rng_init: np.random.Generator,
                rng_explore: np.random.Generator,
                rng_sample: np.random.Generator,
                progress=None) -> PowerTrainResult:
    """Full stage-two training loop.

    phase_fn(env) supplies the slot's surface setting (a frozen trained
    actor, a random draw, or None when the surface is disabled); power
    exploration and learning happen here.
    """
    ecfg = env.cfg
    k_vehicles = ecfg.k_vehicles
    agents = [build_power_agent(cfg, rng_init) for _ in range(k_vehicles)]
    crit = build_global_critics(k_vehicles, cfg, rng_init)
    buffer = ReplayBuffer(cfg.replay_capacity, rng_sample)

    result = PowerTrainResult(agents=agents, global_critics=crit,
                              episode_rows=[])
    noise_std = cfg.noise_std_initial
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
            fracs = np.empty((k_vehicles, VU_ACTION_DIM))
            p_o = np.empty(k_vehicles)
            p_l = np.empty(k_vehicles)
            for k, agent in enumerate(agents):
                fracs[k], p_o[k], p_l[k] = select_powers(
                    agent, states[k], noise_std, rng_explore,
                    ecfg.p_max_offload, ecfg.p_max_local)
            outcome = env.step(phases, p_o, p_l)
            next_states = env.vu_states()
            buffer.push(Transition(states.reshape(-1), fracs.reshape(-1),
                                   outcome.r_local, outcome.r_global,
                                   next_states.reshape(-1)))
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
                global_critic_update(agents, crit, batch, cfg.gamma)
                nn.soft_update(crit.q1_target, crit.q1, cfg.tau)
                nn.soft_update(crit.q2_target, crit.q2, cfg.tau)
                if delayed:
                    for k, agent in enumerate(agents):
                        local_critic_update(agent, k, batch, cfg.gamma)
                        actor_update(agent, k, crit, batch)
                    for agent in agents:
                        nn.soft_update(agent.actor_target, agent.actor,
                                       cfg.tau)
                        nn.soft_update(agent.local_target, agent.local_critic,
                                       cfg.tau)

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


# -- evaluation rollouts (testing stage: frozen nets, no noise, no updates) --

@dataclass
class RolloutResult:
    rows: list                    # per-step metric rows
    r_global: np.ndarray          # (episodes, steps)
    p_offload: np.ndarray         # (episodes, steps, K) applied watts
    p_local: np.ndarray
    queue_bits: np.ndarray
    snr: np.ndarray

    @property
    def mean_power_per_vu(self) -> float:
        return float(np.mean(self.p_offload + self.p_local))

    @property
    def mean_queue_bits(self) -> float:
        return float(np.mean(self.queue_bits))


def rollout_power(env: VecEnv, phase_fn, power_fn, episodes: int, steps: int,
                  scheme: str) -> RolloutResult:
    """Greedy evaluation episodes; logs one metrics row per slot."""
    k_vehicles = env.cfg.k_vehicles
    rows = []
    r_glob = np.empty((episodes, steps))
    p_o_log = np.empty((episodes, steps, k_vehicles))
    p_l_log = np.empty((episodes, steps, k_vehicles))
    q_log = np.empty((episodes, steps, k_vehicles))
    snr_log = np.empty((episodes, steps, k_vehicles))
    for ep in range(episodes):
        env.reset()
        states = env.vu_states()
        for t in range(steps):
            phases = phase_fn(env)
            p_o, p_l = power_fn(states)
            outcome = env.step(phases, p_o, p_l)
            states = env.vu_states()
            snr_db = 10.0 * np.log10(np.maximum(outcome.snr, 1e-300))
            row = [ep + 1, t + 1, scheme]
            row += [float(x) for x in p_o]
            row += [float(x) for x in p_l]
            row += [float(x) for x in outcome.queue_bits]
            row += [float(x) for x in snr_db]
            row += [float(x) for x in outcome.r_local]
            row += [outcome.r_global]
            rows.append(row)
            r_glob[ep, t] = outcome.r_global
            p_o_log[ep, t] = p_o
            p_l_log[ep, t] = p_l
            q_log[ep, t] = outcome.queue_bits
            snr_log[ep, t] = outcome.snr
    return RolloutResult(rows=rows, r_global=r_glob, p_offload=p_o_log,
                         p_local=p_l_log, queue_bits=q_log, snr=snr_log)


def actor_power_fn(actors: list[tuple[dict, nn.MlpSpec]], p_max_offload: float,
                   p_max_local: float):
    """Greedy per-agent policy evaluation."""
    def power_fn(states: np.ndarray):
        k_vehicles = states.shape[0]
        p_o = np.empty(k_vehicles)
        p_l = np.empty(k_vehicles)
        for k in range(k_vehicles):
            params, spec = actors[k]
            frac = nn.forward(params, spec, states[k])
            p_o[k] = np.clip(frac[0] * p_max_offload, POWER_FLOOR_W,
                             p_max_offload)
            p_l[k] = np.clip(frac[1] * p_max_local, POWER_FLOOR_W, p_max_local)
        return p_o, p_l
    return power_fn


def frozen_phase_fn(actor_params: dict, actor_spec: nn.MlpSpec, b: int):
    """Greedy quantized phases from a trained stage-one actor."""
    from .ddpg import greedy_phases

    def phase_fn(env: VecEnv) -> PhaseConfig:
        return greedy_phases(actor_params, actor_spec, env.ris_state(), b)
    return phase_fn


# -- checkpoint plumbing ----------------------------------------------------

def _spec_meta(spec: nn.MlpSpec) -> dict:
    return {"layer_sizes": list(spec.layer_sizes),
            "output_activation": spec.output_activation}


def save_power_checkpoints(out_dir, agents: list[PowerAgent],
                           crit: GlobalCritics) -> list:
    """One file per agent (actor + local critic) plus the global twins."""
    import json
    import os
    paths = []
    for k, agent in enumerate(agents):
        path = os.path.join(out_dir, f"power_agent_{k}.ckpt")
        desc = json.dumps({"kind": "power-agent", "agent": k,
                           "actor": _spec_meta(agent.actor_spec),
                           "local_critic": _spec_meta(agent.local_spec)},
                          sort_keys=True)
        tensors = {}
        tensors.update({f"actor/{n}": v for n, v in agent.actor.items()})
        tensors.update({f"local_critic/{n}": v
                        for n, v in agent.local_critic.items()})
        nn.save_checkpoint(path, desc, tensors)
        paths.append(path)
    gpath = os.path.join(out_dir, "power_global_critics.ckpt")
    gdesc = json.dumps({"kind": "power-global-critics",
                        "critic": _spec_meta(crit.spec)}, sort_keys=True)
    gtensors = {}
    gtensors.update({f"q1/{n}": v for n, v in crit.q1.items()})
    gtensors.update({f"q2/{n}": v for n, v in crit.q2.items()})
    nn.save_checkpoint(gpath, gdesc, gtensors)
    paths.append(gpath)
    return paths


def load_power_actors(out_dir, k_vehicles: int):
    """Per-agent (params, spec) pairs from a checkpoint directory."""
    import json
    import os
    actors = []
    for k in range(k_vehicles):
        path = os.path.join(out_dir, f"power_agent_{k}.ckpt")
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        desc, tensors = nn.load_checkpoint(path)
        meta = json.loads(desc)
        spec = nn.MlpSpec(tuple(meta["actor"]["layer_sizes"]),
                          output_activation=meta["actor"]["output_activation"])
        params = {n.split("/", 1)[1]: v for n, v in tensors.items()
                  if n.startswith("actor/")}
        actors.append((params, spec))
    return actors
