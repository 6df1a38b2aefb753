"""Task-offloading environment: K vehicles, one BS edge server, one surface.

Per slot, each vehicle splits transmit power between offloading (served at
the uplink rate) and local execution (chip frequency from a cubic
power/frequency law). Arriving task bits queue in a per-vehicle buffer:

    q(t+1) = max(0, q(t) - q_o(t) - q_l(t)) + a(t)

where q_o and q_l are the slot's offload and local service capacities. The
capacities are reported unclamped; only the buffer update clamps at zero.

Rewards: each vehicle pays for spent power and for buffered bits (weighted,
buffer counted in units of queue_unit_bits); the global reward is the mean.
The surface controller's reward is the mean spectral efficiency, used during
phase-shift training.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import (ChannelSet, FadingParams, PhaseConfig, direct_gain,
                      los_steering, phase_matrix_apply, rician_los_gain)
from .geometry import (Position3D, ScenarioLayout, VehicleState,
                       advance_vehicles, distance, sin_angle_to_ris,
                       spawn_vehicles)


@dataclass(frozen=True)
class EnvConfig:
    k_vehicles: int = 8
    n_elements: int = 36
    phase_bits: int = 3
    dt: float = 0.1                      # slot length, seconds
    eta_bps: float = 3e6                 # mean task arrival rate per vehicle
    packet_bits: float = 1000.0          # arrival granularity
    cycles_per_bit: float = 500.0
    c_eff: float = 1e-28                 # switched-capacitance coefficient
    f_max_hz: float = 2.15e9
    p_max_offload: float = 1.0
    p_max_local: float = 1.0
    w_rate: float = 1.0                  # phase-training reward weight
    w1_power: float = 1.0
    w2_queue: float = 0.2
    queue_unit_bits: float = 1e5         # buffer size unit inside rewards/states
    snr_state_clip: float = 20.0         # cap on log2(1+snr) state entries
    static_vehicles: bool = False
    ris_enabled: bool = True
    fading: FadingParams = field(default_factory=FadingParams)
    layout: ScenarioLayout = field(default_factory=lambda: ScenarioLayout(
        bs=Position3D(0.0, 0.0, 25.0), ris=Position3D(250.0, 220.0, 25.0)))

    def __post_init__(self):
        if self.k_vehicles < 1 or self.n_elements < 1 or self.phase_bits < 1:
            raise ValueError("k_vehicles, n_elements, phase_bits must be >= 1")
        if self.dt <= 0.0 or self.eta_bps < 0.0 or self.packet_bits <= 0.0:
            raise ValueError("bad slot/arrival configuration")
        if min(self.cycles_per_bit, self.c_eff, self.f_max_hz) <= 0.0:
            raise ValueError("bad local-compute configuration")
        if self.p_max_offload <= 0.0 or self.p_max_local <= 0.0:
            raise ValueError("power caps must be positive")
        if self.queue_unit_bits <= 0.0:
            raise ValueError("queue unit must be positive")

    @property
    def ris_state_dim(self) -> int:
        return self.n_elements + 3 * self.k_vehicles

    @property
    def vu_state_dim(self) -> int:
        return 5


@dataclass
class StepOutcome:
    """Everything observable about one slot, raw service capacities included."""

    arrivals_bits: np.ndarray
    served_offload_bits: np.ndarray      # uplink capacity, not clamped to q
    served_local_bits: np.ndarray        # local capacity, not clamped to q
    snr: np.ndarray
    r_local: np.ndarray
    r_global: float
    queue_bits: np.ndarray               # buffer after the update
    h_kb: np.ndarray                     # slot channel draws, for analysis
    h_kr: np.ndarray                     # (K, N)


def sample_arrivals(eta_bps: float, dt: float, packet_bits: float,
                    rng: np.random.Generator, size=None):
    """Packetized Poisson arrivals with mean eta*dt bits."""
    if eta_bps < 0.0:
        raise ValueError("arrival rate must be nonnegative")
    lam = eta_bps * dt / packet_bits
    return packet_bits * rng.poisson(lam, size=size)


def local_frequency_hz(p_local: float, c_eff: float, f_max_hz: float) -> float:
    """Chip frequency from the cubic dynamic-power law, capped at f_max."""
    if p_local < 0.0:
        raise ValueError("power must be nonnegative")
    return min(f_max_hz, (p_local / c_eff) ** (1.0 / 3.0))


def local_capacity_bits(p_local: float, c_eff: float, f_max_hz: float,
                        cycles_per_bit: float, dt: float) -> float:
    return dt * local_frequency_hz(p_local, c_eff, f_max_hz) / cycles_per_bit


def update_queue(q: float, served_offload: float, served_local: float,
                 arrivals: float):
    """One buffer step; over-service is absorbed by the clamp at zero."""
    if np.any(np.asarray(q) < 0.0) or np.any(np.asarray(arrivals) < 0.0):
        raise ValueError("queue and arrivals must be nonnegative")
    return np.maximum(0.0, q - served_offload - served_local) + arrivals


def local_reward(p_offload: float, p_local: float, q_bits: float,
                 w1: float, w2: float, queue_unit_bits: float):
    return -(w1 * (p_offload + p_local) + w2 * q_bits / queue_unit_bits)


def global_reward(local_rewards) -> float:
    arr = np.asarray(local_rewards, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one local reward")
    return float(arr.mean())


def ris_reward(snrs, w: float) -> float:
    """Mean spectral efficiency across vehicles, scaled by w."""
    arr = np.asarray(snrs, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one SNR")
    return w * float(np.mean(np.log2(1.0 + arr)))


def snr_state_value(snr, clip: float):
    return np.clip(np.log2(1.0 + np.asarray(snr, dtype=float)), 0.0, clip)


def build_ris_state(phases_rad: np.ndarray, vehicles: list[VehicleState],
                    prev_snrs: np.ndarray, layout: ScenarioLayout,
                    snr_clip: float) -> np.ndarray:
    """[element phases, per-vehicle (x, y) over road length, clipped rates]."""
    road = layout.road_length
    coords = np.empty(2 * len(vehicles))
    for i, v in enumerate(vehicles):
        coords[2 * i] = v.position.x / road
        coords[2 * i + 1] = v.position.y / road
    return np.concatenate([np.asarray(phases_rad, dtype=float), coords,
                           snr_state_value(prev_snrs, snr_clip)])


def build_vu_state(queue_bits: float, served_offload_prev: float,
                   served_local_prev: float, prev_snr: float,
                   queue_unit_bits: float, snr_clip: float) -> np.ndarray:
    """[buffer, recent offload service, recent local service, their excess
    over the buffer, previous-slot link quality], bit entries in queue units.
    """
    u = queue_unit_bits
    return np.array([
        queue_bits / u,
        served_offload_prev / u,
        served_local_prev / u,
        (served_offload_prev + served_local_prev - queue_bits) / u,
        float(snr_state_value(prev_snr, snr_clip)),
    ])


class VecEnv:
    """Stateful slot-by-slot simulator built from the pure pieces above.

    Randomness comes from three injected streams so that runs with the same
    seed see identical arrivals, fading, and mobility no matter which control
    scheme is being trained on top.
    """

    def __init__(self, cfg: EnvConfig, rng_mobility: np.random.Generator,
                 rng_arrivals: np.random.Generator,
                 rng_fading: np.random.Generator):
        self.cfg = cfg
        self.rng_mobility = rng_mobility
        self.rng_arrivals = rng_arrivals
        self.rng_fading = rng_fading

        lay = cfg.layout
        fp = cfg.fading
        # the array->BS hop never changes: both ends are fixed
        d_rb = distance(lay.ris, lay.bs)
        sin_rb = sin_angle_to_ris(lay.bs, lay.ris)
        steer = los_steering(cfg.n_elements, fp.element_spacing_dr,
                             fp.wavelength_lambda, sin_rb)
        self.h_rb = rician_los_gain(d_rb, fp.alpha_rb, fp.rician_R, steer,
                                    fp.rho)
        self._static_vehicles: list[VehicleState] | None = None
        if cfg.static_vehicles:
            self._static_vehicles = spawn_vehicles(lay, cfg.k_vehicles,
                                                   self.rng_mobility,
                                                   static=True)
        self.vehicles: list[VehicleState] = []
        self.reset()

    def reset(self) -> None:
        cfg = self.cfg
        if self._static_vehicles is not None:
            self.vehicles = [VehicleState(v.vehicle_id, v.position, 0.0)
                             for v in self._static_vehicles]
        else:
            self.vehicles = spawn_vehicles(cfg.layout, cfg.k_vehicles,
                                           self.rng_mobility)
        k = cfg.k_vehicles
        self.queue_bits = np.zeros(k)
        self.prev_snr = np.zeros(k)
        self.prev_served_offload = np.zeros(k)
        self.prev_served_local = np.zeros(k)
        self.applied_phases_rad = np.zeros(cfg.n_elements)

    # -- observations -----------------------------------------------------

    def ris_state(self) -> np.ndarray:
        return build_ris_state(self.applied_phases_rad, self.vehicles,
                               self.prev_snr, self.cfg.layout,
                               self.cfg.snr_state_clip)

    def vu_state(self, k: int) -> np.ndarray:
        return build_vu_state(self.queue_bits[k], self.prev_served_offload[k],
                              self.prev_served_local[k], self.prev_snr[k],
                              self.cfg.queue_unit_bits, self.cfg.snr_state_clip)

    def vu_states(self) -> np.ndarray:
        return np.stack([self.vu_state(k) for k in range(self.cfg.k_vehicles)])

    # -- dynamics ---------------------------------------------------------

    def draw_direct_fading(self) -> np.ndarray:
        mag2 = self.rng_fading.exponential(1.0, size=self.cfg.k_vehicles)
        phase = self.rng_fading.uniform(0.0, 2.0 * np.pi,
                                        size=self.cfg.k_vehicles)
        return np.sqrt(mag2) * np.exp(1j * phase)

    def current_channels(self, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(h_kb, h_kr) for the current positions and given fading factors."""
        cfg = self.cfg
        fp = cfg.fading
        lay = cfg.layout
        k = cfg.k_vehicles
        h_kb = np.empty(k, dtype=complex)
        h_kr = np.empty((k, cfg.n_elements), dtype=complex)
        for i, v in enumerate(self.vehicles):
            d_kb = distance(v.position, lay.bs)
            h_kb[i] = direct_gain(d_kb, fp.alpha_kb, g[i], fp.rho)
            d_kr = distance(v.position, lay.ris)
            steer = los_steering(cfg.n_elements, fp.element_spacing_dr,
                                 fp.wavelength_lambda,
                                 sin_angle_to_ris(v.position, lay.ris))
            h_kr[i] = rician_los_gain(d_kr, fp.alpha_kr, fp.rician_R, steer,
                                      fp.rho)
        return h_kb, h_kr

    def step(self, phases: PhaseConfig | None, p_offload: np.ndarray,
             p_local: np.ndarray) -> StepOutcome:
        cfg = self.cfg
        p_o = np.asarray(p_offload, dtype=float)
        p_l = np.asarray(p_local, dtype=float)
        if p_o.shape != (cfg.k_vehicles,) or p_l.shape != (cfg.k_vehicles,):
            raise ValueError("power vectors must have one entry per vehicle")
        if (np.any(~np.isfinite(p_o)) or np.any(~np.isfinite(p_l))
                or np.any(p_o < 0.0) or np.any(p_l < 0.0)
                or np.any(p_o > cfg.p_max_offload)
                or np.any(p_l > cfg.p_max_local)):
            raise ValueError("powers must lie in [0, p_max]")
        if cfg.ris_enabled:
            if phases is None:
                raise ValueError("phase setting required while the surface is on")
            if phases.n_elements != cfg.n_elements:
                raise ValueError("phase setting has the wrong element count")

        g = self.draw_direct_fading()
        h_kb, h_kr = self.current_channels(g)

        if cfg.ris_enabled:
            weights = phases.beta * np.exp(1j * phases.phases())
            composite = (np.conj(self.h_rb) * weights) @ h_kr.T + h_kb
        else:
            composite = h_kb
        gamma = p_o * np.abs(composite) ** 2 / cfg.fading.noise_sigma2

        served_o = cfg.dt * cfg.fading.bandwidth_W * np.log2(1.0 + gamma)
        served_l = np.array([
            local_capacity_bits(p, cfg.c_eff, cfg.f_max_hz,
                                cfg.cycles_per_bit, cfg.dt) for p in p_l])
        arrivals = sample_arrivals(cfg.eta_bps, cfg.dt, cfg.packet_bits,
                                   self.rng_arrivals,
                                   size=cfg.k_vehicles).astype(float)

        r_loc = local_reward(p_o, p_l, self.queue_bits, cfg.w1_power,
                             cfg.w2_queue, cfg.queue_unit_bits)
        r_glob = global_reward(r_loc)
        new_q = update_queue(self.queue_bits, served_o, served_l, arrivals)

        self.queue_bits = new_q
        self.prev_snr = gamma
        self.prev_served_offload = served_o
        self.prev_served_local = served_l
        if cfg.ris_enabled:
            self.applied_phases_rad = phases.phases()
        if not cfg.static_vehicles:
            advance_vehicles(self.vehicles, cfg.dt, cfg.layout,
                             self.rng_mobility)

        return StepOutcome(arrivals_bits=arrivals, served_offload_bits=served_o,
                           served_local_bits=served_l, snr=gamma,
                           r_local=r_loc, r_global=r_glob,
                           queue_bits=new_q.copy(), h_kb=h_kb, h_kr=h_kr)
