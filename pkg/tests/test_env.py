"""Arrivals, local compute, buffer dynamics, rewards, and the slot simulator."""

import numpy as np
import pytest

from risvec.channel import PhaseConfig
from risvec.env import (EnvConfig, VecEnv, build_ris_state, build_vu_state,
                        global_reward, local_capacity_bits, local_frequency_hz,
                        local_reward, ris_reward, sample_arrivals,
                        snr_state_value, update_queue)


def make_env(seed=0, **overrides):
    defaults = dict(k_vehicles=2, n_elements=4, phase_bits=2,
                    static_vehicles=True)
    defaults.update(overrides)
    cfg = EnvConfig(**defaults)
    return VecEnv(cfg,
                  rng_mobility=np.random.default_rng(seed),
                  rng_arrivals=np.random.default_rng(seed + 1000),
                  rng_fading=np.random.default_rng(seed + 2000))


def flat_phases(env, index=0):
    return PhaseConfig(np.full(env.cfg.n_elements, index, np.int64),
                       env.cfg.phase_bits)


# arrivals -----------------------------------------------------------------


def test_arrival_mean_and_granularity():
    rng = np.random.default_rng(0)
    draws = sample_arrivals(3e6, 0.1, 1000.0, rng, size=100_000)
    assert np.mean(draws) == pytest.approx(3e5, rel=0.01)
    assert np.all(draws % 1000.0 == 0.0)
    assert np.all(draws >= 0.0)


def test_arrival_edge_cases():
    rng = np.random.default_rng(1)
    assert sample_arrivals(0.0, 0.1, 1000.0, rng) == 0.0
    with pytest.raises(ValueError):
        sample_arrivals(-1.0, 0.1, 1000.0, rng)


# local compute ------------------------------------------------------------


def test_local_frequency_cubic_law():
    assert local_frequency_hz(0.0, 1e-28, 2.15e9) == 0.0
    # uncapped cube root
    f = local_frequency_hz(1.0, 1e-28, 1e12)
    assert f == pytest.approx((1e28) ** (1.0 / 3.0), rel=1e-12)
    assert f == pytest.approx(2.1544e9, rel=1e-4)
    # eighth of the power halves the frequency
    assert local_frequency_hz(0.125, 1e-28, 1e12) == pytest.approx(f / 2.0,
                                                                   rel=1e-12)
    # cap engages at the chip limit
    assert local_frequency_hz(1.0, 1e-28, 2.15e9) == 2.15e9
    with pytest.raises(ValueError):
        local_frequency_hz(-0.1, 1e-28, 2.15e9)


def test_local_capacity_examples():
    # capped frequency: 0.1 * 2.15e9 / 500
    assert local_capacity_bits(1.0, 1e-28, 2.15e9, 500.0, 0.1) \
        == pytest.approx(430000.0, rel=1e-12)
    # uncapped
    assert local_capacity_bits(1.0, 1e-28, 1e12, 500.0, 0.1) \
        == pytest.approx(4.30887e5, rel=1e-4)
    assert local_capacity_bits(0.0, 1e-28, 2.15e9, 500.0, 0.1) == 0.0


# buffer -------------------------------------------------------------------


def test_queue_update_examples():
    assert update_queue(1000.0, 900.0, 600.0, 200.0) == 200.0
    assert update_queue(1000.0, 300.0, 100.0, 0.0) == 600.0
    out = update_queue(np.array([1000.0, 50.0]), np.array([900.0, 500.0]),
                       np.array([600.0, 0.0]), np.array([200.0, 70.0]))
    assert np.array_equal(out, [200.0, 70.0])


def test_queue_update_literal_recurrence_fuzz():
    rng = np.random.default_rng(5)
    q = 0.0
    for _ in range(1000):
        so = rng.uniform(0.0, 5e5)
        sl = rng.uniform(0.0, 3e5)
        a = 1000.0 * rng.integers(0, 600)
        nxt = update_queue(q, so, sl, a)
        want = max(0.0, q - so - sl) + a
        assert abs(nxt - want) <= 1e-9 * max(want, 1.0)
        assert nxt >= a          # arrivals always land in the buffer
        assert nxt >= 0.0
        q = nxt


def test_queue_update_rejects_negative_inputs():
    with pytest.raises(ValueError):
        update_queue(-1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        update_queue(1.0, 0.0, 0.0, -5.0)


# rewards ------------------------------------------------------------------


def test_local_reward_examples():
    assert local_reward(0.0, 0.0, 0.0, 1.0, 0.2, 1e5) == 0.0
    assert local_reward(0.6, 0.4, 0.0, 1.0, 0.2, 1e5) == pytest.approx(-1.0)
    assert local_reward(0.6, 0.4, 5e5, 1.0, 0.2, 1e5) == pytest.approx(-2.0)


def test_local_reward_monotone_in_costs():
    base = local_reward(0.3, 0.3, 2e5, 1.0, 0.2, 1e5)
    assert local_reward(0.5, 0.3, 2e5, 1.0, 0.2, 1e5) < base
    assert local_reward(0.3, 0.5, 2e5, 1.0, 0.2, 1e5) < base
    assert local_reward(0.3, 0.3, 4e5, 1.0, 0.2, 1e5) < base


def test_global_reward_is_the_mean():
    assert global_reward([-1.5, -1.5, -1.5]) == -1.5
    assert global_reward([-1.0, -3.0]) == -2.0
    vals = np.random.default_rng(3).uniform(-4.0, 0.0, size=9)
    assert global_reward(vals) == pytest.approx(float(vals.mean()))
    with pytest.raises(ValueError):
        global_reward([])


def test_surface_reward_examples():
    assert ris_reward([0.0, 0.0], 1.0) == 0.0
    assert ris_reward([3.0], 1.0) == pytest.approx(2.0)
    assert ris_reward([1.0, 3.0], 1.0) == pytest.approx(1.5)
    assert ris_reward([1.0, 3.0], 0.5) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        ris_reward([], 1.0)


def test_snr_state_value_clips():
    assert snr_state_value(0.0, 20.0) == 0.0
    assert snr_state_value(3.0, 20.0) == pytest.approx(2.0)
    assert snr_state_value(2.0 ** 25 - 1.0, 20.0) == 20.0
    arr = snr_state_value(np.array([0.0, 1.0, 2.0 ** 30]), 20.0)
    assert np.allclose(arr, [0.0, 1.0, 20.0])


# observation vectors ------------------------------------------------------


def test_ris_state_layout():
    env = make_env(seed=3, k_vehicles=1, n_elements=2)
    s = env.ris_state()
    assert s.shape == (5,)
    assert env.cfg.ris_state_dim == 5
    # fresh reset: zero phases and zero previous rates
    assert np.array_equal(s[:2], [0.0, 0.0])
    assert s[4] == 0.0
    v = env.vehicles[0]
    road = env.cfg.layout.road_length
    assert s[2] == pytest.approx(v.position.x / road)
    assert s[3] == pytest.approx(v.position.y / road)


def test_ris_state_reflects_applied_phases():
    env = make_env(seed=4)
    env.step(flat_phases(env, index=1), np.full(2, 0.5), np.zeros(2))
    s = env.ris_state()
    assert np.allclose(s[:4], np.pi / 2)


def test_vu_state_layout():
    assert np.array_equal(build_vu_state(0.0, 0.0, 0.0, 0.0, 1e5, 20.0),
                          np.zeros(5))
    s = build_vu_state(100.0, 100.0, 50.0, 0.0, 1.0, 20.0)
    assert np.array_equal(s, [100.0, 100.0, 50.0, 50.0, 0.0])
    # service-minus-backlog entry is derived from the first three
    r = np.random.default_rng(8)
    for _ in range(20):
        q, so, sl = r.uniform(0.0, 1e6, size=3)
        v = build_vu_state(q, so, sl, r.uniform(0.0, 50.0), 1e5, 20.0)
        assert v[3] == pytest.approx(v[1] + v[2] - v[0], rel=1e-12, abs=1e-12)


def test_vu_states_stacks_per_vehicle():
    env = make_env(seed=9, k_vehicles=3)
    env.queue_bits = np.array([1e5, 2e5, 3e5])
    stack = env.vu_states()
    assert stack.shape == (3, 5)
    assert np.allclose(stack[:, 0], [1.0, 2.0, 3.0])


def test_build_ris_state_standalone():
    env = make_env(seed=1, k_vehicles=1, n_elements=2)
    s = build_ris_state(np.array([0.5, 1.5]), env.vehicles,
                        np.array([7.0]), env.cfg.layout, 20.0)
    assert s.shape == (5,)
    assert np.array_equal(s[:2], [0.5, 1.5])
    assert s[4] == pytest.approx(np.log2(8.0))


# slot simulator -----------------------------------------------------------


def test_zero_power_queues_grow_by_arrivals():
    env = make_env(seed=10)
    out = env.step(flat_phases(env), np.zeros(2), np.zeros(2))
    assert np.array_equal(out.served_offload_bits, [0.0, 0.0])
    assert np.array_equal(out.served_local_bits, [0.0, 0.0])
    assert np.array_equal(out.queue_bits, out.arrivals_bits)
    assert np.array_equal(env.queue_bits, out.arrivals_bits)
    total = out.arrivals_bits.copy()
    out2 = env.step(flat_phases(env), np.zeros(2), np.zeros(2))
    total += out2.arrivals_bits
    assert np.array_equal(env.queue_bits, total)


def test_saturated_buffer_serves_full_capacity():
    env = make_env(seed=11)
    env.queue_bits = np.full(2, 1e12)
    out = env.step(flat_phases(env), np.ones(2), np.ones(2))
    cfg = env.cfg
    cap_l = local_capacity_bits(1.0, cfg.c_eff, cfg.f_max_hz,
                                cfg.cycles_per_bit, cfg.dt)
    assert np.allclose(out.served_local_bits, cap_l)
    want_o = cfg.dt * cfg.fading.bandwidth_W * np.log2(1.0 + out.snr)
    assert np.allclose(out.served_offload_bits, want_o, rtol=1e-12)
    want_q = 1e12 - out.served_offload_bits - out.served_local_bits \
        + out.arrivals_bits
    assert np.allclose(out.queue_bits, want_q, rtol=1e-12)


def test_global_reward_column_is_mean_of_locals():
    env = make_env(seed=12, k_vehicles=5)
    for _ in range(4):
        out = env.step(flat_phases(env),
                       np.full(5, 0.7), np.full(5, 0.2))
        assert out.r_global == pytest.approx(float(out.r_local.mean()),
                                             rel=1e-12)


def test_rewards_charge_the_preupdate_buffer():
    env = make_env(seed=13)
    env.queue_bits = np.array([3e5, 5e5])
    out = env.step(flat_phases(env), np.array([0.5, 0.5]),
                   np.array([0.25, 0.25]))
    cfg = env.cfg
    want = local_reward(0.5, 0.25, np.array([3e5, 5e5]), cfg.w1_power,
                        cfg.w2_queue, cfg.queue_unit_bits)
    assert np.allclose(out.r_local, want)


def test_offload_service_monotone_in_power():
    a = make_env(seed=14)
    b = make_env(seed=14)
    out_lo = a.step(flat_phases(a), np.full(2, 0.3), np.zeros(2))
    out_hi = b.step(flat_phases(b), np.full(2, 0.9), np.zeros(2))
    # identical fading by construction, only power differs
    assert np.allclose(out_hi.snr, 3.0 * out_lo.snr, rtol=1e-12)
    assert np.all(out_hi.served_offload_bits >= out_lo.served_offload_bits)


def test_step_validates_power_vectors():
    env = make_env(seed=15)
    ph = flat_phases(env)
    with pytest.raises(ValueError):
        env.step(ph, np.array([0.5]), np.zeros(2))
    with pytest.raises(ValueError):
        env.step(ph, np.array([-0.1, 0.0]), np.zeros(2))
    with pytest.raises(ValueError):
        env.step(ph, np.array([1.1, 0.0]), np.zeros(2))
    with pytest.raises(ValueError):
        env.step(ph, np.array([np.nan, 0.0]), np.zeros(2))
    with pytest.raises(ValueError):
        env.step(ph, np.zeros(2), np.array([0.0, np.inf]))


def test_step_validates_phase_argument():
    env = make_env(seed=16)
    with pytest.raises(ValueError):
        env.step(None, np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        env.step(PhaseConfig(np.zeros(3, np.int64), 2), np.zeros(2),
                 np.zeros(2))


def test_surface_off_uses_direct_link_only():
    env = make_env(seed=17, ris_enabled=False)
    out = env.step(None, np.full(2, 0.8), np.zeros(2))
    cfg = env.cfg
    want = 0.8 * np.abs(out.h_kb) ** 2 / cfg.fading.noise_sigma2
    assert np.allclose(out.snr, want, rtol=1e-12)


def test_vehicles_advance_once_per_slot():
    env = make_env(seed=18, static_vehicles=False)
    xs = [v.position.x for v in env.vehicles]
    speeds = [v.speed_mps for v in env.vehicles]
    env.step(flat_phases(env), np.zeros(2), np.zeros(2))
    for v, x0, sp in zip(env.vehicles, xs, speeds):
        if x0 + sp * env.cfg.dt <= env.cfg.layout.road_end_x:
            assert v.position.x == pytest.approx(x0 + sp * env.cfg.dt)


def test_static_vehicles_hold_position():
    env = make_env(seed=19, static_vehicles=True)
    xs = [v.position.x for v in env.vehicles]
    for _ in range(3):
        env.step(flat_phases(env), np.zeros(2), np.zeros(2))
    assert [v.position.x for v in env.vehicles] == xs
    assert all(v.speed_mps == 0.0 for v in env.vehicles)
    env.reset()
    assert [v.position.x for v in env.vehicles] == xs


def test_same_seed_same_trajectory():
    a = make_env(seed=20, static_vehicles=False)
    b = make_env(seed=20, static_vehicles=False)
    for _ in range(5):
        oa = a.step(flat_phases(a, 1), np.full(2, 0.4), np.full(2, 0.3))
        ob = b.step(flat_phases(b, 1), np.full(2, 0.4), np.full(2, 0.3))
        assert np.array_equal(oa.arrivals_bits, ob.arrivals_bits)
        assert np.array_equal(oa.queue_bits, ob.queue_bits)
        assert np.array_equal(oa.snr, ob.snr)
        assert np.array_equal(oa.h_kb, ob.h_kb)


def test_reset_clears_dynamic_state():
    env = make_env(seed=21)
    env.step(flat_phases(env, 1), np.ones(2), np.ones(2))
    assert np.any(env.queue_bits > 0.0)
    env.reset()
    assert np.array_equal(env.queue_bits, np.zeros(2))
    assert np.array_equal(env.prev_snr, np.zeros(2))
    assert np.array_equal(env.applied_phases_rad, np.zeros(4))


def test_config_validation():
    with pytest.raises(ValueError):
        EnvConfig(k_vehicles=0)
    with pytest.raises(ValueError):
        EnvConfig(dt=0.0)
    with pytest.raises(ValueError):
        EnvConfig(p_max_offload=0.0)
    with pytest.raises(ValueError):
        EnvConfig(queue_unit_bits=-1.0)
    assert EnvConfig().vu_state_dim == 5
    assert EnvConfig(k_vehicles=8, n_elements=36).ris_state_dim == 60
