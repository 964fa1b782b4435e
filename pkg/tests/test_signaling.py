"""Mode machine tests: moving block, fixed-block fallback, emergency latch."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbtcsim.kinematics import (
    KinematicParams,
    LeaderEstimate,
    cruise_speed,
    guidance_accel,
    solve_plan,
)
from cbtcsim.signaling import (
    Mode,
    SignalingConfig,
    TrainState,
    block_index,
    station_position,
    train_step,
)

CFG = SignalingConfig()
KIN = KinematicParams()


def _plan_to_next(state: TrainState, now: float = 0.0) -> None:
    srem = station_position(CFG, state.next_station_index) - state.position
    state.plan = solve_plan(KIN, state.velocity, srem, start_time=now)


def test_mode_values_are_stable():
    # the trace format and the compiled engine store these as ints
    assert [m.value for m in (Mode.MBS, Mode.FBS, Mode.EMERGENCY,
                              Mode.DWELL, Mode.DONE)] == [0, 1, 2, 3, 4]


class TestBlockIndex:
    def test_first_block(self):
        assert block_index(0.0, 400.0) == 1

    def test_interior(self):
        assert block_index(850.0, 400.0) == 3

    def test_boundary_belongs_to_upper_block(self):
        assert block_index(400.0, 400.0) == 2

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            block_index(10.0, 0.0)
        with pytest.raises(ValueError):
            block_index(-1.0, 400.0)

    @given(pos=st.floats(min_value=0.0, max_value=1e5),
           length=st.floats(min_value=1.0, max_value=2000.0))
    @settings(max_examples=100, deadline=None)
    def test_block_contains_position(self, pos, length):
        b = block_index(pos, length)
        assert b >= 1
        assert (b - 1) * length <= pos
        assert pos <= b * length


class TestStationPosition:
    def test_positions(self):
        assert station_position(CFG, 1) == 0.0
        assert station_position(CFG, 2) == 2800.0
        assert station_position(CFG, 30) == 29 * 2800.0


class TestConfig:
    def test_dwell_slots(self):
        assert CFG.dwell_slots == 120
        assert SignalingConfig(dwell_time=7.5).dwell_slots == 30

    @pytest.mark.parametrize("field,value", [
        ("dt", 0.0),
        ("loss_threshold_n", 0),
        ("fbs_hold_slots", 0),
        ("block_length", -1.0),
        ("block_threshold_bth", -1),
        ("station_spacing", 0.0),
        ("dwell_time", -0.5),
        ("num_stations", 1),
        ("train_length", -1.0),
    ])
    def test_rejects_bad_values(self, field, value):
        with pytest.raises(ValueError):
            SignalingConfig(**{field: value})


class TestMovingBlock:
    def test_healthy_follow_holds_speed(self):
        t = TrainState(id=1, velocity=KIN.v_max)
        _plan_to_next(t)
        leader = TrainState(id=0, position=2000.0, velocity=KIN.v_max)
        train_step(t, CFG, KIN, True, leader, 0.0)
        assert t.mode is Mode.MBS
        assert t.pkt_loss_counter == 0
        assert t.acceleration == 0.0
        assert t.velocity == KIN.v_max
        assert t.position == KIN.v_max * CFG.dt
        # estimate refreshed from the leader's start-of-slot state
        assert t.leader.position == 2000.0
        assert t.leader.age_slots == 0

    def test_loss_threshold_trips_fallback(self):
        t = TrainState(id=1, velocity=KIN.v_max, pkt_loss_counter=7)
        _plan_to_next(t)
        t.leader = LeaderEstimate(20000.0, KIN.v_max, 0.0, 7)
        leader = TrainState(id=0, position=20000.0, velocity=KIN.v_max)
        train_step(t, CFG, KIN, False, leader, 0.0)
        assert t.pkt_loss_counter == 8
        assert t.mode is Mode.FBS
        # the hold is armed at entry and the shared end-of-slot bookkeeping
        # has already consumed the entry slot
        assert t.fbs_slots_remaining == CFG.fbs_hold_slots - 1
        assert t.leader.age_slots == 8
        # leader far ahead: fixed-block target is still the next station
        assert t.acceleration == 0.0

    def test_lead_train_ignores_link_state(self):
        t = TrainState(id=0, velocity=10.0)
        _plan_to_next(t)
        train_step(t, CFG, KIN, False, None, 0.0)
        assert t.mode is Mode.MBS
        assert t.pkt_loss_counter == 0
        assert t.velocity > 10.0

    def test_stale_gap_enters_fallback_and_latches(self):
        # a close slow leader violates the dynamic headway; with 400 m
        # blocks such a geometry is already within the block threshold, so
        # the fallback slot trips the emergency brake and freezes the hold
        t = TrainState(id=1, position=399.0, velocity=KIN.v_max)
        _plan_to_next(t)
        leader = TrainState(id=0, position=745.0, velocity=0.0)
        train_step(t, CFG, KIN, True, leader, 0.0)
        assert t.mode is Mode.EMERGENCY
        assert t.acceleration == -KIN.decel_emergency
        assert t.fbs_slots_remaining == CFG.fbs_hold_slots

    def test_train_length_tightens_the_gap(self):
        # same geometry clears the headway without the length correction
        cfg_long = SignalingConfig(train_length=100.0)
        leader = TrainState(id=0, position=290.0, velocity=KIN.v_max)

        stay = TrainState(id=1, velocity=KIN.v_max)
        _plan_to_next(stay)
        train_step(stay, CFG, KIN, True, leader, 0.0)
        assert stay.mode is Mode.MBS

        trip = TrainState(id=1, velocity=KIN.v_max)
        trip.plan = solve_plan(KIN, KIN.v_max, 2800.0)
        train_step(trip, cfg_long, KIN, True, leader, 0.0)
        assert trip.mode is not Mode.MBS


class TestFixedBlock:
    def test_block_gap_at_threshold_trips_emergency(self):
        t = TrainState(id=1, position=900.0, velocity=10.0, mode=Mode.FBS,
                       fbs_slots_remaining=50)
        leader = TrainState(id=0, position=1300.0, velocity=10.0)
        train_step(t, CFG, KIN, True, leader, 0.0)
        assert t.mode is Mode.EMERGENCY
        assert t.acceleration == -KIN.decel_emergency
        assert t.velocity == 10.0 - KIN.decel_emergency * CFG.dt
        # hold counter frozen while the latch is engaged
        assert t.fbs_slots_remaining == 50

    def test_stop_target_limited_by_leader_block(self):
        t = TrainState(id=1, position=1900.0, velocity=KIN.v_max,
                       mode=Mode.FBS, fbs_slots_remaining=60,
                       next_station_index=3)
        leader = TrainState(id=0, position=3900.0, velocity=KIN.v_max)
        train_step(t, CFG, KIN, False, leader, 0.0)
        # leader in block 10, so the stop target is the start of block 8 at
        # 3200 m, nearer than the 5600 m station
        s_rem = 3200.0 - 1900.0
        v = KIN.v_max
        expected = guidance_accel(KIN, v, cruise_speed(KIN, v, s_rem),
                                  s_rem, CFG.dt)
        assert t.mode is Mode.FBS
        assert t.acceleration == expected
        assert t.fbs_slots_remaining == 59

    def test_unreachable_target_trips_emergency(self):
        # inside the service braking envelope of the limit point
        t = TrainState(id=1, position=2950.0, velocity=KIN.v_max,
                       mode=Mode.FBS, fbs_slots_remaining=60,
                       next_station_index=3)
        leader = TrainState(id=0, position=3900.0, velocity=KIN.v_max)
        train_step(t, CFG, KIN, False, leader, 0.0)
        assert t.mode is Mode.EMERGENCY

    def test_expiry_reverts_promptly(self):
        t = TrainState(id=1, position=1000.0, velocity=KIN.v_max,
                       mode=Mode.FBS, fbs_slots_remaining=1)
        leader = TrainState(id=0, position=20000.0, velocity=KIN.v_max)
        train_step(t, CFG, KIN, True, leader, 12.5)
        assert t.mode is Mode.MBS
        assert t.fbs_slots_remaining == 0
        assert t.plan is not None
        assert t.plan.start_time == 12.5

    def test_expiry_waits_for_link_recovery(self):
        t = TrainState(id=1, position=1000.0, velocity=KIN.v_max,
                       mode=Mode.FBS, fbs_slots_remaining=1,
                       pkt_loss_counter=8)
        t.leader = LeaderEstimate(20000.0, KIN.v_max, 0.0, 8)
        leader = TrainState(id=0, position=20000.0, velocity=KIN.v_max)
        train_step(t, CFG, KIN, False, leader, 0.0)
        assert t.mode is Mode.FBS
        assert t.fbs_slots_remaining == 0
        # first success afterwards reverts without re-arming the hold
        train_step(t, CFG, KIN, True, leader, 0.25)
        assert t.pkt_loss_counter == 0
        assert t.mode is Mode.MBS
        assert t.fbs_slots_remaining == 0

    def test_leaderless_fallback_normalizes_to_moving_block(self):
        t = TrainState(id=0, position=500.0, velocity=12.0, mode=Mode.FBS,
                       fbs_slots_remaining=80)
        train_step(t, CFG, KIN, True, None, 3.0)
        assert t.mode is Mode.MBS
        assert t.fbs_slots_remaining == 0
        assert t.plan.start_time == 3.0
        assert t.velocity > 12.0 or t.acceleration == 0.0


class TestEmergency:
    def test_latched_while_moving_even_when_clear(self):
        t = TrainState(id=1, position=100.0, velocity=5.0,
                       mode=Mode.EMERGENCY)
        leader = TrainState(id=0, position=20000.0, velocity=KIN.v_max)
        train_step(t, CFG, KIN, True, leader, 0.0)
        assert t.mode is Mode.EMERGENCY
        assert t.acceleration == -KIN.decel_emergency
        assert t.velocity == 5.0 - KIN.decel_emergency * CFG.dt

    def test_at_rest_stays_put_while_blocked(self):
        t = TrainState(id=1, position=900.0, velocity=0.0,
                       mode=Mode.EMERGENCY, fbs_slots_remaining=40)
        leader = TrainState(id=0, position=1100.0, velocity=0.0)
        train_step(t, CFG, KIN, True, leader, 0.0)
        assert t.mode is Mode.EMERGENCY
        assert t.velocity == 0.0
        assert t.acceleration == 0.0
        assert t.position == 900.0

    def test_at_rest_released_resumes_held_stint(self):
        t = TrainState(id=1, position=900.0, velocity=0.0,
                       mode=Mode.EMERGENCY, fbs_slots_remaining=40)
        leader = TrainState(id=0, position=2500.0, velocity=KIN.v_max)
        train_step(t, CFG, KIN, True, leader, 0.0)
        assert t.mode is Mode.FBS
        assert t.acceleration == KIN.accel_alpha
        assert t.velocity == KIN.accel_alpha * CFG.dt
        assert t.fbs_slots_remaining == 39


class TestDwellAndArrival:
    def test_arrival_snaps_to_platform(self):
        # plan comes from the departure point; the state is mid-approach
        t = TrainState(id=0, velocity=KIN.v_max)
        t.plan = solve_plan(KIN, 0.0, 2800.0)
        t.position = 2796.0
        train_step(t, CFG, KIN, True, None, 0.0)
        assert t.mode is Mode.DWELL
        assert t.position == 2800.0
        assert t.velocity == 0.0
        assert t.dwell_remaining == CFG.dwell_slots
        assert t.next_station_index == 2

    def test_dwell_counts_down_in_place(self):
        t = TrainState(id=0, position=2800.0, mode=Mode.DWELL,
                       dwell_remaining=3, next_station_index=2)
        train_step(t, CFG, KIN, True, None, 0.0)
        assert t.mode is Mode.DWELL
        assert t.dwell_remaining == 2
        assert t.position == 2800.0
        assert t.acceleration == 0.0

    def test_departure_replans_and_pulls_away(self):
        t = TrainState(id=0, position=2800.0, mode=Mode.DWELL,
                       dwell_remaining=0, next_station_index=2)
        train_step(t, CFG, KIN, True, None, 40.0)
        assert t.next_station_index == 3
        assert t.mode is Mode.MBS
        assert t.plan.start_time == 40.0
        assert t.velocity == KIN.accel_alpha * CFG.dt

    def test_departure_under_link_outage_enters_fallback(self):
        t = TrainState(id=1, position=2800.0, mode=Mode.DWELL,
                       dwell_remaining=0, next_station_index=2,
                       pkt_loss_counter=7)
        t.leader = LeaderEstimate(20000.0, KIN.v_max, 0.0, 7)
        leader = TrainState(id=0, position=20000.0, velocity=KIN.v_max)
        train_step(t, CFG, KIN, False, leader, 40.0)
        assert t.mode is Mode.FBS
        assert t.fbs_slots_remaining == CFG.fbs_hold_slots - 1
        assert t.velocity == KIN.accel_alpha * CFG.dt

    def test_terminus_marks_done(self):
        cfg = SignalingConfig(num_stations=2)
        t = TrainState(id=0, velocity=KIN.v_max)
        t.plan = solve_plan(KIN, 0.0, 2800.0)
        t.position = 2796.0
        train_step(t, cfg, KIN, True, None, 0.0)
        assert t.mode is Mode.DONE
        assert t.position == 2800.0
        # done trains are inert
        train_step(t, cfg, KIN, True, None, 0.25)
        assert t.position == 2800.0
        assert t.mode is Mode.DONE


class TestProtectionInvariants:
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_random_link_outages_never_cause_overlap(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        leader = TrainState(id=0, position=3000.0, velocity=KIN.v_max,
                            next_station_index=3)
        _plan_to_next(leader)
        follower = TrainState(id=1)
        _plan_to_next(follower)
        for slot in range(1200):
            now = slot * CFG.dt
            snap = TrainState(id=0, position=leader.position,
                              velocity=leader.velocity,
                              acceleration=leader.acceleration,
                              mode=leader.mode)
            train_step(leader, CFG, KIN, True, None, now)
            pkt = bool(rng.random() < 0.5)
            train_step(follower, CFG, KIN, pkt, snap, now)
            assert follower.position < leader.position
            assert 0.0 <= follower.velocity <= KIN.v_max + 1e-9
            assert 0 <= follower.fbs_slots_remaining <= CFG.fbs_hold_slots
            assert follower.pkt_loss_counter >= 0
