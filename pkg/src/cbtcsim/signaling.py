"""Train-control modes: moving block, fixed-block fallback, emergency latch.

Each train normally runs under moving-block supervision (MBS): every slot it
receives its leader's state over the radio link, computes the dynamic
headway for the current speeds, and follows its minimum-time plan while the
estimated gap exceeds it. Radio degradation pushes the train into the
fixed-block fallback (FBS), driven by jam-proof track-circuit occupancy: it
must stop before the block ``block_threshold_bth`` short of its leader's,
and brakes with the emergency rate -- latched until standstill -- if the
block gap collapses or the stop target becomes unreachable. An FBS stint
lasts ``fbs_hold_slots`` slots; at expiry the train reverts to MBS as soon
as the packet-loss counter is back under the threshold.

The per-slot update lives in :func:`train_step`; it is the single source of
truth that the simulation engines replicate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .kinematics import (
    KinematicParams,
    LeaderEstimate,
    MotionPlan,
    cruise_speed,
    guidance_accel,
    headway_closed_form,
    solve_plan,
    step,
)

__all__ = [
    "Mode",
    "SignalingConfig",
    "TrainState",
    "block_index",
    "station_position",
    "train_step",
    "fixed_block_update",
]


class Mode(enum.IntEnum):
    MBS = 0
    FBS = 1
    EMERGENCY = 2
    DWELL = 3
    DONE = 4


@dataclass(frozen=True, slots=True)
class SignalingConfig:
    """Line layout and protection parameters.

    Attributes:
        dt: Slot duration, s.
        loss_threshold_n: Consecutive lost packets that force FBS.
        fbs_hold_slots: Minimum FBS stint length, slots.
        block_length: Fixed-block length, m.
        block_threshold_bth: Required block separation; an actual block gap
            at or below it triggers the emergency brake.
        station_spacing: Distance between adjacent stations, m.
        dwell_time: Station stop duration, s.
        num_stations: Stations on the line, terminus included.
        train_length: Train length subtracted from the estimated gap, m.
    """

    dt: float = 0.25
    loss_threshold_n: int = 8
    fbs_hold_slots: int = 120
    block_length: float = 400.0
    block_threshold_bth: int = 1
    station_spacing: float = 2800.0
    dwell_time: float = 30.0
    num_stations: int = 30
    train_length: float = 0.0

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        if self.loss_threshold_n < 1:
            raise ValueError("loss_threshold_n must be >= 1")
        if self.fbs_hold_slots < 1:
            raise ValueError("fbs_hold_slots must be >= 1")
        if self.block_length <= 0.0:
            raise ValueError("block_length must be > 0")
        if self.block_threshold_bth < 0:
            raise ValueError("block_threshold_bth must be >= 0")
        if self.station_spacing <= 0.0:
            raise ValueError("station_spacing must be > 0")
        if self.dwell_time < 0.0:
            raise ValueError("dwell_time must be >= 0")
        if self.num_stations < 2:
            raise ValueError("num_stations must be >= 2")
        if self.train_length < 0.0:
            raise ValueError("train_length must be >= 0")

    @property
    def dwell_slots(self) -> int:
        return int(round(self.dwell_time / self.dt))


@dataclass(slots=True)
class TrainState:
    """Mutable per-train simulation state."""

    id: int
    position: float = 0.0
    velocity: float = 0.0
    acceleration: float = 0.0
    mode: Mode = Mode.MBS
    pkt_loss_counter: int = 0
    fbs_slots_remaining: int = 0
    leader: LeaderEstimate | None = None
    plan: MotionPlan | None = None
    next_station_index: int = 2
    dwell_remaining: int = 0


def block_index(position: float, block_length: float) -> int:
    """1-based fixed-block index of a track position.

    A position exactly on a block boundary belongs to the upper block.
    """
    if block_length <= 0.0:
        raise ValueError("block_length must be > 0")
    if position < 0.0:
        raise ValueError("position must be >= 0")
    return int(math.floor(position / block_length)) + 1


def station_position(cfg: SignalingConfig, index: int) -> float:
    """Track position of station ``index`` (1-based), m."""
    return (index - 1) * cfg.station_spacing


def _enter_fbs(state: TrainState, cfg: SignalingConfig) -> None:
    state.mode = Mode.FBS
    state.fbs_slots_remaining = cfg.fbs_hold_slots


def _move(state: TrainState, a: float, dt: float) -> None:
    state.velocity, ds = step(state.velocity, a, dt)
    state.position += ds
    state.acceleration = a


def _check_arrival(state: TrainState, cfg: SignalingConfig, kin: KinematicParams) -> None:
    target = station_position(cfg, state.next_station_index)
    arrived = state.position >= target - 1e-9
    if (not arrived and state.velocity <= 0.0
            and target - state.position <= kin.v_max * cfg.dt):
        arrived = True  # tracker stops may land up to one slot short
    if not arrived:
        return
    state.position = target
    state.velocity = 0.0
    state.acceleration = 0.0
    state.fbs_slots_remaining = 0
    if state.next_station_index >= cfg.num_stations:
        state.mode = Mode.DONE
    else:
        state.mode = Mode.DWELL
        state.dwell_remaining = cfg.dwell_slots


def fixed_block_update(
    state: TrainState,
    cfg: SignalingConfig,
    kin: KinematicParams,
    true_leader: "TrainState | None",
) -> TrainState:
    """One slot of fixed-block supervision (track-circuit driven).

    The train plans a stop at whichever is nearer of its next station and
    the start of the block ``block_threshold_bth`` short of the leader's
    current block. A block gap at or below the threshold, a stop target at
    or behind the train, or a target unreachable with the service brake all
    trip the emergency brake, which stays latched until standstill.
    """
    a = _fixed_block_accel(state, cfg, kin, true_leader)
    _move(state, a, cfg.dt)
    _check_arrival(state, cfg, kin)
    return state


def _fixed_block_accel(
    state: TrainState,
    cfg: SignalingConfig,
    kin: KinematicParams,
    true_leader: "TrainState | None",
) -> float:
    station = station_position(cfg, state.next_station_index)
    if true_leader is None:
        target = station
    else:
        b_leader = block_index(true_leader.position, cfg.block_length)
        b_self = block_index(state.position, cfg.block_length)
        if b_leader - b_self <= cfg.block_threshold_bth:
            state.mode = Mode.EMERGENCY
            return -kin.decel_emergency
        limit = (b_leader - cfg.block_threshold_bth - 1) * cfg.block_length
        target = limit if limit < station else station
    s_rem = target - state.position
    v = state.velocity
    if s_rem <= 0.0 or s_rem < v * v / (2.0 * kin.decel_service) - 1e-9:
        state.mode = Mode.EMERGENCY
        return -kin.decel_emergency
    vc = cruise_speed(kin, v, s_rem)
    return guidance_accel(kin, v, vc, s_rem, cfg.dt)


def train_step(
    state: TrainState,
    cfg: SignalingConfig,
    kin: KinematicParams,
    pkt_received: bool,
    true_leader: "TrainState | None",
    now: float,
) -> TrainState:
    """Advance one train by one slot.

    ``pkt_received`` is this slot's link outcome (evaluated by the caller
    against the channel model); ``true_leader`` is the leading train's state
    at the start of the slot, or None for the lead train and for a train
    whose leader has reached the terminus. The returned object is ``state``
    mutated in place.
    """
    if state.mode is Mode.DONE:
        return state
    dt = cfg.dt
    has_leader = true_leader is not None

    # Link bookkeeping runs in every active mode: a success refreshes the
    # leader estimate and clears the loss counter, a loss ages both.
    if has_leader:
        if pkt_received:
            state.pkt_loss_counter = 0
            est = state.leader
            if est is None:
                state.leader = LeaderEstimate(
                    true_leader.position, true_leader.velocity,
                    true_leader.acceleration, 0)
            else:
                est.position = true_leader.position
                est.velocity = true_leader.velocity
                est.acceleration = true_leader.acceleration
                est.age_slots = 0
        else:
            state.pkt_loss_counter += 1
            if state.leader is not None:
                state.leader.age_slots += 1
    else:
        state.pkt_loss_counter = 0

    if state.mode is Mode.DWELL:
        if state.dwell_remaining > 0:
            state.dwell_remaining -= 1
            state.acceleration = 0.0
            return state
        # Departure: replan from rest to the next stop and pick the mode by
        # the current link health.
        state.next_station_index += 1
        target = station_position(cfg, state.next_station_index)
        state.plan = solve_plan(kin, 0.0, target - state.position, start_time=now)
        if has_leader and state.pkt_loss_counter >= cfg.loss_threshold_n:
            _enter_fbs(state, cfg)
        else:
            state.mode = Mode.MBS

    if state.mode is Mode.EMERGENCY:
        if state.velocity > 0.0:
            _move(state, -kin.decel_emergency, dt)
            _check_arrival(state, cfg, kin)
            return state
        clear = (not has_leader) or (
            block_index(true_leader.position, cfg.block_length)
            - block_index(state.position, cfg.block_length)
            > cfg.block_threshold_bth)
        if not clear:
            state.acceleration = 0.0
            return state
        state.mode = Mode.FBS  # latch released: resume the held stint

    # A train whose leader has left the line runs unconstrained.
    if not has_leader and state.mode is Mode.FBS:
        state.mode = Mode.MBS
        state.fbs_slots_remaining = 0
        srem = station_position(cfg, state.next_station_index) - state.position
        state.plan = solve_plan(kin, state.velocity, srem, start_time=now)

    if state.mode is Mode.MBS:
        enter_fallback = False
        if has_leader:
            if state.pkt_loss_counter >= cfg.loss_threshold_n or state.leader is None:
                enter_fallback = True
            else:
                est = state.leader
                h = headway_closed_form(kin, state.velocity, est.velocity, dt)
                gap = est.position - cfg.train_length - state.position
                if gap <= h:
                    enter_fallback = True
        if not enter_fallback:
            srem = station_position(cfg, state.next_station_index) - state.position
            a = guidance_accel(kin, state.velocity, state.plan.v1, srem, dt)
            _move(state, a, dt)
            _check_arrival(state, cfg, kin)
            return state
        _enter_fbs(state, cfg)

    # Fixed-block slot (fresh entry included), then hold bookkeeping. The
    # hold counter is frozen while the emergency latch is engaged and the
    # revert to MBS waits for the loss counter to drop back under the
    # threshold -- then happens promptly, without re-arming the hold.
    fixed_block_update(state, cfg, kin, true_leader)
    if state.mode is Mode.FBS:
        state.fbs_slots_remaining -= 1
        if state.fbs_slots_remaining < 0:
            state.fbs_slots_remaining = 0
        if state.fbs_slots_remaining == 0 and (
                not has_leader or state.pkt_loss_counter < cfg.loss_threshold_n):
            state.mode = Mode.MBS
            srem = station_position(cfg, state.next_station_index) - state.position
            state.plan = solve_plan(kin, state.velocity, srem, start_time=now)
    return state
