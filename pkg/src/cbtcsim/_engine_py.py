"""Pure-Python train-phase engine.

Drives :func:`cbtcsim.signaling.train_step` slot by slot for every
dispatched train. This is the reference implementation; the compiled engine
in ``cbtcsim._core`` replicates it operation for operation and must produce
bit-identical results. Correct but slower -- prefer the compiled engine for
full-size scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import link_sinr
from .config import ScenarioConfig
from .kinematics import LeaderEstimate, solve_plan
from .signaling import Mode, TrainState, station_position, train_step


@dataclass(slots=True)
class _LeaderView:
    position: float
    velocity: float
    acceleration: float


@dataclass(slots=True)
class TrainPhaseResult:
    """Raw outcome of the train phase, consumed by the passenger replay."""

    num_trains: int
    scheduled_dispatch_s: list[float]
    first_move_s: list[float | None]
    completed: list[bool]
    arrival_s: list[float | None]
    # per train: 1-based station index -> time, s
    station_arrival_s: list[dict[int, float]]
    station_departure_s: list[dict[int, float]]
    trace: list[tuple[float, float, float, int]] | None = None
    engine: str = "python"


def run_trains(
    cfg: ScenarioConfig,
    trace_train: int | None = None,
    fading_rng=None,
) -> TrainPhaseResult:
    """Simulate all dispatched trains to completion (or the safety cap)."""
    sig = cfg.signaling
    kin = cfg.kinematics
    chan = cfg.channel
    jam = cfg.jammer
    fhss = cfg.fhss
    dt = sig.dt
    n_trains = cfg.num_trains
    interval_slots = int(round(cfg.dispatch_interval / dt))
    cap_slots = int(math.ceil(cfg.max_sim_time / dt))
    tau = chan.sinr_threshold_tau
    fade = chan.fading_enabled and fading_rng is not None
    sigma = chan.fading_sigma

    res = TrainPhaseResult(
        num_trains=n_trains,
        scheduled_dispatch_s=[i * cfg.dispatch_interval for i in range(n_trains)],
        first_move_s=[None] * n_trains,
        completed=[False] * n_trains,
        arrival_s=[None] * n_trains,
        station_arrival_s=[{} for _ in range(n_trains)],
        station_departure_s=[{} for _ in range(n_trains)],
        trace=[] if trace_train is not None else None,
    )

    states: list[TrainState | None] = [None] * n_trains
    snap_pos = [0.0] * n_trains
    snap_vel = [0.0] * n_trains
    snap_acc = [0.0] * n_trains
    done = [False] * n_trains
    first_not_done = 0
    spacing = sig.station_spacing

    slot = 0
    while first_not_done < n_trains and slot < cap_slots:
        t = slot * dt
        last = min(n_trains, slot // interval_slots + 1)
        for i in range(first_not_done, last):
            st = states[i]
            if st is None:
                # Dispatch, held while the leader is still inside the first
                # block (platform interlock); journey time still counts from
                # the scheduled dispatch.
                if i > 0:
                    lead = states[i - 1]
                    if lead is None or (
                            lead.mode is not Mode.DONE
                            and lead.position < sig.block_length):
                        continue
                st = TrainState(id=i + 1)
                st.plan = solve_plan(kin, 0.0, spacing, start_time=t)
                if i > 0 and states[i - 1].mode is not Mode.DONE:
                    st.leader = LeaderEstimate(
                        snap_pos[i - 1], snap_vel[i - 1], snap_acc[i - 1], 0)
                states[i] = st
                res.first_move_s[i] = t
                res.station_departure_s[i][1] = t
            if st.mode is Mode.DONE:
                continue
            snap_pos[i] = st.position
            snap_vel[i] = st.velocity
            snap_acc[i] = st.acceleration

            leader = None
            if i > 0 and states[i - 1].mode is not Mode.DONE:
                leader = _LeaderView(snap_pos[i - 1], snap_vel[i - 1],
                                     snap_acc[i - 1])

            if leader is None:
                sinr_db = math.inf
                pkt = True
            else:
                if fade:
                    draws = (fading_rng.normal(0.0, sigma),
                             fading_rng.normal(0.0, sigma))
                else:
                    draws = (0.0, 0.0)
                sinr_db = link_sinr(
                    chan, jam, fhss,
                    leader.position / 1000.0, st.position / 1000.0, draws)
                pkt = sinr_db >= tau

            if trace_train == i:
                res.trace.append((t, st.position, sinr_db, 1 if pkt else 0))

            pre_mode = st.mode
            train_step(st, sig, kin, pkt, leader, t)

            if st.mode is Mode.DWELL and pre_mode is not Mode.DWELL:
                res.station_arrival_s[i][st.next_station_index] = (slot + 1) * dt
            elif pre_mode is Mode.DWELL and st.mode is not Mode.DWELL:
                res.station_departure_s[i][st.next_station_index - 1] = t
            elif st.mode is Mode.DONE:
                arr = (slot + 1) * dt
                res.station_arrival_s[i][sig.num_stations] = arr
                res.arrival_s[i] = arr
                res.completed[i] = True
                done[i] = True
                while first_not_done < n_trains and done[first_not_done]:
                    first_not_done += 1
        slot += 1
    return res
