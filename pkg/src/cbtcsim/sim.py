"""Scenario orchestration: trains first, then the passenger replay.

A run has two phases. The train phase advances every dispatched train slot
by slot under the signaling rules and records station arrival and departure
times. The passenger phase then replays those door events against the
demand stream: FIFO queues per station, capacity-limited boarding, and a
congestion series built from queue deltas. Both phases are driven entirely
by the scenario config and the master seed, so a run is reproducible bit
for bit.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import _engine_py
from .config import ConfigError, ScenarioConfig
from .passengers import (
    PassengerOutcome,
    PassengerRecord,
    board_and_alight,
    congestion_series,
    gen_synthetic,
    load_dataset,
)

__all__ = [
    "TrainResult",
    "SimResult",
    "run_scenario",
    "compare_runs",
    "sweep_fhss",
]


@dataclass(frozen=True, slots=True)
class TrainResult:
    """Per-train journey record (times in seconds from run start)."""

    train_id: int
    scheduled_dispatch_s: float
    first_move_s: float | None
    arrival_s: float | None
    completed: bool
    station_arrival_s: dict[int, float]
    station_departure_s: dict[int, float]

    @property
    def journey_s(self) -> float | None:
        """Terminus arrival minus *scheduled* dispatch; holds count as delay."""
        if not self.completed or self.arrival_s is None:
            return None
        return self.arrival_s - self.scheduled_dispatch_s


@dataclass(slots=True)
class SimResult:
    config: ScenarioConfig
    engine: str
    trains: list[TrainResult]
    records: list[PassengerRecord]
    passengers: list[PassengerOutcome]
    congestion: list[tuple[int, float, int]]
    summary: dict
    trace: list[tuple[float, float, float, int]] | None = None


def _resolve_engine(cfg: ScenarioConfig):
    """Pick the train-phase engine: env override, then config, then auto."""
    choice = os.environ.get("CBTCSIM_ENGINE", "").strip().lower() or cfg.engine
    if choice not in ("auto", "python", "cython"):
        raise ConfigError(f"unknown engine {choice!r}")
    fading = cfg.channel.fading_enabled
    if choice == "cython" and fading:
        raise ConfigError("the compiled engine does not support shadow fading; "
                          "use engine=python")
    if choice == "python" or (choice == "auto" and fading):
        return "python", _engine_py.run_trains
    try:
        from . import _core
    except ImportError:
        if choice == "cython":
            raise ConfigError(
                "engine=cython requested but the compiled extension is not "
                "built") from None
        return "python", _engine_py.run_trains
    return "cython", _core.run_trains


def _demand(cfg: ScenarioConfig,
            seed: np.random.SeedSequence) -> list[PassengerRecord]:
    src = cfg.demand_source
    if src == "none":
        return []
    sig = cfg.signaling
    if src == "synthetic":
        return gen_synthetic(seed, sig.num_stations, cfg.sim_duration,
                             cfg.demand_rate)
    records = load_dataset(src)
    for r in records:
        if r.destination_station > sig.num_stations:
            raise ValueError(
                f"passenger {r.id} rides to station {r.destination_station}, "
                f"but the line has {sig.num_stations}")
    return records


def _replay(cfg: ScenarioConfig, records: list[PassengerRecord],
            door: "_engine_py.TrainPhaseResult") -> tuple[
        list[PassengerOutcome], list[tuple[int, float, int]]]:
    """Feed the demand stream through the recorded door events."""
    sig = cfg.signaling
    capacity = cfg.train_capacity

    by_origin: dict[int, list[PassengerRecord]] = {}
    for r in records:
        by_origin.setdefault(r.origin_station, []).append(r)
    ptr = dict.fromkeys(by_origin, 0)
    queues: dict[int, deque[PassengerRecord]] = {
        s: deque() for s in by_origin}
    empty: deque[PassengerRecord] = deque()

    events: list[tuple[float, int, int, int]] = []
    seq = 0
    for r in records:
        events.append((r.tap_in_time, r.origin_station, 1, seq))
        seq += 1

    # (doors open, train, station, doors close); a train can occupy a
    # station only after its leader left it, so per-station order follows
    # the global time order.
    visits: list[tuple[float, int, int, float]] = []
    for i in range(door.num_trains):
        dep1 = door.station_departure_s[i].get(1)
        if dep1 is not None:
            visits.append((dep1, i, 1, dep1))
        for s, arr in door.station_arrival_s[i].items():
            if s >= sig.num_stations:
                visits.append((arr, i, s, arr))
            else:
                dep = door.station_departure_s[i].get(s, arr + sig.dwell_time)
                visits.append((arr, i, s, dep))
    visits.sort(key=lambda v: (v[0], v[1], v[2]))

    onboard: list[list[tuple[PassengerRecord, float]]] = [
        [] for _ in range(door.num_trains)]
    outcomes: list[PassengerOutcome] = []
    for t_open, i, s, t_close in visits:
        q = queues.get(s, empty)
        recs = by_origin.get(s)
        if recs is not None:
            k = ptr[s]
            while k < len(recs) and recs[k].tap_in_time <= t_open:
                q.append(recs[k])
                k += 1
            ptr[s] = k
        ob = onboard[i]
        cap = 0 if s >= sig.num_stations else capacity
        alighted, boarded = board_and_alight(q, ob, s, cap, t_open)
        outcomes.extend(alighted)
        for _rec in boarded:
            events.append((t_open, s, -1, seq))
            seq += 1
        if t_close > t_open and recs is not None:
            # Tap-ins during the dwell: straight onto the train while there
            # is room and nobody queues ahead, otherwise to the back.
            k = ptr[s]
            while k < len(recs) and recs[k].tap_in_time <= t_close:
                rec = recs[k]
                if not q and len(ob) < capacity:
                    ob.append((rec, rec.tap_in_time))
                    events.append((rec.tap_in_time, s, -1, seq))
                    seq += 1
                else:
                    q.append(rec)
                k += 1
            ptr[s] = k
    outcomes.sort(key=lambda o: o.id)
    return outcomes, congestion_series(events)


def _round6(x: float | None) -> float | None:
    return None if x is None else round(x, 6)


def _summarize(engine: str, cfg: ScenarioConfig, trains: list[TrainResult],
               records: list[PassengerRecord],
               outcomes: list[PassengerOutcome],
               congestion: list[tuple[int, float, int]]) -> dict:
    journeys = [t.journey_s for t in trains if t.journey_s is not None]
    peak = 0
    peak_station = None
    for station, _t, count in congestion:
        if count > peak:
            peak = count
            peak_station = station
    waits = [o.wait_time for o in outcomes]
    rides = [o.journey_time for o in outcomes]
    return {
        "engine": engine,
        "master_seed": cfg.master_seed,
        "trains": {
            "scheduled": len(trains),
            "dispatched": sum(1 for t in trains if t.first_move_s is not None),
            "completed": len(journeys),
            "mean_journey_s": _round6(
                sum(journeys) / len(journeys) if journeys else None),
            "min_journey_s": _round6(min(journeys) if journeys else None),
            "max_journey_s": _round6(max(journeys) if journeys else None),
        },
        "passengers": {
            "generated": len(records),
            "served": len(outcomes),
            "unserved": len(records) - len(outcomes),
            "mean_wait_s": _round6(sum(waits) / len(waits) if waits else None),
            "mean_journey_s": _round6(
                sum(rides) / len(rides) if rides else None),
            "peak_waiting": peak,
            "peak_waiting_station": peak_station,
        },
    }


def run_scenario(cfg: ScenarioConfig,
                 trace_train: int | None = None) -> SimResult:
    """Run one scenario end to end.

    ``trace_train`` (1-based) additionally captures that train's per-slot
    link trace: time, position, link SINR, packet outcome.
    """
    engine, run_trains = _resolve_engine(cfg)
    if trace_train is not None and not 1 <= trace_train <= cfg.num_trains:
        raise ValueError(
            f"trace train {trace_train} out of range 1..{cfg.num_trains}")

    seed_root = np.random.SeedSequence(cfg.master_seed)
    demand_seed, fading_seed = seed_root.spawn(2)
    fading_rng = (np.random.default_rng(fading_seed)
                  if cfg.channel.fading_enabled else None)

    door = run_trains(
        cfg,
        trace_train=None if trace_train is None else trace_train - 1,
        fading_rng=fading_rng)
    records = _demand(cfg, demand_seed)
    outcomes, congestion = _replay(cfg, records, door)

    trains = [
        TrainResult(
            train_id=i + 1,
            scheduled_dispatch_s=door.scheduled_dispatch_s[i],
            first_move_s=door.first_move_s[i],
            arrival_s=door.arrival_s[i],
            completed=door.completed[i],
            station_arrival_s=dict(door.station_arrival_s[i]),
            station_departure_s=dict(door.station_departure_s[i]),
        )
        for i in range(door.num_trains)
    ]
    summary = _summarize(engine, cfg, trains, records, outcomes, congestion)
    return SimResult(
        config=cfg,
        engine=engine,
        trains=trains,
        records=records,
        passengers=outcomes,
        congestion=congestion,
        summary=summary,
        trace=door.trace,
    )


def compare_runs(attack: SimResult, baseline: SimResult) -> dict:
    """Relative impact of an attack run over its baseline.

    Train impact is the mean over trains completed in both runs of each
    train's percentage journey-time increase; passenger impact compares the
    mean passenger journey time over the ids served in both runs.
    """
    if len(attack.trains) != len(baseline.trains):
        raise ValueError("runs dispatch different train counts")
    per_train: list[float] = []
    for a, b in zip(attack.trains, baseline.trains):
        ja, jb = a.journey_s, b.journey_s
        if ja is None or jb is None:
            continue
        per_train.append((ja - jb) / jb * 100.0)
    if not per_train:
        raise ValueError("no train completed in both runs")

    base_by_id = {o.id: o for o in baseline.passengers}
    common = [(o, base_by_id[o.id]) for o in attack.passengers
              if o.id in base_by_id]
    passenger_pct: float | None = None
    if common:
        mean_a = sum(o.journey_time for o, _ in common) / len(common)
        mean_b = sum(b.journey_time for _, b in common) / len(common)
        if mean_b > 0.0:
            passenger_pct = (mean_a - mean_b) / mean_b * 100.0
    return {
        "train_pct_increase": sum(per_train) / len(per_train),
        "passenger_pct_increase": passenger_pct,
        "per_train_pct": per_train,
        "n_common_trains": len(per_train),
        "n_common_passengers": len(common),
    }


def _with_jammer(cfg: ScenarioConfig, active: bool) -> ScenarioConfig:
    return replace(cfg, jammer=replace(cfg.jammer, active=active))


def _with_fhss(cfg: ScenarioConfig, n: int) -> ScenarioConfig:
    if n == 0:
        return replace(cfg, fhss=replace(cfg.fhss, enabled=False))
    return replace(cfg, fhss=replace(cfg.fhss, enabled=True, n_channels=n))


def _sweep_point(args: tuple[ScenarioConfig, int]) -> dict:
    cfg, n = args
    attack = run_scenario(_with_fhss(_with_jammer(cfg, True), n))
    baseline = run_scenario(_with_jammer(cfg, False))
    cmp = compare_runs(attack, baseline)
    return {
        "n": n,
        "train_pct_increase": cmp["train_pct_increase"],
        "passenger_pct_increase": cmp["passenger_pct_increase"],
    }


def sweep_fhss(cfg: ScenarioConfig, n_values: list[int],
               jobs: int = 1) -> list[dict]:
    """Impact versus hop-set size, against a common jammer-off baseline.

    ``n = 0`` means the countermeasure is disabled entirely; every point
    runs with the jammer forced on and the same master seed.
    """
    for n in n_values:
        if n < 0:
            raise ValueError("n_channels must be >= 0")
    if jobs <= 1 or len(n_values) <= 1:
        baseline = run_scenario(_with_jammer(cfg, False))
        rows = []
        for n in n_values:
            attack = run_scenario(_with_fhss(_with_jammer(cfg, True), n))
            cmp = compare_runs(attack, baseline)
            rows.append({
                "n": n,
                "train_pct_increase": cmp["train_pct_increase"],
                "passenger_pct_increase": cmp["passenger_pct_increase"],
            })
        return rows
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, [(cfg, n) for n in n_values]))
