"""Passenger demand, station queues, and boarding mechanics.

Passengers tap in at an origin station at a wall-clock offset and queue
FIFO. When a train opens its doors, alighting happens first, then the queue
boards up to the free capacity. Whoever does not fit waits for the next
train. Queue-length deltas feed the congestion series.
"""

from __future__ import annotations

import csv
import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

_DATASET_FIELDS = ("passenger_id", "origin_station", "destination_station",
                   "tap_in_time_s")


@dataclass(frozen=True, slots=True)
class PassengerRecord:
    """One tap-in: who, where from, where to, when (seconds)."""

    id: int
    origin_station: int
    destination_station: int
    tap_in_time: float


@dataclass(frozen=True, slots=True)
class PassengerOutcome:
    id: int
    origin_station: int
    destination_station: int
    tap_in_time: float
    board_time: float
    arrival_time: float

    @property
    def wait_time(self) -> float:
        return self.board_time - self.tap_in_time

    @property
    def journey_time(self) -> float:
        return self.arrival_time - self.tap_in_time


def load_dataset(path: str) -> list[PassengerRecord]:
    """Read tap-in records from a CSV file.

    Expected header:
    ``passenger_id,origin_station,destination_station,tap_in_time_s``.
    Rows whose destination is not strictly downstream of the origin are
    dropped with a warning; structurally bad rows raise ValueError with
    the line number.
    """
    records: list[PassengerRecord] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if [h.strip() for h in header] != list(_DATASET_FIELDS):
            raise ValueError(
                f"{path}: expected header {','.join(_DATASET_FIELDS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                pid = int(row[0])
                origin = int(row[1])
                dest = int(row[2])
                tap = float(row[3])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if origin < 1 or dest < 1:
                raise ValueError(f"{path}:{lineno}: station indices are 1-based")
            if tap < 0.0:
                raise ValueError(f"{path}:{lineno}: tap_in_s must be >= 0")
            if dest <= origin:
                logger.warning(
                    "%s:%d: passenger %d rides %d -> %d, not downstream; dropped",
                    path, lineno, pid, origin, dest)
                continue
            records.append(PassengerRecord(pid, origin, dest, tap))
    records.sort(key=lambda r: (r.tap_in_time, r.origin_station, r.id))
    return records


def gen_synthetic(
    seed: int | np.random.SeedSequence,
    num_stations: int,
    duration: float,
    rate_per_station: float,
) -> list[PassengerRecord]:
    """Draw a Poisson tap-in stream per boarding station.

    Each station except the terminus gets ``Poisson(rate * duration)``
    passengers with tap times uniform over the window and destinations
    uniform over the downstream stations. Ids are assigned in global
    tap-time order so the output is already replay-ordered.
    """
    if num_stations < 2:
        raise ValueError("num_stations must be >= 2")
    if duration < 0.0 or rate_per_station < 0.0:
        raise ValueError("duration and rate_per_station must be >= 0")
    rng = np.random.default_rng(seed)
    raw: list[tuple[float, int, int]] = []
    for origin in range(1, num_stations):
        count = int(rng.poisson(rate_per_station * duration))
        if count == 0:
            continue
        taps = np.sort(rng.uniform(0.0, duration, size=count))
        dests = rng.integers(origin + 1, num_stations + 1, size=count)
        raw.extend(zip(taps.tolist(), [origin] * count, dests.tolist()))
    raw.sort(key=lambda r: (r[0], r[1]))
    return [
        PassengerRecord(pid, origin, int(dest), tap)
        for pid, (tap, origin, dest) in enumerate(raw, start=1)
    ]


def board_and_alight(
    queue: deque[PassengerRecord],
    onboard: list[tuple[PassengerRecord, float]],
    station: int,
    capacity: int,
    now: float,
) -> tuple[list[PassengerOutcome], list[PassengerRecord]]:
    """Open the doors once: alight finishers, board the queue head in FIFO.

    ``onboard`` holds ``(record, board_time)`` pairs and is mutated along
    with ``queue``. Returns the outcomes of passengers whose ride ends here
    (arrival stamped ``now``) and the records that boarded at ``now``.
    """
    alighted: list[PassengerOutcome] = []
    kept: list[tuple[PassengerRecord, float]] = []
    for rec, board_t in onboard:
        if rec.destination_station == station:
            alighted.append(PassengerOutcome(
                rec.id, rec.origin_station, rec.destination_station,
                rec.tap_in_time, board_t, now))
        else:
            kept.append((rec, board_t))
    onboard[:] = kept
    boarded: list[PassengerRecord] = []
    while queue and len(onboard) < capacity:
        rec = queue.popleft()
        onboard.append((rec, now))
        boarded.append(rec)
    return alighted, boarded


def congestion_series(
    events: list[tuple[float, int, int, int]],
) -> list[tuple[int, float, int]]:
    """Fold queue-delta events into per-station waiting-count samples.

    ``events`` are ``(time, station, delta, seq)``; simultaneous events
    apply boardings (negative deltas) before tap-ins, then by sequence.
    Returns one ``(station, time, count)`` row per station per distinct
    event time.
    """
    per_station: dict[int, list[tuple[float, int, int]]] = {}
    for time, station, delta, seq in events:
        per_station.setdefault(station, []).append((time, delta, seq))
    series: list[tuple[int, float, int]] = []
    for station in sorted(per_station):
        rows = sorted(per_station[station], key=lambda e: (e[0], e[1], e[2]))
        count = 0
        i = 0
        n = len(rows)
        while i < n:
            t = rows[i][0]
            while i < n and rows[i][0] == t:
                count += rows[i][1]
                i += 1
            series.append((station, t, count))
    return series
