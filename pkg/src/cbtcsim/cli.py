"""Command-line front end.

Subcommands:

* ``run`` -- simulate one scenario and write the result tables.
* ``sweep-fhss`` -- impact versus hop-set size against a jammer-off baseline.
* ``sinr-trace`` -- per-slot link trace for one train.
* ``gen-passengers`` -- write a synthetic tap-in dataset.
* ``validate-config`` -- parse and check a scenario file.

Exit codes: 0 on success, 1 for config or data errors, 2 for I/O errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .config import ConfigError, load_scenario, validate_scenario
from .passengers import gen_synthetic
from .sim import run_scenario, sweep_fhss

_EPOCH_S = 8 * 3600  # service day starts 08:00:00


def _clock(seconds: float) -> str:
    """Wall-clock label for a sim offset, HH:MM:SS with centiseconds if any."""
    total = (_EPOCH_S + seconds) % 86400.0
    h = int(total // 3600.0)
    m = int((total - h * 3600.0) // 60.0)
    s = total - h * 3600.0 - m * 60.0
    if abs(s - round(s)) < 5e-9:
        return f"{h:02d}:{m:02d}:{int(round(s)):02d}"
    return f"{h:02d}:{m:02d}:{s:05.2f}"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_rows(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_run(out_dir: str, result) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _write_rows(
        os.path.join(out_dir, "trains.csv"),
        ["train", "dispatch_s", "dispatch_clock", "arrival_s",
         "arrival_clock", "journey_s", "completed"],
        ((t.train_id, t.scheduled_dispatch_s, _clock(t.scheduled_dispatch_s),
          t.arrival_s, None if t.arrival_s is None else _clock(t.arrival_s),
          t.journey_s, t.completed)
         for t in result.trains))
    outcome = {o.id: o for o in result.passengers}
    _write_rows(
        os.path.join(out_dir, "passengers.csv"),
        ["passenger_id", "origin", "destination", "tap_in_s", "board_s",
         "arrival_s", "wait_s", "journey_s"],
        ((r.id, r.origin_station, r.destination_station, r.tap_in_time,
          o.board_time if o else None, o.arrival_time if o else None,
          o.wait_time if o else None, o.journey_time if o else None)
         for r, o in ((r, outcome.get(r.id)) for r in result.records)))
    _write_rows(
        os.path.join(out_dir, "congestion.csv"),
        ["station", "time_s", "waiting_count"],
        result.congestion)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if result.trace is not None:
        _write_trace(os.path.join(out_dir, "trace.csv"), result.trace)


def _write_trace(path: str, trace) -> None:
    _write_rows(path, ["time_s", "position_m", "sinr_db", "pkt_rec"], trace)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.config)
    if args.engine is not None:
        cfg = replace(cfg, engine=args.engine)
    result = run_scenario(cfg, trace_train=args.trace_train)
    _write_run(args.out, result)
    t = result.summary["trains"]
    print(f"{t['completed']}/{t['scheduled']} trains completed "
          f"({result.engine} engine); results in {args.out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.config)
    try:
        n_values = [int(v) for v in args.n_list.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"--n-list must be comma-separated integers, "
                          f"got {args.n_list!r}") from None
    if not n_values:
        raise ConfigError("--n-list is empty")
    rows = sweep_fhss(cfg, n_values, jobs=args.jobs)
    _write_rows(
        args.out,
        ["n", "train_pct_increase", "passenger_pct_increase"],
        ((r["n"], r["train_pct_increase"], r["passenger_pct_increase"])
         for r in rows))
    print(f"{len(rows)} sweep points written to {args.out}")
    return 0


def _cmd_trace(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.config)
    result = run_scenario(cfg, trace_train=args.train_index)
    _write_trace(args.out, result.trace)
    print(f"{len(result.trace)} trace rows for train {args.train_index} "
          f"written to {args.out}")
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    if args.num_stations < 2:
        raise ConfigError("--num-stations must be >= 2")
    if args.duration < 0 or args.rate < 0:
        raise ConfigError("--duration and --rate must be >= 0")
    records = gen_synthetic(args.seed, args.num_stations, args.duration,
                            args.rate)
    _write_rows(
        args.out,
        ["passenger_id", "origin_station", "destination_station",
         "tap_in_time_s"],
        ((r.id, r.origin_station, r.destination_station, r.tap_in_time)
         for r in records))
    print(f"{len(records)} passengers written to {args.out}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = validate_scenario(args.config)
    sig = cfg.signaling
    print(f"ok: {sig.num_stations} stations, {cfg.num_trains} trains "
          f"scheduled, medium {cfg.channel.medium.value}, "
          f"jammer {'on' if cfg.jammer.active else 'off'}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbtcsim",
        description="Metro line co-simulation: train control under radio "
                    "jamming and the passenger fallout.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("--config", required=True, help="scenario INI file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--engine", choices=["auto", "python", "cython"],
                   help="override the engine choice from the config")
    p.add_argument("--trace-train", type=int, default=None,
                   help="also write trace.csv for this train (1-based)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep-fhss",
                       help="impact vs. hop-set size, jammer-off baseline")
    p.add_argument("--config", required=True, help="scenario INI file")
    p.add_argument("--n-list", required=True,
                   help="comma-separated hop-set sizes, 0 = disabled")
    p.add_argument("--out", required=True, help="output CSV file")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes for the sweep points")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("sinr-trace", help="per-slot link trace for one train")
    p.add_argument("--config", required=True, help="scenario INI file")
    p.add_argument("--train-index", type=int, required=True,
                   help="train to trace (1-based)")
    p.add_argument("--out", required=True, help="output CSV file")
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("gen-passengers",
                       help="write a synthetic tap-in dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-stations", type=int, default=30)
    p.add_argument("--duration", type=float, default=7200.0,
                   help="tap-in window length, s")
    p.add_argument("--rate", type=float, default=0.05,
                   help="tap-ins per second per station")
    p.add_argument("--out", required=True, help="output CSV file")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("validate-config", help="parse and check a scenario")
    p.add_argument("--config", required=True, help="scenario INI file")
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        name = exc.filename or "?"
        detail = exc.strerror or str(exc)
        print(f"error: {name}: {detail}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
