"""Scenario configuration: defaults, INI loading, validation.

One flat INI file describes a scenario. Every key is optional and falls
back to the shipped line calibration (a 30-station metro line with 90 s
dispatching and the leaky-medium channel). ``load_scenario`` and
``validate_scenario`` share one code path, so a config that validates is
exactly a config that runs.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .channel import ChannelParams, FhssConfig, JamStrategy, JammerConfig, Medium
from .kinematics import KinematicParams
from .signaling import SignalingConfig

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "default_scenario",
    "load_scenario",
    "validate_scenario",
    "example_ini",
    "DEFAULT_MASTER_SEED",
]

# Fixed default so runs are reproducible out of the box; never derived from
# the wall clock.
DEFAULT_MASTER_SEED = 1729

_ENGINES = ("auto", "python", "cython")


class ConfigError(ValueError):
    """A scenario setting is missing, malformed, or out of range."""


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    """Everything needed to reproduce one simulation run."""

    signaling: SignalingConfig = field(default_factory=SignalingConfig)
    kinematics: KinematicParams = field(default_factory=KinematicParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    jammer: JammerConfig = field(default_factory=JammerConfig)
    fhss: FhssConfig = field(default_factory=FhssConfig)
    dispatch_interval: float = 90.0
    sim_duration: float = 7200.0
    train_capacity: int = 400
    demand_source: str = "none"  # "none", "synthetic", or a CSV path
    demand_rate: float = 0.05
    master_seed: int = DEFAULT_MASTER_SEED
    engine: str = "auto"
    max_sim_time: float = 86400.0

    def __post_init__(self) -> None:
        if self.dispatch_interval <= 0.0:
            raise ConfigError("dispatch_interval must be > 0")
        slots = self.dispatch_interval / self.signaling.dt
        if abs(slots - round(slots)) > 1e-6:
            raise ConfigError("dispatch_interval must be a multiple of dt")
        if self.sim_duration <= 0.0:
            raise ConfigError("sim_duration must be > 0")
        if self.train_capacity < 1:
            raise ConfigError("train_capacity must be >= 1")
        if self.demand_rate < 0.0:
            raise ConfigError("demand_rate must be >= 0")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be >= 0")
        if self.engine not in _ENGINES:
            raise ConfigError(f"engine must be one of {_ENGINES}")
        if self.max_sim_time < self.sim_duration:
            raise ConfigError("max_sim_time must be >= sim_duration")
        if self.demand_source not in ("none", "synthetic") and not self.demand_source:
            raise ConfigError("demand_source must be none, synthetic, or a CSV path")

    @property
    def num_trains(self) -> int:
        return int(math.floor((self.sim_duration - 1e-9) / self.dispatch_interval)) + 1


def default_scenario() -> ScenarioConfig:
    """The shipped line calibration with the jammer switched off."""
    return ScenarioConfig()


# section -> {key: (attr, converter)}
_BOOLS = {"yes": True, "true": True, "1": True, "on": True,
          "no": False, "false": False, "0": False, "off": False}


def _conv_float(raw: str) -> float:
    return float(raw)


def _conv_int(raw: str) -> int:
    return int(raw, 10)


def _conv_bool(raw: str) -> bool:
    try:
        return _BOOLS[raw.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {raw!r}") from None


def _conv_str(raw: str) -> str:
    return raw.strip()


_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "signaling": {
        "dt": ("dt", _conv_float),
        "loss_threshold_n": ("loss_threshold_n", _conv_int),
        "t_fb_max_s": ("t_fb_max_s", _conv_float),
        "block_length_m": ("block_length", _conv_float),
        "block_threshold_bth": ("block_threshold_bth", _conv_int),
        "station_spacing_m": ("station_spacing", _conv_float),
        "dwell_time_s": ("dwell_time", _conv_float),
        "num_stations": ("num_stations", _conv_int),
        "train_length_m": ("train_length", _conv_float),
    },
    "kinematics": {
        "accel_alpha": ("accel_alpha", _conv_float),
        "decel_service": ("decel_service", _conv_float),
        "decel_emergency": ("decel_emergency", _conv_float),
        "decel_friction": ("decel_friction", _conv_float),
        "v_max": ("v_max", _conv_float),
    },
    "channel": {
        "medium": ("medium", _conv_str),
        "eta0_db": ("eta0", _conv_float),
        "gamma": ("gamma", _conv_float),
        "ref_distance_km": ("ref_distance", _conv_float),
        "c_cplng_db": ("c_cplng", _conv_float),
        "alpha_loss_db_per_km": ("alpha_loss", _conv_float),
        "eta_r_bar_db": ("eta_r_bar", _conv_float),
        "c_rptr_db": ("c_rptr", _conv_float),
        "d_rptr_km": ("d_rptr", _conv_float),
        "sinr_threshold_tau_db": ("sinr_threshold_tau", _conv_float),
        "p_s_dbm": ("p_s_dbm", _conv_float),
        "fading_enabled": ("fading_enabled", _conv_bool),
        "fading_sigma_db": ("fading_sigma", _conv_float),
    },
    "jammer": {
        "active": ("active", _conv_bool),
        "position_km": ("position", _conv_float),
        "p_j_dbm": ("p_j_dbm", _conv_float),
        "d_j_wg_km": ("d_j_wg", _conv_float),
        "strategy": ("strategy", _conv_str),
    },
    "fhss": {
        "enabled": ("enabled", _conv_bool),
        "n_channels": ("n_channels", _conv_int),
        "seed": ("seed", _conv_int),
        "channel_bandwidth_khz": ("channel_bandwidth_khz", _conv_float),
    },
    "demand": {
        "source": ("source", _conv_str),
        "rate_per_station": ("rate_per_station", _conv_float),
    },
    "sim": {
        "dispatch_interval_s": ("dispatch_interval", _conv_float),
        "sim_duration_s": ("sim_duration", _conv_float),
        "train_capacity": ("train_capacity", _conv_int),
        "master_seed": ("master_seed", _conv_int),
        "engine": ("engine", _conv_str),
        "max_sim_time_s": ("max_sim_time", _conv_float),
    },
}


def _read_section(parser: configparser.ConfigParser, section: str) -> dict:
    """Typed values of one section, default-free; unknown keys rejected."""
    out: dict[str, object] = {}
    if not parser.has_section(section):
        return out
    schema = _SCHEMA[section]
    for key, raw in parser.items(section):
        if key not in schema:
            raise ConfigError(f"unknown key {section}.{key}")
        attr, conv = schema[key]
        try:
            out[attr] = conv(raw)  # type: ignore[operator]
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}") from None
    return out


def _build(values: dict[str, dict]) -> ScenarioConfig:
    sig_kw = values["signaling"]
    t_fb = sig_kw.pop("t_fb_max_s", None)
    dt = sig_kw.get("dt", SignalingConfig().dt)
    if t_fb is not None:
        if t_fb <= 0.0:
            raise ConfigError("signaling.t_fb_max_s must be > 0")
        slots = t_fb / dt
        if abs(slots - round(slots)) > 1e-6:
            raise ConfigError("signaling.t_fb_max_s must be a multiple of dt")
        sig_kw["fbs_hold_slots"] = int(round(slots))

    chan_kw = values["channel"]
    if "medium" in chan_kw:
        try:
            chan_kw["medium"] = Medium(chan_kw["medium"].lower())
        except ValueError:
            raise ConfigError("channel.medium must be free or leaky") from None

    jam_kw = values["jammer"]
    if "strategy" in jam_kw:
        try:
            jam_kw["strategy"] = JamStrategy(jam_kw["strategy"].lower())
        except ValueError:
            raise ConfigError(
                "jammer.strategy must be constant_wideband") from None

    dem = values["demand"]
    sim_kw = dict(values["sim"])
    if "source" in dem:
        sim_kw["demand_source"] = dem["source"]
    if "rate_per_station" in dem:
        sim_kw["demand_rate"] = dem["rate_per_station"]

    try:
        return ScenarioConfig(
            signaling=SignalingConfig(**sig_kw),
            kinematics=KinematicParams(**values["kinematics"]),
            channel=ChannelParams(**chan_kw),
            jammer=JammerConfig(**jam_kw),
            fhss=FhssConfig(**values["fhss"]),
            **sim_kw,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path: str) -> ScenarioConfig:
    """Parse and validate a scenario INI file.

    Raises:
        ConfigError: any malformed or out-of-range setting (the message
            names the offending field).
        OSError: the file cannot be read.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path, "r", encoding="utf-8") as fh:
        try:
            parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
    values = {s: _read_section(parser, s) for s in _SCHEMA}
    return _build(values)


def validate_scenario(path: str) -> ScenarioConfig:
    """Identical to :func:`load_scenario`; named for intent at call sites."""
    return load_scenario(path)


def example_ini(cfg: ScenarioConfig | None = None) -> str:
    """Render a complete INI file for ``cfg`` (defaults if omitted)."""
    if cfg is None:
        cfg = default_scenario()
    sig, kin, ch, jam, fh = (cfg.signaling, cfg.kinematics, cfg.channel,
                             cfg.jammer, cfg.fhss)
    return f"""\
[signaling]
dt = {sig.dt}
loss_threshold_n = {sig.loss_threshold_n}
t_fb_max_s = {sig.fbs_hold_slots * sig.dt}
block_length_m = {sig.block_length}
block_threshold_bth = {sig.block_threshold_bth}
station_spacing_m = {sig.station_spacing}
dwell_time_s = {sig.dwell_time}
num_stations = {sig.num_stations}
train_length_m = {sig.train_length}

[kinematics]
accel_alpha = {kin.accel_alpha}
decel_service = {kin.decel_service}
decel_emergency = {kin.decel_emergency}
decel_friction = {kin.decel_friction}
v_max = {kin.v_max}

[channel]
medium = {ch.medium.value}
eta0_db = {ch.eta0}
gamma = {ch.gamma}
ref_distance_km = {ch.ref_distance}
c_cplng_db = {ch.c_cplng}
alpha_loss_db_per_km = {ch.alpha_loss}
eta_r_bar_db = {ch.eta_r_bar}
c_rptr_db = {ch.c_rptr}
d_rptr_km = {ch.d_rptr}
sinr_threshold_tau_db = {ch.sinr_threshold_tau}
p_s_dbm = {ch.p_s_dbm}
fading_enabled = {"yes" if ch.fading_enabled else "no"}
fading_sigma_db = {ch.fading_sigma}

[jammer]
active = {"yes" if jam.active else "no"}
position_km = {jam.position}
p_j_dbm = {jam.p_j_dbm}
d_j_wg_km = {jam.d_j_wg}
strategy = {jam.strategy.value}

[fhss]
enabled = {"yes" if fh.enabled else "no"}
n_channels = {fh.n_channels}
seed = {fh.seed}
channel_bandwidth_khz = {fh.channel_bandwidth_khz}

[demand]
source = {cfg.demand_source}
rate_per_station = {cfg.demand_rate}

[sim]
dispatch_interval_s = {cfg.dispatch_interval}
sim_duration_s = {cfg.sim_duration}
train_capacity = {cfg.train_capacity}
master_seed = {cfg.master_seed}
engine = {cfg.engine}
max_sim_time_s = {cfg.max_sim_time}
"""
