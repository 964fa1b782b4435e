"""Co-simulation of a CBTC metro line under radio jamming.

Train movement, moving-block/fixed-block signaling, the radio link budget
(free wave or leaky waveguide, optional hopping countermeasure), and the
passenger-side fallout of service disruption, in one deterministic model.
"""

from .channel import (
    ChannelParams,
    FhssConfig,
    JammerConfig,
    JamStrategy,
    Medium,
    free_pathloss,
    hop_sequence,
    leaky_pathloss_jammer,
    leaky_pathloss_legit,
    link_sinr,
    packet_received,
    repeaters_between,
    sinr,
)
from .config import (
    ConfigError,
    ScenarioConfig,
    default_scenario,
    example_ini,
    load_scenario,
    validate_scenario,
)
from .kinematics import (
    KinematicParams,
    LeaderEstimate,
    MotionPlan,
    PlanOvershootError,
    cruise_speed,
    dynamic_headway,
    guidance_accel,
    headway_closed_form,
    plan_accel_at,
    solve_plan,
    step,
    stopping_distance,
)
from .passengers import (
    PassengerOutcome,
    PassengerRecord,
    board_and_alight,
    congestion_series,
    gen_synthetic,
    load_dataset,
)
from .signaling import (
    Mode,
    SignalingConfig,
    TrainState,
    block_index,
    fixed_block_update,
    station_position,
    train_step,
)
from .sim import SimResult, TrainResult, compare_runs, run_scenario, sweep_fhss

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "ConfigError",
    "FhssConfig",
    "JamStrategy",
    "JammerConfig",
    "KinematicParams",
    "LeaderEstimate",
    "Medium",
    "Mode",
    "MotionPlan",
    "PassengerOutcome",
    "PassengerRecord",
    "PlanOvershootError",
    "ScenarioConfig",
    "SignalingConfig",
    "SimResult",
    "TrainResult",
    "TrainState",
    "__version__",
    "block_index",
    "board_and_alight",
    "compare_runs",
    "congestion_series",
    "cruise_speed",
    "default_scenario",
    "dynamic_headway",
    "example_ini",
    "fixed_block_update",
    "free_pathloss",
    "gen_synthetic",
    "guidance_accel",
    "headway_closed_form",
    "hop_sequence",
    "leaky_pathloss_jammer",
    "leaky_pathloss_legit",
    "link_sinr",
    "load_dataset",
    "load_scenario",
    "packet_received",
    "plan_accel_at",
    "repeaters_between",
    "run_scenario",
    "sinr",
    "solve_plan",
    "station_position",
    "step",
    "stopping_distance",
    "sweep_fhss",
    "train_step",
    "validate_scenario",
]
