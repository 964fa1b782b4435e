"""Train motion primitives.

Pure math for a single train moving along a 1-D track: minimum-time speed
profiles between stops, discrete slot stepping with an exact rest clamp, and
the dynamic safe-separation (headway) distance between a follower and its
leader. Everything here is deterministic and side-effect free; the signaling
layer composes these primitives into the mode logic.

Units: metres, seconds, m/s, m/s^2 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "KinematicParams",
    "MotionPlan",
    "LeaderEstimate",
    "PlanOvershootError",
    "solve_plan",
    "plan_accel_at",
    "step",
    "stopping_distance",
    "dynamic_headway",
    "headway_closed_form",
    "cruise_speed",
    "guidance_accel",
]


class PlanOvershootError(ValueError):
    """Remaining distance is shorter than the service-brake stopping distance.

    Raised by :func:`solve_plan` so callers can fall back to emergency
    braking instead of receiving an infeasible profile.
    """


@dataclass(frozen=True, slots=True)
class KinematicParams:
    """Acceleration envelope of the rolling stock.

    Attributes:
        accel_alpha: Traction acceleration, m/s^2 (> 0).
        decel_service: Service-brake deceleration, m/s^2 (> 0).
        decel_emergency: Emergency-brake deceleration, m/s^2 (> 0).
        decel_friction: Friction/coasting deceleration, m/s^2 (> 0).
        v_max: Line speed limit, m/s (> 0).
    """

    accel_alpha: float = 0.7
    decel_service: float = 0.4
    decel_emergency: float = 1.0
    decel_friction: float = 0.05
    v_max: float = 16.67

    def __post_init__(self) -> None:
        for name in ("accel_alpha", "decel_service", "decel_emergency",
                     "decel_friction", "v_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True, slots=True)
class MotionPlan:
    """Four-phase speed profile: accelerate, cruise, coast, brake to rest.

    Phase durations are ``t1`` (accelerate to ``v1``), ``t2`` (cruise at
    ``v1``), ``t3`` (coast down to ``v2``) and ``t4`` (service brake from
    ``v2`` to rest). Minimum-time plans produced by :func:`solve_plan` always
    have ``t3 == 0`` and ``v2 == v1``; the coast phase exists so arbitrary
    profiles can be represented and queried.

    Attributes:
        t1: Acceleration phase duration, s.
        t2: Cruise phase duration, s.
        t3: Coast phase duration, s.
        t4: Brake phase duration, s.
        v1: Cruise speed, m/s.
        v2: Speed at brake onset, m/s.
        start_time: Absolute time the plan begins, s.
        planned_distance: Total distance the profile covers, m.
    """

    t1: float
    t2: float
    t3: float
    t4: float
    v1: float
    v2: float
    start_time: float = 0.0
    planned_distance: float = 0.0

    def __post_init__(self) -> None:
        if min(self.t1, self.t2, self.t3, self.t4) < 0.0:
            raise ValueError("phase durations must be >= 0")
        if not 0.0 <= self.v2 <= self.v1:
            raise ValueError("require 0 <= v2 <= v1")

    @property
    def total_time(self) -> float:
        return self.t1 + self.t2 + self.t3 + self.t4


@dataclass(slots=True)
class LeaderEstimate:
    """Last state of the leading train known to a follower.

    Refreshed whenever a status packet gets through; ``age_slots`` counts the
    slots elapsed since the last successful reception.
    """

    position: float
    velocity: float
    acceleration: float
    age_slots: int = 0


def stopping_distance(v: float, decel: float) -> float:
    """Distance covered braking from ``v`` to rest at constant ``decel``."""
    if decel <= 0.0:
        raise ValueError("decel must be > 0")
    if v < 0.0:
        raise ValueError("v must be >= 0")
    return v * v / (2.0 * decel)


def cruise_speed(params: KinematicParams, v_init: float, s_remain: float) -> float:
    """Cruise speed of the minimum-time profile covering ``s_remain``.

    This is the peak of the accelerate/brake triangle capped at ``v_max``:
    the unique speed for which accelerating from ``v_init`` and then service
    braking to rest sums to exactly ``s_remain`` (when below the cap).
    """
    a = params.accel_alpha
    b = params.decel_service
    v1sq = (s_remain + v_init * v_init / (2.0 * a)) * (2.0 * a * b / (a + b))
    v1 = math.sqrt(v1sq) if v1sq > 0.0 else 0.0
    if v1 > params.v_max:
        v1 = params.v_max
    return v1


def solve_plan(
    params: KinematicParams,
    v_init: float,
    s_remain: float,
    start_time: float = 0.0,
) -> MotionPlan:
    """Minimum-time profile from ``v_init`` to rest over ``s_remain`` metres.

    The optimum never coasts: accelerate at ``accel_alpha`` to the cruise
    speed, hold it, then service brake, so ``t3 == 0`` and ``v2 == v1``.
    Short legs produce a triangular profile (``t2 == 0``).

    Raises:
        PlanOvershootError: ``s_remain`` is shorter than the service-brake
            stopping distance from ``v_init`` (no profile can stop in time).
        ValueError: ``s_remain`` negative or ``v_init`` outside [0, v_max].
    """
    if s_remain < 0.0:
        raise ValueError("s_remain must be >= 0")
    if not 0.0 <= v_init <= params.v_max + 1e-9:
        raise ValueError("v_init must be within [0, v_max]")
    brake_dist = v_init * v_init / (2.0 * params.decel_service)
    if s_remain < brake_dist - 1e-9:
        raise PlanOvershootError(
            f"cannot stop within {s_remain:.3f} m from {v_init:.3f} m/s "
            f"(service braking needs {brake_dist:.3f} m)"
        )
    v1 = cruise_speed(params, v_init, s_remain)
    if v1 < v_init:  # float dust at the pure-braking boundary
        v1 = v_init
    a = params.accel_alpha
    b = params.decel_service
    t1 = (v1 - v_init) / a
    s1 = (v1 * v1 - v_init * v_init) / (2.0 * a)
    t4 = v1 / b
    s4 = v1 * v1 / (2.0 * b)
    s2 = s_remain - s1 - s4
    if s2 < 0.0:
        s2 = 0.0
    t2 = s2 / v1 if v1 > 0.0 else 0.0
    return MotionPlan(
        t1=t1, t2=t2, t3=0.0, t4=t4, v1=v1, v2=v1,
        start_time=start_time, planned_distance=s_remain,
    )


def plan_accel_at(plan: MotionPlan, params: KinematicParams, tau: float) -> float:
    """Commanded acceleration of ``plan`` at absolute time ``tau``.

    Piecewise constant: ``+accel_alpha`` while accelerating, ``0`` while
    cruising, ``-decel_friction`` while coasting, ``-decel_service`` while
    braking, and ``0`` before the start and after the profile ends.
    """
    t = tau - plan.start_time
    if t < 0.0:
        return 0.0
    if t < plan.t1:
        return params.accel_alpha
    t -= plan.t1
    if t < plan.t2:
        return 0.0
    t -= plan.t2
    if t < plan.t3:
        return -params.decel_friction
    t -= plan.t3
    if t < plan.t4:
        return -params.decel_service
    return 0.0


def step(v: float, a: float, dt: float) -> tuple[float, float]:
    """Advance one slot: returns ``(v_next, ds)``.

    Midpoint update with an exact rest clamp: if the commanded deceleration
    would drive the velocity negative, the train stops within the slot and
    the displacement is the exact remaining braking distance ``v^2 / (2|a|)``.
    With that clamp, discrete braking from any speed covers exactly the
    continuous stopping distance.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    v_next = v + a * dt
    if v_next < 0.0:
        # a < 0 is implied: finish the stop inside the slot
        return 0.0, v * v / (2.0 * -a)
    return v_next, v * dt + 0.5 * a * dt * dt


def dynamic_headway(
    params: KinematicParams, v_f: float, v_l: float, dt: float
) -> float:
    """Minimum safe follower-leader separation at the given speeds.

    Steps two virtual stopping trajectories slot by slot from a common
    origin -- the follower service braking from ``v_f``, the leader emergency
    braking from ``v_l`` -- and returns the largest cumulative gap the
    follower opens over the leader, floored at zero. A follower keeping at
    least this distance can always stop behind a leader that emergency brakes
    without warning.
    """
    if v_f < 0.0:
        return 0.0
    vf = v_f
    vl = v_l if v_l > 0.0 else 0.0
    s_f = 0.0
    s_l = 0.0
    h = 0.0
    while vf > 0.0:
        vf, ds = step(vf, -params.decel_service, dt)
        s_f += ds
        vl, ds = step(vl, -params.decel_emergency, dt)
        s_l += ds
        gap = s_f - s_l
        if gap > h:
            h = gap
    return h


def headway_closed_form(
    params: KinematicParams, v_f: float, v_l: float, dt: float
) -> float:
    """O(1) equivalent of :func:`dynamic_headway`.

    The slot loop's running gap is convex until the follower stops (per-slot
    increments are nondecreasing while both move because the leader brakes
    harder) and shrinks afterwards, so its maximum sits at the follower's
    stop slot ``K = ceil(v_f / (decel_service * dt))``. Discrete braking
    covers exactly ``v^2/(2b)``, hence the gap there is the follower's full
    stopping distance minus the leader's coverage by ``K * dt``.
    """
    if v_f <= 0.0:
        return 0.0
    b_s = params.decel_service
    b_e = params.decel_emergency
    q = v_f / (b_s * dt)
    k = int(math.floor(q))
    if q - k > 1e-9:
        k += 1
    t = k * dt
    vl = v_l if v_l > 0.0 else 0.0
    if t >= vl / b_e:
        covered = vl * vl / (2.0 * b_e)
    else:
        covered = vl * t - 0.5 * b_e * t * t
    h = v_f * v_f / (2.0 * b_s) - covered
    return h if h > 0.0 else 0.0


def guidance_accel(
    params: KinematicParams,
    v: float,
    v_cruise: float,
    s_remain: float,
    dt: float,
) -> float:
    """Closed-loop acceleration command tracking a minimum-time profile.

    Quantized to the admissible set {+accel_alpha, 0, -decel_service}: brake
    as soon as the remaining distance is within one slot of the braking
    distance, otherwise accelerate while a full traction slot stays at or
    below the cruise speed, otherwise hold. The brake trigger fires one slot
    early, so a stop always lands within one slot's travel of the target;
    callers detect arrival with that band and snap to the stop point.
    """
    if s_remain <= v * v / (2.0 * params.decel_service) + v * dt:
        return -params.decel_service
    if v + params.accel_alpha * dt <= v_cruise + 1e-9:
        return params.accel_alpha
    return 0.0
