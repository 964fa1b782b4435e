# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled train-phase engine.

A literal transliteration of ``cbtcsim._engine_py.run_trains`` and the
slot update it drives (``signaling.train_step`` plus the kinematics and
channel helpers it calls). Every floating-point expression keeps the
reference implementation's operation order and the same libm calls, and
the extension is compiled without contraction or fast-math, so results
are bit-identical to the pure-Python engine. Shadow fading is the one
feature left out: its per-slot RNG draws belong to the Python engine.
"""

from libc.math cimport INFINITY, fabs, floor, log10, sqrt
from libc.stdint cimport int64_t

import math

import numpy as np

from ._engine_py import TrainPhaseResult
from .config import ScenarioConfig
from .kinematics import PlanOvershootError

# signaling.Mode values
cdef enum:
    MBS = 0
    FBS = 1
    EMERGENCY = 2
    DWELL = 3
    DONE = 4


cdef class _Sim:
    """All scenario constants and per-train state as C fields."""

    # timing and line layout
    cdef double dt, spacing, block_length, train_length
    cdef int64_t loss_n, hold_slots, bth, num_stations, dwell_slots
    # rolling stock
    cdef double accel_alpha, decel_service, decel_emergency, v_max
    # channel
    cdef bint leaky, jam_active
    cdef double eta0, gamma, ref_distance
    cdef double c_cplng, alpha_loss, eta_r_bar, c_rptr, d_rptr
    cdef double tau, p_s, p_j, jam_pos, d_j_wg, fhss_penalty
    # per-train state (indexed by dispatch order)
    cdef double[::1] pos, vel, acc, est_pos, est_vel, est_acc, plan_v1
    cdef int64_t[::1] mode, cnt, fbsrem, nsi, dwr, est_age
    cdef unsigned char[::1] present, est_has

    # -- kinematics ------------------------------------------------------

    cdef double cruise(self, double v_init, double s_remain) noexcept:
        cdef double a = self.accel_alpha
        cdef double b = self.decel_service
        cdef double v1sq = (s_remain + v_init * v_init / (2.0 * a)) * (2.0 * a * b / (a + b))
        cdef double v1 = sqrt(v1sq) if v1sq > 0.0 else 0.0
        if v1 > self.v_max:
            v1 = self.v_max
        return v1

    cdef double plan_cruise(self, double v_init, double s_remain) except *:
        # cruise speed of a fresh minimum-time plan, with the reference
        # solver's validation and overshoot behaviour
        cdef double brake_dist, v1
        if s_remain < 0.0:
            raise ValueError("s_remain must be >= 0")
        if not (0.0 <= v_init <= self.v_max + 1e-9):
            raise ValueError("v_init must be within [0, v_max]")
        brake_dist = v_init * v_init / (2.0 * self.decel_service)
        if s_remain < brake_dist - 1e-9:
            raise PlanOvershootError(
                f"cannot stop within {s_remain:.3f} m from {v_init:.3f} m/s "
                f"(service braking needs {brake_dist:.3f} m)"
            )
        v1 = self.cruise(v_init, s_remain)
        if v1 < v_init:  # float dust at the pure-braking boundary
            v1 = v_init
        return v1

    cdef double guidance(self, double v, double v_cruise, double s_remain) noexcept:
        if s_remain <= v * v / (2.0 * self.decel_service) + v * self.dt:
            return -self.decel_service
        if v + self.accel_alpha * self.dt <= v_cruise + 1e-9:
            return self.accel_alpha
        return 0.0

    cdef double headway(self, double v_f, double v_l) noexcept:
        cdef double b_s, b_e, q, t, vl, covered, h
        cdef int64_t k
        if v_f <= 0.0:
            return 0.0
        b_s = self.decel_service
        b_e = self.decel_emergency
        q = v_f / (b_s * self.dt)
        k = <int64_t>floor(q)
        if q - k > 1e-9:
            k += 1
        t = k * self.dt
        vl = v_l if v_l > 0.0 else 0.0
        if t >= vl / b_e:
            covered = vl * vl / (2.0 * b_e)
        else:
            covered = vl * t - 0.5 * b_e * t * t
        h = v_f * v_f / (2.0 * b_s) - covered
        return h if h > 0.0 else 0.0

    cdef void move(self, Py_ssize_t i, double a) noexcept:
        cdef double v = self.vel[i]
        cdef double v_next = v + a * self.dt
        cdef double ds
        if v_next < 0.0:
            # a < 0 is implied: finish the stop inside the slot
            self.vel[i] = 0.0
            ds = v * v / (2.0 * -a)
        else:
            self.vel[i] = v_next
            ds = v * self.dt + 0.5 * a * self.dt * self.dt
        self.pos[i] += ds
        self.acc[i] = a

    # -- signaling -------------------------------------------------------

    cdef void check_arrival(self, Py_ssize_t i) noexcept:
        cdef double target = (self.nsi[i] - 1) * self.spacing
        cdef bint arrived = self.pos[i] >= target - 1e-9
        if (not arrived and self.vel[i] <= 0.0
                and target - self.pos[i] <= self.v_max * self.dt):
            arrived = True  # tracker stops may land up to one slot short
        if not arrived:
            return
        self.pos[i] = target
        self.vel[i] = 0.0
        self.acc[i] = 0.0
        self.fbsrem[i] = 0
        if self.nsi[i] >= self.num_stations:
            self.mode[i] = DONE
        else:
            self.mode[i] = DWELL
            self.dwr[i] = self.dwell_slots

    cdef double fixed_block_accel(self, Py_ssize_t i, bint has_leader,
                                  double lead_pos) noexcept:
        cdef double station = (self.nsi[i] - 1) * self.spacing
        cdef double target, limit, s_rem, v, vc
        cdef int64_t b_leader, b_self
        if not has_leader:
            target = station
        else:
            b_leader = <int64_t>floor(lead_pos / self.block_length) + 1
            b_self = <int64_t>floor(self.pos[i] / self.block_length) + 1
            if b_leader - b_self <= self.bth:
                self.mode[i] = EMERGENCY
                return -self.decel_emergency
            limit = (b_leader - self.bth - 1) * self.block_length
            target = limit if limit < station else station
        s_rem = target - self.pos[i]
        v = self.vel[i]
        if s_rem <= 0.0 or s_rem < v * v / (2.0 * self.decel_service) - 1e-9:
            self.mode[i] = EMERGENCY
            return -self.decel_emergency
        vc = self.cruise(v, s_rem)
        return self.guidance(v, vc, s_rem)

    cdef int fixed_block_update(self, Py_ssize_t i, bint has_leader,
                                double lead_pos) except -1:
        cdef double a = self.fixed_block_accel(i, has_leader, lead_pos)
        self.move(i, a)
        self.check_arrival(i)
        return 0

    cdef int train_step(self, Py_ssize_t i, bint pkt, bint has_leader,
                        double lead_pos, double lead_vel,
                        double lead_acc) except -1:
        cdef double dt = self.dt
        cdef double target, srem, h, gap, a
        cdef bint clear, enter_fallback
        if self.mode[i] == DONE:
            return 0

        # Link bookkeeping runs in every active mode: a success refreshes
        # the leader estimate and clears the loss counter, a loss ages both.
        if has_leader:
            if pkt:
                self.cnt[i] = 0
                self.est_has[i] = 1
                self.est_pos[i] = lead_pos
                self.est_vel[i] = lead_vel
                self.est_acc[i] = lead_acc
                self.est_age[i] = 0
            else:
                self.cnt[i] += 1
                if self.est_has[i]:
                    self.est_age[i] += 1
        else:
            self.cnt[i] = 0

        if self.mode[i] == DWELL:
            if self.dwr[i] > 0:
                self.dwr[i] -= 1
                self.acc[i] = 0.0
                return 0
            # Departure: replan from rest to the next stop and pick the
            # mode by the current link health.
            self.nsi[i] += 1
            target = (self.nsi[i] - 1) * self.spacing
            self.plan_v1[i] = self.plan_cruise(0.0, target - self.pos[i])
            if has_leader and self.cnt[i] >= self.loss_n:
                self.mode[i] = FBS
                self.fbsrem[i] = self.hold_slots
            else:
                self.mode[i] = MBS

        if self.mode[i] == EMERGENCY:
            if self.vel[i] > 0.0:
                self.move(i, -self.decel_emergency)
                self.check_arrival(i)
                return 0
            if not has_leader:
                clear = True
            else:
                clear = (
                    (<int64_t>floor(lead_pos / self.block_length) + 1)
                    - (<int64_t>floor(self.pos[i] / self.block_length) + 1)
                    > self.bth)
            if not clear:
                self.acc[i] = 0.0
                return 0
            self.mode[i] = FBS  # latch released: resume the held stint

        # A train whose leader has left the line runs unconstrained.
        if not has_leader and self.mode[i] == FBS:
            self.mode[i] = MBS
            self.fbsrem[i] = 0
            srem = (self.nsi[i] - 1) * self.spacing - self.pos[i]
            self.plan_v1[i] = self.plan_cruise(self.vel[i], srem)

        if self.mode[i] == MBS:
            enter_fallback = False
            if has_leader:
                if self.cnt[i] >= self.loss_n or not self.est_has[i]:
                    enter_fallback = True
                else:
                    h = self.headway(self.vel[i], self.est_vel[i])
                    gap = self.est_pos[i] - self.train_length - self.pos[i]
                    if gap <= h:
                        enter_fallback = True
            if not enter_fallback:
                srem = (self.nsi[i] - 1) * self.spacing - self.pos[i]
                a = self.guidance(self.vel[i], self.plan_v1[i], srem)
                self.move(i, a)
                self.check_arrival(i)
                return 0
            self.mode[i] = FBS
            self.fbsrem[i] = self.hold_slots

        # Fixed-block slot (fresh entry included), then hold bookkeeping.
        # The hold counter is frozen while the emergency latch is engaged
        # and the revert to MBS waits for the loss counter to drop back
        # under the threshold -- then happens promptly, without re-arming
        # the hold.
        self.fixed_block_update(i, has_leader, lead_pos)
        if self.mode[i] == FBS:
            self.fbsrem[i] -= 1
            if self.fbsrem[i] < 0:
                self.fbsrem[i] = 0
            if self.fbsrem[i] == 0 and (
                    not has_leader or self.cnt[i] < self.loss_n):
                self.mode[i] = MBS
                srem = (self.nsi[i] - 1) * self.spacing - self.pos[i]
                self.plan_v1[i] = self.plan_cruise(self.vel[i], srem)
        return 0

    # -- channel ---------------------------------------------------------

    cdef int64_t repeaters(self, double x_a, double x_b) noexcept:
        cdef double lo = x_a if x_a <= x_b else x_b
        cdef double hi = x_b if x_a <= x_b else x_a
        cdef int64_t k_lo = <int64_t>floor(lo / self.d_rptr) + 1
        while k_lo * self.d_rptr <= lo:
            k_lo += 1
        cdef int64_t k_hi = <int64_t>floor(hi / self.d_rptr)
        while k_hi * self.d_rptr >= hi:
            k_hi -= 1
        cdef int64_t n = k_hi - k_lo + 1
        return n if n > 0 else 0

    cdef double free_loss(self, double d) noexcept:
        return self.eta0 + 10.0 * self.gamma * log10(d / self.ref_distance)

    cdef double link_sinr(self, double x_leader, double x_follower) noexcept:
        cdef double eta_s, eta_j, d, d_j, gap
        cdef int64_t n
        if not self.jam_active:
            return INFINITY
        if self.leaky:
            d = fabs(x_follower - x_follower)
            n = self.repeaters(x_follower, x_follower)
            eta_s = self.c_cplng + self.alpha_loss * d - self.c_rptr * n + self.eta_r_bar
            d = fabs(x_follower - self.jam_pos)
            n = self.repeaters(self.jam_pos, x_follower)
            eta_j = self.free_loss(self.d_j_wg) + self.alpha_loss * d - self.c_rptr * n + self.eta_r_bar
            eta_j = eta_j + self.fhss_penalty
        else:
            d_j = fabs(x_follower - self.jam_pos)
            if d_j == 0.0:
                return -INFINITY
            gap = fabs(x_leader - x_follower)
            if gap == 0.0:
                return INFINITY
            eta_s = self.free_loss(gap)
            eta_j = self.free_loss(d_j) + self.fhss_penalty
        return (self.p_s - eta_s) - (self.p_j - eta_j)


def run_trains(cfg, trace_train=None, fading_rng=None):
    """Simulate all dispatched trains to completion (or the safety cap).

    Drop-in replacement for the Python engine's ``run_trains``, minus
    fading support: passing a fading RNG is an error here because the
    draw sequence is tied to the Python engine's slot loop.
    """
    if not isinstance(cfg, ScenarioConfig):
        raise TypeError("cfg must be a ScenarioConfig")
    if fading_rng is not None:
        raise ValueError("the compiled engine does not support shadow "
                         "fading; use the python engine")

    sig = cfg.signaling
    kin = cfg.kinematics
    chan = cfg.channel
    jam = cfg.jammer
    fhss = cfg.fhss

    cdef Py_ssize_t n_trains = cfg.num_trains
    interval_slots_py = int(round(cfg.dispatch_interval / sig.dt))
    cap_slots_py = int(math.ceil(cfg.max_sim_time / sig.dt))

    cdef _Sim s = _Sim()
    s.dt = sig.dt
    s.spacing = sig.station_spacing
    s.block_length = sig.block_length
    s.train_length = sig.train_length
    s.loss_n = sig.loss_threshold_n
    s.hold_slots = sig.fbs_hold_slots
    s.bth = sig.block_threshold_bth
    s.num_stations = sig.num_stations
    s.dwell_slots = sig.dwell_slots
    s.accel_alpha = kin.accel_alpha
    s.decel_service = kin.decel_service
    s.decel_emergency = kin.decel_emergency
    s.v_max = kin.v_max
    s.leaky = chan.medium.value == "leaky"
    s.eta0 = chan.eta0
    s.gamma = chan.gamma
    s.ref_distance = chan.ref_distance
    s.c_cplng = chan.c_cplng
    s.alpha_loss = chan.alpha_loss
    s.eta_r_bar = chan.eta_r_bar
    s.c_rptr = chan.c_rptr
    s.d_rptr = chan.d_rptr
    s.tau = chan.sinr_threshold_tau
    s.p_s = chan.p_s_dbm
    s.jam_active = jam.active
    s.jam_pos = jam.position
    s.p_j = jam.p_j_dbm
    s.d_j_wg = jam.d_j_wg
    if fhss is None or not fhss.enabled:
        s.fhss_penalty = 0.0
    else:
        s.fhss_penalty = 10.0 * log10(<double>fhss.n_channels)

    s.pos = np.zeros(n_trains)
    s.vel = np.zeros(n_trains)
    s.acc = np.zeros(n_trains)
    s.est_pos = np.zeros(n_trains)
    s.est_vel = np.zeros(n_trains)
    s.est_acc = np.zeros(n_trains)
    s.plan_v1 = np.zeros(n_trains)
    s.mode = np.zeros(n_trains, dtype=np.int64)
    s.cnt = np.zeros(n_trains, dtype=np.int64)
    s.fbsrem = np.zeros(n_trains, dtype=np.int64)
    s.nsi = np.zeros(n_trains, dtype=np.int64)
    s.dwr = np.zeros(n_trains, dtype=np.int64)
    s.est_age = np.zeros(n_trains, dtype=np.int64)
    s.present = np.zeros(n_trains, dtype=np.uint8)
    s.est_has = np.zeros(n_trains, dtype=np.uint8)

    cdef double[::1] snap_pos = np.zeros(n_trains)
    cdef double[::1] snap_vel = np.zeros(n_trains)
    cdef double[::1] snap_acc = np.zeros(n_trains)
    cdef unsigned char[::1] done_flag = np.zeros(n_trains, dtype=np.uint8)

    res = TrainPhaseResult(
        num_trains=n_trains,
        scheduled_dispatch_s=[i * cfg.dispatch_interval for i in range(n_trains)],
        first_move_s=[None] * n_trains,
        completed=[False] * n_trains,
        arrival_s=[None] * n_trains,
        station_arrival_s=[{} for _ in range(n_trains)],
        station_departure_s=[{} for _ in range(n_trains)],
        trace=[] if trace_train is not None else None,
        engine="cython",
    )
    first_move = res.first_move_s
    completed = res.completed
    arrival_s = res.arrival_s
    arr_dicts = res.station_arrival_s
    dep_dicts = res.station_departure_s
    trace = res.trace

    cdef int64_t interval_slots = interval_slots_py
    cdef int64_t cap_slots = cap_slots_py
    cdef int64_t trace_idx = -1 if trace_train is None else trace_train
    cdef double dt = s.dt
    cdef double tau = s.tau
    cdef double spacing = s.spacing

    cdef Py_ssize_t first_not_done = 0
    cdef Py_ssize_t i
    cdef int64_t slot = 0, last, pre_mode
    cdef double t, sinr_db, arr
    cdef bint pkt, has_leader

    while first_not_done < n_trains and slot < cap_slots:
        t = slot * dt
        last = slot // interval_slots + 1
        if last > n_trains:
            last = n_trains
        for i in range(first_not_done, last):
            if not s.present[i]:
                # Dispatch, held while the leader is still inside the first
                # block (platform interlock); journey time still counts
                # from the scheduled dispatch.
                if i > 0:
                    if not s.present[i - 1] or (
                            s.mode[i - 1] != DONE
                            and s.pos[i - 1] < s.block_length):
                        continue
                s.present[i] = 1
                s.pos[i] = 0.0
                s.vel[i] = 0.0
                s.acc[i] = 0.0
                s.mode[i] = MBS
                s.cnt[i] = 0
                s.fbsrem[i] = 0
                s.nsi[i] = 2
                s.dwr[i] = 0
                s.plan_v1[i] = s.plan_cruise(0.0, spacing)
                if i > 0 and s.mode[i - 1] != DONE:
                    s.est_has[i] = 1
                    s.est_pos[i] = snap_pos[i - 1]
                    s.est_vel[i] = snap_vel[i - 1]
                    s.est_acc[i] = snap_acc[i - 1]
                    s.est_age[i] = 0
                first_move[i] = t
                dep_dicts[i][1] = t
            if s.mode[i] == DONE:
                continue
            snap_pos[i] = s.pos[i]
            snap_vel[i] = s.vel[i]
            snap_acc[i] = s.acc[i]

            has_leader = i > 0 and s.mode[i - 1] != DONE
            if not has_leader:
                sinr_db = INFINITY
                pkt = True
            else:
                sinr_db = s.link_sinr(snap_pos[i - 1] / 1000.0,
                                      s.pos[i] / 1000.0)
                pkt = sinr_db >= tau

            if trace_idx == i:
                trace.append((t, s.pos[i], sinr_db, 1 if pkt else 0))

            pre_mode = s.mode[i]
            s.train_step(i, pkt, has_leader,
                         snap_pos[i - 1] if has_leader else 0.0,
                         snap_vel[i - 1] if has_leader else 0.0,
                         snap_acc[i - 1] if has_leader else 0.0)

            if s.mode[i] == DWELL and pre_mode != DWELL:
                arr_dicts[i][s.nsi[i]] = (slot + 1) * dt
            elif pre_mode == DWELL and s.mode[i] != DWELL:
                dep_dicts[i][s.nsi[i] - 1] = t
            elif s.mode[i] == DONE:
                arr = (slot + 1) * dt
                arr_dicts[i][s.num_stations] = arr
                arrival_s[i] = arr
                completed[i] = True
                done_flag[i] = 1
                while first_not_done < n_trains and done_flag[first_not_done]:
                    first_not_done += 1
        slot += 1
    return res
