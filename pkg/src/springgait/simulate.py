"""Closed-loop walking simulation.

The plant (rigid bodies + contact anchors + muscle states) is integrated
with the adaptive stepper between controller ticks; stimulations are held
constant within a tick (1 kHz default). Contact touchdown and liftoff are
located as zero crossings inside ticks so step counting and spring
engagement switch at event times, not at tick boundaries.

State vector layout: [q(9), qd(9), l_ce(14), act(14), anchor_x(4)].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .biped import (ContactPointState, ContactState, PlanarBiped,
                    anchor_rate, joint_stop_torque, normal_contact_force,
                    tangent_contact_force)
from .config import ExperimentConfig
from .integrator import StepIntegrator
from .metabolics import metabolic_rate
from .muscles import MuscleSet
from .params import MUSCLES
from .reflexes import STANCE, PhaseTracker, ReflexController, ReflexSensors
from .springs import ExperimentKind, ReplacementState
from .trajectory import CHANNELS, LogBuilder, TrajectoryLog, channel_index

NQ = 9
SL_Q = slice(0, 9)
SL_QD = slice(9, 18)
SL_LCE = slice(18, 32)
SL_ACT = slice(32, 46)
SL_ANC = slice(46, 50)
N_STATE = 50

TERM_COM = "com_height"
TERM_BACKWARD = "backward"
TERM_JOINT = "joint_limit"

_JOINT_STOP_NAMES = ("hip", "knee", "ankle", "hip", "knee", "ankle")


@dataclass
class SimResult:
    log: TrajectoryLog
    termination: str | None
    t_end: float
    step_times: list[float]

    @property
    def t_step3(self) -> float | None:
        return self.step_times[2] if len(self.step_times) >= 3 else None


def termination_monitor(com_y: float, trunk_vx: float, joints: np.ndarray,
                        rules, com_min: float) -> str | None:
    """First-violation termination check on one state sample."""
    if com_y < com_min:
        return TERM_COM
    if trunk_vx < 0.0:
        return TERM_BACKWARD
    for off in (0, 3):
        if not (rules.hip_range[0] <= joints[off + 0] <= rules.hip_range[1]):
            return TERM_JOINT
        if not (rules.knee_range[0] <= joints[off + 1] <= rules.knee_range[1]):
            return TERM_JOINT
        if not (rules.ankle_range[0] <= joints[off + 2] <= rules.ankle_range[1]):
            return TERM_JOINT
    return None


class WalkerSim:
    """Bundles the plant, controller and replacement springs for one rollout."""

    def __init__(self, cfg: ExperimentConfig, controller=None):
        cfg.validate()
        self.cfg = cfg
        self.biped = PlanarBiped(cfg.biped())
        self.muscles = MuscleSet()
        self.body_mass = self.biped.params.total_mass()
        self.body_weight = self.body_mass * self.biped.params.gravity
        per_leg = len(MUSCLES)
        self._fmax_leg = self.muscles.f_max[:per_leg]
        self._lopt_leg = self.muscles.l_opt[:per_leg]
        self.controller = controller
        if controller is None:
            self.reflex = ReflexController(
                cfg.gains, cfg.reflex,
                f_max_per_leg=self._fmax_leg, l_opt_per_leg=self._lopt_leg,
                dt=cfg.solver.control_dt)
        else:
            self.reflex = None
        self.replacement = ReplacementState.for_experiment(cfg.kind, dict(cfg.springs))
        self._muscle_mask = np.ones(self.muscles.n)
        self._stop_limits = [self.biped.params.stops[n] for n in _JOINT_STOP_NAMES]
        self._com_min = (self.biped.params.termination.com_height_min)

    # --- state construction --------------------------------------------------

    def initial_state(self) -> np.ndarray:
        init = self.cfg.init
        q = np.zeros(NQ)
        q[2] = init.pitch
        q[3:9] = [init.hip_l, init.knee_l, init.ankle_l,
                  init.hip_r, init.knee_r, init.ankle_r]
        q[1] = 2.0  # provisional height, adjusted to the requested clearance
        pts = self.biped.point_positions(q)
        lowest = min(pts[n][1] for n in ("heel_l", "ball_l", "heel_r", "ball_r"))
        q[1] = 2.0 - lowest - init.drop_clearance
        qd = np.zeros(NQ)
        qd[0] = init.vx
        qd[1] = init.vy
        qd[2] = init.pitch_vel

        y = np.zeros(N_STATE)
        y[SL_Q] = q
        y[SL_QD] = qd
        act0 = np.array([self.cfg.reflex.s0[m] for m in MUSCLES] * 2)
        lmtu = self.muscles.lengths(q[3:9])
        y[SL_LCE] = self.muscles.init_lce(lmtu, act0)
        y[SL_ACT] = act0
        pts = self.biped.point_positions(q)
        y[SL_ANC] = [pts[n][0] for n in ("heel_l", "ball_l", "heel_r", "ball_r")]
        return y

    # --- force assembly -------------------------------------------------------

    def _contact(self, q, qd, anchors):
        """Contact point forces and state; returns (forces dict, states list, rates)."""
        kin = self.biped.contact_point_kinematics(q, qd)
        params = self.biped.params.contact
        forces = {}
        states = []
        rates = np.zeros(4)
        for i, (pos, vel, _, _) in enumerate(kin):
            pen = -pos[1]
            fy = normal_contact_force(pen, -vel[1], params)
            defl = pos[0] - anchors[i]
            fx = tangent_contact_force(defl, vel[0], fy, params)
            rates[i] = anchor_rate(defl, fy, params)
            f = np.array([fx, fy])
            if fy > 0.0:
                forces[i] = f
            states.append(ContactPointState(pos.copy(), vel.copy(), f, pen, pen > 0.0))
        return forces, states, rates

    def _joint_torques(self, q, qd, f_se):
        """Muscle + spring + stop torques and the per-joint stop components."""
        angles = q[3:9]
        tau = self.muscles.joint_torques(angles, f_se, active=self._muscle_mask)
        if self.replacement.active:
            f_spring = np.zeros(self.muscles.n)
            lmtu = self.muscles.lengths(angles)
            for target in self.replacement.configs:
                for leg, suffix in ((0, "l"), (1, "r")):
                    mi = self.muscles.index(target, suffix)
                    f_spring[mi] = self.replacement.force(target, leg, lmtu[mi])
            tau += self.muscles.joint_torques(angles, f_spring)
        stops = np.array([
            joint_stop_torque(angles[j], qd[3 + j], self._stop_limits[j])
            for j in range(6)
        ])
        return tau + stops, stops

    def rhs(self, t, y, stim):
        q = y[SL_Q]
        qd = y[SL_QD]
        lce = y[SL_LCE]
        act = np.clip(y[SL_ACT], 0.01, 1.0)
        anchors = y[SL_ANC]
        angles = q[3:9]
        lmtu = self.muscles.lengths(angles)
        f_se = self.muscles.forces(lce, lmtu)
        tau, _ = self._joint_torques(q, qd, f_se)
        forces, _, anc_rates = self._contact(q, qd, anchors)
        qdd = self.biped.forward_dynamics(q, qd, tau, forces)
        v_ce = self.muscles.ce_velocity(act, lce, f_se)
        dact = (stim - act) / self.muscles.tau_act
        dy = np.empty_like(y)
        dy[SL_Q] = qd
        dy[SL_QD] = qdd
        dy[SL_LCE] = v_ce
        dy[SL_ACT] = dact
        dy[SL_ANC] = -anc_rates
        return dy

    # --- sensors / logging ----------------------------------------------------

    def _sensors(self, y) -> ReflexSensors:
        q = y[SL_Q]
        qd = y[SL_QD]
        lce = y[SL_LCE]
        lmtu = self.muscles.lengths(q[3:9])
        f_se = self.muscles.forces(lce, lmtu) * self._muscle_mask
        _, states, _ = self._contact(q, qd, y[SL_ANC])
        grf_l = states[0].force + states[1].force
        grf_r = states[2].force + states[3].force
        n = len(MUSCLES)
        return ReflexSensors(
            forces=np.vstack([f_se[:n], f_se[n:]]),
            lce=np.vstack([lce[:n], lce[n:]]),
            knee_angle=q[[4, 7]].copy(),
            knee_vel=qd[[4, 7]].copy(),
            trunk_pitch=q[2],
            trunk_pitch_vel=qd[2],
            load=np.array([grf_l[1], grf_r[1]]) / self.body_weight,
            contact=np.array([states[0].on_ground or states[1].on_ground,
                              states[2].on_ground or states[3].on_ground]),
        )

    def contact_state(self, y) -> tuple[ContactState, ContactState]:
        _, states, _ = self._contact(y[SL_Q], y[SL_QD], y[SL_ANC])
        return (ContactState(states[0], states[1]),
                ContactState(states[2], states[3]))

    def _log_row(self, t, y, stim, phase) -> np.ndarray:
        q = y[SL_Q]
        qd = y[SL_QD]
        lce = y[SL_LCE]
        act = y[SL_ACT]
        angles = q[3:9]
        lmtu = self.muscles.lengths(angles)
        f_se_raw = self.muscles.forces(lce, lmtu)
        f_se = f_se_raw * self._muscle_mask
        v_ce = self.muscles.ce_velocity(np.clip(act, 0.01, 1.0), lce, f_se_raw)
        tau, stops = self._joint_torques(q, qd, f_se_raw)
        _, states, _ = self._contact(q, qd, y[SL_ANC])
        force_channel = f_se.copy()
        include = self._muscle_mask.copy()
        if self.replacement.active:
            for target in self.replacement.configs:
                for leg, suffix in ((0, "l"), (1, "r")):
                    mi = self.muscles.index(target, suffix)
                    force_channel[mi] = self.replacement.force(target, leg, lmtu[mi])
        p_met = metabolic_rate(act, v_ce, f_se, self.muscles.f_max,
                               self.muscles.l_opt, self.body_mass,
                               self.cfg.metabolic, include=include)
        com = self.biped.com(q)
        row = np.empty(len(CHANNELS))
        i = 0
        row[i] = t; i += 1
        row[i:i + 9] = q; i += 9
        row[i:i + 9] = qd; i += 9
        row[i:i + 6] = tau; i += 6
        row[i:i + 6] = stops; i += 6
        grf_l = states[0].force + states[1].force
        grf_r = states[2].force + states[3].force
        row[i:i + 4] = [grf_l[0], grf_l[1], grf_r[0], grf_r[1]]; i += 4
        row[i:i + 4] = [float(s.on_ground) for s in states]; i += 4
        for arr in (act, force_channel, lce, v_ce, lmtu, stim):
            row[i:i + 14] = arr; i += 14
        row[i] = p_met; i += 1
        row[i] = com[1]; i += 1
        row[i] = phase.step_count; i += 1
        row[i] = 1.0 if phase.leg[0] == STANCE else 0.0; i += 1
        row[i] = 1.0 if phase.leg[1] == STANCE else 0.0; i += 1
        return row

    # --- main loop --------------------------------------------------------------

    def run(self) -> SimResult:
        cfg = self.cfg
        dt = cfg.solver.control_dt
        n_ticks = int(round(cfg.duration / dt))
        y = self.initial_state()
        t = 0.0

        sensors = self._sensors(y)
        if self.reflex is not None:
            self.reflex.reset(sensors)
        tracker = PhaseTracker(tuple(bool(c) for c in sensors.contact))
        _, states, _ = self._contact(y[SL_Q], y[SL_QD], y[SL_ANC])
        flags = np.array([s.on_ground for s in states])
        self.replacement.update_engagement(flags)

        stim = np.array([cfg.reflex.s0[m] for m in MUSCLES] * 2)
        held_stim = stim.copy()

        def rhs(tt, yy):
            return self.rhs(tt, yy, held_stim)

        def make_event(idx):
            terms = self.biped._contact_terms[idx]

            def height(tt, yy):
                return float(self.biped._point(yy[SL_Q], terms)[1])
            return height

        stepper = StepIntegrator(
            rhs, rtol=cfg.solver.rtol, atol=cfg.solver.atol,
            max_step=cfg.solver.max_step, min_step=cfg.solver.min_step,
            event_fns=[make_event(i) for i in range(4)],
            max_crossings=cfg.solver.max_crossings,
        )

        builder = LogBuilder(n_ticks + 1)
        builder.append(self._log_row(t, y, stim, tracker.phase))
        termination = None
        t_termination = None

        for tick in range(n_ticks):
            if self.controller is not None:
                stim = np.clip(np.asarray(self.controller(t, y, sensors),
                                          dtype=float), 0.01, 1.0)
            else:
                stim = self.reflex.update(sensors)
            held_stim[:] = stim

            t_target = (tick + 1) * dt
            guard = 0
            while t < t_target - 1e-12:
                res = stepper.step(t, y, t_target)
                t, y = res.t, res.y
                if res.events:
                    _, states, _ = self._contact(y[SL_Q], y[SL_QD], y[SL_ANC])
                    flags = np.array([s.on_ground for s in states])
                    contact_legs = (bool(flags[0] or flags[1]),
                                    bool(flags[2] or flags[3]))
                    tracker.update(t, contact_legs)
                    self.replacement.update_engagement(flags)
                    self.replacement.update_schedule(tracker.phase.step_count)
                guard += 1
                if guard > 100000:
                    raise RuntimeError("tick did not converge")
            t = t_target

            _, states, _ = self._contact(y[SL_Q], y[SL_QD], y[SL_ANC])
            flags = np.array([s.on_ground for s in states])
            tracker.update(t, (bool(flags[0] or flags[1]), bool(flags[2] or flags[3])))
            self.replacement.update_engagement(flags)
            self.replacement.update_schedule(tracker.phase.step_count)

            sensors = self._sensors(y)
            builder.append(self._log_row(t, y, stim, tracker.phase))

            com_y = self.biped.com(y[SL_Q])[1]
            termination = termination_monitor(
                com_y, y[SL_QD][0], y[SL_Q][3:9],
                self.biped.params.termination, self._com_min)
            if termination:
                t_termination = t
                break

        log = builder.finish(termination, t_termination,
                             meta={"experiment": cfg.kind.value,
                                   "seed": cfg.seed, "duration": cfg.duration})
        return SimResult(log=log, termination=termination,
                         t_end=t if termination else min(t, cfg.duration),
                         step_times=list(tracker.phase.touchdown_times))


def simulate(cfg: ExperimentConfig, controller=None) -> SimResult:
    """Run one experiment rollout.

    controller, when given, overrides the reflex network: called once per
    tick as controller(t, state_vector, sensors) -> 14 stimulations.
    """
    if cfg.duration == 0:
        sim = WalkerSim(cfg, controller)
        y = sim.initial_state()
        tracker = PhaseTracker((True, True))
        builder = LogBuilder(1)
        stim = np.array([cfg.reflex.s0[m] for m in MUSCLES] * 2)
        builder.append(sim._log_row(0.0, y, stim, tracker.phase))
        return SimResult(builder.finish(None, None), None, 0.0, [])
    return WalkerSim(cfg, controller).run()
