"""Stance/swing phased reflex feedback for the seven muscle groups per leg.

Stance pathways: positive force feedback on the extensors (SOL, GAS, VAS,
and the hip muscles HAM/GLU), TA length feedback suppressed by SOL force,
and a load-gated PD balance of the trunk shared by the hip muscles. Swing
pathways: HFL length feedback launching the leg (suppressed by HAM stretch)
with a lean boost sampled at liftoff, force feedback on HAM/GLU braking the
swing, and TA length feedback for foot clearance.

All feedback signals are delayed by the configured neural latencies; force
signals are normalized to the muscle's F_max and CE lengths to l_opt.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .params import MUSCLES, ReflexConstants, ReflexGains

STANCE = "stance"
SWING = "swing"

_M = {name: i for i, name in enumerate(MUSCLES)}
N_PER_LEG = len(MUSCLES)


@dataclass
class GaitPhase:
    """Per-leg stance/swing state plus the global step counter."""

    leg: list[str] = field(default_factory=lambda: [STANCE, STANCE])
    step_count: int = 0
    touchdown_times: list[float] = field(default_factory=list)

    @property
    def double_support(self) -> bool:
        return self.leg[0] == STANCE and self.leg[1] == STANCE


class PhaseTracker:
    """Tracks stance/swing transitions and counts touchdowns as steps."""

    def __init__(self, initial_contact: tuple[bool, bool]):
        self.phase = GaitPhase(leg=[STANCE if c else SWING for c in initial_contact])
        self._contact = list(initial_contact)

    def update(self, t: float, contact: tuple[bool, bool]) -> GaitPhase:
        for leg in (0, 1):
            if contact[leg] and not self._contact[leg]:
                self.phase.leg[leg] = STANCE
                self.phase.step_count += 1
                self.phase.touchdown_times.append(t)
            elif not contact[leg] and self._contact[leg]:
                self.phase.leg[leg] = SWING
            self._contact[leg] = contact[leg]
        return self.phase


@dataclass
class ReflexSensors:
    """Raw (undelayed) feedback signals for one control tick.

    Per-leg arrays are ordered (left, right). Forces are in newtons; the
    controller normalizes internally.
    """

    forces: np.ndarray          # (2, 7) MTU forces per leg
    lce: np.ndarray             # (2, 7) CE lengths per leg
    knee_angle: np.ndarray      # (2,)
    knee_vel: np.ndarray        # (2,)
    trunk_pitch: float
    trunk_pitch_vel: float
    load: np.ndarray            # (2,) vertical GRF / body weight
    contact: np.ndarray         # (2,) bool


class ReflexController:
    """Maps delayed sensor signals to the 14 muscle stimulations."""

    def __init__(
        self,
        gains: ReflexGains,
        constants: ReflexConstants,
        f_max_per_leg: np.ndarray,
        l_opt_per_leg: np.ndarray,
        dt: float,
    ):
        self.gains = gains
        self.c = constants
        self.f_max = np.asarray(f_max_per_leg, dtype=float)
        self.l_opt = np.asarray(l_opt_per_leg, dtype=float)
        self.dt = dt
        self._buf_ankle: deque = deque()
        self._buf_knee: deque = deque()
        self._buf_hip: deque = deque()
        self._buf_phase: deque = deque()
        self._lean_latch = np.zeros(2)
        self._prev_contact = np.array([True, True])
        self.s0 = np.array([constants.s0[m] for m in MUSCLES])

    @staticmethod
    def _depth(latency: float, dt: float) -> int:
        return max(1, int(round(latency / dt)))

    def reset(self, sensors: ReflexSensors) -> None:
        c = self.c
        self._buf_ankle = deque(maxlen=self._depth(c.latency_ankle, self.dt))
        self._buf_knee = deque(maxlen=self._depth(c.latency_knee, self.dt))
        self._buf_hip = deque(maxlen=self._depth(c.latency_hip, self.dt))
        self._buf_phase = deque(maxlen=self._depth(c.latency_phase, self.dt))
        for buf, packer in ((self._buf_ankle, self._pack_ankle),
                            (self._buf_knee, self._pack_knee),
                            (self._buf_hip, self._pack_hip),
                            (self._buf_phase, self._pack_phase)):
            for _ in range(buf.maxlen):
                buf.append(packer(sensors))
        self._prev_contact = sensors.contact.copy()
        self._lean_latch[:] = sensors.trunk_pitch

    def _pack_ankle(self, s: ReflexSensors):
        fhat = s.forces / self.f_max
        lhat = s.lce / self.l_opt
        return (fhat[:, _M["SOL"]].copy(), fhat[:, _M["GAS"]].copy(),
                lhat[:, _M["TA"]].copy())

    def _pack_knee(self, s: ReflexSensors):
        fhat = s.forces / self.f_max
        return (fhat[:, _M["VAS"]].copy(), s.knee_angle.copy(), s.knee_vel.copy())

    def _pack_hip(self, s: ReflexSensors):
        fhat = s.forces / self.f_max
        lhat = s.lce / self.l_opt
        return (s.trunk_pitch, s.trunk_pitch_vel,
                fhat[:, _M["HAM"]].copy(), fhat[:, _M["GLU"]].copy(),
                lhat[:, _M["HFL"]].copy(), lhat[:, _M["HAM"]].copy(),
                s.load.copy())

    def _pack_phase(self, s: ReflexSensors):
        return s.contact.copy()

    def update(self, sensors: ReflexSensors) -> np.ndarray:
        """Push current signals, read delayed ones, return stimulations (14,)."""
        d_ankle = self._buf_ankle[0]
        d_knee = self._buf_knee[0]
        d_hip = self._buf_hip[0]
        d_contact = self._buf_phase[0]
        self._buf_ankle.append(self._pack_ankle(sensors))
        self._buf_knee.append(self._pack_knee(sensors))
        self._buf_hip.append(self._pack_hip(sensors))
        self._buf_phase.append(self._pack_phase(sensors))

        # liftoff latch of the trunk lean, per leg, on the delayed contact edge
        for leg in (0, 1):
            if self._prev_contact[leg] and not d_contact[leg]:
                self._lean_latch[leg] = d_hip[0]
        self._prev_contact = d_contact.copy()

        stim = np.empty(2 * N_PER_LEG)
        for leg in (0, 1):
            contra = 1 - leg
            in_stance = bool(d_contact[leg])
            stim[leg * N_PER_LEG:(leg + 1) * N_PER_LEG] = self._leg_stim(
                leg, contra, in_stance, d_ankle, d_knee, d_hip)
        return np.clip(stim, self.c.stim_floor, self.c.stim_ceil)

    def _leg_stim(self, leg, contra, in_stance, d_ankle, d_knee, d_hip):
        g = self.gains
        c = self.c
        fhat_sol, fhat_gas, lhat_ta = (x[leg] for x in d_ankle)
        fhat_vas, phi_k, dphi_k = (x[leg] for x in d_knee)
        theta, theta_dot, fhat_ham, fhat_glu, lhat_hfl, lhat_ham, load = d_hip
        s = self.s0.copy()

        # TA length feedback runs in both phases; SOL suppression matters in stance
        s[_M["TA"]] += g.g_ta * max(0.0, lhat_ta - c.l_off_ta) - g.g_solta * fhat_sol

        if in_stance:
            pd = g.k_phi * (theta - c.theta_ref) + c.k_d * theta_dot
            chi = c.load_gain * load[leg]
            s[_M["SOL"]] += g.g_sol * fhat_sol
            s[_M["GAS"]] += g.g_gas * fhat_gas
            s[_M["VAS"]] += g.g_vas * fhat_vas
            if phi_k > c.knee_off and dphi_k > 0.0:
                s[_M["VAS"]] -= c.k_knee * (phi_k - c.knee_off)
            s[_M["VAS"]] -= c.k_ds_vas * load[contra]
            s[_M["GLU"]] += chi * max(0.0, pd) + g.g_glu * fhat_glu[leg]
            s[_M["HAM"]] += c.ham_balance_share * chi * max(0.0, pd) \
                + g.g_ham * fhat_ham[leg]
            s[_M["HFL"]] += chi * max(0.0, -pd)
        else:
            s[_M["HFL"]] += g.g_hfl * max(0.0, lhat_hfl[leg] - c.l_off_hfl) \
                - g.g_hamhfl * max(0.0, lhat_ham[leg] - c.l_off_ham) \
                + c.k_lean * (self._lean_latch[leg] - c.theta_ref)
            s[_M["HAM"]] += g.g_ham * fhat_ham[leg]
            s[_M["GLU"]] += g.g_glu * fhat_glu[leg]
        return s


def stimulations(
    sensors: ReflexSensors,
    phase: GaitPhase,
    gains: ReflexGains,
    constants: ReflexConstants,
    f_max_per_leg: np.ndarray,
    l_opt_per_leg: np.ndarray,
    lean_latch: tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    """Pure, undelayed form of the reflex laws (latency-free evaluation).

    Useful for property tests and for callers that manage their own delays:
    the result equals ReflexController.update applied to a constant signal
    history with the given phases.
    """
    ctrl = ReflexController(gains, constants, f_max_per_leg, l_opt_per_leg, dt=1.0)
    ctrl.reset(sensors)
    ctrl._lean_latch[:] = lean_latch
    d_ankle = ctrl._pack_ankle(sensors)
    d_knee = ctrl._pack_knee(sensors)
    d_hip = ctrl._pack_hip(sensors)
    stim = np.empty(2 * N_PER_LEG)
    for leg in (0, 1):
        stim[leg * N_PER_LEG:(leg + 1) * N_PER_LEG] = ctrl._leg_stim(
            leg, 1 - leg, phase.leg[leg] == STANCE, d_ankle, d_knee, d_hip)
    return np.clip(stim, constants.stim_floor, constants.stim_ceil)
