"""Hill-type muscle-tendon units with series elasticity and activation dynamics.

The contractile element (CE) state l_ce is an ODE state per muscle; the
force transmitted to the skeleton is the series-elastic (tendon) force
computed from l_se = l_mtu - l_ce. The CE velocity follows from inverting
the force-velocity relation in the force balance

    F_se = a F_max f_l(l_ce) f_v(v_ce) + F_pe(l_ce) - F_be(l_ce)

which keeps |v_ce| <= v_max by construction of the inverse.

Moment arms follow r(phi) = r0 cos(phi - phi_max) and MTU length changes
are the exact integral of the moment arm over the joint excursion, so
d(l_mtu)/d(phi) = sign * r(phi) holds analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import (MUSCLES, HillCurves, MomentArmParams, MuscleParams,
                     default_moment_arms, default_muscles)

ACT_MIN = 0.01
ACT_MAX = 1.0


class MuscleStateError(RuntimeError):
    """Contractile-element force balance left its valid domain."""


# --- spec-level single muscle operations ------------------------------------

def moment_arm(phi: float, p: MomentArmParams) -> float:
    """r = r0 cos(phi - phi_max)."""
    return p.r0 * math.cos(phi - p.phi_max)


def mtu_length_offset(phi: float, p: MomentArmParams) -> float:
    """Length contribution of one attachment relative to its reference angle."""
    return p.sign * p.r0 * (math.sin(phi - p.phi_max) - math.sin(p.phi_ref - p.phi_max))


def mtu_length(phis: dict[str, float], arms: dict[str, MomentArmParams],
               l_base: float) -> float:
    """Total MTU path length; biarticular muscles sum their joint offsets."""
    return l_base + sum(mtu_length_offset(phis[j], a) for j, a in arms.items())


def activation_dynamics(stim: float, a: float, dt: float, tau_act: float) -> float:
    """First-order excitation-contraction coupling, exact for held stimulation."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    s = min(max(stim, ACT_MIN), ACT_MAX)
    a_new = a + (s - a) * (1.0 - math.exp(-dt / tau_act))
    return min(max(a_new, ACT_MIN), ACT_MAX)


# --- curve shapes ------------------------------------------------------------

def force_length(l_hat, curves: HillCurves):
    """Active force-length bell, 1 at l_hat = 1."""
    x = (np.asarray(l_hat) - 1.0) / curves.fl_width
    return np.exp(-x * x * curves.fl_floor_log)


def force_velocity(v_hat, curves: HillCurves):
    """Hill hyperbola (v_hat = v_ce / v_max; shortening negative), f_v(0) = 1."""
    v_hat = np.asarray(v_hat, dtype=float)
    K = curves.fv_curvature
    N = curves.fv_ecc_plateau
    A = curves.fv_ecc_shape
    conc = np.clip((1.0 + v_hat) / (1.0 - K * v_hat), 0.0, None)
    ecc = N - (N - 1.0) * (1.0 - v_hat) / (1.0 + A * v_hat)
    return np.where(v_hat < 0.0, conc, ecc)


def invert_force_velocity(fv, curves: HillCurves):
    """v_hat with force_velocity(v_hat) = fv, clamped to [-1, 1]."""
    fv = np.asarray(fv, dtype=float)
    K = curves.fv_curvature
    N = curves.fv_ecc_plateau
    A = curves.fv_ecc_shape
    fvc = np.clip(fv, 0.0, N - 1e-9)
    conc = (fvc - 1.0) / (1.0 + K * fvc)
    ecc = (fvc - 1.0) / (A * (N - fvc) + (N - 1.0))
    return np.clip(np.where(fvc < 1.0, conc, ecc), -1.0, 1.0)


def tendon_force(l_se, l_slack, f_max, curves: HillCurves):
    """Quadratic-toe series element; f_max at the reference strain."""
    eps = (np.asarray(l_se) - l_slack) / l_slack
    e = np.clip(eps / curves.se_strain_ref, 0.0, None)
    return f_max * e * e


def tendon_length(f_se, l_slack, f_max, curves: HillCurves):
    """Inverse of tendon_force (f_se >= 0)."""
    return l_slack * (1.0 + curves.se_strain_ref * np.sqrt(np.asarray(f_se) / f_max))


def parallel_force(l_hat, f_max, curves: HillCurves):
    """Passive stretch resistance above l_opt minus compression buffer below."""
    l_hat = np.asarray(l_hat, dtype=float)
    pe = np.clip((l_hat - 1.0) / curves.pe_width, 0.0, None)
    lo = 1.0 - curves.fl_width
    be = np.clip((lo - l_hat) / curves.be_width, 0.0, None)
    return f_max * (pe * pe - be * be)


def hill_force(a: float, l_ce: float, v_ce: float, p: MuscleParams,
               curves: HillCurves = HillCurves()) -> float:
    """Instantaneous CE + parallel force for given activation, length, velocity."""
    a = min(max(a, ACT_MIN), ACT_MAX)
    l_hat = l_ce / p.l_opt
    v_hat = v_ce / (p.v_max * p.l_opt)
    f = a * p.f_max * force_length(l_hat, curves) * force_velocity(v_hat, curves)
    f += parallel_force(l_hat, p.f_max, curves)
    return max(0.0, float(f))


# --- vectorized muscle set ----------------------------------------------------

@dataclass
class MtuState:
    """Single-muscle state for the op-level interface."""

    activation: float
    l_ce: float
    force: float = 0.0


class MuscleSet:
    """Both legs' muscles as flat arrays (left leg first, then right).

    Muscle order within a leg follows params.MUSCLES. Joint columns are the
    six joint coordinates (hip_l, knee_l, ankle_l, hip_r, knee_r, ankle_r).
    """

    def __init__(
        self,
        muscles: dict[str, MuscleParams] | None = None,
        arms: dict[str, dict[str, MomentArmParams]] | None = None,
        curves: HillCurves = HillCurves(),
    ):
        muscles = muscles or default_muscles()
        arms = arms or default_moment_arms()
        for m in muscles.values():
            m.validate()
        self.curves = curves
        self.names = [f"{m.lower()}_{s}" for s in ("l", "r") for m in MUSCLES]
        self.n = len(self.names)
        per_leg = len(MUSCLES)

        def arr(get):
            vals = [get(muscles[m]) for m in MUSCLES]
            return np.array(vals * 2, dtype=float)

        self.f_max = arr(lambda p: p.f_max)
        self.l_opt = arr(lambda p: p.l_opt)
        self.l_slack = arr(lambda p: p.l_slack)
        self.v_max = arr(lambda p: p.v_max * p.l_opt)  # m/s
        self.tau_act = arr(lambda p: p.tau_act)
        self.l_base = self.l_opt + self.l_slack

        att_muscle, att_joint, att_r0, att_pmax, att_pref, att_sign = [], [], [], [], [], []
        joint_col = {"hip": 0, "knee": 1, "ankle": 2}
        for leg in (0, 1):
            for mi, mname in enumerate(MUSCLES):
                for jname, a in arms[mname].items():
                    a.validate()
                    att_muscle.append(leg * per_leg + mi)
                    att_joint.append(leg * 3 + joint_col[jname])
                    att_r0.append(a.r0)
                    att_pmax.append(a.phi_max)
                    att_pref.append(a.phi_ref)
                    att_sign.append(float(a.sign))
        self.att_muscle = np.array(att_muscle)
        self.att_joint = np.array(att_joint)
        self.att_r0 = np.array(att_r0)
        self.att_pmax = np.array(att_pmax)
        self.att_ref_sin = np.sin(np.array(att_pref) - self.att_pmax)
        self.att_sign = np.array(att_sign)
        self.arm_params = arms
        self.muscle_params = muscles

    def index(self, muscle: str, leg: str) -> int:
        return self.names.index(f"{muscle.lower()}_{leg}")

    def lengths(self, joint_angles: np.ndarray) -> np.ndarray:
        """MTU path lengths for the 6 joint angles."""
        phi = joint_angles[self.att_joint]
        off = self.att_sign * self.att_r0 * (np.sin(phi - self.att_pmax) - self.att_ref_sin)
        l = self.l_base.copy()
        np.add.at(l, self.att_muscle, off)
        return l

    def forces(self, l_ce: np.ndarray, l_mtu: np.ndarray) -> np.ndarray:
        """Series-elastic (tendon) forces transmitted to the skeleton."""
        return tendon_force(l_mtu - l_ce, self.l_slack, self.f_max, self.curves)

    def joint_torques(self, joint_angles: np.ndarray, forces: np.ndarray,
                      active: np.ndarray | None = None) -> np.ndarray:
        """Map muscle forces to the 6 joint torques (tau = -sign * r * F)."""
        phi = joint_angles[self.att_joint]
        r = self.att_r0 * np.cos(phi - self.att_pmax)
        f = forces[self.att_muscle]
        if active is not None:
            f = f * active[self.att_muscle]
        tau = np.zeros(6)
        np.add.at(tau, self.att_joint, -self.att_sign * r * f)
        return tau

    def ce_velocity(self, act: np.ndarray, l_ce: np.ndarray,
                    f_se: np.ndarray) -> np.ndarray:
        """CE velocities (m/s) from the series-elastic force balance."""
        l_hat = l_ce / self.l_opt
        fl = force_length(l_hat, self.curves)
        denom = act * self.f_max * np.maximum(fl, 1e-9)
        fv = (f_se - parallel_force(l_hat, self.f_max, self.curves)) / denom
        if not np.all(np.isfinite(fv)):
            raise MuscleStateError("non-finite force balance")
        return invert_force_velocity(fv, self.curves) * self.v_max

    def init_lce(self, l_mtu: np.ndarray, act: np.ndarray) -> np.ndarray:
        """Static equilibrium CE lengths for the starting pose (bisection).

        Solves F_se(l_mtu - l_ce) = F_iso(l_ce) per muscle; the residual is
        monotone decreasing in l_ce over the bracket used here.
        """
        lo = np.full(self.n, 0.4) * self.l_opt
        hi = np.minimum(1.5 * self.l_opt, np.maximum(l_mtu - 0.5 * self.l_slack,
                                                     0.41 * self.l_opt))

        def residual(l_ce):
            l_hat = l_ce / self.l_opt
            f_iso = act * self.f_max * force_length(l_hat, self.curves) \
                + parallel_force(l_hat, self.f_max, self.curves)
            return self.forces(l_ce, l_mtu) - f_iso

        for _ in range(60):
            mid = 0.5 * (lo + hi)
            pos = residual(mid) > 0.0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        return 0.5 * (lo + hi)


def mtu_dynamics_step(
    state: MtuState,
    phis: dict[str, float],
    stim: float,
    dt: float,
    p: MuscleParams,
    arms: dict[str, MomentArmParams],
    curves: HillCurves = HillCurves(),
    substeps: int = 10,
) -> tuple[MtuState, dict[str, float]]:
    """Advance one MTU over dt at frozen joint angles; return state and torques.

    Used for op-level contracts and isometric tests; the full simulation
    integrates l_ce inside the global state vector instead.
    """
    l_mtu = mtu_length(phis, arms, p.l_opt + p.l_slack)
    a = state.activation
    l_ce = state.l_ce
    h = dt / substeps
    for _ in range(substeps):
        a = activation_dynamics(stim, a, h, p.tau_act)
        f_se = float(tendon_force(l_mtu - l_ce, p.l_slack, p.f_max, curves))
        l_hat = l_ce / p.l_opt
        fl = max(float(force_length(l_hat, curves)), 1e-9)
        fv = (f_se - float(parallel_force(l_hat, p.f_max, curves))) / (a * p.f_max * fl)
        if not math.isfinite(fv):
            raise MuscleStateError("non-finite force balance")
        v = float(invert_force_velocity(fv, curves)) * p.v_max * p.l_opt
        l_ce += h * v
    f_se = float(tendon_force(l_mtu - l_ce, p.l_slack, p.f_max, curves))
    torques = {j: -arm.sign * moment_arm(phis[j], arm) * f_se for j, arm in arms.items()}
    return MtuState(a, l_ce, f_se), torques
