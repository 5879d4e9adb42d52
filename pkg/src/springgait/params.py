"""Model parameter sets: segments, joints, contact, muscles, reflex constants.

All quantities are SI unless a field name says otherwise. The default human
model is an 80 kg / 1.80 m planar walker with seven segments (trunk, two
thighs, two shanks, two feet) and nine degrees of freedom. The robot model
is the same topology rescaled to 2.22 kg and 0.35 m leg length.

Joint angle conventions (interior angles, degrees given for orientation):
  hip    180 = thigh aligned with trunk, smaller = flexion (thigh forward)
  knee   180 = straight, smaller = flexion
  ankle   90 = neutral, larger = plantarflexion, smaller = dorsiflexion
Trunk pitch is the forward lean angle (0 = upright, positive = forward).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

DEG = math.pi / 180.0
GRAVITY = 9.81


@dataclass(frozen=True)
class SegmentParams:
    """Rigid segment: mass, length, CoM offset from proximal joint, inertia about CoM."""

    mass: float      # kg
    length: float    # m
    com_offset: float  # m from proximal joint along the segment axis
    inertia: float   # kg m^2

    def validate(self) -> None:
        if not (self.mass > 0 and self.length > 0 and self.inertia > 0):
            raise ValueError("segment mass, length and inertia must be positive")
        if self.com_offset <= 0:
            raise ValueError("segment com_offset must be positive")


@dataclass(frozen=True)
class StopLimits:
    """Soft joint stop: restoring torque outside [lower, upper]."""

    lower: float      # rad
    upper: float      # rad
    stiffness: float  # N m / rad
    damping: float    # N m s / rad

    def validate(self) -> None:
        if not self.lower < self.upper:
            raise ValueError("stop lower bound must be below upper bound")
        if self.stiffness < 0 or self.damping < 0:
            raise ValueError("stop stiffness and damping must be non-negative")


@dataclass(frozen=True)
class ContactParams:
    """Compliant point contact: nonlinear normal spring-damper, anchored tangential friction."""

    k_normal: float = 80e3      # N/m
    d_normal: float = 1.1       # s/m, velocity shaping factor of the normal force
    k_tangent: float = 9e3      # N/m, stiction spring
    c_tangent: float = 130.0    # N s/m
    mu: float = 0.9             # friction coefficient
    anchor_rate: float = 300.0  # 1/s, anchor relaxation rate while sliding


@dataclass(frozen=True)
class TerminationRules:
    """Hard abort conditions mirroring the physiological range of motion."""

    com_height_min: float = 1.0          # m (human scale, rescaled with leg length)
    hip_range: tuple[float, float] = (60.0 * DEG, 210.0 * DEG)
    knee_range: tuple[float, float] = (20.0 * DEG, 180.0 * DEG)
    ankle_range: tuple[float, float] = (40.0 * DEG, 160.0 * DEG)


@dataclass(frozen=True)
class BipedParams:
    """Full mechanical description of the planar walker."""

    hat: SegmentParams
    thigh: SegmentParams
    shank: SegmentParams
    foot: SegmentParams
    hip_below_hat_com: float      # m, hip joint below trunk CoM
    ankle_to_heel: float          # m, heel behind ankle along the foot axis
    ankle_to_ball: float          # m, ball ahead of ankle
    ankle_to_foot_com: float      # m, foot CoM ahead of ankle
    contact: ContactParams = field(default_factory=ContactParams)
    stops: dict[str, StopLimits] = field(default_factory=dict)
    termination: TerminationRules = field(default_factory=TerminationRules)
    gravity: float = GRAVITY
    leg_length: float = 1.0       # m, hip-to-ground when standing; scales termination

    def total_mass(self) -> float:
        return self.hat.mass + 2.0 * (self.thigh.mass + self.shank.mass + self.foot.mass)

    def validate(self, expected_mass: float | None = None) -> None:
        for seg in (self.hat, self.thigh, self.shank, self.foot):
            seg.validate()
        for lim in self.stops.values():
            lim.validate()
        if expected_mass is not None and abs(self.total_mass() - expected_mass) > 1e-9:
            raise ValueError(
                f"total body mass {self.total_mass():.6f} kg does not match "
                f"configured model mass {expected_mass:.6f} kg"
            )


def default_stops() -> dict[str, StopLimits]:
    # Ankle dorsiflexion stop 20 deg from neutral (interior angle 70 deg);
    # knee extension stop just short of straight; hip kept inside the
    # physiological termination range.
    return {
        "hip": StopLimits(110.0 * DEG, 200.0 * DEG, 200.0, 20.0),
        "knee": StopLimits(95.0 * DEG, 175.0 * DEG, 500.0, 40.0),
        "ankle": StopLimits(70.0 * DEG, 130.0 * DEG, 300.0, 25.0),
    }


def human_biped() -> BipedParams:
    p = BipedParams(
        hat=SegmentParams(mass=53.5, length=0.80, com_offset=0.35, inertia=3.0),
        thigh=SegmentParams(mass=8.5, length=0.50, com_offset=0.20, inertia=0.15),
        shank=SegmentParams(mass=3.5, length=0.50, com_offset=0.20, inertia=0.05),
        foot=SegmentParams(mass=1.25, length=0.20, com_offset=0.06, inertia=0.005),
        hip_below_hat_com=0.35,
        ankle_to_heel=0.08,
        ankle_to_ball=0.12,
        ankle_to_foot_com=0.02,
        stops=default_stops(),
        leg_length=1.0,
    )
    p.validate(expected_mass=80.0)
    return p


def robot_biped(total_mass: float = 2.22, leg_length: float = 0.35) -> BipedParams:
    """Human model rescaled to the robot's total mass and leg length.

    Masses scale with total mass, lengths with leg length, inertias with
    mass * length^2. Contact and stop constants scale with the static force
    and torque scales so penetration depths and stop excursions stay
    proportionate.
    """
    human = human_biped()
    ms = total_mass / human.total_mass()
    ls = leg_length / human.leg_length
    is_ = ms * ls * ls

    def seg(s: SegmentParams) -> SegmentParams:
        return SegmentParams(s.mass * ms, s.length * ls, s.com_offset * ls, s.inertia * is_)

    force_scale = ms          # same g, penetration scales with ls via k scale ms/ls
    torque_scale = ms * ls
    contact = ContactParams(
        k_normal=human.contact.k_normal * force_scale / ls,
        d_normal=human.contact.d_normal,
        k_tangent=human.contact.k_tangent * force_scale / ls,
        c_tangent=human.contact.c_tangent * force_scale,
        mu=human.contact.mu,
        anchor_rate=human.contact.anchor_rate,
    )
    stops = {
        name: StopLimits(lim.lower, lim.upper, lim.stiffness * torque_scale,
                         lim.damping * torque_scale)
        for name, lim in human.stops.items()
    }
    term = replace(human.termination, com_height_min=human.termination.com_height_min * ls)
    p = BipedParams(
        hat=seg(human.hat),
        thigh=seg(human.thigh),
        shank=seg(human.shank),
        foot=seg(human.foot),
        hip_below_hat_com=human.hip_below_hat_com * ls,
        ankle_to_heel=human.ankle_to_heel * ls,
        ankle_to_ball=human.ankle_to_ball * ls,
        ankle_to_foot_com=human.ankle_to_foot_com * ls,
        contact=contact,
        stops=stops,
        termination=term,
        leg_length=leg_length,
    )
    p.validate(expected_mass=total_mass)
    return p


# --- muscles ---------------------------------------------------------------

MUSCLES = ("GLU", "HAM", "GAS", "SOL", "TA", "VAS", "HFL")
JOINTS = ("hip", "knee", "ankle")


@dataclass(frozen=True)
class MuscleParams:
    """Hill-type MTU constants."""

    f_max: float     # N
    l_opt: float     # m, optimal contractile element length
    l_slack: float   # m, series elastic slack length
    v_max: float     # l_opt / s
    tau_act: float = 0.01  # s, activation time constant

    def validate(self) -> None:
        if min(self.f_max, self.l_opt, self.l_slack, self.v_max, self.tau_act) <= 0:
            raise ValueError("muscle parameters must be positive")


@dataclass(frozen=True)
class MomentArmParams:
    """Cosine moment arm model r(phi) = r0 cos(phi - phi_max).

    sign is +1 when the MTU lengthens with increasing joint angle and -1
    otherwise, so d(l_mtu)/d(phi) = sign * r(phi) holds by construction.
    phi_ref is the joint angle at which this attachment contributes zero
    length offset.
    """

    r0: float        # m
    phi_max: float   # rad
    phi_ref: float   # rad
    sign: int        # +1 lengthens with increasing angle, -1 shortens

    def validate(self) -> None:
        if self.r0 <= 0:
            raise ValueError("moment arm r0 must be positive")
        if self.sign not in (-1, 1):
            raise ValueError("moment arm sign must be +1 or -1")


@dataclass(frozen=True)
class HillCurves:
    """Shape constants of the force-length / force-velocity / tendon curves."""

    fl_width: float = 0.56       # force-length bell width
    fl_floor_log: float = math.log(10.0)  # exp(-((l-1)/w)^2 * this) = 0.1 at l = 1 +- w
    fv_curvature: float = 5.0    # Hill hyperbola curvature K
    fv_ecc_plateau: float = 1.5  # eccentric force plateau N (x F_max)
    fv_ecc_shape: float = 37.8   # eccentric curve shape (7.56 * K)
    se_strain_ref: float = 0.04  # tendon strain at F_max
    pe_width: float = 0.56       # parallel elasticity reference strain past l_opt
    be_width: float = 0.10       # compression buffer reference strain below (1 - fl_width)


def default_muscles() -> dict[str, MuscleParams]:
    return {
        "GLU": MuscleParams(1500.0, 0.11, 0.13, 12.0),
        "HAM": MuscleParams(3000.0, 0.10, 0.31, 12.0),
        "GAS": MuscleParams(1500.0, 0.05, 0.40, 12.0),
        "SOL": MuscleParams(4000.0, 0.04, 0.26, 6.0),
        "TA": MuscleParams(800.0, 0.06, 0.24, 12.0),
        "VAS": MuscleParams(6000.0, 0.08, 0.23, 12.0),
        "HFL": MuscleParams(2000.0, 0.11, 0.10, 12.0),
    }


def default_moment_arms() -> dict[str, dict[str, MomentArmParams]]:
    """Attachment map muscle -> joint -> moment arm parameters."""
    return {
        "GLU": {"hip": MomentArmParams(0.10, 170 * DEG, 150 * DEG, -1)},
        "HFL": {"hip": MomentArmParams(0.10, 170 * DEG, 180 * DEG, +1)},
        "HAM": {
            "hip": MomentArmParams(0.08, 170 * DEG, 155 * DEG, -1),
            "knee": MomentArmParams(0.05, 180 * DEG, 180 * DEG, +1),
        },
        "VAS": {"knee": MomentArmParams(0.06, 165 * DEG, 125 * DEG, -1)},
        "GAS": {
            "knee": MomentArmParams(0.05, 140 * DEG, 165 * DEG, +1),
            "ankle": MomentArmParams(0.05, 110 * DEG, 80 * DEG, -1),
        },
        "SOL": {"ankle": MomentArmParams(0.05, 110 * DEG, 80 * DEG, -1)},
        "TA": {"ankle": MomentArmParams(0.04, 80 * DEG, 110 * DEG, +1)},
    }


def scaled_moment_arms(length_scale: float) -> dict[str, dict[str, MomentArmParams]]:
    return {
        m: {j: replace(a, r0=a.r0 * length_scale) for j, a in js.items()}
        for m, js in default_moment_arms().items()
    }


# --- reflex control ---------------------------------------------------------

@dataclass(frozen=True)
class ReflexGains:
    """The ten tunable reflex gains (optimizer search space).

    Force feedback gains act on muscle force normalized to the muscle's
    F_max; length feedback gains act on contractile element length
    normalized to l_opt; k_phi acts on trunk pitch error in radians.
    """

    k_phi: float = 4.25
    g_hamhfl: float = 3.0
    g_gas: float = 1.10
    g_ta: float = 1.10
    g_vas: float = 1.15
    g_solta: float = 0.3
    g_sol: float = 1.2
    g_hfl: float = 0.35
    g_ham: float = 0.65
    g_glu: float = 0.4

    ORDER = ("k_phi", "g_hamhfl", "g_gas", "g_ta", "g_vas",
             "g_solta", "g_sol", "g_hfl", "g_ham", "g_glu")

    def as_vector(self) -> list[float]:
        return [getattr(self, k) for k in self.ORDER]

    @classmethod
    def from_vector(cls, v) -> "ReflexGains":
        return cls(**dict(zip(cls.ORDER, (float(x) for x in v))))


@dataclass(frozen=True)
class ReflexConstants:
    """Every reflex-law constant that is not one of the ten tuned gains."""

    # pre-stimulations
    s0: dict[str, float] = field(default_factory=lambda: {
        "GLU": 0.05, "HAM": 0.05, "GAS": 0.02, "SOL": 0.02,
        "TA": 0.01, "VAS": 0.08, "HFL": 0.05,
    })
    # length feedback offsets (l_ce / l_opt)
    l_off_ta: float = 0.71
    l_off_hfl: float = 0.65
    l_off_ham: float = 0.85
    # trunk balance
    theta_ref: float = 0.105      # rad forward lean reference
    k_d: float = 0.25             # derivative gain on trunk pitch rate
    load_gain: float = 2.0        # leg-load scaling of the balance pathway
    ham_balance_share: float = 1.0
    k_lean: float = 1.15          # swing hip boost per rad of lean at liftoff
    # stance knee overextension inhibition of VAS
    knee_off: float = 170.0 * DEG
    k_knee: float = 2.0           # 1/rad
    k_ds_vas: float = 2.0         # VAS suppression per unit contralateral load
    # neural latencies [s]
    latency_hip: float = 0.020
    latency_knee: float = 0.010
    latency_ankle: float = 0.005
    latency_phase: float = 0.005  # contact sensing for phase switching
    stim_floor: float = 0.01
    stim_ceil: float = 1.0
