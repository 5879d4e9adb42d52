"""Planar rigid-body dynamics of the seven-segment walker.

Generalized coordinates (9):

    q = [x, y, pitch, hip_l, knee_l, ankle_l, hip_r, knee_r, ankle_r]

where (x, y) is the trunk CoM, pitch the forward lean of the trunk and the
joint angles follow the conventions in :mod:`springgait.params`. Every
segment CoM and every contact point is expressed as the trunk CoM plus a
chain of fixed-length vectors at absolute angles that are affine in q, so
Jacobians and velocity-product accelerations have closed forms. The mass
matrix, bias forces and gravity are assembled from those Jacobians and the
equations of motion solved directly:

    M(q) qdd = Q_applied - c(q, qd) - g(q)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import BipedParams, ContactParams, StopLimits

NQ = 9
IX, IY, IPITCH = 0, 1, 2
# joint coordinate columns
JOINT_COLS = {"hip_l": 3, "knee_l": 4, "ankle_l": 5, "hip_r": 6, "knee_r": 7, "ankle_r": 8}
HALF_PI = 0.5 * math.pi
PI = math.pi

# absolute segment angle index
TRUNK, THIGH_L, SHANK_L, FOOT_L, THIGH_R, SHANK_R, FOOT_R = range(7)


class ConfigurationError(RuntimeError):
    """Raised when the mass matrix is singular (broken segment parameters)."""


@dataclass
class ContactPointState:
    pos: np.ndarray          # (2,)
    vel: np.ndarray          # (2,)
    force: np.ndarray        # (2,)
    penetration: float
    on_ground: bool


@dataclass
class ContactState:
    """Per-foot contact summary. grf is the summed heel + ball force."""

    heel: ContactPointState
    ball: ContactPointState

    @property
    def grf(self) -> np.ndarray:
        return self.heel.force + self.ball.force

    @property
    def any_contact(self) -> bool:
        return self.heel.on_ground or self.ball.on_ground


def _angle_rows() -> np.ndarray:
    """d(absolute segment angle)/dq for the 7 segments, shape (7, 9).

    Absolute angles measured CCW from the +x axis:
      trunk axis (hip -> head): pi/2 - pitch
      thigh (hip -> knee):      pi/2 - pitch - hip
      shank (knee -> ankle):    thigh + knee - pi
      foot (heel -> toe):       shank - ankle + pi
    """
    rows = np.zeros((7, NQ))
    rows[TRUNK, IPITCH] = -1.0
    for thigh, shank, foot, (h, k, a) in (
        (THIGH_L, SHANK_L, FOOT_L, (3, 4, 5)),
        (THIGH_R, SHANK_R, FOOT_R, (6, 7, 8)),
    ):
        rows[thigh, IPITCH] = -1.0
        rows[thigh, h] = -1.0
        rows[shank] = rows[thigh]
        rows[shank, k] = 1.0
        rows[foot] = rows[shank]
        rows[foot, a] = -1.0
    return rows


_ROWS = _angle_rows()


def _chain_offsets() -> np.ndarray:
    """Constant part of each segment angle so that psi = offsets + rows @ q."""
    off = np.zeros(7)
    off[TRUNK] = HALF_PI
    for thigh, shank, foot in ((THIGH_L, SHANK_L, FOOT_L), (THIGH_R, SHANK_R, FOOT_R)):
        off[thigh] = HALF_PI          # psi_thigh = pi/2 - pitch - hip
        off[shank] = HALF_PI - PI     # psi_shank = psi_thigh + knee - pi
        off[foot] = HALF_PI           # psi_foot = psi_shank - ankle + pi
    return off


_ANGLE_OFFSETS = _chain_offsets()


class PlanarBiped:
    """Dynamics, kinematics and contact of the planar walker."""

    def __init__(self, params: BipedParams):
        params.validate()
        self.params = params
        p = params
        self.masses = np.array([p.hat.mass, p.thigh.mass, p.shank.mass, p.foot.mass,
                                p.thigh.mass, p.shank.mass, p.foot.mass])
        self.inertias = np.array([p.hat.inertia, p.thigh.inertia, p.shank.inertia,
                                  p.foot.inertia, p.thigh.inertia, p.shank.inertia,
                                  p.foot.inertia])
        d_hip = p.hip_below_hat_com
        lt, ls = p.thigh.length, p.shank.length
        ct, cs = p.thigh.com_offset, p.shank.com_offset
        # chain terms (length, segment angle index) per tracked point
        self._body_terms = [
            [],                                                      # trunk CoM
            [(-d_hip, TRUNK), (ct, THIGH_L)],                        # thigh L CoM
            [(-d_hip, TRUNK), (lt, THIGH_L), (cs, SHANK_L)],         # shank L CoM
            [(-d_hip, TRUNK), (lt, THIGH_L), (ls, SHANK_L),
             (p.ankle_to_foot_com, FOOT_L)],                         # foot L CoM
            [(-d_hip, TRUNK), (ct, THIGH_R)],
            [(-d_hip, TRUNK), (lt, THIGH_R), (cs, SHANK_R)],
            [(-d_hip, TRUNK), (lt, THIGH_R), (ls, SHANK_R),
             (p.ankle_to_foot_com, FOOT_R)],
        ]
        leg_l = [(-d_hip, TRUNK), (lt, THIGH_L), (ls, SHANK_L)]
        leg_r = [(-d_hip, TRUNK), (lt, THIGH_R), (ls, SHANK_R)]
        self._contact_terms = [
            leg_l + [(-p.ankle_to_heel, FOOT_L)],   # heel L
            leg_l + [(p.ankle_to_ball, FOOT_L)],    # ball L
            leg_r + [(-p.ankle_to_heel, FOOT_R)],   # heel R
            leg_r + [(p.ankle_to_ball, FOOT_R)],    # ball R
        ]
        self._ankle_terms = [leg_l, leg_r]

    # --- kinematics --------------------------------------------------------

    def segment_angles(self, q: np.ndarray) -> np.ndarray:
        return _ANGLE_OFFSETS + _ROWS @ q

    def _point(self, q: np.ndarray, terms, cos_psi=None, sin_psi=None) -> np.ndarray:
        if cos_psi is None:
            psi = self.segment_angles(q)
            cos_psi, sin_psi = np.cos(psi), np.sin(psi)
        x, y = q[IX], q[IY]
        for L, i in terms:
            x += L * cos_psi[i]
            y += L * sin_psi[i]
        return np.array([x, y])

    def _point_full(self, q, qd, terms, cos_psi, sin_psi, psid):
        """Position, velocity, 2x9 Jacobian and velocity-product acceleration."""
        pos = np.array([q[IX], q[IY]])
        jac = np.zeros((2, NQ))
        jac[0, IX] = 1.0
        jac[1, IY] = 1.0
        bias = np.zeros(2)
        for L, i in terms:
            c, s = cos_psi[i], sin_psi[i]
            pos[0] += L * c
            pos[1] += L * s
            row = _ROWS[i]
            jac[0] += (-L * s) * row
            jac[1] += (L * c) * row
            w2 = psid[i] * psid[i]
            bias[0] -= L * c * w2
            bias[1] -= L * s * w2
        vel = jac @ qd
        return pos, vel, jac, bias

    def point_positions(self, q: np.ndarray) -> dict[str, np.ndarray]:
        psi = self.segment_angles(q)
        c, s = np.cos(psi), np.sin(psi)
        names = ["heel_l", "ball_l", "heel_r", "ball_r"]
        out = {n: self._point(q, t, c, s) for n, t in zip(names, self._contact_terms)}
        out["ankle_l"] = self._point(q, self._ankle_terms[0], c, s)
        out["ankle_r"] = self._point(q, self._ankle_terms[1], c, s)
        return out

    def com(self, q: np.ndarray) -> np.ndarray:
        psi = self.segment_angles(q)
        c, s = np.cos(psi), np.sin(psi)
        total = np.zeros(2)
        for m, terms in zip(self.masses, self._body_terms):
            total += m * self._point(q, terms, c, s)
        return total / self.masses.sum()

    def mechanical_energy(self, q: np.ndarray, qd: np.ndarray) -> float:
        psi = self.segment_angles(q)
        c, s = np.cos(psi), np.sin(psi)
        psid = _ROWS @ qd
        e = 0.0
        g = self.params.gravity
        for m, inertia, terms in zip(self.masses, self.inertias, self._body_terms):
            pos, vel, _, _ = self._point_full(q, qd, terms, c, s, psid)
            e += 0.5 * m * float(vel @ vel) + m * g * pos[1]
        e += 0.5 * float(self.inertias @ (psid * psid))
        return e

    # --- dynamics ----------------------------------------------------------

    def _assemble(self, q: np.ndarray, qd: np.ndarray):
        psi = self.segment_angles(q)
        c, s = np.cos(psi), np.sin(psi)
        psid = _ROWS @ qd
        M = np.zeros((NQ, NQ))
        bias = np.zeros(NQ)
        grav = np.zeros(NQ)
        g = self.params.gravity
        body_jacs = []
        for m, inertia, terms, row in zip(self.masses, self.inertias,
                                          self._body_terms, _ROWS):
            _, _, jac, b = self._point_full(q, qd, terms, c, s, psid)
            M += m * (jac.T @ jac)
            M += inertia * np.outer(row, row)
            bias += m * (jac.T @ b)
            grav += m * g * jac[1]
            body_jacs.append(jac)
        return M, bias, grav, c, s, psid

    def forward_dynamics(
        self,
        q: np.ndarray,
        qd: np.ndarray,
        joint_torques: np.ndarray,
        point_forces: dict[int, np.ndarray] | None = None,
        locked: np.ndarray | None = None,
    ) -> np.ndarray:
        """Accelerations for applied joint torques and contact point forces.

        joint_torques is a 6-vector ordered like the joint coordinates; a
        positive torque increases the joint angle. point_forces maps contact
        point index (0..3: heel_l, ball_l, heel_r, ball_r) to a 2D force.
        locked optionally marks coordinates whose acceleration is
        constrained to zero (their reaction is absorbed by the constraint).
        """
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))
                and np.all(np.isfinite(joint_torques))):
            raise ValueError("state and torques must be finite")
        M, bias, grav, c, s, psid = self._assemble(q, qd)
        rhs = -bias - grav
        rhs[3:9] += joint_torques
        if point_forces:
            for idx, f in point_forces.items():
                _, _, jac, _ = self._point_full(q, qd, self._contact_terms[idx], c, s, psid)
                rhs += jac.T @ f
        if locked is not None:
            free = ~np.asarray(locked, dtype=bool)
            qdd = np.zeros(NQ)
            try:
                qdd[free] = np.linalg.solve(M[np.ix_(free, free)], rhs[free])
            except np.linalg.LinAlgError as exc:
                raise ConfigurationError("singular mass matrix") from exc
            return qdd
        try:
            return np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise ConfigurationError("singular mass matrix") from exc

    def mass_matrix(self, q: np.ndarray) -> np.ndarray:
        M, _, _, _, _, _ = self._assemble(q, np.zeros(NQ))
        return M

    # --- contact -------------------------------------------------------------

    def contact_point_kinematics(self, q: np.ndarray, qd: np.ndarray):
        """Positions, velocities and Jacobians of the four contact points."""
        psi = self.segment_angles(q)
        c, s = np.cos(psi), np.sin(psi)
        psid = _ROWS @ qd
        return [self._point_full(q, qd, t, c, s, psid) for t in self._contact_terms]


def normal_contact_force(penetration: float, pen_rate: float, p: ContactParams) -> float:
    """Vertical contact force k * d * (1 + c * v_pen), clamped non-negative."""
    if penetration <= 0.0:
        return 0.0
    return max(0.0, p.k_normal * penetration * (1.0 + p.d_normal * pen_rate))


def tangent_contact_force(deflection: float, vel_x: float, f_normal: float,
                          p: ContactParams) -> float:
    """Anchored friction: spring-damper force saturated at the friction cone."""
    if f_normal <= 0.0:
        return 0.0
    raw = -p.k_tangent * deflection - p.c_tangent * vel_x
    limit = p.mu * f_normal
    return float(np.clip(raw, -limit, limit))


def anchor_rate(deflection: float, f_normal: float, p: ContactParams) -> float:
    """Anchor drift rate: zero while inside the friction cone, relaxes outside."""
    if f_normal <= 0.0:
        return p.anchor_rate * deflection
    s_lim = p.mu * f_normal / p.k_tangent
    excess = deflection - np.clip(deflection, -s_lim, s_lim)
    return p.anchor_rate * float(excess)


def joint_stop_torque(angle: float, velocity: float, limits: StopLimits) -> float:
    """Restoring torque outside the soft stop range, zero inside.

    Continuous at the boundary; damping only resists motion deeper into the
    stop so the torque never pulls the joint against its return direction.
    """
    if angle > limits.upper:
        exc = angle - limits.upper
        return -(limits.stiffness * exc + limits.damping * max(velocity, 0.0))
    if angle < limits.lower:
        exc = limits.lower - angle
        return limits.stiffness * exc + limits.damping * max(-velocity, 0.0)
    return 0.0
